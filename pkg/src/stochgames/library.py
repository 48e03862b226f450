"""Builtin games, one per structural branch of the theory.

* ``big_match``  -- the classic absorbing game: the row player's top action
  absorbs (favorably against left, fatally against right); optimal play
  mixes it with probability lam/(1+lam).
* ``const5``     -- one state, one action pair, constant payoff 5.
* ``absorbing3`` -- an absorbing game where *both* players carry an
  exit action at order lam; by symmetry of its auxiliary game the value
  is 1/2 and both exit coefficients equal (sqrt(5)-1)/2.
* ``two_state``  -- two mutually communicating states; the no-return
  hypotheses hold vacuously.
* ``cycle3``     -- a three-state fixture violating the first no-return
  hypothesis via a 1 -> 2 -> 1 loop plus a 1 -> 3 branch.
* ``critical2``  -- two states, constant payoff 1/2, with a move action
  each way.  Every strategy is optimal; the canonical stage strategies
  shipped with it move at rates lam and 2 lam, a genuinely recurrent
  critical kernel with rate matrix [[-1, 1], [2, -2]].
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .game import GameSpec, validate_game
from .puiseux import PuiseuxExpansion
from .structure import GeneratorMatrix


def _own(dest: str) -> dict:
    return {dest: 1}


def big_match() -> GameSpec:
    raw = {
        "states": ["live", "won", "lost"],
        "actions1": ["top", "bottom"],
        "actions2": ["left", "right"],
        "initial": "live",
        "payoff": [
            [[1, 0], [0, 1]],
            [[1, 1], [1, 1]],
            [[0, 0], [0, 0]],
        ],
        "transition": [
            [[_own("won"), _own("lost")], [_own("live"), _own("live")]],
            [[_own("won"), _own("won")], [_own("won"), _own("won")]],
            [[_own("lost"), _own("lost")], [_own("lost"), _own("lost")]],
        ],
    }
    return validate_game(raw, name="big_match")


def const5() -> GameSpec:
    raw = {
        "states": ["only"],
        "actions1": ["a"],
        "actions2": ["b"],
        "initial": "only",
        "payoff": [[[5]]],
        "transition": [[[_own("only")]]],
    }
    return validate_game(raw, name="const5")


def absorbing3() -> GameSpec:
    raw = {
        "states": ["live", "hi", "half"],
        "actions1": ["top", "bottom"],
        "actions2": ["left", "right"],
        "initial": "live",
        "payoff": [
            [[1, 0], [0, "1/2"]],
            [[1, 1], [1, 1]],
            [["1/2", "1/2"], ["1/2", "1/2"]],
        ],
        "transition": [
            [[_own("hi"), _own("half")], [_own("half"), _own("live")]],
            [[_own("hi"), _own("hi")], [_own("hi"), _own("hi")]],
            [[_own("half"), _own("half")], [_own("half"), _own("half")]],
        ],
    }
    return validate_game(raw, name="absorbing3")


def two_state() -> GameSpec:
    raw = {
        "states": ["s1", "s2"],
        "actions1": ["a", "b"],
        "actions2": ["c", "d"],
        "initial": "s1",
        "payoff": [
            [[3, 0], [1, 2]],
            [[2, 1], [0, 3]],
        ],
        "transition": [
            [[_own("s1"), _own("s2")], [_own("s2"), _own("s1")]],
            [[_own("s1"), _own("s2")], [_own("s2"), _own("s1")]],
        ],
    }
    return validate_game(raw, name="two_state")


def cycle3() -> GameSpec:
    raw = {
        "states": ["s1", "s2", "s3"],
        "actions1": ["a", "b"],
        "actions2": ["c"],
        "initial": "s1",
        "payoff": [
            [[1], [0]],
            [[0], [0]],
            [[2], [2]],
        ],
        "transition": [
            [[_own("s2")], [_own("s3")]],
            [[_own("s1")], [_own("s1")]],
            [[_own("s3")], [_own("s3")]],
        ],
    }
    return validate_game(raw, name="cycle3")


def critical2() -> GameSpec:
    raw = {
        "states": ["one", "two"],
        "actions1": ["stay", "move"],
        "actions2": ["only"],
        "initial": "one",
        "payoff": [
            [["1/2"], ["1/2"]],
            [["1/2"], ["1/2"]],
        ],
        "transition": [
            [[_own("one")], [_own("two")]],
            [[_own("two")], [_own("one")]],
        ],
    }
    return validate_game(raw, name="critical2")


def critical2_canonical() -> tuple[PuiseuxExpansion, GeneratorMatrix]:
    """The canonical optimal stage strategies for ``critical2`` and their rates.

    Payoffs are constant, so any strategy is optimal; this family moves
    1 -> 2 at rate lam and 2 -> 1 at rate 2 lam.  (The LP-fitted branch is
    the pure stay profile with zero rates; both are valid expansions.)
    """
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[1.0, 1.0], [1.0, 2.0]]),
        expo_p1=((Fraction(0), Fraction(1)), (Fraction(0), Fraction(1))),
        coeff_p2=np.array([[1.0], [1.0]]),
        expo_p2=((Fraction(0),), (Fraction(0),)),
    )
    A = GeneratorMatrix(np.array([[-1.0, 1.0], [2.0, -2.0]]))
    return exp, A


BUILTINS = {
    "big_match": big_match,
    "const5": const5,
    "absorbing3": absorbing3,
    "two_state": two_state,
    "cycle3": cycle3,
    "critical2": critical2,
}


def get(name: str) -> GameSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"no builtin game named {name!r}; have {sorted(BUILTINS)}") from None
