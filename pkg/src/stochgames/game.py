"""Core domain types: finite zero-sum stochastic games and stationary play.

A game is a tuple of finite state and action sets, a stage payoff tensor,
an exact (rational) transition kernel, and an initial state.  Payoffs and
transition probabilities are stored as `fractions.Fraction`, so structural
checks ("is this probability positive", "does this row sum to one") are
exact; float views are cached for numerical work.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    GameFormatError,
    IndexOutOfRange,
    NegativeProbability,
    RowSumNotOne,
)

GAME_FIELDS = ("states", "actions1", "actions2", "initial", "payoff", "transition")


def as_fraction(value) -> Fraction:
    """Convert an int, float, Fraction or "p/q" string to an exact Fraction.

    Floats are read through their shortest decimal repr, so a literal 0.3
    in a game file means 3/10, not the binary double closest to it.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise GameFormatError(f"boolean {value!r} is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise GameFormatError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise GameFormatError(f"cannot parse rational literal {value!r}") from exc
    raise GameFormatError(f"cannot interpret {value!r} as a rational number")


@dataclass(frozen=True, eq=True)
class GameSpec:
    """Validated finite zero-sum stochastic game.

    Action sets are common to all states.  ``payoff[k][i][j]`` is the stage
    reward paid by Player 2 to Player 1; ``transition[k][i][j]`` is a
    probability vector over next states.  Both are nested tuples of
    Fractions; use :attr:`payoff_array` / :attr:`transition_array` for the
    float views.
    """

    name: str
    state_names: tuple[str, ...]
    action_names_p1: tuple[str, ...]
    action_names_p2: tuple[str, ...]
    payoff: tuple
    transition: tuple
    initial_state: int

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_actions_p1(self) -> int:
        return len(self.action_names_p1)

    @property
    def n_actions_p2(self) -> int:
        return len(self.action_names_p2)

    @cached_property
    def payoff_array(self) -> np.ndarray:
        """Float payoff tensor of shape (n_states, n1, n2)."""
        arr = np.array([[[float(g) for g in row] for row in state] for state in self.payoff])
        arr.setflags(write=False)
        return arr

    @cached_property
    def transition_array(self) -> np.ndarray:
        """Float transition tensor of shape (n_states, n1, n2, n_states)."""
        arr = np.array(
            [[[[float(p) for p in cell] for cell in row] for row in state] for state in self.transition]
        )
        arr.setflags(write=False)
        return arr

    @cached_property
    def max_abs_payoff(self) -> float:
        return float(np.abs(self.payoff_array).max())

    def state_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise IndexOutOfRange(f"unknown state {name!r}") from None

    def to_dict(self) -> dict:
        """External file-format dictionary (round-trips through validate_game)."""
        trans = []
        for k in range(self.n_states):
            rows = []
            for i in range(self.n_actions_p1):
                cells = []
                for j in range(self.n_actions_p2):
                    cell = {
                        self.state_names[l]: str(p)
                        for l, p in enumerate(self.transition[k][i][j])
                        if p != 0
                    }
                    cells.append(cell)
                rows.append(cells)
            trans.append(rows)
        return {
            "states": list(self.state_names),
            "actions1": list(self.action_names_p1),
            "actions2": list(self.action_names_p2),
            "initial": self.state_names[self.initial_state],
            "payoff": [[[str(g) for g in row] for row in state] for state in self.payoff],
            "transition": trans,
        }


def validate_game(raw: dict, name: str = "game") -> GameSpec:
    """Build a GameSpec from the external dictionary form, checking every invariant.

    Raises GameFormatError subclasses with the offending (state, i, j)
    spelled out.  Transition rows must sum to one exactly (rational
    arithmetic, no tolerance).
    """
    if not isinstance(raw, dict):
        raise GameFormatError("game description must be a mapping")
    unknown = set(raw) - set(GAME_FIELDS)
    if unknown:
        raise GameFormatError(f"unknown field(s) {sorted(unknown)}; expected {list(GAME_FIELDS)}")
    missing = set(GAME_FIELDS) - set(raw)
    if missing:
        raise GameFormatError(f"missing field(s) {sorted(missing)}")

    states = tuple(str(s) for s in raw["states"])
    acts1 = tuple(str(a) for a in raw["actions1"])
    acts2 = tuple(str(a) for a in raw["actions2"])
    if not states or not acts1 or not acts2:
        raise GameFormatError("states, actions1 and actions2 must be nonempty")
    if len(set(states)) != len(states):
        raise GameFormatError("duplicate state names")
    n, n1, n2 = len(states), len(acts1), len(acts2)
    index = {s: l for l, s in enumerate(states)}

    if raw["initial"] not in index:
        raise IndexOutOfRange(f"initial state {raw['initial']!r} is not a declared state")
    initial = index[raw["initial"]]

    payoff_raw = raw["payoff"]
    trans_raw = raw["transition"]
    if len(payoff_raw) != n or len(trans_raw) != n:
        raise GameFormatError("payoff and transition must have one entry per state")

    payoff = []
    transition = []
    for k, sname in enumerate(states):
        if len(payoff_raw[k]) != n1 or len(trans_raw[k]) != n1:
            raise GameFormatError(
                f"state {sname!r}: expected {n1} Player-1 action rows "
                "(per-state action sets are not supported; action sets are common to all states)"
            )
        prows, trows = [], []
        for i in range(n1):
            if len(payoff_raw[k][i]) != n2 or len(trans_raw[k][i]) != n2:
                raise GameFormatError(
                    f"state {sname!r}, action {acts1[i]!r}: expected {n2} Player-2 entries "
                    "(per-state action sets are not supported)"
                )
            pcells, tcells = [], []
            for j in range(n2):
                pcells.append(as_fraction(payoff_raw[k][i][j]))
                cell = trans_raw[k][i][j]
                if not isinstance(cell, dict):
                    raise GameFormatError(
                        f"transition[{sname}][{acts1[i]}][{acts2[j]}] must map state names to probabilities"
                    )
                probs = [Fraction(0)] * n
                for dest, p in cell.items():
                    if dest not in index:
                        raise IndexOutOfRange(
                            f"transition[{sname}][{acts1[i]}][{acts2[j]}] targets unknown state {dest!r}"
                        )
                    probs[index[dest]] = as_fraction(p)
                for l, p in enumerate(probs):
                    if p < 0:
                        raise NegativeProbability(
                            f"q({states[l]} | {sname}, {acts1[i]}, {acts2[j]}) = {p} < 0"
                        )
                total = sum(probs)
                if total != 1:
                    raise RowSumNotOne(
                        f"transition row ({sname}, {acts1[i]}, {acts2[j]}) sums to {total}, not 1"
                    )
                tcells.append(tuple(probs))
            prows.append(tuple(pcells))
            trows.append(tuple(tcells))
        payoff.append(tuple(prows))
        transition.append(tuple(trows))

    return GameSpec(
        name=name,
        state_names=states,
        action_names_p1=acts1,
        action_names_p2=acts2,
        payoff=tuple(payoff),
        transition=tuple(transition),
        initial_state=initial,
    )


def load_game(path) -> GameSpec:
    """Parse a game file (JSON in the external format)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{path}: not valid JSON ({exc})") from exc
    return validate_game(raw, name=path.stem)


def save_game(game: GameSpec, path) -> None:
    Path(path).write_text(json.dumps(game.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class StationaryProfile:
    """A stationary strategy pair: per-state mixed actions for both players.

    ``x`` has shape (n_states, n1) and ``y`` shape (n_states, n2); each row
    is a probability vector.
    """

    x: np.ndarray
    y: np.ndarray

    ROW_TOL = 1e-12

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        for label, arr in (("x", x), ("y", y)):
            if arr.ndim != 2:
                raise DimensionMismatch(f"{label} must be 2-d (states x actions)")
            if (arr < -self.ROW_TOL).any():
                raise DimensionMismatch(f"{label} has negative entries")
            if np.abs(arr.sum(axis=1) - 1.0).max() > self.ROW_TOL:
                raise DimensionMismatch(f"{label} rows must sum to 1 within {self.ROW_TOL}")

    def check_dims(self, game: GameSpec) -> None:
        if self.x.shape != (game.n_states, game.n_actions_p1) or self.y.shape != (
            game.n_states,
            game.n_actions_p2,
        ):
            raise DimensionMismatch(
                f"profile shape {self.x.shape}/{self.y.shape} does not match game "
                f"({game.n_states} states, {game.n_actions_p1}x{game.n_actions_p2} actions)"
            )


def induced_stage_data(game: GameSpec, profile: StationaryProfile):
    """Bilinear extension of payoff and kernel under a stationary profile.

    Returns (Q, g) with Q[l, l'] = sum_ij x^l_i y^l_j q(l'|l,i,j) and
    g[l] = sum_ij x^l_i y^l_j payoff(l,i,j).
    """
    profile.check_dims(game)
    Q = np.einsum("ki,kj,kijl->kl", profile.x, profile.y, game.transition_array, optimize=True)
    g = np.einsum("ki,kj,kij->k", profile.x, profile.y, game.payoff_array, optimize=True)
    return Q, g


class MarkovStrategyPair:
    """A stage-indexed strategy pair driven by the effective discount.

    Wraps a map ``lam -> StationaryProfile`` (a Puiseux leading-term
    evaluation, or a fresh discounted solve).  At stage m of an evaluation
    theta, both players play the profile at lam = effective_discount(theta, m).
    """

    def __init__(self, profile_fn: Callable[[float], "StationaryProfile"], description: str,
                 grid_fn=None):
        self._profile_fn = profile_fn
        self._grid_fn = grid_fn
        self.description = description
        # (c1, e1, c2, e2) float arrays when the pair is a pure leading-term
        # evaluation; lets the trajectory engine run its fused kernel
        self.leading_terms = None

    def profile_at(self, lam: float) -> StationaryProfile:
        return self._profile_fn(lam)

    def profile_grid(self, lams: np.ndarray):
        """Vectorized profiles: arrays X (B, n, n1) and Y (B, n, n2)."""
        if self._grid_fn is not None:
            return self._grid_fn(np.asarray(lams, dtype=float))
        xs, ys = [], []
        cache: dict[float, StationaryProfile] = {}
        for lam in np.asarray(lams, dtype=float):
            key = float(lam)
            prof = cache.get(key)
            if prof is None:
                prof = self._profile_fn(key)
                cache[key] = prof
            xs.append(prof.x)
            ys.append(prof.y)
        return np.stack(xs), np.stack(ys)

    def at_stage(self, theta, m: int) -> StationaryProfile:
        return self.profile_at(theta.effective_discount(m))

    def __repr__(self):
        return f"MarkovStrategyPair({self.description})"
