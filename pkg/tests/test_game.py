"""Game validation, the external file format, and bilinear stage data."""

import json
from fractions import Fraction

import numpy as np
import pytest

from stochgames import StationaryProfile, induced_stage_data, load_game, save_game, validate_game
from stochgames.errors import (
    DimensionMismatch,
    GameFormatError,
    IndexOutOfRange,
    NegativeProbability,
    RowSumNotOne,
)


def one_state_raw():
    return {
        "states": ["s"],
        "actions1": ["a", "b"],
        "actions2": ["c"],
        "initial": "s",
        "payoff": [[[1], [2]]],
        "transition": [[[{"s": 1}], [{"s": 1}]]],
    }


def test_identity_transition_valid():
    game = validate_game(one_state_raw())
    assert game.n_states == 1
    assert game.transition[0][0][0] == (Fraction(1),)


def test_row_sum_not_one_reports_indices():
    raw = one_state_raw()
    raw["transition"][0][1][0] = {"s": 0.9}
    with pytest.raises(RowSumNotOne, match=r"\(s, b, c\)"):
        validate_game(raw)


def test_negative_probability_rejected():
    raw = one_state_raw()
    raw["transition"][0][0][0] = {"s": "3/2"}
    raw["transition"][0][1][0] = {"s": "-1/2"}
    with pytest.raises(RowSumNotOne):
        validate_game(raw)  # first row no longer sums to one
    raw["transition"][0][0][0] = {"s": 1}
    with pytest.raises(NegativeProbability):
        validate_game(raw)


def test_unknown_field_rejected():
    raw = one_state_raw()
    raw["bonus"] = 1
    with pytest.raises(GameFormatError, match="bonus"):
        validate_game(raw)


def test_unknown_state_reference_rejected():
    raw = one_state_raw()
    raw["transition"][0][0][0] = {"elsewhere": 1}
    with pytest.raises(IndexOutOfRange, match="elsewhere"):
        validate_game(raw)
    raw = one_state_raw()
    raw["initial"] = "nope"
    with pytest.raises(IndexOutOfRange):
        validate_game(raw)


def test_per_state_action_sets_rejected():
    raw = {
        "states": ["s", "t"],
        "actions1": ["a", "b"],
        "actions2": ["c"],
        "initial": "s",
        "payoff": [[[1], [2]], [[1]]],  # state t has only one P1 row
        "transition": [
            [[{"s": 1}], [{"s": 1}]],
            [[{"t": 1}]],
        ],
    }
    with pytest.raises(GameFormatError, match="per-state action sets"):
        validate_game(raw)


def test_big_match_builtin_valid(big_match):
    assert big_match.n_states == 3
    assert big_match.n_actions_p1 == big_match.n_actions_p2 == 2
    assert big_match.initial_state == 0
    # transition rows exactly stochastic
    for k in range(3):
        for i in range(2):
            for j in range(2):
                assert sum(big_match.transition[k][i][j]) == 1


def test_round_trip_through_file(tmp_path, big_match, absorbing3, two_state):
    for game in (big_match, absorbing3, two_state):
        path = tmp_path / f"{game.name}.json"
        save_game(game, path)
        again = load_game(path)
        assert again == game


def test_fraction_literals_parse_exactly(tmp_path):
    raw = one_state_raw()
    raw["payoff"] = [[["1/3"], [0.3]]]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(raw))
    game = load_game(path)
    assert game.payoff[0][0][0] == Fraction(1, 3)
    assert game.payoff[0][1][0] == Fraction(3, 10)


def test_profile_row_validation():
    with pytest.raises(DimensionMismatch):
        StationaryProfile(np.array([[0.5, 0.6]]), np.array([[1.0]]))
    with pytest.raises(DimensionMismatch):
        StationaryProfile(np.array([[1.2, -0.2]]), np.array([[1.0]]))


def test_induced_stage_data_pure_one_state():
    game = validate_game(one_state_raw())
    prof = StationaryProfile(np.array([[0.0, 1.0]]), np.array([[1.0]]))
    Q, g = induced_stage_data(game, prof)
    assert Q[0, 0] == pytest.approx(1.0)
    assert g[0] == pytest.approx(2.0)


def test_induced_stage_data_big_match_hand_expansion(big_match):
    # bottom row only, columns mixed half-half: live state stays put, payoff 1/2
    x = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    y = np.array([[0.5, 0.5], [1.0, 0.0], [1.0, 0.0]])
    Q, g = induced_stage_data(big_match, StationaryProfile(x, y))
    assert Q[0] == pytest.approx(np.array([1.0, 0.0, 0.0]))
    assert g[0] == pytest.approx(0.5)


def test_induced_stage_data_matches_brute_force(two_state):
    rng = np.random.RandomState(3)
    x = rng.dirichlet([1, 1], size=2)
    y = rng.dirichlet([1, 1], size=2)
    prof = StationaryProfile(x, y)
    Q, g = induced_stage_data(two_state, prof)
    n, n1, n2 = 2, 2, 2
    for k in range(n):
        pay = 0.0
        row = np.zeros(n)
        for i in range(n1):
            for j in range(n2):
                w = x[k, i] * y[k, j]
                pay += w * float(two_state.payoff[k][i][j])
                for l in range(n):
                    row[l] += w * float(two_state.transition[k][i][j][l])
        assert g[k] == pytest.approx(pay)
        assert Q[k] == pytest.approx(row)
    assert Q.sum(axis=1) == pytest.approx(np.ones(n), abs=1e-12)


def test_dimension_mismatch_reported(big_match):
    prof = StationaryProfile(np.array([[1.0]]), np.array([[1.0]]))
    with pytest.raises(DimensionMismatch):
        induced_stage_data(big_match, prof)
