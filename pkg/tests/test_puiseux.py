"""Expansion fitting, action classification, exit-rate decomposition."""

from fractions import Fraction

import numpy as np
import pytest

from stochgames import (
    PuiseuxExpansion,
    StationaryProfile,
    classify_actions,
    exit_rates,
    fit_expansion,
    limit_flow_payoffs,
)
from stochgames.errors import LadderTooShort, NotAbsorbing, UnstableExponent
from stochgames.game import validate_game

LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def synthetic_ladder(fn, lams=LADDER):
    """One-state profiles with P1 probe action probability fn(lam)."""
    out = []
    for lam in lams:
        p = fn(lam)
        out.append((lam, StationaryProfile(np.array([[p, 1 - p]]), np.array([[1.0]]))))
    return out


def test_fit_synthetic_half_exponent():
    exp = fit_expansion(synthetic_ladder(lambda lam: 2 * lam**0.5))
    assert exp.expo_p1[0][0] == Fraction(1, 2)
    assert exp.coeff_p1[0][0] == pytest.approx(2.0, abs=1e-9)


def test_fit_constant_probability():
    exp = fit_expansion(synthetic_ladder(lambda lam: 0.3))
    assert exp.expo_p1[0][0] == Fraction(0)
    assert exp.coeff_p1[0][0] == pytest.approx(0.3, abs=1e-12)
    assert exp.fit_residual <= 1e-12


def test_fit_big_match_ladder(cache):
    exp = cache.expansion("big_match")
    assert exp.expo_p1[0] == (Fraction(1), Fraction(0))
    assert exp.coeff_p1[0][0] == pytest.approx(1.0, abs=1e-3)
    assert exp.expo_p2[0] == (Fraction(0), Fraction(0))
    assert exp.coeff_p2[0] == pytest.approx([0.5, 0.5], abs=1e-9)


def test_round_trip_on_coefficient_exponent_grid():
    for c in (0.1, 0.4, 0.7, 1.0):
        for e in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2)):
            exp = fit_expansion(synthetic_ladder(lambda lam: min(1.0, c * lam ** float(e))))
            assert exp.expo_p1[0][0] == e, (c, e)
            assert exp.coeff_p1[0][0] == pytest.approx(c, rel=1e-6), (c, e)


def test_ladder_too_short():
    with pytest.raises(LadderTooShort):
        fit_expansion(synthetic_ladder(lambda lam: lam, lams=(1e-1, 1e-2, 1e-3)))


def test_ladder_spacing_enforced():
    with pytest.raises(ValueError):
        fit_expansion(synthetic_ladder(lambda lam: lam, lams=(1e-1, 5e-2, 1e-3, 1e-4)))


def test_unstable_exponent_detected():
    # slope jumps from 1 to 2 midway through the ladder
    def fn(lam):
        return lam if lam > 5e-4 else lam**2 * 1e3

    with pytest.raises(UnstableExponent):
        fit_expansion(synthetic_ladder(fn))


def test_zero_crossing_detected():
    def fn(lam):
        return 0.0 if lam < 5e-4 else lam

    with pytest.raises(UnstableExponent):
        fit_expansion(synthetic_ladder(fn))


def test_exact_zero_probabilities_give_null_term():
    exp = fit_expansion(synthetic_ladder(lambda lam: 0.0))
    assert exp.coeff_p1[0][0] == 0.0
    assert exp.expo_p1[0][0] == Fraction(0)


def test_expansion_invariant_c_zero_forces_e_zero():
    with pytest.raises(ValueError, match="c = 0"):
        PuiseuxExpansion(
            coeff_p1=np.array([[0.0, 1.0]]),
            expo_p1=((Fraction(1), Fraction(0)),),
            coeff_p2=np.array([[1.0]]),
            expo_p2=((Fraction(0),),),
        )


def test_classify_big_match(cache):
    cls = classify_actions(cache.expansion("big_match"))
    live = cls.p1[0]
    assert live["one"] == (0,)  # the absorbing action
    assert live["zero"] == (1,)
    assert cls.p2[0]["zero"] == (0, 1)


def test_classify_all_exponent_zero():
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[0.5, 0.5]]),
        expo_p1=((Fraction(0), Fraction(0)),),
        coeff_p2=np.array([[1.0]]),
        expo_p2=((Fraction(0),),),
    )
    cls = classify_actions(exp)
    assert cls.p1[0]["zero"] == (0, 1)
    assert cls.p1[0]["one"] == ()


def test_classify_one_action_per_class_and_partition():
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[1.0, 0.5, 0.5, 0.5]]),
        expo_p1=((Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2)),),
        coeff_p2=np.array([[1.0]]),
        expo_p2=((Fraction(0),),),
    )
    cls = classify_actions(exp)
    assert cls.p1[0] == {"zero": (0,), "star": (1,), "one": (2,), "plus": (3,)}
    assert cls.partition_ok(4, 1)


def test_classify_zero_coefficient_goes_to_plus():
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[1.0, 0.0]]),
        expo_p1=((Fraction(0), Fraction(0)),),
        coeff_p2=np.array([[1.0]]),
        expo_p2=((Fraction(0),),),
    )
    assert classify_actions(exp).p1[0]["plus"] == (1,)


def test_classification_partitions_random_expansions():
    rng = np.random.RandomState(21)
    exps = [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2)]
    for _ in range(50):
        n_act = rng.randint(2, 5)
        coeff = np.zeros((1, n_act))
        expo = [Fraction(0)] * n_act
        coeff[0, 0] = 1.0  # limit strategy mass
        for i in range(1, n_act):
            if rng.rand() < 0.3:
                continue  # null term
            expo[i] = exps[rng.randint(1, len(exps))]
            coeff[0, i] = rng.uniform(0.1, 2.0)
        exp = PuiseuxExpansion(coeff, (tuple(expo),), np.array([[1.0]]), ((Fraction(0),),))
        assert classify_actions(exp).partition_ok(n_act, 1)


def test_exit_rates_big_match(big_match, cache):
    rates = exit_rates(big_match, cache.expansion("big_match"))
    assert rates.live == 0
    assert rates.exit == pytest.approx([0.0, 0.5, 0.5], abs=2e-3)
    assert rates.total == pytest.approx(1.0, abs=2e-3)
    # all mass through the (exponent-1 row, exponent-0 column) block
    assert rates.a10 == pytest.approx(rates.exit, abs=1e-12)
    assert rates.a01 == pytest.approx([0.0, 0.0, 0.0])
    assert rates.astar == pytest.approx([0.0, 0.0, 0.0])
    assert rates.g0 == pytest.approx(0.5, abs=1e-9)
    # row-sum identity
    row = rates.row()
    assert row.sum() == pytest.approx(0.0, abs=1e-12)
    assert row[rates.live] == pytest.approx(-rates.total)


def test_exit_rates_no_positive_exponent_pairs(big_match):
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[0.0, 1.0]] * 3),
        expo_p1=tuple(((Fraction(0), Fraction(0)),) * 3),
        coeff_p2=np.array([[0.5, 0.5]] * 3),
        expo_p2=tuple(((Fraction(0), Fraction(0)),) * 3),
    )
    rates = exit_rates(big_match, exp)
    assert rates.total == 0.0


def symmetric_exit_game():
    own = lambda s: {s: 1}
    return validate_game(
        {
            "states": ["live", "z1", "z0"],
            "actions1": ["T", "B"],
            "actions2": ["L", "R"],
            "initial": "live",
            "payoff": [[[0, 0], ["1/3", 0]], [[1, 1], [1, 1]], [[0, 0], [0, 0]]],
            "transition": [
                [[own("z1"), own("live")], [own("live"), own("z0")]],
                [[own("z1"), own("z1")], [own("z1"), own("z1")]],
                [[own("z0"), own("z0")], [own("z0"), own("z0")]],
            ],
        },
        name="symmetric_exit",
    )


def test_exit_rates_symmetric_split():
    # P1 exits via (T, L) at rate 1/2, P2 exits via (B, R) at rate 1/2
    game = symmetric_exit_game()
    exp = PuiseuxExpansion(
        coeff_p1=np.array([[0.5, 1.0], [1.0, 0.0], [1.0, 0.0]]),
        expo_p1=((Fraction(1), Fraction(0)), (Fraction(0), Fraction(0)), (Fraction(0), Fraction(0))),
        coeff_p2=np.array([[1.0, 0.5], [1.0, 0.0], [1.0, 0.0]]),
        expo_p2=((Fraction(0), Fraction(1)), (Fraction(0), Fraction(0)), (Fraction(0), Fraction(0))),
    )
    rates = exit_rates(game, exp)
    # brute-force pair enumeration oracle
    expected = np.zeros(3)
    for i, (ci, ei) in enumerate(zip(exp.coeff_p1[0], exp.expo_p1[0])):
        for j, (cj, ej) in enumerate(zip(exp.coeff_p2[0], exp.expo_p2[0])):
            if ci > 0 and cj > 0 and ei + ej == 1:
                for l in (1, 2):
                    expected[l] += ci * cj * float(game.transition[0][i][j][l])
    assert rates.exit == pytest.approx(expected)
    assert rates.a10 == pytest.approx([0.0, 0.5, 0.0])
    assert rates.a01 == pytest.approx([0.0, 0.0, 0.5])
    assert rates.exit == pytest.approx(rates.a10 + rates.astar + rates.a01)
    assert rates.g0 == pytest.approx(1.0 / 3.0)


def test_exit_rates_requires_absorbing(two_state, cache):
    exp = cache.expansion("big_match")
    with pytest.raises(NotAbsorbing):
        exit_rates(two_state, exp)


def test_value_identity_on_fixtures(cache):
    for name in ("big_match", "absorbing3"):
        rates = exit_rates(cache.games[name], cache.expansion(name))
        values = cache.limit_value(name).values
        assert rates.value_identity_residual(values) <= 1e-3


def test_deviation_limits_bracket_value(cache):
    for name in ("big_match", "absorbing3"):
        rates = exit_rates(cache.games[name], cache.expansion(name))
        values = cache.limit_value(name).values
        v = values[rates.live]
        lower, upper = rates.deviation_limits(values)
        assert lower <= v + 1e-6
        assert upper is None or upper >= v - 1e-6


def test_limit_flow_payoffs_big_match(big_match, cache):
    g0 = limit_flow_payoffs(big_match, cache.expansion("big_match"))
    assert g0 == pytest.approx([0.5, 1.0, 0.0], abs=1e-9)


def test_leading_term_profiles_match_grid_path(cache):
    exp = cache.expansion("big_match")
    strat = exp.strategies()
    lams = np.array([1e-2, 1e-3, 5e-4])
    X, Y = strat.profile_grid(lams)
    for b, lam in enumerate(lams):
        prof = strat.profile_at(lam)
        assert X[b] == pytest.approx(prof.x, abs=1e-15)
        assert Y[b] == pytest.approx(prof.y, abs=1e-15)
        assert prof.x.sum(axis=1) == pytest.approx(np.ones(3))
