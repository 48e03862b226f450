"""Stage kernels, exact propagation, Monte Carlo, generator estimates, CSV."""

import io

import numpy as np
import pytest

import stochgames as sg
from stochgames import (
    Discounted,
    Uniform,
    empirical_generator,
    propagate_exact,
    read_curve_csv,
    simulate,
    stage_kernel,
    write_curve_csv,
)
from stochgames.errors import DegenerateWindow, WindowOutOfRange
from stochgames.library import critical2_canonical


def test_stage_kernel_discounted_constant(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    theta = Discounted(1e-3)
    Q1 = stage_kernel(big_match, strat, theta, 1)
    Q9 = stage_kernel(big_match, strat, theta, 9)
    assert np.array_equal(Q1, Q9)
    assert Q1.sum(axis=1) == pytest.approx(np.ones(3))


def test_stage_kernel_uniform_last_stage(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    T = 50
    QT = stage_kernel(big_match, strat, Uniform(T), T)
    # lambda_T = 1: the top action gets c*1 clipped then renormalized: 1/2
    prof = strat.profile_at(1.0)
    assert QT[0] == pytest.approx(
        prof.x[0, 0] * np.array([0.0, 0.5, 0.5]) + prof.x[0, 1] * np.array([1.0, 0.0, 0.0])
    )


def test_stage_kernel_first_stage_exit_probability(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    T = 10_000
    Q1 = stage_kernel(big_match, strat, Uniform(T), 1)
    assert Q1[0, 1] + Q1[0, 2] == pytest.approx(1.0 / T, abs=1e-6)


def test_stage_kernel_leading_vs_lp_spot_stages(big_match, cache):
    lead = cache.expansion("big_match").strategies()
    lp = sg.lp_strategy_pair(big_match)
    theta = Uniform(10_000)
    for m in (1, 10, 100, 1000, 5000):
        lam = theta.effective_discount(m)
        Ql = stage_kernel(big_match, lead, theta, m)
        Qe = stage_kernel(big_match, lp, theta, m)
        assert np.abs(Ql - Qe).max() <= 10 * lam**2 + 1e-3 * cache.expansion("big_match").fit_residual + 1e-9


def test_propagate_constant_game(const5):
    exp = sg.fit_expansion(
        [(lam, sg.StationaryProfile(np.array([[1.0]]), np.array([[1.0]])))
         for lam in (1e-1, 1e-2, 1e-3, 1e-4)]
    )
    theta = Uniform(100)
    curve = propagate_exact(const5, exp.strategies(), theta)
    # gamma(t) = 5 * partial_sum(clock(t))
    for ti, t in enumerate(curve.grid):
        expected = 5.0 * theta.partial_sum(theta.clock(t))
        assert curve.gamma[ti] == pytest.approx(expected, abs=1e-12)


def test_propagate_big_match_discounted(big_match, cache):
    curve = cache.curve("big_match", "discounted", 1e-3)
    assert curve.gamma[-1] == pytest.approx(0.5, abs=1e-3)


def test_propagate_big_match_uniform_constant_payoff(big_match, cache):
    curve = cache.curve("big_match", "uniform", 1e-4)
    assert np.abs(curve.gamma - 0.5 * curve.grid).max() <= 0.02


def test_propagate_marginals_are_distributions(big_match, cache):
    curve = cache.curve("big_match", "uniform", 1e-3)
    assert curve.marginal.min() >= -1e-12
    assert curve.marginal.sum(axis=1) == pytest.approx(np.ones(len(curve.grid)), abs=1e-9)
    # occupation mass equals the cumulated weight
    theta = sg.family_for_norm("uniform", 1e-3)
    for ti, t in enumerate(curve.grid):
        assert curve.occupation[ti].sum() == pytest.approx(
            theta.partial_sum(theta.clock(t)), abs=1e-9
        )


def test_gamma_at_origin_bounded_by_norm(big_match, cache):
    for family in ("discounted", "uniform", "power"):
        curve = cache.curve("big_match", family, 1e-3)
        theta = sg.family_for_norm(family, 1e-3)
        assert abs(curve.gamma[0]) <= theta.norm_inf() * big_match.max_abs_payoff + 1e-12


def test_propagate_lp_mode_matches_discounted_value(big_match):
    lam = 1e-2
    strat = sg.lp_strategy_pair(big_match)
    curve = propagate_exact(big_match, strat, Discounted(lam), grid=np.array([0.0, 1.0]))
    sol = sg.solve_discounted(big_match, lam)
    assert curve.gamma[-1] == pytest.approx(sol.values[0], abs=1e-8)


def test_mass_conservation_long_run(cache):
    # one million stages of the recurrent two-state kernel
    exp, _ = critical2_canonical()
    game = cache.games["critical2"]
    curve = propagate_exact(game, exp.strategies(), Uniform(10**6), grid=np.array([0.0, 1.0]))
    assert abs(curve.marginal[-1].sum() - 1.0) <= 1e-9
    assert abs(curve.occupation[-1].sum() - 1.0) <= 1e-9


def test_simulate_identity_kernel_paths_constant(const5):
    exp = sg.fit_expansion(
        [(lam, sg.StationaryProfile(np.array([[1.0]]), np.array([[1.0]])))
         for lam in (1e-1, 1e-2, 1e-3, 1e-4)]
    )
    batch = simulate(const5, exp.strategies(), Uniform(1000), n_runs=64, seed=5)
    assert (batch.states == 0).all()
    assert (batch.jump_counts == 0).all()


def test_simulate_reproducible(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    theta = Uniform(2000)
    grid = np.linspace(0, 1, 11)
    b1 = simulate(big_match, strat, theta, n_runs=500, seed=31, grid=grid)
    b2 = simulate(big_match, strat, theta, n_runs=500, seed=31, grid=grid)
    assert np.array_equal(b1.states, b2.states)
    assert np.array_equal(b1.jump_counts, b2.jump_counts)
    b3 = simulate(big_match, strat, theta, n_runs=500, seed=32, grid=grid)
    assert not np.array_equal(b1.states, b3.states)


def test_simulate_frequencies_match_exact_marginals(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    theta = Uniform(10_000)
    grid = np.linspace(0, 1, 11)
    n_runs = 20_000
    batch = simulate(big_match, strat, theta, n_runs=n_runs, seed=77, grid=grid)
    exact = propagate_exact(big_match, strat, theta, grid=grid)
    freq = batch.state_frequencies()
    sigma = np.sqrt(np.clip(exact.marginal * (1 - exact.marginal), 1e-12, None) / n_runs)
    z = np.abs(freq - exact.marginal) / np.maximum(sigma, 1e-9)
    # 33 correlated comparisons; allow a single 3-sigma excursion
    assert (z > 3.0).sum() <= 1


def test_simulate_jump_counts_vanish_with_window(cache):
    exp, _ = critical2_canonical()
    game = cache.games["critical2"]
    grid = np.array([0.0, 0.5, 0.525, 0.55, 0.6, 1.0])
    batch = simulate(game, exp.strategies(), Uniform(20_000), n_runs=20_000, seed=11, grid=grid)

    def p_two(lo, hi):
        return (batch.jump_counts[:, lo:hi].sum(axis=1) >= 2).mean()

    p_100 = p_two(1, 4)  # h = 0.1
    p_050 = p_two(1, 3)
    p_025 = p_two(1, 2)
    assert p_100 / 0.1 >= 2.0 * (p_025 / 0.025) * 0.5  # ratio shrinks as h shrinks
    assert p_025 <= p_050 <= p_100


def test_empirical_generator_zero_rates(const5):
    exp = sg.fit_expansion(
        [(lam, sg.StationaryProfile(np.array([[1.0]]), np.array([[1.0]])))
         for lam in (1e-1, 1e-2, 1e-3, 1e-4)]
    )
    est = empirical_generator(const5, exp.strategies(), Uniform(1000), 0.3, 0.05)
    assert np.abs(est).max() == pytest.approx(0.0, abs=1e-12)


def test_empirical_generator_big_match(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    est = empirical_generator(big_match, strat, Uniform(100_000), 0.5, 0.01)
    target = np.array([[-2.0, 1.0, 1.0], [0, 0, 0], [0, 0, 0]])
    assert np.abs(est[0] - target[0]).max() <= 0.1


def test_empirical_generator_diverges_near_horizon(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    est = empirical_generator(big_match, strat, Uniform(100_000), 0.95, 0.01)
    assert est[0, 0] == pytest.approx(-1.0 / (1 - 0.95), rel=0.15)


def test_empirical_generator_window_errors(big_match, cache):
    strat = cache.expansion("big_match").strategies()
    with pytest.raises(DegenerateWindow):
        empirical_generator(big_match, strat, Uniform(10), 0.51, 0.02)
    with pytest.raises(WindowOutOfRange):
        empirical_generator(big_match, strat, Uniform(1000), 0.8, 0.3)


def test_curve_csv_round_trip_and_format(big_match, cache, tmp_path):
    curve = cache.curve("big_match", "uniform", 1e-2, grid_points=11)
    buf = io.StringIO()
    write_curve_csv(curve, buf)
    text = buf.getvalue()
    lines = text.splitlines()
    assert lines[0].startswith("# game: big_match")
    header = next(l for l in lines if not l.startswith("#"))
    assert header == (
        "t,gamma,marginal_live,marginal_won,marginal_lost,"
        "occupation_live,occupation_won,occupation_lost"
    )
    path = tmp_path / "c.csv"
    path.write_text(text)
    again = read_curve_csv(path)
    assert np.array_equal(again.grid, curve.grid)
    assert np.array_equal(again.gamma, curve.gamma)
    assert np.array_equal(again.marginal, curve.marginal)

    # byte-identical on repeat writes
    buf2 = io.StringIO()
    write_curve_csv(curve, buf2)
    assert buf2.getvalue() == text
