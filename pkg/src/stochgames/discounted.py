"""Fixed point of the discounted one-step value operator.

The operator maps v to the per-state values of the auxiliary matrix games

    Psi(v)^k = val_{i,j} [ lam * g(k,i,j) + (1-lam) * sum_l q(l|k,i,j) v^l ],

a (1-lam)-contraction whose fixed point is the discounted value vector.
Plain value iteration is hopeless at the discounts the strategy-expansion
fitting needs (lam ~ 1e-6 means ~1e7 sweeps), so sweeps are interleaved
with an affine acceleration step: evaluate the current optimal stationary
pair exactly through the linear system it induces, then certify the
candidate by its one-step residual.  The returned residual is always a
genuine ||Psi(v) - v||_inf, whatever path produced v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MaxIterationsExceeded
from .game import GameSpec, MarkovStrategyPair, StationaryProfile, induced_stage_data
from .matrixgame import matrix_game_value

_MAX_ROUNDS = 200


@dataclass(frozen=True)
class DiscountedSolution:
    lam: float
    values: np.ndarray
    profile: StationaryProfile
    residual: float


@dataclass(frozen=True)
class LimitValueEstimate:
    values: np.ndarray
    ladder: tuple
    extrapolation_error: float


def auxiliary_matrices(game: GameSpec, lam: float, v: np.ndarray) -> np.ndarray:
    """Stack of per-state auxiliary matrices, shape (n, n1, n2)."""
    cont = np.einsum("kijl,l->kij", game.transition_array, np.asarray(v, dtype=float))
    return lam * game.payoff_array + (1.0 - lam) * cont


def _sweep(game: GameSpec, lam: float, v: np.ndarray):
    """One operator application; returns (Psi(v), optimal stationary profile)."""
    aux = auxiliary_matrices(game, lam, v)
    n = game.n_states
    out = np.empty(n)
    x = np.empty((n, game.n_actions_p1))
    y = np.empty((n, game.n_actions_p2))
    for k in range(n):
        sol = matrix_game_value(aux[k])
        out[k] = sol.value
        x[k] = sol.x_opt
        y[k] = sol.y_opt
    return out, StationaryProfile(x, y)


def shapley_operator(game: GameSpec, lam: float, v) -> np.ndarray:
    """Psi(v): per-state value of the auxiliary matrix game."""
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"discount must lie in (0, 1], got {lam}")
    v = np.asarray(v, dtype=float)
    if v.shape != (game.n_states,) or not np.isfinite(v).all():
        raise ValueError(f"v must be a finite vector of length {game.n_states}")
    return _sweep(game, lam, v)[0]


def default_tolerance(game: GameSpec) -> float:
    # scaled so expansion fitting at lam = 1e-6 is not noise-dominated
    return 1e-12 * max(1.0, game.max_abs_payoff)


def solve_discounted(game: GameSpec, lam: float, tol: float | None = None,
                     v0: np.ndarray | None = None) -> DiscountedSolution:
    """Solve the lam-discounted game to residual ||Psi(v) - v||_inf <= tol.

    ``v0`` warm-starts the iteration (used along discount ladders to keep
    successive solves on one strategy branch).
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"discount must lie in (0, 1], got {lam}")
    if tol is None:
        tol = default_tolerance(game)
    n = game.n_states
    v = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    eye = np.eye(n)
    # strategies at discount lam are sensitive to value errors of order lam,
    # so once under tol keep polishing until the residual hits the float floor
    floor = 64.0 * np.finfo(float).eps * max(1.0, game.max_abs_payoff)
    best = None
    bonus = 0

    for _ in range(_MAX_ROUNDS):
        w, profile_v = _sweep(game, lam, v)
        res_v = float(np.abs(w - v).max())
        if best is None or res_v < best[2]:
            best = (v.copy(), profile_v, res_v)
        # exact evaluation of the current stationary pair
        Q, g = induced_stage_data(game, profile_v)
        try:
            u = np.linalg.solve(eye - (1.0 - lam) * Q, lam * g)
        except np.linalg.LinAlgError:
            u = w
        wu, profile_u = _sweep(game, lam, u)
        res_u = float(np.abs(wu - u).max())
        if res_u < best[2]:
            best = (u, profile_u, res_u)
        if best[2] <= tol:
            bonus += 1
            if best[2] <= floor or bonus >= 5:
                return DiscountedSolution(lam, best[0], best[1], best[2])
        v = wu if res_u < res_v else w

    if best is not None and best[2] <= tol:
        return DiscountedSolution(lam, best[0], best[1], best[2])
    raise MaxIterationsExceeded(
        f"no residual <= {tol:.3e} after {_MAX_ROUNDS} accelerated rounds at lam={lam:g} "
        f"(best residual {best[2] if best else math.inf:.3e})"
    )


def solve_ladder(game: GameSpec, lambdas, tol: float | None = None) -> list[DiscountedSolution]:
    """Solve along a decreasing discount ladder, warm-starting each rung."""
    sols = []
    v = None
    for lam in lambdas:
        sol = solve_discounted(game, lam, tol=tol, v0=v)
        sols.append(sol)
        v = sol.values
    return sols


def profile_ladder(game: GameSpec, lambdas, tol: float | None = None):
    """(lam, StationaryProfile) pairs in the form the expansion fitter takes."""
    return [(s.lam, s.profile) for s in solve_ladder(game, lambdas, tol=tol)]


def estimate_limit_value(game: GameSpec, ladder, tol: float | None = None) -> LimitValueEstimate:
    """Vanishing-discount value estimate by extrapolation in lam^(1/d) powers.

    The ladder must be strictly decreasing with smallest entry >= 1e-6.
    For each trial root order d <= n_states, consecutive rung pairs give
    extrapolated limits; the d with the most stable tail is selected and
    the spread of its last two estimates reported as the error.
    """
    lams = [float(l) for l in ladder]
    if len(lams) < 2:
        raise ValueError("ladder needs at least two discounts")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("ladder must be strictly decreasing")
    if lams[-1] < 1e-6:
        raise ValueError("smallest ladder discount must be >= 1e-6")

    sols = solve_ladder(game, lams, tol=tol)
    vals = [s.values for s in sols]
    gmax = game.max_abs_payoff

    best = None
    for d in range(1, game.n_states + 1):
        roots = [lam ** (1.0 / d) for lam in lams]
        ests = []
        for (r1, v1), (r2, v2) in zip(zip(roots, vals), zip(roots[1:], vals[1:])):
            ests.append((v2 * r1 - v1 * r2) / (r1 - r2))
        if len(ests) >= 2:
            spread = float(np.abs(ests[-1] - ests[-2]).max())
        else:
            spread = float(np.abs(ests[-1] - vals[-1]).max())
        if best is None or spread < best[0]:
            best = (spread, ests[-1])
    spread, estimate = best
    estimate = np.clip(estimate, -gmax, gmax)
    return LimitValueEstimate(
        values=estimate,
        ladder=tuple((s.lam, s.values) for s in sols),
        extrapolation_error=spread,
    )


def lp_strategy_pair(game: GameSpec, tol: float | None = None) -> MarkovStrategyPair:
    """Stage strategies that re-solve the discounted game at each effective discount."""

    @lru_cache(maxsize=4096)
    def _profile(lam: float) -> StationaryProfile:
        return solve_discounted(game, lam, tol=tol).profile

    return MarkovStrategyPair(_profile, description="lp")
