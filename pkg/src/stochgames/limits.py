"""Closed-form limit objects of the vanishing-weight regime.

As the sup stage weight goes to zero, window sums of powers of the
effective discount have a three-way limit (divergent below exponent one,
a positive logarithm at one, zero above); the live-state survival
probability, exit distribution, state marginal P_t and occupation measure
Pi_t all follow.  For critical kernels with rate matrix A the occupation
measure is Pi_t = integral_0^t exp(-ln(1-s) A) ds, evaluated here by
composite Simpson quadrature with step doubling.

Sign note: the e = 1 window limit is returned as the *positive*
logarithm ln((1-t)/(1-t-h)).  The sandwich bound
h/(1-t) <= lim <= h/(1-t-h) forces the positive value; a displayed form
with the arguments inverted is a sign slip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from .errors import QuadratureNotConverged, WindowOutOfRange
from .evaluations import Evaluation
from .game import GameSpec
from .puiseux import PuiseuxExpansion, kernel_leading_terms
from .structure import GeneratorMatrix
from .trajectory import TrajectoryCurve, default_grid

QUAD_TOL = 1e-8
_MAX_PANELS = 1 << 14


class _Diverges:
    """Tagged divergent limit; returned instead of a floating infinity."""

    _instance = None
    __slots__ = ()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGES"


DIVERGES = _Diverges()


def _check_window(t: float, h: float) -> None:
    if not (0.0 <= t and t < t + h and t + h < 1.0):
        raise WindowOutOfRange(f"need 0 <= t < t+h < 1, got t={t}, h={h}")


def tecnico1_limit(e, t: float, h: float):
    """Limit of the window sum of (lambda_m)^e as the sup weight vanishes.

    DIVERGES for e < 1, ln((1-t)/(1-t-h)) for e = 1, and 0 for e > 1.
    """
    _check_window(t, h)
    if e < 0:
        raise ValueError(f"exponent must be nonnegative, got {e}")
    if e < 1:
        return DIVERGES
    if e == 1:
        return math.log((1.0 - t) / (1.0 - t - h))
    return 0.0


def tecnico1_partial_sum(theta: Evaluation, e, t: float, h: float) -> float:
    """Finite-weight window sum: sum of (lambda_m)^e over clock(t) <= m <= clock(t+h)."""
    _check_window(t, h)
    ef = float(e)
    m0 = theta.clock(t)
    m1 = min(theta.clock(t + h), theta.horizon)
    total = 0.0
    step = 1 << 22
    for lo in range(m0, m1 + 1, step):
        hi = min(lo + step, m1 + 1)
        lams = theta.discounts_range(lo, hi)
        total += float(np.power(lams, ef).sum()) if ef != 1.0 else float(lams.sum())
    return total


def survival_probability(c: float, e, t: float) -> float:
    """Limit probability of never having left the live state by fraction t.

    0 when absorption outpaces the clock (e < 1), (1-t)^c at the critical
    exponent e = 1, and 1 when exits vanish faster (e > 1 or c = 0).
    """
    if not 0.0 <= t < 1.0:
        raise WindowOutOfRange(f"t={t} outside [0, 1)")
    if c < 0:
        raise ValueError("exit coefficient must be nonnegative")
    if c == 0 or e > 1:
        return 1.0
    if e == 1:
        return (1.0 - t) ** c
    return 0.0


@dataclass(frozen=True)
class AbsorbingLimitLaw:
    """Survival/exit law of an absorbing game under fitted strategies.

    ``c_live`` and ``e_live`` are the total exit coefficient and exponent
    of the live state; ``a[l]`` is the conditional exit distribution
    (zero off the minimal exponent); ``g0`` the limit stage payoff while
    alive.
    """

    live: int
    c_live: float
    e_live: Fraction
    a: np.ndarray
    g0: float

    def survival(self, t: float) -> float:
        return survival_probability(self.c_live, self.e_live, t)

    def marginal(self, t: float) -> np.ndarray:
        p = self.survival(t) if t < 1.0 else survival_probability(self.c_live, self.e_live, 1.0 - 1e-15)
        out = (1.0 - p) * self.a
        out[self.live] += p
        return out


def absorbing_limit_law(game: GameSpec, exp: PuiseuxExpansion, live: int | None = None) -> AbsorbingLimitLaw:
    """Build the limit law from the kernel's leading terms at the live state."""
    from .errors import NotAbsorbing
    from .puiseux import exit_rates
    from .structure import is_absorbing

    k = is_absorbing(game)
    if k is None:
        raise NotAbsorbing(f"{game.name}: not an absorbing game")
    if live is not None and live != k:
        raise NotAbsorbing(f"{game.name}: live state is {k}, not {live}")

    E, C = kernel_leading_terms(game, exp)
    n = game.n_states
    dests = [l for l in range(n) if l != k and E[k][l] is not None]
    a = np.zeros(n)
    if not dests:
        c_live, e_live = 0.0, Fraction(0)
    else:
        e_live = min(E[k][l] for l in dests)
        c_live = sum(C[k, l] for l in dests if E[k][l] == e_live)
        for l in dests:
            if E[k][l] == e_live:
                a[l] = C[k, l] / c_live
    g0 = exit_rates(game, exp).g0
    return AbsorbingLimitLaw(live=k, c_live=float(c_live), e_live=e_live, a=a, g0=g0)


def absorbing_limit_curve(law: AbsorbingLimitLaw, values, grid=None) -> TrajectoryCurve:
    """Closed-form limit trajectory: P_t, Pi_t and gamma(t) = Pi_t . g0.

    While alive the flow payoff is ``law.g0``; after absorption in state l
    the payoff is the absorbed value values[l].  At the critical exponent
    the live occupation integrates to (1 - (1-t)^(c+1)) / (c+1).
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(law.a)
    k = law.live
    c, e = law.c_live, law.e_live

    if c > 0 and e == 1:
        p = (1.0 - grid) ** c
        live_occ = (1.0 - (1.0 - grid) ** (c + 1.0)) / (c + 1.0)
    elif c > 0 and e < 1:
        p = np.zeros_like(grid)
        live_occ = np.zeros_like(grid)
    else:
        p = np.ones_like(grid)
        live_occ = grid.copy()

    marginal = np.outer(1.0 - p, law.a)
    marginal[:, k] += p
    occupation = np.outer(grid - live_occ, law.a)
    occupation[:, k] += live_occ
    absorbed_value = float(law.a @ values)
    gamma = live_occ * law.g0 + (grid - live_occ) * absorbed_value

    meta = {"game": "", "theta": "limit:absorbing", "mode": "closed-form", "seed": "",
            "states": [str(i) for i in range(n)]}
    return TrajectoryCurve(grid, gamma, marginal, occupation, meta)


def _simpson(fv: np.ndarray, h: float):
    return h / 3.0 * (fv[0] + fv[-1] + 4.0 * fv[1:-1:2].sum(axis=0) + 2.0 * fv[2:-1:2].sum(axis=0))


def _occupation_integral(A: np.ndarray, lo: float, hi: float, panels: int) -> np.ndarray:
    s = np.linspace(lo, hi, 2 * panels + 1)
    fv = np.stack([expm(-math.log1p(-si) * A) for si in s])
    return _simpson(fv, (hi - lo) / (2 * panels))


def critical_occupation(A, t: float, quad_steps: int = 64) -> np.ndarray:
    """Pi_t = integral_0^t exp(-ln(1-s) A) ds by step-doubled Simpson quadrature.

    Doubles the panel count until successive results agree to 1e-8
    entrywise; raises QuadratureNotConverged past the panel budget.
    """
    A = A.A if isinstance(A, GeneratorMatrix) else np.asarray(A, dtype=float)
    GeneratorMatrix(A)  # validate
    if not 0.0 <= t < 1.0:
        raise WindowOutOfRange(f"t={t} outside [0, 1)")
    if t == 0.0:
        return np.zeros_like(A)
    panels = max(2, quad_steps)
    prev = _occupation_integral(A, 0.0, t, panels)
    while panels <= _MAX_PANELS:
        panels *= 2
        cur = _occupation_integral(A, 0.0, t, panels)
        if np.abs(cur - prev).max() <= QUAD_TOL:
            return cur
        prev = cur
    raise QuadratureNotConverged(
        f"occupation integral at t={t} still moving after {panels} panels"
    )


@dataclass(frozen=True)
class CriticalLimitLaw:
    """Limit objects of a critical kernel: rates A, flow payoffs g0, and Pi."""

    A: GeneratorMatrix
    g0: np.ndarray

    def occupation(self, t: float, quad_steps: int = 64) -> np.ndarray:
        return critical_occupation(self.A, t, quad_steps)


def critical_limit_curve(A, g0, grid=None, initial_state: int = 0) -> TrajectoryCurve:
    """Limit trajectory of a critical kernel: gamma(t) = (Pi_t g0)[initial_state].

    The marginal at t is the initial-state row of exp(-ln(1-t) A); the
    occupation rows accumulate it.  Quadrature runs cumulatively across
    grid intervals with per-interval step doubling.
    """
    Am = A.A if isinstance(A, GeneratorMatrix) else np.asarray(A, dtype=float)
    GeneratorMatrix(Am)
    g0 = np.asarray(g0, dtype=float)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    n = Am.shape[0]
    k = initial_state

    occ_rows = np.empty((len(grid), n))
    marg = np.empty((len(grid), n))
    acc = np.zeros((n, n))
    prev_t = 0.0
    for gi, t in enumerate(grid):
        hi = min(float(t), 1.0 - 1e-12)
        if hi > prev_t:
            panels = 8
            piece = _occupation_integral(Am, prev_t, hi, panels)
            while panels <= _MAX_PANELS:
                panels *= 2
                nxt = _occupation_integral(Am, prev_t, hi, panels)
                if np.abs(nxt - piece).max() <= QUAD_TOL:
                    piece = nxt
                    break
                piece = nxt
            else:
                raise QuadratureNotConverged(f"interval [{prev_t}, {hi}] did not stabilize")
            acc = acc + piece
            prev_t = hi
        occ_rows[gi] = acc[k]
        marg[gi] = expm(-math.log1p(-hi) * Am)[k]

    gamma = occ_rows @ g0
    meta = {"game": "", "theta": "limit:critical", "mode": "closed-form", "seed": "",
            "states": [str(i) for i in range(n)]}
    return TrajectoryCurve(grid, gamma, marg, occ_rows, meta)


@dataclass(frozen=True)
class LinearityReport:
    """How close a curve is to the straight line t -> t v."""

    sup_error: float
    second_difference: float
    is_linear: bool
    tolerance: float = field(default=0.02)


def linearity_check(curve: TrajectoryCurve, v_k: float, tol: float = 0.02) -> LinearityReport:
    """sup_t |gamma(t) - t v| plus a second-difference flatness statistic."""
    t, g = curve.grid, curve.gamma
    sup_err = float(np.abs(g - t * v_k).max())
    second = 0.0
    for i in range(1, len(t) - 1):
        h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
        if h1 <= 0 or h2 <= 0:
            continue
        dd = 2.0 * abs(
            (g[i + 1] - g[i]) / h2 - (g[i] - g[i - 1]) / h1
        ) / (h1 + h2)
        second = max(second, dd)
    return LinearityReport(sup_err, second, sup_err <= tol, tol)
