"""Leading Puiseux terms of optimal stationary strategies.

Optimal strategies of a discounted game admit fractional-power expansions
near zero discount; the leading term of each action probability,
x_lam(i) = c * lam^e + o(lam^e), is recovered here from a solver ladder by
log-log slope fitting, with exponents snapped to rationals of small
denominator.  The fitted terms drive everything downstream: action
classification, absorbing exit rates, criticality checks, and the
stage strategies used by the trajectory engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import LadderTooShort, NotAbsorbing, UnstableExponent
from .game import GameSpec, MarkovStrategyPair, StationaryProfile

PROB_FLOOR = 1e-14
MAX_DENOMINATOR = 12
SLOPE_TOL = 0.1
ZERO_SUM_TOL = 5e-2

CLASS_NAMES = ("zero", "star", "one", "plus")


def _classify_exponent(c: float, e: Fraction) -> str:
    if c == 0.0:
        return "plus"  # irrelevant actions by the c = 0 => e = 0 convention
    if e == 0:
        return "zero"
    if e < 1:
        return "star"
    if e == 1:
        return "one"
    return "plus"


@dataclass(frozen=True)
class PuiseuxExpansion:
    """Per (player, state, action) leading coefficient and exponent.

    Coefficients are floats, exponents exact Fractions.  The convention
    c = 0 => e = 0 marks actions that vanish from the expansion entirely.
    """

    coeff_p1: np.ndarray
    expo_p1: tuple
    coeff_p2: np.ndarray
    expo_p2: tuple
    fit_residual: float = 0.0

    def __post_init__(self):
        c1 = np.asarray(self.coeff_p1, dtype=float)
        c2 = np.asarray(self.coeff_p2, dtype=float)
        object.__setattr__(self, "coeff_p1", c1)
        object.__setattr__(self, "coeff_p2", c2)
        # slow subleading terms shift fitted limit coefficients by the same
        # order as the held-out prediction error, hence the residual scaling
        mass_tol = max(ZERO_SUM_TOL, 3.0 * self.fit_residual)
        for coeff, expo, who in ((c1, self.expo_p1, "P1"), (c2, self.expo_p2, "P2")):
            if (coeff < 0).any():
                raise ValueError(f"{who} coefficients must be nonnegative")
            for k, row in enumerate(expo):
                for i, e in enumerate(row):
                    if e < 0:
                        raise ValueError(f"{who} exponent at state {k}, action {i} is negative")
                    if coeff[k, i] == 0.0 and e != 0:
                        raise ValueError(
                            f"{who} state {k} action {i}: c = 0 requires e = 0, got e = {e}"
                        )
                limit_mass = sum(coeff[k, i] for i, e in enumerate(row) if e == 0)
                if abs(limit_mass - 1.0) > mass_tol:
                    raise ValueError(
                        f"{who} state {k}: exponent-0 coefficients sum to {limit_mass:.6f}, not 1"
                    )

    @property
    def n_states(self) -> int:
        return self.coeff_p1.shape[0]

    def profile_at(self, lam: float) -> StationaryProfile:
        """Leading-term strategy at discount lam: clip c*lam^e to [0,1], renormalize."""
        x = self._eval(self.coeff_p1, self.expo_p1, lam)
        y = self._eval(self.coeff_p2, self.expo_p2, lam)
        return StationaryProfile(x, y)

    @staticmethod
    def _eval(coeff, expo, lam):
        out = np.zeros_like(coeff)
        for k, row in enumerate(expo):
            for i, e in enumerate(row):
                c = coeff[k, i]
                if c > 0.0:
                    out[k, i] = min(1.0, c * lam ** float(e))
        return out / out.sum(axis=1, keepdims=True)

    def _eval_grid(self, coeff, expo, lams):
        B = lams.shape[0]
        out = np.zeros((B,) + coeff.shape)
        pow_cache: dict[float, np.ndarray] = {}
        for k, row in enumerate(expo):
            for i, e in enumerate(row):
                c = coeff[k, i]
                if c == 0.0:
                    continue
                ef = float(e)
                p = pow_cache.get(ef)
                if p is None:
                    p = np.ones(B) if ef == 0.0 else lams ** ef
                    pow_cache[ef] = p
                out[:, k, i] = np.minimum(1.0, c * p)
        return out / out.sum(axis=2, keepdims=True)

    def strategies(self) -> MarkovStrategyPair:
        """Stage strategies from the leading term (vectorized over discounts)."""

        def grid(lams):
            return (
                self._eval_grid(self.coeff_p1, self.expo_p1, lams),
                self._eval_grid(self.coeff_p2, self.expo_p2, lams),
            )

        pair = MarkovStrategyPair(self.profile_at, description="leading", grid_fn=grid)
        # scalar form consumed by the fused propagation kernel
        pair.leading_terms = (
            np.ascontiguousarray(self.coeff_p1),
            np.array([[float(e) for e in row] for row in self.expo_p1]),
            np.ascontiguousarray(self.coeff_p2),
            np.array([[float(e) for e in row] for row in self.expo_p2]),
        )
        return pair


@dataclass(frozen=True)
class ActionClassification:
    """Partition of each state's actions by leading exponent: 0, (0,1), 1, >1."""

    p1: tuple
    p2: tuple

    def partition_ok(self, n_actions_p1: int, n_actions_p2: int) -> bool:
        for per_state, total in ((self.p1, n_actions_p1), (self.p2, n_actions_p2)):
            for classes in per_state:
                seen = sorted(a for name in CLASS_NAMES for a in classes[name])
                if seen != list(range(total)):
                    return False
        return True


def classify_actions(exp: PuiseuxExpansion) -> ActionClassification:
    def side(coeff, expo):
        states = []
        for k, row in enumerate(expo):
            classes = {name: [] for name in CLASS_NAMES}
            for i, e in enumerate(row):
                classes[_classify_exponent(coeff[k, i], e)].append(i)
            states.append({name: tuple(v) for name, v in classes.items()})
        return tuple(states)

    return ActionClassification(side(exp.coeff_p1, exp.expo_p1), side(exp.coeff_p2, exp.expo_p2))


def fit_expansion(ladder, max_denominator: int = MAX_DENOMINATOR,
                  floor: float = PROB_FLOOR, slope_tol: float = SLOPE_TOL) -> PuiseuxExpansion:
    """Fit leading terms from a ladder of (lam, StationaryProfile) pairs.

    Needs at least four geometrically spaced rungs (consecutive ratio
    <= 1/10, strictly decreasing).  The smallest rung is held out: the fit
    uses the rest, the held-out rung supplies ``fit_residual`` (max
    relative prediction error).  Probabilities below ``floor`` on every
    rung give (c, e) = (0, 0); below ``floor`` on only some rungs the
    branch is considered unstable.
    """
    lams = np.array([float(l) for l, _ in ladder])
    if len(lams) < 4:
        raise LadderTooShort(f"need >= 4 ladder points, got {len(lams)}")
    if (np.diff(lams) >= 0).any():
        raise ValueError("ladder must be strictly decreasing")
    if (lams[1:] / lams[:-1] > 0.1 + 1e-12).any():
        raise ValueError("ladder must be geometrically spaced with ratio <= 1/10")

    profiles = [p for _, p in ladder]
    fit_lams, hold_lam = lams[:-1], lams[-1]
    residual = 0.0

    def fit_side(series_of, n_states, n_actions, who):
        nonlocal residual
        coeff = np.zeros((n_states, n_actions))
        expo = []
        for k in range(n_states):
            row_e = []
            for i in range(n_actions):
                p = np.array([series_of(prof)[k, i] for prof in profiles])
                tiny = p <= floor
                if tiny.all():
                    row_e.append(Fraction(0))
                    continue
                if tiny.any():
                    raise UnstableExponent(
                        f"{who} state {k} action {i}: probability crosses the zero floor "
                        "across the ladder (branch switch suspected)"
                    )
                pf = p[:-1]
                slopes = np.log(pf[1:] / pf[:-1]) / np.log(fit_lams[1:] / fit_lams[:-1])
                # the gap at the largest discounts is the least asymptotic;
                # leave it out of the stability check when others remain
                checked = slopes[1:] if len(slopes) >= 3 else slopes
                if len(checked) > 1 and np.abs(np.diff(checked)).max() > slope_tol:
                    raise UnstableExponent(
                        f"{who} state {k} action {i}: log-log slope varies by "
                        f"{np.abs(np.diff(checked)).max():.3f} > {slope_tol} across gaps"
                    )
                e = Fraction(float(slopes[-1])).limit_denominator(max_denominator)
                if e < 0:
                    e = Fraction(0)
                ef = float(e)
                c = math.sqrt((pf[-1] / fit_lams[-1] ** ef) * (pf[-2] / fit_lams[-2] ** ef))
                coeff[k, i] = c
                row_e.append(e)
                pred = min(1.0, c * hold_lam ** ef)
                residual = max(residual, abs(pred - p[-1]) / max(p[-1], floor))
            expo.append(tuple(row_e))
        return coeff, tuple(expo)

    prof0 = profiles[0]
    n_states = prof0.x.shape[0]
    c1, e1 = fit_side(lambda pr: pr.x, n_states, prof0.x.shape[1], "P1")
    c2, e2 = fit_side(lambda pr: pr.y, n_states, prof0.y.shape[1], "P2")
    return PuiseuxExpansion(c1, e1, c2, e2, fit_residual=residual)


def kernel_leading_terms(game: GameSpec, exp: PuiseuxExpansion):
    """Leading term of each induced transition Q_lam(l, l') = C * lam^E.

    Returns (E, C): E[l][l'] is the minimal pair exponent e(i) + e'(j)
    over action pairs with positive coefficient product and positive
    transition probability (None when no such pair exists), and C[l, l']
    sums the coefficient contributions c(i) c'(j) q(l'|l,i,j) at that
    minimal exponent.  Diagonal entries are None/0.
    """
    n = game.n_states
    E = [[None] * n for _ in range(n)]
    C = np.zeros((n, n))
    for l in range(n):
        for lp in range(n):
            if lp == l:
                continue
            best = None
            acc = 0.0
            for i in range(game.n_actions_p1):
                ci = exp.coeff_p1[l, i]
                if ci == 0.0:
                    continue
                for j in range(game.n_actions_p2):
                    cj = exp.coeff_p2[l, j]
                    q = game.transition[l][i][j][lp]
                    if cj == 0.0 or q == 0:
                        continue
                    e = exp.expo_p1[l][i] + exp.expo_p2[l][j]
                    if best is None or e < best:
                        best = e
                        acc = ci * cj * float(q)
                    elif e == best:
                        acc += ci * cj * float(q)
            E[l][lp] = best
            C[l, lp] = acc if best is not None else 0.0
    return E, C


def limit_flow_payoffs(game: GameSpec, exp: PuiseuxExpansion) -> np.ndarray:
    """Per-state limit stage payoff under the exponent-0 part of the profile."""
    n = game.n_states
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        mass = 0.0
        for i in range(game.n_actions_p1):
            ci = exp.coeff_p1[k, i]
            if ci == 0.0 or exp.expo_p1[k][i] != 0:
                continue
            for j in range(game.n_actions_p2):
                cj = exp.coeff_p2[k, j]
                if cj == 0.0 or exp.expo_p2[k][j] != 0:
                    continue
                acc += ci * cj * float(game.payoff[k][i][j])
                mass += ci * cj
        if mass <= 0.0:
            raise ValueError(f"state {k}: no exponent-0 action pair; limit payoff undefined")
        out[k] = acc / mass
    return out


@dataclass(frozen=True)
class AbsorbingExitRates:
    """Normalized exit rates out of the live state of an absorbing game.

    ``exit[l]`` accumulates c(i) c'(j) q(l|k,i,j) over action pairs with
    e(i) + e'(j) = 1; the three components split that sum by exponent
    pattern (first subscript is Player 1's exponent): a10 from I_1 x J_0,
    astar from matched pairs of I_* x J_*, a01 from I_0 x J_1.  ``g0`` is
    the limit stage payoff under the exponent-0 profile.
    """

    live: int
    exit: np.ndarray
    a10: np.ndarray
    astar: np.ndarray
    a01: np.ndarray
    g0: float

    @property
    def total(self) -> float:
        """|A^{k,k}|, the total normalized exit rate."""
        return float(self.exit.sum())

    def row(self) -> np.ndarray:
        out = self.exit.copy()
        out[self.live] = -self.total
        return out

    def generator(self) -> np.ndarray:
        """Full n x n rate matrix: the live row, absorbing rows zero."""
        A = np.zeros((len(self.exit), len(self.exit)))
        A[self.live] = self.row()
        return A

    def value_identity_residual(self, values) -> float:
        """|v^k - (g0 + sum_l A^{k,l} v^l) / (1 + |A^{k,k}|)|."""
        v = np.asarray(values, dtype=float)
        rhs = (self.g0 + float(self.exit @ v)) / (1.0 + self.total)
        return abs(v[self.live] - rhs)

    def deviation_limits(self, values):
        """Closed-form payoff limits under one-sided deviations.

        Returns (lower, upper): the limit payoff when Player 1 refuses to
        exit (transitions governed by the a01 block alone) and when
        Player 2 forces immediate absorption (full exit distribution).
        Optimality of the fitted pair brackets the value between them.
        ``upper`` is None when the total exit rate is zero.
        """
        v = np.asarray(values, dtype=float)
        a01_total = float(self.a01.sum())
        lower = (self.g0 + float(self.a01 @ v)) / (1.0 + a01_total)
        upper = float(self.exit @ v) / self.total if self.total > 0 else None
        return lower, upper


def exit_rates(game: GameSpec, exp: PuiseuxExpansion, live: int | None = None) -> AbsorbingExitRates:
    """Exit-rate decomposition A = A_10 + A_* + A_01 at the live state."""
    from .structure import is_absorbing

    actual = is_absorbing(game)
    if actual is None:
        raise NotAbsorbing(f"{game.name}: not an absorbing game")
    if live is not None and live != actual:
        raise NotAbsorbing(f"{game.name}: live state is {actual}, not {live}")
    k = actual

    n = game.n_states
    exit = np.zeros(n)
    parts = {"a10": np.zeros(n), "astar": np.zeros(n), "a01": np.zeros(n)}
    g0_acc = 0.0
    g0_mass = 0.0
    for i in range(game.n_actions_p1):
        ci, ei = exp.coeff_p1[k, i], exp.expo_p1[k][i]
        if ci == 0.0:
            continue
        cls_i = _classify_exponent(ci, ei)
        for j in range(game.n_actions_p2):
            cj, ej = exp.coeff_p2[k, j], exp.expo_p2[k][j]
            if cj == 0.0:
                continue
            cls_j = _classify_exponent(cj, ej)
            if cls_i == "zero" and cls_j == "zero":
                g0_acc += ci * cj * float(game.payoff[k][i][j])
                g0_mass += ci * cj
            if ei + ej == 1:
                w = ci * cj
                for l in range(n):
                    if l == k:
                        continue
                    q = float(game.transition[k][i][j][l])
                    if q == 0.0:
                        continue
                    exit[l] += w * q
                    if cls_i == "one" and cls_j == "zero":
                        parts["a10"][l] += w * q
                    elif cls_i == "star" and cls_j == "star":
                        parts["astar"][l] += w * q
                    elif cls_i == "zero" and cls_j == "one":
                        parts["a01"][l] += w * q
    if g0_mass <= 0.0:
        raise ValueError("no exponent-0 action pair; the limit stage payoff is undefined")
    return AbsorbingExitRates(
        live=k, exit=exit, a10=parts["a10"], astar=parts["astar"], a01=parts["a01"],
        g0=g0_acc / g0_mass,
    )


def leading_strategies(exp: PuiseuxExpansion) -> MarkovStrategyPair:
    """Alias for exp.strategies(); reads better at call sites."""
    return exp.strategies()
