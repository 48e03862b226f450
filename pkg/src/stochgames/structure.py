"""Structural hypotheses and the critical regularization of strategies.

The no-return conditions H1/H2 forbid leaving a state, coming back, and
also reaching a third state under a one-action deviation of the same
player.  They are decided by exhaustive enumeration in exact rational
arithmetic ("> 0" carries no tolerance).  A fitted strategy expansion is
*critical* when every induced off-diagonal transition vanishes at order
lam or faster; the summed order-lam coefficients then form a
continuous-time rate matrix, the object the limit laws are built from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import MassOverflow
from .game import GameSpec, MarkovStrategyPair, StationaryProfile
from .puiseux import PuiseuxExpansion, kernel_leading_terms


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of an H1/H2 check; ``witness`` proves a violation.

    The witness is (l, l_prime, l_bar, actions) with actions ordered as in
    the defining condition: (i, i_bar, j, i2, j2) for H1 and
    (i, j, j_bar, i2, j2) for H2, all zero-based indices.
    """

    holds: bool
    witness: tuple | None = None

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("witness must be present exactly when the hypothesis fails")


@dataclass(frozen=True)
class GeneratorMatrix:
    """Continuous-time transition-rate matrix: nonnegative off-diagonals, zero row sums."""

    A: np.ndarray

    ROW_TOL = 1e-10

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        object.__setattr__(self, "A", A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("rate matrix must be square")
        off = A[~np.eye(A.shape[0], dtype=bool)]
        if off.size and off.min() < -1e-12:
            raise ValueError(f"off-diagonal rate {off.min():.3e} is negative")
        drift = np.abs(A.sum(axis=1)).max() if A.size else 0.0
        if drift > self.ROW_TOL:
            raise ValueError(f"row sums deviate from zero by {drift:.3e}")

    @property
    def n(self) -> int:
        return self.A.shape[0]


def check_h1(game: GameSpec) -> HypothesisReport:
    """No triple (l -> l' -> l) with a same-opponent-action branch l -> l_bar.

    Searches ordered triples of distinct states and action tuples
    (i, i_bar, j, i2, j2) with i != i_bar for
    q(l'|l,i,j) q(l|l',i2,j2) q(l_bar|l,i_bar,j) > 0, returning the first
    witness in lexicographic order.
    """
    q = game.transition
    n, n1, n2 = game.n_states, game.n_actions_p1, game.n_actions_p2
    for l in range(n):
        for lp in range(n):
            if lp == l:
                continue
            for lb in range(n):
                if lb == l or lb == lp:
                    continue
                for i in range(n1):
                    for ib in range(n1):
                        if ib == i:
                            continue
                        for j in range(n2):
                            if q[l][i][j][lp] > 0 and q[l][ib][j][lb] > 0:
                                for i2 in range(n1):
                                    for j2 in range(n2):
                                        if q[lp][i2][j2][l] > 0:
                                            return HypothesisReport(
                                                False, (l, lp, lb, (i, ib, j, i2, j2))
                                            )
    return HypothesisReport(True)


def check_h2(game: GameSpec) -> HypothesisReport:
    """Symmetric condition with the roles of the players exchanged."""
    q = game.transition
    n, n1, n2 = game.n_states, game.n_actions_p1, game.n_actions_p2
    for l in range(n):
        for lp in range(n):
            if lp == l:
                continue
            for lb in range(n):
                if lb == l or lb == lp:
                    continue
                for i in range(n1):
                    for j in range(n2):
                        for jb in range(n2):
                            if jb == j:
                                continue
                            if q[l][i][j][lp] > 0 and q[l][i][jb][lb] > 0:
                                for i2 in range(n1):
                                    for j2 in range(n2):
                                        if q[lp][i2][j2][l] > 0:
                                            return HypothesisReport(
                                                False, (l, lp, lb, (i, j, jb, i2, j2))
                                            )
    return HypothesisReport(True)


def is_absorbing(game: GameSpec) -> int | None:
    """The unique live state, if every other state is absorbing; else None."""
    stuck = [
        all(
            game.transition[l][i][j][l] == 1
            for i in range(game.n_actions_p1)
            for j in range(game.n_actions_p2)
        )
        for l in range(game.n_states)
    ]
    live = [l for l, s in enumerate(stuck) if not s]
    return live[0] if len(live) == 1 else None


def criticality_check(game: GameSpec, exp: PuiseuxExpansion) -> GeneratorMatrix | None:
    """Rate matrix of the induced kernel, if it is critical.

    Every off-diagonal induced transition must have leading exponent >= 1;
    the returned rates sum the exponent-1 coefficients.  Returns None when
    some transition survives at an order below lam.
    """
    E, C = kernel_leading_terms(game, exp)
    n = game.n_states
    A = np.zeros((n, n))
    for l in range(n):
        for lp in range(n):
            if lp == l or E[l][lp] is None:
                continue
            if E[l][lp] < 1:
                return None
            if E[l][lp] == 1:
                A[l, lp] = C[l, lp]
        A[l, l] = -A[l].sum()
    return GeneratorMatrix(A)


class RegularizedFamily:
    """The T-indexed critical regularization of a fitted expansion.

    Per state, actions with exponent above one are dropped, each action
    with exponent e in (0, 1] is played with probability c T^(1-e) lam,
    and the remaining mass goes to the exponent-0 actions proportionally
    to their coefficients.  All induced exits then occur at order exactly
    lam, so the kernel is critical by construction; for large T the exit
    distribution approaches the fitted one.
    """

    def __init__(self, exp: PuiseuxExpansion, T: int):
        if T < 1:
            raise ValueError(f"T must be a positive integer, got {T}")
        self.base = exp
        self.T = int(T)
        self._sides = []
        cap = math.inf
        for coeff, expo in ((exp.coeff_p1, exp.expo_p1), (exp.coeff_p2, exp.expo_p2)):
            pert = np.zeros_like(coeff)
            keep = np.zeros_like(coeff)
            for k, row in enumerate(expo):
                for i, e in enumerate(row):
                    c = coeff[k, i]
                    if c == 0.0 or e > 1:
                        continue
                    if e == 0:
                        keep[k, i] = c
                    else:
                        pert[k, i] = c * float(T) ** float(1 - e)
                total = pert[k].sum()
                if total > 0:
                    cap = min(cap, 1.0 / total)
                keep[k] /= keep[k].sum()
            self._sides.append((pert, keep))
        self.lambda_cap = min(1.0, cap)

    def profile_at(self, lam: float) -> StationaryProfile:
        if lam > self.lambda_cap:
            raise MassOverflow(
                f"lam={lam:g} exceeds the regularization cap {self.lambda_cap:g} (T={self.T})"
            )
        rows = []
        for pert, keep in self._sides:
            p = pert * lam
            rows.append(p + keep * (1.0 - p.sum(axis=1, keepdims=True)))
        return StationaryProfile(rows[0], rows[1])

    def expansion(self) -> PuiseuxExpansion:
        """Analytic leading terms of the regularized family."""

        def side(idx):
            pert, keep = self._sides[idx]
            coeff = np.where(pert > 0, pert, keep)
            expo = tuple(
                tuple(Fraction(1) if pert[k, i] > 0 else Fraction(0) for i in range(coeff.shape[1]))
                for k in range(coeff.shape[0])
            )
            return coeff, expo

        c1, e1 = side(0)
        c2, e2 = side(1)
        return PuiseuxExpansion(c1, e1, c2, e2, fit_residual=self.base.fit_residual)

    def strategies(self) -> MarkovStrategyPair:
        return MarkovStrategyPair(self.profile_at, description=f"regularized(T={self.T})")


def critical_regularization(exp: PuiseuxExpansion, T: int) -> RegularizedFamily:
    return RegularizedFamily(exp, T)
