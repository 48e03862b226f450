"""Value and optimal mixed strategies of a zero-sum matrix game.

The game is reduced to the textbook reciprocal-value LP: shift the matrix
to strict positivity, maximize sum(p) subject to A^T p <= 1, p >= 0, and
normalize.  The LP is solved by a dense primal simplex with Bland's
lowest-index pivot rule, which makes the selected optimal vertex
deterministic -- repeated solves along a discount ladder stay on one
strategy branch.  Arithmetic is either float (duality gap certified to
1e-10) or exact `fractions.Fraction` (gap certified to be zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericalFailure
from .game import as_fraction

FLOAT_GAP_TOL = 1e-10
_MAX_PIVOTS = 20_000


@dataclass(frozen=True)
class MatrixGameSolution:
    """Saddle value and optimal mixed strategies.

    ``duality_gap`` is the exact best-response gap
    max_i (A y)_i - min_j (x^T A)_j recomputed from the returned
    strategies; it is zero for exact arithmetic.
    """

    value: float
    x_opt: np.ndarray
    y_opt: np.ndarray
    duality_gap: float
    exact_value: Fraction | None = None


def _simplex(G, zero, one, tol):
    """Maximize sum(q) s.t. G q <= 1, q >= 0 for entrywise-positive G (m1 x m2).

    This is the column player's reciprocal LP.  Returns (q, p, s): the
    primal solution, the dual prices p on the m1 row constraints (read
    off the slack reduced costs; they solve min sum(p), G^T p >= 1), and
    the common optimal objective s = sum(q) = sum(p).
    """
    m1, m2 = len(G), len(G[0])
    nvars = m2 + m1
    rows = []
    for r in range(m1):
        row = [G[r][j] for j in range(m2)] + [zero] * m1 + [one]
        row[m2 + r] = one
        rows.append(row)
    z = [-one] * m2 + [zero] * (m1 + 1)
    basis = list(range(m2, m2 + m1))

    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(nvars):
            if z[j] < -tol:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = None
        for r in range(m1):
            a = rows[r][enter]
            if a > tol:
                ratio = rows[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            raise NumericalFailure("LP unbounded; the shifted matrix must be positive")
        piv = rows[leave][enter]
        rows[leave] = [v / piv for v in rows[leave]]
        pivot_row = rows[leave]
        for r in range(m1):
            if r != leave:
                f = rows[r][enter]
                if f != zero:
                    rows[r] = [v - f * w for v, w in zip(rows[r], pivot_row)]
        f = z[enter]
        if f != zero:
            z = [v - f * w for v, w in zip(z, pivot_row)]
        basis[leave] = enter
    else:
        raise NumericalFailure(f"simplex exceeded {_MAX_PIVOTS} pivots")

    q = [zero] * m2
    for r, b in enumerate(basis):
        if b < m2:
            q[b] = rows[r][-1]
    p = [max(zero, z[m2 + r]) for r in range(m1)]
    return q, p, z[-1]


def matrix_game_value(A, exact: bool = False) -> MatrixGameSolution:
    """Solve the zero-sum matrix game with payoff matrix A (row player maximizes).

    Parameters
    ----------
    A : array-like, shape (m1, m2)
        Finite payoff entries.  In exact mode entries may be ints, floats,
        Fractions or "p/q" strings.
    exact : bool
        Use exact rational arithmetic throughout.

    Raises
    ------
    NumericalFailure
        If the LP does not terminate or the recomputed duality gap
        exceeds the mode tolerance.  Never silently returns.
    """
    if exact:
        rows = [[as_fraction(v) for v in row] for row in np.atleast_2d(np.asarray(A, dtype=object))]
        return _solve(rows, Fraction(0), Fraction(1), Fraction(0), exact=True)
    arr = np.atleast_2d(np.asarray(A, dtype=float))
    if arr.size == 0 or not np.isfinite(arr).all():
        raise NumericalFailure("matrix must be nonempty with finite entries")
    rows = [[float(v) for v in row] for row in arr]
    return _solve(rows, 0.0, 1.0, 1e-12, exact=False)


def _solve(rows, zero, one, tol, exact):
    m1, m2 = len(rows), len(rows[0])
    lo = min(min(r) for r in rows)
    shift = one - lo if lo <= zero else zero
    G = [[v + shift for v in r] for r in rows]

    q, p, s = _simplex(G, zero, one, tol)
    if s <= zero:
        raise NumericalFailure("degenerate LP objective; cannot normalize strategies")
    sp = sum(p)
    x = [v / sp for v in p]
    y = [v / s for v in q]

    # recompute the best-response gap on the original matrix
    col_vals = [sum(x[i] * rows[i][j] for i in range(m1)) for j in range(m2)]
    row_vals = [sum(rows[i][j] * y[j] for j in range(m2)) for i in range(m1)]
    gap = max(row_vals) - min(col_vals)
    value = one / s - shift

    if exact:
        if gap != 0:
            raise NumericalFailure(f"exact LP left a nonzero duality gap {gap}")
        return MatrixGameSolution(
            value=float(value),
            x_opt=np.array([float(v) for v in x]),
            y_opt=np.array([float(v) for v in y]),
            duality_gap=0.0,
            exact_value=value,
        )
    scale = max(1.0, max(abs(v) for r in rows for v in r))
    if gap > FLOAT_GAP_TOL * scale:
        raise NumericalFailure(f"duality gap {gap:.3e} exceeds tolerance {FLOAT_GAP_TOL * scale:.3e}")
    return MatrixGameSolution(
        value=float(value),
        x_opt=np.array(x),
        y_opt=np.array(y),
        duality_gap=float(gap),
    )
