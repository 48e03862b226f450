"""Exact propagation and simulation of the stage-indexed strategy chain.

At stage m of an evaluation theta, both players use the stationary
profile at the effective discount lambda_m; this induces a
time-inhomogeneous Markov chain over states.  ``propagate_exact`` pushes
the state distribution through every stage (chunked, jitted) and records
the cumulated payoff gamma(t), the state marginal at the clock stage, and
the weighted occupation vector on a grid of game fractions.  ``simulate``
samples paths of the same chain by inverse-CDF jump times, so runs cost
O(number of jumps) rather than O(horizon).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateWindow, WindowOutOfRange
from .evaluations import Evaluation
from .game import GameSpec, MarkovStrategyPair

CHUNK = 1 << 20
DEFAULT_GRID_POINTS = 101
_SIM_TABLE_BYTES = 768 << 20


def default_grid(n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if n_points < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(0.0, 1.0, n_points)


@dataclass(frozen=True)
class TrajectoryCurve:
    """Sampled map t -> (gamma(t), state marginal, occupation mass)."""

    grid: np.ndarray
    gamma: np.ndarray
    marginal: np.ndarray
    occupation: np.ndarray
    meta: dict = field(default_factory=dict)

    def sup_distance(self, other: "TrajectoryCurve") -> float:
        if self.grid.shape != other.grid.shape or not np.allclose(self.grid, other.grid):
            raise ValueError("curves must share a grid")
        return float(np.abs(self.gamma - other.gamma).max())


def _stage_chunks(game: GameSpec, strategies: MarkovStrategyPair, theta: Evaluation,
                  m0: int, m1: int, with_payoff: bool = True):
    """Yield (Q, w, pay) arrays for stages m0 <= m < m1, CHUNK stages at a time."""
    trans = game.transition_array
    pay_t = game.payoff_array
    for lo in range(m0, m1, CHUNK):
        hi = min(lo + CHUNK, m1)
        lams = theta.discounts_range(lo, hi)
        w = theta.weights_range(lo, hi)
        X, Y = strategies.profile_grid(lams)
        Q = np.einsum("bki,bkj,kijl->bkl", X, Y, trans, optimize=True)
        Q = np.ascontiguousarray(Q)
        if with_payoff:
            pay = np.ascontiguousarray(np.einsum("bki,bkj,kij->bk", X, Y, pay_t, optimize=True))
        else:
            pay = np.zeros((hi - lo, game.n_states))
        yield Q, w, pay


def stage_kernel(game: GameSpec, strategies: MarkovStrategyPair, theta: Evaluation,
                 m: int) -> np.ndarray:
    """The stochastic matrix Q_m induced at stage m."""
    Q, _, _ = next(_stage_chunks(game, strategies, theta, m, m + 1, with_payoff=False))
    return Q[0]


def _advance_range(game, strategies, theta, m0, m1, d, occ):
    """Push d/occ through stages m0 <= m < m1; returns the gamma contribution.

    Leading-term strategy pairs run through the fused kernel (profiles
    rebuilt per stage from the expansion scalars); anything else goes
    through materialized per-stage kernels.
    """
    if m1 <= m0:
        return 0.0
    gamma = 0.0
    lt = strategies.leading_terms
    if lt is not None:
        c1, e1, c2, e2 = lt
        trans = np.ascontiguousarray(game.transition_array)
        pay = np.ascontiguousarray(game.payoff_array)
        for lo in range(m0, m1, CHUNK):
            hi = min(lo + CHUNK, m1)
            lams = np.ascontiguousarray(theta.discounts_range(lo, hi))
            w = np.ascontiguousarray(theta.weights_range(lo, hi))
            gamma += _kernels.advance_leading(lams, w, c1, e1, c2, e2, trans, pay, d, occ)
        return gamma
    for Q, w, pay in _stage_chunks(game, strategies, theta, m0, m1):
        gamma += _kernels.advance_chunk(Q, w, pay, d, occ)
    return gamma


def propagate_exact(game: GameSpec, strategies: MarkovStrategyPair, theta: Evaluation,
                    grid=None, initial_state: int | None = None) -> TrajectoryCurve:
    """Exact cumulated-payoff curve by propagating the state distribution.

    gamma(t) sums theta_m <d_m, g_m> over stages m <= clock(t) (capped at
    the truncation horizon); the marginal at t is the distribution at the
    clock stage itself, before its transition.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if (np.diff(grid) < 0).any():
        raise ValueError("grid must be sorted")
    k0 = game.initial_state if initial_state is None else initial_state
    H = theta.horizon
    marks = np.minimum(theta.clock_grid(grid), H)

    n = game.n_states
    d = np.zeros(n)
    d[k0] = 1.0
    occ = np.zeros(n)
    gamma = 0.0

    out_gamma = np.empty(len(grid))
    out_marg = np.empty((len(grid), n))
    out_occ = np.empty((len(grid), n))

    cursor = 1
    snap: dict[int, tuple] = {}
    for gi, M in enumerate(marks):
        M = int(M)
        if M < cursor:
            g_s, m_s, o_s = snap[M]
            out_gamma[gi], out_marg[gi], out_occ[gi] = g_s, m_s, o_s
            continue
        gamma += _advance_range(game, strategies, theta, cursor, M, d, occ)
        marg = d.copy()
        gamma += _advance_range(game, strategies, theta, M, M + 1, d, occ)
        cursor = M + 1
        out_gamma[gi] = gamma
        out_marg[gi] = marg
        out_occ[gi] = occ.copy()
        snap[M] = (gamma, marg, occ.copy())

    meta = {
        "game": game.name,
        "theta": theta.describe(),
        "mode": strategies.description,
        "seed": "",
        "states": list(game.state_names),
    }
    return TrajectoryCurve(grid, out_gamma, out_marg, out_occ, meta)


@dataclass(frozen=True)
class SimulationBatch:
    """Monte Carlo paths sampled at grid times, plus per-interval jump counts.

    ``states[r, g]`` is run r's state at stage clock(grid[g]);
    ``jump_counts[r, g]`` counts state changes at stages in
    [clock(grid[g]), clock(grid[g+1])).
    """

    n_runs: int
    seed: int
    grid: np.ndarray
    marks: np.ndarray
    states: np.ndarray
    jump_counts: np.ndarray

    def state_frequencies(self) -> np.ndarray:
        """Empirical state distribution per grid point, shape (len(grid), n_states)."""
        n = int(self.states.max()) + 1
        freq = np.zeros((self.states.shape[1], n))
        for g in range(self.states.shape[1]):
            freq[g] = np.bincount(self.states[:, g], minlength=n) / self.n_runs
        return freq


def _jump_tables(game, strategies, theta, H):
    """Per-stage log-survival cumsums and jump-destination CDFs."""
    n = game.n_states
    need = (H + 1) * n * 8 + H * n * n * 8
    if need > _SIM_TABLE_BYTES:
        raise ValueError(
            f"simulation tables for horizon {H} would need {need >> 20} MiB; "
            "use propagate_exact for such fine evaluations"
        )
    D = np.empty((H + 1, n))
    D[0] = 0.0
    dest_cum = np.empty((H, n, n))
    lo = 1
    for Q, _, _ in _stage_chunks(game, strategies, theta, 1, H + 1, with_payoff=False):
        hi = lo + Q.shape[0]
        stay = np.clip(np.einsum("bii->bi", Q), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            D[lo:hi] = -np.log(stay)
        off = Q.copy()
        idx = np.arange(n)
        off[:, idx, idx] = 0.0
        total = off.sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cdf = np.cumsum(off, axis=2) / total
        cdf[np.isnan(cdf)] = 1.0
        dest_cum[lo - 1 : hi - 1] = cdf
        lo = hi
    np.cumsum(D, axis=0, out=D)
    return np.ascontiguousarray(D.T), dest_cum


def simulate(game: GameSpec, strategies: MarkovStrategyPair, theta: Evaluation,
             n_runs: int, seed: int, grid=None, initial_state: int | None = None) -> SimulationBatch:
    """Sample i.i.d. paths of the stage chain; reproducible for a fixed seed.

    Run r draws from its own substream seeded with seed XOR r, so a run's
    path does not depend on the batch size.  Jump times come from inverse
    CDF on the cumulative per-stage survival products, one draw per jump.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    k0 = game.initial_state if initial_state is None else initial_state
    H = theta.horizon
    marks = np.array([min(theta.clock(t), H) for t in grid], dtype=np.int64)

    D_cols, dest_cum = _jump_tables(game, strategies, theta, H)
    gens = [np.random.default_rng(np.uint64(seed) ^ np.uint64(r)) for r in range(n_runs)]

    state = np.full(n_runs, k0, dtype=np.int64)
    pos = np.ones(n_runs, dtype=np.int64)
    active = np.ones(n_runs, dtype=bool)
    jr, js, jd = [], [], []

    while active.any():
        idx = np.nonzero(active)[0]
        u = np.array([gens[r].random() for r in idx])
        target = D_cols[state[idx], pos[idx] - 1] - np.log(u)
        mstar = np.empty(len(idx), dtype=np.int64)
        for s in np.unique(state[idx]):
            sel = state[idx] == s
            mstar[sel] = np.searchsorted(D_cols[s], target[sel], side="right")
        done = mstar > H
        active[idx[done]] = False
        hop = idx[~done]
        if hop.size:
            ms = mstar[~done]
            u2 = np.array([gens[r].random() for r in hop])
            cdf = dest_cum[ms - 1, state[hop]]
            dest = (cdf < u2[:, None]).sum(axis=1)
            jr.append(hop)
            js.append(ms)
            jd.append(dest)
            state[hop] = dest
            pos[hop] = ms + 1
            active[hop] = pos[hop] <= H

    if jr:
        jr = np.concatenate(jr)
        js = np.concatenate(js)
        jd = np.concatenate(jd)
        order = np.lexsort((js, jr))
        jr, js, jd = jr[order], js[order], jd[order]
    else:
        jr = np.empty(0, dtype=np.int64)
        js = np.empty(0, dtype=np.int64)
        jd = np.empty(0, dtype=np.int64)

    key = jr * np.int64(H + 2) + js
    runs = np.arange(n_runs, dtype=np.int64)
    offsets = np.searchsorted(key, runs * np.int64(H + 2))

    def pos_upto(stage_excl):
        # number of jump records per run with stage < stage_excl
        return np.searchsorted(key, runs * np.int64(H + 2) + stage_excl) - offsets

    G = len(grid)
    states_out = np.empty((n_runs, G), dtype=np.int64)
    counts_at_mark = np.empty((n_runs, G), dtype=np.int64)
    for g in range(G):
        M = int(marks[g])
        cnt = pos_upto(M)  # jumps at stages < M, i.e. affecting the state at stage M
        has = cnt > 0
        states_out[:, g] = k0
        states_out[has, g] = jd[offsets[has] + cnt[has] - 1]
        counts_at_mark[:, g] = cnt
    jump_counts = np.diff(counts_at_mark, axis=1)

    return SimulationBatch(
        n_runs=n_runs, seed=seed, grid=grid, marks=marks,
        states=states_out, jump_counts=jump_counts,
    )


def empirical_generator(game: GameSpec, strategies: MarkovStrategyPair, theta: Evaluation,
                        t: float, h: float) -> np.ndarray:
    """(P_{t,t+h} - Id) / h from the exact stage-kernel product over the window.

    The window product runs over stages clock(t) .. clock(t+h) inclusive;
    compare against A / (1 - t) for critical kernels.
    """
    if not (0.0 <= t and t < t + h and t + h < 1.0):
        raise WindowOutOfRange(f"need 0 <= t < t+h < 1, got t={t}, h={h}")
    m0 = theta.clock(t)
    m1 = theta.clock(t + h)
    if m0 == m1:
        raise DegenerateWindow(f"clock({t}) == clock({t + h}) == {m0}; h is below stage resolution")
    P = np.eye(game.n_states)
    for Q, _, _ in _stage_chunks(game, strategies, theta, m0, m1 + 1, with_payoff=False):
        _kernels.fold_product(Q, P)
    return (P - np.eye(game.n_states)) / h


def write_curve_csv(curve: TrajectoryCurve, dest) -> None:
    """CSV with '#' metadata lines; column layout t, gamma, marginals, occupations."""
    states = curve.meta.get("states", [str(i) for i in range(curve.marginal.shape[1])])
    buf = io.StringIO()
    for key in ("game", "theta", "mode", "seed"):
        buf.write(f"# {key}: {curve.meta.get(key, '')}\n")
    cols = ["t", "gamma"]
    cols += [f"marginal_{s}" for s in states]
    cols += [f"occupation_{s}" for s in states]
    buf.write(",".join(cols) + "\n")
    for i, t in enumerate(curve.grid):
        row = [repr(float(t)), repr(float(curve.gamma[i]))]
        row += [repr(float(v)) for v in curve.marginal[i]]
        row += [repr(float(v)) for v in curve.occupation[i]]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        from pathlib import Path

        Path(dest).write_text(text)


def read_curve_csv(path) -> TrajectoryCurve:
    """Inverse of write_curve_csv (used to compare emitted curves)."""
    from pathlib import Path

    meta = {}
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows)
    n = (data.shape[1] - 2) // 2
    meta["states"] = [c[len("marginal_"):] for c in header[2 : 2 + n]]
    return TrajectoryCurve(data[:, 0], data[:, 1], data[:, 2 : 2 + n], data[:, 2 + n :], meta)
