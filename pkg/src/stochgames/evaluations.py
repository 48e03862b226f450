"""Stage-weight evaluations and the clock / effective-discount machinery.

An evaluation is a normalized sequence of nonnegative stage weights
theta_m (stages are 1-based).  Four families are provided:

* ``Discounted(lam)``   -- theta_m = lam (1-lam)^(m-1)
* ``Uniform(T)``        -- theta_m = 1/T for m <= T
* ``Power(alpha, T)``   -- theta_m proportional to (T-m+1)^(alpha-1), m <= T
* ``Explicit(weights)`` -- any finite nonnegative vector, normalized

Infinite-support families expose a truncation ``horizon`` chosen so the
discarded tail mass is at most ``TAIL_MASS``; stage loops elsewhere run to
``min(clock(t), horizon)``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ExhaustedEvaluation, GameFormatError, TOutOfRange

TAIL_MASS = 1e-9
_BLOCK = 1 << 20


class Evaluation:
    """Common interface; subclasses implement the per-family closed forms."""

    kind = "abstract"

    # -- scalar queries -------------------------------------------------
    def weight(self, m: int) -> float:
        raise NotImplementedError

    def suffix_sum(self, m: int) -> float:
        """Sum of theta_{m'} over m' >= m (m >= 1); suffix_sum(1) == 1."""
        raise NotImplementedError

    def partial_sum(self, m: int) -> float:
        """Sum of theta_{m'} over m' <= m."""
        if m <= 0:
            return 0.0
        return 1.0 - self.suffix_sum(m + 1)

    @property
    def horizon(self) -> int:
        """Last stage any loop needs to visit (tail mass <= TAIL_MASS beyond)."""
        raise NotImplementedError

    def norm_inf(self) -> float:
        """sup_m theta_m."""
        raise NotImplementedError

    def effective_discount(self, m: int) -> float:
        """lambda_m = theta_m / suffix_sum(m), in [0, 1]."""
        s = self.suffix_sum(m)
        if s <= 0.0:
            raise ExhaustedEvaluation(f"stage {m} is beyond the support ({self.describe()})")
        return min(1.0, max(0.0, self.weight(m) / s))

    def clock(self, t: float) -> int:
        """Least stage M with partial_sum(M) >= t; capped at the horizon.

        The float guess from the closed form is corrected by direct
        comparison with partial_sum so boundary cases are exact.
        """
        if not 0.0 <= t <= 1.0:
            raise TOutOfRange(f"t={t} outside [0, 1]")
        if t <= 0.0:
            return 1
        cap = self.horizon
        m = min(max(1, self._clock_guess(t)), cap)
        while m > 1 and self.partial_sum(m - 1) >= t:
            m -= 1
        while m < cap and self.partial_sum(m) < t:
            m += 1
        return m

    def _clock_guess(self, t: float) -> int:
        raise NotImplementedError

    def clock_grid(self, ts) -> np.ndarray:
        """clock() over a sorted grid of fractions (overridden where scalar
        clock queries are expensive)."""
        return np.array([self.clock(t) for t in ts], dtype=np.int64)

    # -- vector queries (stages m0 <= m < m1, 1-based) -------------------
    def weights_range(self, m0: int, m1: int) -> np.ndarray:
        raise NotImplementedError

    def discounts_range(self, m0: int, m1: int) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<Evaluation {self.describe()}>"


class Discounted(Evaluation):
    kind = "discounted"

    def __init__(self, lam: float):
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {lam}")
        self.lam = float(lam)

    def weight(self, m):
        return self.lam * (1.0 - self.lam) ** (m - 1)

    def suffix_sum(self, m):
        # geometric tail: sum_{m'>=m} lam (1-lam)^(m'-1) = (1-lam)^(m-1)
        return (1.0 - self.lam) ** (m - 1)

    @property
    def horizon(self):
        if self.lam == 1.0:
            return 1
        return max(1, math.ceil(math.log(TAIL_MASS) / math.log1p(-self.lam)))

    def norm_inf(self):
        return self.lam

    def effective_discount(self, m):
        return self.lam

    def _clock_guess(self, t):
        if self.lam == 1.0 or t >= 1.0:
            return self.horizon
        return math.ceil(math.log1p(-t) / math.log1p(-self.lam) - 1e-9)

    def weights_range(self, m0, m1):
        m = np.arange(m0, m1, dtype=float)
        return self.lam * np.exp((m - 1.0) * math.log1p(-self.lam)) if self.lam < 1.0 else (
            np.where(m == 1.0, 1.0, 0.0)
        )

    def discounts_range(self, m0, m1):
        return np.full(m1 - m0, self.lam)

    def describe(self):
        return f"discounted:{self.lam:g}"


class Uniform(Evaluation):
    kind = "uniform"

    def __init__(self, T: int):
        if T < 1:
            raise ValueError(f"horizon must be >= 1, got {T}")
        self.T = int(T)

    def weight(self, m):
        return 1.0 / self.T if 1 <= m <= self.T else 0.0

    def suffix_sum(self, m):
        return max(0, self.T - m + 1) / self.T

    def partial_sum(self, m):
        return min(max(m, 0), self.T) / self.T

    @property
    def horizon(self):
        return self.T

    def norm_inf(self):
        return 1.0 / self.T

    def effective_discount(self, m):
        if m > self.T:
            raise ExhaustedEvaluation(f"stage {m} > horizon {self.T}")
        return 1.0 / (self.T - m + 1)

    def _clock_guess(self, t):
        return math.ceil(t * self.T - 1e-9)

    def weights_range(self, m0, m1):
        m = np.arange(m0, m1)
        return np.where(m <= self.T, 1.0 / self.T, 0.0)

    def discounts_range(self, m0, m1):
        m = np.arange(m0, m1)
        rem = self.T - m + 1
        if (rem < 1).any():
            raise ExhaustedEvaluation(f"stage range [{m0}, {m1}) exceeds horizon {self.T}")
        return 1.0 / rem

    def describe(self):
        return f"uniform:{self.T}"


class Power(Evaluation):
    """theta_m proportional to (T-m+1)^(alpha-1), truncated at T, normalized.

    For alpha < 1 the weights grow toward the horizon, so the norm decays
    like alpha * T^(-alpha); a non-geometric vanishing family.  Partial
    sums of j^(alpha-1) are kept as block anchors so memory stays bounded
    for horizons in the tens of millions.
    """

    kind = "power"

    def __init__(self, alpha: float, T: int):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if T < 1:
            raise ValueError(f"horizon must be >= 1, got {T}")
        self.alpha = float(alpha)
        self.T = int(T)
        # anchors[b] = sum of j^(alpha-1) for 1 <= j <= b*_BLOCK (clipped to T)
        n_blocks = (self.T + _BLOCK - 1) // _BLOCK
        anchors = np.empty(n_blocks + 1)
        anchors[0] = 0.0
        total = 0.0
        for b in range(n_blocks):
            lo = b * _BLOCK + 1
            hi = min((b + 1) * _BLOCK, self.T)
            total += np.power(np.arange(lo, hi + 1, dtype=float), self.alpha - 1.0).sum()
            anchors[b + 1] = total
        self._anchors = anchors
        self.Z = total

    def _S(self, j: int) -> float:
        """Partial sum of i^(alpha-1) for i <= j (unnormalized)."""
        if j <= 0:
            return 0.0
        j = min(j, self.T)
        b = (j - 1) // _BLOCK
        lo = b * _BLOCK + 1
        rest = np.power(np.arange(lo, j + 1, dtype=float), self.alpha - 1.0).sum()
        return float(self._anchors[b] + rest)

    def weight(self, m):
        j = self.T - m + 1
        if j < 1:
            return 0.0
        return j ** (self.alpha - 1.0) / self.Z

    def suffix_sum(self, m):
        return self._S(self.T - m + 1) / self.Z

    @property
    def horizon(self):
        return self.T

    def norm_inf(self):
        return max(1.0, float(self.T) ** (self.alpha - 1.0)) / self.Z

    def _clock_guess(self, t):
        lo, hi = 1, self.T
        while lo < hi:
            mid = (lo + hi) // 2
            if self.partial_sum(mid) >= t:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def clock_grid(self, ts):
        # one forward sweep instead of per-point binary searches (each of
        # which would rebuild a block partial sum per probe)
        ts = np.asarray(ts, dtype=float)
        if (np.diff(ts) < 0).any():
            raise ValueError("grid must be sorted")
        out = np.empty(len(ts), dtype=np.int64)
        idx = 0
        while idx < len(ts) and ts[idx] <= 0.0:
            out[idx] = 1
            idx += 1
        acc = 0.0
        for lo in range(1, self.T + 1, _BLOCK):
            if idx >= len(ts):
                break
            hi = min(lo + _BLOCK - 1, self.T)
            cum = acc + np.cumsum(self.weights_range(lo, hi + 1))
            last = hi == self.T
            while idx < len(ts) and (ts[idx] <= cum[-1] or last):
                pos = int(np.searchsorted(cum, ts[idx]))
                out[idx] = min(lo + pos, self.T)
                idx += 1
            acc = cum[-1]
        out[idx:] = self.T
        return out

    def weights_range(self, m0, m1):
        j = self.T - np.arange(m0, m1, dtype=float) + 1.0
        if (j < 1).any():
            raise ExhaustedEvaluation(f"stage range [{m0}, {m1}) exceeds horizon {self.T}")
        return np.power(j, self.alpha - 1.0) / self.Z

    def discounts_range(self, m0, m1):
        j = self.T - np.arange(m0, m1) + 1
        if (j < 1).any():
            raise ExhaustedEvaluation(f"stage range [{m0}, {m1}) exceeds horizon {self.T}")
        pw = np.power(j.astype(float), self.alpha - 1.0)
        # suffix sums S(j) rebuilt from the block anchors plus one cumsum
        j_lo = int(j[-1])
        base = self._S(j_lo - 1)
        asc = np.power(np.arange(j_lo, int(j[0]) + 1, dtype=float), self.alpha - 1.0)
        S_asc = base + np.cumsum(asc)
        S = S_asc[::-1]
        return np.minimum(1.0, pw / S)

    def describe(self):
        return f"power:{self.alpha:g},{self.T}"


class Explicit(Evaluation):
    """A finite weight vector, normalized at construction.

    Fractions/ints normalize exactly; floats are renormalized unless the
    sum is already within 1e-12 of one, which makes renormalization
    idempotent.
    """

    kind = "explicit"

    def __init__(self, weights):
        ws = list(weights)
        if not ws:
            raise ValueError("weight vector must be nonempty")
        if all(isinstance(w, (int, Fraction)) and not isinstance(w, bool) for w in ws):
            fr = [Fraction(w) for w in ws]
            if any(w < 0 for w in fr):
                raise ValueError("weights must be nonnegative")
            total = sum(fr)
            if total == 0:
                raise ValueError("weights must not all be zero")
            arr = np.array([float(w / total) for w in fr])
        else:
            arr = np.asarray(ws, dtype=float)
            if (arr < 0).any() or not np.isfinite(arr).all():
                raise ValueError("weights must be finite and nonnegative")
            total = math.fsum(arr)
            if total <= 0:
                raise ValueError("weights must not all be zero")
            if abs(total - 1.0) > 1e-12:
                arr = arr / total
        self.weights = arr
        self._cum = np.cumsum(arr)
        self._cum[-1] = 1.0
        self._suffix = np.concatenate(([1.0], 1.0 - self._cum[:-1]))
        nz = np.nonzero(arr)[0]
        self._support_len = int(nz[-1]) + 1 if nz.size else 1

    def weight(self, m):
        return float(self.weights[m - 1]) if 1 <= m <= len(self.weights) else 0.0

    def suffix_sum(self, m):
        if m <= 1:
            return 1.0
        if m > len(self.weights):
            return 0.0
        return float(1.0 - self._cum[m - 2])

    @property
    def horizon(self):
        return self._support_len

    def norm_inf(self):
        return float(self.weights.max())

    def _clock_guess(self, t):
        if t >= 1.0:
            return self._support_len
        return int(np.searchsorted(self._cum, t - 1e-12, side="left")) + 1

    def weights_range(self, m0, m1):
        out = np.zeros(m1 - m0)
        lo, hi = max(m0, 1), min(m1, len(self.weights) + 1)
        if lo < hi:
            out[lo - m0 : hi - m0] = self.weights[lo - 1 : hi - 1]
        return out

    def discounts_range(self, m0, m1):
        if m1 - 1 > self._support_len:
            raise ExhaustedEvaluation(
                f"stage range [{m0}, {m1}) exceeds the support ({self._support_len})"
            )
        w = self.weights[m0 - 1 : m1 - 1]
        s = self._suffix[m0 - 1 : m1 - 1]
        return np.clip(w / s, 0.0, 1.0)

    def describe(self):
        return f"explicit:{len(self.weights)}"


def from_descriptor(desc: str) -> Evaluation:
    """Parse "discounted:<lam>", "uniform:<T>", "power:<alpha>,<T>" or "file:<path>"."""
    kind, _, arg = desc.partition(":")
    try:
        if kind == "discounted":
            return Discounted(float(arg))
        if kind == "uniform":
            return Uniform(int(arg))
        if kind == "power":
            alpha_s, t_s = arg.split(",")
            return Power(float(alpha_s), int(t_s))
        if kind == "file":
            weights = json.loads(Path(arg).read_text())
            if not isinstance(weights, list):
                raise GameFormatError(f"{arg}: expected a JSON array of weights")
            return Explicit(weights)
    except (ValueError, OSError) as exc:
        raise GameFormatError(f"bad evaluation descriptor {desc!r}: {exc}") from exc
    raise GameFormatError(
        f"unknown evaluation kind {kind!r} (expected discounted|uniform|power|file)"
    )


def family_for_norm(family: str, norm: float, alpha: float = 0.5) -> Evaluation:
    """Build an evaluation of the given family with sup-weight ~= norm."""
    if not 0 < norm <= 1:
        raise ValueError(f"norm target must lie in (0, 1], got {norm}")
    if family == "discounted":
        return Discounted(norm)
    if family == "uniform":
        return Uniform(max(1, round(1.0 / norm)))
    if family == "power":
        if alpha <= 1:
            T = max(1, round((alpha / norm) ** (1.0 / alpha)))
        else:
            T = max(1, round(alpha / norm))
        return Power(alpha, T)
    raise ValueError(f"unknown family {family!r}")
