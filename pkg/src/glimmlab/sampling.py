"""Equidistributed sampling sequences and exact star-discrepancy windows.

The discrepancy of a window {theta_m, ..., theta_{n-1}} is

    D_{m,n} = sup_{lam in [0,1]} | lam - (1/k) #{l : theta_l <= lam} |,  k = n-m,

computed exactly from order statistics: with the window sorted ascending,
D = max_i max(|x_(i) - (i-1)/k|, |x_(i) - i/k|).  Good sequences keep
k * D_{m,n} growing only like log k over every window; the verification scan
normalizes by (2 + log2 k) and reports the worst window.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRange

try:
    from numba import njit, prange
    _HAVE_NUMBA = True
except ImportError:          # pragma: no cover - numba is a hard dependency
    _HAVE_NUMBA = False


def van_der_corput(i: int) -> float:
    """i-th term (i >= 1) of the base-2 bit-reversal sequence, in [0,1)."""
    if i < 1:
        raise ValueError("van der Corput index starts at 1")
    x, denom = 0.0, 1.0
    while i:
        denom *= 2.0
        x += (i & 1) / denom
        i >>= 1
    return x


@dataclass(frozen=True)
class SamplingSequence:
    """Index-addressable sequence theta_0, theta_1, ... in [0,1)."""
    kind: str                    # "vdc" | "pseudorandom" | "explicit"
    seed: int = 0
    explicit: tuple = ()

    def theta(self, ell: int) -> float:
        if ell < 0:
            raise ValueError("sequence index must be >= 0")
        if self.kind == "vdc":
            return van_der_corput(ell + 1)
        if self.kind == "pseudorandom":
            return float(np.random.default_rng([self.seed, ell]).random())
        if self.kind == "explicit":
            return float(self.explicit[ell % len(self.explicit)])
        raise ValueError(f"unknown sequence kind '{self.kind}'")

    def window(self, m: int, n: int) -> np.ndarray:
        return np.array([self.theta(ell) for ell in range(m, n)])


def vdc_sequence() -> SamplingSequence:
    return SamplingSequence(kind="vdc")


def pseudorandom_sequence(seed: int) -> SamplingSequence:
    return SamplingSequence(kind="pseudorandom", seed=seed)


def explicit_sequence(values) -> SamplingSequence:
    return SamplingSequence(kind="explicit", explicit=tuple(float(v) for v in values))


@dataclass(frozen=True)
class DiscrepancyReport:
    m: int
    n: int
    value: float                 # D_{m,n}
    argmax: float                # lambda attaining (or approaching) the sup
    normalized: float            # D * (n-m) / (2 + log2(n-m))


def discrepancy(seq: SamplingSequence, m: int, n: int) -> DiscrepancyReport:
    if not 0 <= m < n:
        raise EmptyRange(f"need 0 <= m < n, got m={m}, n={n}")
    x = np.sort(seq.window(m, n))
    k = n - m
    i = np.arange(1, k + 1)
    lo = np.abs(x - (i - 1) / k)
    hi = np.abs(x - i / k)
    if lo.max() >= hi.max():
        j = int(np.argmax(lo))
    else:
        j = int(np.argmax(hi))
    d = float(max(lo.max(), hi.max()))
    return DiscrepancyReport(m=m, n=n, value=d, argmax=float(x[j]),
                             normalized=d * k / (2.0 + np.log2(k)))


def _scan_python(theta, m_values, n_max):
    best = -1.0
    best_m = best_n = 0
    for m in m_values:
        buf = np.empty(n_max - m)
        k = 0
        for n in range(m + 1, n_max + 1):
            x = theta[n - 1]
            j = np.searchsorted(buf[:k], x)
            buf[j + 1:k + 1] = buf[j:k]
            buf[j] = x
            k += 1
            i = np.arange(1, k + 1)
            d = max(np.abs(buf[:k] - (i - 1) / k).max(),
                    np.abs(buf[:k] - i / k).max())
            ratio = d * k / (2.0 + np.log2(k))
            if ratio > best:
                best, best_m, best_n = ratio, m, n
    return best, best_m, best_n


if _HAVE_NUMBA:
    @njit(parallel=True, cache=True)
    def _scan_numba(theta, m_values, n_max):        # pragma: no cover - compiled
        M = len(m_values)
        best = np.zeros(M)
        best_n = np.zeros(M, dtype=np.int64)
        for mi in prange(M):
            m = m_values[mi]
            buf = np.empty(n_max - m)
            k = 0
            loc_best = -1.0
            loc_n = 0
            for n in range(m + 1, n_max + 1):
                x = theta[n - 1]
                j = k
                while j > 0 and buf[j - 1] > x:
                    buf[j] = buf[j - 1]
                    j -= 1
                buf[j] = x
                k += 1
                inv = 1.0 / k
                dmax = 0.0
                for i in range(k):
                    a = abs(buf[i] - i * inv)
                    b = abs(buf[i] - (i + 1) * inv)
                    if a > dmax:
                        dmax = a
                    if b > dmax:
                        dmax = b
                ratio = dmax * k / (2.0 + np.log2(k))
                if ratio > loc_best:
                    loc_best = ratio
                    loc_n = n
            best[mi] = loc_best
            best_n[mi] = loc_n
        return best, best_n


@dataclass(frozen=True)
class BoundReport:
    n_max: int
    worst_ratio: float
    argmax_m: int
    argmax_n: int
    exhaustive: bool


def verify_discrepancy_bound(seq: SamplingSequence, n_max: int,
                             exhaustive_cap: int = 4096) -> BoundReport:
    """Worst normalized discrepancy ratio over windows 1 <= m < n <= n_max.

    Exhaustive up to `exhaustive_cap`; beyond that, the start indices m are
    subsampled on a stride (every window length still appears).
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    theta = np.array([seq.theta(ell) for ell in range(1, n_max)])
    exhaustive = n_max <= exhaustive_cap
    if exhaustive:
        m_values = np.arange(1, n_max, dtype=np.int64)
    else:
        stride = int(np.ceil((n_max - 1) / exhaustive_cap))
        m_values = np.arange(1, n_max, stride, dtype=np.int64)

    # theta[i] holds theta_{i+1}; windows are theta_m .. theta_{n-1}
    if _HAVE_NUMBA and n_max > 256:
        best, best_n = _scan_numba(theta, m_values - 1, n_max - 1)
        mi = int(np.argmax(best))
        return BoundReport(n_max=n_max, worst_ratio=float(best[mi]),
                           argmax_m=int(m_values[mi]),
                           argmax_n=int(best_n[mi]) + 1,
                           exhaustive=exhaustive)
    best, bm, bn = _scan_python(theta, m_values - 1, n_max - 1)
    return BoundReport(n_max=n_max, worst_ratio=float(best), argmax_m=bm + 1,
                       argmax_n=bn + 1, exhaustive=exhaustive)
