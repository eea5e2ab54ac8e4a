"""Lattice points on spheres and in balls of Z^d.

Counts are exact integers throughout. ``shell_counts`` builds the table of
r_d(n) for all n up to a bound by convolving the one-dimensional square
indicator with itself d times; enumeration is a coordinate-by-coordinate
descent that prunes on the remaining squared-norm budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

#: default refusal threshold for explicit point enumeration
DEFAULT_POINT_CAP = 10**8

_INT64_SAFE = 2**62


class ShellCapError(MemoryError):
    """Raised when an enumeration would exceed the configured point cap."""


class CountOverflowError(OverflowError):
    pass


def _square_indicator(nmax: int, radius: int | None = None) -> np.ndarray:
    """r_1(m) for 0 <= m <= nmax, optionally restricted to |t| <= radius."""
    out = np.zeros(nmax + 1, dtype=np.int64)
    tmax = math.isqrt(nmax)
    if radius is not None:
        tmax = min(tmax, radius)
    out[0] = 1
    t = np.arange(1, tmax + 1)
    out[t * t] = 2
    return out


def _convolve_truncated(a: np.ndarray, b_sparse: np.ndarray, nmax: int) -> np.ndarray:
    # b_sparse is nonzero only at perfect squares; loop over those
    out = np.zeros(nmax + 1, dtype=a.dtype)
    for m in np.flatnonzero(b_sparse):
        m = int(m)
        out[m:] += a[: nmax + 1 - m] * int(b_sparse[m])
    return out


def restricted_shell_counts(d: int, nmax: int, radius: int | None = None) -> np.ndarray:
    """Array c with c[n] = #{y in Z^d : |y|^2 = n, max|y_i| <= radius}.

    ``radius=None`` means unrestricted, i.e. c[n] = r_d(n). Uses int64 when the
    crude bound (2*radius+1)^d fits, Python integers otherwise, so the result
    never wraps.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    r = math.isqrt(nmax) if radius is None else min(radius, math.isqrt(nmax))
    one = _square_indicator(nmax, r)
    if (2 * r + 1) ** d < _INT64_SAFE:
        acc = one.copy()
    else:
        acc = one.astype(object)
    for _ in range(d - 1):
        acc = _convolve_truncated(acc, one, nmax)
    return acc


@lru_cache(maxsize=64)
def _cached_counts(d: int, nmax: int) -> np.ndarray:
    c = restricted_shell_counts(d, nmax)
    c.flags.writeable = False
    return c


def shell_counts(d: int, nmax: int) -> np.ndarray:
    """r_d(n) for n = 0..nmax (read-only array)."""
    # round the cache key up so nearby requests share a table
    size = 1 << max(6, (nmax).bit_length())
    return _cached_counts(d, size)[: nmax + 1]


def shell_count(d: int, n: int) -> int:
    """Number of representations of n as an ordered sum of d squares."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    val = shell_counts(d, n)[n]
    return int(val)


def shell_count_reordered(dims: list[int], n: int) -> int:
    """r_d(n) computed by convolving blocks of dimensions in the given order.

    Used to check that the count does not depend on the convolution order.
    """
    acc = np.zeros(n + 1, dtype=object)
    acc[0] = 1
    for k in dims:
        block = restricted_shell_counts(k, n).astype(object)
        acc = np.convolve(acc, block)[: n + 1]
    return int(acc[n])


@dataclass(frozen=True)
class LatticeShell:
    d: int
    n: int
    points: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    @property
    def radius(self) -> float:
        return math.sqrt(self.n)

    def __len__(self) -> int:
        return self.count


@dataclass(frozen=True)
class Ball:
    d: int
    radius: float
    points: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def _descend(d: int, budget_max: int, exact: int | None) -> np.ndarray:
    """All integer d-vectors with |y|^2 <= budget_max (== exact if given)."""
    if d == 0:
        return np.zeros((1, 0), dtype=np.int64)
    R = math.isqrt(budget_max)
    pts = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([budget_max], dtype=np.int64)
    last = d - 1 if exact is not None else d
    xs = np.arange(-R, R + 1, dtype=np.int64)
    for _ in range(last):
        ok = xs[None, :] ** 2 <= rem[:, None]
        i, j = np.nonzero(ok)
        pts = np.concatenate([pts[i], xs[j][:, None]], axis=1)
        rem = rem[i] - xs[j] ** 2
    if exact is None:
        return pts
    # final coordinate is forced: +-sqrt(rem) when rem is a perfect square
    r = np.floor(np.sqrt(rem.astype(np.float64))).astype(np.int64)
    r += (r + 1) ** 2 <= rem
    r -= r * r > rem
    sq = r * r == rem
    pts, r = pts[sq], r[sq]
    pos = np.concatenate([pts, r[:, None]], axis=1)
    nz = r > 0
    neg = np.concatenate([pts[nz], -r[nz][:, None]], axis=1)
    out = np.concatenate([pos, neg], axis=0)
    order = np.lexsort(out.T[::-1])
    return out[order]


def enumerate_shell(d: int, n: int, cap: int = DEFAULT_POINT_CAP) -> LatticeShell:
    """Every y in Z^d with |y|^2 = n, sorted lexicographically."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    expected = shell_count(d, n)
    if expected > cap:
        raise ShellCapError(f"shell (d={d}, n={n}) has {expected} points > cap {cap}")
    if n == 0:
        pts = np.zeros((1, d), dtype=np.int64)
    else:
        pts = _descend(d, n, exact=n)
    if pts.shape[0] != expected:  # pragma: no cover - internal consistency
        raise AssertionError("enumeration disagrees with shell_count")
    pts.flags.writeable = False
    return LatticeShell(d, n, pts)


@lru_cache(maxsize=256)
def cached_shell(d: int, n: int) -> LatticeShell:
    return enumerate_shell(d, n)


def enumerate_ball(d: int, radius: float, cap: int = DEFAULT_POINT_CAP) -> Ball:
    """All y in Z^d with |y| <= radius."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    nmax = math.floor(radius * radius + 1e-9)
    expected = int(np.sum(shell_counts(d, nmax), dtype=object))
    if expected > cap:
        raise ShellCapError(f"ball of radius {radius} has {expected} points > cap {cap}")
    pts = _descend(d, nmax, exact=None)
    pts.flags.writeable = False
    return Ball(d, float(radius), pts)


@dataclass(frozen=True)
class GrowthFit:
    d: int
    slope: float
    intercept: float
    n_used: int
    outside_asymptotic_range: bool


def shell_growth_fit(d: int, n_min: int, n_max: int) -> GrowthFit:
    """Least-squares slope of log N(lambda) against log lambda on nonempty shells."""
    if n_min < 1:
        n_min = 1
    counts = shell_counts(d, n_max)
    ns = np.arange(n_min, n_max + 1)
    c = np.asarray(counts[n_min:n_max + 1], dtype=np.float64)
    keep = c > 0
    if keep.sum() < 3:
        raise ValueError("fewer than 3 nonempty shells in range; fit is degenerate")
    x = 0.5 * np.log(ns[keep])
    y = np.log(c[keep])
    slope, intercept = np.polyfit(x, y, 1)
    return GrowthFit(d, float(slope), float(intercept), int(keep.sum()), d < 5)
