"""Discrete spherical averages, maximal operators, norms and norm estimators.

For box geometry the average of f supported in [o, o+m) is supported in
[o-R, o+m+R) with R = floor(sqrt(n)); outputs live on that enlarged box. On a
torus the average is the periodic one. Direct scatter and FFT convolution are
both available; ``method="auto"`` picks by predicted operation count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .grid import GeometryError, GridFunction
from .lattice import cached_shell, shell_count, shell_counts


@dataclass(frozen=True)
class RadiusSet:
    """Squared radii n with Lambda <= sqrt(n) < 2 Lambda."""

    Lambda: int

    def __post_init__(self):
        if self.Lambda < 1 or self.Lambda & (self.Lambda - 1):
            raise ValueError("Lambda must be a power of two")

    @property
    def squared_radii(self) -> range:
        return range(self.Lambda**2, 4 * self.Lambda**2)

    def nonempty(self, d: int) -> list[int]:
        counts = shell_counts(d, 4 * self.Lambda**2)
        return [n for n in self.squared_radii if counts[n] > 0]


def _check_shell(d: int, n: int, f: GridFunction):
    if f.d != d:
        raise GeometryError(f"function has dimension {f.d}, shell has dimension {d}")
    if shell_count(d, n) == 0:
        raise ValueError(f"shell |y|^2 = {n} is empty in dimension {d}; average undefined")


def _fft_cost(shape) -> float:
    P = float(np.prod(shape))
    return 3 * P * max(1.0, math.log2(P)) * 5


def _scatter(out: np.ndarray, flat_idx: np.ndarray, w: np.ndarray):
    size = out.size
    if np.iscomplexobj(w):
        acc = np.bincount(flat_idx, weights=w.real, minlength=size) + \
            1j * np.bincount(flat_idx, weights=w.imag, minlength=size)
    else:
        acc = np.bincount(flat_idx, weights=w, minlength=size)
    out += acc.reshape(out.shape)


def _direct_box(f: GridFunction, pts: np.ndarray, out_shape, R: int) -> np.ndarray:
    idx = np.argwhere(f.values != 0)
    vals = f.values[tuple(idx.T)]
    out = np.zeros(out_shape, dtype=np.result_type(f.values.dtype, float))
    if len(idx) == 0:
        return out
    strides = np.array([int(np.prod(out_shape[i + 1:])) for i in range(len(out_shape))])
    chunk = max(1, 4_000_000 // len(pts))
    for s in range(0, len(idx), chunk):
        # output index of x + y where x runs over support, y over shell
        pos = idx[s:s + chunk, None, :] + pts[None, :, :] + R
        flat = (pos @ strides).ravel()
        w = np.repeat(vals[s:s + chunk], len(pts))
        _scatter(out, flat, w)
    return out


def _direct_torus(f: GridFunction, pts: np.ndarray) -> np.ndarray:
    M = f.side
    idx = np.argwhere(f.values != 0)
    vals = f.values[tuple(idx.T)]
    out = np.zeros(f.shape, dtype=np.result_type(f.values.dtype, float))
    strides = np.array([M ** (f.d - 1 - i) for i in range(f.d)])
    chunk = max(1, 4_000_000 // len(pts))
    for s in range(0, len(idx), chunk):
        pos = (idx[s:s + chunk, None, :] + pts[None, :, :]) % M
        _scatter(out, (pos @ strides).ravel(), np.repeat(vals[s:s + chunk], len(pts)))
    return out


def _kernel_torus(pts: np.ndarray, M: int, d: int) -> np.ndarray:
    K = np.zeros((M,) * d)
    strides = np.array([M ** (d - 1 - i) for i in range(d)])
    _scatter(K, ((pts % M) @ strides), np.ones(len(pts)))
    return K


def _fft_conv_torus(vals: np.ndarray, K: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(vals):
        return np.fft.ifftn(np.fft.fftn(vals) * np.fft.fftn(K))
    axes = tuple(range(vals.ndim))
    return np.fft.irfftn(np.fft.rfftn(vals) * np.fft.rfftn(K), s=vals.shape, axes=axes)


def apply_average(f: GridFunction, d: int, n: int, method: str = "auto") -> GridFunction:
    """(A f)(x) = N^{-1} sum_{|y|^2 = n} f(x - y)."""
    _check_shell(d, n, f)
    shell = cached_shell(d, n)
    pts, N = shell.points, shell.count
    nnz = int(np.count_nonzero(f.values))
    if f.periodic:
        M = f.side
        if method == "auto":
            method = "direct" if nnz * N < _fft_cost(f.shape) else "fft"
        if method == "direct":
            out = _direct_torus(f, pts)
        elif method == "fft":
            out = _fft_conv_torus(f.values, _kernel_torus(pts, M, d))
        else:
            raise ValueError(f"unknown method {method!r}")
        return f.with_values(out / N)
    R = math.isqrt(n)
    out_shape = tuple(s + 2 * R for s in f.shape)
    origin = tuple(o - R for o in f.origin)
    if method == "auto":
        method = "direct" if nnz * N < _fft_cost(out_shape) else "fft"
    if method == "direct":
        out = _direct_box(f, pts, out_shape, R)
    elif method == "fft":
        # embed in a torus of side >= m + 2R per axis so nothing wraps
        Ms = out_shape
        pad = np.zeros(Ms, dtype=f.values.dtype)
        pad[tuple(slice(0, s) for s in f.shape)] = f.values
        K = np.zeros(Ms)
        strides = np.array([int(np.prod(Ms[i + 1:])) for i in range(d)])
        _scatter(K, ((pts % np.array(Ms)) @ strides), np.ones(len(pts)))
        conv = _fft_conv_torus(pad, K)
        # conv[j] = sum f[i] K[j - i]; the output at lattice x has index x - o + R
        out = np.roll(conv, shift=(R,) * d, axis=tuple(range(d)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction(out / N, origin)


def average_via_symbol(f: GridFunction, n: int) -> GridFunction:
    """Torus average computed by multiplying the DFT of f by the exact shell symbol."""
    from .symbols import eval_symbol_a_exact

    if not f.periodic:
        raise GeometryError("symbol path needs a torus")
    M, d = f.side, f.d
    fr = np.fft.fftfreq(M)
    X = np.stack(np.meshgrid(*([fr] * d), indexing="ij"), axis=-1).reshape(-1, d)
    m = eval_symbol_a_exact(n, X).reshape((M,) * d)
    out = np.fft.ifftn(np.fft.fftn(f.values) * m)
    return f.with_values(out if np.iscomplexobj(f.values) else out.real)


def _embed(g: GridFunction, origin, shape) -> np.ndarray:
    return g.restrict_to_box(origin, shape).values


def _sup_over(f: GridFunction, d: int, radii) -> GridFunction:
    radii = [n for n in radii if shell_count(d, n) > 0]
    if not radii:
        raise ValueError("no nonempty shells in the radius set")
    if f.periodic:
        out = np.zeros(f.shape)
        for n in radii:
            np.maximum(out, np.abs(apply_average(f, d, n).values), out=out)
        return f.with_values(out)
    R = math.isqrt(max(radii))
    origin = tuple(o - R for o in f.origin)
    shape = tuple(s + 2 * R for s in f.shape)
    out = np.zeros(shape)
    for n in radii:
        A = apply_average(f, d, n)
        np.maximum(out, np.abs(_embed(A, origin, shape)), out=out)
    return GridFunction(out, origin)


def maximal_dyadic(f: GridFunction, Lambda: int) -> GridFunction:
    """sup over Lambda <= lambda < 2 Lambda of |A_lambda f| (empty shells skipped)."""
    return _sup_over(f, f.d, RadiusSet(Lambda).squared_radii)


def maximal_full(f: GridFunction, Lambda_max: int) -> GridFunction:
    """sup over 1 <= lambda^2 <= Lambda_max^2 of |A_lambda f|."""
    if Lambda_max < 1:
        raise ValueError("Lambda_max must be >= 1")
    return _sup_over(f, f.d, range(1, Lambda_max**2 + 1))


def _box_sums(S: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Sums over [lo, hi) per axis from the zero-led summed-area table S (broadcasting)."""
    d = S.ndim
    tot = 0.0
    for corner in range(2**d):
        idx, sign = [], 1
        for i in range(d):
            if corner >> i & 1:
                idx.append(hi[i])
            else:
                idx.append(lo[i])
                sign = -sign
        tot = tot + sign * S[tuple(idx)]
    return tot


def summed_area(a: np.ndarray) -> np.ndarray:
    S = np.pad(a, [(1, 0)] * a.ndim)
    for ax in range(a.ndim):
        S = np.cumsum(S, axis=ax)
    return S


def hl_maximal(f: GridFunction) -> GridFunction:
    """sup over centred cubes x + [-r, r]^d of the average of |f|, on f's own grid."""
    a = np.abs(f.values).astype(float)
    d = f.d
    if f.periodic:
        M = f.side
        rmax = (M - 1) // 2
        P = np.pad(a, [(rmax, rmax)] * d, mode="wrap")
        off = rmax
    else:
        rmax = max(f.shape)
        P = np.pad(a, [(rmax, rmax)] * d)
        off = rmax
    S = summed_area(P)
    grids = np.indices(f.shape) + off
    out = np.zeros(f.shape)
    for r in range(rmax + 1):
        lo = grids - r
        hi = grids + r + 1
        avg = _box_sums(S, lo, hi) / (2 * r + 1) ** d
        np.maximum(out, avg, out=out)
    return f.with_values(out)


def lp_norm(f, p: float) -> float:
    vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(vals)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    return float(m * np.sum((a / m) ** p) ** (1 / p))


def weighted_l2_norm(f: GridFunction, w) -> float:
    """(sum |f|^2 w)^{1/2}; ``w`` is a GridFunction on the same geometry, or a callable on points."""
    if callable(w) and not isinstance(w, GridFunction):
        pts = np.stack(np.meshgrid(*f.coords(), indexing="ij"), axis=-1)
        wv = w(pts)
    else:
        if not f.same_geometry(w):
            raise GeometryError("weight and function live on different grids")
        wv = w.values
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * wv)))


# --- analytic delta path ----------------------------------------------------

def dyadic_delta_norm(d: int, Lambda: int, rprime: float, exact: bool = False):
    """||sup_{Lambda <= lambda < 2 Lambda} A_lambda delta_0||_{r'} from shell counts.

    Each point of an admissible shell sees exactly one radius, so the r'-th
    power of the norm is sum_n N(n)^{1 - r'}. With ``exact`` and integer r',
    returns the r'-th power as a Fraction.
    """
    counts = shell_counts(d, 4 * Lambda**2)[Lambda**2:4 * Lambda**2]
    counts = counts[counts > 0]
    if math.isinf(rprime):
        return 1.0 / float(counts.min())
    if exact:
        if rprime != int(rprime):
            raise ValueError("exact path needs an integer r'")
        return sum(Fraction(1, int(N) ** (int(rprime) - 1)) for N in counts)
    Ns = counts.astype(np.float64)
    return float(np.sum(Ns ** (1.0 - rprime)) ** (1.0 / rprime))


# --- empirical operator norm --------------------------------------------------

def make_operator(tag) -> Callable[[GridFunction], GridFunction]:
    """Operator from a tag: ``identity``, ``average:n``, ``dyadic:Lambda``, ``full:Lambda``."""
    if callable(tag):
        return tag
    kind, _, arg = str(tag).partition(":")
    if kind == "identity":
        return lambda f: f
    if kind == "average":
        return lambda f: apply_average(f, f.d, int(arg))
    if kind == "dyadic":
        return lambda f: maximal_dyadic(f, int(arg))
    if kind == "full":
        return lambda f: maximal_full(f, int(arg))
    raise ValueError(f"unknown operator tag {tag!r}")


def default_corpus(d: int, Lambda: int, trials: int = 2, seed: int = 0,
                   side: int | None = None) -> list[tuple[str, GridFunction]]:
    """delta_0, the shell 1_{|x| = Lambda}, small balls and random sign patterns."""
    side = side or max(2, Lambda)
    corpus = [("delta", GridFunction.delta(d)),
              ("shell", GridFunction.shell_indicator(d, Lambda * Lambda))]
    for rad in (1, Lambda):
        corpus.append((f"ball{rad}", GridFunction.ball_indicator(d, rad)))
    for t in range(trials):
        corpus.append((f"random{t}", GridFunction.random(d, side, seed + t,
                                                         corner=(-(side // 2),) * d)))
    return corpus


@dataclass(frozen=True)
class OpNormEstimate:
    value: float
    argmax: str
    ratios: dict = field(default_factory=dict)


def empirical_opnorm(operator, p: float, rprime: float, corpus) -> OpNormEstimate:
    """Lower bound max_f ||T f||_{r'} / ||f||_p over the corpus."""
    T = make_operator(operator)
    ratios = {}
    for name, f in corpus:
        den = lp_norm(f, p)
        if den == 0:
            continue
        ratios[name] = lp_norm(T(f), rprime) / den
    if not ratios:
        raise ValueError("corpus has no nonzero function")
    best = max(ratios, key=ratios.get)
    return OpNormEstimate(ratios[best], best, ratios)


def ball_average(f: GridFunction, radius: float) -> GridFunction:
    """Average of |f| over balls of the given radius, on the enlarged box."""
    from .lattice import enumerate_ball

    ball = enumerate_ball(f.d, radius)
    R = int(math.floor(radius))
    out_shape = tuple(s + 2 * R for s in f.shape)
    g = f.abs()
    out = _direct_box(g, ball.points, out_shape, R) if not f.periodic else None
    if f.periodic:
        out = _fft_conv_torus(g.values, _kernel_torus(ball.points, f.side, f.d))
        return f.with_values(out / ball.count)
    return GridFunction(out / ball.count, tuple(o - R for o in f.origin))


def pointwise_bound_constant(f: GridFunction, Lambda: int) -> float:
    """max_x sup_dyadic |A f|(x) / (Lambda^2 * ball average of |f| at radius 2 Lambda)."""
    M = maximal_dyadic(f, Lambda)
    B = ball_average(f, 2 * Lambda)
    Bv = B.restrict_to_box(M.origin, M.shape).values if not f.periodic else B.values
    mask = M.values > 0
    return float(np.max(M.values[mask] / (Lambda**2 * Bv[mask])))
