"""Multiplier symbols of the circle-method decomposition of the shell average.

Conventions used throughout this module:

* ``n`` is the squared radius (an integer, n = lambda^2) and ``d`` is read off
  the frequency vector ``xi``.
* Fourier transforms use ``f^(xi) = sum_x f(x) e(-x.xi)`` with ``e(t) = exp(2 pi i t)``.
* ``eval_I`` and ``eval_J`` follow the oscillatory integral with prefactor
  ``e^{2 pi} / lambda^{d-2}`` and kernel ``(2(eps - i tau))^{-d/2}
  exp(-pi |xi|^2 / (2(eps - i tau)))``, ``eps = 1/n``.
* The assembled symbols ``a_circle``, ``b`` and ``c`` are compared against the
  exact shell multiplier. The shell multiplier is normalized by the point count
  N(lambda), while the oscillatory integrals carry lambda^{d-2}; the
  ``normalization`` argument chooses between rescaling by lambda^{d-2}/N
  (``"shell"``, the default, which makes the circle identity exact) and the
  bare prefactor (``"printed"``). ``normalization_discrepancy`` reports the ratio.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .arith import FareyArc, farey_dissection, gauss_sums_all_units, gauss_sum_table_1d
from .lattice import cached_shell, shell_count

TWO_PI = 2.0 * math.pi
E2PI = math.exp(TWO_PI)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


# --- bumps ----------------------------------------------------------------

def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def g(x):
        pos = x > 0
        return np.where(pos, np.exp(-1.0 / np.where(pos, x, 1.0)), 0.0)

    return g(t) / (g(t) + g(1.0 - t))


@dataclass(frozen=True)
class BumpSpec:
    """Tensor-product plateau: 1 on [-inner, inner]^d, 0 outside (-outer, outer)^d."""

    inner: float = 1 / 8
    outer: float = 1 / 4

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("need 0 < inner < outer")

    def profile(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return smooth_step((self.outer - x) / (self.outer - self.inner))


PHI = BumpSpec(1 / 8, 1 / 4)
PHI_TILDE = BumpSpec(1 / 4, 3 / 8)


def bump(xi, spec: BumpSpec = PHI):
    """Product over the last axis of the one-dimensional plateau profile."""
    v = np.prod(spec.profile(xi), axis=-1)
    return float(v) if np.ndim(v) == 0 else v


def bump_q(xi, q: int, spec: BumpSpec = PHI):
    """Phi_q(xi) = Phi(q xi), a bump of width about 1/q."""
    return bump(q * np.asarray(xi, dtype=float), spec)


def bump_tilde_q(xi, q: int):
    return bump_q(xi, q, PHI_TILDE)


# --- continuous sphere ----------------------------------------------------

def sphere_constant(d: int) -> float:
    """pi^{d/2} / Gamma(d/2): the ratio I_lambda / sigma_lambda^ for all lambda."""
    return math.pi ** (d / 2) / math.gamma(d / 2)


def sphere_hat_radial(d: int, lam: float, r):
    """Fourier transform of normalized surface measure on the radius-lam sphere at |xi| = r."""
    r = np.asarray(r, dtype=float)
    z = TWO_PI * lam * r
    nu = d / 2 - 1
    out = np.ones_like(z)
    m = z > 0
    zm = z[m]
    out[m] = special.gamma(d / 2) * (zm / 2) ** (-nu) * special.jv(nu, zm)
    return float(out) if out.ndim == 0 else out


def sphere_hat(n: float, xi):
    xi = np.asarray(xi, dtype=float)
    return sphere_hat_radial(xi.shape[-1], math.sqrt(n), np.linalg.norm(xi, axis=-1))


# --- oscillatory integrals ------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the tau-integrals.

    ``epsabs`` is measured in the natural units of the integral, which has
    size about n^{(d-2)/2}; the absolute tolerance handed to QUADPACK is
    ``epsabs * n^{(d-2)/2}``. ``split`` is where the finite adaptive
    piece ends and the Fourier-integral tail rule takes over. A result
    whose error estimate stays under ``accept`` (same units) is kept even if
    QUADPACK flags round-off.
    """

    epsabs: float = 1e-14
    epsrel: float = 1e-11
    limit: int = 2000
    limlst: int = 400
    split: float = 1.0
    accept: float = 1e-9

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0 or self.accept <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_QUAD = QuadratureSpec()


def _kernel(tau, d: int, eps: float, r2: float):
    s = eps - 1j * tau
    return (2 * s) ** (-d / 2) * np.exp(-math.pi * r2 / (2 * s))


def _quad(f, a, b, spec: QuadratureSpec, scale: float, **kw) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, a, b, full_output=1, epsabs=spec.epsabs * scale,
                             epsrel=spec.epsrel, limit=spec.limit, **kw)
    val, err = res[0], res[1]
    if len(res) > 3 and not (err <= spec.accept * scale or err <= 1e-8 * abs(val)):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge", err)
    return val


def _scale(n: float, d: int) -> float:
    return max(1.0, n) ** ((d - 2) / 2)


def _osc_integral(n: float, d: int, r2: float, lo: float, hi: float,
                  spec: QuadratureSpec) -> complex:
    """int_lo^hi e(-n tau) K(tau) dtau with lo <= 0 <= hi (infinite ends allowed)."""
    eps = 1.0 / n
    om = TWO_PI * n
    sc = _scale(n, d)
    kr = lambda t: _kernel(t, d, eps, r2).real
    ki = lambda t: _kernel(t, d, eps, r2).imag

    def piece(a, b):
        # int_a^b (kr + i ki)(cos - i sin), with 0 <= a < b on the positive side
        if b <= a:
            return 0j
        pieces = [(a, min(b, spec.split))] if a < spec.split else []
        tail = (max(a, spec.split), b) if b > spec.split else None
        cr = sr = ci = si = 0.0
        for u, v in pieces:
            if v <= u:
                continue
            cr += _quad(kr, u, v, spec, sc, weight="cos", wvar=om)
            sr += _quad(kr, u, v, spec, sc, weight="sin", wvar=om)
            ci += _quad(ki, u, v, spec, sc, weight="cos", wvar=om)
            si += _quad(ki, u, v, spec, sc, weight="sin", wvar=om)
        if tail is not None:
            u, v = tail
            if math.isinf(v):
                kw = dict(limlst=spec.limlst)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    parts = []
                    for g, w in ((kr, "cos"), (kr, "sin"), (ki, "cos"), (ki, "sin")):
                        res = integrate.quad(g, u, np.inf, weight=w, wvar=om, full_output=1,
                                             epsabs=spec.epsabs * sc, limit=spec.limit, **kw)
                        if len(res) > 3 and res[1] > spec.accept * sc:
                            raise QuadratureError("Fourier-integral tail did not converge", res[1])
                        parts.append(res[0])
                tcr, tsr, tci, tsi = parts
            else:
                tcr = _quad(kr, u, v, spec, sc, weight="cos", wvar=om)
                tsr = _quad(kr, u, v, spec, sc, weight="sin", wvar=om)
                tci = _quad(ki, u, v, spec, sc, weight="cos", wvar=om)
                tsi = _quad(ki, u, v, spec, sc, weight="sin", wvar=om)
            cr, sr, ci, si = cr + tcr, sr + tsr, ci + tci, si + tsi
        return complex(cr + si, ci - sr)

    # the kernel satisfies K(-tau) = conj(K(tau)); reflect the negative side
    pos = piece(0.0, hi)
    neg = piece(0.0, -lo)
    return pos + neg.conjugate()


def eval_I(n: float, xi, spec: QuadratureSpec = DEFAULT_QUAD, method: str = "quadrature") -> complex:
    """I_lambda(xi): the full-line tau-integral, with prefactor e^{2 pi}/lambda^{d-2}.

    ``method="bessel"`` returns the closed form c_d * sigma_lambda^(xi) instead.
    """
    if n <= 0:
        raise ValueError("lambda must be positive")
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    if method == "bessel":
        return complex(sphere_constant(d) * sphere_hat(n, xi))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    r2 = float(xi @ xi)
    val = _osc_integral(n, d, r2, -np.inf, np.inf, spec)
    return E2PI / n ** ((d - 2) / 2) * val


def eval_J(arc: FareyArc, n: float, xi, spec: QuadratureSpec = DEFAULT_QUAD,
           arc_scale: float = 1.0) -> complex:
    """J_lambda over the tau-interval of ``arc`` (scaled about 0 by ``arc_scale``)."""
    if n <= 0:
        raise ValueError("lambda must be positive")
    if arc_scale < 0:
        raise ValueError("arc_scale must be nonnegative")
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    if math.isinf(arc_scale):
        return eval_I(n, xi, spec)
    lo, hi = arc.tau_interval
    lo, hi = lo * arc_scale, hi * arc_scale
    if hi - lo == 0:
        return 0j
    val = _osc_integral(n, d, float(xi @ xi), lo, hi, spec)
    return E2PI / n ** ((d - 2) / 2) * val


def empirical_sphere_constant(d: int, n: int = 64, xi=None,
                              spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """eval_I / sphere_hat at a reference frequency (real part; the ratio is real)."""
    if xi is None:
        xi = np.full(d, 0.05)
    return (eval_I(n, xi, spec) / sphere_hat(n, xi)).real


# --- exact shell multiplier -----------------------------------------------

def eval_symbol_a_exact(n: int, xi, chunk: int = 2_000_000):
    """N^{-1} sum_{|y|^2 = n} e(-y.xi) for one frequency (d,) or a batch (m, d)."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    d = X.shape[1]
    shell = cached_shell(d, n)
    if shell.count == 0:
        raise ValueError(f"shell |y|^2 = {n} in dimension {d} is empty")
    pts = shell.points.astype(float)
    out = np.empty(len(X), dtype=complex)
    step = max(1, chunk // len(pts))
    for i in range(0, len(X), step):
        ph = pts @ X[i:i + step].T
        out[i:i + step] = np.exp(-2j * np.pi * ph).mean(axis=0)
    return complex(out[0]) if single else out


def normalization_discrepancy(d: int, n: int) -> float:
    """N(lambda) / lambda^{d-2}: the factor separating the two normalizations."""
    return shell_count(d, n) / n ** ((d - 2) / 2)


def _norm_factor(d: int, n: int, normalization: str) -> float:
    if normalization == "shell":
        return n ** ((d - 2) / 2) / shell_count(d, n)
    if normalization == "printed":
        return 1.0
    raise ValueError(f"unknown normalization {normalization!r}")


def _check_scales(n: int, Lambda: int):
    if Lambda < 1 or Lambda & (Lambda - 1):
        raise ValueError("Lambda must be a power of two")
    if not Lambda * Lambda <= n < 4 * Lambda * Lambda:
        raise ValueError(f"need Lambda <= lambda < 2 Lambda, got n={n}, Lambda={Lambda}")


# --- circle-method reconstruction ------------------------------------------

def _theta_window(q: int, kappa: float) -> int:
    # keep ell with Gaussian factor exp(-pi kappa (dx)^2) >= 1e-14 relative
    return int(math.ceil(q * math.sqrt(-math.log(1e-14) / (math.pi * kappa)))) + 1


def _arc_integral(arc: FareyArc, n: int, xi: np.ndarray, spec: QuadratureSpec) -> complex:
    q, d = arc.q, xi.shape[0]
    G = gauss_sum_table_1d(arc.a, q)
    eps = 1.0 / n
    lo, hi = arc.tau_interval
    tmax = max(abs(lo), abs(hi))
    kappa = eps / (2 * (eps * eps + tmax * tmax))
    W = _theta_window(q, kappa)
    base = np.floor(q * xi).astype(np.int64)
    ells = base[:, None] + np.arange(-W, W + 1)[None, :]
    Gl = G[ells % q]
    dx2 = (xi[:, None] - ells / q) ** 2

    def integrand(tau):
        s2 = 2 * (eps - 1j * tau)
        S = (Gl * np.exp(-math.pi * dx2 / s2)).sum(axis=1)
        return np.exp(-2j * np.pi * n * tau) * np.prod(S) * s2 ** (-d / 2)

    sc = _scale(n, d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, *rest = integrate.quad(integrand, float(lo), float(hi), complex_func=True,
                                         limit=spec.limit, epsabs=spec.epsabs * sc * 10,
                                         epsrel=spec.epsrel * 10, points=[0.0], full_output=1)
    # complex_func returns per-part info; check both estimates
    errs = np.abs(np.atleast_1d(err))
    if np.max(errs) > spec.accept * sc * 100:
        raise QuadratureError(f"arc {arc.a}/{arc.q} did not converge", float(np.max(errs)))
    return complex(val)


def eval_symbol_a_circle(n: int, Lambda: int, xi, spec: QuadratureSpec = DEFAULT_QUAD,
                         normalization: str = "shell") -> complex:
    """Circle-method reconstruction of the shell multiplier from Farey arcs of order Lambda."""
    _check_scales(n, Lambda)
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[0]
    tot = 0j
    for arc in farey_dissection(Lambda):
        ph = np.exp(-2j * np.pi * ((n * arc.a) % arc.q) / arc.q)
        tot += ph * _arc_integral(arc, n, xi, spec)
    return E2PI / n ** ((d - 2) / 2) * tot * _norm_factor(d, n, normalization)


# --- main term c and its arc-truncated variant b ----------------------------

def _nearest(xi: np.ndarray, q: int):
    ell = np.round(q * xi).astype(np.int64)
    return ell, q * xi - ell


def _gauss_weight(n: int, q: int, ell: np.ndarray) -> np.ndarray:
    """sum_a e(-n a / q) prod_i G_1(a/q, ell_i) for each row of ell."""
    units, tab = gauss_sums_all_units(q)
    ph = np.exp(-2j * np.pi * ((n * units) % q) / q)
    prod = np.prod(tab[:, ell % q], axis=-1)  # (units, m)
    return ph @ prod


def eval_term_c(a: int, q: int, n: int, xi, I_method: str = "bessel",
                spec: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Contribution of the phase a/q to c_lambda (printed normalization)."""
    xi = np.asarray(xi, dtype=float)
    ell, dev = _nearest(xi, q)
    w = bump(dev)
    if w == 0:
        return 0j
    G = np.prod(gauss_sum_table_1d(a, q)[ell % q])
    ph = np.exp(-2j * np.pi * ((n * a) % q) / q)
    return complex(ph * G * w * eval_I(n, xi - ell / q, spec, method=I_method))


def eval_symbol_c(n: int, Lambda: int, xi, normalization: str = "shell",
                  I_method: str = "bessel", spec: QuadratureSpec = DEFAULT_QUAD):
    """Main term c_lambda at one frequency (d,) or a batch (m, d)."""
    _check_scales(n, Lambda)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    d = X.shape[1]
    tot = np.zeros(len(X), dtype=complex)
    for q in range(1, Lambda + 1):
        ell, dev = _nearest(X, q)
        w = bump(dev)
        m = w > 0
        if not m.any():
            continue
        gw = _gauss_weight(n, q, ell[m])
        diff = X[m] - ell[m] / q
        if I_method == "bessel":
            Iv = sphere_constant(d) * sphere_hat(n, diff)
        else:
            Iv = np.array([eval_I(n, z, spec) for z in diff])
        tot[m] += gw * w[m] * Iv
    tot *= _norm_factor(d, n, normalization)
    return complex(tot[0]) if single else tot


def eval_term_b(a: int, q: int, n: int, Lambda: int, xi, spec: QuadratureSpec = DEFAULT_QUAD,
                arc_scale: float = 1.0) -> complex:
    """Contribution of a/q to b_lambda: the c-term with I replaced by J over the arc."""
    xi = np.asarray(xi, dtype=float)
    ell, dev = _nearest(xi, q)
    w = bump(dev)
    if w == 0:
        return 0j
    arc = next(x for x in farey_dissection(Lambda) if x.a == a and x.q == q)
    G = np.prod(gauss_sum_table_1d(a, q)[ell % q])
    ph = np.exp(-2j * np.pi * ((n * a) % q) / q)
    return complex(ph * G * w * eval_J(arc, n, xi - ell / q, spec, arc_scale))


def eval_symbol_b(n: int, Lambda: int, xi, spec: QuadratureSpec = DEFAULT_QUAD,
                  normalization: str = "shell", arc_scale: float = 1.0) -> complex:
    _check_scales(n, Lambda)
    xi = np.asarray(xi, dtype=float)
    tot = 0j
    for arc in farey_dissection(Lambda):
        tot += eval_term_b(arc.a, arc.q, n, Lambda, xi, spec, arc_scale)
    return tot * _norm_factor(xi.shape[0], n, normalization)


def residual_symbol(n: int, Lambda: int, xi, normalization: str = "shell"):
    """r_lambda = a_lambda - c_lambda."""
    return eval_symbol_a_exact(n, xi) - eval_symbol_c(n, Lambda, xi, normalization)


# --- Littlewood-Paley pieces ------------------------------------------------

def phi0(t):
    """Radial low-pass profile: 1 for t <= 1, 0 for t >= 2."""
    return smooth_step(2.0 - np.asarray(t, dtype=float))


def _radius(xi):
    xi = np.asarray(xi, dtype=float)
    return np.linalg.norm(xi, axis=-1) if xi.ndim >= 1 else np.abs(xi)


def lp_family(k: int, xi):
    """psi_{2^k}(xi), supported in 2^{k-1} <= |xi| <= 2^{k+1}."""
    r = _radius(xi)
    v = phi0(r / 2.0**k) - phi0(r / 2.0 ** (k - 1))
    return float(v) if np.ndim(v) == 0 else v


def lp_partial_sum(xi, k_min: int, k_max: int):
    """sum_{k_min <= k <= k_max} psi_{2^k}(xi), summed term by term."""
    tot = 0.0
    for k in range(k_min, k_max + 1):
        tot = tot + lp_family(k, xi)
    return tot


def lp_covering_range(xi) -> tuple[int, int]:
    """A range of k such that the partial sum equals the full sum at every xi != 0 given."""
    r = np.atleast_1d(_radius(xi))
    r = r[r > 0]
    return int(math.floor(math.log2(r.min()))) - 2, int(math.ceil(math.log2(r.max()))) + 2


def _torus_freqs(M: int, d: int):
    f = np.fft.fftfreq(M)
    return np.stack(np.meshgrid(*([f] * d), indexing="ij"), axis=-1)


def p_multiplier(M: int, d: int, N: int, Lambda: int, q: int) -> np.ndarray:
    """sum_{ell in Z^d} psi_{N/Lambda}(xi - ell/q) on the frequencies of the M-torus."""
    if M < 8 * Lambda:
        raise ValueError(f"torus side {M} < 8 Lambda = {8 * Lambda} aliases the multiplier")
    if N * q > Lambda:
        raise ValueError("need N <= Lambda / q")
    k = math.log2(N / Lambda)
    if k != int(k):
        raise ValueError("N / Lambda must be a power of two")
    k = int(k)
    X = _torus_freqs(M, d)
    base = np.round(q * X).astype(np.int64)
    W = int(math.ceil(q * 2.0 ** (k + 1))) + 1
    out = np.zeros(X.shape[:-1])
    for off in np.ndindex(*([2 * W + 1] * d)):
        ell = base + (np.array(off) - W)
        out += lp_family(k, X - ell / q)
    return out


def p_le_multiplier(M: int, d: int, sharp: float, q: int) -> np.ndarray:
    """sum over 2^k <= sharp of psi_{2^k}, localized at the nearest ell/q by Phi~_q."""
    if sharp <= 0 or M * sharp < 8:
        raise ValueError(f"torus side {M} too small to resolve scale {sharp}")
    K = math.floor(math.log2(sharp))
    X = _torus_freqs(M, d)
    ell = np.round(q * X)
    Y = X - ell / q
    return phi0(_radius(Y) / 2.0**K) * bump(q * Y, PHI_TILDE)


def _apply_multiplier(f, m: np.ndarray):
    from .grid import GridFunction

    if not isinstance(f, GridFunction) or not f.periodic:
        raise ValueError("projection needs a periodic GridFunction")
    out = np.fft.ifftn(np.fft.fftn(f.values) * m)
    if not np.iscomplexobj(f.values):
        out = out.real
    return f.with_values(out)


def project_P(f, N: int, Lambda: int, q: int):
    return _apply_multiplier(f, p_multiplier(f.side, f.d, N, Lambda, q))


def project_P_le(f, sharp: float, q: int):
    return _apply_multiplier(f, p_le_multiplier(f.side, f.d, sharp, q))


# --- records ----------------------------------------------------------------

@dataclass(frozen=True)
class SymbolEvaluation:
    kind: str
    n: int
    Lambda: int
    xi: tuple
    value: complex

    @property
    def lam(self) -> float:
        return math.sqrt(self.n)


def evaluate_symbol(kind: str, n: int, Lambda: int, xi, spec: QuadratureSpec = DEFAULT_QUAD,
                    normalization: str = "shell") -> SymbolEvaluation:
    xi = np.asarray(xi, dtype=float)
    if kind == "exact":
        v = eval_symbol_a_exact(n, xi)
    elif kind == "circle":
        v = eval_symbol_a_circle(n, Lambda, xi, spec, normalization)
    elif kind == "main":
        v = eval_symbol_c(n, Lambda, xi, normalization)
    elif kind == "residual":
        v = residual_symbol(n, Lambda, xi, normalization)
    else:
        raise ValueError(f"unknown symbol kind {kind!r}")
    return SymbolEvaluation(kind, n, Lambda, tuple(float(x) for x in xi), complex(v))
