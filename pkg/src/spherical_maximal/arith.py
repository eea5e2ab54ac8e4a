"""Gauss sums, unit groups and the Farey dissection of the circle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

DIRECT_TERM_CAP = 10**7


@dataclass(frozen=True)
class RationalPhase:
    """Reduced fraction a/q with 1 <= a <= q (so 0/1 is written 1/1)."""

    a: int
    q: int

    def __post_init__(self):
        if self.q < 1 or not (1 <= self.a <= self.q) or math.gcd(self.a, self.q) != 1:
            raise ValueError(f"{self.a}/{self.q} is not a reduced phase in (0, 1]")

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.q)


def units_mod(q: int) -> list[int]:
    """Residues 1 <= a <= q coprime to q (for q = 1 this is [1])."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return [a for a in range(1, q + 1) if math.gcd(a, q) == 1]


def _unit_phase(k: np.ndarray | int, q: int):
    # k is an integer residue; reduce before evaluating the exponential
    return np.exp(2j * np.pi * (np.asarray(k) % q) / q)


def gauss_sum_1d(a: int, q: int, ell: int) -> complex:
    """(1/q) sum_{n mod q} e(a n^2 / q) e(-n ell / q), phases reduced mod q."""
    if math.gcd(a, q) != 1:
        raise ValueError("a must be a unit mod q")
    n = np.arange(q, dtype=np.int64)
    k = ((a % q) * (n * n % q) - n * (ell % q)) % q
    # pairwise summation in numpy keeps the rounding error O(log q)
    return complex(_unit_phase(k, q).sum() / q)


@lru_cache(maxsize=4096)
def _gauss_table_1d(a: int, q: int) -> np.ndarray:
    n = np.arange(q, dtype=np.int64)
    seq = _unit_phase((a % q) * (n * n % q), q)
    tab = np.fft.fft(seq) / q
    tab.flags.writeable = False
    return tab


def gauss_sum_table_1d(a: int, q: int) -> np.ndarray:
    """G_1(a/q, ell) for ell = 0..q-1, computed as a length-q DFT."""
    if math.gcd(a, q) != 1:
        raise ValueError("a must be a unit mod q")
    return _gauss_table_1d(a % q if q > 1 else 1, q)


def gauss_sums_all_units(q: int) -> tuple[np.ndarray, np.ndarray]:
    """(units, table) with table[i, ell] = G_1(units[i]/q, ell)."""
    us = np.array(units_mod(q), dtype=np.int64)
    n = np.arange(q, dtype=np.int64)
    k = (us[:, None] % q) * (n * n % q)[None, :]
    seq = _unit_phase(k, q)
    return us, np.fft.fft(seq, axis=1) / q


def gauss_sum(d: int, a: int, q: int, ell, method: str = "product") -> complex:
    """Normalized d-dimensional quadratic Gauss sum G(a/q, ell)."""
    ell = np.broadcast_to(np.asarray(ell, dtype=np.int64), (d,))
    if math.gcd(a, q) != 1:
        raise ValueError("a must be a unit mod q")
    if method == "product":
        tab = gauss_sum_table_1d(a, q)
        return complex(np.prod(tab[ell % q]))
    if method == "direct":
        if q**d > DIRECT_TERM_CAP:
            raise ValueError(f"direct Gauss sum needs q^d = {q**d} terms > {DIRECT_TERM_CAP}")
        grids = np.indices((q,) * d, dtype=np.int64).reshape(d, -1)
        k = (a * (grids * grids).sum(0) - (grids * ell[:, None]).sum(0)) % q
        return complex(_unit_phase(k, q).sum() / q**d)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class GaussSumTable:
    d: int
    q: int
    a: int
    values: np.ndarray  # shape (q,)*d, indexed by ell mod q


def gauss_sum_table(d: int, a: int, q: int) -> GaussSumTable:
    if q**d > DIRECT_TERM_CAP:
        raise ValueError("table too large")
    tab = gauss_sum_table_1d(a, q)
    vals = tab
    for _ in range(d - 1):
        vals = np.multiply.outer(vals, tab)
    vals = np.asarray(vals).reshape((q,) * d)
    return GaussSumTable(d, q, a, vals)


def gauss_identity_residual(d: int, q: int, exact_cap: int = 10**6) -> float:
    """max_{a, y} |sum_ell G(a/q, ell) e(-y.ell/q) - e(|y|^2 a/q)|.

    The ell-sum over (Z/qZ)^d separates into one-dimensional sums, so the
    left side is prod_i u(y_i) with u(y) = sum_ell G_1(a/q, ell) e(-y ell/q).
    The maximum over y is taken exactly when q^d <= exact_cap; above the cap
    the returned number is the upper bound prod(1+eps_i) - 1 with eps the
    worst one-dimensional relative deviation.
    """
    if q < 1 or d < 1:
        raise ValueError("need q >= 1 and d >= 1")
    n = np.arange(q, dtype=np.int64)
    dft = _unit_phase(-np.outer(n, n) % q, q)  # dft[y, ell] = e(-y ell / q)
    worst = 0.0
    for a in units_mod(q):
        u = dft @ gauss_sum_table_1d(a, q)
        v = _unit_phase((a % q) * (n * n % q), q)
        if q**d <= exact_cap:
            lhs = u
            rhs = v
            for _ in range(d - 1):
                lhs = np.multiply.outer(lhs, u)
                rhs = np.multiply.outer(rhs, v)
            err = float(np.max(np.abs(lhs - rhs)))
        else:
            eps = float(np.max(np.abs(u / v - 1.0)))
            err = (1.0 + eps) ** d - 1.0
        worst = max(worst, err)
    return worst


def gauss_magnitudes(q: int) -> np.ndarray:
    """sqrt(q) |G_1(a/q, ell)| over all units a and all ell (flattened)."""
    _, tab = gauss_sums_all_units(q)
    return (math.sqrt(q) * np.abs(tab)).ravel()


# --- Farey dissection -----------------------------------------------------

@dataclass(frozen=True)
class FareyArc:
    """Arc of the circle assigned to a/q in the dissection of order Lambda.

    ``left`` and ``right`` are the mediant endpoints as exact fractions on the
    real line (the arc of 1/1 straddles the integer 1). In the tau-variable
    the arc is [-beta/(q Lambda), alpha/(q Lambda)].
    """

    phase: RationalPhase
    Lambda: int
    left: Fraction
    right: Fraction

    @property
    def a(self) -> int:
        return self.phase.a

    @property
    def q(self) -> int:
        return self.phase.q

    @property
    def alpha(self) -> float:
        return float((self.right - self.phase.value) * self.q * self.Lambda)

    @property
    def beta(self) -> float:
        return float((self.phase.value - self.left) * self.q * self.Lambda)

    @property
    def tau_interval(self) -> tuple[float, float]:
        c = self.phase.value
        return float(self.left - c), float(self.right - c)

    @property
    def length(self) -> float:
        return float(self.right - self.left)


def farey_sequence(order: int) -> list[Fraction]:
    """Farey fractions of the given order in [0, 1], increasing."""
    if order < 1:
        raise ValueError("order must be >= 1")
    a, b, c, dd = 0, 1, 1, order
    out = [Fraction(0, 1)]
    while c <= order:
        k = (order + b) // dd
        a, b, c, dd = c, dd, k * c - a, k * dd - b
        out.append(Fraction(a, b))
    return out


def _mediant(x: Fraction, y: Fraction) -> Fraction:
    return Fraction(x.numerator + y.numerator, x.denominator + y.denominator)


def farey_dissection(Lambda: int) -> list[FareyArc]:
    """Mediant arcs around every reduced a/q with q <= Lambda, tiling [m, 1 + m).

    Ordered by the position of a/q on (0, 1]; the arc for 1/1 (equivalently
    0/1) comes last and is symmetric about 1.
    """
    if Lambda < 1:
        raise ValueError("Lambda must be >= 1")
    seq = farey_sequence(Lambda)
    arcs = []
    for i in range(1, len(seq)):
        f = seq[i]
        left = _mediant(seq[i - 1], f)
        if f == 1:
            right = 1 + _mediant(seq[0], seq[1])
        else:
            right = _mediant(f, seq[i + 1])
        arcs.append(FareyArc(RationalPhase(f.numerator, f.denominator), Lambda, left, right))
    return arcs


def find_arc(arcs: list[FareyArc], a: int, q: int) -> FareyArc:
    for arc in arcs:
        if arc.a == a and arc.q == q:
            return arc
    raise KeyError(f"no arc for {a}/{q}")


def arcs_tile(arcs: list[FareyArc]) -> bool:
    """True when consecutive arcs share endpoints exactly and total length is 1."""
    for u, v in zip(arcs, arcs[1:]):
        if u.right != v.left:
            return False
    return arcs[-1].right - arcs[0].left == 1 if len(arcs) > 1 else arcs[0].length == 1


def iter_phases(Lambda: int):
    """Yield (a, q) for all reduced phases with q <= Lambda."""
    for q in range(1, Lambda + 1):
        for a in units_mod(q):
            yield a, q


def all_residues(q: int, d: int):
    return itertools.product(range(q), repeat=d)
