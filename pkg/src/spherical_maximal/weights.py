"""Discrete A_2 characteristics, reverse Hoelder ratios and weighted maximal bounds.

Cube families are truncated: all axis-parallel lattice cubes of side 1..max_side
lying inside the weight's box. The truncated characteristic is a lower bound
for the characteristic over all cubes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction
from .operators import lp_norm, maximal_full


def _positive(w: GridFunction) -> np.ndarray:
    v = np.asarray(w.values)
    if np.iscomplexobj(v) or np.any(v <= 0):
        raise ValueError("weight must be real and strictly positive on its domain")
    return v.astype(float)


def _all_cube_sums(a: np.ndarray, s: int) -> np.ndarray:
    """Sums of a over every s-cube inside the array (shape (m - s + 1,) per axis)."""
    out = a
    for ax in range(a.ndim):
        C = np.cumsum(np.concatenate([np.zeros_like(out.take([0], axis=ax)), out], axis=ax), axis=ax)
        n = out.shape[ax]
        out = C.take(np.arange(s, n + 1), axis=ax) - C.take(np.arange(0, n - s + 1), axis=ax)
    return out


def _cube_sides(w: GridFunction, max_side: int):
    if max_side < 1:
        raise ValueError("max_side must be >= 1")
    return range(1, min(max_side, min(w.shape)) + 1)


def a2_characteristic(w: GridFunction, max_side: int) -> float:
    """sup over cubes Q (side <= max_side, inside the domain) of <w>_Q <w^{-1}>_Q."""
    v = _positive(w)
    best = 1.0
    for s in _cube_sides(w, max_side):
        vol = float(s) ** v.ndim
        A = _all_cube_sums(v, s) / vol
        B = _all_cube_sums(1.0 / v, s) / vol
        best = max(best, float(np.max(A * B)))
    return best


def reverse_holder_check(w: GridFunction, r: float, max_side: int) -> float:
    """sup over cubes of <w>_{Q,r} / <w>_{Q,1}."""
    if r <= 1:
        raise ValueError("r must exceed 1")
    v = _positive(w)
    best = 1.0
    for s in _cube_sides(w, max_side):
        vol = float(s) ** v.ndim
        m = v.max()
        Ar = (_all_cube_sums((v / m) ** r, s) / vol) ** (1 / r)
        A1 = _all_cube_sums(v / m, s) / vol
        best = max(best, float(np.max(Ar / A1)))
    return best


def power_weight_values(points: np.ndarray, a: float) -> np.ndarray:
    """(1 + |x|)^a for an array of points with coordinates on the last axis."""
    return (1.0 + np.linalg.norm(points, axis=-1)) ** a


def power_weight(d: int, a: float, radius: int) -> GridFunction:
    """w(x) = (1 + |x|)^a on the box [-radius, radius]^d."""
    tmp = GridFunction(np.zeros((2 * radius + 1,) * d), (-radius,) * d)
    return tmp.with_values((1.0 + np.sqrt(tmp.norm2_grid())) ** a)


def admissible_exponent(d: int, a: float, delta: float) -> bool:
    """Whether w^{d/(d-4)+delta} with w = (1+|x|)^a meets the power criterion |a s| < d for A_2."""
    if d <= 4:
        raise ValueError("need d >= 5")
    s = d / (d - 4) + delta
    return abs(a) * s < d


def weighted_corpus(d: int, seed: int = 0) -> list[tuple[str, GridFunction]]:
    """Small-support inputs: delta_0, balls of radius 1 and 2, a random sign pattern on [-1, 1]^d."""
    return [("delta", GridFunction.delta(d)),
            ("ball1", GridFunction.ball_indicator(d, 1)),
            ("ball2", GridFunction.ball_indicator(d, 2)),
            ("random", GridFunction.random(d, 3, seed, corner=(-1,) * d))]


def weighted_ratio(f: GridFunction, Lambda: int, a: float) -> float:
    """||sup_{lambda <= Lambda} |A f| ||_{l2(w)} / ||f||_{l2(w)} for w = (1+|x|)^a."""
    w = lambda pts: power_weight_values(pts, a)
    from .operators import weighted_l2_norm

    Tf = maximal_full(f, Lambda)
    return weighted_l2_norm(Tf, w) / weighted_l2_norm(f, w)


@dataclass
class WeightedReport:
    d: int
    a: float
    delta: float
    admissible: bool
    Lambdas: list
    ratios: list
    per_function: dict = field(default_factory=dict)

    @property
    def growth(self) -> float:
        """max over Lambda of ratio / ratio at the first Lambda."""
        return max(r / self.ratios[0] for r in self.ratios)

    @property
    def stable(self) -> bool:
        return self.growth <= 1.10

    def rows(self) -> list[dict]:
        return [{"Lambda": L, "ratio": r, "a": self.a, "delta": self.delta,
                 "admissible": self.admissible} for L, r in zip(self.Lambdas, self.ratios)]


def weighted_bound_experiment(d: int, a: float, delta: float, Lambdas=(2, 4, 8),
                              corpus=None) -> WeightedReport:
    if d < 5:
        raise ValueError("the weighted bound needs d >= 5")
    corpus = corpus if corpus is not None else weighted_corpus(d)
    Lambdas = sorted(Lambdas)
    per = {name: [] for name, _ in corpus}
    ratios = []
    for L in Lambdas:
        best = 0.0
        for name, f in corpus:
            r = weighted_ratio(f, L, a)
            per[name].append(r)
            best = max(best, r)
        ratios.append(best)
    return WeightedReport(d, a, delta, admissible_exponent(d, a, delta), Lambdas, ratios, per)
