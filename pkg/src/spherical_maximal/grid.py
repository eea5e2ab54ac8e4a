"""Finitely supported and periodic functions on Z^d.

A :class:`GridFunction` is a dense array of values together with a geometry:
either a box (integer corner plus per-axis extent, zero outside) or a torus
(Z/M)^d. Values are frozen after construction.

File format (``save_grid`` / ``load_grid``): the first line is a JSON header
``{"d": .., "kind": "box"|"torus", "origin": [..], "shape": [..],
"complex": bool}``; every following line holds one value in C order, written
as ``re`` or ``re,im``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    origin: tuple[int, ...]
    periodic: bool = False

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        if not np.issubdtype(vals.dtype, np.complexfloating):
            vals = vals.astype(np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", tuple(int(o) for o in self.origin))
        if len(self.origin) != vals.ndim:
            raise GeometryError("origin length must equal array dimension")
        if self.periodic:
            if len(set(vals.shape)) != 1:
                raise GeometryError("torus must have equal side on every axis")
            if any(self.origin):
                raise GeometryError("torus origin is always 0")

    # geometry ----------------------------------------------------------
    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def side(self) -> int:
        """Torus side M (only meaningful for periodic functions)."""
        return self.values.shape[0]

    @property
    def upper(self) -> tuple[int, ...]:
        return tuple(o + s for o, s in zip(self.origin, self.shape))

    def same_geometry(self, other: "GridFunction") -> bool:
        return (self.periodic == other.periodic and self.origin == other.origin
                and self.shape == other.shape)

    def coords(self) -> list[np.ndarray]:
        """Per-axis integer coordinates of the array cells."""
        return [np.arange(o, o + s) for o, s in zip(self.origin, self.shape)]

    def norm2_grid(self) -> np.ndarray:
        """|x|^2 for every cell (box coordinates, or centred torus coordinates)."""
        if self.periodic:
            M = self.side
            axes = [np.minimum(np.arange(M), M - np.arange(M))] * self.d
        else:
            axes = self.coords()
        out = np.zeros(self.shape, dtype=np.int64)
        for i, c in enumerate(axes):
            sh = [1] * self.d
            sh[i] = -1
            out = out + (c.astype(np.int64) ** 2).reshape(sh)
        return out

    def value_at(self, x) -> complex | float:
        x = np.asarray(x, dtype=np.int64)
        if self.periodic:
            return self.values[tuple(x % self.side)]
        idx = x - np.asarray(self.origin)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            return 0.0
        return self.values[tuple(idx)]

    def nonzero_points(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.argwhere(self.values != 0)
        return idx + np.asarray(self.origin), self.values[tuple(idx.T)]

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values, self.origin, self.periodic)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def restrict_to_box(self, origin, shape) -> "GridFunction":
        """Values on the box [origin, origin+shape), zero where undefined."""
        origin = tuple(int(o) for o in origin)
        out = np.zeros(tuple(shape), dtype=self.values.dtype)
        if self.periodic:
            idx = np.ix_(*[(np.arange(o, o + s)) % self.side for o, s in zip(origin, shape)])
            return GridFunction(self.values[idx], origin)
        src, dst = [], []
        for o, s, fo, fs in zip(origin, shape, self.origin, self.shape):
            lo, hi = max(o, fo), min(o + s, fo + fs)
            if lo >= hi:
                return GridFunction(out, origin)
            src.append(slice(lo - fo, hi - fo))
            dst.append(slice(lo - o, hi - o))
        out[tuple(dst)] = self.values[tuple(src)]
        return GridFunction(out, origin)

    # constructors ------------------------------------------------------
    @classmethod
    def delta(cls, d: int, at=None, torus: int | None = None) -> "GridFunction":
        at = tuple([0] * d if at is None else at)
        if torus:
            v = np.zeros((torus,) * d)
            v[tuple(np.asarray(at) % torus)] = 1.0
            return cls(v, (0,) * d, True)
        return cls(np.ones((1,) * d), at)

    @classmethod
    def constant(cls, d: int, torus: int, c: float = 1.0) -> "GridFunction":
        return cls(np.full((torus,) * d, float(c)), (0,) * d, True)

    @classmethod
    def box_indicator(cls, corner, side: int) -> "GridFunction":
        d = len(corner)
        return cls(np.ones((side,) * d), tuple(corner))

    @classmethod
    def shell_indicator(cls, d: int, n: int) -> "GridFunction":
        """1_{|x|^2 = n} on the box [-R, R]^d."""
        R = math.isqrt(n)
        tmp = cls(np.zeros((2 * R + 1,) * d), (-R,) * d)
        return tmp.with_values(tmp.norm2_grid() == n)

    @classmethod
    def ball_indicator(cls, d: int, radius: float) -> "GridFunction":
        R = int(math.floor(radius))
        tmp = cls(np.zeros((2 * R + 1,) * d), (-R,) * d)
        return tmp.with_values(tmp.norm2_grid() <= radius * radius + 1e-9)

    @classmethod
    def annulus_indicator(cls, d: int, inner: float, outer: float) -> "GridFunction":
        """1_{inner <= |x| < outer}."""
        R = int(math.ceil(outer))
        tmp = cls(np.zeros((2 * R + 1,) * d), (-R,) * d)
        n2 = tmp.norm2_grid()
        return tmp.with_values((n2 >= inner * inner) & (n2 < outer * outer))

    @classmethod
    def random(cls, d: int, side: int, seed: int, kind: str = "signs",
               corner=None, torus: bool = False) -> "GridFunction":
        rng = np.random.default_rng(seed)
        shape = (side,) * d
        if kind == "signs":
            v = rng.choice([-1.0, 1.0], size=shape)
        elif kind == "uniform":
            v = rng.uniform(0.0, 1.0, size=shape)
        elif kind == "complex":
            v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        elif kind == "sparse":
            v = (rng.uniform(size=shape) < 0.1).astype(float)
        else:
            raise ValueError(f"unknown random kind {kind!r}")
        if torus:
            return cls(v, (0,) * d, True)
        return cls(v, tuple([0] * d if corner is None else corner))


def save_grid(path, f: GridFunction) -> None:
    path = Path(path)
    is_complex = bool(np.iscomplexobj(f.values))
    header = {"d": f.d, "kind": "torus" if f.periodic else "box",
              "origin": list(f.origin), "shape": list(f.shape), "complex": is_complex}
    flat = f.values.ravel()
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        if is_complex:
            for z in flat:
                fh.write(f"{float(z.real)!r},{float(z.imag)!r}\n")
        else:
            for x in flat:
                fh.write(f"{float(x)!r}\n")


def load_grid(path) -> GridFunction:
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        rows = [line.strip() for line in fh if line.strip()]
    shape = tuple(header["shape"])
    if header.get("complex"):
        vals = np.array([complex(*map(float, r.split(","))) for r in rows])
    else:
        vals = np.array([float(r) for r in rows])
    if vals.size != int(np.prod(shape)):
        raise GeometryError("value count does not match header shape")
    periodic = header["kind"] == "torus"
    return GridFunction(vals.reshape(shape), tuple(header["origin"]), periodic)
