"""Dyadic cubes, sparse collections, sparse forms and stopping-time constructions.

Cubes live on shifted dyadic grids: the level-k grid with shift t in {0,1,2}^d
has corners ``2^k Z^d + o_k(t)`` with ``o_k(t) = round(2^k (-1)^k t / 3)``.
Each level refines the next coarser one, so every construction here runs on a
single (optionally shifted) grid and the resulting cubes are nested or disjoint.

The stopping construction is a single top-down sweep over levels. Every cube
carries the reference averages of its nearest stopped ancestor (initially the
root cube 3E); a cube stops when one of its averages reaches ``A0`` times the
reference and is nonzero. Stopped cubes hand their own averages to their
descendants, so generations appear in one pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction

DEFAULT_A0 = 100.0
DEPTH_CAP = 40
RHO = 0.5
_ZERO_REL = 1e-12


class DepthCapError(RuntimeError):
    pass


# --- cubes --------------------------------------------------------------------

def grid_offset(k: int, shift) -> np.ndarray:
    t = np.asarray(shift, dtype=np.int64)
    return np.round(2.0**k * (-1) ** k * t / 3.0).astype(np.int64)


@dataclass(frozen=True)
class DyadicCube:
    """corner + [0, scale * 2^k)^d; ``scale`` is 1 for grid cubes and 3 for a tripled root."""

    d: int
    k: int
    corner: tuple
    shift: tuple | None = None
    scale: int = 1

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(int(c) for c in self.corner))
        if len(self.corner) != self.d:
            raise ValueError("corner length must equal d")
        if self.shift is not None:
            object.__setattr__(self, "shift", tuple(int(s) for s in self.shift))

    @property
    def side(self) -> int:
        return self.scale * 2**self.k

    @property
    def volume(self) -> int:
        return self.side**self.d

    @property
    def upper(self) -> tuple:
        return tuple(c + self.side for c in self.corner)

    def dilate3(self) -> "DyadicCube":
        s = 2**self.k * self.scale
        return DyadicCube(self.d, self.k, tuple(c - s for c in self.corner), self.shift, 3 * self.scale)

    def contains_point(self, x) -> bool:
        return all(c <= xi < c + self.side for c, xi in zip(self.corner, x))

    def contains(self, other: "DyadicCube") -> bool:
        return all(c <= oc and oc + other.side <= c + self.side
                   for c, oc in zip(self.corner, other.corner))

    def on_grid(self) -> bool:
        if self.scale != 1:
            return False
        off = grid_offset(self.k, self.shift or (0,) * self.d)
        return bool(np.all((np.asarray(self.corner) - off) % 2**self.k == 0))

    def to_dict(self) -> dict:
        return {"corner": list(self.corner), "side": self.side, "level": self.k,
                "shift": list(self.shift) if self.shift else None}


def dyadic_cube_containing(x, k: int, shift=None) -> DyadicCube:
    x = np.asarray(x, dtype=np.int64)
    d = len(x)
    off = grid_offset(k, shift or (0,) * d)
    corner = off + ((x - off) // 2**k) * 2**k
    return DyadicCube(d, k, tuple(corner), tuple(shift) if shift else None)


def standard_shifts(d: int):
    return [tuple(t) for t in np.ndindex(*([3] * d))]


@dataclass(frozen=True)
class FormParams:
    p: float
    r: float

    def __post_init__(self):
        if not (1 <= self.p < math.inf and 1 <= self.r < math.inf):
            raise ValueError("need 1 <= p, r < infinity")

    @property
    def breaks_duality(self) -> bool:
        return 1 / self.p + 1 / self.r > 1


@dataclass
class SparseCollection:
    cubes: list
    rho: float = RHO
    generations: list = field(default_factory=list)
    witnesses: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cubes)

    def to_dict(self) -> dict:
        out = {"rho": self.rho, "cubes": []}
        for i, Q in enumerate(self.cubes):
            row = Q.to_dict()
            if self.generations:
                row["generation"] = self.generations[i]
            out["cubes"].append(row)
        out.update({k: v for k, v in self.diagnostics.items() if _jsonable(v)})
        return out


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, list, dict, bool)) or v is None


# --- averages and forms ---------------------------------------------------------

def _power_table(h: GridFunction, t: float) -> tuple[np.ndarray, float]:
    a = np.abs(h.values).astype(float) ** t
    S = np.pad(a, [(1, 0)] * a.ndim)
    for ax in range(a.ndim):
        S = np.cumsum(S, axis=ax)
    return S, float(a.sum())


def _cube_sums(h: GridFunction, corners: np.ndarray, side: int, t: float, table=None) -> np.ndarray:
    """sum_{x in Q} |h(x)|^t for cubes corner + [0, side)^d (rows of ``corners``)."""
    corners = np.atleast_2d(np.asarray(corners, dtype=np.int64))
    if h.periodic:
        return np.array([np.sum(np.abs(h.restrict_to_box(c, (side,) * h.d).values) ** t)
                         for c in corners])
    S, total = table if table is not None else _power_table(h, t)
    o = np.asarray(h.origin)
    shp = np.asarray(h.shape)
    lo = np.clip(corners - o, 0, shp)
    hi = np.clip(corners + side - o, 0, shp)
    d = h.d
    tot = np.zeros(len(corners))
    for corner in range(2**d):
        idx, sign = [], 1
        for i in range(d):
            if corner >> i & 1:
                idx.append(hi[:, i])
            else:
                idx.append(lo[:, i])
                sign = -sign
        tot += sign * S[tuple(idx)]
    tot[np.abs(tot) <= _ZERO_REL * max(total, 1e-300)] = 0.0
    return np.maximum(tot, 0.0)


def local_avg(h: GridFunction, Q: DyadicCube, t: float) -> float:
    """(|Q|^{-1} sum_{x in Q} |h(x)|^t)^{1/t}, counting every lattice point of Q."""
    if t < 1:
        raise ValueError("t must be >= 1")
    s = _cube_sums(h, np.array([Q.corner]), Q.side, t)[0]
    return float((s / Q.volume) ** (1 / t))


def sparse_form(S, params: FormParams, f: GridFunction, g: GridFunction) -> float:
    """sum_Q <f>_{Q,p} <g>_{Q,r} |Q|."""
    cubes = S.cubes if isinstance(S, SparseCollection) else list(S)
    if not cubes:
        return 0.0
    tf = _power_table(f, params.p) if not f.periodic else None
    tg = _power_table(g, params.r) if not g.periodic else None
    tot = 0.0
    by_side: dict[int, list] = {}
    for Q in cubes:
        by_side.setdefault(Q.side, []).append(Q.corner)
    for side, corners in by_side.items():
        C = np.array(corners)
        vol = float(side) ** f.d
        af = (_cube_sums(f, C, side, params.p, tf) / vol) ** (1 / params.p)
        ag = (_cube_sums(g, C, side, params.r, tg) / vol) ** (1 / params.r)
        tot += float(np.sum(af * ag) * vol)
    return tot


# --- sparsity verification --------------------------------------------------------

@dataclass(frozen=True)
class SparsityReport:
    passed: bool
    rho: float
    min_ratio: float
    max_overlap: int
    worst_cube: DyadicCube | None = None
    worst_point: tuple | None = None

    def __bool__(self):
        return self.passed


def greedy_witnesses(cubes: list) -> list[np.ndarray]:
    """E_Q = Q minus the union of strictly smaller cubes of the collection inside Q (local masks)."""
    if not cubes:
        return []
    fast = _grid_witnesses(cubes)
    return fast if fast is not None else _scan_witnesses(cubes)


def _scan_witnesses(cubes: list) -> list[np.ndarray]:
    """greedy_witnesses for arbitrary cube lists (quadratic in the number of cubes)."""
    corners = np.array([Q.corner for Q in cubes])
    sides = np.array([Q.side for Q in cubes])
    out = []
    for i, Q in enumerate(cubes):
        mask = np.ones((Q.side,) * Q.d, dtype=bool)
        inside = (sides < Q.side) & np.all(corners >= corners[i], axis=1) & \
            np.all(corners + sides[:, None] <= corners[i] + Q.side, axis=1)
        for j in np.flatnonzero(inside):
            lo = corners[j] - corners[i]
            mask[tuple(slice(a, a + sides[j]) for a in lo)] = False
        out.append(mask)
    return out


def _grid_witnesses(cubes: list) -> list[np.ndarray] | None:
    """Ancestor-walk version of greedy_witnesses for distinct cubes on one shifted grid.

    Non-grid cubes (tripled roots) must contain every grid cube. Returns None
    when the collection does not have this shape.
    """
    grid = [i for i, Q in enumerate(cubes) if Q.scale == 1]
    others = [i for i, Q in enumerate(cubes) if Q.scale != 1]
    shifts = {cubes[i].shift or (0,) * cubes[i].d for i in grid}
    if len(shifts) > 1 or not all(cubes[i].on_grid() for i in grid):
        return None
    index = {(cubes[i].k, cubes[i].corner): i for i in grid}
    if len(index) != len(grid):
        return None
    if any(not cubes[o].contains(cubes[i]) for o in others for i in grid):
        return None
    if len(others) > 1:
        return None
    out = [np.ones((Q.side,) * Q.d, dtype=bool) for Q in cubes]
    kmax = max((cubes[i].k for i in grid), default=0)
    shift = next(iter(shifts)) if shifts else None
    for j in grid:
        Q = cubes[j]
        for k in range(Q.k + 1, kmax + 1):
            A = dyadic_cube_containing(Q.corner, k, shift)
            i = index.get((k, A.corner))
            if i is not None:
                lo = np.subtract(Q.corner, A.corner)
                out[i][tuple(slice(a, a + Q.side) for a in lo)] = False
        for o in others:
            lo = np.subtract(Q.corner, cubes[o].corner)
            out[o][tuple(slice(a, a + Q.side) for a in lo)] = False
    return out


def verify_sparsity(S, rho: float = RHO, witnesses=None) -> SparsityReport:
    """Check |E_Q| > rho |Q| for all Q and max_x #{Q : x in E_Q} <= 1/rho."""
    cubes = S.cubes if isinstance(S, SparseCollection) else list(S)
    if witnesses is None and isinstance(S, SparseCollection):
        witnesses = S.witnesses
    if not cubes:
        return SparsityReport(True, rho, math.inf, 0)
    W = witnesses if witnesses is not None else greedy_witnesses(cubes)
    ratios = np.array([w.sum() / Q.volume for w, Q in zip(W, cubes)])
    i_min = int(np.argmin(ratios))
    lo = np.min([Q.corner for Q in cubes], axis=0)
    hi = np.max([Q.upper for Q in cubes], axis=0)
    counts = np.zeros(tuple(hi - lo), dtype=np.int32)
    for w, Q in zip(W, cubes):
        sl = tuple(slice(c - l, c - l + Q.side) for c, l in zip(Q.corner, lo))
        counts[sl] += w
    peak = int(counts.max())
    worst_pt = tuple(int(v) for v in np.unravel_index(int(np.argmax(counts)), counts.shape) + lo)
    ok_ratio = bool(ratios[i_min] > rho)
    ok_overlap = peak <= 1.0 / rho + 1e-12
    return SparsityReport(ok_ratio and ok_overlap, rho, float(ratios[i_min]), peak,
                          None if ok_ratio else cubes[i_min],
                          None if ok_overlap else worst_pt)


# --- stopping construction ------------------------------------------------------------

def _support_box(*fs: GridFunction):
    los, his = [], []
    for f in fs:
        idx = np.argwhere(f.values != 0)
        if len(idx) == 0:
            continue
        los.append(idx.min(0) + np.asarray(f.origin))
        his.append(idx.max(0) + 1 + np.asarray(f.origin))
    if not los:
        return None
    return np.min(los, axis=0), np.max(his, axis=0)


def auto_root(lo, hi, shift=None) -> DyadicCube:
    """Smallest grid cube E (on the chosen shifted grid) whose triple covers [lo, hi)."""
    lo, hi = np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64)
    d = len(lo)
    for K in range(0, 64):
        s = 2**K
        off = grid_offset(K, shift or (0,) * d)
        start = hi - 2 * s
        c = start + ((off - start) % s)
        if np.all(c <= lo + s):
            return DyadicCube(d, K, tuple(c), tuple(shift) if shift else None)
    raise ValueError("support too large")


def _level_sums(h: GridFunction, base: np.ndarray, k: int, n_k: int, dil: int, t: float) -> np.ndarray:
    """Power sums of |h| over (dil * Q) for every level-k cube Q = base + j 2^k + [0, 2^k)^d."""
    a = np.abs(h.values).astype(float) ** t
    total = float(a.sum())
    s = 2**k
    pad = (dil - 1) // 2 * s
    for ax in range(h.d):
        C = np.concatenate([np.zeros_like(a.take([0], axis=ax)), np.cumsum(a, axis=ax)], axis=ax)
        j = np.arange(n_k)
        lo = base[ax] + j * s - pad - h.origin[ax]
        hi = lo + dil * s
        lo = np.clip(lo, 0, h.shape[ax])
        hi = np.clip(hi, 0, h.shape[ax])
        a = C.take(hi, axis=ax) - C.take(lo, axis=ax)
    a[np.abs(a) <= _ZERO_REL * max(total, 1e-300)] = 0.0
    return np.maximum(a, 0.0)


def build_stopping_collection(f: GridFunction, g: GridFunction, params: FormParams,
                              A0: float = DEFAULT_A0, root: DyadicCube | None = None,
                              Tf: GridFunction | None = None, dilation: int = 3,
                              shift=None, depth_cap: int = DEPTH_CAP) -> SparseCollection:
    """Generations of maximal grid cubes inside the root triple 3E.

    ``dilation=3`` compares <f>_{3Q,p}, <g>_{3Q,r} and, if ``Tf`` is given,
    <Tf>_{3Q,p} against A0 times the owner's <f>_{3P,p}, <g>_{3P,r}.
    ``dilation=1`` uses plain Q-averages (the level-set upgrade rule).
    The returned collection starts with the root triple 3E.
    """
    if A0 <= 1:
        raise ValueError("A0 must exceed 1")
    if dilation not in (1, 3):
        raise ValueError("dilation must be 1 or 3")
    if f.periodic or g.periodic:
        raise ValueError("stopping construction works on box-supported functions")
    d = f.d
    box = _support_box(f, g)
    if box is None:
        raise ValueError("f and g both vanish")
    if root is None:
        root = auto_root(*box, shift=shift)
    E3 = root.dilate3()
    if np.any(box[0] < np.asarray(E3.corner)) or np.any(box[1] > np.asarray(E3.upper)):
        raise ValueError("f and g must be supported in the triple of the root cube")
    K = root.k
    base = np.asarray(E3.corner)
    p, r = params.p, params.r
    vol3E = float(E3.volume)

    def root_avg(h, t):
        if h is None:
            return 0.0
        return (_cube_sums(h, base[None], E3.side, t)[0] / vol3E) ** (1 / t)

    ref_f = np.full((3,) * d, root_avg(f, p))
    ref_g = np.full((3,) * d, root_avg(g, r))
    gen = np.zeros((3,) * d, dtype=np.int64)
    cubes = [E3]
    gens = [0]
    stopped_by_gen: dict[int, list] = {}
    for k in range(K, -1, -1):
        n_k = 3 * 2 ** (K - k)
        vol = float(dilation * 2**k) ** d
        af = (_level_sums(f, base, k, n_k, dilation, p) / vol) ** (1 / p)
        ag = (_level_sums(g, base, k, n_k, dilation, r) / vol) ** (1 / r)
        stop = ((af > 0) & (af >= A0 * ref_f)) | ((ag > 0) & (ag >= A0 * ref_g))
        if Tf is not None:
            aT = (_level_sums(Tf, base, k, n_k, dilation, p) / vol) ** (1 / p)
            stop |= (aT > 0) & (aT >= A0 * ref_f)
        idx = np.argwhere(stop)
        if len(idx):
            new_gen = gen[stop] + 1
            if new_gen.max() > depth_cap:
                raise DepthCapError(f"more than {depth_cap} generations at level {k}")
            for j, gg in zip(idx, new_gen):
                Q = DyadicCube(d, k, tuple(base + j * 2**k), root.shift)
                cubes.append(Q)
                gens.append(int(gg))
                stopped_by_gen.setdefault(int(gg), []).append(Q)
            ref_f = np.where(stop, af, ref_f)
            ref_g = np.where(stop, ag, ref_g)
            gen = np.where(stop, gen + 1, gen)
        if k > 0:
            for ax in range(d):
                ref_f = np.repeat(ref_f, 2, axis=ax)
                ref_g = np.repeat(ref_g, 2, axis=ax)
                gen = np.repeat(gen, 2, axis=ax)
    order = np.argsort([-Q.side for Q in cubes], kind="stable")
    cubes = [cubes[i] for i in order]
    gens = [gens[i] for i in order]
    S = SparseCollection(cubes, RHO, gens)
    S.diagnostics = {"A0": A0, "root_level": K, "dilation": dilation,
                     "generation_decay": generation_decay(S, root)}
    return S


def generation_decay(S: SparseCollection, root: DyadicCube) -> list[float]:
    """Per generation m >= 1: max over parents P of |union of children| / |P| (|E| for the root)."""
    out = []
    if not S.generations:
        return out
    G = max(S.generations)
    for m in range(1, G + 1):
        kids = [Q for Q, g in zip(S.cubes, S.generations) if g == m]
        parents = [Q for Q, g in zip(S.cubes, S.generations) if g == m - 1]
        worst = 0.0
        for P in parents:
            meas = sum(Q.volume for Q in kids if P.contains(Q))
            base = root.volume if m == 1 else P.volume
            worst = max(worst, meas / base)
        out.append(worst)
    return out


# --- restricted weak-type upgrade ----------------------------------------------------

def level_sets(h: GridFunction, kmax: int = 52) -> dict[int, GridFunction]:
    """{k: 1_{2^{-k-1} < |h| <= 2^{-k}}} for nonempty levels, assuming |h| <= 1."""
    a = np.abs(h.values)
    out = {}
    with np.errstate(divide="ignore"):
        k = np.floor(-np.log2(np.where(a > 0, a, 1.0))).astype(np.int64)
    k = np.where(a > 0, np.clip(k, 0, None), -1)
    # values exactly 2^{-k} belong to level k: floor(-log2) gives k there already
    for lev in np.unique(k[k >= 0]):
        if lev > kmax:
            continue
        out[int(lev)] = h.with_values((k == lev).astype(float))
    return out


@dataclass
class UpgradeResult:
    collection: SparseCollection
    level_collections: dict
    restricted_sum: float
    upgraded_form: float
    upgraded_params: FormParams


def restricted_upgrade(f: GridFunction, g: GridFunction, params: FormParams, oracle=None,
                       upgraded: FormParams | None = None, A0: float = DEFAULT_A0,
                       shift=None) -> UpgradeResult:
    """Level-set decomposition plus the generation construction S(f, g).

    ``oracle(F, G) -> SparseCollection`` supplies the restricted collections
    for indicator pairs; it defaults to the stopping construction on the
    indicators. ``restricted_sum`` is sum_{k,l} 2^{-k-l} Lambda_{S_kl,p,r}(1_F_k, 1_G_l);
    ``upgraded_form`` is Lambda_{S(f,g), p~, r~}(f, g).
    """
    mf, mg = np.abs(f.values).max(initial=0), np.abs(g.values).max(initial=0)
    if mf == 0 or mg == 0:
        raise ValueError("f and g must be nonzero")
    fn, gn = f.with_values(f.values / mf), g.with_values(g.values / mg)
    if upgraded is None:
        upgraded = FormParams(params.p * 1.05, params.r * 1.05)
    if oracle is None:
        def oracle(F, G):
            return build_stopping_collection(F, G, params, A0, shift=shift)
    Fk, Gl = level_sets(fn), level_sets(gn)
    level_cols = {}
    rsum = 0.0
    for k, F in Fk.items():
        for l, G in Gl.items():
            S = oracle(F, G)
            level_cols[(k, l)] = S
            rsum += 2.0 ** (-k - l) * sparse_form(S, params, F, G)
    rsum *= mf * mg
    if len(Fk) == 1 and len(Gl) == 1 and np.all(np.isin(np.abs(fn.values), (0, 1))) \
            and np.all(np.isin(np.abs(gn.values), (0, 1))):
        S = next(iter(level_cols.values()))
    else:
        S = build_stopping_collection(fn, gn, upgraded, A0, dilation=1, shift=shift)
    form = sparse_form(S, upgraded, f, g)
    return UpgradeResult(S, level_cols, rsum, form, upgraded)


# --- empirical sparse constant ------------------------------------------------------

@dataclass
class SparseConstant:
    value: float
    argmax: int
    per_instance: list
    collection: SparseCollection


def pairing(Tf: GridFunction, g: GridFunction) -> float:
    """<|Tf|, |g|> over g's grid."""
    if g.periodic:
        return float(np.sum(np.abs(Tf.values) * np.abs(g.values)))
    return float(np.sum(np.abs(Tf.restrict_to_box(g.origin, g.shape).values) * np.abs(g.values)))


def empirical_sparse_constant(operator, params: FormParams, corpus, A0: float = DEFAULT_A0,
                              use_operator_condition: bool = True) -> SparseConstant:
    """max over (f, g) of <|Tf|, |g|> / Lambda_{S(f,g),p,r}(f, g), S from the stopping construction."""
    from .operators import make_operator

    T = make_operator(operator)
    vals, cols = [], []
    for f, g in corpus:
        if not np.any(f.values) or not np.any(g.values):
            raise ValueError("zero function in the corpus: the ratio is undefined")
        Tf = T(f)
        S = build_stopping_collection(f, g, params, A0, Tf=Tf if use_operator_condition else None)
        den = sparse_form(S, params, f, g)
        if den == 0:
            raise ValueError("sparse form vanished")
        vals.append(pairing(Tf, g) / den)
        cols.append(S)
    i = int(np.argmax(vals))
    return SparseConstant(vals[i], i, vals, cols[i])
