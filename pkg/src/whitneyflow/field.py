"""Constructive Whitney extension of the arc jets to a C^(1,s) field on T^2.

The arc (built in chart coordinates on the unit square) is embedded into the
sub-square ``[0.1, 0.9]^2`` of the torus fundamental domain.  A quadtree
refines until each leaf is comparable to its distance from the jet set (or
hits the resolution floor at the jets themselves); each leaf is assigned its
nearest jet, and the raw extension is the normalized partition-of-unity
blend of the assigned jet values.  All jet gradients vanish, so the degree-1
Taylor polynomials of the classical scheme degenerate to constants; the
evaluator adds no linear terms.

The blend of pure arc data is multiplied by a fixed C^2 plateau cutoff that
is identically 1 on a neighborhood of the arc hull and identically 0 on a
band along the fundamental-domain boundary, which makes the periodic
extension smooth.  (Zero-value anchor jets near the boundary would instead
sit within ~0.04 of arc jets of value ~1 with all gradients zero: data no
moderate-constant C^1 extension can interpolate, producing cell-scale value
cliffs.  The cutoff keeps the jet data internally Hoelder-compatible.)

Bump profile: per axis, 1 on the cell, tapering to 0 across the 9/8-dilated
margin with a quintic smoothstep (C^2; |psi'| <= 15 and |psi''| <= 370 in
units of the half-width).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .arc import ArcJetSet

SUPPORT_DILATION = 9.0 / 8.0
# split while the center-distance to the jet set is below this many cell
# sides; guarantees diam <= dist <= 4*diam for every non-floor leaf
_SPLIT_FACTOR = 2.13


class CoverError(RuntimeError):
    """Raised when the quadtree cannot satisfy its construction contract."""


@dataclass(frozen=True)
class Embedding:
    """Affine chart-to-torus placement ``q = offset + scale * x``."""

    scale: float = 0.8
    offset: tuple[float, float] = (0.1, 0.1)

    def apply(self, pts):
        return np.asarray(pts, dtype=float) * self.scale + np.asarray(self.offset)


# plateau cutoff: 1 on [PLATEAU_LO, PLATEAU_HI] per axis, 0 within
# CUTOFF_ZERO of the fundamental-domain boundary, smoothstep between
CUTOFF_ZERO = 0.02
PLATEAU_LO = 0.06
PLATEAU_HI = 0.94


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def _smoothstep_deriv(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30.0 * u * u * (1.0 - u) * (1.0 - u), 0.0)


def _cutoff_1d(x):
    w = PLATEAU_LO - CUTOFF_ZERO
    rise = _smoothstep((x - CUTOFF_ZERO) / w)
    fall = _smoothstep((1.0 - CUTOFF_ZERO - x) / w)
    return np.minimum(rise, fall)


def _cutoff_1d_deriv(x):
    w = PLATEAU_LO - CUTOFF_ZERO
    rise = _smoothstep((x - CUTOFF_ZERO) / w)
    fall = _smoothstep((1.0 - CUTOFF_ZERO - x) / w)
    d_rise = _smoothstep_deriv((x - CUTOFF_ZERO) / w) / w
    d_fall = -_smoothstep_deriv((1.0 - CUTOFF_ZERO - x) / w) / w
    return np.where(rise < fall, d_rise, np.where(fall < rise, d_fall, 0.0))


def plateau_cutoff(pts):
    """C^2 cutoff: 1 on the arc-hull plateau, 0 near the domain boundary."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return _cutoff_1d(pts[:, 0]) * _cutoff_1d(pts[:, 1])


def plateau_cutoff_gradient(pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cx, cy = _cutoff_1d(pts[:, 0]), _cutoff_1d(pts[:, 1])
    return np.column_stack(
        [_cutoff_1d_deriv(pts[:, 0]) * cy, cx * _cutoff_1d_deriv(pts[:, 1])]
    )


def _bump(t):
    """C^2 taper: 1 for |t|<=1, 0 for |t|>=9/8, quintic smoothstep between."""
    a = np.abs(t)
    u = np.clip((a - 1.0) * 8.0, 0.0, 1.0)
    s = 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    return np.where(a >= SUPPORT_DILATION, 0.0, np.where(a <= 1.0, 1.0, s))


def _bump_deriv(t):
    a = np.abs(t)
    u = np.clip((a - 1.0) * 8.0, 0.0, 1.0)
    ds = -8.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u)
    inside = (a > 1.0) & (a < SUPPORT_DILATION)
    return np.where(inside, np.sign(t) * ds, 0.0)


@dataclass
class _LeafClass:
    """All leaves of one dyadic size, indexed by packed cell coordinates."""

    size: float
    keys: np.ndarray          # sorted packed (ix << 32 | iy)
    values: np.ndarray        # assigned jet value per leaf, key-sorted
    jet_index: np.ndarray     # assigned jet per leaf, key-sorted
    is_floor: np.ndarray      # resolution-floor leaves (may touch jets)


@dataclass
class WhitneyCover:
    """Quadtree leaves with nearest-jet assignment, grouped by size."""

    classes: list[_LeafClass]
    resolution: float
    n_leaves: int

    def leaf_arrays(self):
        """Concatenated (center, size, jet_index, is_floor) over all leaves."""
        cx, cy, sz, ji, fl = [], [], [], [], []
        for cl in self.classes:
            ix = (cl.keys >> 32).astype(float)
            iy = (cl.keys & 0xFFFFFFFF).astype(float)
            cx.append((ix + 0.5) * cl.size)
            cy.append((iy + 0.5) * cl.size)
            sz.append(np.full(len(cl.keys), cl.size))
            ji.append(cl.jet_index)
            fl.append(cl.is_floor)
        return (
            np.column_stack([np.concatenate(cx), np.concatenate(cy)]),
            np.concatenate(sz),
            np.concatenate(ji),
            np.concatenate(fl),
        )


def build_cover(
    points: np.ndarray,
    values: np.ndarray,
    resolution: float,
    max_depth: int = 24,
) -> WhitneyCover:
    """Whitney quadtree of the unit square around the given jets.

    A cell splits while its center lies closer than ``_SPLIT_FACTOR`` cell
    sides to the jet set and its children stay at or above ``resolution``.
    Cells pinned at the resolution floor may contain jets; all other leaves
    satisfy ``diam <= dist(cell, jets) <= 4 diam``.
    """
    if len(points) == 0:
        raise CoverError("jet set is empty")
    tree = cKDTree(points)
    classes = []
    ix = np.zeros(1, dtype=np.int64)
    iy = np.zeros(1, dtype=np.int64)
    size = 1.0
    depth = 0
    n_leaves = 0
    while len(ix):
        centers = np.column_stack([(ix + 0.5) * size, (iy + 0.5) * size])
        d, idx = tree.query(centers, k=2, workers=1)
        ties = d[:, 0] == d[:, 1]
        nearest = np.where(ties, np.minimum(idx[:, 0], idx[:, 1]), idx[:, 0])
        dist = d[:, 0]
        whitney_ok = dist >= _SPLIT_FACTOR * size
        can_split = size / 2.0 >= resolution * (1.0 - 1e-12)
        if can_split and depth >= max_depth and not whitney_ok.all():
            raise CoverError(
                f"cover recursion exceeds max tree depth {max_depth} "
                f"(cell size {size:.3e}, resolution {resolution:.3e})"
            )
        leaf = whitney_ok | (not can_split)
        if leaf.any():
            order = np.argsort((ix[leaf] << 32) | iy[leaf], kind="stable")
            keys = ((ix[leaf] << 32) | iy[leaf])[order]
            classes.append(
                _LeafClass(
                    size=size,
                    keys=keys,
                    values=values[nearest[leaf]][order],
                    jet_index=nearest[leaf][order],
                    is_floor=(~whitney_ok[leaf])[order],
                )
            )
            n_leaves += int(leaf.sum())
        split = ~leaf
        ix, iy = ix[split], iy[split]
        ix = np.concatenate([2 * ix, 2 * ix + 1, 2 * ix, 2 * ix + 1])
        iy = np.concatenate([2 * iy, 2 * iy, 2 * iy + 1, 2 * iy + 1])
        size /= 2.0
        depth += 1
    return WhitneyCover(classes=classes, resolution=resolution, n_leaves=n_leaves)


@dataclass
class WhitneyField:
    """Evaluator of the extended field and its gradient on the torus.

    Points within ``snap_tol`` of a jet return the stored jet data exactly;
    elsewhere the normalized partition-of-unity blend (and its analytic
    gradient) is used.  Immutable after construction; safe for concurrent
    reads.
    """

    jet_points: np.ndarray
    jet_values: np.ndarray
    arc_mask: np.ndarray
    cover: WhitneyCover
    tree: cKDTree = field(repr=False)
    lam: float = 1.0 / 3.0
    depth: int = 8
    embedding: Embedding = Embedding()
    snap_tol: float = 1e-12

    @property
    def arc_points(self) -> np.ndarray:
        return self.jet_points[self.arc_mask]

    @property
    def arc_values(self) -> np.ndarray:
        return self.jet_values[self.arc_mask]

    def _blend(self, pts, want_grad):
        n = len(pts)
        s0 = np.zeros(n)
        s1 = np.zeros(n)
        g0 = np.zeros((n, 2))
        g1 = np.zeros((n, 2))
        for cl in self.cover.classes:
            a = cl.size
            half = a / 2.0
            base_x = np.floor(pts[:, 0] / a - 0.5).astype(np.int64)
            base_y = np.floor(pts[:, 1] / a - 0.5).astype(np.int64)
            for dx_ in (-1, 0, 1):
                cand_x = base_x + dx_
                tx = (pts[:, 0] - (cand_x + 0.5) * a) / half
                mx = np.abs(tx) < SUPPORT_DILATION
                if not mx.any():
                    continue
                for dy_ in (-1, 0, 1):
                    cand_y = base_y + dy_
                    ty = (pts[:, 1] - (cand_y + 0.5) * a) / half
                    m = mx & (np.abs(ty) < SUPPORT_DILATION)
                    if not m.any():
                        continue
                    keys = (cand_x[m] << 32) | cand_y[m]
                    pos = np.searchsorted(cl.keys, keys)
                    pos_ok = pos < len(cl.keys)
                    hit = np.zeros(len(keys), dtype=bool)
                    hit[pos_ok] = cl.keys[pos[pos_ok]] == keys[pos_ok]
                    if not hit.any():
                        continue
                    rows = np.nonzero(m)[0][hit]
                    v = cl.values[pos[hit]]
                    px = _bump(tx[rows])
                    py = _bump(ty[rows])
                    phi = px * py
                    np.add.at(s0, rows, phi)
                    np.add.at(s1, rows, phi * v)
                    if want_grad:
                        dpx = _bump_deriv(tx[rows]) / half
                        dpy = _bump_deriv(ty[rows]) / half
                        gx = dpx * py
                        gy = px * dpy
                        np.add.at(g0[:, 0], rows, gx)
                        np.add.at(g0[:, 1], rows, gy)
                        np.add.at(g1[:, 0], rows, gx * v)
                        np.add.at(g1[:, 1], rows, gy * v)
        if np.any(s0 <= 0.0):
            raise CoverError("partition of unity vanished at an evaluation point")
        val = s1 / s0
        if not want_grad:
            return val, None
        grad = (g1 - val[:, None] * g0) / s0[:, None]
        return val, grad

    def _eval(self, pts, want_grad):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        pts = pts - np.floor(pts)
        d, idx = self.tree.query(pts, workers=1)
        snapped = d <= self.snap_tol
        val = np.empty(len(pts))
        grad = np.zeros((len(pts), 2)) if want_grad else None
        if snapped.any():
            # jets sit on the cutoff plateau: chi = 1, grad chi = 0 there
            val[snapped] = self.jet_values[idx[snapped]]
        free = ~snapped
        if free.any():
            fp = pts[free]
            v, g = self._blend(fp, want_grad)
            chi = plateau_cutoff(fp)
            val[free] = np.clip(v * chi, 0.0, 1.0)
            if want_grad:
                grad[free] = chi[:, None] * g + v[:, None] * plateau_cutoff_gradient(fp)
        return val, grad

    def value(self, pts) -> np.ndarray:
        """Field value; scalar input gives a length-1 array."""
        return self._eval(pts, want_grad=False)[0]

    def gradient(self, pts) -> np.ndarray:
        return self._eval(pts, want_grad=True)[1]

    def value_and_gradient(self, pts):
        return self._eval(pts, want_grad=True)

    def active_support_count(self, pts) -> np.ndarray:
        """Number of dilated leaf supports containing each point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        count = np.zeros(len(pts), dtype=np.int64)
        for cl in self.cover.classes:
            a = cl.size
            half = a / 2.0
            base_x = np.floor(pts[:, 0] / a - 0.5).astype(np.int64)
            base_y = np.floor(pts[:, 1] / a - 0.5).astype(np.int64)
            for dx_ in (-1, 0, 1):
                for dy_ in (-1, 0, 1):
                    cand_x = base_x + dx_
                    cand_y = base_y + dy_
                    tx = (pts[:, 0] - (cand_x + 0.5) * a) / half
                    ty = (pts[:, 1] - (cand_y + 0.5) * a) / half
                    m = (np.abs(tx) < SUPPORT_DILATION) & (
                        np.abs(ty) < SUPPORT_DILATION
                    )
                    if not m.any():
                        continue
                    keys = (cand_x[m] << 32) | cand_y[m]
                    pos = np.searchsorted(cl.keys, keys)
                    pos_ok = pos < len(cl.keys)
                    hit = np.zeros(len(keys), dtype=bool)
                    hit[pos_ok] = cl.keys[pos[pos_ok]] == keys[pos_ok]
                    count[np.nonzero(m)[0][hit]] += 1
        return count


def build_field(
    jets: ArcJetSet,
    embedding: Embedding = Embedding(),
    resolution: float | None = None,
    snap_tol: float = 1e-12,
    max_depth: int = 24,
) -> WhitneyField:
    """Embed the arc jets into the torus and build the extension evaluator.

    ``resolution`` defaults to ``0.4 * scale * lam**depth``: half the minimum
    separation between jets of different value, which keeps the blend locally
    constant around every jet.  Must not exceed ``lam**depth``.
    """
    lam, depth = jets.config.lam, jets.config.depth
    if resolution is None:
        resolution = 0.4 * embedding.scale * lam ** depth
    if resolution > lam ** depth:
        raise CoverError(
            f"resolution {resolution:.3e} exceeds the jet scale "
            f"lam**depth = {lam ** depth:.3e}"
        )
    points = embedding.apply(jets.points)
    values = jets.values.copy()
    arc_mask = np.ones(len(points), dtype=bool)
    cover = build_cover(points, values, resolution, max_depth=max_depth)
    tree = cKDTree(points)
    return WhitneyField(
        jet_points=points,
        jet_values=values,
        arc_mask=arc_mask,
        cover=cover,
        tree=tree,
        lam=lam,
        depth=depth,
        embedding=embedding,
        snap_tol=snap_tol,
    )


def fd_gradient(value_fn, pts, h: float) -> np.ndarray:
    """Central finite-difference gradient of a scalar field at scale ``h``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    gx = (value_fn(pts + ex) - value_fn(pts - ex)) / (2.0 * h)
    gy = (value_fn(pts + ey) - value_fn(pts - ey)) / (2.0 * h)
    return np.column_stack([gx, gy])


def max_jet_fd_gradient(field_: WhitneyField, h: float) -> float:
    """Max finite-difference gradient magnitude over all arc jets."""
    g = fd_gradient(field_.value, field_.arc_points, h)
    return float(np.linalg.norm(g, axis=1).max())


def holder_index(lam: float) -> float:
    """The exponent ``s`` with ``lam**(1+s) = 1/4``: ``s = ln(4 lam)/ln(1/lam)``."""
    return float(np.log(4.0 * lam) / np.log(1.0 / lam))


def _jet_pairs(points, values, k_neighbors, n_random, seed):
    """Deterministic k-NN pairs plus seeded random pairs over the jets."""
    tree = cKDTree(points)
    k = min(k_neighbors + 1, len(points))
    d, idx = tree.query(points, k=k, workers=1)
    i = np.repeat(np.arange(len(points)), k - 1)
    j = idx[:, 1:].ravel()
    dist = d[:, 1:].ravel()
    dv = np.abs(values[i] - values[j])
    rng = np.random.default_rng(seed)
    a = rng.integers(0, len(points), size=n_random)
    b = rng.integers(0, len(points), size=n_random)
    keep = a != b
    a, b = a[keep], b[keep]
    rd = np.linalg.norm(points[a] - points[b], axis=1)
    rdv = np.abs(values[a] - values[b])
    return np.concatenate([dist, rd]), np.concatenate([dv, rdv])


def whitney_condition_check(
    jets_points: np.ndarray,
    jets_values: np.ndarray,
    s: float,
    n_random: int = 100_000,
    k_neighbors: int = 8,
    seed: int = 2024,
) -> tuple[float, int]:
    """Sup of ``|f(x)-f(y)| / |x-y|**(1+s)`` over sampled jet pairs.

    Finite and stable in the pair count when ``s`` is the similarity index
    of the arc; grows with depth for larger ``s``.  Returns ``(M, pairs)``.
    """
    dist, dv = _jet_pairs(jets_points, jets_values, k_neighbors, n_random, seed)
    good = dist > 0
    ratio = dv[good] / dist[good] ** (1.0 + s)
    return float(ratio.max()), int(good.sum())


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    constant: float
    pairs_used: int


def holder_exponent(
    jets: ArcJetSet,
    pairs_per_level: int = 3000,
    seed: int = 2024,
) -> HolderEstimate:
    """Log-log regression of value increments against distance over jet
    pairs with diverging addresses; the slope estimates ``1 + s``.

    Entry-corner pairs are sampled per divergence depth j (addresses share
    the first j-1 digits and differ at digit j), so every distance octave is
    populated by the same self-similar pair law: distances scale like
    ``lam**j`` and value increments like ``4**-j``.  Per-level medians of
    the log quantities feed a least-squares fit; medians sit far from the
    depth-``N`` truncation, so the slope is scale-stable.
    """
    cfg = jets.config
    lam, depth = cfg.lam, cfg.depth
    if depth < 3:
        raise ValueError("holder_exponent needs depth >= 3")
    n_entries = 4 ** depth
    pts = jets.points[:n_entries]  # entry corners, word-lexicographic order
    vals = jets.values[:n_entries]
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    used = 0
    for j in range(1, max(depth - 1, 2)):
        w = 4 ** (depth - j)
        k1 = rng.integers(0, n_entries, size=pairs_per_level)
        high = k1 // (w * 4)
        dj = (k1 // w) % 4
        dj2 = (dj + rng.integers(1, 4, size=pairs_per_level)) % 4
        low2 = rng.integers(0, w, size=pairs_per_level)
        k2 = high * (w * 4) + dj2 * w + low2
        d = np.linalg.norm(pts[k1] - pts[k2], axis=1)
        dv = np.abs(vals[k1] - vals[k2])
        good = (d > 0) & (dv > 0)
        used += int(good.sum())
        xs.append(np.median(np.log(d[good])))
        ys.append(np.median(np.log(dv[good])))
    slope, intercept = np.polyfit(xs, ys, 1)
    return HolderEstimate(
        exponent=float(slope),
        constant=float(np.exp(intercept)),
        pairs_used=used,
    )
