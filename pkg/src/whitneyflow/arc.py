"""Self-similar arc built from four contracted squares chained by bridges.

The arc is the attractor of four similarity maps of ratio ``lam`` acting on
the unit square, with consecutive child squares joined by axis-parallel
bridge segments.  Points of the arc carry quaternary addresses; the base-4
value ``0.d1 d2 d3 ...`` of an address is the height profile transported
along the arc.  It is constant on every bridge and sweeps ``[0, 1]`` across
the squares, so the sampled first-order jets (value, zero gradient) encode a
non-constant function with vanishing derivative on a connected set.

Concrete template (unit cell ``[0,1]^2``, entry ``(0,0)``, exit ``(1,0)``):

* ``T0(x,y) = lam*(y,x)``                      -> ``Q0 = [0,lam]^2``
* ``T1(x,y) = lam*(x,y) + (0, 1-lam)``         -> ``Q1 = [0,lam] x [1-lam,1]``
* ``T2(x,y) = lam*(x,y) + (1-lam, 1-lam)``     -> ``Q2 = [1-lam,1]^2``
* ``T3(x,y) = (1 - lam*y, lam - lam*x)``       -> ``Q3 = [1-lam,1] x [0,lam]``

with bridges ``B0 = {0} x [lam, 1-lam]``, ``B1 = [lam, 1-lam] x {1-lam}``
and ``B2 = {1} x [lam, 1-lam]`` linking exit of child i to entry of child
i+1.  Contraction ratios in ``(1/4, 1/2)`` keep the four closed squares
pairwise disjoint while the chain lengths ``L_n`` grow like ``(4*lam)^n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ENTRY = np.array([0.0, 0.0])
EXIT = np.array([1.0, 0.0])

PROVENANCE_CORNER = "square-corner"
PROVENANCE_BRIDGE = "bridge-sample"


class GeometryError(ValueError):
    """Raised when an arc configuration or a geometry predicate fails."""


@dataclass(frozen=True)
class ArcConfig:
    """Parameters of the arc: contraction ratio, depth and bridge sampling.

    ``lam`` must lie in ``(0.25, 0.5)``: above 1/4 so the chain length
    diverges (the criticality mechanism), below 1/2 so the four child
    squares stay disjoint.
    """

    lam: float = 1.0 / 3.0
    depth: int = 8
    bridge_spacing: float = 0.01

    def __post_init__(self):
        if not 0.25 < self.lam < 0.5:
            raise GeometryError(
                f"contraction ratio must lie in (0.25, 0.5), got {self.lam}"
            )
        if int(self.depth) != self.depth or self.depth < 1:
            raise GeometryError(f"depth must be an integer >= 1, got {self.depth}")
        if not self.bridge_spacing > 0:
            raise GeometryError(
                f"bridge_spacing must be positive, got {self.bridge_spacing}"
            )


@dataclass(frozen=True)
class Similarity:
    """Affine map ``x -> linear @ x + offset`` with ``linear = lam * R``,
    ``R`` orthogonal."""

    linear: np.ndarray
    offset: np.ndarray

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.linear.T + self.offset

    def compose(self, other: "Similarity") -> "Similarity":
        """Return ``self o other`` (apply ``other`` first)."""
        return Similarity(
            self.linear @ other.linear,
            self.linear @ other.offset + self.offset,
        )


def build_similarities(cfg: ArcConfig) -> list[Similarity]:
    """The four child maps of the template, in chaining order."""
    lam = cfg.lam
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye = np.eye(2)
    return [
        Similarity(lam * swap, np.array([0.0, 0.0])),
        Similarity(lam * eye, np.array([0.0, 1.0 - lam])),
        Similarity(lam * eye, np.array([1.0 - lam, 1.0 - lam])),
        Similarity(-lam * swap, np.array([1.0, lam])),
    ]


def bridge_templates(cfg: ArcConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Endpoint pairs of the three level-1 bridges, derived from the maps so
    the chaining contract holds bit-for-bit."""
    sims = build_similarities(cfg)
    return [(sims[i].apply(EXIT), sims[i + 1].apply(ENTRY)) for i in range(3)]


def quaternary_value(digits) -> float:
    """Base-4 value of a finite digit string; exact for <= 26 digits."""
    digits = list(digits)
    if not digits:
        raise GeometryError("address must be non-empty")
    if any(d not in (0, 1, 2, 3) for d in digits):
        raise GeometryError(f"address digits must lie in {{0,1,2,3}}: {digits}")
    acc = 0
    for d in digits:
        acc = acc * 4 + d
    return acc / 4.0 ** len(digits)


@dataclass(frozen=True)
class Address:
    """Finite quaternary address of an arc point (entry corner convention)."""

    digits: tuple[int, ...]

    def __post_init__(self):
        quaternary_value(self.digits)  # validates

    @property
    def value(self) -> float:
        return quaternary_value(self.digits)


def address_to_point(cfg: ArcConfig, digits) -> np.ndarray:
    """Entry corner of the square addressed by ``digits``:
    ``T_{d1} o ... o T_{dn}`` applied to the entry point."""
    digits = tuple(digits)
    quaternary_value(digits)
    sims = build_similarities(cfg)
    pt = ENTRY.copy()
    for d in reversed(digits):
        pt = sims[d].apply(pt)
    return pt


@dataclass(frozen=True)
class BridgeSet:
    """All bridges to the configured depth, as flat arrays.

    ``a[i]`` is the exit corner of child ``k`` and ``b[i]`` the entry corner
    of child ``k+1`` inside the same parent square; ``value[i]`` is the
    common quaternary value of both corners (a dyadic rational:
    ``value * 4**level`` is an integer).
    """

    a: np.ndarray
    b: np.ndarray
    value: np.ndarray
    level: np.ndarray

    def __len__(self):
        return len(self.value)

    def length(self) -> np.ndarray:
        return np.linalg.norm(self.b - self.a, axis=1)

    def sample_points(self, index: int, spacing: float,
                      jet_scale: float = 0.0) -> np.ndarray:
        """Sample vertices of one bridge, endpoints included."""
        a, b = self.a[index], self.b[index]
        t = bridge_sample_fractions(
            float(np.linalg.norm(b - a)), spacing, jet_scale
        )
        return a + t[:, None] * (b - a)


def bridge_sample_fractions(length: float, spacing: float,
                            jet_scale: float) -> np.ndarray:
    """Sample positions along a bridge as fractions of its length.

    Uniform sampling at spacing <= ``spacing`` plus a geometric cascade
    toward each endpoint (offsets halving from length/4 down to
    ``2 * jet_scale``).  Near a bridge endpoint the adjacent square's arc
    carries nearby jets of slightly different value at every scale; the
    cascade keeps any point between consecutive samples several times
    closer to same-value bridge jets than to those square jets, so the
    extension is pinned to the bridge's constant value along the whole
    sampled chain.
    """
    n_uni = max(1, int(np.ceil(length / spacing - 1e-12)))
    ts = list(np.arange(n_uni + 1) / n_uni)
    delta = length / 4.0
    while jet_scale > 0.0 and delta >= 2.0 * jet_scale:
        ts.append(delta / length)
        ts.append(1.0 - delta / length)
        delta /= 2.0
    return np.unique(np.asarray(ts))


def build_bridges(cfg: ArcConfig) -> BridgeSet:
    """Enumerate every bridge at levels ``1..depth``."""
    sims = build_similarities(cfg)
    exit_imgs = np.stack([s.apply(EXIT) for s in sims[:3]])
    entry_imgs = np.stack([s.apply(ENTRY) for s in sims[1:]])

    # composed maps of all words of the current length, address-major order
    linears = np.eye(2)[None]
    offsets = np.zeros((1, 2))
    values = np.zeros(1)

    out_a, out_b, out_v, out_l = [], [], [], []
    for n in range(1, cfg.depth + 1):
        m = len(values)
        for i in range(3):
            a = offsets + np.einsum("kij,j->ki", linears, exit_imgs[i])
            b = offsets + np.einsum("kij,j->ki", linears, entry_imgs[i])
            out_a.append(a)
            out_b.append(b)
            out_v.append(values + (i + 1) / 4.0 ** n)
            out_l.append(np.full(m, n, dtype=np.int32))
        if n < cfg.depth:
            # prepend digit d: T_{d.w} = T_d o T_w, matching val(d.w) = (d + val(w))/4
            new_lin = [np.einsum("ij,kjl->kil", s.linear, linears) for s in sims]
            new_off = [
                np.einsum("ij,kj->ki", s.linear, offsets) + s.offset for s in sims
            ]
            linears = np.concatenate(new_lin)
            offsets = np.concatenate(new_off)
            values = np.concatenate([(d + values) / 4.0 for d in range(4)])

    return BridgeSet(
        a=np.concatenate(out_a),
        b=np.concatenate(out_b),
        value=np.concatenate(out_v),
        level=np.concatenate(out_l),
    )


@dataclass(frozen=True)
class ArcJetSet:
    """First-order jets sampled on the arc.

    Square-corner jets are the entry and exit corners of every depth-``N``
    square (the exit of the final all-3s square is the arc endpoint whose
    parameter value 1 has no finite address, so it carries no jet; the jet
    value range is exactly ``1 - 4**-N``).  Bridge jets sample each bridge
    at spacing <= ``bridge_spacing`` with the bridge's constant value.
    All gradients are identically zero.
    """

    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    levels: np.ndarray
    provenance: np.ndarray
    config: ArcConfig
    bridges: BridgeSet = field(repr=False, default=None)

    def __len__(self):
        return len(self.values)

    @property
    def corner_mask(self) -> np.ndarray:
        return self.provenance == PROVENANCE_CORNER

    @property
    def value_range(self) -> float:
        return float(self.values.max() - self.values.min())


def sample_jets(cfg: ArcConfig) -> ArcJetSet:
    """Corner jets of all depth-``N`` squares plus bridge samples."""
    sims = build_similarities(cfg)
    entries = ENTRY[None].copy()
    exits = EXIT[None].copy()
    values = np.zeros(1)
    for _ in range(cfg.depth):
        entries = np.concatenate([s.apply(entries) for s in sims])
        exits = np.concatenate([s.apply(exits) for s in sims])
        values = np.concatenate([(d + values) / 4.0 for d in range(4)])

    quantum = 4.0 ** -cfg.depth
    # exit of the all-3s square is the global exit point: excluded (no
    # finite address carries its parameter value 1)
    exit_pts = exits[:-1]
    exit_vals = values[:-1] + quantum

    bridges = build_bridges(cfg)
    bpts, bvals, blvls = [], [], []
    jet_scale = cfg.lam ** cfg.depth
    lengths = bridges.length()
    for n in range(1, cfg.depth + 1):
        sel = np.nonzero(bridges.level == n)[0]
        if len(sel) == 0:
            continue
        # bridges of one level share one length: one fraction set per level
        t = bridge_sample_fractions(
            float(lengths[sel[0]]), cfg.bridge_spacing, jet_scale
        )[1:-1]
        if len(t) == 0:
            continue  # endpoints (already corner jets) satisfy the spacing
        a, b = bridges.a[sel], bridges.b[sel]
        pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        bpts.append(pts.reshape(-1, 2))
        bvals.append(np.repeat(bridges.value[sel], len(t)))
        blvls.append(np.full(len(sel) * len(t), n, dtype=np.int32))

    pts = [entries, exit_pts] + bpts
    vals = [values, exit_vals] + bvals
    lvls = [
        np.full(len(entries), cfg.depth, dtype=np.int32),
        np.full(len(exit_pts), cfg.depth, dtype=np.int32),
    ] + blvls
    n_corner = len(entries) + len(exit_pts)
    points = np.concatenate(pts)
    provenance = np.concatenate(
        [
            np.full(n_corner, PROVENANCE_CORNER, dtype=object),
            np.full(len(points) - n_corner, PROVENANCE_BRIDGE, dtype=object),
        ]
    )
    return ArcJetSet(
        points=points,
        values=np.concatenate(vals),
        gradients=np.zeros_like(points),
        levels=np.concatenate(lvls),
        provenance=provenance,
        config=cfg,
        bridges=bridges,
    )


def polyline(cfg: ArcConfig, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Level-``n`` polyline approximation and the quaternary value at each
    vertex.

    Vertices are the entry and exit corners of every level-``n`` square in
    chain order; the jump between consecutive square blocks is exactly a
    bridge segment, so the polyline is one connected chain from ``(0,0)``
    to ``(1,0)``.
    """
    if level < 0:
        raise GeometryError(f"polyline level must be >= 0, got {level}")
    sims = build_similarities(cfg)
    pts = np.stack([ENTRY, EXIT])
    vals = np.array([0.0, 1.0])
    for _ in range(level):
        pts = np.concatenate([s.apply(pts) for s in sims])
        vals = np.concatenate([(d + vals) / 4.0 for d in range(4)])
    return pts, vals


def polyline_length(cfg: ArcConfig, level: int) -> float:
    pts, _ = polyline(cfg, level)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def polyline_length_closed_form(lam: float, level: int) -> float:
    """``L_n = (4 lam)^n (1 + c) - c`` with ``c = 3(1-2 lam)/(4 lam - 1)``;
    reduces to ``4 (4/3)^n - 3`` at ``lam = 1/3``."""
    c = 3.0 * (1.0 - 2.0 * lam) / (4.0 * lam - 1.0)
    return (4.0 * lam) ** level * (1.0 + c) - c


def _square_boxes(cfg: ArcConfig) -> np.ndarray:
    """Axis-aligned boxes of the four child squares as (4, 2, 2): (lo, hi)."""
    sims = build_similarities(cfg)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    boxes = []
    for s in sims:
        img = s.apply(corners)
        boxes.append([img.min(axis=0), img.max(axis=0)])
    return np.array(boxes)


@dataclass(frozen=True)
class GeometryDiagnostics:
    chaining_residual: float
    min_square_gap: float
    max_bridge_penetration: float
    ok: bool
    failure: str | None


def validate_geometry(cfg: ArcConfig, tol: float = 1e-12) -> GeometryDiagnostics:
    """Check the chaining contract, square disjointness and that bridges
    meet square interiors nowhere.  Reports the first violated predicate."""
    sims = build_similarities(cfg)
    bridges = bridge_templates(cfg)
    residuals = [np.linalg.norm(sims[0].apply(ENTRY) - ENTRY)]
    for i in range(3):
        residuals.append(np.linalg.norm(sims[i].apply(EXIT) - bridges[i][0]))
        residuals.append(np.linalg.norm(sims[i + 1].apply(ENTRY) - bridges[i][1]))
    residuals.append(np.linalg.norm(sims[3].apply(EXIT) - EXIT))
    chaining = float(max(residuals))

    boxes = _square_boxes(cfg)
    gaps = []
    for i in range(4):
        for j in range(i + 1, 4):
            lo = np.maximum(boxes[i, 0], boxes[j, 0])
            hi = np.minimum(boxes[i, 1], boxes[j, 1])
            gaps.append(float(np.max(lo - hi)))
    min_gap = min(gaps)  # > 0 means separated, 0 touching, < 0 overlapping

    # bridges are axis-parallel; measure how far each dips into any open box
    penetration = 0.0
    for a, b in bridges:
        for lo, hi in boxes:
            t_lo, t_hi = 0.0, 1.0
            d = b - a
            inside = True
            for ax in range(2):
                if abs(d[ax]) < 1e-300:
                    if not (lo[ax] < a[ax] < hi[ax]):
                        inside = False
                        break
                else:
                    t0 = (lo[ax] - a[ax]) / d[ax]
                    t1 = (hi[ax] - a[ax]) / d[ax]
                    t_lo = max(t_lo, min(t0, t1))
                    t_hi = min(t_hi, max(t0, t1))
            if inside and t_hi > t_lo:
                depth_x = (t_hi - t_lo) * np.linalg.norm(d)
                penetration = max(penetration, float(depth_x))

    failure = None
    if chaining > tol:
        failure = f"chaining residual {chaining:.3e} exceeds {tol:.0e}"
    elif min_gap < -tol:
        failure = f"child squares overlap by {-min_gap:.3e}"
    elif penetration > tol:
        failure = f"bridge enters a square interior by {penetration:.3e}"
    return GeometryDiagnostics(
        chaining_residual=chaining,
        min_square_gap=min_gap,
        max_bridge_penetration=penetration,
        ok=failure is None,
        failure=failure,
    )
