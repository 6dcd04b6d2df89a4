"""Critical-value measure scans and rectifiable-path diagnostics.

A grid scan flags the cells whose gradient is small enough that a critical
point could hide inside, covers each flagged value with a per-cell Lipschitz
interval, and merges the intervals exactly.  Smooth potentials concentrate
their critical values on a few short intervals; the extended arc field
pushes a full unit of value range into its flagged set.  Path reports carry
the midpoint-rule integral of grad h along a polyline together with the
total variation of h at the vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arc import ArcConfig, BridgeSet, bridge_sample_fractions, polyline


@dataclass(frozen=True)
class GridScan:
    spacing: float
    eps: float  # threshold applied (max over cells when auto-coupled)
    centers: np.ndarray
    values: np.ndarray
    gradnorms: np.ndarray
    local_lipschitz: np.ndarray
    grad_lipschitz: float  # empirical Lipschitz bound of grad h on the grid
    value_min: float = 0.0  # observed range of h over the whole grid
    value_max: float = 0.0


def scan_grid(value_fn, grad_fn, spacing: float, eps: float | None = None) -> GridScan:
    """Flag grid cells whose gradient is too small to exclude a critical
    point inside the cell.

    With a scalar ``eps`` a cell is flagged iff ``|grad h| < eps`` at its
    center.  With ``eps=None`` the threshold couples to the spacing per cell:
    ``eps_c = max(1e-3, C_c * spacing)`` where ``C_c`` is the local grid
    Lipschitz estimate of grad h, i.e. exactly the cells whose gradient can
    reach zero within one cell are flagged.
    """
    n = int(round(1.0 / spacing))
    ticks = np.arange(n) * spacing
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    vals = np.asarray(value_fn(pts)).reshape(n, n)
    grads = np.asarray(grad_fn(pts)).reshape(n, n, 2)
    gnorm = np.linalg.norm(grads, axis=2)

    # local and global Lipschitz estimates of the gradient field (wrapped)
    c_local = np.zeros((n, n))
    for axis in (0, 1):
        for shift in (1, -1):
            diff = np.linalg.norm(grads - np.roll(grads, shift, axis=axis), axis=2)
            c_local = np.maximum(c_local, diff)
    c_local /= spacing
    c_grad = float(c_local.max())

    if eps is None:
        thresholds = np.maximum(1e-3, c_local * spacing)
    else:
        thresholds = np.full((n, n), float(eps))
    flagged = gnorm < thresholds

    # per-cell Lipschitz bound of h from the four axis-neighbor differences
    lip = np.zeros((n, n))
    for axis in (0, 1):
        for shift in (1, -1):
            lip = np.maximum(lip, np.abs(vals - np.roll(vals, shift, axis=axis)))
    lip /= spacing

    idx = np.nonzero(flagged.ravel())[0]
    eps_applied = float(eps) if eps is not None else float(thresholds.ravel()[idx].max()) if len(idx) else 1e-3
    return GridScan(
        spacing=spacing,
        eps=eps_applied,
        centers=pts[idx],
        values=vals.ravel()[idx],
        gradnorms=gnorm.ravel()[idx],
        local_lipschitz=lip.ravel()[idx],
        grad_lipschitz=c_grad,
        value_min=float(vals.min()),
        value_max=float(vals.max()),
    )


@dataclass(frozen=True)
class MeasureReport:
    measure: float
    interval_count: int
    spacing: float
    eps: float
    lipschitz_bound: float
    flagged_cells: int


def merge_intervals(lo: np.ndarray, hi: np.ndarray) -> tuple[float, int]:
    """Exact length and count of the union of closed intervals."""
    if len(lo) == 0:
        return 0.0, 0
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    total = 0.0
    count = 0
    cur_lo, cur_hi = lo[0], hi[0]
    for a, b in zip(lo[1:], hi[1:]):
        if a <= cur_hi:
            cur_hi = max(cur_hi, b)
        else:
            total += cur_hi - cur_lo
            count += 1
            cur_lo, cur_hi = a, b
    total += cur_hi - cur_lo
    return float(total), count + 1


def critical_value_measure(
    value_fn, grad_fn, spacing: float, eps: float | None = None
) -> MeasureReport:
    """Length of the union of per-cell value intervals over flagged cells.

    Each flagged cell contributes ``[h(c) - L_c h, h(c) + L_c h]`` with
    ``L_c`` its local grid Lipschitz estimate, clipped to the observed range
    of h (critical values lie in the range of h).
    """
    scan = scan_grid(value_fn, grad_fn, spacing, eps)
    half = scan.local_lipschitz * scan.spacing
    lo = np.maximum(scan.values - half, scan.value_min)
    hi = np.minimum(scan.values + half, scan.value_max)
    measure, count = merge_intervals(lo, hi)
    return MeasureReport(
        measure=measure,
        interval_count=count,
        spacing=scan.spacing,
        eps=scan.eps,
        lipschitz_bound=float(scan.local_lipschitz.max()) if len(scan.values) else 0.0,
        flagged_cells=len(scan.values),
    )


@dataclass(frozen=True)
class DichotomyReport:
    whitney: MeasureReport
    control: MeasureReport
    ratio: float


def dichotomy_experiment(
    whitney_value_fn,
    whitney_grad_fn,
    control_value_fn,
    control_grad_fn,
    spacing: float = 1.0 / 512.0,
    control_eps: float = 1e-2,
    whitney_eps: float | None = None,
) -> DichotomyReport:
    """Paired critical-value measures: smooth control versus the arc field."""
    control = critical_value_measure(
        control_value_fn, control_grad_fn, spacing, control_eps
    )
    whitney = critical_value_measure(
        whitney_value_fn, whitney_grad_fn, spacing, whitney_eps
    )
    ratio = whitney.measure / control.measure if control.measure > 0 else np.inf
    return DichotomyReport(whitney=whitney, control=control, ratio=float(ratio))


@dataclass(frozen=True)
class PathIntegralReport:
    path_id: str
    integral: float
    variation: float
    length: float


def path_integral_H(
    value_fn, grad_fn, vertices: np.ndarray, path_id: str = "path"
) -> PathIntegralReport:
    """Midpoint-rule estimate of the gradient line integral along a polyline,
    plus the total variation of h over the vertices and the polyline length."""
    vertices = np.asarray(vertices, dtype=float)
    deltas = np.diff(vertices, axis=0)
    mids = 0.5 * (vertices[1:] + vertices[:-1])
    g = np.asarray(grad_fn(mids))
    integral = float(np.sum(g * deltas))
    h = np.asarray(value_fn(vertices))
    variation = float(np.sum(np.abs(np.diff(h))))
    length = float(np.sum(np.linalg.norm(deltas, axis=1)))
    return PathIntegralReport(
        path_id=path_id, integral=integral, variation=variation, length=length
    )


@dataclass(frozen=True)
class BridgeCheckReport:
    levels: np.ndarray
    variations: np.ndarray
    integrals: np.ndarray

    def worst_by_level(self):
        out = {}
        for lvl in np.unique(self.levels):
            m = self.levels == lvl
            out[int(lvl)] = (
                float(self.variations[m].max()),
                float(np.abs(self.integrals[m]).max()),
            )
        return out


def bridge_checks(
    value_fn,
    grad_fn,
    bridges: BridgeSet,
    bridge_spacing: float,
    jet_scale: float = 0.0,
    transform=None,
) -> BridgeCheckReport:
    """Per-bridge constancy report: h-variation over each bridge's samples
    and the midpoint-rule integral of grad h along it.

    ``transform`` maps bridge chart coordinates into the field's domain.
    Vertices follow the bridge jet-sampling rule (with ``jet_scale`` set to
    ``lam**depth`` they coincide with the jet set), so every quadrature node
    sits between jets of equal value.  All bridges are evaluated in two
    batched field calls.
    """
    lengths = bridges.length()
    fractions_by_level = {}
    for lvl in np.unique(bridges.level):
        i0 = int(np.nonzero(bridges.level == lvl)[0][0])
        fractions_by_level[int(lvl)] = bridge_sample_fractions(
            float(lengths[i0]), bridge_spacing, jet_scale
        )
    verts, owner = [], []
    for i in range(len(bridges)):
        t = fractions_by_level[int(bridges.level[i])]
        pts = bridges.a[i] + t[:, None] * (bridges.b[i] - bridges.a[i])
        verts.append(pts)
        owner.append(np.full(len(pts), i))
    verts = np.concatenate(verts)
    owner = np.concatenate(owner)
    eval_verts = transform(verts) if transform is not None else verts

    h = np.asarray(value_fn(eval_verts))
    same = owner[:-1] == owner[1:]
    seg_owner = owner[:-1][same]
    dh = np.abs(np.diff(h))[same]
    variations = np.bincount(seg_owner, weights=dh, minlength=len(bridges))

    mids = 0.5 * (eval_verts[1:] + eval_verts[:-1])[same]
    deltas = np.diff(eval_verts, axis=0)[same]
    g = np.asarray(grad_fn(mids))
    contrib = np.sum(g * deltas, axis=1)
    integrals = np.bincount(seg_owner, weights=contrib, minlength=len(bridges))

    return BridgeCheckReport(
        levels=bridges.level.copy(),
        variations=variations,
        integrals=integrals,
    )


@dataclass(frozen=True)
class NonconstancyReport:
    value_range: float
    max_gradient: float
    depth: int
    gradient_scale: float


def nonconstancy_report(
    jet_values: np.ndarray,
    max_gradient: float,
    depth: int,
    gradient_scale: float,
) -> NonconstancyReport:
    """Range of the field over the invariant-set jets, with the measured
    gradient bound at the stated probe scale."""
    values = np.asarray(jet_values, dtype=float)
    rng = float(values.max() - values.min()) if len(values) else 0.0
    return NonconstancyReport(
        value_range=rng,
        max_gradient=float(max_gradient),
        depth=depth,
        gradient_scale=gradient_scale,
    )


def end_to_end_path_report(
    cfg: ArcConfig, level: int, value_fn, grad_fn, transform=None
) -> PathIntegralReport:
    """Path report for the full level-n polyline (in chart length units)."""
    pts, _ = polyline(cfg, level)
    chart_len = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    eval_pts = transform(pts) if transform is not None else pts
    rep = path_integral_H(value_fn, grad_fn, eval_pts, path_id=f"polyline-{level}")
    return PathIntegralReport(
        path_id=rep.path_id,
        integral=rep.integral,
        variation=rep.variation,
        length=chart_len,
    )
