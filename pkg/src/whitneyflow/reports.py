"""Deterministic artifact writers: CSV, JSON, SVG and the run manifest.

Every writer produces byte-identical output for identical inputs: floats go
through ``repr``, JSON keys are sorted, newlines are ``\\n``, and nothing
timestamps itself.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import __version__
from .arc import polyline, validate_geometry
from .field import HolderEstimate
from .flow import DriftReport, Trajectory
from .sard import DichotomyReport, GridScan


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: str, columns) -> None:
    columns = [np.asarray(c) for c in columns]
    rows = len(columns[0])
    lines = [header]
    for i in range(rows):
        lines.append(",".join(_fmt(c[i]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_arc_svg(path, cfg, level: int, outline_levels: int = 3) -> None:
    """Polyline plus child-square outlines in a fixed 1024x1024 viewport."""
    from .arc import build_similarities

    size = 1024.0
    margin = 64.0
    scale = size - 2 * margin

    def to_view(pts):
        pts = np.asarray(pts, dtype=float)
        x = margin + pts[:, 0] * scale
        y = size - margin - pts[:, 1] * scale
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="1024" height="1024" '
        f'viewBox="0 0 1024 1024">',
        '<rect width="1024" height="1024" fill="white"/>',
    ]
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    sims = build_similarities(cfg)
    boxes = [corners]
    for lvl in range(min(outline_levels, level)):
        boxes = [s.apply(b) for s in sims for b in boxes]
        for box in boxes:
            x, y = to_view(box)
            pts_attr = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
            parts.append(
                f'<polygon points="{pts_attr}" fill="none" '
                f'stroke="#bbbbbb" stroke-width="0.6"/>'
            )
    pts, _ = polyline(cfg, level)
    x, y = to_view(pts)
    pts_attr = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
    parts.append(
        f'<polyline points="{pts_attr}" fill="none" '
        f'stroke="#003366" stroke-width="0.8"/>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def emit_arc_files(out_dir, cfg, jets, svg_level: int | None = None) -> list[str]:
    arc_cfg = cfg.arc_config()
    names = []
    write_csv(
        os.path.join(out_dir, "arc_jets.csv"),
        "x,y,value,level,provenance",
        [jets.points[:, 0], jets.points[:, 1], jets.values, jets.levels,
         jets.provenance],
    )
    names.append("arc_jets.csv")
    level = arc_cfg.depth if svg_level is None else svg_level
    pts, vals = polyline(arc_cfg, min(level, 8))
    write_csv(
        os.path.join(out_dir, "arc_polyline.csv"),
        "x,y,value,level,provenance",
        [pts[:, 0], pts[:, 1], vals,
         np.full(len(pts), min(level, 8), dtype=np.int64),
         np.full(len(pts), "square-corner", dtype=object)],
    )
    names.append("arc_polyline.csv")
    write_arc_svg(os.path.join(out_dir, "arc.svg"), arc_cfg, min(level, 8))
    names.append("arc.svg")
    diag = validate_geometry(arc_cfg)
    write_json(
        os.path.join(out_dir, "geometry.json"),
        {
            "chaining_residual": diag.chaining_residual,
            "min_square_gap": diag.min_square_gap,
            "max_bridge_penetration": diag.max_bridge_penetration,
            "ok": diag.ok,
            "failure": diag.failure,
        },
    )
    names.append("geometry.json")
    return names


def emit_field_files(out_dir, cfg, fld, holder: HolderEstimate,
                     grid: int = 256) -> list[str]:
    ticks = np.arange(grid) / grid
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    vals, grads = fld.value_and_gradient(pts)
    write_csv(
        os.path.join(out_dir, "field_grid.csv"),
        "x,y,f,gx,gy",
        [pts[:, 0], pts[:, 1], vals, grads[:, 0], grads[:, 1]],
    )
    write_json(
        os.path.join(out_dir, "holder.json"),
        {
            "lambda": cfg.lam,
            "depth": cfg.depth,
            "exponent": holder.exponent,
            "constant": holder.constant,
            "pairs": holder.pairs_used,
        },
    )
    return ["field_grid.csv", "holder.json"]


def emit_trajectory_file(out_dir, traj: Trajectory, name="trajectory.csv") -> str:
    d = traj.q.shape[1]
    header = (
        "t,"
        + ",".join(f"q{k+1}" for k in range(d))
        + ","
        + ",".join(f"p{k+1}" for k in range(d))
        + ",H"
    )
    cols = [traj.times]
    cols += [traj.q[:, k] for k in range(d)]
    cols += [traj.p[:, k] for k in range(d)]
    cols.append(traj.energy)
    write_csv(os.path.join(out_dir, name), header, cols)
    return name


def emit_drift_file(out_dir, cfg, report: DriftReport,
                    calibrated_tolerance: float,
                    name="drift.json") -> str:
    write_json(
        os.path.join(out_dir, name),
        {
            "variant": report.variant,
            "N": cfg.depth,
            "tau": report.tau,
            "T": report.duration,
            "seed": report.seed,
            "count": report.count,
            "max_drift": report.max_drift,
            "max_energy_drift": report.max_energy_drift,
            "calibrated_tolerance": calibrated_tolerance,
        },
    )
    return name


def emit_sard_files(out_dir, cfg, dichotomy: DichotomyReport,
                    scan: GridScan) -> list[str]:
    def report_dict(rep):
        return {
            "measure": rep.measure,
            "interval_count": rep.interval_count,
            "spacing": rep.spacing,
            "eps": rep.eps,
            "lipschitz_bound": rep.lipschitz_bound,
            "flagged_cells": rep.flagged_cells,
        }

    write_json(
        os.path.join(out_dir, "sard_dichotomy.json"),
        {
            "whitney": report_dict(dichotomy.whitney),
            "control": report_dict(dichotomy.control),
            "ratio": dichotomy.ratio,
        },
    )
    write_csv(
        os.path.join(out_dir, "sard_flagged.csv"),
        "x,y,f,gradnorm",
        [scan.centers[:, 0], scan.centers[:, 1], scan.values, scan.gradnorms],
    )
    return ["sard_dichotomy.json", "sard_flagged.csv"]


def write_manifest(out_dir, cfg, artifacts, results=None, tolerances=None,
                   name="manifest.json") -> str:
    write_json(
        os.path.join(out_dir, name),
        {
            "config": cfg.to_mapping(),
            "version": __version__,
            "artifacts": sorted(artifacts),
            "results": results or {},
            "calibrated_tolerances": tolerances or {},
        },
    )
    return name
