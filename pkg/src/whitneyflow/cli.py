"""Command-line interface: arc / field / flow / sard / verify / report.

Exit codes: 0 success, 1 acceptance-criteria failure, 2 configuration error.
All outputs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import arc, field, flow, reports, sard, verify
from . import hamiltonian as ham
from .config import ConfigError, ExperimentConfig, load_config, with_overrides


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    return with_overrides(cfg, seed=args.seed, out=args.out)


def _outdir(cfg) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def cmd_arc(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    jets = arc.sample_jets(cfg.arc_config())
    names = reports.emit_arc_files(out, cfg, jets, svg_level=min(cfg.depth, 8))
    names.append(reports.write_manifest(out, cfg, names))
    print(f"wrote {len(names)} files to {out}")
    return 0


def cmd_field(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    jets = arc.sample_jets(cfg.arc_config())
    fld = field.build_field(jets, resolution=cfg.resolution)
    holder = field.holder_exponent(jets, seed=cfg.rng_seed)
    names = reports.emit_field_files(out, cfg, fld, holder)
    names.append(reports.write_manifest(out, cfg, names))
    print(
        f"field built: {len(jets)} jets, {fld.cover.n_leaves} cover leaves, "
        f"Hoelder exponent {holder.exponent:.4f}; wrote {len(names)} files to {out}"
    )
    return 0


def _hamiltonian_spec(cfg, fld) -> ham.HamiltonianSpec:
    gamma = (
        ham.GraphSection(kind="constant", c=np.asarray(cfg.gamma_c))
        if cfg.gamma_kind == "constant"
        else ham.GraphSection(kind="zero")
    )
    return ham.HamiltonianSpec(variant=cfg.variant, fld=fld, gamma=gamma)


def cmd_flow(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    jets = arc.sample_jets(cfg.arc_config())
    fld = field.build_field(jets, resolution=cfg.resolution)
    spec = _hamiltonian_spec(cfg, fld)
    rep, tol = verify.invariance_experiment(cfg, fld, cfg.variant)

    d = spec.dim
    q0 = fld.arc_points[0]
    if d == 3:
        q0 = np.concatenate([q0, [0.0]])
    p0 = np.zeros(d)
    if cfg.gamma_kind == "constant" and cfg.variant == "shifted":
        p0 = np.asarray(cfg.gamma_c, dtype=float)
    traj = flow.integrate(spec, q0, p0, cfg.integrator_config())

    names = [
        reports.emit_trajectory_file(out, traj),
        reports.emit_drift_file(out, cfg, rep, tol),
    ]
    names.append(
        reports.write_manifest(
            out, cfg, names,
            results={"max_drift": rep.max_drift,
                     "max_energy_drift": rep.max_energy_drift},
            tolerances={"drift": tol},
        )
    )
    print(
        f"{cfg.variant}: max drift {rep.max_drift:.3e} "
        f"(tolerance {tol:.3e}); wrote {len(names)} files to {out}"
    )
    return 0


def cmd_sard(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    jets = arc.sample_jets(cfg.arc_config())
    fld = field.build_field(jets, resolution=cfg.resolution)
    control = ham.morse_control()
    dich = sard.dichotomy_experiment(
        fld.value, fld.gradient, control.value, control.gradient,
        spacing=cfg.sard_spacing,
        control_eps=cfg.sard_eps if cfg.sard_eps is not None else 1e-2,
    )
    scan = sard.scan_grid(fld.value, fld.gradient, cfg.sard_spacing, None)
    names = reports.emit_sard_files(out, cfg, dich, scan)
    names.append(
        reports.write_manifest(
            out, cfg, names,
            results={
                "whitney_measure": dich.whitney.measure,
                "control_measure": dich.control.measure,
                "ratio": dich.ratio,
            },
        )
    )
    print(
        f"critical-value measure: control {dich.control.measure:.3e}, "
        f"arc field {dich.whitney.measure:.4f}, ratio {dich.ratio:.0f}; "
        f"wrote {len(names)} files to {out}"
    )
    return 0


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    report = verify.run_acceptance(cfg)
    for result in report.results:
        print(result.line())
    reports.write_json(os.path.join(out, "verify.json"), report.summary())
    reports.write_manifest(
        out, cfg, ["verify.json"],
        results={"all_passed": report.passed},
        tolerances=report.tolerances,
    )
    print(f"summary written to {os.path.join(out, 'verify.json')}")
    return 0 if report.passed else 1


def cmd_report(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    artifacts = sorted(
        name
        for name in os.listdir(out)
        if name.endswith((".csv", ".json", ".svg")) and name != "report.json"
    )
    reports.write_json(
        os.path.join(out, "report.json"),
        {"config": cfg.to_mapping(), "artifacts": artifacts},
    )
    print(f"bundled {len(artifacts)} artifacts into report.json")
    return 0


_COMMANDS = {
    "arc": cmd_arc,
    "field": cmd_field,
    "flow": cmd_flow,
    "sard": cmd_sard,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="whitneyflow",
        description=(
            "Numerical laboratory for Hamiltonian flows with fractal "
            "critical sets"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to a key=value config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return _COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
