"""Experiment configuration: flat ``key = value`` text with dotted sections.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines ignored.  Keys are dotted lowercase identifiers from the fixed schema
below; unknown keys are rejected.  Values are typed per key: int, float
(``auto`` allowed where noted), word, or a space-separated float vector.
Serialization is canonical (sorted keys, ``repr`` floats), so a config
echoed into a manifest reparses to an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .arc import ArcConfig, GeometryError
from .flow import FlowError, IntegratorConfig


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values or out-of-range settings."""


# key -> (attribute, type tag); type tags: int, float, float_or_auto,
# word, vector
_SCHEMA = {
    "arc.lambda": ("lam", "float"),
    "arc.depth": ("depth", "int"),
    "arc.bridge_spacing": ("bridge_spacing", "float"),
    "field.resolution": ("resolution", "float_or_auto"),
    "hamiltonian.variant": ("variant", "word"),
    "gamma.kind": ("gamma_kind", "word"),
    "gamma.c": ("gamma_c", "vector"),
    "flow.scheme": ("scheme", "word"),
    "flow.tau": ("tau", "float"),
    "flow.duration": ("duration", "float"),
    "flow.count": ("count", "int"),
    "flow.midpoint_tolerance": ("midpoint_tolerance", "float"),
    "sard.spacing": ("sard_spacing", "float"),
    "sard.eps": ("sard_eps", "float_or_auto"),
    "rng_seed": ("rng_seed", "int"),
    "output_dir": ("output_dir", "word"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    lam: float = 1.0 / 3.0
    depth: int = 8
    bridge_spacing: float = 0.01
    resolution: float | None = None  # None: 0.4 * scale * lam**depth
    variant: str = "basic"
    gamma_kind: str = "zero"
    gamma_c: tuple[float, ...] = (0.0, 0.0)
    scheme: str = "leapfrog"
    tau: float = 1e-3
    duration: float = 10.0
    count: int = 100
    midpoint_tolerance: float = 1e-12
    sard_spacing: float = 1.0 / 512.0
    sard_eps: float | None = 1e-2  # None: couple to spacing per cell
    rng_seed: int = 12345
    output_dir: str = "out"

    def validate(self) -> "ExperimentConfig":
        try:
            self.arc_config()
            IntegratorConfig(
                scheme=self.scheme,
                tau=self.tau,
                duration=self.duration,
                midpoint_tolerance=self.midpoint_tolerance,
            )
        except (GeometryError, FlowError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.variant not in ("basic", "shifted", "suspension"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.gamma_kind not in ("zero", "constant"):
            raise ConfigError(
                "config sections support zero and constant graph sections; "
                "gradient sections are a library-level feature"
            )
        if self.variant == "suspension" and self.gamma_kind != "zero":
            raise ConfigError("the suspension variant uses the zero section")
        if len(self.gamma_c) != 2:
            raise ConfigError("gamma.c must have two components")
        if self.count < 1:
            raise ConfigError("flow.count must be >= 1")
        if not 0.0 < self.sard_spacing <= 0.25:
            raise ConfigError("sard.spacing must lie in (0, 0.25]")
        if self.sard_eps is not None and self.sard_eps <= 0:
            raise ConfigError("sard.eps must be positive or auto")
        if self.resolution is not None and not 0 < self.resolution <= self.lam ** self.depth:
            raise ConfigError(
                "field.resolution must lie in (0, lambda**depth] or be auto"
            )
        return self

    def arc_config(self) -> ArcConfig:
        return ArcConfig(
            lam=self.lam, depth=self.depth, bridge_spacing=self.bridge_spacing
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            scheme=self.scheme,
            tau=self.tau,
            duration=self.duration,
            midpoint_tolerance=self.midpoint_tolerance,
        )

    def to_mapping(self) -> dict:
        out = {}
        for key, (attr, kind) in _SCHEMA.items():
            value = getattr(self, attr)
            if kind == "vector":
                out[key] = " ".join(repr(float(v)) for v in value)
            elif kind == "float_or_auto":
                out[key] = "auto" if value is None else repr(float(value))
            elif kind == "float":
                out[key] = repr(float(value))
            else:
                out[key] = str(value)
        return out

    def to_text(self) -> str:
        lines = [f"{k} = {v}" for k, v in sorted(self.to_mapping().items())]
        return "\n".join(lines) + "\n"


def _parse_value(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float_or_auto":
            return None if raw == "auto" else float(raw)
        if kind == "vector":
            return tuple(float(tok) for tok in raw.split())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; unknown keys are rejected."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value': {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, kind = _SCHEMA[key]
        if attr in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[attr] = _parse_value(key, kind, raw)
    return ExperimentConfig(**overrides).validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(cfg: ExperimentConfig, seed=None, out=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["rng_seed"] = int(seed)
    if out is not None:
        updates["output_dir"] = str(out)
    return replace(cfg, **updates).validate() if updates else cfg
