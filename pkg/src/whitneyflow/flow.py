"""Symplectic integration of the Hamiltonian flows and invariance metrics.

Kick-drift-kick leapfrog handles the separable variants (basic, constant
shift, suspension); the shifted variant with a gradient section couples q
and p in the kinetic term and goes through the implicit midpoint rule with
fixed-point iteration.

Positions advance unwrapped internally (so winding is measurable) and are
reduced mod 1 in recorded samples and whenever the field is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .hamiltonian import (
    HamiltonianSpec,
    InvariantSetSpec,
    eval_H,
    vector_field,
    wrap,
)


class FlowError(RuntimeError):
    """Raised for unsupported scheme/variant pairs or non-convergence."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "leapfrog"
    tau: float = 1e-3
    duration: float = 10.0
    midpoint_tolerance: float = 1e-12
    midpoint_max_iter: int = 100

    def __post_init__(self):
        if self.scheme not in ("leapfrog", "midpoint"):
            raise FlowError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.tau <= self.duration:
            raise FlowError("need 0 < tau <= duration")
        if self.midpoint_tolerance <= 0:
            raise FlowError("midpoint tolerance must be positive")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.duration / self.tau - 1e-12))


@dataclass
class Trajectory:
    """Recorded samples (t, state, energy); positions reduced to [0, 1)."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    displacement: np.ndarray  # unwrapped q(T) - q(0)

    def __len__(self):
        return len(self.times)


def _check_scheme(spec: HamiltonianSpec, cfg: IntegratorConfig):
    separable = spec.variant in ("basic", "suspension") or (
        spec.variant == "shifted" and spec.gamma.kind in ("zero", "constant")
    )
    if cfg.scheme == "leapfrog" and not separable:
        raise FlowError(
            "leapfrog supports only separable variants; "
            "use the implicit midpoint scheme for gradient sections"
        )


def _grad_V(spec: HamiltonianSpec, q):
    """Potential force term -pdot at momentum = section (separable cases)."""
    if spec.variant == "suspension":
        g2 = spec.fld.gradient(q[:, :2])
        g = np.zeros_like(q)
        g[:, :2] = g2
        return g
    return spec.fld.gradient(q)


def _drift_velocity(spec: HamiltonianSpec, p):
    if spec.variant == "suspension":
        v = p.copy()
        v[:, 2] += 1.0
        return v
    if spec.variant == "shifted" and spec.gamma.kind == "constant":
        return p - np.asarray(spec.gamma.c, dtype=float)
    return p.copy()


def _leapfrog_steps(spec, q, p, tau, n, on_step=None):
    """March n kick-drift-kick steps in place on batched (q, p)."""
    g = _grad_V(spec, q)
    for k in range(n):
        p = p - (tau / 2.0) * g
        q = q + tau * _drift_velocity(spec, p)
        g = _grad_V(spec, q)
        p = p - (tau / 2.0) * g
        if on_step is not None:
            on_step(k, q, p)
    return q, p


def _midpoint_steps(spec, q, p, tau, n, tol, max_iter, on_step=None):
    for k in range(n):
        q0, p0 = q, p
        qm, pm = q0.copy(), p0.copy()
        for _ in range(max_iter):
            qd, pd = vector_field(spec, qm, pm)
            qn = q0 + (tau / 2.0) * qd
            pn = p0 + (tau / 2.0) * pd
            delta = max(np.abs(qn - qm).max(), np.abs(pn - pm).max())
            qm, pm = qn, pn
            if delta <= tol:
                break
        else:
            raise FlowError(
                f"implicit midpoint failed to converge within {max_iter} "
                f"iterations at step {k}"
            )
        q = 2.0 * qm - q0
        p = 2.0 * pm - p0
        if on_step is not None:
            on_step(k, q, p)
    return q, p


def integrate(spec: HamiltonianSpec, q0, p0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate one trajectory, recording every step."""
    _check_scheme(spec, cfg)
    q = np.atleast_2d(np.asarray(q0, dtype=float)).copy()
    p = np.atleast_2d(np.asarray(p0, dtype=float)).copy()
    n = cfg.n_steps
    times = cfg.tau * np.arange(n + 1)
    qs = np.empty((n + 1,) + q.shape[1:])
    ps = np.empty_like(qs)
    es = np.empty(n + 1)
    qs[0], ps[0] = wrap(q[0]), p[0]
    es[0] = eval_H(spec, wrap(q), p)[0]
    q_start = q.copy()

    def record(k, qk, pk):
        qs[k + 1] = wrap(qk[0])
        ps[k + 1] = pk[0]
        es[k + 1] = eval_H(spec, wrap(qk), pk)[0]

    if cfg.scheme == "leapfrog":
        q, p = _leapfrog_steps(spec, q, p, cfg.tau, n, on_step=record)
    else:
        q, p = _midpoint_steps(
            spec, q, p, cfg.tau, n, cfg.midpoint_tolerance,
            cfg.midpoint_max_iter, on_step=record,
        )
    return Trajectory(
        times=times, q=qs, p=ps, energy=es, displacement=(q - q_start)[0]
    )


def integrate_batch(spec, q0, p0, cfg: IntegratorConfig):
    """Endpoint-only integration of many trajectories at once.

    Returns (q_unwrapped, p) at time n_steps * tau.
    """
    _check_scheme(spec, cfg)
    q = np.atleast_2d(np.asarray(q0, dtype=float)).copy()
    p = np.atleast_2d(np.asarray(p0, dtype=float)).copy()
    if cfg.scheme == "leapfrog":
        return _leapfrog_steps(spec, q, p, cfg.tau, cfg.n_steps)
    return _midpoint_steps(
        spec, q, p, cfg.tau, cfg.n_steps, cfg.midpoint_tolerance,
        cfg.midpoint_max_iter,
    )


def _torus_tiles(points: np.ndarray) -> cKDTree:
    """KD-tree over the 3x3 unit translates, for exact toroidal distances."""
    shifts = np.array(
        [[i, j] for i in (-1.0, 0.0, 1.0) for j in (-1.0, 0.0, 1.0)]
    )
    tiled = (points[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
    return cKDTree(tiled)


@dataclass(frozen=True)
class DriftReport:
    max_drift: float
    max_energy_drift: float
    q3_advance: np.ndarray | None
    seed: int
    count: int
    tau: float
    duration: float
    variant: str


def invariance_drift(
    spec: HamiltonianSpec,
    lam_spec: InvariantSetSpec,
    cfg: IntegratorConfig,
    count: int,
    seed: int,
) -> DriftReport:
    """Max over time and seeded starts of the phase distance to the set.

    The drift at time t is the toroidal distance from the base point to the
    nearest sample of the projected set plus the momentum distance to the
    section.  Start points are drawn (seeded) from the set's samples.
    """
    _check_scheme(spec, cfg)
    rng = np.random.default_rng(seed)
    samples = np.atleast_2d(lam_spec.q_samples)
    pick = rng.choice(len(samples), size=min(count, len(samples)), replace=False)
    base = samples[pick]

    if lam_spec.suspension:
        q = np.column_stack([base, rng.random(len(base))])
        p = np.zeros_like(q)
    else:
        q = base.copy()
        p = lam_spec.section.value(q)
    q0 = q.copy()

    tree = _torus_tiles(samples)
    state = {"drift": 0.0, "edrift": 0.0}
    e0 = eval_H(spec, wrap(q), p)

    def on_step(k, qk, pk):
        qw = wrap(qk)
        d, _ = tree.query(qw[:, :2] if lam_spec.suspension else qw, workers=1)
        sec = (
            np.zeros_like(pk)
            if lam_spec.suspension
            else lam_spec.section.value(qw)
        )
        dp = np.linalg.norm(pk - sec, axis=1)
        state["drift"] = max(state["drift"], float((d + dp).max()))
        e = eval_H(spec, qw, pk)
        state["edrift"] = max(state["edrift"], float(np.abs(e - e0).max()))

    if cfg.scheme == "leapfrog":
        qf, pf = _leapfrog_steps(spec, q, p, cfg.tau, cfg.n_steps, on_step=on_step)
    else:
        qf, pf = _midpoint_steps(
            spec, q, p, cfg.tau, cfg.n_steps, cfg.midpoint_tolerance,
            cfg.midpoint_max_iter, on_step=on_step,
        )
    advance = (qf - q0)[:, 2] if lam_spec.suspension else None
    return DriftReport(
        max_drift=state["drift"],
        max_energy_drift=state["edrift"],
        q3_advance=advance,
        seed=seed,
        count=len(base),
        tau=cfg.tau,
        duration=cfg.duration,
        variant=spec.variant,
    )


def energy_drift(traj: Trajectory) -> float:
    """Max |H(t) - H(0)| along one trajectory."""
    return float(np.abs(traj.energy - traj.energy[0]).max())


def convergence_order(spec, q0, p0, cfg: IntegratorConfig) -> float:
    """Measured order from endpoint differences across tau, tau/2, tau/4."""
    ends = []
    for k in range(3):
        sub = IntegratorConfig(
            scheme=cfg.scheme,
            tau=cfg.tau / 2 ** k,
            duration=cfg.duration,
            midpoint_tolerance=cfg.midpoint_tolerance,
            midpoint_max_iter=cfg.midpoint_max_iter,
        )
        qf, pf = integrate_batch(spec, q0, p0, sub)
        ends.append(np.concatenate([qf[0], pf[0]]))
    d1 = np.linalg.norm(ends[0] - ends[1])
    d2 = np.linalg.norm(ends[1] - ends[2])
    return float(np.log2(d1 / d2))


def reversibility_error(spec, q0, p0, cfg: IntegratorConfig) -> float:
    """Forward T, momentum flip, forward T again: distance back to the start.

    The kick-drift-kick step is time-symmetric, so for potentials even in p
    this returns to the start up to rounding.
    """
    qf, pf = integrate_batch(spec, q0, p0, cfg)
    qb, pb = integrate_batch(spec, qf, -pf, cfg)
    q0 = np.atleast_2d(np.asarray(q0, dtype=float))
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    dq = np.abs(qb - q0).max()
    dp = np.abs(-pb - p0).max()
    return float(dq + dp)


def step_jacobian_determinant(
    spec, q0, p0, tau: float, fd_step: float = 1e-5
) -> float:
    """Determinant of one leapfrog step's Jacobian, by central differences."""
    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    d = len(q0)
    z0 = np.concatenate([q0, p0])
    cols = []
    one = IntegratorConfig(scheme="leapfrog", tau=tau, duration=tau)
    for k in range(2 * d):
        e = np.zeros(2 * d)
        e[k] = fd_step
        zp, zm = z0 + e, z0 - e
        qp, pp = integrate_batch(spec, zp[:d], zp[d:], one)
        qm, pm = integrate_batch(spec, zm[:d], zm[d:], one)
        cols.append(
            (np.concatenate([qp[0], pp[0]]) - np.concatenate([qm[0], pm[0]]))
            / (2.0 * fd_step)
        )
    return float(np.linalg.det(np.column_stack(cols)))
