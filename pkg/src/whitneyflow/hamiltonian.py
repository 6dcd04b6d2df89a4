"""Hamiltonians over the flat torus built on a scalar field f.

Three variants share the kinetic-plus-potential shape:

* ``basic``       H(q,p) = f(q) + |p|^2 / 2                      on T*T^2
* ``shifted``     H(q,p) = f(q) + |p - Gamma(q)|^2 / 2           on T*T^2
* ``suspension``  H(q,p) = f(q1,q2) + (p1^2 + p2^2 + (p3+1)^2)/2 on T*T^3

The metric is the identity everywhere.  Sign convention: with
``omega = sum dq_k ^ dp_k`` and ``omega(X_H, .) = dH(.)`` the equations of
motion are ``qdot = dH/dp`` and ``pdot = -dH/dq``.

Graph sections Gamma are restricted to closed one-forms given as constants
or analytic gradients with a supplied Jacobian, which keeps the Lagrangian
property of the graph certifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class HamiltonianError(ValueError):
    """Raised for unsupported variant / section combinations."""


def wrap(q):
    """Reduce torus coordinates to [0, 1)."""
    q = np.asarray(q, dtype=float)
    return q - np.floor(q)


@dataclass(frozen=True)
class PhaseState:
    """A point of the cotangent bundle; positions are reduced mod 1."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", wrap(self.q))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.q.shape != self.p.shape:
            raise HamiltonianError("q and p must have matching shapes")


@dataclass(frozen=True)
class AnalyticField:
    """Closed-form potential with analytic gradient (chart = torus)."""

    value_fn: Callable
    grad_fn: Callable

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.value_fn(pts - np.floor(pts))

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.grad_fn(pts - np.floor(pts))


def morse_control() -> AnalyticField:
    """Smooth control potential cos(2 pi q1) + cos(2 pi q2).

    Its four critical points sit at coordinates in {0, 1/2} with critical
    values {-2, 0, 2}: the Sard-regime benchmark.
    """
    two_pi = 2.0 * np.pi

    def value(q):
        return np.cos(two_pi * q[:, 0]) + np.cos(two_pi * q[:, 1])

    def grad(q):
        return np.column_stack(
            [-two_pi * np.sin(two_pi * q[:, 0]), -two_pi * np.sin(two_pi * q[:, 1])]
        )

    return AnalyticField(value_fn=value, grad_fn=grad)


MORSE_CRITICAL_POINTS = np.array(
    [[0.0, 0.0], [0.0, 0.5], [0.5, 0.0], [0.5, 0.5]]
)
MORSE_CRITICAL_VALUES = np.array([2.0, 0.0, 0.0, -2.0])


def zero_field() -> AnalyticField:
    return AnalyticField(
        value_fn=lambda q: np.zeros(len(q)),
        grad_fn=lambda q: np.zeros_like(q),
    )


@dataclass(frozen=True)
class GraphSection:
    """Section q -> p of the cotangent bundle given by a closed one-form.

    ``zero``: p = 0.  ``constant``: p = c.  ``gradient``: p = grad psi(q)
    with the gradient and its Jacobian (the Hessian of psi) supplied
    analytically.
    """

    kind: str = "zero"
    c: np.ndarray | None = None
    grad_fn: Callable | None = None
    jacobian_fn: Callable | None = None
    potential_fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "gradient"):
            raise HamiltonianError(f"unknown section kind {self.kind!r}")
        if self.kind == "constant" and self.c is None:
            raise HamiltonianError("constant section requires a vector c")
        if self.kind == "gradient" and (
            self.grad_fn is None or self.jacobian_fn is None
        ):
            raise HamiltonianError(
                "gradient section requires an analytic gradient and Jacobian"
            )

    def value(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if self.kind == "zero":
            return np.zeros_like(q)
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.c, dtype=float), q.shape).copy()
        return np.atleast_2d(self.grad_fn(q))

    def jacobian(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        d = q.shape[1]
        if self.kind in ("zero", "constant"):
            return np.zeros((len(q), d, d))
        return self.jacobian_fn(q)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Variant descriptor plus the scalar field powering the potential."""

    variant: str
    fld: object
    gamma: GraphSection = field(default_factory=GraphSection)

    def __post_init__(self):
        if self.variant not in ("basic", "shifted", "suspension"):
            raise HamiltonianError(f"unknown variant {self.variant!r}")
        if self.variant == "suspension" and self.gamma.kind != "zero":
            raise HamiltonianError("the suspension variant uses the zero section")

    @property
    def dim(self) -> int:
        return 3 if self.variant == "suspension" else 2


@dataclass(frozen=True)
class InvariantSetSpec:
    """Samples of the projected invariant set plus the section giving p."""

    q_samples: np.ndarray
    section: GraphSection
    suspension: bool = False


def _as_batch(q, p, dim):
    q = np.atleast_2d(np.asarray(q, dtype=float))
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if q.shape[1] != dim or p.shape[1] != dim:
        raise HamiltonianError(f"expected {dim}-dimensional phase coordinates")
    return q, p


def eval_H(spec: HamiltonianSpec, q, p) -> np.ndarray:
    """Energy at one or many phase points."""
    q, p = _as_batch(q, p, spec.dim)
    if spec.variant == "basic":
        return spec.fld.value(q) + 0.5 * np.sum(p * p, axis=1)
    if spec.variant == "shifted":
        u = p - spec.gamma.value(q)
        return spec.fld.value(q) + 0.5 * np.sum(u * u, axis=1)
    u = p.copy()
    u[:, 2] += 1.0
    return spec.fld.value(q[:, :2]) + 0.5 * np.sum(u * u, axis=1)


def vector_field(spec: HamiltonianSpec, q, p):
    """Hamiltonian vector field (qdot, pdot) at one or many phase points."""
    q, p = _as_batch(q, p, spec.dim)
    if spec.variant == "basic":
        return p.copy(), -spec.fld.gradient(q)
    if spec.variant == "shifted":
        u = p - spec.gamma.value(q)
        jac = spec.gamma.jacobian(q)
        pdot = -spec.fld.gradient(q) + np.einsum("kji,kj->ki", jac, u)
        return u, pdot
    qdot = p.copy()
    qdot[:, 2] += 1.0
    g2 = spec.fld.gradient(q[:, :2])
    pdot = np.zeros_like(p)
    pdot[:, :2] = -g2
    return qdot, pdot


@dataclass(frozen=True)
class GraphRestriction:
    """The function h(q) = H(q, Gamma(q)) over the torus, with its gradient."""

    spec: HamiltonianSpec
    gamma: GraphSection

    def value(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        return eval_H(self.spec, q, self.gamma.value(q))

    def gradient(self, q):
        """Chain rule: grad h = dH/dq + J_Gamma^T dH/dp on the graph."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        p = self.gamma.value(q)
        qdot, pdot = vector_field(self.spec, q, p)
        dq_H = -pdot
        dp_H = qdot
        jac = self.gamma.jacobian(q)
        return dq_H + np.einsum("kji,kj->ki", jac, dp_H)


def restrict_to_graph(spec: HamiltonianSpec, gamma: GraphSection) -> GraphRestriction:
    return GraphRestriction(spec=spec, gamma=gamma)


def symplectic_pairing(u, v) -> np.ndarray:
    """Canonical pairing omega((dq,dp),(dq',dp')) = dq.dp' - dp.dq'."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    d = u.shape[1] // 2
    out = np.sum(u[:, :d] * v[:, d:], axis=1) - np.sum(u[:, d:] * v[:, :d], axis=1)
    return out if len(out) > 1 else out[0]


def criticality_identity_check(
    spec: HamiltonianSpec,
    gamma: GraphSection,
    q,
    v,
    fd_step: float = 1e-6,
):
    """Residuals of the graph-restriction identities at one base point.

    Returns ``(chain, lemma)`` where ``chain`` compares the finite-difference
    derivative of h along ``v`` with the analytic ``dH . Gamma_* v``, and
    ``lemma`` is ``|dh(q) . v + omega(X_H, Gamma_* v)|`` -- zero whenever the
    field at (q, Gamma(q)) is tangent to the graph.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    h = restrict_to_graph(spec, gamma)
    hp = h.value(q + fd_step * v)[0]
    hm = h.value(q - fd_step * v)[0]
    dh_v = (hp - hm) / (2.0 * fd_step)

    qq = np.atleast_2d(q)
    p = gamma.value(qq)
    qdot, pdot = vector_field(spec, qq, p)
    jac = gamma.jacobian(qq)
    push_v = np.concatenate([v, (jac[0] @ v)])
    dH_push = float(-pdot[0] @ v + qdot[0] @ (jac[0] @ v))
    x_h = np.concatenate([qdot[0], pdot[0]])
    lemma = abs(dh_v + float(symplectic_pairing(x_h, push_v)))
    chain = abs(dh_v - dH_push)
    return chain, lemma
