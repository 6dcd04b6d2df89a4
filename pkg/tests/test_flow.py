import numpy as np
import pytest

from whitneyflow import flow
from whitneyflow import hamiltonian as ham


def test_integrator_config_validation():
    with pytest.raises(flow.FlowError):
        flow.IntegratorConfig(scheme="rk4")
    with pytest.raises(flow.FlowError):
        flow.IntegratorConfig(tau=0.0)
    with pytest.raises(flow.FlowError):
        flow.IntegratorConfig(tau=2.0, duration=1.0)
    assert flow.IntegratorConfig(tau=0.25, duration=1.0).n_steps == 4


def test_free_motion_is_exact():
    # dyadic tau and momenta keep every drift step exact in floating point
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.zero_field())
    q0 = np.array([0.5, 0.25])
    p0 = np.array([0.25, -0.5])
    traj = flow.integrate(spec, q0, p0, flow.IntegratorConfig(tau=2.0 ** -10, duration=1.0))
    assert np.array_equal(traj.q[-1], (q0 + p0) % 1.0)
    assert np.array_equal(traj.displacement, p0)
    assert flow.energy_drift(traj) == 0.0


def test_trajectory_invariants():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    cfg = flow.IntegratorConfig(tau=0.01, duration=0.5)
    traj = flow.integrate(spec, [0.2, 0.3], [0.1, -0.2], cfg)
    assert len(traj) == cfg.n_steps + 1
    assert np.allclose(np.diff(traj.times), cfg.tau)
    assert np.all(np.diff(traj.times) > 0)
    # the energy column is recomputable from the stored states
    recomputed = ham.eval_H(spec, traj.q, traj.p)
    assert np.array_equal(recomputed, traj.energy)
    assert traj.q.min() >= 0.0 and traj.q.max() < 1.0


def test_integration_is_deterministic():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    cfg = flow.IntegratorConfig(tau=0.01, duration=1.0)
    a = flow.integrate(spec, [0.2, 0.3], [0.1, -0.2], cfg)
    b = flow.integrate(spec, [0.2, 0.3], [0.1, -0.2], cfg)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.p, b.p)


def test_jet_starts_are_fixed_points(field4, field8):
    for fld in (field4, field8):
        spec = ham.HamiltonianSpec(variant="basic", fld=fld)
        q0 = fld.arc_points[3]
        traj = flow.integrate(spec, q0, np.zeros(2),
                              flow.IntegratorConfig(tau=1e-3, duration=0.5))
        assert np.array_equal(traj.q[-1], q0)
        assert np.array_equal(traj.p[-1], np.zeros(2))
        assert flow.energy_drift(traj) == 0.0


def test_suspension_circle_returns():
    # q3 advances linearly: after T = 1 it returns to the start of the circle
    spec = ham.HamiltonianSpec(variant="suspension", fld=ham.zero_field())
    q0 = np.array([0.3, 0.4, 0.0])
    traj = flow.integrate(spec, q0, np.zeros(3),
                          flow.IntegratorConfig(tau=1e-3, duration=1.0))
    circle_err = min(traj.q[-1, 2], 1.0 - traj.q[-1, 2])
    assert circle_err <= 1e-9
    assert abs(traj.displacement[2] - 1.0) <= 1e-9


def test_invariance_drift_proposition_sanity():
    c = np.array([0.5, -0.25])
    spec = ham.HamiltonianSpec(
        variant="shifted", fld=ham.zero_field(),
        gamma=ham.GraphSection(kind="constant", c=c),
    )
    rng = np.random.default_rng(7)
    lam_spec = ham.InvariantSetSpec(
        q_samples=rng.random((64, 2)),
        section=ham.GraphSection(kind="constant", c=c),
    )
    rep = flow.invariance_drift(
        spec, lam_spec, flow.IntegratorConfig(tau=1e-3, duration=2.0),
        count=32, seed=5,
    )
    assert rep.max_drift == 0.0
    assert rep.max_energy_drift == 0.0


def test_invariance_drift_on_arc(field4):
    spec = ham.HamiltonianSpec(variant="basic", fld=field4)
    lam_spec = ham.InvariantSetSpec(
        q_samples=field4.arc_points, section=ham.GraphSection(kind="zero")
    )
    rep = flow.invariance_drift(
        spec, lam_spec, flow.IntegratorConfig(tau=1e-3, duration=2.0),
        count=50, seed=11,
    )
    assert rep.max_drift <= 1e-3
    assert rep.count == 50
    assert rep.seed == 11


def test_suspension_invariance_and_advance(field4):
    spec = ham.HamiltonianSpec(variant="suspension", fld=field4)
    lam_spec = ham.InvariantSetSpec(
        q_samples=field4.arc_points,
        section=ham.GraphSection(kind="zero"),
        suspension=True,
    )
    rep = flow.invariance_drift(
        spec, lam_spec, flow.IntegratorConfig(tau=1e-3, duration=2.0),
        count=50, seed=11,
    )
    assert rep.max_drift <= 1e-3
    assert np.abs(rep.q3_advance - 2.0).max() <= 1e-6
    assert rep.max_energy_drift <= 1e-6


def test_energy_drift_halving_ratio():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    q0, p0 = np.array([0.21, 0.37]), np.array([0.4, -0.3])
    d1 = flow.energy_drift(
        flow.integrate(spec, q0, p0, flow.IntegratorConfig(tau=0.01, duration=2.0))
    )
    d2 = flow.energy_drift(
        flow.integrate(spec, q0, p0, flow.IntegratorConfig(tau=0.005, duration=2.0))
    )
    assert abs(d1 / d2 - 4.0) <= 0.5


def test_energy_drift_near_arc_measured_order(field8):
    # second derivatives are unbounded near the arc: demand only measured
    # order >= 1 and monotone improvement in tau
    spec = ham.HamiltonianSpec(variant="basic", fld=field8)
    q0 = field8.arc_points[12345] + np.array([3e-4, -2e-4])
    p0 = np.array([0.3, 0.2])
    drifts = [
        flow.energy_drift(
            flow.integrate(spec, q0, p0, flow.IntegratorConfig(tau=tau, duration=1.0))
        )
        for tau in (2e-3, 1e-3, 5e-4)
    ]
    assert drifts[0] > drifts[1] > drifts[2]
    assert np.log2(drifts[0] / drifts[1]) >= 1.0
    assert np.log2(drifts[1] / drifts[2]) >= 1.0


def test_convergence_order_on_control():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    order = flow.convergence_order(
        spec, [0.23, 0.41], [0.31, -0.27],
        flow.IntegratorConfig(tau=0.02, duration=1.0),
    )
    assert abs(order - 2.0) <= 0.25


def test_reversibility():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    err = flow.reversibility_error(
        spec, [0.23, 0.41], [0.31, -0.27],
        flow.IntegratorConfig(tau=0.01, duration=2.0),
    )
    assert err <= 1e-9


def test_step_jacobian_determinant():
    spec = ham.HamiltonianSpec(variant="basic", fld=ham.morse_control())
    det = flow.step_jacobian_determinant(spec, [0.23, 0.41], [0.31, -0.27], 0.01)
    assert abs(det - 1.0) <= 1e-6


def _gradient_section(a=0.05):
    two_pi = 2.0 * np.pi

    def grad(q):
        return np.column_stack(
            [a * two_pi * np.cos(two_pi * q[:, 0]), np.zeros(len(q))]
        )

    def jac(q):
        j = np.zeros((len(q), 2, 2))
        j[:, 0, 0] = -a * two_pi ** 2 * np.sin(two_pi * q[:, 0])
        return j

    return ham.GraphSection(kind="gradient", grad_fn=grad, jacobian_fn=jac)


def test_leapfrog_rejects_gradient_sections():
    spec = ham.HamiltonianSpec(
        variant="shifted", fld=ham.morse_control(), gamma=_gradient_section()
    )
    with pytest.raises(flow.FlowError):
        flow.integrate(spec, [0.2, 0.3], [0.0, 0.0],
                       flow.IntegratorConfig(scheme="leapfrog", tau=0.01, duration=0.1))


def test_implicit_midpoint_on_gradient_section():
    spec = ham.HamiltonianSpec(
        variant="shifted", fld=ham.morse_control(), gamma=_gradient_section()
    )
    cfg = flow.IntegratorConfig(scheme="midpoint", tau=0.01, duration=1.0)
    order = flow.convergence_order(spec, [0.23, 0.41], [0.31, -0.27], cfg)
    assert abs(order - 2.0) <= 0.25
    traj = flow.integrate(spec, [0.23, 0.41], [0.31, -0.27], cfg)
    assert flow.energy_drift(traj) <= 1e-2


def test_implicit_midpoint_divergence_error():
    spec = ham.HamiltonianSpec(
        variant="shifted", fld=ham.morse_control(), gamma=_gradient_section()
    )
    bad = flow.IntegratorConfig(
        scheme="midpoint", tau=0.01, duration=0.1,
        midpoint_tolerance=1e-16, midpoint_max_iter=2,
    )
    with pytest.raises(flow.FlowError):
        flow.integrate(spec, [0.23, 0.41], [0.31, -0.27], bad)
