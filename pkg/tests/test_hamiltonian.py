import numpy as np
import pytest

from whitneyflow import arc, field, flow
from whitneyflow import hamiltonian as ham


def fd_directional(fn, q, v, h=1e-6):
    return (fn(q + h * v)[0] - fn(q - h * v)[0]) / (2 * h)


def test_phase_state_wraps_positions():
    st = ham.PhaseState(q=np.array([1.25, -0.5]), p=np.array([3.0, 4.0]))
    assert np.array_equal(st.q, [0.25, 0.5])
    with pytest.raises(ham.HamiltonianError):
        ham.PhaseState(q=np.zeros(2), p=np.zeros(3))


def test_eval_H_basic(field8):
    spec = ham.HamiltonianSpec(variant="basic", fld=field8)
    entry = field8.embedding.apply([[0.0, 0.0]])[0]
    # p = 0 returns f(q)
    assert ham.eval_H(spec, entry, np.zeros(2))[0] == 0.0
    # entry point with |p|^2/2 = 12.5
    assert ham.eval_H(spec, entry, np.array([3.0, 4.0]))[0] == 12.5


def test_eval_H_suspension(field8):
    spec = ham.HamiltonianSpec(variant="suspension", fld=field8)
    q = np.concatenate([field8.arc_points[7], [0.31]])
    f_val = field8.arc_values[7]
    assert ham.eval_H(spec, q, np.zeros(3))[0] == f_val + 0.5


def test_eval_H_shifted_reduces_to_basic(field8):
    c = np.array([0.5, -0.25])  # dyadic so p + c - c is exact
    spec_s = ham.HamiltonianSpec(
        variant="shifted", fld=field8,
        gamma=ham.GraphSection(kind="constant", c=c),
    )
    spec_b = ham.HamiltonianSpec(variant="basic", fld=field8)
    rng = np.random.default_rng(2)
    q = rng.random((32, 2))
    p = np.round(rng.random((32, 2)) * 8) / 8  # dyadic momenta
    assert np.array_equal(
        ham.eval_H(spec_s, q, p + c), ham.eval_H(spec_b, q, p)
    )


def test_vector_field_cases(field8):
    spec = ham.HamiltonianSpec(variant="basic", fld=field8)
    # free motion when f vanishes identically
    zspec = ham.HamiltonianSpec(variant="basic", fld=ham.zero_field())
    q = np.array([[0.2, 0.7]])
    p = np.array([[0.4, -0.1]])
    qd, pd = ham.vector_field(zspec, q, p)
    assert np.array_equal(qd, p) and np.array_equal(pd, np.zeros((1, 2)))
    # at an arc jet with p = 0 the field vanishes to the jet tolerance
    qj = field8.arc_points[:50]
    qd, pd = ham.vector_field(spec, qj, np.zeros_like(qj))
    assert np.abs(qd).max() == 0.0
    assert np.abs(pd).max() == 0.0
    # suspension: unit drift in the circle factor, planar force only
    s3 = ham.HamiltonianSpec(variant="suspension", fld=field8)
    q3 = np.column_stack([qj, np.full(len(qj), 0.4)])
    qd3, pd3 = ham.vector_field(s3, q3, np.zeros_like(q3))
    assert np.array_equal(qd3[:, 2], np.ones(len(qj)))
    assert np.abs(qd3[:, :2]).max() == 0.0
    assert np.abs(pd3).max() == 0.0


def test_restrict_to_graph(field8):
    spec = ham.HamiltonianSpec(variant="basic", fld=field8)
    zero = ham.GraphSection(kind="zero")
    h = ham.restrict_to_graph(spec, zero)
    rng = np.random.default_rng(4)
    q = rng.random((64, 2))
    assert np.array_equal(h.value(q), field8.value(q))
    assert np.array_equal(h.gradient(q), field8.gradient(q))

    # pure kinetic energy on a constant section is constant (sanity case)
    c = np.array([0.5, 0.75])
    kin = ham.HamiltonianSpec(
        variant="basic", fld=ham.zero_field(),
    )
    hc = ham.restrict_to_graph(kin, ham.GraphSection(kind="constant", c=c))
    assert np.array_equal(hc.value(q), np.full(len(q), 0.5 * float(c @ c)))

    # shifted variant restricted to its own section returns f
    spec_s = ham.HamiltonianSpec(
        variant="shifted", fld=field8,
        gamma=ham.GraphSection(kind="constant", c=c),
    )
    hs = ham.restrict_to_graph(spec_s, spec_s.gamma)
    assert np.array_equal(hs.value(q), field8.value(q))


def test_symplectic_pairing_properties():
    rng = np.random.default_rng(8)
    u = rng.standard_normal(4)
    v = rng.standard_normal(4)
    w = rng.standard_normal(4)
    assert ham.symplectic_pairing(u, u) == 0.0
    assert ham.symplectic_pairing(u, v) == -ham.symplectic_pairing(v, u)
    lhs = ham.symplectic_pairing(u, 2.0 * v + w)
    rhs = 2.0 * ham.symplectic_pairing(u, v) + ham.symplectic_pairing(u, w)
    assert abs(lhs - rhs) <= 1e-12
    # canonical pairing of coordinate directions
    e1q = np.array([1.0, 0.0, 0.0, 0.0])
    e1p = np.array([0.0, 0.0, 1.0, 0.0])
    assert ham.symplectic_pairing(e1q, e1p) == 1.0


def test_defining_identity_of_the_field():
    # omega(X_H, v) + dH . v = 0 with the field's sign convention flips to
    # omega(X_H, v) - dH . v = 0; check the identity via finite differences
    control = ham.morse_control()
    spec = ham.HamiltonianSpec(variant="basic", fld=control)
    rng = np.random.default_rng(12)
    for _ in range(20):
        q = rng.random(2)
        p = rng.standard_normal(2)
        qd, pd = ham.vector_field(spec, q[None], p[None])
        x_h = np.concatenate([qd[0], pd[0]])
        v = rng.standard_normal(4)

        def H(z):
            return ham.eval_H(spec, z[None, :2], z[None, 2:])

        z = np.concatenate([q, p])
        h = 1e-6
        dH_v = (H(z + h * v)[0] - H(z - h * v)[0]) / (2 * h)
        assert abs(ham.symplectic_pairing(x_h, v) - dH_v) <= 1e-8


def test_energy_is_first_integral(field8):
    control = ham.morse_control()
    rng = np.random.default_rng(13)
    q = rng.random((100, 2))
    p = rng.standard_normal((100, 2))
    for fld in (control, None):
        spec = ham.HamiltonianSpec(variant="basic", fld=fld or field8)
        qd, pd = ham.vector_field(spec, q, p)
        grad_q = -pd
        grad_p = qd
        residual = np.abs(np.sum(grad_q * qd + grad_p * pd, axis=1))
        assert residual.max() <= 1e-8


def test_criticality_identity_zero_section_on_jets(field8):
    spec = ham.HamiltonianSpec(variant="basic", fld=field8)
    zero = ham.GraphSection(kind="zero")
    g_tol = field.max_jet_fd_gradient(field8, 4.0 ** -8) + 1e-9
    rng = np.random.default_rng(14)
    for idx in rng.integers(0, len(field8.arc_points), size=10):
        q = field8.arc_points[idx]
        v = rng.standard_normal(2)
        v /= np.linalg.norm(v)
        chain, lemma = ham.criticality_identity_check(spec, zero, q, v)
        assert chain <= g_tol
        assert lemma <= g_tol


def test_criticality_identity_constant_section():
    spec = ham.HamiltonianSpec(
        variant="basic", fld=ham.zero_field(),
    )
    gamma = ham.GraphSection(kind="constant", c=np.array([0.3, -0.2]))
    rng = np.random.default_rng(15)
    for _ in range(5):
        chain, lemma = ham.criticality_identity_check(
            spec, gamma, rng.random(2), rng.standard_normal(2)
        )
        assert chain <= 1e-10
        assert lemma <= 1e-10


def test_criticality_identity_morse_critical_point():
    control = ham.morse_control()
    spec = ham.HamiltonianSpec(variant="basic", fld=control)
    zero = ham.GraphSection(kind="zero")
    rng = np.random.default_rng(16)
    for q in ham.MORSE_CRITICAL_POINTS:
        v = rng.standard_normal(2)
        chain, _ = ham.criticality_identity_check(spec, zero, q, v)
        assert chain <= 1e-8


def test_zero_section_criticality_equals_field_gradient(field4):
    spec = ham.HamiltonianSpec(variant="basic", fld=field4)
    h = ham.restrict_to_graph(spec, ham.GraphSection(kind="zero"))
    pts = field4.arc_points
    assert np.array_equal(h.gradient(pts), field4.gradient(pts))


def test_section_validation():
    with pytest.raises(ham.HamiltonianError):
        ham.GraphSection(kind="constant")
    with pytest.raises(ham.HamiltonianError):
        ham.GraphSection(kind="gradient", grad_fn=lambda q: q)  # no Jacobian
    with pytest.raises(ham.HamiltonianError):
        ham.GraphSection(kind="spline")
    with pytest.raises(ham.HamiltonianError):
        ham.HamiltonianSpec(
            variant="suspension", fld=ham.zero_field(),
            gamma=ham.GraphSection(kind="constant", c=np.zeros(3)),
        )
    with pytest.raises(ham.HamiltonianError):
        ham.HamiltonianSpec(variant="rotor", fld=ham.zero_field())


def test_gradient_section_round_trip():
    a = 0.05
    two_pi = 2.0 * np.pi

    def grad(q):
        return np.column_stack(
            [a * two_pi * np.cos(two_pi * q[:, 0]), np.zeros(len(q))]
        )

    def jac(q):
        j = np.zeros((len(q), 2, 2))
        j[:, 0, 0] = -a * two_pi ** 2 * np.sin(two_pi * q[:, 0])
        return j

    gamma = ham.GraphSection(kind="gradient", grad_fn=grad, jacobian_fn=jac)
    spec = ham.HamiltonianSpec(
        variant="shifted", fld=ham.morse_control(), gamma=gamma
    )
    # chain rule residual of the graph restriction via finite differences
    h = ham.restrict_to_graph(spec, gamma)
    rng = np.random.default_rng(21)
    for _ in range(10):
        q = rng.random(2)
        v = rng.standard_normal(2)
        fd = fd_directional(h.value, q, v)
        an = float(h.gradient(q[None])[0] @ v)
        assert abs(fd - an) <= 1e-6
