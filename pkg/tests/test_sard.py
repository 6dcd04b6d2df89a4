import numpy as np
import pytest

from whitneyflow import arc, sard
from whitneyflow import hamiltonian as ham


def test_merge_intervals_exact():
    lo = np.array([0.0, 0.5, 0.4, 2.0])
    hi = np.array([0.3, 0.7, 0.55, 2.1])
    total, count = sard.merge_intervals(lo, hi)
    assert total == pytest.approx(0.3 + 0.3 + 0.1, abs=0)
    assert count == 3
    assert sard.merge_intervals(np.array([]), np.array([])) == (0.0, 0)


def test_morse_control_scan_flags_the_four_critical_points():
    control = ham.morse_control()
    scan = sard.scan_grid(control.value, control.gradient, 1 / 512, 1e-2)
    assert len(scan.values) == 4
    got = set(map(tuple, np.round(scan.centers, 12)))
    want = set(map(tuple, ham.MORSE_CRITICAL_POINTS))
    assert got == want
    assert sorted(scan.values) == [-2.0, 0.0, 0.0, 2.0]


def test_morse_control_measure_small():
    control = ham.morse_control()
    rep = sard.critical_value_measure(control.value, control.gradient, 1 / 512, 1e-2)
    assert rep.measure <= 0.05
    assert rep.interval_count == 3
    assert rep.flagged_cells == 4


def test_constant_function_single_interval():
    const = ham.AnalyticField(
        value_fn=lambda q: np.full(len(q), 0.7),
        grad_fn=lambda q: np.zeros_like(q),
    )
    rep = sard.critical_value_measure(const.value, const.gradient, 1 / 64, 1e-2)
    assert rep.interval_count == 1
    assert rep.flagged_cells == 64 * 64
    assert rep.measure <= 2.0 * rep.lipschitz_bound * rep.spacing


def test_measure_monotone_in_eps():
    control = ham.morse_control()
    measures = [
        sard.critical_value_measure(control.value, control.gradient, 1 / 128, eps).measure
        for eps in (1e-1, 1e-2, 1e-3)
    ]
    assert measures[0] >= measures[1] >= measures[2]


def test_sard_schedule_decreases_for_smooth_control():
    control = ham.morse_control()
    measures = [
        sard.critical_value_measure(
            control.value, control.gradient, 2.0 ** -k, 10.0 ** -k
        ).measure
        for k in (2, 3, 4)
    ]
    assert measures[0] > measures[1] > measures[2]


def test_measure_reproducible_bit_for_bit(field4):
    a = sard.critical_value_measure(field4.value, field4.gradient, 1 / 128, None)
    b = sard.critical_value_measure(field4.value, field4.gradient, 1 / 128, None)
    assert a == b


def test_whitney_field_measure_large(field8):
    rep = sard.critical_value_measure(field8.value, field8.gradient, 1 / 512, None)
    # oracle: the jet values alone are 4^-8-dense in [0, 1 - 4^-8]
    assert rep.measure >= 0.9
    assert rep.measure <= 1.0 + 1e-12


def test_dichotomy_experiment(field8):
    control = ham.morse_control()
    rep = sard.dichotomy_experiment(
        field8.value, field8.gradient, control.value, control.gradient,
        spacing=1 / 256,
    )
    assert rep.control.measure <= 0.05
    assert rep.whitney.measure >= 0.9
    assert rep.ratio >= 18.0


def test_path_integral_zero_in_cutoff_band(field8):
    # closed rectangle in the band where the field vanishes identically
    loop = np.array(
        [[0.001, 0.001], [0.015, 0.001], [0.015, 0.015], [0.001, 0.015],
         [0.001, 0.001]]
    )
    rep = sard.path_integral_H(field8.value, field8.gradient, loop, "band-loop")
    assert rep.integral == 0.0
    assert rep.variation == 0.0


def test_bridge_checks(field4, jets4, cfg4):
    checks = sard.bridge_checks(
        field4.value, field4.gradient, jets4.bridges, cfg4.bridge_spacing,
        jet_scale=cfg4.lam ** cfg4.depth,
        transform=field4.embedding.apply,
    )
    bounds = 4.0 ** -(checks.levels.astype(float) + 1.0)
    assert np.all(checks.variations <= bounds)
    assert np.abs(checks.integrals).max() <= 1e-9
    # level-1 bridges carry the quarter values
    lvl1 = checks.levels == 1
    assert lvl1.sum() == 3


def test_end_to_end_path_report(field8, cfg8):
    rep = sard.end_to_end_path_report(
        cfg8, 8, field8.value, field8.gradient,
        transform=field8.embedding.apply,
    )
    assert abs(rep.variation - (1.0 - 4.0 ** -8)) <= 1e-4
    assert rep.length >= 35.0


def test_variation_grows_against_length(field4, field6, field8, cfg4):
    # rectifiable connectivity fails: near-unit variation persists while the
    # polyline length diverges with depth
    rows = []
    for fld, depth in ((field4, 4), (field6, 6), (field8, 8)):
        cfg = arc.ArcConfig(depth=depth)
        rep = sard.end_to_end_path_report(
            cfg, depth, fld.value, fld.gradient, transform=fld.embedding.apply
        )
        rows.append((rep.variation, rep.length))
    variations, lengths = zip(*rows)
    assert all(v >= 0.99 for v in variations)
    assert lengths[0] < lengths[1] < lengths[2]
    assert all(
        abs(l - arc.polyline_length_closed_form(1 / 3, n)) <= 1e-9
        for l, n in zip(lengths, (4, 6, 8))
    )


def test_nonconstancy_reports(field8, jets8):
    rep = sard.nonconstancy_report(
        jets8.values, max_gradient=0.1, depth=8, gradient_scale=0.8 * (1 / 3) ** 8
    )
    assert rep.value_range == 1.0 - 4.0 ** -8

    # smooth control restricted to its critical set: each component is a
    # point, so the range per component vanishes
    control = ham.morse_control()
    for q, v in zip(ham.MORSE_CRITICAL_POINTS, ham.MORSE_CRITICAL_VALUES):
        vals = control.value(q[None])
        assert vals[0] == v
        assert vals.max() - vals.min() == 0.0

    empty = sard.nonconstancy_report(
        np.zeros(16), max_gradient=0.0, depth=8, gradient_scale=1e-4
    )
    assert empty.value_range == 0.0
