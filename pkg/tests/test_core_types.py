"""Grid construction, field algebra, and norm plumbing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hyperwave as hw
from hyperwave.core_types import extrapolate_to


def test_make_grid_basic():
    g = hw.make_grid(16)
    assert g.n == 16
    assert np.all(np.diff(g.nodes) > 0)
    assert np.allclose(g.nodes, -g.nodes[::-1])
    assert np.all(np.abs(g.nodes) < 1.0)


@pytest.mark.parametrize("n", [7, 6, 0, -4])
def test_make_grid_rejects_bad_sizes(n):
    with pytest.raises(hw.InvalidArgumentError):
        hw.make_grid(n)


def test_diff_matrix_exact_on_polynomials():
    g = hw.make_grid(24)
    y = g.nodes
    for k in range(1, 8):
        d = g.diff_matrix @ (y ** k)
        assert np.max(np.abs(d - k * y ** (k - 1))) < 1e-9


def test_quadrature_weights_integrate_polynomials():
    g = hw.make_grid(32)
    y = g.nodes
    assert abs(g.quad_weights @ np.ones_like(y) - 2.0) < 1e-12
    assert abs(g.quad_weights @ y ** 2 - 2.0 / 3.0) < 1e-12
    assert abs(g.quad_weights @ y ** 6 - 2.0 / 7.0) < 1e-12
    # odd integrands vanish by symmetry
    assert abs(g.quad_weights @ y ** 3) < 1e-14


def test_barycentric_interpolation_polynomial_exact():
    g = hw.make_grid(16)
    vals = g.nodes ** 5 - 3 * g.nodes
    xs = np.linspace(-0.95, 0.95, 17)
    got = hw.barycentric_interpolate(g, vals, xs)
    assert np.max(np.abs(got - (xs ** 5 - 3 * xs))) < 1e-12
    # exact at the nodes themselves
    at_node = hw.barycentric_interpolate(g, vals, g.nodes[3])
    assert at_node == pytest.approx(vals[3], abs=1e-14)


def test_parity_defect_detects_even_part():
    g = hw.make_grid(16)
    assert hw.parity_defect(g.nodes ** 3) < 1e-15
    assert hw.parity_defect(g.nodes ** 2) > 0.1


def test_odd_field_rejects_even_data():
    g = hw.make_grid(16)
    with pytest.raises(hw.InvalidDataError):
        hw.OddField(g, g.nodes ** 2)
    # the wormhole vacua W = +-1 are even constants: not representable
    with pytest.raises(hw.InvalidDataError):
        hw.OddField(g, np.ones(g.n))


def test_odd_field_rejects_nonfinite():
    g = hw.make_grid(16)
    bad = g.nodes.copy()
    bad[0] = np.nan
    with pytest.raises(hw.InvalidDataError):
        hw.OddField(g, bad)


def test_odd_field_arithmetic():
    g = hw.make_grid(16)
    a = hw.OddField(g, g.nodes)
    b = hw.OddField(g, g.nodes ** 3)
    s = a + b
    assert np.allclose(s.values, g.nodes + g.nodes ** 3)
    d = a - b
    assert np.allclose(d.values, g.nodes - g.nodes ** 3)
    m = 2.5 * a
    assert np.allclose(m.values, 2.5 * g.nodes)


def test_odd_field_deriv():
    g = hw.make_grid(24)
    f = hw.OddField(g, g.nodes ** 3)
    df = f.deriv()
    assert np.max(np.abs(df - 3 * g.nodes ** 2)) < 1e-9


def test_odd_field_preserves_real_dtype():
    g = hw.make_grid(16)
    f = hw.OddField(g, g.nodes)
    assert f.values.dtype == np.float64
    fc = hw.OddField(g, (1 + 1j) * g.nodes)
    assert np.issubdtype(fc.values.dtype, np.complexfloating)


def test_energy_state_grid_mismatch():
    a = hw.make_grid(16)
    b = hw.make_grid(32)
    with pytest.raises(hw.InvalidDataError):
        hw.EnergyState(hw.OddField.zero(a), hw.OddField.zero(b))


def test_energy_norm_oracles():
    # (y, 0): integral (1-y^2)*1 = 4/3; (0, y): integral y^2 = 2/3
    g = hw.make_grid(32)
    st_f = hw.EnergyState.from_callables(g, lambda y: y, lambda y: 0 * y)
    assert hw.energy_norm(st_f) == pytest.approx(np.sqrt(4.0 / 3.0), rel=1e-12)
    st_g = hw.EnergyState.from_callables(g, lambda y: 0 * y, lambda y: y)
    assert hw.energy_norm(st_g) == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-12)
    st_fg = hw.EnergyState.from_callables(g, lambda y: y, lambda y: y)
    assert hw.energy_norm(st_fg) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_lq_norm_oracles():
    g = hw.make_grid(64)
    f = hw.OddField(g, g.nodes)
    assert hw.lq_norm(f, 2) == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-12)
    assert hw.lq_norm(f, 6) == pytest.approx((2.0 / 7.0) ** (1.0 / 6.0),
                                             rel=1e-12)
    assert hw.lq_norm(f, np.inf) == pytest.approx(np.max(np.abs(g.nodes)))
    with pytest.raises(hw.InvalidArgumentError):
        hw.lq_norm(f, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-8.0, max_value=8.0,
                 allow_nan=False, allow_infinity=False),
       st.sampled_from([1.0, 2.0, 3.0, 6.0, np.inf]))
def test_lq_norm_homogeneous(c, q):
    g = hw.make_grid(16)
    f = hw.OddField(g, g.nodes ** 3)
    assert hw.lq_norm(c * f, q) == pytest.approx(abs(c) * hw.lq_norm(f, q),
                                                 rel=1e-10, abs=1e-12)


def _const_in_s_trajectory(g, n_slices=11, s_max=1.0):
    f = hw.OddField(g, g.nodes)
    states = [hw.EnergyState(f, hw.OddField.zero(g)) for _ in range(n_slices)]
    return hw.Trajectory(np.linspace(0, s_max, n_slices), states)


def test_mixed_norm_constant_in_time():
    g = hw.make_grid(32)
    traj = _const_in_s_trajectory(g, s_max=2.0)
    l6 = hw.lq_norm(hw.OddField(g, g.nodes), 6)
    # L^p in s of a constant over [0, 2] is 2^(1/p) * value
    assert hw.mixed_norm(traj, 2, 6) == pytest.approx(np.sqrt(2.0) * l6,
                                                      rel=1e-12)
    assert hw.mixed_norm(traj, np.inf, 6) == pytest.approx(l6, rel=1e-12)
    with pytest.raises(hw.InvalidArgumentError):
        hw.mixed_norm(traj, 1.5, 6)


def test_trajectory_guards_and_restriction():
    g = hw.make_grid(16)
    f = hw.OddField(g, g.nodes)
    st0 = hw.EnergyState(f, hw.OddField.zero(g))
    with pytest.raises(hw.InvalidDataError):
        hw.Trajectory(np.array([0.0, 0.0]), [st0, st0])
    traj = hw.Trajectory(np.linspace(0, 1, 5), [st0] * 5)
    sub = traj.restricted(0.4, 1.0)
    assert len(sub) == 3
    assert sub.times[0] >= 0.4
    with pytest.raises(hw.InvalidDataError):
        traj.restricted(2.0, 3.0)


def test_potential_evenness_guard():
    with pytest.raises(hw.InvalidDataError):
        hw.Potential.from_callable(lambda y: y)
    V = hw.Potential.from_callable(lambda y: y * y - 2.0, name="y2-2")
    assert V.max_abs() == pytest.approx(2.0, rel=1e-3)


def test_potential_taylor_at_one():
    # V = y^2 - 2 about y=1: -1 + 2(y-1) + (y-1)^2
    V = hw.Potential.from_callable(lambda y: y * y - 2.0)
    c = V.taylor_at_one(4)
    assert np.allclose(c[:3], [-1.0, 2.0, 1.0], atol=1e-9)
    assert np.max(np.abs(c[3:])) < 1e-9
    Vc = hw.Potential.constant(-6.0)
    cc = Vc.taylor_at_one(3)
    assert np.allclose(cc, [-6.0, 0.0, 0.0], atol=1e-12)


def test_sobolev_embedding_ratio():
    g = hw.make_grid(32)
    f = hw.OddField(g, g.nodes)
    r1 = hw.sobolev_embedding_ratio(f, 6)
    r2 = hw.sobolev_embedding_ratio(3.0 * f, 6)
    assert r1 > 0
    assert r2 == pytest.approx(r1, rel=1e-12)  # scale invariant
    with pytest.raises(hw.UndefinedRatioError):
        hw.sobolev_embedding_ratio(hw.OddField.zero(g), 6)


def test_extrapolate_to_boundary():
    g = hw.make_grid(32)
    vals = g.nodes ** 3
    assert extrapolate_to(vals, g, 1.0) == pytest.approx(1.0, abs=1e-10)
    assert extrapolate_to(vals, g, -1.0) == pytest.approx(-1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-2, max_value=2, allow_nan=False,
                          width=32), min_size=1, max_size=6))
def test_odd_projection_is_odd(coeffs):
    g = hw.make_grid(16)
    vals = np.zeros(g.n)
    for k, c in enumerate(coeffs):
        vals += c * g.nodes ** (2 * k + 1)
    f = hw.OddField(g, vals)
    assert hw.parity_defect(f.values) < 1e-12 * max(1.0,
                                                    np.max(np.abs(f.values)))
