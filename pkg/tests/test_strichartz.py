"""Ensemble generation and mixed-norm ratio scans."""

import numpy as np
import pytest

import hyperwave as hw
from hyperwave.strichartz_harness import EnsembleSpec, run_free_scan, \
    run_potential_scan


def test_ensemble_reproducible_and_odd():
    spec = EnsembleSpec(count=4, band_limit=5, seed=7)
    a = spec.coefficient_arrays()
    b = EnsembleSpec(count=4, band_limit=5, seed=7).coefficient_arrays()
    for (cf1, cg1), (cf2, cg2) in zip(a, b):
        assert np.array_equal(cf1, cf2)
        assert np.array_equal(cg1, cg2)
        assert np.max(np.abs(cf1[0::2])) == 0.0  # odd Chebyshev only
    g = hw.make_grid(32)
    for m in spec.fields(g):
        assert hw.parity_defect(m.state.u.values) < 1e-12
        assert hw.energy_norm(m.state) > 0


def test_ensemble_prefix_stable():
    # enlarging the ensemble keeps the earlier members bit-identical
    small = EnsembleSpec(count=3, band_limit=4, seed=11).coefficient_arrays()
    large = EnsembleSpec(count=6, band_limit=4, seed=11).coefficient_arrays()
    for (cf1, cg1), (cf2, cg2) in zip(small, large):
        assert np.array_equal(cf1, cf2)
        assert np.array_equal(cg1, cg2)


def test_exponent_validation():
    spec = EnsembleSpec(count=2, band_limit=3, seed=1)
    with pytest.raises(hw.InvalidArgumentError):
        run_free_scan(spec, [(2.0, np.inf)], 4.0)
    with pytest.raises(hw.InvalidArgumentError):
        run_free_scan(spec, [(1.5, 4.0)], 4.0)
    with pytest.raises(hw.InvalidArgumentError):
        run_free_scan(spec, [(2.0, 0.5)], 4.0)


def test_free_scan_energy_pair_bounded():
    # (p,q) = (inf,2): the flow is an energy contraction, so the L2
    # amplitude stays comparable to the data norm
    spec = EnsembleSpec(count=8, band_limit=6, seed=5)
    rep = run_free_scan(spec, [(np.inf, 2.0)], 12.0, num_slices=240,
                        refine=False)
    mx = rep.max_ratio[(np.inf, 2.0)]
    assert np.isfinite(mx)
    assert 0 < mx <= 2.0


def test_free_scan_g_only_small():
    spec = EnsembleSpec(count=6, band_limit=5, seed=9, g_only=True)
    rep = run_free_scan(spec, [(2.0, 6.0)], 12.0, num_slices=240,
                        refine=False)
    mx = rep.max_ratio[(2.0, 6.0)]
    assert np.isfinite(mx)
    assert mx < 2.0


def test_free_scan_zero_member_excluded():
    class WithZero(EnsembleSpec):
        def coefficient_arrays(self):
            arrs = super().coefficient_arrays()
            z = (np.zeros_like(arrs[0][0]), np.zeros_like(arrs[0][1]))
            return [z] + arrs[1:]

    spec = WithZero(count=4, band_limit=4, seed=3)
    rep = run_free_scan(spec, [(3.0, 6.0)], 6.0, num_slices=120,
                        refine=False)
    assert np.isnan(rep.ratios[(3.0, 6.0)][0])
    assert np.isfinite(rep.max_ratio[(3.0, 6.0)])


def test_free_scan_refinement_deltas_small():
    spec = EnsembleSpec(count=5, band_limit=5, seed=13)
    rep = run_free_scan(spec, [(2.0, 4.0), (np.inf, 2.0)], 10.0,
                        num_slices=200, refine=True)
    for pq in rep.exponents:
        deltas = rep.refinement[pq]
        assert set(deltas) == {"grid_doubled", "horizon_doubled"}
        assert all(abs(v) <= 0.10 for v in deltas.values())


def test_free_scan_max_monotone_in_ensemble():
    base = EnsembleSpec(count=5, band_limit=5, seed=21)
    bigger = EnsembleSpec(count=10, band_limit=5, seed=21)
    r1 = run_free_scan(base, [(3.0, 6.0)], 8.0, num_slices=160,
                       refine=False)
    r2 = run_free_scan(bigger, [(3.0, 6.0)], 8.0, num_slices=160,
                       refine=False)
    assert r2.max_ratio[(3.0, 6.0)] >= r1.max_ratio[(3.0, 6.0)] - 1e-12


def test_potential_scan_free_consistency():
    spec = EnsembleSpec(count=5, band_limit=5, seed=5)
    pairs = [(2.0, 4.0), (3.0, 6.0)]
    free = run_free_scan(spec, pairs, 8.0, num_slices=160, refine=False)
    viaV = run_potential_scan(hw.Potential.constant(0.0), spec, pairs, 8.0,
                              num_slices=160, refine=False)
    for pq in pairs:
        a, b = free.ratios[pq], viaV.ratios[pq]
        assert np.nanmax(np.abs(a - b) / np.abs(a)) < 1e-6


def test_potential_scan_yangmills_finite_and_stable():
    spec = EnsembleSpec(count=6, band_limit=5, seed=17)
    rep = run_potential_scan(hw.Potential.constant(-1.0), spec,
                             [(3.0, 6.0)], 10.0, num_slices=200,
                             refine=True)
    mx = rep.max_ratio[(3.0, 6.0)]
    assert np.isfinite(mx) and mx > 0
    for v in rep.refinement[(3.0, 6.0)].values():
        assert abs(v) <= 0.10


def test_potential_scan_projected_mode_bounded():
    # V = -6 grows like e^s unprojected; after removing the lam=1 mode
    # the ratios stay of moderate size
    spec = EnsembleSpec(count=5, band_limit=5, seed=23)
    rep = run_potential_scan(hw.Potential.constant(-6.0), spec,
                             [(3.0, 6.0)], 5.0, num_slices=100,
                             refine=False)
    assert rep.max_ratio[(3.0, 6.0)] < 5.0


def test_potential_scan_refuses_axis_spectrum():
    spec = EnsembleSpec(count=3, band_limit=4, seed=2)
    with pytest.raises(hw.SpectralAssumptionError):
        run_potential_scan(hw.Potential.constant(-2.0), spec,
                           [(3.0, 6.0)], 4.0, num_slices=80, refine=False)


def test_tail_share_fields():
    spec = EnsembleSpec(count=4, band_limit=4, seed=31)
    rep = run_free_scan(spec, [(2.0, 4.0)], 8.0, num_slices=160,
                        refine=False)
    share = rep.tail_share[(2.0, 4.0)]
    assert 0.0 <= share <= 1.0
    assert rep.s_max == 8.0
    assert rep.grid_n == 64
