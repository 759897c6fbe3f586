"""Mixed-norm ratio scans over random odd data ensembles.

For each ensemble member the scan computes

    ratio = || u ||_{L^p_s L^q_y} / || (f,g) ||_E

with u the free closed-form solution (run_free_scan) or the
projected-out evolution under a potential (run_potential_scan). Reported
maxima come with refinement deltas (grid doubled, horizon doubled) and
the share of the L^p integral carried by the last quarter of the time
window, so saturation of the time integral is visible in the report.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import free_wave
from .core_types import (
    EnergyState,
    OddField,
    Trajectory,
    energy_norm,
    make_grid,
)
from .errors import InvalidArgumentError, SpectralAssumptionError
from .evolution import (
    _cfl_limit,
    _rk4_matrix_steps,
    assemble_generator,
    growing_mode_projection,
)
from .spectral import find_sigma_v

DEFAULT_EXPONENTS = ((2, 4), (3, 6), (4, 8), (np.inf, 2))


@dataclass
class EnsembleMember:
    """One random datum: Chebyshev coefficients plus grid samples."""
    index: int
    cheb_f: np.ndarray
    cheb_g: np.ndarray
    state: EnergyState


@dataclass
class EnsembleSpec:
    """Reproducible random odd-Chebyshev data.

    Member fields are f = sum_{k<=K} c_k T_{2k+1} with independent
    standard-normal c_k damped by (k+1)^(-decay), and likewise for g.
    With g_only the f coefficients are zeroed after drawing, so the g
    data coincide with the ones a full ensemble of the same seed gets.
    """
    count: int
    band_limit: int
    seed: int
    decay: float = 2.0
    g_only: bool = False

    def coefficient_arrays(self):
        if self.count < 1 or self.band_limit < 0:
            raise InvalidArgumentError("count >= 1 and band_limit >= 0")
        rng = np.random.default_rng(self.seed)
        K = self.band_limit
        out = []
        for i in range(self.count):
            cf = np.zeros(2 * K + 2)
            cg = np.zeros(2 * K + 2)
            for k in range(K + 1):
                cf[2 * k + 1] = rng.standard_normal() * (k + 1.0) ** -self.decay
            for k in range(K + 1):
                cg[2 * k + 1] = rng.standard_normal() * (k + 1.0) ** -self.decay
            if self.g_only:
                cf = np.zeros_like(cf)
            out.append((cf, cg))
        return out

    def fields(self, grid):
        members = []
        for i, (cf, cg) in enumerate(self.coefficient_arrays()):
            sol = free_wave.from_chebyshev(grid, cf, cg)
            members.append(EnsembleMember(
                index=i, cheb_f=cf, cheb_g=cg,
                state=EnergyState(sol.f_field, sol.g_field)))
        return members


@dataclass
class StrichartzReport:
    potential_id: str
    exponents: List[Tuple[float, float]]
    ratios: Dict[Tuple[float, float], np.ndarray]
    max_ratio: Dict[Tuple[float, float], float]
    refinement: Dict[Tuple[float, float], Dict[str, float]]
    tail_share: Dict[Tuple[float, float], float]
    s_max: float = 0.0
    grid_n: int = 0
    ensemble: Optional[EnsembleSpec] = None


def _validate_exponents(exponents):
    pairs = []
    for p, q in exponents:
        p = float(p)
        q = float(q)
        if np.isinf(q):
            raise InvalidArgumentError(
                "q = inf is excluded: constant-in-y comparisons admit no"
                " sup-in-y bound by the energy (the constant-solution"
                " obstruction)")
        if p < 2:
            raise InvalidArgumentError(f"p >= 2 required, got {p}")
        if q < 1:
            raise InvalidArgumentError(f"q >= 1 required, got {q}")
        pairs.append((p, q))
    if not pairs:
        raise InvalidArgumentError("empty exponent list")
    return pairs


def _lq_of_rows(U, grid, q):
    """L^q norms of each row of a (num_slices, n) sample stack."""
    if np.isinf(q):
        return np.max(np.abs(U), axis=1)
    return (np.abs(U) ** q @ grid.quad_weights) ** (1.0 / q)


def _mixed_from_samples(times, lq, p):
    if np.isinf(p):
        return float(np.max(lq))
    return float(np.trapezoid(lq ** p, times) ** (1.0 / p))


def _tail_share(times, lq, p, s_max):
    """Share of the L^p time integral carried by [3/4 s_max, s_max]."""
    sel = times >= 0.75 * s_max
    if np.isinf(p):
        total = float(np.max(lq))
        return float(np.max(lq[sel]) / total) if total > 0 else 0.0
    total = float(np.trapezoid(lq ** p, times))
    if total <= 0:
        return 0.0
    return float(np.trapezoid(lq[sel] ** p, times[sel]) / total)


def _free_member_norms(member, grid, times, qs):
    sol = free_wave.from_chebyshev(grid, member.cheb_f, member.cheb_g)
    U = np.stack([free_wave.evaluate(sol, t, grid.nodes) for t in times])
    return {q: _lq_of_rows(U, grid, q) for q in qs}


def run_free_scan(spec, exponents=DEFAULT_EXPONENTS, s_max=20.0, grid=None,
                  num_slices=400, refine=True):
    """Ratio scan for the closed-form free evolution."""
    pairs = _validate_exponents(exponents)
    if grid is None:
        grid = make_grid(64)
    if s_max <= 0 or num_slices < 8:
        raise InvalidArgumentError("need s_max > 0 and num_slices >= 8")
    qs = sorted({q for _, q in pairs})
    times = np.linspace(0.0, s_max, num_slices + 1)
    members = spec.fields(grid)
    energies = np.array([energy_norm(m.state) for m in members])

    norms = [_free_member_norms(m, grid, times, qs) for m in members]
    ratios = {}
    tail = {}
    for p, q in pairs:
        r = np.full(len(members), np.nan)
        for i, nm in enumerate(norms):
            if energies[i] > 0:
                r[i] = _mixed_from_samples(times, nm[q], p) / energies[i]
        ratios[(p, q)] = r
        best = int(np.nanargmax(r))
        tail[(p, q)] = _tail_share(times, norms[best][q], p, s_max)
    max_ratio = {pq: float(np.nanmax(r)) for pq, r in ratios.items()}

    refinement = {}
    if refine:
        grid2 = make_grid(2 * grid.n)
        times2 = np.linspace(0.0, 2.0 * s_max, 2 * num_slices + 1)
        for p, q in pairs:
            best = int(np.nanargmax(ratios[(p, q)]))
            m = members[best]
            base = ratios[(p, q)][best]
            # grid doubled
            sol2 = free_wave.from_chebyshev(grid2, m.cheb_f, m.cheb_g)
            U2 = np.stack([free_wave.evaluate(sol2, t, grid2.nodes)
                           for t in times])
            e2 = energy_norm(EnergyState(sol2.f_field, sol2.g_field))
            r_n = _mixed_from_samples(times, _lq_of_rows(U2, grid2, q), p) / e2
            # horizon doubled
            nm = _free_member_norms(m, grid, times2, [q])
            r_s = _mixed_from_samples(times2, nm[q], p) / energies[best]
            refinement[(p, q)] = {
                "grid_doubled": abs(r_n - base) / base,
                "horizon_doubled": abs(r_s - base) / base,
            }
    return StrichartzReport(
        potential_id="free", exponents=pairs, ratios=ratios,
        max_ratio=max_ratio, refinement=refinement, tail_share=tail,
        s_max=float(s_max), grid_n=grid.n, ensemble=spec)


def _batch_slice_norms(gen, X0, s_max, num_slices, qs, cfl_constant):
    """Evolve a reduced column batch, recording L^q norms of the first
    component at num_slices+1 equispaced times (step chosen to land on
    them exactly)."""
    grid = gen.grid
    half = grid.n // 2
    E1 = gen.expand[:grid.n, :half]
    limit = _cfl_limit(grid.n, cfl_constant)
    ds_slice = s_max / num_slices
    k = max(1, int(np.ceil(ds_slice / limit - 1e-12)))
    ds = ds_slice / k
    M = num_slices * k

    norms = {q: np.zeros((num_slices + 1, X0.shape[1])) for q in qs}

    def record(row, X):
        U = (E1 @ X[:half]).T  # (members, n)
        for q in qs:
            if np.isinf(q):
                norms[q][row] = np.max(np.abs(U), axis=1)
            else:
                norms[q][row] = (np.abs(U) ** q
                                 @ grid.quad_weights) ** (1.0 / q)

    record(0, X0)

    def observer(i, s, X):
        record(i // k, X)

    _rk4_matrix_steps(gen.reduced, X0, ds, M, observer=observer,
                      observe_every=k)
    times = np.linspace(0.0, s_max, num_slices + 1)
    return times, norms


def run_potential_scan(V, spec, exponents=DEFAULT_EXPONENTS, s_max=20.0,
                       grid=None, window=(3.0, 20.0), num_slices=400,
                       cfl_constant=4.0, refine=True):
    """Ratio scan for the evolution under V, growing modes projected out.

    Aborts with a diagnostic if the mode finder reports imaginary-axis
    spectrum (the ratio bound is meaningless there). Ratios use the
    energy of the original (un-projected) data.
    """
    pairs = _validate_exponents(exponents)
    if grid is None:
        grid = make_grid(64)
    qs = sorted({q for _, q in pairs})

    roots = find_sigma_v(V, window=window, grid=grid)
    axis = [r for r in roots if abs(r.lam.real) < 1e-6]
    if axis:
        bad = ", ".join(f"{r.lam:.6g}" for r in axis)
        raise SpectralAssumptionError(
            f"imaginary-axis spectral point(s) {bad} for {V!r}: the"
            " projected-evolution bound does not apply")
    pos = [r.lam for r in roots if r.lam.real >= 1e-6]

    gen = assemble_generator(grid, V)
    members = spec.fields(grid)
    energies = np.array([energy_norm(m.state) for m in members])
    X0 = np.stack([gen.reduce_state(m.state) for m in members], axis=1)
    proj = growing_mode_projection(gen, pos)
    if proj is not None:
        X0 = X0 - proj.reduced @ X0

    times, norms = _batch_slice_norms(gen, X0, s_max, num_slices, qs,
                                      cfl_constant)

    ratios = {}
    tail = {}
    for p, q in pairs:
        r = np.full(len(members), np.nan)
        for i in range(len(members)):
            if energies[i] > 0:
                r[i] = _mixed_from_samples(times, norms[q][:, i], p) \
                    / energies[i]
        ratios[(p, q)] = r
        best = int(np.nanargmax(r))
        tail[(p, q)] = _tail_share(times, norms[q][:, best], p, s_max)
    max_ratio = {pq: float(np.nanmax(r)) for pq, r in ratios.items()}

    refinement = {}
    if refine:
        best_set = sorted({int(np.nanargmax(ratios[pq])) for pq in ratios})
        # grid doubled: rebuild everything at 2n for the argmax members
        grid2 = make_grid(2 * grid.n)
        gen2 = assemble_generator(grid2, V)
        members2 = {i: free_wave.from_chebyshev(
            grid2, members[i].cheb_f, members[i].cheb_g) for i in best_set}
        X02 = np.stack([gen2.reduce_state(
            EnergyState(members2[i].f_field, members2[i].g_field))
            for i in best_set], axis=1)
        proj2 = growing_mode_projection(gen2, pos)
        if proj2 is not None:
            X02 = X02 - proj2.reduced @ X02
        t_n, n_n = _batch_slice_norms(gen2, X02, s_max, num_slices, qs,
                                      cfl_constant)
        # horizon doubled on the original grid
        X0h = np.stack([gen.reduce_state(members[i].state)
                        for i in best_set], axis=1)
        if proj is not None:
            X0h = X0h - proj.reduced @ X0h
        t_h, n_h = _batch_slice_norms(gen, X0h, 2.0 * s_max, 2 * num_slices,
                                      qs, cfl_constant)
        col = {i: j for j, i in enumerate(best_set)}
        for p, q in pairs:
            best = int(np.nanargmax(ratios[(p, q)]))
            j = col[best]
            base = ratios[(p, q)][best]
            e2 = energy_norm(EnergyState(members2[best].f_field,
                                         members2[best].g_field))
            r_n = _mixed_from_samples(t_n, n_n[q][:, j], p) / e2
            r_h = _mixed_from_samples(t_h, n_h[q][:, j], p) / energies[best]
            refinement[(p, q)] = {
                "grid_doubled": abs(r_n - base) / base,
                "horizon_doubled": abs(r_h - base) / base,
            }
    return StrichartzReport(
        potential_id=str(V.name), exponents=pairs, ratios=ratios,
        max_ratio=max_ratio, refinement=refinement, tail_share=tail,
        s_max=float(s_max), grid_n=grid.n, ensemble=spec)
