"""Dense generator matrices, semigroup time stepping, Riesz projections,
and the growing/decaying-mode decomposition.

The first-order system evolved here is

    d/ds (f1, f2) = L (f1, f2),
    L (f1, f2) = (f2, (1-y^2) f1'' - 2y f1' - 2y f2' - f2 - V f1),

collocated at the parity-symmetric Chebyshev nodes. All states of
interest are odd, so the public 2n x 2n matrix is conjugated with the
parity projector, and time stepping runs on the equivalent odd-sector
reduction (one unknown per positive node, exact parity by construction,
and no spurious even-sector eigenvalues).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core_types import EnergyState, OddField, Trajectory, energy_norm
from .errors import (
    ContourAccuracyError,
    DivergenceError,
    InvalidArgumentError,
    NearEigenvalueError,
    SpectralAssumptionError,
    StabilityError,
)
from .spectral import find_sigma_v

DEFAULT_CFL_CONSTANT = 4.0


def _odd_sector_maps(n):
    """Extension / restriction between odd fields on n nodes and their
    values at the n//2 positive nodes."""
    half = n // 2
    E1 = np.zeros((n, half))
    for k in range(half):
        E1[half + k, k] = 1.0
        E1[half - 1 - k, k] = -1.0
    R1 = 0.5 * E1.T
    return E1, R1


class GeneratorMatrix:
    """Discretized first-order generator for a fixed potential.

    `matrix` is the public parity-projected 2n x 2n operator; `reduced`
    is the equivalent n x n odd-sector matrix actually used for time
    stepping and resolvents (matrix = expand @ reduced @ restrict).
    """

    __slots__ = ("grid", "potential", "matrix", "reduced", "expand",
                 "restrict", "_eigs")

    def __init__(self, grid, potential, matrix, reduced, expand, restrict):
        self.grid = grid
        self.potential = potential
        self.matrix = matrix
        self.reduced = reduced
        self.expand = expand
        self.restrict = restrict
        self._eigs = None

    def apply(self, state):
        self._check_grid(state)
        n = self.grid.n
        w = self.matrix @ state.stacked()
        return EnergyState(OddField(self.grid, w[:n]),
                           OddField(self.grid, w[n:]))

    def reduced_eigenvalues(self):
        if self._eigs is None:
            self._eigs = np.linalg.eigvals(self.reduced)
        return self._eigs

    def _check_grid(self, state):
        if state.grid is not self.grid and not np.array_equal(
                state.grid.nodes, self.grid.nodes):
            raise InvalidArgumentError("state and generator grids differ")

    def reduce_state(self, state):
        self._check_grid(state)
        return self.restrict @ state.stacked()

    def expand_state(self, x):
        n = self.grid.n
        w = self.expand @ x
        return EnergyState(OddField(self.grid, w[:n]),
                           OddField(self.grid, w[n:]))

    def reduced_energy(self, x):
        """Squared energy norm of a reduced vector (or a batch: columns)."""
        grid = self.grid
        half = grid.n // 2
        E1 = self.expand[:grid.n, :half]
        u = E1 @ x[:half]
        v = E1 @ x[half:]
        du = grid.diff_matrix @ u
        wgt = grid.quad_weights
        fac = wgt * (1.0 - grid.nodes ** 2)
        return (fac @ (np.abs(du) ** 2) + wgt @ (np.abs(v) ** 2)).real


def assemble_generator(grid, V):
    """Build the collocation matrix of the generator for potential V."""
    n = grid.n
    y = grid.nodes
    D = grid.diff_matrix
    Iden = np.eye(n)
    A = (1.0 - y ** 2)[:, None] * (D @ D) - 2.0 * y[:, None] * D \
        - np.diag(np.asarray(V(y), dtype=float))
    B = -2.0 * y[:, None] * D - Iden
    L = np.block([[np.zeros((n, n)), Iden], [A, B]])

    E1, R1 = _odd_sector_maps(n)
    Z = np.zeros_like(E1)
    E = np.block([[E1, Z], [Z, E1]])
    R = np.block([[R1, Z.T], [Z.T, R1]])
    reduced = R @ L @ E
    matrix = E @ reduced @ R  # parity projection composed on both sides
    return GeneratorMatrix(grid, V, matrix, reduced, E, R)


def _step_count(s_max, ds):
    if ds <= 0:
        raise InvalidArgumentError("ds must be positive")
    if s_max < 0:
        raise InvalidArgumentError("s_max must be nonnegative")
    return int(np.floor(s_max / ds + 1e-12))


def _cfl_limit(n, cfl_constant):
    return cfl_constant / float(n) ** 2


def _rk4_matrix_steps(Lr, X, ds, num_steps, observer=None, observe_every=1,
                      guard=None, guard_every=50):
    """Fixed-step RK4 for X' = Lr X; X may be a vector or a column batch.

    observer(i, s, X) is called after selected steps; guard(i, s, X) may
    raise. The final X is returned.
    """
    for i in range(1, num_steps + 1):
        k1 = Lr @ X
        k2 = Lr @ (X + 0.5 * ds * k1)
        k3 = Lr @ (X + 0.5 * ds * k2)
        k4 = Lr @ (X + ds * k3)
        X = X + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if observer is not None and (i % observe_every == 0 or i == num_steps):
            observer(i, i * ds, X)
        if guard is not None and (i % guard_every == 0 or i == num_steps):
            guard(i, i * ds, X)
    return X


def evolve(gen, init, s_max, ds=None, cfl_constant=DEFAULT_CFL_CONSTANT,
           store_every=1):
    """Semigroup trajectory by classical RK4 on the odd-sector system.

    ds defaults to the stability limit cfl_constant / n^2; a larger ds
    raises the stability error. A norm growing past
    10 e^{(max|V|+1)s} times the initial norm aborts with a divergence
    error (linear evolutions obey this bound with a wide margin).
    """
    grid = gen.grid
    limit = _cfl_limit(grid.n, cfl_constant)
    if ds is None:
        ds = limit
    if ds > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"ds = {ds:.3e} exceeds the stability limit {limit:.3e}"
            f" (= {cfl_constant}/n^2 with n = {grid.n})")
    M = _step_count(s_max, ds)

    x = gen.reduce_state(init)
    norm0 = energy_norm(init)
    vmax = gen.potential.max_abs()
    rate = vmax + 1.0

    times = [0.0]
    states = [gen.expand_state(x)]

    def observer(i, s, X):
        if i % store_every == 0 or i == M:
            times.append(s)
            states.append(gen.expand_state(X))

    def guard(i, s, X):
        if norm0 > 0 and np.sqrt(gen.reduced_energy(X)) \
                > 10.0 * np.exp(rate * s) * norm0:
            raise DivergenceError(
                f"norm at s = {s:.3f} exceeds 10 e^{{(max|V|+1)s}} times"
                " the initial norm")

    _rk4_matrix_steps(gen.reduced, x, ds, M, observer=observer,
                      observe_every=1, guard=guard)
    return Trajectory(np.asarray(times), states, step=ds)


# ---------------------------------------------------------------------------
# Resolvent and Riesz projection

class ResolventHandle:
    """LU-backed solve handle for (lambda I - L) on the odd sector."""

    __slots__ = ("gen", "lam", "_lu", "_reduced_inv")

    def __init__(self, gen, lam):
        self.gen = gen
        self.lam = lam
        half2 = gen.reduced.shape[0]
        self._lu = lu_factor(lam * np.eye(half2) - gen.reduced)
        self._reduced_inv = None

    def apply(self, state):
        x = self.gen.reduce_state(state).astype(complex)
        return self.gen.expand_state(lu_solve(self._lu, x))

    def reduced_matrix(self):
        if self._reduced_inv is None:
            half2 = self.gen.reduced.shape[0]
            self._reduced_inv = lu_solve(self._lu, np.eye(half2, dtype=complex))
        return self._reduced_inv


def resolvent_matrix(gen, lam):
    """Resolvent handle at lambda; refuses within 1e-6 of the reduced
    matrix spectrum."""
    lam = complex(lam)
    eigs = gen.reduced_eigenvalues()
    dist = float(np.min(np.abs(eigs - lam)))
    if dist < 1e-6:
        raise NearEigenvalueError(
            f"lambda = {lam:.6g} is within {dist:.2e} of a generator"
            " eigenvalue")
    return ResolventHandle(gen, lam)


def _as_complex(v):
    """Accept complex, real, or an (re, im) pair."""
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _contour_nodes(contour):
    """Nodes and quadrature weights for (1/2 pi i) of the resolvent.

    Circle contours use the exact parametrization (spectrally accurate
    trapezoid); rectangles use composite trapezoid per edge.
    """
    kind = contour.get("kind", "circle")
    if kind == "circle":
        c = _as_complex(contour["center"])
        r = float(contour["radius"])
        M = int(contour.get("points", 64))
        if r <= 0 or M < 8:
            raise InvalidArgumentError("circle needs radius > 0, points >= 8")
        th = 2.0 * np.pi * np.arange(M) / M
        lams = c + r * np.exp(1j * th)
        w = (r / M) * np.exp(1j * th)  # (1/2pi i) * i r e^{i th} * (2pi/M)
        return lams, w
    if kind == "rect":
        re_lo, re_hi = map(float, contour["re"])
        im_lo, im_hi = map(float, contour["im"])
        M = int(contour.get("points", 512))
        corners = [re_lo + 1j * im_lo, re_hi + 1j * im_lo,
                   re_hi + 1j * im_hi, re_lo + 1j * im_hi]
        lams = []
        w = []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            t = np.linspace(0.0, 1.0, M + 1)
            seg = a + t * (b - a)
            wt = np.full(M + 1, (b - a) / M)
            wt[0] *= 0.5
            wt[-1] *= 0.5
            lams.append(seg)
            w.append(wt)
        lams = np.concatenate(lams)
        w = np.concatenate(w) / (2j * np.pi)
        return lams, w
    raise InvalidArgumentError(f"unknown contour kind {kind!r}")


@dataclass
class RieszProjection:
    """Contour-quadrature spectral projection.

    `matrix` is the full 2n x 2n projection; `reduced` the odd-sector
    one. `nilpotency[lam]` is the largest power k with
    (L - lam)^k P_lam nonzero at tolerance, i.e. the degree of the
    polynomial-in-s factor in the mode evolution (0 = no Jordan block).
    """
    contour_points: np.ndarray
    matrix: np.ndarray
    reduced: np.ndarray
    rank: int
    eigenvalues_inside: List[complex] = field(default_factory=list)
    multiplicity: Dict[complex, int] = field(default_factory=dict)
    nilpotency: Dict[complex, int] = field(default_factory=dict)

    def apply(self, gen, state):
        x = gen.reduce_state(state).astype(complex)
        return gen.expand_state(self.reduced @ x)


def _quadrature_projection(gen, lams, w):
    eigs = gen.reduced_eigenvalues()
    half2 = gen.reduced.shape[0]
    P = np.zeros((half2, half2), dtype=complex)
    Iden = np.eye(half2)
    for lam, wk in zip(lams, w):
        if float(np.min(np.abs(eigs - lam))) < 1e-6:
            raise ContourAccuracyError(
                f"contour node {lam:.6g} is within 1e-6 of the spectrum")
        P += wk * np.linalg.solve(lam * Iden - gen.reduced, Iden)
    return P


def _inside(contour, z):
    if contour.get("kind", "circle") == "circle":
        return abs(z - _as_complex(contour["center"])) < float(
            contour["radius"])
    re_lo, re_hi = map(float, contour["re"])
    im_lo, im_hi = map(float, contour["im"])
    return re_lo < z.real < re_hi and im_lo < z.imag < im_hi


def _matrix_rank_svd(P, threshold=1e-6):
    sv = np.linalg.svd(P, compute_uv=False)
    return int(np.sum(sv > threshold))


def _nilpotency_order(gen, lam, P):
    """Smallest k >= 0 such that (L - lam)^(k+1) P vanishes at tolerance."""
    half2 = gen.reduced.shape[0]
    A = gen.reduced - lam * np.eye(half2)
    scale = max(1.0, float(np.linalg.norm(P, 2)))
    tol = 1e-8 * (1.0 + abs(lam))
    Q = P.copy()
    for k in range(half2):
        Q = A @ Q
        if float(np.linalg.norm(Q, 2)) / scale <= tol:
            return k
    raise ContourAccuracyError(
        f"no nilpotency order found at lambda = {lam:.6g}")


def riesz_projection(gen, contour):
    """Trapezoid contour quadrature of the resolvent.

    contour: {"kind": "circle", "center", "radius", "points"} or
    {"kind": "rect", "re": (lo, hi), "im": (lo, hi), "points"}; a list of
    such dicts sums the projections of disjoint contours.
    """
    contours = contour if isinstance(contour, (list, tuple)) else [contour]
    lam_all = []
    P = np.zeros_like(gen.reduced, dtype=complex)
    for c in contours:
        lams, w = _contour_nodes(c)
        lam_all.append(lams)
        P += _quadrature_projection(gen, lams, w)
    lam_all = np.concatenate(lam_all)

    rank = _matrix_rank_svd(P)
    eigs = gen.reduced_eigenvalues()
    inside = [complex(z) for z in eigs
              if any(_inside(c, complex(z)) for c in contours)]
    # cluster discretization eigenvalues that approximate one spectral point
    clusters = []
    for z in sorted(inside, key=lambda q: (q.real, q.imag)):
        for cl in clusters:
            if abs(z - cl[0]) < 1e-6:
                cl.append(z)
                break
        else:
            clusters.append([z])

    multiplicity = {}
    nilpotency = {}
    for cl in clusters:
        lam_c = complex(np.mean(cl))
        others = [complex(np.mean(c2)) for c2 in clusters if c2 is not cl]
        sep = min([abs(lam_c - o) for o in others], default=np.inf)
        radius = min(0.25, 0.45 * sep)
        small = {"kind": "circle", "center": lam_c, "radius": radius,
                 "points": 128}
        lams_s, w_s = _contour_nodes(small)
        P_lam = _quadrature_projection(gen, lams_s, w_s)
        multiplicity[lam_c] = _matrix_rank_svd(P_lam)
        nilpotency[lam_c] = _nilpotency_order(gen, lam_c, P_lam)

    matrix = gen.expand @ P @ gen.restrict
    return RieszProjection(contour_points=lam_all, matrix=matrix, reduced=P,
                           rank=rank, eigenvalues_inside=inside,
                           multiplicity=multiplicity, nilpotency=nilpotency)


# ---------------------------------------------------------------------------
# Decomposition

@dataclass
class UnstableMode:
    """One exponential-polynomial mode: e^{lam s} sum_k s^k phi_k."""
    lam: complex
    phis: List[EnergyState]  # phi_k = (1/k!) (L-lam)^k P_lam init, k <= n(lam)

    def state_at(self, s):
        acc = None
        for k, ph in enumerate(self.phis):
            term_u = ph.u.values * (np.exp(self.lam * s) * s ** k)
            term_v = ph.v.values * (np.exp(self.lam * s) * s ** k)
            if acc is None:
                acc = [term_u, term_v]
            else:
                acc[0] = acc[0] + term_u
                acc[1] = acc[1] + term_v
        return acc


@dataclass
class DecomposedEvolution:
    """Spectral splitting of a linear trajectory.

    unstable_modes carries the finite-rank exponential part; the stable
    trajectory is the semigroup evolution of the spectrally-projected
    remainder (I - P) init.
    """
    unstable_modes: List[UnstableMode]
    stable_trajectory: Trajectory
    projection: Optional[RieszProjection]

    def unstable_state(self, s):
        grid = self.stable_trajectory.states[0].grid
        n = grid.n
        u = np.zeros(n, dtype=complex)
        v = np.zeros(n, dtype=complex)
        for mode in self.unstable_modes:
            tu, tv = mode.state_at(s)
            u += tu
            v += tv
        return EnergyState(OddField(grid, u), OddField(grid, v))

    def total_state(self, index):
        """Unstable + stable at the index-th stored time."""
        s = self.stable_trajectory.times[index]
        st = self.stable_trajectory.states[index]
        un = self.unstable_state(s)
        grid = st.grid
        return EnergyState(OddField(grid, st.u.values + un.u.values),
                           OddField(grid, st.v.values + un.v.values))


def _axis_and_positive_roots(V, window, grid):
    roots = find_sigma_v(V, window=window, grid=grid)
    axis = [r for r in roots if abs(r.lam.real) < 1e-6]
    pos = [r for r in roots if r.lam.real >= 1e-6]
    return axis, pos


def _root_circles(lams, points=128):
    """Small disjoint circles around each growing mode, kept off the axis."""
    out = []
    for lam in lams:
        sep = min([abs(lam - o) for o in lams if o != lam], default=np.inf)
        radius = min(0.25, 0.45 * sep, 0.9 * lam.real)
        out.append({"kind": "circle", "center": lam, "radius": radius,
                    "points": points})
    return out


def growing_mode_projection(gen, lams):
    """Total Riesz projection onto the listed growing modes (None if no
    modes are given)."""
    lams = list(lams)
    if not lams:
        return None
    return riesz_projection(gen, _root_circles(lams))


def decompose_and_evolve(gen, init, s_max, ds=None, window=(3.0, 20.0),
                         store_every=1, cfl_constant=DEFAULT_CFL_CONSTANT):
    """Split off the growing modes, evolve the remainder.

    Scans for right-half-plane spectral points; an imaginary-axis point
    violates the spectral assumption and aborts. Each growing mode gets a
    small-circle Riesz projection; phi_k = (1/k!) (L-lam)^k P_lam init.
    """
    axis, pos = _axis_and_positive_roots(gen.potential, window, gen.grid)
    if axis:
        bad = ", ".join(f"{r.lam:.6g}" for r in axis)
        raise SpectralAssumptionError(
            f"imaginary-axis spectral point(s) found: {bad}")

    if not pos:
        traj = evolve(gen, init, s_max, ds=ds, cfl_constant=cfl_constant,
                      store_every=store_every)
        return DecomposedEvolution([], traj, None)

    contours = _root_circles([r.lam for r in pos])
    proj = riesz_projection(gen, contours)

    x0 = gen.reduce_state(init).astype(complex)
    modes = []
    half2 = gen.reduced.shape[0]
    for r, c in zip(pos, contours):
        lams_s, w_s = _contour_nodes(c)
        P_lam = _quadrature_projection(gen, lams_s, w_s)
        n_lam = _nilpotency_order(gen, r.lam, P_lam)
        cur = P_lam @ x0
        phis = [gen.expand_state(cur)]
        A = gen.reduced - r.lam * np.eye(half2)
        for k in range(1, n_lam + 1):
            cur = (A @ cur) / k
            phis.append(gen.expand_state(cur))
        modes.append(UnstableMode(lam=r.lam, phis=phis))

    rem = x0 - proj.reduced @ x0
    stable_traj = evolve(gen, gen.expand_state(rem), s_max, ds=ds,
                         cfl_constant=cfl_constant, store_every=store_every)
    return DecomposedEvolution(modes, stable_traj, proj)


def stable_growth_probe(gen, ensemble, epsilon, s_max, ds=None,
                        window=(3.0, 20.0), cfl_constant=DEFAULT_CFL_CONSTANT,
                        check_every=10):
    """max over members and s of e^{-eps s} ||u~(s)|| / ||init||.

    Members with zero initial norm contribute 0 by convention. All
    members evolve together as one column batch.
    """
    if not ensemble:
        return 0.0
    axis, pos = _axis_and_positive_roots(gen.potential, window, gen.grid)
    if axis:
        raise SpectralAssumptionError(
            "imaginary-axis spectral point: growth probe undefined")

    X0 = np.stack([gen.reduce_state(st) for st in ensemble], axis=1)
    proj = growing_mode_projection(gen, [r.lam for r in pos])
    if proj is not None:
        X0 = X0 - proj.reduced @ X0

    limit = _cfl_limit(gen.grid.n, cfl_constant)
    if ds is None:
        ds = limit
    if ds > limit * (1.0 + 1e-12):
        raise StabilityError("ds exceeds the stability limit")
    M = _step_count(s_max, ds)

    norm0 = np.sqrt(gen.reduced_energy(X0))
    nz = norm0 > 0
    best = np.zeros(X0.shape[1])

    def observer(i, s, X):
        norms = np.sqrt(gen.reduced_energy(X))
        r = np.zeros_like(best)
        r[nz] = np.exp(-epsilon * s) * norms[nz] / norm0[nz]
        np.maximum(best, r, out=best)

    observer(0, 0.0, X0)
    _rk4_matrix_steps(gen.reduced, X0, ds, M, observer=observer,
                      observe_every=check_every)
    return float(np.max(best)) if np.any(nz) else 0.0
