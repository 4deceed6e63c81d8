"""Discrete p-capacity solver, dual flows, scaling constants.

The capacity problem minimizes sum_e |U(u) - U(v)|^p over potentials with
U = 1 on the source set and U = 0 on the sink set.  The raw objective is
non-smooth at zero gradients for p < 2 and has a degenerate Hessian for
p > 2, so the solver minimizes the smoothed energy sum_e (g^2 + eps^2)^{p/2}
by damped Newton steps with an Armijo line search, driving eps -> 0 over a
fixed continuation schedule and warm-starting every stage.

The dual optimal unit flow is recovered from the potential through
|J(e)| = capacity^{-1} |grad U(e)|^{p-1}, signed so that J(e) > 0 means flow
from the edge's first stored endpoint toward the second.  Level graphs store
edges as (e+, e-), so for them positive flow runs from the plus role to the
minus role when the source is the plus boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GraphError, SolverError
from .graph_core import MultiGraph
from .replacement import ReplacementSystem

EPSILON_SCHEDULE = tuple(10.0**-k for k in range(1, 9))
_EXTRA_EPSILONS = (1e-10, 1e-12, 1e-14)
DEFAULT_P_GRID = (1.25, 1.5, 2.0, 3.0, 4.0, 8.0)
ZERO_GRADIENT_TOL = 1e-9


@dataclass
class PotentialSolution:
    """Optimal potential, gradient, dual unit flow and capacity of one solve."""

    p: float
    graph: MultiGraph
    potential: np.ndarray  # per vertex index, in [0, 1]
    gradient: np.ndarray  # per edge index, |U(u) - U(v)|
    flow: np.ndarray  # per edge index, signed along the stored (u, v) order
    capacity: float
    residual: float
    iterations: int

    def potential_of(self, v) -> float:
        return float(self.potential[self.graph.index(v)])

    def flow_out_of(self, v, j: int) -> float:
        """Signed flow leaving vertex v along edge j."""
        a, b = self.graph.edge_pair_indices(j)
        i = self.graph.index(v)
        if i == a:
            return float(self.flow[j])
        if i == b:
            return -float(self.flow[j])
        raise GraphError(f"vertex {v!r} is not an endpoint of edge {j}")

    def dual_energy(self) -> float:
        q = self.p / (self.p - 1.0)
        return float(np.sum(np.abs(self.flow) ** q))

    def duality_product(self) -> float:
        q = self.p / (self.p - 1.0)
        return self.capacity ** (1.0 / self.p) * self.dual_energy() ** (1.0 / q)

    def zero_gradient_edges(self, tol: float = ZERO_GRADIENT_TOL) -> list[int]:
        return [j for j in range(self.graph.n_edges) if self.gradient[j] <= tol]


def _raw_residual(pairs_a, pairs_b, interior, U, p) -> float:
    g = U[pairs_a] - U[pairs_b]
    f = np.sign(g) * np.abs(g) ** (p - 1.0)
    div = np.zeros(len(U))
    np.add.at(div, pairs_a, -f)
    np.add.at(div, pairs_b, f)
    if not len(interior):
        return 0.0
    return float(np.max(np.abs(div[interior])))


def solve_capacity(
    graph: MultiGraph,
    source,
    sink,
    p: float,
    *,
    tol_residual: float = 1e-10,
    tol_energy: float = 1e-12,
    max_iter: int = 500,
) -> PotentialSolution:
    """Solve the two-set p-capacity problem on a connected multigraph."""
    if not (isinstance(p, (int, float)) and math.isfinite(p) and p > 1.0):
        raise ValueError("exponent out of range")
    p = float(p)
    source = list(source)
    sink = list(sink)
    if not source or not sink:
        raise GraphError("source and sink must be nonempty")
    src_idx = {graph.index(v) for v in source}
    snk_idx = {graph.index(v) for v in sink}
    if src_idx & snk_idx:
        raise GraphError("source and sink must be disjoint")
    if not graph.is_connected():
        raise GraphError("disconnected")

    nv = graph.n_vertices
    pairs = np.array(graph._pairs, dtype=np.int64)
    pairs_a, pairs_b = pairs[:, 0], pairs[:, 1]
    interior = np.array(sorted(set(range(nv)) - src_idx - snk_idx), dtype=np.int64)

    # Feasible start: normalized hop distance to the sink, clipped to [0, 1].
    dist = np.array(graph.hop_distances_from(sink), dtype=np.float64)
    span = min(dist[i] for i in src_idx)
    U = np.clip(dist / span, 0.0, 1.0)
    for i in src_idx:
        U[i] = 1.0
    for i in snk_idx:
        U[i] = 0.0

    iterations = 0
    if len(interior):
        ipos = -np.ones(nv, dtype=np.int64)
        ipos[interior] = np.arange(len(interior))
        ia, ib = ipos[pairs_a], ipos[pairs_b]

        def smoothed_energy(u, eps):
            g = u[pairs_a] - u[pairs_b]
            return float(np.sum((g * g + eps * eps) ** (p / 2.0)))

        def newton_stage(eps):
            nonlocal U, iterations
            f_old = smoothed_energy(U, eps)
            for _ in range(max_iter):
                iterations += 1
                g = U[pairs_a] - U[pairs_b]
                s = g * g + eps * eps
                dphi = p * g * s ** (p / 2.0 - 1.0)
                grad_full = np.zeros(nv)
                np.add.at(grad_full, pairs_a, dphi)
                np.add.at(grad_full, pairs_b, -dphi)
                grad = grad_full[interior]
                gnorm = float(np.max(np.abs(grad)))
                if gnorm < p * 1e-13:
                    return
                w = p * s ** (p / 2.0 - 2.0) * ((p - 1.0) * g * g + eps * eps)
                rows, cols, vals = [], [], []
                mask_a = ia >= 0
                mask_b = ib >= 0
                rows.append(ia[mask_a]); cols.append(ia[mask_a]); vals.append(w[mask_a])
                rows.append(ib[mask_b]); cols.append(ib[mask_b]); vals.append(w[mask_b])
                both = mask_a & mask_b
                rows.append(ia[both]); cols.append(ib[both]); vals.append(-w[both])
                rows.append(ib[both]); cols.append(ia[both]); vals.append(-w[both])
                H = sp.csr_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(len(interior), len(interior)),
                )
                try:
                    step = spla.spsolve(H, -grad)
                except RuntimeError as exc:  # singular factorization
                    raise SolverError(
                        "Newton system is singular",
                        {"p": p, "eps": eps, "residual": gnorm},
                    ) from exc
                if not np.all(np.isfinite(step)):
                    raise SolverError(
                        "Newton step is not finite", {"p": p, "eps": eps, "residual": gnorm}
                    )
                slope = float(grad @ step)
                t = 1.0
                for _ in range(60):
                    cand = U.copy()
                    cand[interior] += t * step
                    f_new = smoothed_energy(cand, eps)
                    if f_new <= f_old + 1e-4 * t * slope:
                        break
                    t *= 0.5
                U = cand
                rel_change = abs(f_old - f_new) / max(f_old, 1e-300)
                f_old = f_new
                if rel_change < tol_energy and gnorm < p * tol_residual * 1e-1:
                    return
            raise SolverError(
                "capacity solver did not converge within max iterations",
                {"p": p, "eps": eps, "residual": _raw_residual(pairs_a, pairs_b, interior, U, p)},
            )

        for eps in EPSILON_SCHEDULE:
            newton_stage(eps)
        residual = _raw_residual(pairs_a, pairs_b, interior, U, p)
        if residual > tol_residual:
            for eps in _EXTRA_EPSILONS:
                newton_stage(eps)
                residual = _raw_residual(pairs_a, pairs_b, interior, U, p)
                if residual <= tol_residual:
                    break
        if residual > tol_residual:
            raise SolverError(
                "p-harmonicity residual above tolerance after continuation",
                {"p": p, "residual": residual, "tolerance": tol_residual},
            )
    else:
        residual = 0.0

    g = U[pairs_a] - U[pairs_b]
    gradient = np.abs(g)
    capacity = float(np.sum(gradient**p))
    flow = np.sign(g) * gradient ** (p - 1.0) / capacity
    return PotentialSolution(
        p=p,
        graph=graph,
        potential=U,
        gradient=gradient,
        flow=flow,
        capacity=capacity,
        residual=residual,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# level problems and constants


def level_solution(system: ReplacementSystem, p: float, n: int) -> PotentialSolution:
    """Optimal potential between the two boundary ancestor sets of level n, cached."""
    key = (float(p), n)
    if key not in system._solutions:
        lg = system.level(n)
        source = [lg.graph.vertices[i] for i in lg.boundary_plus]
        sink = [lg.graph.vertices[i] for i in lg.boundary_minus]
        system._solutions[key] = solve_capacity(lg.graph, source, sink, p)
    return system._solutions[key]


def capacity_level_n(system: ReplacementSystem, n: int, p: float) -> float:
    """Capacity of the level-n boundary problem, solved directly on that graph."""
    return level_solution(system, p, n).capacity


@dataclass
class ConstantsReport:
    p: float
    L_star: int
    edge_count: int
    Q: float
    M_p: float
    d_wp: float
    c_p: float
    delta_p: float
    dwp_equals_p: bool

    def to_dict(self):
        return {
            "p": self.p,
            "L_star": self.L_star,
            "edge_count": self.edge_count,
            "Q": self.Q,
            "M_p": self.M_p,
            "d_wp": self.d_wp,
            "c_p": self.c_p,
            "delta_p": self.delta_p,
            "dwp_equals_p": self.dwp_equals_p,
        }


def constants(system: ReplacementSystem, p: float, flat_tol: float = 1e-8) -> ConstantsReport:
    """All scaling constants of the system at exponent p."""
    sol = level_solution(system, p, 1)
    L = system.L_star
    edges = system.igs.generator.n_edges
    M_p = sol.capacity
    c_p = float(np.max(sol.gradient))
    return ConstantsReport(
        p=float(p),
        L_star=L,
        edge_count=edges,
        Q=math.log(edges) / math.log(L),
        M_p=M_p,
        d_wp=math.log(edges / M_p) / math.log(L),
        c_p=c_p,
        delta_p=-math.log(c_p) / math.log(L),
        dwp_equals_p=bool(np.max(np.abs(sol.gradient - 1.0 / L)) < flat_tol),
    )


# ---------------------------------------------------------------------------
# conductive uniformity


@dataclass
class ConductiveUniformityReport:
    passed: bool
    tolerance: float
    residual_max: float
    failures: list = field(default_factory=list)  # (p, symbol, residual)
    densities: dict = field(default_factory=dict)  # p -> tuple of inflow weights over I

    def to_dict(self):
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "residual_max": self.residual_max,
            "failures": [{"p": p, "symbol": a, "residual": r} for p, a, r in self.failures],
            "densities": {str(p): list(d) for p, d in self.densities.items()},
        }


def boundary_flow_density(system: ReplacementSystem, p: float) -> np.ndarray:
    """Inflow of the optimal unit flow at each plus-boundary vertex of the generator."""
    sol = level_solution(system, p, 1)
    lg = system.level(1)
    vals = []
    for i in lg.boundary_plus:
        v = lg.graph.vertices[i]
        (j,) = lg.graph.incident_by_index(i)
        vals.append(sol.flow_out_of(v, j))
    return np.array(vals)


def check_conductive_uniform(
    system: ReplacementSystem, p_grid=DEFAULT_P_GRID, tol: float = 1e-7
) -> ConductiveUniformityReport:
    """Verify that the optimal flow enters and exits matched gluing vertices equally.

    For each exponent and each gluing symbol the signed flow out of the plus
    vertex must cancel the signed flow out of the matched minus vertex; on
    success the common values form a probability density on the gluing set.
    """
    lg = system.level(1)
    igs = system.igs
    size = igs.gluing.gluing_size
    failures = []
    densities = {}
    residual_max = 0.0
    for p in p_grid:
        sol = level_solution(system, p, 1)
        density = []
        for a in range(size):
            vp = igs.I_plus[a]
            vm = igs.I_minus[a]
            (jp,) = lg.graph.incident_edges(vp)
            (jm,) = lg.graph.incident_edges(vm)
            out_p = sol.flow_out_of(vp, jp)
            out_m = sol.flow_out_of(vm, jm)
            residual = abs(out_p + out_m)
            residual_max = max(residual_max, residual)
            if residual > tol:
                failures.append((float(p), a, residual))
            density.append(out_p)
        arr = np.array(density)
        if not failures and (np.any(arr <= 0) or abs(float(arr.sum()) - 1.0) > 1e-10):
            failures.append((float(p), -1, abs(float(arr.sum()) - 1.0)))
        densities[float(p)] = tuple(float(x) for x in arr)
    passed = not failures
    if passed:
        for p, dens in densities.items():
            system._densities[p] = np.array(dens)
    return ConductiveUniformityReport(
        passed=passed,
        tolerance=tol,
        residual_max=residual_max,
        failures=failures,
        densities=densities,
    )


def gluing_density(system: ReplacementSystem, p: float) -> np.ndarray:
    """Probability density on the gluing set induced by the optimal flow (cached)."""
    p = float(p)
    if p not in system._densities:
        report = check_conductive_uniform(system, (p,))
        if not report.passed:
            raise SolverError(
                "conductive uniformity fails; averaging density unavailable",
                {"failures": report.failures},
            )
    return system._densities[p]
