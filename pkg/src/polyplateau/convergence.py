"""Refinement pipeline: approximate, solve, normalize, track boundary traces.

For a schedule of vertex counts the pipeline inscribes a polygon, nudges it
into generic position, solves the polygonal Plateau problem, normalizes the
three anchor preimages to -1, -i, 1 by a disc automorphism, and records the
boundary trace, monotone lift and curvature report of every stage.  The
limit surface is the harmonic extension of the final normalized trace; its
conformality, branch census and curvature gate are reported alongside the
Cauchy behaviour of the trace distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import curve as curve_mod
from .analysis import detect_branch_points, gauss_bonnet_check, total_gauss_curvature
from .disc_harmonic import (
    build_mesh,
    complex_derivative,
    conformality_residual,
    dirichlet_energy,
    harmonic_extension,
)
from .errors import HypothesisError, ParameterError, SolverError
from .mobius import normalize_three_points, pullback
from .plateau_solver import BoundaryLift, BoundaryTrace, PlateauSolution, SolverOptions, solve
from .polyapprox import inscribe, perturb_to_generic, verify_approximation

TWO_PI = 2.0 * np.pi
SIX_PI = 6.0 * np.pi


@dataclass
class ConvergenceOptions:
    anchors: Optional[Sequence[float]] = None  # default: thirds of the period
    delta: float = 1e-4  # perturbation radius for generic position
    radial_levels: int = 0  # 0 = automatic per stage
    min_radial_levels: int = 12
    solver: SolverOptions = field(default_factory=SolverOptions)
    seed: int = 0
    branch_tol: float = 1e-3
    epsilon_tc: float = 0.01  # inscription curvature allowance (diagnostic only)


@dataclass
class StageRecord:
    n: int
    polygon: object
    approximation: object
    solution: PlateauSolution
    normalized_surface: object
    trace: BoundaryTrace
    lift: BoundaryLift
    curvature: object
    branches: object
    radial_levels: int


@dataclass
class ConvergenceReport:
    curve_total_curvature: float
    epsilon: float
    schedule: list
    stages: list
    trace_distances: list
    limit_surface: object
    limit_checks: dict


def _stage_seed(seed, n):
    return int(np.random.SeedSequence((seed, n)).generate_state(1)[0])


def _auto_levels(options, num_vertices):
    if options.radial_levels:
        return int(options.radial_levels)
    return max(options.min_radial_levels, math.ceil(num_vertices / 2))


def run_sequence(curve, schedule, epsilon, options=None):
    """Run the full pipeline over a strictly increasing schedule of n.

    Refuses curves whose total curvature does not stay below 6 pi - 2 epsilon.
    """
    options = options or ConvergenceOptions()
    schedule = [int(n) for n in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or not schedule:
        raise ParameterError("schedule must be a non-empty strictly increasing list")

    tc = curve_mod.total_curvature(curve)
    gate = SIX_PI - 2.0 * epsilon
    if not tc < gate:
        raise HypothesisError(
            f"total curvature {tc:.6f} is not below 6*pi - 2*epsilon = {gate:.6f}"
        )

    anchors = options.anchors
    if anchors is None:
        anchors = curve.t_start + curve.period * np.array([0.0, 1.0, 2.0]) / 3.0

    # one shared mesh, sized for the finest stage, so that stage traces are
    # directly comparable and the Schur complement is factored once
    polygons = []
    for n in schedule:
        polygon = inscribe(curve, n, anchors)
        polygon = perturb_to_generic(polygon, options.delta, seed=_stage_seed(options.seed, n))
        polygons.append(polygon)
    levels = max(_auto_levels(options, p.num_vertices) for p in polygons)
    mesh = build_mesh(levels)

    stages = []
    for n, polygon in zip(schedule, polygons):
        approx = verify_approximation(curve, polygon, epsilon)

        sol = solve(polygon, mesh, options.solver)
        sol, surf_n = _normalize_stage(sol, mesh)

        trace = BoundaryTrace(mesh.boundary_angles, surf_n.boundary_values())
        field = complex_derivative(surf_n)
        branches = detect_branch_points(surf_n, field, options.branch_tol, solution=sol)
        curv = gauss_bonnet_check(
            PlateauSolution(surf_n, sol.lift, polygon, sol.vertex_preimages, sol.diagnostics),
            branches,
        )
        stages.append(
            StageRecord(n, polygon, approx, sol, surf_n, trace, sol.lift, curv, branches, levels)
        )

    traces = [st.trace for st in stages]
    distances = [trace_sup_distance(a, b) for a, b in zip(traces, traces[1:])]

    final_mesh = stages[-1].normalized_surface.mesh
    limit_surface = harmonic_extension(
        final_mesh, traces[-1](final_mesh.boundary_angles)
    )
    limit_field = complex_derivative(limit_surface)
    limit_branches = detect_branch_points(limit_surface, limit_field, options.branch_tol)
    limit_checks = {
        "conformality_residual": conformality_residual(limit_surface),
        "dirichlet_energy": dirichlet_energy(limit_surface),
        "total_abs_curvature": total_gauss_curvature(limit_surface),
        "interior_branch_candidates": limit_branches.interior_candidates,
        "min_relative_xw2": _min_relative_xw2(limit_surface, limit_field),
    }
    limit_checks["sauvigny_margin"] = 4.0 * np.pi - limit_checks["total_abs_curvature"]

    return ConvergenceReport(
        curve_total_curvature=tc,
        epsilon=epsilon,
        schedule=schedule,
        stages=stages,
        trace_distances=distances,
        limit_surface=limit_surface,
        limit_checks=limit_checks,
    )


def _min_relative_xw2(surface, field):
    from .disc_harmonic import mean_first_fundamental

    mod2 = np.einsum("tk,tk->t", field.xw, np.conj(field.xw)).real
    return float(mod2.min() / max(mean_first_fundamental(surface), 1e-300))


def _normalize_stage(sol, mesh):
    """Send the three anchor preimages to -1, -i, 1 by a disc automorphism."""
    t = sol.vertex_preimages[list(sol.polygon.anchor_indices)]
    aut = normalize_three_points(*np.exp(1j * t))
    if aut.is_identity():
        return sol, sol.surface
    # boundary values compose through exact angles; the interior is re-extended
    pulled = pullback(sol.surface, aut.inverse(), mesh)
    surf = harmonic_extension(mesh, pulled.boundary_values())
    trace = BoundaryTrace(mesh.boundary_angles, surf.boundary_values())
    lift = monotone_lift(trace, sol.polygon)
    preimages = np.mod(np.angle(aut(np.exp(1j * sol.vertex_preimages))), TWO_PI)
    new_sol = PlateauSolution(surf, lift, sol.polygon, preimages, sol.diagnostics)
    return new_sol, surf


def monotone_lift(trace, polygon, tol_factor=1e-6):
    """Arc-length lift of a trace on the polygon carrier.

    Projects every trace point to its arc-length parameter, unwraps to a
    lift with total increase equal to the polygon length, and repairs local
    monotonicity violations (which must stay below tol_factor * length).
    """
    pts = trace.points
    L = polygon.length
    s, dist = _project_params(polygon, pts)
    if dist.max() > 1e-6 * L:
        raise SolverError(
            f"trace leaves the polygon carrier (max distance {dist.max():.3g})"
        )
    deltas = np.mod(np.diff(s) + L / 2.0, L) - L / 2.0
    violation = max(0.0, float(-deltas.min(initial=0.0)))
    if violation > tol_factor * L:
        raise SolverError(
            f"trace is not weakly monotone (violation {violation:.3g} > {tol_factor * L:.3g})"
        )
    lifted = np.concatenate([[s[0]], s[0] + np.cumsum(np.maximum(deltas, 0.0))])
    wrap = np.mod(s[0] - lifted[-1] + L / 2.0, L) - L / 2.0
    total = lifted[-1] + max(wrap, 0.0) - lifted[0]
    if abs(total - L) > 1e-3 * L:
        raise SolverError(f"lift total increase {total:.6g} differs from polygon length {L:.6g}")

    pin_positions = tuple(
        int(np.argmin(np.abs(np.mod(trace.angles - t + np.pi, TWO_PI) - np.pi)))
        for t in (np.pi, 1.5 * np.pi, 0.0)
    )
    pin_values = tuple(float(lifted[p]) for p in pin_positions)
    return BoundaryLift(lifted, L, pin_positions, pin_values)


def _project_params(polygon, points):
    """Arc-length parameter and distance of the closest carrier point."""
    v = polygon.vertices
    w = np.roll(v, -1, axis=0)
    d = w - v
    ll = np.einsum("mk,mk->m", d, d)
    diff = points[:, None, :] - v[None, :, :]
    t = np.clip(np.einsum("nmk,mk->nm", diff, d) / ll[None, :], 0.0, 1.0)
    proj = v[None] + t[..., None] * d[None]
    dist = np.linalg.norm(points[:, None, :] - proj, axis=-1)
    best = np.argmin(dist, axis=1)
    rows = np.arange(len(points))
    s = polygon.vertex_params[best] + t[rows, best] * np.sqrt(ll[best])
    return s, dist[rows, best]


def trace_sup_distance(trace_a, trace_b):
    """Sup over the merged angle grid of |trace_a - trace_b|."""
    return trace_a.sup_distance(trace_b)


@dataclass(frozen=True)
class EquicontinuityRow:
    delta: float
    observed: float
    bound: float


def equicontinuity_diagnostic(trace, energy_bound, deltas=None):
    """Courant-Lebesgue table: observed trace oscillation vs. energy bound.

    For each delta the observed column is the largest diameter of the trace
    image over boundary arcs of length 2*sqrt(delta); the bound column is
    sqrt(36 * pi * M / log(1/delta)) for the recorded energy bound M.
    """
    if deltas is None:
        deltas = np.array([1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    ang = trace.angles
    pts = trace.points
    n = len(ang)
    rows = []
    for delta in np.asarray(deltas, dtype=float):
        half = math.sqrt(delta)
        observed = 0.0
        for i in range(n):
            gap = np.abs(np.mod(ang - ang[i] + np.pi, TWO_PI) - np.pi)
            win = pts[gap <= half]
            if len(win) > 1:
                d2 = np.sum((win[:, None] - win[None, :]) ** 2, axis=-1)
                observed = max(observed, math.sqrt(float(d2.max())))
        bound = math.sqrt(36.0 * np.pi * energy_bound / math.log(1.0 / delta))
        rows.append(EquicontinuityRow(float(delta), observed, bound))
    return rows
