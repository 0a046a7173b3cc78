"""Variational solver for the polygonal Plateau problem.

The surface spanning a polygon P is found by the Douglas method: minimize the
Dirichlet energy of the discrete harmonic extension of gamma_P(sigma) over
weakly monotone boundary parametrizations sigma that pin the boundary nodes
nearest to -1, -i, 1 at the three anchor vertices.  The energy of a harmonic
extension is a quadratic form in the boundary values (the Schur complement of
the cotangent Laplacian), so one coordinate update is an exact minimization
of a piecewise quadratic in a single sigma_j over its monotonicity interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .disc_harmonic import DiscSurface, harmonic_extension, interp_cyclic, conformality_residual
from .errors import ParameterError, SolverError
from .polyapprox import Polygon

TWO_PI = 2.0 * np.pi

_PIN_TARGET_ANGLES = (np.pi, 1.5 * np.pi, 0.0)  # preimages of the three anchors


@dataclass
class SolverOptions:
    tol_energy: float = 1e-10
    max_iters: int = 5000

    def __post_init__(self):
        if self.tol_energy <= 0 or self.max_iters < 1:
            raise ParameterError("tol_energy must be positive and max_iters >= 1")


class BoundaryLift:
    """Monotone boundary parametrization sigma in polygon arc length.

    node_params[j] is the arc-length parameter assigned to boundary node j
    (boundary_cycle order); over one counterclockwise cycle the lift
    increases by exactly the polygon length, and at the three pinned nodes it
    equals the anchor arc-length parameters.
    """

    def __init__(self, node_params, polygon_length, pin_positions, pin_values):
        node_params = np.asarray(node_params, dtype=float)
        self.node_params = node_params
        self.polygon_length = float(polygon_length)
        self.pin_positions = tuple(int(p) for p in pin_positions)
        self.pin_values = tuple(float(v) for v in pin_values)

    def monotonicity_defect(self):
        """Largest violation of weak monotonicity (0 for admissible lifts)."""
        d = np.diff(self.node_params)
        wrap = self.node_params[0] + self.polygon_length - self.node_params[-1]
        worst = min(float(d.min(initial=np.inf)), wrap)
        return max(0.0, -worst)

    def total_increase(self):
        return float(
            self.node_params[-1]
            - self.node_params[0]
            + (self.node_params[0] + self.polygon_length - self.node_params[-1])
        )

    def is_weakly_monotone(self, tol=1e-12):
        return self.monotonicity_defect() <= tol

    def copy(self):
        return BoundaryLift(
            self.node_params.copy(), self.polygon_length, self.pin_positions, self.pin_values
        )


@dataclass
class SolveDiagnostics:
    energies: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_energy: float = np.nan
    conformality: float = np.nan


@dataclass
class PlateauSolution:
    surface: DiscSurface
    lift: BoundaryLift
    polygon: Polygon
    vertex_preimages: np.ndarray  # boundary angle t_k per polygon vertex
    diagnostics: SolveDiagnostics


def _pin_nodes(mesh):
    """Boundary positions (in cycle order) nearest to -1, -i, 1."""
    out = []
    for target in _PIN_TARGET_ANGLES:
        gap = np.abs(np.mod(mesh.boundary_angles - target + np.pi, TWO_PI) - np.pi)
        out.append(int(np.argmin(gap)))
    if len(set(out)) != 3:
        raise ParameterError("mesh boundary too coarse to separate the three pins")
    return tuple(out)


def initial_lift(polygon, mesh):
    """Arc-length-proportional lift pinned at the three anchors.

    Between consecutive pins the lift is linear in the boundary angle; at the
    pins it equals the anchor parameters exactly.
    """
    if mesh.nb < 4 * polygon.num_vertices:
        raise ParameterError(
            f"mesh needs at least {4 * polygon.num_vertices} boundary nodes, has {mesh.nb}"
        )
    L = polygon.length
    s0, s1, s2 = polygon.anchor_params()
    u0 = np.mod(s0 - s2, L)
    u1 = np.mod(s1 - s2, L)
    if not (0 < u0 < u1 < L):
        raise ParameterError("anchor vertices are not in traversal order along the polygon")

    pins = _pin_nodes(mesh)
    p_neg1, p_negi, p_one = pins
    th = mesh.boundary_angles
    # pinned (angle, value) knots for the piecewise-linear lift, starting at
    # the node nearest angle 0 (value s2) and wrapping to s2 + L
    knots_th = np.array([th[p_one], th[p_neg1], th[p_negi], th[p_one] + TWO_PI])
    knots_s = np.array([s2, s2 + u0, s2 + u1, s2 + L])
    if not np.all(np.diff(knots_th) > 0):
        raise ParameterError("pin nodes are not in counterclockwise order")

    rel = np.mod(th - knots_th[0], TWO_PI) + knots_th[0]
    sigma = np.interp(rel, knots_th, knots_s)
    # roll back into boundary_cycle order (rel >= knots_th[0] unwrapped)
    lift = BoundaryLift(sigma, L, pins, (s2 + u0, s2 + u1, s2))
    return lift


def _sweep(S, sigma, G, polygon, free_order, prev_idx, next_idx, wrap_lo, wrap_hi, ext_cum):
    """One Gauss-Seidel sweep of exact coordinate minimizations.

    Updates sigma and G in place.  The 1-D energy along sigma_j is piecewise
    quadratic (one piece per polygon edge overlapped by the monotonicity
    interval); candidates are compared by energy with ties broken toward the
    smaller parameter change.
    """
    L = polygon.length
    cum = polygon._cum  # vertex params, cum[0]=0 .. cum[M]=L
    verts = polygon.vertices
    dirs = polygon.edge_directions()
    M = polygon.num_vertices

    for j in free_order:
        lo = sigma[prev_idx[j]] + wrap_lo[j]
        hi = sigma[next_idx[j]] + wrap_hi[j]
        sjj = S[j, j]
        r = S[j] @ G - sjj * G[j]

        i0 = np.searchsorted(ext_cum, lo + 1e-15, side="left")
        i1 = np.searchsorted(ext_cum, hi - 1e-15, side="right")
        bps = [lo] + ext_cum[i0:i1].tolist() + [hi]

        best_e = np.inf
        best_phi = sigma[j]
        best_move = np.inf
        for a, b in zip(bps[:-1], bps[1:]):
            if b - a <= 1e-15:
                continue
            mid = 0.5 * (a + b)
            smid = mid - L * np.floor(mid / L)
            k = min(int(np.searchsorted(cum, smid, side="right") - 1), M - 1)
            u = dirs[k]
            ga = verts[k] + (smid - cum[k] - (mid - a)) * u  # gamma at phi = a
            # E(a + x) = 0.5*sjj*|ga + x u|^2 + (ga + x u).r + const
            x_star = -(ga @ u) - (u @ r) / sjj
            for x in (min(max(x_star, 0.0), b - a), 0.0, b - a):
                phi = a + x
                g = ga + x * u
                e = 0.5 * sjj * (g @ g) + g @ r
                move = abs(phi - sigma[j])
                if e < best_e - 1e-15 * (1 + abs(best_e)) or (
                    abs(e - best_e) <= 1e-15 * (1 + abs(best_e)) and move < best_move
                ):
                    best_e = e
                    best_phi = phi
                    best_move = move
        sigma[j] = best_phi
        sphi = best_phi - L * np.floor(best_phi / L)
        k = min(int(np.searchsorted(cum, sphi, side="right") - 1), M - 1)
        G[j] = verts[k] + (sphi - cum[k]) * dirs[k]


def solve(polygon, mesh, opts=None):
    """Douglas-method solution of the Plateau problem for a simple polygon.

    Returns a PlateauSolution whose surface is the discrete harmonic
    extension of the final boundary values; the recorded per-sweep energies
    are non-increasing, the lift stays weakly monotone with total increase
    equal to the polygon length, and the three pins never move.
    """
    opts = opts or SolverOptions()
    Polygon._check_simple(polygon.vertices)  # reject non-simple input explicitly

    lift = initial_lift(polygon, mesh)
    sigma = lift.node_params.copy()
    L = polygon.length
    S = mesh.schur_complement()
    nb = mesh.nb

    pins = set(lift.pin_positions)
    free_order = np.array([j for j in range(nb) if j not in pins], dtype=int)
    prev_idx = np.arange(nb) - 1
    next_idx = np.arange(nb) + 1
    wrap_lo = np.zeros(nb)
    wrap_hi = np.zeros(nb)
    prev_idx[0] = nb - 1
    wrap_lo[0] = -L
    next_idx[nb - 1] = 0
    wrap_hi[nb - 1] = L

    G = polygon.point_at(np.mod(sigma, L))
    ext_cum = np.concatenate([polygon._cum[:-1] + m * L for m in (-1, 0, 1, 2, 3)])
    energies = [0.5 * float(np.sum((S @ G) * G))]
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        _sweep(S, sigma, G, polygon, free_order, prev_idx, next_idx, wrap_lo, wrap_hi, ext_cum)
        e = 0.5 * float(np.sum((S @ G) * G))
        energies.append(e)
        drop = energies[-2] - e
        if drop <= opts.tol_energy * max(abs(e), 1e-300):
            converged = True
            break

    final_lift = BoundaryLift(sigma, L, lift.pin_positions, lift.pin_values)
    if not final_lift.is_weakly_monotone(tol=1e-9 * L):
        raise SolverError("descent produced a non-monotone boundary lift")

    surface = harmonic_extension(mesh, G)
    diag = SolveDiagnostics(
        energies=energies,
        iterations=it,
        converged=converged,
        final_energy=energies[-1],
        conformality=conformality_residual(surface),
    )
    preimages = _vertex_preimages(final_lift, polygon, mesh)
    return PlateauSolution(surface, final_lift, polygon, preimages, diag)


def _vertex_preimages(lift, polygon, mesh):
    """Boundary angle t_k at which the lift passes each vertex parameter.

    Anchors map to their pins exactly; other vertices are located by inverse
    linear interpolation of the lift, with plateau midpoints for intervals on
    which the lift is constant.
    """
    sigma = lift.node_params
    th = mesh.boundary_angles
    L = lift.polygon_length
    base = sigma[0]
    ext_sigma = np.concatenate([sigma, [base + L]])
    ext_th = np.concatenate([th, [th[0] + TWO_PI]])

    out = np.empty(polygon.num_vertices)
    anchor_pos = {polygon.anchor_indices[k]: lift.pin_positions[k] for k in range(3)}
    for k in range(polygon.num_vertices):
        if k in anchor_pos:
            out[k] = th[anchor_pos[k]]
            continue
        s = base + np.mod(polygon.vertex_params[k] - base, L)
        j_hi = int(np.searchsorted(ext_sigma, s, side="left"))
        j_hi = min(max(j_hi, 1), len(ext_sigma) - 1)
        j_lo = j_hi - 1
        ds = ext_sigma[j_hi] - ext_sigma[j_lo]
        if ds <= 1e-300:
            t = 0.5 * (ext_th[j_lo] + ext_th[j_hi])
        else:
            lam = (s - ext_sigma[j_lo]) / ds
            t = ext_th[j_lo] + lam * (ext_th[j_hi] - ext_th[j_lo])
        out[k] = np.mod(t, TWO_PI)
    return out


class BoundaryTrace:
    """Boundary values of a surface as a piecewise-linear function of angle."""

    def __init__(self, angles, points):
        self.angles = np.asarray(angles, dtype=float)
        self.points = np.asarray(points, dtype=float)

    def __call__(self, query):
        return interp_cyclic(self.angles, self.points, query)

    def sup_distance(self, other):
        """Sup over the merged angle grid of the pointwise distance."""
        grid = np.unique(np.concatenate([self.angles, other.angles]))
        return float(np.linalg.norm(self(grid) - other(grid), axis=1).max())


def boundary_trace(solution_or_surface):
    """Boundary trace of a solution (or bare surface), ordered by angle."""
    surf = getattr(solution_or_surface, "surface", solution_or_surface)
    return BoundaryTrace(surf.mesh.boundary_angles, surf.boundary_values())
