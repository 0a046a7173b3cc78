"""Curvature integrals, Gauss-Bonnet checks, and branch-point census.

The total absolute Gauss curvature integral int |K| E du dv is computed as
the spherical area swept by the Gauss map: vertex unit normals are averaged
from the per-triangle normals and each triangle contributes the absolute
solid angle of its normal-image spherical triangle.  Interior branch points
are zeros of the complex derivative X_w; their orders are integer winding
numbers of a generic complex projection of X_w around the candidate, by the
argument principle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .disc_harmonic import mean_first_fundamental
from .errors import AnalysisError
from .polyapprox import polygon_total_curvature, turning_angles

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

DEGENERATE_TRIANGLE_TOL = 1e-14
MAX_DEGENERATE_AREA_FRACTION = 0.05


@dataclass(frozen=True)
class InteriorBranchCandidate:
    location: complex  # parameter point w0 in the open disc
    order: Optional[int]  # winding number; None when unresolved
    min_modulus: float  # min |X_w|^2 / mean E near the candidate
    on_boundary: bool = False


@dataclass(frozen=True)
class BoundaryVertexOrder:
    vertex: int
    order: int
    rho: float  # fractional exponent in (-1, 0)
    swept_angle: float
    confident: bool


@dataclass
class BranchReport:
    interior_candidates: list = field(default_factory=list)
    boundary_candidates: list = field(default_factory=list)  # non-vertex, 1/2-weighted
    boundary_vertex_orders: list = field(default_factory=list)
    mean_metric: float = np.nan

    @property
    def resolved(self):
        ok = all(c.order is not None for c in self.interior_candidates)
        ok &= all(c.order is not None for c in self.boundary_candidates)
        ok &= all(v.confident for v in self.boundary_vertex_orders)
        return ok

    def total_order(self):
        """Weighted branch order: interior + half boundary (vertex and not)."""
        total = sum(c.order or 0 for c in self.interior_candidates)
        total += 0.5 * sum(c.order or 0 for c in self.boundary_candidates)
        total += 0.5 * sum(v.order for v in self.boundary_vertex_orders if v.confident)
        return total


@dataclass
class CurvatureReport:
    total_abs_curvature: float
    gauss_bonnet_lhs: float
    gauss_bonnet_rhs: float
    residual: Optional[float]
    bound_tc_minus_2pi: float
    sauvigny_margin: float
    eq_nonbranch_slack: float = np.nan  # sum of non-branch exterior angles - 2pi - int|K|E
    total_branch_order: float = 0.0


def gauss_map(surface):
    """Per-triangle unit normals X_u x X_v / |X_u x X_v|.

    Triangles with |X_u x X_v| below threshold are flagged degenerate (NaN
    rows); if they carry more than 5% of the total area the surface is too
    degenerate to analyze.
    """
    xu, xv = surface.derivatives()
    n = np.cross(xu, xv)
    norm = np.linalg.norm(n, axis=1)
    bad = norm <= DEGENERATE_TRIANGLE_TOL
    areas = surface.mesh.tri_areas
    if areas[bad].sum() > MAX_DEGENERATE_AREA_FRACTION * areas.sum():
        raise AnalysisError(
            f"{areas[bad].sum() / areas.sum():.1%} of the domain has a degenerate "
            "tangent plane; surface too degenerate to analyze"
        )
    out = np.full_like(n, np.nan)
    out[~bad] = n[~bad] / norm[~bad, None]
    return out


def _vertex_normals(surface, face_normals):
    """Angle-weighted average of incident face normals, normalized per node.

    Angle weights remove the first-order bias of one-sided averaging at
    boundary nodes; rows stay NaN where no valid incident normal exists.
    """
    mesh = surface.mesh
    ok = np.isfinite(face_normals[:, 0])
    p = mesh.nodes[mesh.triangles]
    w_tri = np.empty((mesh.nt, 3))
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        c = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        d = np.einsum("tk,tk->t", u, v)
        w_tri[:, i] = np.arctan2(c, d)
    acc = np.zeros((mesh.nv, 3))
    for k in range(3):
        np.add.at(acc, mesh.triangles[ok, k], w_tri[ok, k, None] * face_normals[ok])
    norms = np.linalg.norm(acc, axis=1)
    good = norms > 1e-14
    vn = np.full((mesh.nv, 3), np.nan)
    vn[good] = acc[good] / norms[good, None]
    return vn


def total_gauss_curvature(surface):
    """Total absolute Gauss curvature as the area swept by the Gauss map.

    The Gauss map of a conformally parametrized minimal surface is
    anticonformal, so its swept spherical area equals the Dirichlet energy of
    the unit normal field; that energy of the piecewise-linear normal
    interpolant is what this returns.  It reproduces int |K| E du dv exactly
    in the continuum and converges at second order on smooth data, where the
    naive sum of per-triangle normal-image areas loses a first-order boundary
    collar.
    """
    fn = gauss_map(surface)
    vn = _vertex_normals(surface, fn)
    mesh = surface.mesh
    ok = np.all(np.isfinite(vn[mesh.triangles]), axis=(1, 2))
    areas = mesh.tri_areas
    if areas[~ok].sum() > MAX_DEGENERATE_AREA_FRACTION * areas.sum():
        raise AnalysisError("too much degenerate area in the normal field")
    nu, nv_ = mesh.gradient_of(np.nan_to_num(vn))
    dens = np.einsum("tk,tk->t", nu, nu) + np.einsum("tk,tk->t", nv_, nv_)
    return float(0.5 * np.sum(areas[ok] * dens[ok]))


# -- branch points -----------------------------------------------------------


def _winding_number(values):
    """Integer winding of a closed complex path around 0.

    Counts signed crossings of the positive real axis; accumulation is purely
    integer, never a rounded float.
    """
    x = np.concatenate([values.real, values.real[:1]])
    y = np.concatenate([values.imag, values.imag[:1]])
    winding = 0
    above = y[0] >= 0
    for i in range(1, len(x)):
        if (y[i] >= 0) != above:
            above = y[i] >= 0
            if x[i] > 0 and x[i - 1] > 0:
                winding += 1 if above else -1
            elif not (x[i] <= 0 and x[i - 1] <= 0):
                cross = (x[i - 1] * y[i] - x[i] * y[i - 1]) / (y[i] - y[i - 1])
                if cross > 0:
                    winding += 1 if above else -1
    return winding


def _triangle_adjacency(mesh):
    edges = {}
    adj = [[] for _ in range(mesh.nt)]
    for t, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in edges:
                s = edges[key]
                adj[s].append(t)
                adj[t].append(s)
            else:
                edges[key] = t
    return adj


def _projection_vector(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    return v / np.linalg.norm(v)


def _order_by_winding(field, w0, radius, mean_e, seed, n_samples=256):
    """Winding number of <c, X_w> around a circle of given radius about w0."""
    mesh = field.mesh
    th = TWO_PI * np.arange(n_samples) / n_samples
    pts = np.column_stack([w0.real + radius * np.cos(th), w0.imag + radius * np.sin(th)])
    tri_idx, _, _ = mesh.locate(pts)
    for attempt in range(8):
        rng = np.random.default_rng(seed + attempt)
        c = _projection_vector(rng)
        h = field.xw[tri_idx] @ c
        if np.abs(h).min() > 1e-12 * np.sqrt(max(mean_e, 1e-300)):
            return _winding_number(h)
    return None


def detect_branch_points(surface, field, tol, solution=None, seed=0):
    """Census of branch-point candidates of a harmonic surface.

    Interior (and boundary non-vertex) candidates are connected clusters of
    triangles with |X_w|^2 below tol * (mean metric); each cluster's order is
    the integer winding of a generic projection of X_w around it.  When a
    PlateauSolution is supplied, boundary vertex orders are estimated from
    the angle the surface sweeps at each polygon vertex: the swept angle is
    (rho_k + m_k + 1) * pi with rho_k in (-1, 0), and the parity rule (even
    m_k pairs |rho_k| pi with the exterior angle) gives the confidence check.
    """
    mesh = surface.mesh
    mean_e = mean_first_fundamental(surface)
    report = BranchReport(mean_metric=mean_e)
    if mean_e <= 1e-300:
        return report

    mod2 = np.einsum("tk,tk->t", field.xw, np.conj(field.xw)).real
    rel = mod2 / mean_e
    low = rel < tol

    boundary_nodes = set(mesh.boundary_cycle.tolist())
    candidates = []
    if np.any(low):
        adj = _triangle_adjacency(mesh)
        seen = np.zeros(mesh.nt, dtype=bool)
        for t0 in np.nonzero(low)[0]:
            if seen[t0]:
                continue
            stack, comp = [t0], []
            seen[t0] = True
            while stack:
                t = stack.pop()
                comp.append(t)
                for s in adj[t]:
                    if low[s] and not seen[s]:
                        seen[s] = True
                        stack.append(s)
            comp = np.asarray(comp)
            tmin = comp[np.argmin(rel[comp])]
            bc = mesh.barycenters[tmin]
            touches_boundary = any(
                v in boundary_nodes for t in comp for v in mesh.triangles[t]
            )
            candidates.append((complex(bc[0], bc[1]), float(rel[comp].min()), touches_boundary))

    h_scale = np.sqrt(np.median(mesh.tri_areas) * 2.0)  # typical edge length
    locs = np.array([c[0] for c in candidates]) if candidates else np.empty(0, complex)
    for i, (w0, min_mod, on_bdry) in enumerate(candidates):
        others = np.abs(locs - w0) if len(locs) > 1 else np.array([np.inf])
        sep = np.min(others[others > 0], initial=np.inf)
        r_max = min(0.5 * sep, 0.9 * (1.0 - abs(w0)))
        radius = min(max(6.0 * h_scale, 3.0 * min_mod**0.5), r_max)
        order = None
        if not on_bdry and radius >= 3.0 * h_scale:
            order = _order_by_winding(field, w0, radius, mean_e, seed)
            if order is not None and order <= 0:
                order = None  # spurious minimum, not a zero
        entry = InteriorBranchCandidate(w0, order, min_mod, on_boundary=on_bdry)
        if on_bdry:
            report.boundary_candidates.append(entry)
        else:
            report.interior_candidates.append(entry)

    if solution is not None:
        report.boundary_vertex_orders = _boundary_vertex_orders(surface, solution)
    return report


def _boundary_vertex_orders(surface, solution):
    """Estimate branch orders at polygon vertices from swept surface angles."""
    mesh = surface.mesh
    polygon = solution.polygon
    eta = turning_angles(polygon)
    gaps = np.diff(np.concatenate([mesh.boundary_angles, [mesh.boundary_angles[0] + TWO_PI]]))
    r_fan = 2.5 * gaps.max()

    w_nodes = mesh.nodes[:, 0] + 1j * mesh.nodes[:, 1]
    out = []
    for k in range(polygon.num_vertices):
        t_k = solution.vertex_preimages[k]
        w_k = np.exp(1j * t_k)
        a_k = polygon.vertices[k]
        d = np.abs(w_nodes - w_k)
        fan = np.nonzero(d <= r_fan)[0]
        rel_img = surface.values[fan] - a_k
        img_dist = np.linalg.norm(rel_img, axis=1)
        scale = max(img_dist.max(), 1e-300)
        keep = img_dist > 1e-8 * scale
        fan, rel_img = fan[keep], rel_img[keep]
        # order fan nodes by argument around the preimage, inward side of the disc
        zeta = (w_nodes[fan] - w_k) * np.exp(-1j * t_k)
        psi = np.angle(zeta * np.exp(-1j * np.pi / 2))  # tangent direction to 0
        srt = np.argsort(psi)
        rel_img = rel_img[srt]
        swept = 0.0
        for a, b in zip(rel_img[:-1], rel_img[1:]):
            cr = np.linalg.norm(np.cross(a, b))
            dt = float(a @ b)
            swept += float(np.arctan2(cr, dt))
        x = swept / np.pi - 1.0
        m_k = int(np.ceil(x - 0.02))
        rho = x - m_k
        expected = eta[k] if m_k % 2 == 0 else np.pi - eta[k]
        confident = (-1.0 < rho < 0.0) and abs(abs(rho) * np.pi - expected) < 0.35
        out.append(BoundaryVertexOrder(k, max(m_k, 0), float(rho), float(swept), bool(confident)))
    return out


# -- Gauss-Bonnet and bounds --------------------------------------------------


def gauss_bonnet_check(solution, branch_report):
    """Curvature report for a solved polygon boundary.

    For branch-free solutions |rho_k| pi equals the exterior angle eta_k, so
    the identity reads  int |K| E + 2 pi = sum eta_k  and the residual is the
    defect of that equality; with branch points the right-hand side uses the
    parity rule per measured order and the residual is omitted whenever an
    order is unresolved.
    """
    total = total_gauss_curvature(solution.surface)
    polygon = solution.polygon
    eta = turning_angles(polygon)
    tc = float(eta.sum())

    kappa = branch_report.total_order()
    lhs = total + TWO_PI * (1.0 + kappa)

    vertex_orders = {v.vertex: v for v in branch_report.boundary_vertex_orders}
    rhs = 0.0
    for k in range(polygon.num_vertices):
        v = vertex_orders.get(k)
        m_k = v.order if (v is not None and v.confident) else 0
        rhs += eta[k] if m_k % 2 == 0 else np.pi - eta[k]

    residual = (lhs - rhs) if branch_report.resolved else None

    branch_vertices = {
        v.vertex for v in branch_report.boundary_vertex_orders if v.confident and v.order > 0
    }
    eta_nonbranch = float(sum(eta[k] for k in range(polygon.num_vertices) if k not in branch_vertices))
    return CurvatureReport(
        total_abs_curvature=total,
        gauss_bonnet_lhs=lhs,
        gauss_bonnet_rhs=rhs,
        residual=residual,
        bound_tc_minus_2pi=tc - TWO_PI,
        sauvigny_margin=FOUR_PI - total,
        eq_nonbranch_slack=eta_nonbranch - TWO_PI - total,
        total_branch_order=kappa,
    )


def isoperimetric_check(solution):
    """Margin L(P)^2/(4 pi) - D(X); nonnegative up to discretization."""
    from .disc_harmonic import dirichlet_energy

    L = solution.polygon.length
    return float(L * L / FOUR_PI - dirichlet_energy(solution.surface))


def sauvigny_bound_check(report, epsilon):
    """True iff the total absolute curvature clears the 4 pi - epsilon gate."""
    return bool(report.total_abs_curvature <= FOUR_PI - epsilon)
