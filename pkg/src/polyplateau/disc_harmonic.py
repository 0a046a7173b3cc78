"""Triangulated unit disc, discrete harmonic extension, Dirichlet energy and
complex-derivative fields.

Surfaces are piecewise-linear maps from a triangulated disc into R^3, one
3-vector per mesh node.  Derivative quantities are constant per triangle and
come from the affine interpolant; the Laplacian is the standard cotangent
(P1 finite element) stiffness matrix, so harmonic extension means solving the
Dirichlet problem for that matrix.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu
from scipy.spatial import Delaunay

from .errors import InterpolationError, MeshError, ParameterError

TWO_PI = 2.0 * np.pi


class DiscMesh:
    """Conforming, positively oriented triangulation of the closed unit disc.

    Attributes
    ----------
    nodes : (nv, 2) float array, all inside the closed unit disc.
    triangles : (nt, 3) int array, counterclockwise vertex triples.
    boundary_cycle : (nb,) int array of boundary node indices in
        counterclockwise order.
    boundary_angles : (nb,) strictly increasing angles in [0, 2*pi).
    """

    def __init__(self, nodes, triangles, boundary_cycle):
        nodes = np.asarray(nodes, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        boundary_cycle = np.asarray(boundary_cycle, dtype=np.int64)

        r = np.hypot(nodes[:, 0], nodes[:, 1])
        on_circle = np.zeros(len(nodes), dtype=bool)
        on_circle[boundary_cycle] = True
        if np.any(np.abs(r[on_circle] - 1.0) > 1e-12):
            raise MeshError("boundary nodes must lie on the unit circle")
        if np.any(r[~on_circle] >= 1.0):
            raise MeshError("interior nodes must lie strictly inside the disc")

        # enforce positive orientation
        p0, p1, p2 = (nodes[triangles[:, k]] for k in range(3))
        det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
            p1[:, 1] - p0[:, 1]
        ) * (p2[:, 0] - p0[:, 0])
        flip = det < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        areas = 0.5 * np.abs(det)
        if np.any(areas <= 1e-14):
            raise MeshError("degenerate triangle (area <= 1e-14)")

        angles = np.mod(np.arctan2(nodes[boundary_cycle, 1], nodes[boundary_cycle, 0]), TWO_PI)
        if np.any(np.diff(angles) <= 0):
            raise MeshError("boundary cycle angles must be strictly increasing")

        for a in (nodes, triangles, boundary_cycle, angles):
            a.setflags(write=False)
        self.nodes = nodes
        self.triangles = triangles
        self.boundary_cycle = boundary_cycle
        self.boundary_angles = angles
        self._cache = {}

    # -- basic quantities ------------------------------------------------

    @property
    def nv(self):
        return len(self.nodes)

    @property
    def nt(self):
        return len(self.triangles)

    @property
    def nb(self):
        return len(self.boundary_cycle)

    @property
    def interior_idx(self):
        if "interior" not in self._cache:
            mask = np.ones(self.nv, dtype=bool)
            mask[self.boundary_cycle] = False
            self._cache["interior"] = np.nonzero(mask)[0]
        return self._cache["interior"]

    @property
    def tri_areas(self):
        if "areas" not in self._cache:
            p0, p1, p2 = (self.nodes[self.triangles[:, k]] for k in range(3))
            det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
                p1[:, 1] - p0[:, 1]
            ) * (p2[:, 0] - p0[:, 0])
            self._cache["areas"] = 0.5 * det
        return self._cache["areas"]

    @property
    def barycenters(self):
        if "bary" not in self._cache:
            self._cache["bary"] = self.nodes[self.triangles].mean(axis=1)
        return self._cache["bary"]

    def _grad_coeffs(self):
        """Per-triangle hat-function gradients gx, gy with shape (nt, 3)."""
        if "grads" not in self._cache:
            p = self.nodes[self.triangles]  # (nt, 3, 2)
            x, y = p[..., 0], p[..., 1]
            two_a = 2.0 * self.tri_areas[:, None]
            gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / two_a
            gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / two_a
            self._cache["grads"] = (gx, gy)
        return self._cache["grads"]

    def gradient_of(self, values):
        """Per-triangle gradient of a nodal field: returns (d/du, d/dv).

        values has shape (nv,) or (nv, m); each output has shape (nt,) or
        (nt, m).
        """
        gx, gy = self._grad_coeffs()
        v = np.asarray(values, dtype=float)[self.triangles]  # (nt, 3[, m])
        if v.ndim == 2:
            return np.einsum("ti,ti->t", gx, v), np.einsum("ti,ti->t", gy, v)
        return np.einsum("ti,tim->tm", gx, v), np.einsum("ti,tim->tm", gy, v)

    @property
    def stiffness(self):
        """Cotangent-weight Laplacian (P1 stiffness matrix), PSD, kernel = constants."""
        if "stiffness" not in self._cache:
            gx, gy = self._grad_coeffs()
            a = self.tri_areas
            rows, cols, vals = [], [], []
            for i in range(3):
                for j in range(3):
                    rows.append(self.triangles[:, i])
                    cols.append(self.triangles[:, j])
                    vals.append(a * (gx[:, i] * gx[:, j] + gy[:, i] * gy[:, j]))
            K = sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.nv, self.nv),
            )
            self._cache["stiffness"] = K
        return self._cache["stiffness"]

    def _interior_lu(self):
        if "lu" not in self._cache:
            K = self.stiffness.tocsc()
            ii = self.interior_idx
            self._cache["lu"] = splu(K[ii][:, ii])
        return self._cache["lu"]

    def schur_complement(self):
        """Boundary energy matrix S with D(harmonic ext of g) = 0.5 * g^T S g.

        Rows/columns follow boundary_cycle order.  S is the Dirichlet-to-
        Neumann (Steklov) matrix of the cotangent Laplacian: symmetric PSD
        with the constants in its kernel.
        """
        if "schur" not in self._cache:
            K = self.stiffness.tocsc()
            ii = self.interior_idx
            bb = self.boundary_cycle
            K_ib = K[ii][:, bb].toarray()
            K_bb = K[bb][:, bb].toarray()
            sol = self._interior_lu().solve(K_ib)
            S = K_bb - K_ib.T @ sol
            S = 0.5 * (S + S.T)
            self._cache["schur"] = S
        return self._cache["schur"]

    # -- point location ---------------------------------------------------

    def _finder(self):
        if "delaunay" not in self._cache:
            self._cache["delaunay"] = Delaunay(self.nodes)
        return self._cache["delaunay"]

    def _hull_radius(self, angles):
        """Radius of the boundary polygon along rays at the given angles."""
        th = np.mod(np.asarray(angles, dtype=float), TWO_PI)
        j = np.searchsorted(self.boundary_angles, th, side="right") - 1
        j = np.mod(j, self.nb)
        a = self.nodes[self.boundary_cycle[j]]
        b = self.nodes[self.boundary_cycle[(j + 1) % self.nb]]
        # intersect ray (cos th, sin th) with chord a-b
        d = b - a
        ray = np.stack([np.cos(th), np.sin(th)], axis=-1)
        denom = ray[..., 0] * (-d[..., 1]) - ray[..., 1] * (-d[..., 0])
        num = a[..., 0] * (-d[..., 1]) - a[..., 1] * (-d[..., 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        return np.where(np.abs(denom) < 1e-300, 1.0, t)

    def locate(self, points):
        """Containing triangle and barycentric coordinates for 2D points.

        Points inside the closed unit disc but outside the polygonal hull of
        the boundary nodes are clamped radially onto the hull.  Points with
        |w| > 1 + 1e-9 raise InterpolationError.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri_of = np.full(len(pts), -1, dtype=np.int64)
        dela = self._finder()
        simp = dela.find_simplex(pts)
        miss = simp < 0
        if np.any(miss):
            r = np.hypot(pts[miss, 0], pts[miss, 1])
            if np.any(r > 1.0 + 1e-9):
                worst = pts[miss][np.argmax(r)]
                raise InterpolationError(
                    f"point ({worst[0]:.6g}, {worst[1]:.6g}) lies outside the unit disc"
                )
            th = np.arctan2(pts[miss, 1], pts[miss, 0])
            rh = self._hull_radius(th) * (1.0 - 1e-12)
            clamped = pts[miss].copy()
            scale = np.minimum(1.0, rh / np.maximum(r, 1e-300))
            clamped *= scale[:, None]
            simp_m = dela.find_simplex(clamped)
            if np.any(simp_m < 0):
                # extremely rare roundoff miss: nudge further inward
                clamped *= 1.0 - 1e-9
                simp_m = dela.find_simplex(clamped)
            if np.any(simp_m < 0):
                raise InterpolationError("point location failed after hull clamping")
            pts = pts.copy()
            pts[miss] = clamped
            simp[miss] = simp_m
        tri_of[:] = simp
        # barycentric coordinates from the Delaunay transform
        T = dela.transform[simp]
        bc2 = np.einsum("nij,nj->ni", T[:, :2], pts - T[:, 2])
        bary = np.concatenate([bc2, 1.0 - bc2.sum(axis=1, keepdims=True)], axis=1)
        bary = np.clip(bary, 0.0, 1.0)
        bary /= bary.sum(axis=1, keepdims=True)
        return tri_of, dela.simplices[simp], bary

    def euler_characteristic(self):
        edges = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        return self.nv - len(edges) + self.nt

    def min_angle(self):
        """Smallest interior angle over all triangles, in radians."""
        p = self.nodes[self.triangles]
        angs = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            c = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
            d = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
            angs.append(np.arctan2(c, d))
        return float(np.min(angs))


def build_mesh(radial_levels):
    """Quasi-uniform disc triangulation from concentric rings.

    Ring k of radial_levels carries 8*k nodes, so the boundary has
    8*radial_levels nodes and the points -1, -i, 1 are boundary nodes exactly.
    Triangles come from the Delaunay triangulation of the ring nodes, which
    keeps all cotangent weights nonnegative (discrete maximum principle).
    """
    if radial_levels < 3:
        raise ParameterError("radial_levels must be >= 3")
    R = int(radial_levels)
    pts = [np.zeros((1, 2))]
    for k in range(1, R + 1):
        m = 8 * k
        ang = TWO_PI * np.arange(m) / m
        pts.append((k / R) * np.column_stack([np.cos(ang), np.sin(ang)]))
    nodes = np.vstack(pts)
    # snap outer ring onto the circle exactly (cos/sin already are, up to eps)
    nb = 8 * R
    outer = slice(len(nodes) - nb, len(nodes))
    r = np.hypot(nodes[outer, 0], nodes[outer, 1])
    nodes[outer] /= r[:, None]

    dela = Delaunay(nodes)
    mesh = DiscMesh(nodes, dela.simplices, np.arange(len(nodes) - nb, len(nodes)))
    mesh._cache["delaunay"] = dela
    return mesh


class DiscSurface:
    """Piecewise-linear map from a DiscMesh into R^3."""

    def __init__(self, mesh, values, is_harmonic=False):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.nv, 3):
            raise ParameterError(f"values must have shape ({mesh.nv}, 3)")
        if not np.all(np.isfinite(values)):
            raise ParameterError("surface values must be finite")
        values = values.copy()
        values.setflags(write=False)
        self.mesh = mesh
        self.values = values
        self.is_harmonic = bool(is_harmonic)
        self._cache = {}

    def derivatives(self):
        """Per-triangle first derivatives (X_u, X_v), each of shape (nt, 3)."""
        if "deriv" not in self._cache:
            self._cache["deriv"] = self.mesh.gradient_of(self.values)
        return self._cache["deriv"]

    def boundary_values(self):
        return self.values[self.mesh.boundary_cycle]

    def trace_at(self, angles):
        """Boundary values at arbitrary angles, linear in angle between nodes."""
        return interp_cyclic(self.mesh.boundary_angles, self.boundary_values(), angles)

    def evaluate(self, points):
        """Barycentric evaluation at interior 2D points."""
        _, simplices, bary = self.mesh.locate(points)
        return np.einsum("ni,nik->nk", bary, self.values[simplices])


def interp_cyclic(angles, values, query):
    """Piecewise-linear interpolation on the circle.

    angles: strictly increasing in [0, 2*pi); values: (n, m); query: any
    shape, taken mod 2*pi.
    """
    q = np.mod(np.asarray(query, dtype=float), TWO_PI)
    ext_ang = np.concatenate([angles, [angles[0] + TWO_PI]])
    ext_val = np.vstack([values, values[:1]])
    # map queries below the first node into the wrap interval
    q = np.where(q < ext_ang[0], q + TWO_PI, q)
    j = np.clip(np.searchsorted(ext_ang, q, side="right") - 1, 0, len(angles) - 1)
    t = (q - ext_ang[j]) / (ext_ang[j + 1] - ext_ang[j])
    return (1.0 - t)[..., None] * ext_val[j] + t[..., None] * ext_val[j + 1]


def harmonic_extension(mesh, boundary_values):
    """Discretely harmonic surface with the given Dirichlet boundary data.

    boundary_values: (nb, 3) array in boundary_cycle order.
    """
    g = np.asarray(boundary_values, dtype=float)
    if g.shape != (mesh.nb, 3):
        raise ParameterError(f"boundary values must have shape ({mesh.nb}, 3)")
    if not np.all(np.isfinite(g)):
        raise ParameterError("boundary values must be finite")
    x = np.zeros((mesh.nv, 3))
    x[mesh.boundary_cycle] = g
    rhs = -(mesh.stiffness @ x)[mesh.interior_idx]
    x[mesh.interior_idx] = mesh._interior_lu().solve(rhs)
    return DiscSurface(mesh, x, is_harmonic=True)


def laplace_residual(surface):
    """Max interior residual of the cotangent Laplace equation, normalized."""
    mesh = surface.mesh
    r = (mesh.stiffness @ surface.values)[mesh.interior_idx]
    K = mesh.stiffness
    mean_w = np.abs(K.data).mean()
    scale = mean_w * (np.abs(surface.values).mean() + 1.0)
    return float(np.abs(r).max() / scale)


def dirichlet_energy(surface):
    """0.5 * sum over triangles of |grad X|^2 * area."""
    xu, xv = surface.derivatives()
    dens = np.einsum("tk,tk->t", xu, xu) + np.einsum("tk,tk->t", xv, xv)
    return float(0.5 * np.sum(surface.mesh.tri_areas * dens))


class ComplexDerivativeField:
    """Per-triangle X_w = 0.5*(X_u - i X_v) with triangle barycenters.

    The quadratic form X_w . X_w (complex dot product, no conjugation)
    vanishes exactly when the underlying affine map is conformal.
    """

    def __init__(self, mesh, xw, barycenters):
        self.mesh = mesh
        self.xw = xw
        self.barycenters = barycenters

    def scalar_projection(self, c):
        """Complex scalar field h = <c, X_w> for a fixed c in C^3."""
        return self.xw @ np.asarray(c)


def complex_derivative(surface):
    xu, xv = surface.derivatives()
    xw = 0.5 * (xu - 1j * xv)
    return ComplexDerivativeField(surface.mesh, xw, surface.mesh.barycenters)


def _metric_terms(surface):
    xu, xv = surface.derivatives()
    E = np.einsum("tk,tk->t", xu, xu)
    G = np.einsum("tk,tk->t", xv, xv)
    F = np.einsum("tk,tk->t", xu, xv)
    return E, G, F


def mean_first_fundamental(surface):
    """Area-weighted mean of (|X_u|^2 + |X_v|^2) / 2 over the mesh."""
    E, G, _ = _metric_terms(surface)
    a = surface.mesh.tri_areas
    return float(np.sum(a * 0.5 * (E + G)) / np.sum(a))


def conformality_residual(surface, return_flag=False):
    """Scale-invariant conformality defect of a surface.

    With E = |X_u|^2, G = |X_v|^2, F = <X_u, X_v> per triangle, the defect
    ratio is ((E - G)^2 + 4 F^2) / ((E + G)/2)^2; the numerator equals
    16 |X_w . X_w|^2 and (E + G)/2 is the discrete stand-in for the metric
    factor that makes both coincide on conformal data.  The residual is the
    area-weighted mean of the ratio: zero exactly on conformal affine data,
    invariant under rescaling, second-order small for piecewise-linear
    samples of smooth conformal maps.

    A constant map has no meaningful normalization: the residual is defined
    as 0.0 and the degeneracy flag is set.
    """
    values = surface.values
    spread = np.abs(values - values.mean(axis=0)).max()
    if spread <= 1e-12 * (1.0 + np.abs(values).max()):
        return (0.0, True) if return_flag else 0.0
    E, G, F = _metric_terms(surface)
    a = surface.mesh.tri_areas
    q = (E - G) ** 2 + 4.0 * F**2
    per = q / np.maximum((0.5 * (E + G)) ** 2, 1e-300)
    res = float(np.sum(a * per) / np.sum(a))
    return (res, False) if return_flag else res


# -- OBJ export ---------------------------------------------------------


def save_mesh_obj(mesh, path):
    """Write the flat parameter domain as an OBJ file (z = 0)."""
    _write_obj(path, np.column_stack([mesh.nodes, np.zeros(mesh.nv)]), mesh.triangles)


def save_surface_obj(surface, path):
    """Write the surface (node values as vertex positions) as an OBJ file."""
    _write_obj(path, surface.values, surface.mesh.triangles)


def _write_obj(path, verts, faces):
    lines = [f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in verts]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in faces]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
