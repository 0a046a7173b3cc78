"""Biholomorphic automorphisms of the unit disc and surface pullback.

An automorphism is stored in the normal form w -> e^{i theta} (w - a)/(1 -
conj(a) w) with |a| < 1.  Three counterclockwise boundary points determine a
unique automorphism sending them to -1, -i, 1; surfaces are pulled back by
barycentric interpolation in the disc, with boundary values composed through
exact angle arithmetic so the three-point condition survives normalization.
"""

from __future__ import annotations

import numpy as np

from .disc_harmonic import DiscSurface, interp_cyclic
from .errors import ParameterError

TWO_PI = 2.0 * np.pi

_TARGETS = (-1.0 + 0.0j, -1.0j, 1.0 + 0.0j)


class MobiusAut:
    """Disc automorphism w -> e^{i theta} (w - a) / (1 - conj(a) w)."""

    def __init__(self, a, theta):
        a = complex(a)
        if abs(a) >= 1.0 - 1e-12:
            raise ParameterError("automorphism parameter must satisfy |a| < 1")
        self.a = a
        self.theta = float(np.mod(theta + np.pi, TWO_PI) - np.pi)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        return np.exp(1j * self.theta) * (w - self.a) / (1.0 - np.conj(self.a) * w)

    def __repr__(self):
        return f"MobiusAut(a={self.a:.6g}, theta={self.theta:.6g})"

    def is_identity(self, tol=1e-13):
        return abs(self.a) < tol and abs(self.theta) < tol

    def inverse(self):
        return MobiusAut(-self.a * np.exp(1j * self.theta), -self.theta)

    def matrix(self):
        e = np.exp(1j * self.theta)
        return np.array([[e, -e * self.a], [-np.conj(self.a), 1.0]], dtype=complex)

    @classmethod
    def from_matrix(cls, m):
        A, B = m[0]
        C, D = m[1]
        if abs(A) < 1e-300 or abs(D) < 1e-300:
            raise ParameterError("matrix does not represent a disc automorphism")
        a = -B / A
        theta = float(np.angle(A / D))
        return cls(a, theta)

    def compose(self, other):
        """Automorphism w -> self(other(w))."""
        return MobiusAut.from_matrix(self.matrix() @ other.matrix())

    def boundary_angle(self, angles):
        """Argument of the action on e^{i angle}, in [0, 2*pi)."""
        w = np.exp(1j * np.asarray(angles, dtype=float))
        return np.mod(np.angle(self(w)), TWO_PI)

    def circle_defect(self, n=128):
        """Max | |Phi(w)| - 1 | over n points of the unit circle."""
        w = np.exp(1j * TWO_PI * np.arange(n) / n)
        return float(np.max(np.abs(np.abs(self(w)) - 1.0)))


def _to_zero_one_inf(z0, z1, z2):
    """Moebius matrix sending (z0, z1, z2) to (0, 1, inf)."""
    return np.array(
        [[z1 - z2, -z0 * (z1 - z2)], [z1 - z0, -z2 * (z1 - z0)]], dtype=complex
    )


def normalize_three_points(w0, w1, w2):
    """Unique disc automorphism with w0 -> -1, w1 -> -i, w2 -> 1.

    The three inputs must be distinct boundary points in counterclockwise
    order; a clockwise triple would need an orientation-reversing map, which
    is outside the automorphism group.
    """
    pts = [complex(w0), complex(w1), complex(w2)]
    for p in pts:
        if abs(abs(p) - 1.0) > 1e-9:
            raise ParameterError("normalization points must lie on the unit circle")
    angs = np.angle(pts)
    gap01 = np.mod(angs[1] - angs[0], TWO_PI)
    gap12 = np.mod(angs[2] - angs[1], TWO_PI)
    if gap01 < 1e-12 or gap12 < 1e-12 or gap01 + gap12 >= TWO_PI - 1e-12:
        raise ParameterError("points must be distinct and in counterclockwise order")

    m_src = _to_zero_one_inf(*pts)
    m_dst = _to_zero_one_inf(*_TARGETS)
    inv_dst = np.array([[m_dst[1, 1], -m_dst[0, 1]], [-m_dst[1, 0], m_dst[0, 0]]])
    aut = MobiusAut.from_matrix(inv_dst @ m_src)

    worst = max(abs(aut(p) - t) for p, t in zip(pts, _TARGETS))
    if worst > 1e-10:
        raise ParameterError(f"three-point normalization failed to verify ({worst:.3g})")
    return aut


def pullback(surface, aut, mesh):
    """Surface X o Phi sampled on the target mesh.

    Interior target nodes are evaluated by barycentric interpolation on the
    source mesh at Phi(node); boundary nodes go through the boundary trace at
    the exact image angle, so boundary values stay on the original carrier.
    """
    src = surface.mesh
    values = np.empty((mesh.nv, 3))

    interior = mesh.interior_idx
    w = mesh.nodes[interior, 0] + 1j * mesh.nodes[interior, 1]
    z = aut(w)
    pts = np.column_stack([z.real, z.imag])
    values[interior] = surface.evaluate(pts)

    img_angles = aut.boundary_angle(mesh.boundary_angles)
    values[mesh.boundary_cycle] = interp_cyclic(
        src.boundary_angles, surface.boundary_values(), img_angles
    )
    return DiscSurface(mesh, values, is_harmonic=False)
