"""Closed piecewise-C2 space curves: length, corner angles, total curvature.

A curve is an ordered list of parametric arcs with exact first and second
derivatives.  Total curvature is the sum of the corner angles at arc
junctions plus the integral of |gamma' x gamma''| / |gamma'|^2 over the
smooth pieces, which equals the arc-length integral of |gamma''| for the
unit-speed reparametrization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import EvaluationError, ParameterError

TWO_PI = 2.0 * np.pi

CORNER_TOL = 1e-9  # one-sided tangents closer than this count as smooth


class ParametricArc:
    """One C2 arc t -> R^3 on [t0, t1] with exact derivatives."""

    def __init__(self, t0, t1, point, deriv1, deriv2):
        if not t1 > t0:
            raise ParameterError("arc needs t1 > t0")
        self.t0 = float(t0)
        self.t1 = float(t1)
        self._point = point
        self._deriv1 = deriv1
        self._deriv2 = deriv2

    def point(self, t):
        return np.asarray(self._point(t), dtype=float)

    def deriv1(self, t):
        return np.asarray(self._deriv1(t), dtype=float)

    def deriv2(self, t):
        return np.asarray(self._deriv2(t), dtype=float)


class FourierArc(ParametricArc):
    """Trigonometric arc a0 + sum_k cos(k t) c_k + sin(k t) s_k."""

    def __init__(self, t0, t1, a0, cos_coeffs, sin_coeffs):
        a0 = np.asarray(a0, dtype=float).reshape(3)
        C = np.atleast_2d(np.asarray(cos_coeffs, dtype=float))
        S = np.atleast_2d(np.asarray(sin_coeffs, dtype=float))
        if C.shape[1] != 3 or S.shape[1] != 3 or C.shape != S.shape:
            raise ParameterError("cos/sin coefficient arrays must both be (K, 3)")
        k = np.arange(1, len(C) + 1, dtype=float)
        self.a0, self.C, self.S, self.k = a0, C, S, k
        super().__init__(
            t0,
            t1,
            lambda t: a0 + np.cos(k * t) @ C + np.sin(k * t) @ S,
            lambda t: (-k * np.sin(k * t)) @ C + (k * np.cos(k * t)) @ S,
            lambda t: (-(k**2) * np.cos(k * t)) @ C + (-(k**2) * np.sin(k * t)) @ S,
        )


class LineArc(ParametricArc):
    """Straight segment from p to q, affine in t."""

    def __init__(self, t0, t1, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = (q - p) / (t1 - t0)
        super().__init__(
            t0,
            t1,
            lambda t, p=p, d=d, t0=t0: p + (t - t0) * d,
            lambda t, d=d: d.copy(),
            lambda t: np.zeros(3),
        )


class _TransformedArc(ParametricArc):
    def __init__(self, arc, rot, shift):
        super().__init__(
            arc.t0,
            arc.t1,
            lambda t: rot @ arc.point(t) + shift,
            lambda t: rot @ arc.deriv1(t),
            lambda t: rot @ arc.deriv2(t),
        )


@dataclass(frozen=True)
class CornerAngle:
    """Angle in (0, pi) between the one-sided tangents at a junction."""

    param: float
    angle: float


class PiecewiseC2Curve:
    """Closed Jordan curve given as consecutive C2 arcs.

    Arcs must chain head-to-tail (1e-12) and close up; the parametrization
    must be regular (nonvanishing first derivative) and injective at a
    512-point sampling resolution.
    """

    def __init__(self, arcs: Sequence[ParametricArc]):
        if not arcs:
            raise ParameterError("need at least one arc")
        arcs = list(arcs)
        for a, b in zip(arcs, arcs[1:]):
            if abs(a.t1 - b.t0) > 1e-12:
                raise ParameterError("arc parameter intervals must be consecutive")
            if np.linalg.norm(a.point(a.t1) - b.point(b.t0)) > 1e-12:
                raise ParameterError("consecutive arcs must join continuously")
        start = arcs[0].point(arcs[0].t0)
        end = arcs[-1].point(arcs[-1].t1)
        if np.linalg.norm(end - start) > 1e-12:
            raise ParameterError("curve must close up (end point != start point)")

        self.arcs = arcs
        self.t_start = arcs[0].t0
        self.period = arcs[-1].t1 - arcs[0].t0
        self._breaks = np.array([a.t0 for a in arcs] + [arcs[-1].t1])
        self.corner_params = self._breaks[: len(arcs)].copy()  # junction params incl. start

        self._validate_regular()
        self._validate_injective()

    # -- construction checks ---------------------------------------------

    def _validate_regular(self):
        for i, arc in enumerate(self.arcs):
            ts = np.linspace(arc.t0, arc.t1, 64)
            speeds = np.array([np.linalg.norm(arc.deriv1(t)) for t in ts])
            if not np.all(np.isfinite(speeds)):
                t_bad = ts[~np.isfinite(speeds)][0]
                raise EvaluationError(f"non-finite derivative on arc {i} at t={t_bad:.6g}")
            if speeds.min() <= 1e-12 * max(speeds.max(), 1.0):
                raise ParameterError(f"arc {i} has (numerically) vanishing first derivative")

    def _validate_injective(self, n=512):
        ts = self.t_start + self.period * np.arange(n) / n
        pts = self.sample(ts)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        idx = np.arange(n)
        sep = np.minimum(np.abs(idx[:, None] - idx[None, :]), n - np.abs(idx[:, None] - idx[None, :]))
        mask = sep > 1
        diam = np.sqrt(d2.max())
        if d2[mask].min() <= (1e-9 * max(diam, 1e-9)) ** 2:
            raise ParameterError("curve is not injective at sampling resolution")

    # -- evaluation --------------------------------------------------------

    def _reduce(self, t):
        return self.t_start + np.mod(np.asarray(t, dtype=float) - self.t_start, self.period)

    def _arc_index(self, t):
        j = np.searchsorted(self._breaks, t, side="right") - 1
        return np.clip(j, 0, len(self.arcs) - 1)

    def sample(self, params):
        """Positions at the given parameters (reduced mod period)."""
        t = np.atleast_1d(self._reduce(params))
        out = np.empty((len(t), 3))
        for i, ti in enumerate(t):
            arc = self.arcs[self._arc_index(ti)]
            p = arc.point(ti)
            if not np.all(np.isfinite(p)):
                raise EvaluationError(f"non-finite curve value at t={ti:.6g}")
            out[i] = p
        if np.ndim(params) == 0:
            return out[0]
        return out

    def tangent(self, t, side="+"):
        """Unit one-sided tangent at parameter t."""
        t = float(self._reduce(t))
        j = self._arc_index(t)
        if side == "-" and abs(t - self._breaks[j]) < 1e-15:
            j = (j - 1) % len(self.arcs)
            t_eval = self.arcs[j].t1
        else:
            t_eval = t
        d = self.arcs[j].deriv1(t_eval)
        n = np.linalg.norm(d)
        if n <= 0:
            raise EvaluationError(f"zero one-sided tangent at t={t:.6g}")
        return d / n

    def transformed(self, rotation, translation):
        """New curve with every arc mapped by x -> R x + b."""
        rot = np.asarray(rotation, dtype=float)
        shift = np.asarray(translation, dtype=float)
        return PiecewiseC2Curve([_TransformedArc(a, rot, shift) for a in self.arcs])

    def diameter_estimate(self, n=256):
        pts = self.sample(self.t_start + self.period * np.arange(n) / n)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


# -- operations -----------------------------------------------------------


def _quad_arc(arc, integrand, index, epsrel):
    def f(t):
        val = integrand(t)
        if not np.isfinite(val):
            raise EvaluationError(f"non-finite integrand on arc {index} at t={t:.6g}")
        return val

    val, err = quad(f, arc.t0, arc.t1, epsabs=0.0, epsrel=epsrel, limit=200)
    return val, err


def arc_length(curve):
    """Length of one period, by adaptive quadrature of |gamma'|."""
    total, err_total = 0.0, 0.0
    for i, arc in enumerate(curve.arcs):
        val, err = _quad_arc(arc, lambda t, a=arc: np.linalg.norm(a.deriv1(t)), i, 1e-11)
        total += val
        err_total += err
    if err_total > 1e-9 * max(total, 1e-300):
        raise EvaluationError("quadrature error estimate too large for arc length")
    return total


def corner_angles(curve):
    """Corner angles at arc junctions where the one-sided tangents differ.

    Junctions whose tangents agree to within 1e-9 rad yield no entry; a
    reversal (angle within 1e-9 of pi, a cusp) is rejected.
    """
    out = []
    m = len(curve.arcs)
    for j in range(m):
        t_j = curve.arcs[j].t0
        t_minus = curve.tangent(t_j, side="-")
        t_plus = curve.tangent(t_j, side="+")
        cross = np.linalg.norm(np.cross(t_minus, t_plus))
        dot = float(np.dot(t_minus, t_plus))
        ang = float(np.arctan2(cross, dot))
        if ang <= CORNER_TOL:
            continue
        if ang >= np.pi - CORNER_TOL:
            raise ParameterError(f"cusp (reversing tangent) at t={t_j:.6g} is not admitted")
        out.append(CornerAngle(param=float(t_j), angle=ang))
    return out


def total_curvature(curve):
    """Sum of corner angles plus the curvature integral over smooth arcs."""
    corners = sum(c.angle for c in corner_angles(curve))
    smooth, err_total = 0.0, 0.0
    for i, arc in enumerate(curve.arcs):

        def kappa(t, a=arc):
            d1 = a.deriv1(t)
            d2 = a.deriv2(t)
            s2 = float(np.dot(d1, d1))
            return float(np.linalg.norm(np.cross(d1, d2)) / s2)

        val, err = _quad_arc(arc, kappa, i, 1e-10)
        smooth += val
        err_total += err
    if err_total > 1e-8 * max(smooth + corners, 1.0):
        raise EvaluationError("quadrature error estimate too large for total curvature")
    return corners + smooth


# -- builtin families -------------------------------------------------------


def circle(radius=1.0):
    """Circle of given radius in the z = 0 plane, parametrized on [0, 2*pi)."""
    C = np.array([[radius, 0.0, 0.0]])
    S = np.array([[0.0, radius, 0.0]])
    return PiecewiseC2Curve([FourierArc(0.0, TWO_PI, np.zeros(3), C, S)])


def ellipse(a, b):
    """Axis-aligned planar ellipse with semi-axes a and b."""
    C = np.array([[a, 0.0, 0.0]])
    S = np.array([[0.0, b, 0.0]])
    return PiecewiseC2Curve([FourierArc(0.0, TWO_PI, np.zeros(3), C, S)])


def perturbed_circle(amplitude=0.1, frequency=3):
    """Unit circle with a vertical wave: (cos t, sin t, amplitude*sin(f t))."""
    k = int(frequency)
    C = np.zeros((k, 3))
    S = np.zeros((k, 3))
    C[0, 0] = 1.0
    S[0, 1] = 1.0
    S[k - 1, 2] = amplitude
    return PiecewiseC2Curve([FourierArc(0.0, TWO_PI, np.zeros(3), C, S)])


def polygon_curve(vertices):
    """Closed piecewise-linear curve through the given vertex loop.

    Parametrized by chord length: each side occupies a parameter interval
    equal to its length.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 3 or len(verts) < 3:
        raise ParameterError("need at least three 3D vertices")
    arcs = []
    t = 0.0
    for i in range(len(verts)):
        p, q = verts[i], verts[(i + 1) % len(verts)]
        ell = float(np.linalg.norm(q - p))
        if ell <= 1e-12:
            raise ParameterError("repeated consecutive vertices")
        arcs.append(LineArc(t, t + ell, p, q))
        t += ell
    return PiecewiseC2Curve(arcs)


def fourier_curve(a0, cos_coeffs, sin_coeffs):
    """Smooth closed curve from one trigonometric polynomial arc."""
    return PiecewiseC2Curve([FourierArc(0.0, TWO_PI, a0, cos_coeffs, sin_coeffs)])


def circular_arc(t0, t1, center, radius, phi0, phi1, e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0)):
    """Circular arc center + r*(cos phi * e1 + sin phi * e2), phi affine in t."""
    c = np.asarray(center, dtype=float)
    u = np.asarray(e1, dtype=float)
    v = np.asarray(e2, dtype=float)
    rate = (phi1 - phi0) / (t1 - t0)

    def phi(t):
        return phi0 + (t - t0) * rate

    return ParametricArc(
        t0,
        t1,
        lambda t: c + radius * (np.cos(phi(t)) * u + np.sin(phi(t)) * v),
        lambda t: radius * rate * (-np.sin(phi(t)) * u + np.cos(phi(t)) * v),
        lambda t: -radius * rate**2 * (np.cos(phi(t)) * u + np.sin(phi(t)) * v),
    )


FAMILIES: dict[str, Callable[..., PiecewiseC2Curve]] = {
    "circle": circle,
    "ellipse": ellipse,
    "perturbed_circle": perturbed_circle,
    "polygon": polygon_curve,
    "fourier": fourier_curve,
}
