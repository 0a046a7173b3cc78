"""Inscribed polygonal approximations of closed curves.

A polygon here is an ordered closed vertex loop in R^3 with three marked
anchor vertices.  Inscribed approximations keep every true corner of the
curve as a vertex, which makes their turning never exceed the curve's total
curvature; generic position (no parallel edge pair, no coplanar edge triple)
is certified by an exhaustive direction scan and, for planar input, achieved
by a seeded random vertex perturbation that leaves the anchors fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import curve as curve_mod
from .errors import GenericityError, ParameterError

THETA_TOL_DEFAULT = 1e-6
VOLUME_TOL_DEFAULT = 1e-9


def _segment_distance(p1, q1, p2, q2):
    """Euclidean distance between segments [p1,q1] and [p2,q2] in R^3."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    c = d1 @ r
    b = d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-300 else 0.0
    t = (b * s + f) / e if e > 1e-300 else 0.0
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0) if a > 1e-300 else 0.0
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0) if a > 1e-300 else 0.0
    diff = (p1 + s * d1) - (p2 + t * d2)
    return float(np.linalg.norm(diff))


class Polygon:
    """Closed simple polygon with three anchor vertices.

    vertices: (M, 3) loop, consecutive vertices distinct, no two non-adjacent
    edges closer than 1e-12, M >= 4.  anchor_indices: three distinct indices
    in increasing order.  source_params optionally records the curve
    parameters the vertices were sampled from.
    """

    def __init__(self, vertices, anchor_indices, source_params=None):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ParameterError("vertices must be an (M, 3) array")
        M = len(verts)
        if M < 4:
            raise ParameterError("polygon needs at least 4 vertices")
        anchors = tuple(int(i) for i in anchor_indices)
        if len(set(anchors)) != 3 or not all(0 <= i < M for i in anchors):
            raise ParameterError("anchor_indices must be three distinct vertex indices")
        if not (anchors[0] < anchors[1] < anchors[2]):
            raise ParameterError("anchor_indices must be increasing along the loop")

        edges = np.roll(verts, -1, axis=0) - verts
        lens = np.linalg.norm(edges, axis=1)
        if np.any(lens <= 1e-12):
            raise ParameterError("consecutive vertices coincide")
        self._check_simple(verts)

        if source_params is not None:
            source_params = np.asarray(source_params, dtype=float)
            if source_params.shape != (M,):
                raise ParameterError("source_params must have one entry per vertex")

        verts = verts.copy()
        verts.setflags(write=False)
        self.vertices = verts
        self.anchor_indices = anchors
        self.source_params = source_params
        self._edge_lens = lens
        self._cum = np.concatenate([[0.0], np.cumsum(lens)])

    @staticmethod
    def _check_simple(verts, tol=1e-12):
        M = len(verts)
        scale = max(1.0, float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0))))
        nxt = np.roll(verts, -1, axis=0)
        for i in range(M):
            for j in range(i + 1, M):
                if j == i + 1 or (i == 0 and j == M - 1):
                    continue  # adjacent edges share a vertex
                d = _segment_distance(verts[i], nxt[i], verts[j], nxt[j])
                if d <= tol * scale:
                    raise ParameterError(f"edges {i} and {j} intersect: polygon is not simple")

    # -- arc-length parametrization ---------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def length(self):
        return float(self._cum[-1])

    @property
    def vertex_params(self):
        """Arc-length parameter of each vertex (vertex 0 at 0)."""
        return self._cum[:-1]

    def edge_directions(self, normalize=True):
        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        return edges / self._edge_lens[:, None] if normalize else edges

    def point_at(self, s):
        """Point on the carrier at arc-length parameter s (mod length)."""
        s = np.mod(np.asarray(s, dtype=float), self.length)
        k = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, self.num_vertices - 1)
        u = self.edge_directions(normalize=True)
        out = self.vertices[k] + (s - self._cum[k])[..., None] * u[k]
        return out

    def carrier_distance(self, points):
        """Distance from each point to the nearest polygon edge."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        d = w - v  # (M, 3)
        ll = np.einsum("mk,mk->m", d, d)
        diff = pts[:, None, :] - v[None, :, :]  # (N, M, 3)
        t = np.clip(np.einsum("nmk,mk->nm", diff, d) / ll[None, :], 0.0, 1.0)
        proj = v[None] + t[..., None] * d[None]
        dist = np.linalg.norm(pts[:, None, :] - proj, axis=-1)
        return dist.min(axis=1)

    def anchor_params(self):
        return self.vertex_params[list(self.anchor_indices)]


@dataclass(frozen=True)
class GenericityCertificate:
    """Result of the exhaustive edge-direction scan.

    min_pair_angle: smallest angle between any two edge lines (parallel and
    antiparallel both count as zero); min_triple_volume: smallest |det| over
    unit direction triples; passes iff both clear their tolerances.
    """

    min_pair_angle: float
    min_triple_volume: float
    theta_tol: float
    volume_tol: float
    passes: bool


@dataclass(frozen=True)
class ApproximationReport:
    length_gap: float
    curvature_gap: float
    sup_deviation: float
    certificate: GenericityCertificate
    passes: bool


def polygon_length(polygon):
    """Sum of edge lengths."""
    return polygon.length


def polygon_total_curvature(polygon):
    """Sum of turning angles between consecutive edge directions."""
    u = polygon.edge_directions()
    u_prev = np.roll(u, 1, axis=0)
    cross = np.linalg.norm(np.cross(u_prev, u), axis=1)
    dot = np.einsum("mk,mk->m", u_prev, u)
    eta = np.arctan2(cross, dot)
    if np.any(eta >= np.pi - 1e-9):
        k = int(np.argmax(eta))
        raise ParameterError(f"anti-parallel consecutive edges at vertex {k} (polygon back-tracks)")
    return float(eta.sum())


def turning_angles(polygon):
    """Exterior angle at each vertex, in loop order."""
    u = polygon.edge_directions()
    u_prev = np.roll(u, 1, axis=0)
    cross = np.linalg.norm(np.cross(u_prev, u), axis=1)
    dot = np.einsum("mk,mk->m", u_prev, u)
    return np.arctan2(cross, dot)


def check_generic(polygon, theta_tol=THETA_TOL_DEFAULT, v_tol=VOLUME_TOL_DEFAULT):
    """Exhaustive scan over all edge-direction pairs and triples."""
    u = polygon.edge_directions()
    M = len(u)
    dots = np.abs(np.clip(u @ u.T, -1.0, 1.0))
    iu = np.triu_indices(M, k=1)
    pair_angles = np.arccos(dots[iu])  # angle between lines, in [0, pi/2]
    min_pair = float(pair_angles.min())

    ii, jj = iu
    crosses = np.cross(u[ii], u[jj])  # (P, 3)
    dets = np.abs(crosses @ u.T)  # (P, M)
    keep = (np.arange(M)[None, :] != ii[:, None]) & (np.arange(M)[None, :] != jj[:, None])
    # each unordered triple appears three times in this scan; the min is the same
    min_vol = float(dets[keep].min())
    passes = (min_pair > theta_tol) and (min_vol > v_tol)
    return GenericityCertificate(min_pair, min_vol, theta_tol, v_tol, passes)


def _mandatory_params(curve, anchors):
    period = curve.period
    a = np.mod(np.asarray(anchors, dtype=float) - curve.t_start, period) + curve.t_start
    if len(a) != 3 or len(np.unique(np.round(a, 12))) != 3:
        raise ParameterError("need three distinct anchor parameters")
    if not np.all(np.diff(a) > 0):
        raise ParameterError("anchor parameters must be ordered along the curve")
    corners = np.array([c.param for c in curve_mod.corner_angles(curve)])
    merged = list(a)
    for c in corners:
        if np.min(np.abs(np.mod(c - a + period / 2, period) - period / 2)) > 1e-12:
            merged.append(c)
    params = np.sort(np.asarray(merged))
    anchor_set = set(np.round(a, 12))
    return params, anchor_set


def inscribe(curve, n, anchors):
    """Inscribed polygon with n vertices: anchors and curve corners are
    vertices; the rest equidistribute a blend of arc length and curvature.

    The turning of an inscribed polygon never exceeds the curve's total
    curvature, and corner angles are reproduced exactly because corner points
    are vertices.
    """
    if n < 4:
        raise ParameterError("need n >= 4 vertices")
    params, anchor_set = _mandatory_params(curve, anchors)
    extra = n - len(params)
    if extra < 0:
        raise ParameterError(
            f"n={n} is smaller than the number of mandatory vertices ({len(params)})"
        )

    period = curve.period
    gaps = np.diff(np.concatenate([params, [params[0] + period]]))

    # cumulative density: 0.5 * normalized length + 0.5 * normalized curvature
    def gap_nodes(t0, t1, medges=257):
        return np.linspace(t0, t1, medges)

    def density(ts):
        out = np.empty_like(ts)
        for i, t in enumerate(ts):
            arc = curve.arcs[curve._arc_index(curve._reduce(t))]
            tt = float(curve._reduce(t))
            d1 = arc.deriv1(tt)
            d2 = arc.deriv2(tt)
            s2 = float(d1 @ d1)
            out[i] = 0.0 if s2 == 0 else np.linalg.norm(d1)
            out[i] += np.linalg.norm(np.cross(d1, d2)) / s2 if s2 > 0 else 0.0
        return out

    # measure per gap (trapezoid on a fixed fine grid: deterministic)
    gap_grids = [gap_nodes(params[g], params[g] + gaps[g]) for g in range(len(params))]
    gap_cums = []
    gap_measures = np.empty(len(params))
    for g, ts in enumerate(gap_grids):
        f = density(ts)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(ts))])
        gap_cums.append(cum)
        gap_measures[g] = cum[-1]

    # largest-remainder apportionment of the extra vertices
    total = gap_measures.sum()
    quota = extra * gap_measures / total if total > 0 else np.full(len(params), extra / len(params))
    counts = np.floor(quota).astype(int)
    rem = extra - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:rem]] += 1

    all_params = []
    for g in range(len(params)):
        all_params.append(params[g])
        m = counts[g]
        if m == 0:
            continue
        targets = gap_measures[g] * (np.arange(1, m + 1) / (m + 1))
        ts = np.interp(targets, gap_cums[g], gap_grids[g])
        all_params.extend(ts.tolist())
    all_params = np.asarray(all_params)

    verts = curve.sample(all_params)
    anchors_sorted = sorted(anchor_set)
    anchor_idx = []
    for av in anchors_sorted:
        pos = int(np.argmin(np.abs(np.round(all_params, 12) - av)))
        anchor_idx.append(pos)
    return Polygon(verts, tuple(sorted(anchor_idx)), source_params=all_params)


def perturb_to_generic(polygon, delta, seed=0, theta_tol=THETA_TOL_DEFAULT, v_tol=VOLUME_TOL_DEFAULT):
    """Seeded random displacement of non-anchor vertices until generic.

    Each round draws fresh displacements of magnitude <= delta applied to the
    original vertices, so the output stays within delta of the input; anchor
    vertices never move.  Raises GenericityError after 100 rounds.
    """
    cert = check_generic(polygon, theta_tol, v_tol)
    if cert.passes:
        return polygon
    if delta <= 0:
        raise ParameterError("delta must be positive to perturb a non-generic polygon")

    rng = np.random.default_rng(seed)
    free = np.ones(polygon.num_vertices, dtype=bool)
    free[list(polygon.anchor_indices)] = False
    for _ in range(100):
        disp = rng.normal(size=(polygon.num_vertices, 3))
        disp /= np.maximum(np.linalg.norm(disp, axis=1, keepdims=True), 1e-300)
        disp *= delta * rng.uniform(0.5, 1.0, size=(polygon.num_vertices, 1))
        disp[~free] = 0.0
        verts = polygon.vertices + disp
        try:
            cand = Polygon(verts, polygon.anchor_indices, polygon.source_params)
        except ParameterError:
            continue  # perturbation broke simplicity; redraw
        if check_generic(cand, theta_tol, v_tol).passes:
            return cand
    raise GenericityError(
        "no generic position found in 100 rounds; increase delta or vertex count"
    )


def verify_approximation(curve, polygon, epsilon, theta_tol=THETA_TOL_DEFAULT, v_tol=VOLUME_TOL_DEFAULT, samples_per_edge=32):
    """Length gap, curvature gap, sup-deviation and genericity of an approximation.

    The curve-to-polygon comparison map sends the curve point at parameter t
    to the point on the chord between the two neighbouring vertices with the
    same normalized parameter; sup_deviation is the largest distance between
    a curve point and its chord image.
    """
    if polygon.source_params is None:
        raise ParameterError("polygon lacks source_params; cannot verify against curve")
    length_gap = polygon_length(polygon) - curve_mod.arc_length(curve)
    curvature_gap = polygon_total_curvature(polygon) - curve_mod.total_curvature(curve)

    params = polygon.source_params
    period = curve.period
    M = len(params)
    sup_dev = 0.0
    for k in range(M):
        t0 = params[k]
        t1 = params[(k + 1) % M]
        if k == M - 1:
            t1 = params[0] + period
        ts = np.linspace(t0, t1, samples_per_edge + 2)
        pts = curve.sample(ts)
        lam = ((ts - t0) / (t1 - t0))[:, None]
        chord = (1 - lam) * polygon.vertices[k] + lam * polygon.vertices[(k + 1) % M]
        sup_dev = max(sup_dev, float(np.linalg.norm(pts - chord, axis=1).max()))

    cert = check_generic(polygon, theta_tol, v_tol)
    passes = (length_gap < epsilon) and (curvature_gap < epsilon) and cert.passes
    return ApproximationReport(float(length_gap), float(curvature_gap), sup_dev, cert, passes)


# -- plain-text save/load ----------------------------------------------------


def save_polygon(polygon, path, seed=None):
    """One vertex per line 'x y z' after a header with anchors and seed."""
    i0, i1, i2 = polygon.anchor_indices
    seed_txt = "none" if seed is None else str(int(seed))
    lines = [f"# anchors {i0} {i1} {i2} seed {seed_txt}"]
    lines += [f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}" for v in polygon.vertices]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_polygon(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ParameterError(f"{path}: missing polygon header line")
    head = lines[0].split()
    try:
        k = head.index("anchors")
        anchors = tuple(int(x) for x in head[k + 1 : k + 4])
    except (ValueError, IndexError):
        raise ParameterError(f"{path}: malformed header {lines[0]!r}") from None
    try:
        verts = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    except ValueError as exc:
        raise ParameterError(f"{path}: bad vertex line ({exc})") from None
    if verts.ndim != 2 or verts.shape[1] != 3:
        raise ParameterError(f"{path}: vertex lines must hold three numbers each")
    return Polygon(verts, anchors)
