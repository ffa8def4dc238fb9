"""Quadrature rules on triangles, segments, cut volumes, and interface arcs.

Reference rules are tensor Gauss rules collapsed onto the triangle, so all
weights are positive at every degree.  Cut-cell rules triangulate the
straight-scaffold sub-polygon; for curved interfaces the chord is refined
into sub-chords and thin correction strips between each sub-chord and the
true zero set are added, parameterizing the arc as a graph over the chord.
Correction-strip weights carry the sign of the offset, so a curved rule may
contain signed entries of magnitude bounded by the sagitta tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DegenerateCut, ProjectionDivergence, UnsupportedDegree
from .geometry import CutTopology, LevelSet, interface_normal

__all__ = [
    "QuadRule",
    "MAX_DEGREE",
    "triangle_rule",
    "segment_rule",
    "map_to_triangle",
    "map_to_segment",
    "cut_volume_rule",
    "interface_rule",
    "interface_edge_rule",
    "cut_edge_rule",
    "element_volume_rule",
]

MAX_DEGREE = 40

# sub-chord sagitta tolerance never drops below this fraction of h_K; the
# strip corrections keep the rule exact well past the refinement level
_SAGITTA_FLOOR = 5e-4


@dataclass(frozen=True)
class QuadRule:
    """Points and weights in physical coordinates; interface rules carry
    per-point unit normals."""

    points: np.ndarray
    weights: np.ndarray
    degree: int
    normals: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f) -> float:
        return float(self.weights @ f(self.points))


def _check_degree(degree: int) -> None:
    if not 0 <= degree <= MAX_DEGREE:
        raise UnsupportedDegree(f"degree {degree} outside [0, {MAX_DEGREE}]")


@lru_cache(maxsize=None)
def _gauss01(npts: int):
    x, w = leggauss(npts)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Rule on the reference triangle (0,0)-(1,0)-(0,1), exact to ``degree``.

    Collapsed tensor construction: x = u, y = v(1-u) with Jacobian (1-u)
    raises the u-degree by one, hence the extra Gauss point.
    """
    _check_degree(degree)
    m = degree // 2 + 2
    u, wu = _gauss01(m)
    v, wv = _gauss01(m)
    U, V = np.meshgrid(u, v)
    WU, WV = np.meshgrid(wu, wv)
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = (WU * WV * (1.0 - U)).ravel()
    return QuadRule(points=np.column_stack([x, y]), weights=w, degree=degree)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1], exact to ``degree``."""
    _check_degree(degree)
    m = degree // 2 + 1
    x, w = _gauss01(m)
    return QuadRule(points=np.column_stack([x, np.zeros_like(x)]), weights=w, degree=degree)


def map_to_triangle(rule: QuadRule, verts: np.ndarray) -> QuadRule:
    """Affine push-forward of a reference-triangle rule."""
    a, b, c = np.asarray(verts, dtype=float)
    jac = np.column_stack([b - a, c - a])
    det = abs(np.linalg.det(jac))
    pts = a + rule.points @ jac.T
    return QuadRule(points=pts, weights=rule.weights * det, degree=rule.degree)


def map_to_segment(rule: QuadRule, p0, p1) -> QuadRule:
    """Push a [0,1] rule onto the segment [p0, p1]; weights carry arc length."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    t = rule.points[:, 0]
    pts = p0 + t[:, None] * (p1 - p0)
    return QuadRule(points=pts, weights=rule.weights * length, degree=rule.degree)


# ---------------------------------------------------------------------------
# curved-interface helpers: graph of the zero set over a chord
# ---------------------------------------------------------------------------

def _offset_to_interface(levelset: LevelSet, x0: np.ndarray, m: np.ndarray,
                         h: float, tol: float, max_iter: int = 60) -> float:
    """Solve phi(x0 + g*m) = 0 for the signed offset g along direction m."""
    g = 0.0
    for _ in range(max_iter):
        x = x0 + g * m
        val = float(levelset(x[None, :])[0])
        if abs(val) < tol:
            return g
        slope = float(levelset.gradient(x[None, :])[0] @ m)
        if slope == 0.0:
            break
        step = val / slope
        g -= step
        if abs(g) > h:
            break
    else:
        x = x0 + g * m
        if abs(float(levelset(x[None, :])[0])) < tol:
            return g
    # bisection fallback over an expanding bracket
    for half in (0.1 * h, 0.5 * h, h):
        lo, hi = -half, half
        flo = float(levelset((x0 + lo * m)[None, :])[0])
        fhi = float(levelset((x0 + hi * m)[None, :])[0])
        if flo * fhi < 0.0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = float(levelset((x0 + mid * m)[None, :])[0])
                if abs(fm) < tol or hi - lo < 1e-16 * h:
                    return mid
                if fm * flo < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            return 0.5 * (lo + hi)
    raise ProjectionDivergence("closest-point projection onto the interface failed")


def _refine_chord(levelset: LevelSet, p: np.ndarray, q: np.ndarray, h: float,
                  sag_tol: float, phi_tol: float, depth: int = 0) -> list[np.ndarray]:
    """Split [p, q] until the curve's sagitta over each sub-chord is small."""
    if depth > 30:
        raise ProjectionDivergence("chord refinement exceeded depth limit")
    mid = 0.5 * (p + q)
    t = q - p
    nt = np.linalg.norm(t)
    if nt < 1e-15 * h:
        return [p, q]
    m = np.array([-t[1], t[0]]) / nt
    g = _offset_to_interface(levelset, mid, m, h, phi_tol)
    if abs(g) <= sag_tol:
        return [p, q]
    pm = mid + g * m
    left = _refine_chord(levelset, p, pm, h, sag_tol, phi_tol, depth + 1)
    right = _refine_chord(levelset, pm, q, h, sag_tol, phi_tol, depth + 1)
    return left + right[1:]


def _polyline(levelset, chord, h, geo_tol):
    sag_tol = max(geo_tol, _SAGITTA_FLOOR) * h
    phi_tol = 1e-14 * max(h, 1.0)
    return _refine_chord(levelset, chord[0], chord[1], h, sag_tol, phi_tol), phi_tol


# ---------------------------------------------------------------------------
# volume rules
# ---------------------------------------------------------------------------

def _fan_rule(polygon: np.ndarray, ref: QuadRule, area_floor: float) -> QuadRule:
    """Signed fan decomposition of a simple polygon about its vertex average.

    Signed triangle contributions reproduce the polygon integral exactly for
    any fan center (overlaps cancel), so mildly non-convex polyline polygons
    need no star-shape assumption.  The polygon is normalized to CCW first.
    """
    if _polygon_area(polygon) < 0:
        polygon = polygon[::-1]
    center = _polygon_centroid(polygon)
    pts, wts = [], []
    npoly = len(polygon)
    for i in range(npoly):
        a, b = polygon[i], polygon[(i + 1) % npoly]
        jac = np.column_stack([a - center, b - center])
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if abs(det) < 2.0 * area_floor:
            continue
        pts.append(center + ref.points @ jac.T)
        wts.append(ref.weights * det)
    if not pts:
        raise DegenerateCut("sub-polygon has vanishing area")
    return QuadRule(points=np.vstack(pts), weights=np.concatenate(wts), degree=ref.degree)


def _strip_rule(levelset, nodes, outward, degree, h, phi_tol):
    """Signed corrections between each sub-chord and the true interface.

    ``outward`` maps the local chord normal to the outside of the polygon, so
    bulges beyond the polygon add area and dips inside subtract it.
    """
    n1d = degree // 2 + 3
    s, ws = _gauss01(n1d)
    xi, wxi = _gauss01(n1d)
    pts, wts = [], []
    for a, b in zip(nodes[:-1], nodes[1:]):
        t = b - a
        ell = np.linalg.norm(t)
        if ell < 1e-15 * h:
            continue
        m = outward(a, b)
        base = a + s[:, None] * t
        for i in range(n1d):
            g = _offset_to_interface(levelset, base[i], m, h, phi_tol)
            if g == 0.0:
                continue
            pts.append(base[i] + (g * xi)[:, None] * m)
            wts.append(ws[i] * ell * g * wxi)
    if not pts:
        return None
    return QuadRule(points=np.vstack(pts), weights=np.concatenate(wts), degree=degree)


def cut_volume_rule(topo: CutTopology, element: int, side: int, degree: int,
                    geo_tol: float = 1e-10) -> QuadRule:
    """Rule over K intersect Omega_side for a cut (or pure) element."""
    _check_degree(degree)
    mesh = topo.mesh
    cls = topo.element_class[element]
    ref = triangle_rule(degree)
    if cls != 0:
        if cls != side:
            raise DegenerateCut(f"element {element} has no piece on side {side}")
        return map_to_triangle(ref, mesh.triangle_coords(element))

    cut = topo.cut_elements[element]
    if side not in cut.pieces:
        raise DegenerateCut(f"element {element} has no piece on side {side}")
    polygon = cut.pieces[side]
    area_floor = 1e-14 * mesh.area
    if abs(_polygon_area(polygon)) < area_floor:
        raise DegenerateCut(f"element {element} side {side}: sub-polygon area below floor")

    if not cut.curved:
        return _fan_rule(polygon, ref, 1e-16 * mesh.area)

    nodes, phi_tol = _polyline(topo.levelset, (polygon[-1], polygon[0]), mesh.h, geo_tol)
    inner = np.asarray(nodes[1:-1]).reshape(-1, 2)
    poly2 = np.vstack([polygon, inner]) if len(inner) else polygon
    base = _fan_rule(poly2, ref, 1e-16 * mesh.area)

    ccw = _polygon_area(poly2) > 0

    def outward(a, b):
        t = (b - a) / np.linalg.norm(b - a)
        out = np.array([t[1], -t[0]])
        return out if ccw else -out

    strip = _strip_rule(topo.levelset, np.asarray(nodes), outward, degree, mesh.h, phi_tol)
    if strip is None:
        return base
    return QuadRule(points=np.vstack([base.points, strip.points]),
                    weights=np.concatenate([base.weights, strip.weights]),
                    degree=degree)


def _polygon_area(polygon: np.ndarray) -> float:
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _polygon_centroid(polygon: np.ndarray) -> np.ndarray:
    """Area centroid by the shoelace formula; falls back to the vertex mean
    for degenerate polygons."""
    x, y = polygon[:, 0], polygon[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-300:
        return polygon.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def element_volume_rule(topo: CutTopology, element: int, side: int, degree: int,
                        geo_tol: float = 1e-10) -> QuadRule:
    """Volume rule for any element: full triangle if pure, cut piece if cut."""
    return cut_volume_rule(topo, element, side, degree, geo_tol)


# ---------------------------------------------------------------------------
# interface rules
# ---------------------------------------------------------------------------

def interface_rule(topo: CutTopology, element: int, degree: int,
                   geo_tol: float = 1e-10) -> QuadRule:
    """Rule over Gamma_K with unit normals oriented Omega_1 -> Omega_2.

    Straight chords take a plain Gauss rule; curved arcs put Gauss points on
    each sub-chord, slide them onto the zero set along the chord normal, and
    scale weights by the exact arc-length metric of that graph
    parameterization.
    """
    _check_degree(degree)
    cut = topo.cut_elements[element]
    levelset = topo.levelset
    h = topo.mesh.h
    if not cut.curved:
        rule = map_to_segment(segment_rule(degree), cut.points[0], cut.points[1])
        return QuadRule(points=rule.points, weights=rule.weights, degree=degree,
                        normals=interface_normal(levelset, rule.points))

    nodes, phi_tol = _polyline(levelset, (cut.points[0], cut.points[1]), h, geo_tol)
    s, ws = _gauss01(degree // 2 + 3)
    pts, wts = [], []
    for a, b in zip(nodes[:-1], nodes[1:]):
        t = b - a
        ell = np.linalg.norm(t)
        if ell < 1e-15 * h:
            continue
        that = t / ell
        m = np.array([-that[1], that[0]])
        base = a + s[:, None] * t
        for i in range(len(s)):
            g = _offset_to_interface(levelset, base[i], m, h, phi_tol)
            x = base[i] + g * m
            grad = levelset.gradient(x[None, :])[0]
            denom = grad @ m
            if denom == 0.0:
                raise ProjectionDivergence("interface tangent to chord normal")
            slope = -(grad @ that) / denom
            pts.append(x)
            wts.append(ws[i] * ell * np.hypot(1.0, slope))
    pts = np.asarray(pts)
    return QuadRule(points=pts, weights=np.asarray(wts), degree=degree,
                    normals=interface_normal(levelset, pts))


def interface_edge_rule(topo: CutTopology, edge: int, degree: int) -> QuadRule:
    """Rule with normals for a mesh edge that lies on the interface."""
    _check_degree(degree)
    a, b = topo.mesh.edges[edge]
    rule = map_to_segment(segment_rule(degree), topo.mesh.vertices[a], topo.mesh.vertices[b])
    return QuadRule(points=rule.points, weights=rule.weights, degree=degree,
                    normals=interface_normal(topo.levelset, rule.points))


# ---------------------------------------------------------------------------
# edge rules
# ---------------------------------------------------------------------------

def cut_edge_rule(topo: CutTopology, edge: int, side: int, degree: int) -> QuadRule:
    """Rule over the part of an edge on one side of the interface."""
    _check_degree(degree)
    mesh = topo.mesh
    a, b = mesh.edges[edge]
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    cls = topo.edge_class[edge]
    if cls == 0:  # uncut
        if topo.edge_side[edge] != side:
            raise DegenerateCut(f"edge {edge} does not touch side {side}")
        return map_to_segment(segment_rule(degree), pa, pb)
    if cls == 2:
        raise DegenerateCut(f"edge {edge} lies on the interface; it has no one-sided part")
    x = topo.edge_points[edge]
    sa = topo.levelset.side_of_sign(np.sign(topo.levelset(pa[None, :])))[0]
    p0, p1 = (pa, x) if sa == side else (x, pb)
    h_f = np.linalg.norm(pb - pa)
    if np.linalg.norm(p1 - p0) < 1e-14 * h_f:
        raise DegenerateCut(f"edge {edge} side {side}: sub-segment below length floor")
    return map_to_segment(segment_rule(degree), p0, p1)
