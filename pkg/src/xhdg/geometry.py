"""Structured triangulations, analytic level sets, and cut-element topology.

The mesh is a uniform N-by-N triangulation of an axis-aligned rectangle,
each square cell split by its lower-left to upper-right diagonal.  The
interface is the zero set of an analytic level-set function; elements are
classified as pure (entirely on one side) or cut, and cut elements are
decomposed into straight-scaffold sub-polygons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, DegenerateGradient, NoConvergence

__all__ = [
    "StructuredMesh",
    "build_uniform_mesh",
    "LevelSet",
    "CircleLevelSet",
    "HorizontalLineLevelSet",
    "DiamondLevelSet",
    "AnalyticLevelSet",
    "CutElement",
    "CutTopology",
    "classify_elements",
    "edge_intersection",
    "interface_normal",
    "PURE_1",
    "PURE_2",
    "CUT",
    "EDGE_UNCUT",
    "EDGE_CUT",
    "EDGE_ON_INTERFACE",
]

# element classes
PURE_1 = 1
PURE_2 = 2
CUT = 0

# edge classes
EDGE_UNCUT = 0
EDGE_CUT = 1
EDGE_ON_INTERFACE = 2


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructuredMesh:
    """Uniform triangulation of a rectangle.

    Vertices are lexicographic (x fastest); each cell carries two CCW
    triangles.  ``edges`` stores sorted vertex pairs, ``edge_tris`` the one or
    two adjacent triangles (-1 marks a boundary slot), and ``tri_edges`` the
    global edge id of local edge i = (v_i, v_{i+1}).
    """

    domain: tuple[float, float, float, float]
    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_tris: np.ndarray
    tri_edges: np.ndarray
    h: float                      # common element diameter
    area: float                   # common element area

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def triangle_coords(self, t: int) -> np.ndarray:
        return self.vertices[self.triangles[t]]

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def is_boundary_edge(self, e: int) -> bool:
        return self.edge_tris[e, 1] < 0

    def local_edge_vertices(self, t: int, le: int) -> tuple[int, int]:
        tri = self.triangles[t]
        return int(tri[le]), int(tri[(le + 1) % 3])

    def outward_normal(self, t: int, le: int) -> np.ndarray:
        """Unit outward normal of triangle ``t`` on its local edge ``le``."""
        a, b = self.local_edge_vertices(t, le)
        tang = self.vertices[b] - self.vertices[a]
        # CCW triangles: outward normal is the tangent rotated by -90 degrees
        nrm = np.array([tang[1], -tang[0]])
        return nrm / np.linalg.norm(nrm)


def build_uniform_mesh(domain: tuple[float, float, float, float], n: int) -> StructuredMesh:
    """Triangulate ``domain = (x0, y0, x1, y1)`` into 2*n^2 CCW triangles."""
    x0, y0, x1, y1 = (float(v) for v in domain)
    if n < 1:
        raise ValueError("n must be >= 1")
    if x1 <= x0 or y1 <= y0:
        raise ValueError("domain must have positive side lengths")

    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + hx * np.arange(n + 1)
    ys = y0 + hy * np.arange(n + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    t = 0
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            triangles[t] = (v00, v10, v11)      # lower-right triangle
            triangles[t + 1] = (v00, v11, v01)  # upper-left triangle
            t += 2

    edge_ids: dict[tuple[int, int], int] = {}
    tri_edges = np.empty((len(triangles), 3), dtype=np.int64)
    edge_list: list[tuple[int, int]] = []
    adjacency: list[list[int]] = []
    for t, tri in enumerate(triangles):
        for le in range(3):
            a, b = int(tri[le]), int(tri[(le + 1) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_ids.get(key)
            if e is None:
                e = len(edge_list)
                edge_ids[key] = e
                edge_list.append(key)
                adjacency.append([t])
            else:
                adjacency[e].append(t)
            tri_edges[t, le] = e

    edges = np.array(edge_list, dtype=np.int64)
    edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
    for e, tris in enumerate(adjacency):
        if len(tris) > 2:
            raise AssumptionViolation(f"edge {e} has {len(tris)} adjacent triangles")
        edge_tris[e, : len(tris)] = tris

    return StructuredMesh(
        domain=(x0, y0, x1, y1),
        n=n,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_tris=edge_tris,
        tri_edges=tri_edges,
        h=float(np.hypot(hx, hy)),
        area=float(0.5 * hx * hy),
    )


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------

class LevelSet:
    """Analytic scalar function whose zero set is the interface.

    ``positive_side`` names the subdomain (1 or 2) occupying ``{phi > 0}``;
    the other side occupies ``{phi < 0}``.  ``fold_line`` marks interfaces
    that are straight within every element (required by the modified scheme).
    """

    positive_side: int = 1
    fold_line: bool = False

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def side_of_sign(self, sgn) -> int:
        """Map a phi sign (or array of signs) to a subdomain index."""
        pos, neg = self.positive_side, 3 - self.positive_side
        if np.isscalar(sgn):
            return pos if sgn > 0 else neg
        return np.where(np.asarray(sgn) > 0, pos, neg)

    def side_at(self, pts: np.ndarray) -> np.ndarray:
        return self.side_of_sign(np.sign(self(pts)))


class CircleLevelSet(LevelSet):
    """Signed distance to a circle; positive outside."""

    def __init__(self, center, radius, positive_side=1):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.positive_side = positive_side
        self.fold_line = False

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1]) - self.radius

    def gradient(self, pts):
        pts = np.atleast_2d(pts)
        d = pts - self.center
        r = np.hypot(d[:, 0], d[:, 1])
        return d / np.where(r == 0.0, 1.0, r)[:, None]


class HorizontalLineLevelSet(LevelSet):
    """phi = y - offset; positive above the line."""

    def __init__(self, offset, positive_side=1):
        self.offset = float(offset)
        self.positive_side = positive_side
        self.fold_line = True

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return pts[:, 1] - self.offset

    def gradient(self, pts):
        pts = np.atleast_2d(pts)
        g = np.zeros_like(pts)
        g[:, 1] = 1.0
        return g


class DiamondLevelSet(LevelSet):
    """Square interface rotated 45 degrees: phi = |x-cx| + |y-cy| - radius.

    Positive outside the diamond.  The equivalent quartic product of the four
    facet lines has the same zero set inside its bounding window but flips
    sign twice across each corner, which misclassifies the wedge regions
    beyond the corners; the l1 form is sign-correct everywhere.
    """

    def __init__(self, center, radius, positive_side=1):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.positive_side = positive_side
        self.fold_line = True

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return (np.abs(pts[:, 0] - self.center[0])
                + np.abs(pts[:, 1] - self.center[1]) - self.radius)

    def gradient(self, pts):
        pts = np.atleast_2d(pts)
        return np.column_stack([np.sign(pts[:, 0] - self.center[0]),
                                np.sign(pts[:, 1] - self.center[1])])


class AnalyticLevelSet(LevelSet):
    """User-supplied callables for phi and its gradient."""

    def __init__(self, func, grad, positive_side=1, fold_line=False):
        self._func = func
        self._grad = grad
        self.positive_side = positive_side
        self.fold_line = fold_line

    def __call__(self, pts):
        return np.asarray(self._func(np.atleast_2d(pts)), dtype=float)

    def gradient(self, pts):
        return np.asarray(self._grad(np.atleast_2d(pts)), dtype=float)


# ---------------------------------------------------------------------------
# interface queries
# ---------------------------------------------------------------------------

def interface_normal(levelset: LevelSet, pts: np.ndarray, grad_floor: float = 1e-12) -> np.ndarray:
    """Unit normals at interface points, oriented from Omega_1 into Omega_2."""
    g = levelset.gradient(np.atleast_2d(pts))
    mag = np.hypot(g[:, 0], g[:, 1])
    if np.any(mag < grad_floor):
        raise DegenerateGradient("level-set gradient below threshold at an interface point")
    n = g / mag[:, None]
    # gradient points toward {phi > 0}; flip unless that side is Omega_2
    if levelset.positive_side != 2:
        n = -n
    return n


def edge_intersection(levelset: LevelSet, p0, p1, tol: float, max_iter: int = 200) -> np.ndarray:
    """Locate the single zero of phi on the segment [p0, p1].

    Bisection brackets the root, then Newton steps on the 1D restriction
    refine it; iterates stay inside the bracket.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0

    def value(t):
        return float(levelset(p0 + t * d)[0])

    f0, f1 = value(0.0), value(1.0)
    if f0 * f1 >= 0.0:
        raise ValueError("edge_intersection requires a sign change on the segment")

    lo, hi, flo = 0.0, 1.0, f0
    t = 0.5
    for it in range(max_iter):
        t = 0.5 * (lo + hi)
        ft = value(t)
        if abs(ft) < tol:
            break
        if ft * flo < 0.0:
            hi = t
        else:
            lo, flo = t, ft
        # switch to Newton once the bracket is tight enough for it to be safe
        if hi - lo < 1e-3:
            for _ in range(30):
                x = p0 + t * d
                deriv = float(levelset.gradient(x[None, :])[0] @ d)
                if deriv == 0.0:
                    break
                t_new = t - value(t) / deriv
                if not (lo <= t_new <= hi) or abs(t_new - t) < 1e-17:
                    break
                t = t_new
            ft = value(t)
            if abs(ft) < tol or hi - lo < 1e-16:
                break
    else:
        raise NoConvergence(f"edge_intersection: |phi|={abs(ft):.2e} after {max_iter} iterations")
    return p0 + t * d


# ---------------------------------------------------------------------------
# cut topology
# ---------------------------------------------------------------------------

@dataclass
class CutElement:
    """Decomposition of one cut triangle."""

    element: int
    points: np.ndarray            # (2, 2) interface intersection points
    curved: bool
    pieces: dict                  # side -> (m, 2) CCW polygon; chord closes last->first
    edge_pieces: dict             # local edge -> [(side, p0, p1), ...]

    @property
    def chord(self) -> np.ndarray:
        return self.points


@dataclass
class CutTopology:
    """Element and edge classification for one mesh/level-set pair."""

    mesh: StructuredMesh
    levelset: LevelSet
    element_class: np.ndarray     # PURE_1 / PURE_2 / CUT per triangle
    edge_class: np.ndarray        # EDGE_UNCUT / EDGE_CUT / EDGE_ON_INTERFACE
    edge_side: np.ndarray         # subdomain of uncut edges (0 where n/a)
    edge_points: dict             # edge id -> intersection point
    cut_elements: dict            # element id -> CutElement
    interface_edges: list         # edge ids lying on the interface
    snap_tol: float

    @property
    def n_cut(self) -> int:
        return len(self.cut_elements)

    def elements_of_class(self, cls: int) -> np.ndarray:
        return np.nonzero(self.element_class == cls)[0]


def _edge_multi_crossing_check(mesh, levelset, signs, n_samples=9):
    """Raise if any edge changes sign more than once along its length."""
    v0 = mesh.vertices[mesh.edges[:, 0]]
    v1 = mesh.vertices[mesh.edges[:, 1]]
    ts = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    pts = v0[:, None, :] + ts[None, :, None] * (v1 - v0)[:, None, :]
    vals = levelset(pts.reshape(-1, 2)).reshape(len(mesh.edges), -1)
    seq = np.concatenate(
        [signs[mesh.edges[:, 0], None], np.sign(vals), signs[mesh.edges[:, 1], None]],
        axis=1,
    )
    # forward-fill zeros so a transition is counted once across snapped samples
    filled = seq.copy()
    for j in range(1, filled.shape[1]):
        filled[:, j] = np.where(filled[:, j] == 0, filled[:, j - 1], filled[:, j])
    flips = (seq[:, 1:] != 0) & (filled[:, :-1] != 0) & (seq[:, 1:] != filled[:, :-1])
    bad = np.nonzero(flips.sum(axis=1) > 1)[0]
    if len(bad):
        raise AssumptionViolation(
            f"edge {int(bad[0])} crosses the interface more than once; refine the mesh"
        )


def classify_elements(mesh: StructuredMesh, levelset: LevelSet,
                      snap_tol: float = 1e-12) -> CutTopology:
    """Classify elements and edges against the level set and decompose cuts.

    Vertices with ``|phi| < snap_tol * h`` are treated as lying exactly on the
    interface; an element whose remaining vertex signs agree is pure, so a
    degenerate alignment never produces a sliver cut.
    """
    phi = levelset(mesh.vertices)
    tol = snap_tol * mesh.h
    signs = np.sign(phi)
    signs[np.abs(phi) < tol] = 0

    _edge_multi_crossing_check(mesh, levelset, signs)

    tri_signs = signs[mesh.triangles]
    has_pos = (tri_signs > 0).any(axis=1)
    has_neg = (tri_signs < 0).any(axis=1)
    is_cut = has_pos & has_neg

    side_pos = levelset.side_of_sign(+1)
    side_neg = levelset.side_of_sign(-1)
    element_class = np.where(is_cut, CUT, np.where(has_pos, side_pos, side_neg))
    if np.any(~is_cut & ~has_pos & ~has_neg):
        raise AssumptionViolation("an element has all three vertices on the interface")

    # edges: both endpoints snapped -> the edge lies on the interface
    es = signs[mesh.edges]
    edge_class = np.full(mesh.n_edges, EDGE_UNCUT, dtype=np.int64)
    edge_class[(es[:, 0] * es[:, 1]) < 0] = EDGE_CUT
    edge_class[(es[:, 0] == 0) & (es[:, 1] == 0)] = EDGE_ON_INTERFACE
    nonzero = np.where(es[:, 0] != 0, es[:, 0], es[:, 1])
    edge_side = np.where(edge_class == EDGE_UNCUT, levelset.side_of_sign(nonzero), 0)

    edge_points: dict[int, np.ndarray] = {}
    for e in np.nonzero(edge_class == EDGE_CUT)[0]:
        a, b = mesh.edges[e]
        edge_points[int(e)] = edge_intersection(
            levelset, mesh.vertices[a], mesh.vertices[b], tol=max(tol, 1e-14 * mesh.h)
        )

    cut_elements: dict[int, CutElement] = {}
    for t in np.nonzero(is_cut)[0]:
        cut_elements[int(t)] = _decompose_cut_element(mesh, levelset, int(t),
                                                      signs, edge_points, tol)

    interface_edges = [int(e) for e in np.nonzero(edge_class == EDGE_ON_INTERFACE)[0]]
    return CutTopology(
        mesh=mesh,
        levelset=levelset,
        element_class=element_class,
        edge_class=edge_class,
        edge_side=edge_side,
        edge_points=edge_points,
        cut_elements=cut_elements,
        interface_edges=interface_edges,
        snap_tol=snap_tol,
    )


def _decompose_cut_element(mesh, levelset, t, signs, edge_points, tol):
    tri = mesh.triangles[t]
    coords = mesh.vertices[tri]
    vsigns = signs[tri]

    # boundary cycle: vertices interleaved with edge intersection points
    cycle = []  # entries: (coord, sign or None for crossing, is_interface_node)
    for le in range(3):
        v = int(tri[le])
        cycle.append((mesh.vertices[v], int(vsigns[le]), vsigns[le] == 0))
        e = int(mesh.tri_edges[t, le])
        if e in edge_points:
            cycle.append((edge_points[e], None, True))

    iface_idx = [i for i, (_, _, is_if) in enumerate(cycle) if is_if]
    if len(iface_idx) != 2:
        raise AssumptionViolation(
            f"element {t} boundary has {len(iface_idx)} interface points (expected 2)"
        )
    i0, i1 = iface_idx

    def path(lo, hi):
        if lo < hi:
            return list(range(lo, hi + 1))
        return list(range(lo, len(cycle))) + list(range(0, hi + 1))

    pieces = {}
    for idxs in (path(i0, i1), path(i1, i0)):
        interior = [cycle[i] for i in idxs[1:-1]]
        interior_signs = {s for (_, s, _) in interior if s not in (None, 0)}
        if len(interior_signs) != 1:
            raise AssumptionViolation(f"element {t}: inconsistent signs within a cut piece")
        side = levelset.side_of_sign(interior_signs.pop())
        # polygon starts and ends at interface nodes; the closing edge is the chord
        pieces[int(side)] = np.array([cycle[i][0] for i in idxs])

    points = np.array([cycle[i0][0], cycle[i1][0]])

    # straight if phi vanishes along the chord interior
    mids = points[0] + np.array([0.25, 0.5, 0.75])[:, None] * (points[1] - points[0])
    curved = bool(np.max(np.abs(levelset(mids))) > max(10 * tol, 1e-12 * mesh.h))

    edge_pieces = {}
    for le in range(3):
        a, b = mesh.local_edge_vertices(t, le)
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        e = int(mesh.tri_edges[t, le])
        if e in edge_points:
            x = edge_points[e]
            edge_pieces[le] = [
                (int(levelset.side_of_sign(signs[a])), pa, x),
                (int(levelset.side_of_sign(signs[b])), x, pb),
            ]
        else:
            s = signs[a] if signs[a] != 0 else signs[b]
            edge_pieces[le] = [(int(levelset.side_of_sign(s)), pa, pb)]

    return CutElement(element=t, points=points, curved=curved,
                      pieces=pieces, edge_pieces=edge_pieces)
