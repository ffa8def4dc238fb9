import numpy as np
import pytest

from xhdg.errors import AssumptionViolation
from xhdg.geometry import (EDGE_ON_INTERFACE, EDGE_UNCUT,
                           AnalyticLevelSet, CircleLevelSet, DiamondLevelSet,
                           HorizontalLineLevelSet, build_uniform_mesh,
                           classify_elements, edge_intersection,
                           interface_normal)

R0 = np.sqrt(3.0) / 8.0
CENTER = (0.5, 0.5)


# ---------------------------------------------------------------------------
# mesh construction
# ---------------------------------------------------------------------------

def test_minimal_mesh_counts():
    mesh = build_uniform_mesh((0, 0, 1, 1), 1)
    assert mesh.n_triangles == 2
    assert mesh.n_vertices == 4
    assert mesh.n_edges == 5


def test_mesh_counting_formulas():
    mesh = build_uniform_mesh((0, 0, 1, 1), 8)
    assert mesh.n_triangles == 128
    assert mesh.n_vertices == 81


def test_diameter_from_vertex_coordinates():
    # oracle: per-element diameter computed from the vertex coordinates
    mesh = build_uniform_mesh((0, 0, 2, 2), 16)
    for t in (0, 31, 255):
        coords = mesh.triangle_coords(t)
        diam = max(np.linalg.norm(coords[i] - coords[j])
                   for i in range(3) for j in range(i + 1, 3))
        assert diam == pytest.approx(np.sqrt(2.0) * (2.0 / 16.0), rel=1e-14)
        assert diam == pytest.approx(mesh.h, rel=1e-14)


def test_mesh_invariants():
    mesh = build_uniform_mesh((0, 0, 1, 1), 5)
    assert mesh.n_vertices == 36 and mesh.n_triangles == 50
    # all areas equal and positive (shoelace)
    for t in range(mesh.n_triangles):
        a, b, c = mesh.triangle_coords(t)
        area = 0.5 * ((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0])
        assert area == pytest.approx(mesh.area, rel=1e-14)
        assert area > 0
    # adjacency: interior edges have two triangles, boundary edges one
    n_boundary = sum(1 for e in range(mesh.n_edges) if mesh.is_boundary_edge(e))
    assert n_boundary == 4 * mesh.n
    for e in range(mesh.n_edges):
        adj = mesh.edge_tris[e]
        assert (adj >= 0).sum() == (1 if mesh.is_boundary_edge(e) else 2)


def test_mesh_input_validation():
    with pytest.raises(ValueError):
        build_uniform_mesh((0, 0, 1, 1), 0)
    with pytest.raises(ValueError):
        build_uniform_mesh((0, 0, -1, 1), 4)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_circle_center_triangles_pure_interior():
    # oracle: every vertex of a triangle touching the center vertex lies at
    # distance <= sqrt(2)/8 < r0 from the center, so phi < 0 (side 2) there
    mesh = build_uniform_mesh((0, 0, 1, 1), 8)
    ls = CircleLevelSet(CENTER, R0, positive_side=1)
    topo = classify_elements(mesh, ls)
    center_vid = np.argmin(np.linalg.norm(mesh.vertices - np.array(CENTER), axis=1))
    touching = [t for t in range(mesh.n_triangles) if center_vid in mesh.triangles[t]]
    assert len(touching) >= 4
    for t in touching:
        dists = np.linalg.norm(mesh.triangle_coords(t) - np.array(CENTER), axis=1)
        assert dists.max() < R0          # analytic justification
        assert topo.element_class[t] == 2


def test_aligned_line_gives_interface_edges_not_cuts():
    mesh = build_uniform_mesh((0, 0, 1, 1), 8)
    ls = HorizontalLineLevelSet(0.25, positive_side=1)
    topo = classify_elements(mesh, ls, snap_tol=1e-12)
    assert topo.n_cut == 0
    assert len(topo.interface_edges) == 8
    for e in topo.interface_edges:
        assert topo.edge_class[e] == EDGE_ON_INTERFACE
        va, vb = mesh.edges[e]
        assert mesh.vertices[va][1] == pytest.approx(0.25)
        assert mesh.vertices[vb][1] == pytest.approx(0.25)


def test_all_positive_phi_means_no_cut():
    mesh = build_uniform_mesh((0, 0, 1, 1), 4)
    ls = AnalyticLevelSet(lambda p: np.ones(len(p)), lambda p: np.zeros_like(p))
    topo = classify_elements(mesh, ls)
    assert topo.n_cut == 0
    assert np.all(topo.element_class == 1)
    assert np.all(topo.edge_class == EDGE_UNCUT)


def test_multi_crossing_edge_raises():
    # a circle dipping into an edge between two outside endpoints
    mesh = build_uniform_mesh((0, 0, 1, 1), 1)
    ls = CircleLevelSet((0.5, 0.0), 0.2, positive_side=1)
    with pytest.raises(AssumptionViolation):
        classify_elements(mesh, ls)


def test_area_partition_straight_cut():
    mesh = build_uniform_mesh((0, 0, 1, 1), 8)
    ls = HorizontalLineLevelSet(0.2031, positive_side=1)
    topo = classify_elements(mesh, ls)
    assert topo.n_cut > 0
    for t, cut in topo.cut_elements.items():
        total = 0.0
        for poly in cut.pieces.values():
            x, y = poly[:, 0], poly[:, 1]
            total += 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert total == pytest.approx(mesh.area, rel=1e-12)


@pytest.mark.parametrize("delta_frac", [0.0, 1e-3, 1e-6, 0.5])
def test_translation_sweep_never_crashes(delta_frac):
    mesh = build_uniform_mesh((0, 0, 1, 1), 8)
    h_line = 1.0 / 8.0
    ls = HorizontalLineLevelSet(0.25 + delta_frac * h_line, positive_side=1)
    topo = classify_elements(mesh, ls)
    for t, cut in topo.cut_elements.items():
        total = sum(
            0.5 * abs(np.dot(p[:, 0], np.roll(p[:, 1], -1))
                      - np.dot(p[:, 1], np.roll(p[:, 0], -1)))
            for p in cut.pieces.values())
        assert total == pytest.approx(mesh.area, rel=1e-12)


def test_classification_deterministic():
    mesh = build_uniform_mesh((0, 0, 1, 1), 16)
    ls = CircleLevelSet(CENTER, R0, positive_side=1)
    t1 = classify_elements(mesh, ls)
    t2 = classify_elements(mesh, ls)
    assert np.array_equal(t1.element_class, t2.element_class)
    assert np.array_equal(t1.edge_class, t2.edge_class)
    for e in t1.edge_points:
        assert np.array_equal(t1.edge_points[e], t2.edge_points[e])
    for t in t1.cut_elements:
        for s in t1.cut_elements[t].pieces:
            assert np.array_equal(t1.cut_elements[t].pieces[s],
                                  t2.cut_elements[t].pieces[s])


def test_cut_elements_have_two_points_and_sides():
    mesh = build_uniform_mesh((0, 0, 1, 1), 16)
    ls = CircleLevelSet(CENTER, R0, positive_side=1)
    topo = classify_elements(mesh, ls)
    for t, cut in topo.cut_elements.items():
        assert cut.points.shape == (2, 2)
        assert set(cut.pieces) == {1, 2}
        for p in cut.points:
            assert abs(float(ls(p[None, :])[0])) < 1e-10


# ---------------------------------------------------------------------------
# edge intersection
# ---------------------------------------------------------------------------

def test_edge_intersection_linear_exact():
    b0 = 0.2031
    ls = HorizontalLineLevelSet(b0)
    x = edge_intersection(ls, (0.25, 0.0), (0.25, 1.0), tol=1e-14)
    assert x[0] == pytest.approx(0.25, abs=1e-15)
    assert x[1] == pytest.approx(b0, abs=1e-13)


def test_edge_intersection_circle_symmetry():
    ls = CircleLevelSet(CENTER, R0)
    x = edge_intersection(ls, (0.5, 0.5), (1.0, 0.5), tol=1e-14)
    assert x[1] == pytest.approx(0.5, abs=1e-15)
    assert x[0] == pytest.approx(0.5 + R0, abs=1e-13)


def test_edge_intersection_circle_generic_edge():
    # oracle: closed-form root of |p0 + t d - c|^2 = r0^2 on a 1/16-mesh edge
    ls = CircleLevelSet(CENTER, R0)
    p0 = np.array([0.5625, 0.6875])
    p1 = np.array([0.625, 0.6875])
    assert float(ls(p0[None])[0]) * float(ls(p1[None])[0]) < 0
    d = p1 - p0
    c = np.array(CENTER)
    A = d @ d
    B = 2.0 * (p0 - c) @ d
    C = (p0 - c) @ (p0 - c) - R0**2
    roots = np.roots([A, B, C])
    t_exact = min(r.real for r in roots if 0 <= r.real <= 1 and abs(r.imag) < 1e-14)
    expected = p0 + t_exact * d
    got = edge_intersection(ls, p0, p1, tol=1e-15)
    assert np.linalg.norm(got - expected) < 1e-13


def test_edge_intersection_requires_sign_change():
    ls = HorizontalLineLevelSet(0.5)
    with pytest.raises(ValueError):
        edge_intersection(ls, (0.0, 0.6), (1.0, 0.7), tol=1e-14)


# ---------------------------------------------------------------------------
# interface normals
# ---------------------------------------------------------------------------

def test_normal_circle_points_inward():
    # subdomain 2 is the disk interior, so the normal points toward the center
    ls = CircleLevelSet(CENTER, R0, positive_side=1)
    n = interface_normal(ls, np.array([[0.5 + R0, 0.5]]))[0]
    assert np.allclose(n, [-1.0, 0.0], atol=1e-14)


def test_normal_line_points_into_lower_side():
    ls = HorizontalLineLevelSet(0.2031, positive_side=1)   # side 1 above
    n = interface_normal(ls, np.array([[0.3, 0.2031]]))[0]
    assert np.allclose(n, [0.0, -1.0], atol=1e-14)


def test_normal_diamond_facet_matches_quartic_gradient():
    # oracle: hand-differentiated quartic product of the four facet lines
    a0 = np.sqrt(3.0) / 4.0
    ls = DiamondLevelSet((1.0, 1.0), 1.0 - a0, positive_side=1)
    m = np.array([(1.0 + a0) / 2.0, (1.0 + a0) / 2.0])  # lower-left facet midpoint
    assert abs(float(ls(m[None])[0])) < 1e-14

    # f1 = y + x - 1 - a0 vanishes on this facet; grad(product) = (f2 f3 f4) grad(f1)
    x, y = m
    f2 = y - (x - 1 + a0)
    f3 = y - (-x - a0 + 3)
    f4 = y - (x + 1 - a0)
    grad_quartic = f2 * f3 * f4 * np.array([1.0, 1.0])
    grad_quartic /= np.linalg.norm(grad_quartic)

    n = interface_normal(ls, m[None])[0]
    # n points into subdomain 2 (the inside); the quartic is positive inside,
    # so its gradient on the facet also points inward
    assert np.allclose(n, grad_quartic, atol=1e-14)
    assert np.allclose(n, [1.0, 1.0] / np.sqrt(2.0), atol=1e-14)


def test_zero_vertex_cut_element_decomposition():
    # interface passing exactly through a vertex: snapped sign = 0, the
    # element still decomposes into two pieces with the vertex as one point
    mesh = build_uniform_mesh((0, 0, 1, 1), 2)
    ls = AnalyticLevelSet(lambda p: p[:, 0] - p[:, 1] - 1e-16,
                          lambda p: np.tile([1.0, -1.0], (len(p), 1)))
    topo = classify_elements(mesh, ls)
    for t, cut in topo.cut_elements.items():
        total = sum(
            0.5 * abs(np.dot(p[:, 0], np.roll(p[:, 1], -1))
                      - np.dot(p[:, 1], np.roll(p[:, 0], -1)))
            for p in cut.pieces.values())
        assert total == pytest.approx(mesh.area, rel=1e-12)
