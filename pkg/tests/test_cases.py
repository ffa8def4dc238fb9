import numpy as np
import pytest

from xhdg.cases import (case_by_name, example_circle_homogeneous,
                        example_circle_nonhomogeneous, example_polygon,
                        example_segment, manufactured_uncut, patch_polynomial)
from xhdg.geometry import interface_normal

R0 = np.sqrt(3.0) / 8.0
A0 = np.sqrt(3.0) / 4.0


def fd_laplacian(case, side, pts, h=1e-3):
    """Fourth-order five-point finite-difference Laplacian oracle."""
    total = np.zeros(len(pts))
    for c in range(2):
        d = np.zeros(2)
        d[c] = h
        total += (-case.u(side, pts + 2 * d) + 16 * case.u(side, pts + d)
                  - 30 * case.u(side, pts)
                  + 16 * case.u(side, pts - d) - case.u(side, pts - 2 * d)) / (12 * h**2)
    return total


def sample_interior(case, side, n=200, seed=11):
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = case.domain
    pts = rng.uniform((x0, y0), (x1, y1), size=(8 * n, 2))
    pts = pts[case.levelset.side_at(pts) == side][:n]
    # keep clear of the interface so finite differences stay one-sided
    phi = np.abs(case.levelset(pts))
    return pts[phi > 2e-2]


def circle_points(n=20):
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([0.5 + R0 * np.cos(theta), 0.5 + R0 * np.sin(theta)])


ALL_CASES = [
    example_circle_homogeneous(10.0, 1.0),
    example_circle_homogeneous(1000.0, 1.0),
    example_circle_nonhomogeneous(),
    example_segment(1000.0, 1.0),
    example_segment(1.0, 1000.0),
    example_polygon(),
]


@pytest.mark.parametrize("case", ALL_CASES, ids=lambda c: c.name + str(c.alpha))
def test_pde_consistency(case):
    # -div(alpha grad u) = f, checked with the FD Laplacian oracle
    for side in (1, 2):
        pts = sample_interior(case, side)
        assert len(pts) > 50
        lap = fd_laplacian(case, side, pts)
        resid = -case.alpha_of(side) * lap - case.f(side, pts)
        scale = max(1.0, np.abs(case.f(side, pts)).max())
        assert np.abs(resid).max() < 1e-6 * scale


@pytest.mark.parametrize("case", ALL_CASES, ids=lambda c: c.name + str(c.alpha))
def test_gradient_consistency(case):
    for side in (1, 2):
        pts = sample_interior(case, side, n=100)
        h = 1e-6
        for c in range(2):
            d = np.zeros(2)
            d[c] = h
            fd = (case.u(side, pts + d) - case.u(side, pts - d)) / (2 * h)
            assert np.allclose(case.grad_u(side, pts)[:, c], fd, rtol=1e-6, atol=1e-8)


def interface_points(case, n=50):
    if case.name.startswith("circle"):
        return circle_points(n)
    if case.name == "segment":
        x = np.linspace(0.02, 0.98, n)
        return np.column_stack([x, np.full(n, 0.2031)])
    # diamond: sample the lower-left facet strictly between its corners
    t = np.linspace(0.05, 0.95, n)
    p0 = np.array([A0, 1.0])
    p1 = np.array([1.0, A0])
    return p0 + t[:, None] * (p1 - p0)


@pytest.mark.parametrize("case", ALL_CASES, ids=lambda c: c.name + str(c.alpha))
def test_jump_consistency(case):
    pts = interface_points(case)
    assert np.abs(case.levelset(pts)).max() < 1e-12
    gd = case.u(1, pts) - case.u(2, pts)
    assert np.allclose(case.g_D(pts), gd, atol=1e-12)
    n = interface_normal(case.levelset, pts)
    gn = (np.einsum("ij,ij->i", case.q(1, pts), n)
          - np.einsum("ij,ij->i", case.q(2, pts), n))
    assert np.allclose(case.g_N(pts), gn, atol=1e-10 * max(1.0, np.abs(gn).max()))


# ---------------------------------------------------------------------------
# individual cases
# ---------------------------------------------------------------------------

def test_circle_homogeneous_values():
    case = example_circle_homogeneous(10.0, 1.0)
    # u is continuous at the interface: both branches give r0^5 / alpha2
    pts = circle_points()
    u1, u2 = case.u(1, pts), case.u(2, pts)
    assert np.allclose(u1, R0**5 / 1.0, atol=1e-14)
    assert np.allclose(u2, R0**5 / 1.0, atol=1e-14)
    # radial Laplacian of r^5 in 2D is 25 r^3
    p = np.array([[0.6, 0.5]])
    assert case.f(1, p)[0] == pytest.approx(-25.0 * 0.1**3, rel=1e-12)
    # both jump data vanish identically
    assert np.abs(case.g_D(pts)).max() < 1e-12
    assert np.abs(case.g_N(pts)).max() < 1e-12


def test_circle_homogeneous_rejects_bad_alpha():
    with pytest.raises(ValueError):
        example_circle_homogeneous(-1.0, 1.0)


def test_circle_nonhomogeneous_values():
    case = example_circle_nonhomogeneous()
    pts = sample_interior(case, 2, n=50)
    assert np.allclose(case.f(2, pts), 0.0)              # harmonic inside
    p = np.array([[0.5, 0.5]])
    assert case.f(1, p)[0] == pytest.approx(2.0 * np.pi**2 * 1000.0, rel=1e-13)
    # branch difference at the rightmost interface point
    p = np.array([[0.5 + R0, 0.5]])
    expected = np.sin(np.pi * (0.5 + R0)) * np.sin(np.pi * 0.5) \
        - np.exp(0.5 + R0) * np.cos(0.5)
    assert case.g_D(p)[0] == pytest.approx(expected, rel=1e-13)


def test_segment_values():
    case = example_segment(1000.0, 1.0)
    # the 5 b0^4 terms cancel algebraically: the jump is exactly 1
    pts = interface_points(case)
    assert np.allclose(case.g_D(pts), 1.0, atol=1e-15)
    ys = np.array([[0.3, 0.7], [0.9, 0.5]])
    assert np.allclose(case.f(1, ys), -1000.0 * 60.0 * ys[:, 1] ** 2, rtol=1e-14)
    assert case.levelset.fold_line                        # modified scheme admissible


def test_polygon_values():
    case = example_polygon()
    p = np.array([[1.0, 1.0]])
    assert case.f(2, p)[0] == pytest.approx(-2.0 * np.exp(2.0), rel=1e-14)
    # level set vanishes on the diagonal facets, e.g. at (1, a0)
    assert abs(case.levelset(np.array([[1.0, A0]]))[0]) < 1e-14
    assert case.levelset.fold_line


def test_polygon_flux_jump_on_facet():
    # oracle: hand-derived directional derivative difference on one facet
    case = example_polygon()
    m = np.array([[(1.0 + A0) / 2.0, (1.0 + A0) / 2.0]])
    n = np.array([1.0, 1.0]) / np.sqrt(2.0)      # into the diamond
    x = y = (1.0 + A0) / 2.0
    grad1 = np.array([np.cos(x + y) + 2 * x * y**2, np.cos(x + y) + 2 * x**2 * y])
    grad2 = np.exp(x + y) * np.array([1.0, 1.0])
    expected = 1000.0 * grad1 @ n - 1.0 * grad2 @ n
    assert case.g_N(m)[0] == pytest.approx(expected, rel=1e-13)


def test_manufactured_uncut_has_no_interface():
    case = manufactured_uncut(2.0)
    pts = np.random.default_rng(0).uniform(0, 1, size=(100, 2))
    assert np.all(case.levelset.side_at(pts) == 1)
    assert np.allclose(case.g_D(pts), 0.0)


def test_patch_polynomial_consistency():
    for k in (1, 2, 3):
        case = patch_polynomial(k)
        pts = sample_interior(case, 1, n=100)
        lap = fd_laplacian(case, 1, pts)
        assert np.allclose(-case.alpha_of(1) * lap, case.f(1, pts),
                           rtol=1e-6, atol=1e-6)
        ipts = np.column_stack([np.linspace(0.1, 0.9, 20), np.full(20, 0.4031)])
        assert np.abs(case.g_D(ipts)).max() < 1e-13
        assert np.abs(case.g_N(ipts)).max() < 1e-13


def test_case_by_name_dispatch():
    assert case_by_name("circle-homog", 10, 1).name == "circle-homog"
    assert case_by_name("circle-jump").alpha == (1000.0, 1.0)
    assert case_by_name("segment", 1, 1000).alpha == (1.0, 1000.0)
    assert case_by_name("polygon").domain == (0.0, 0.0, 2.0, 2.0)
    assert case_by_name("manufactured-uncut", 3.0).alpha == (3.0, 3.0)
    with pytest.raises(ValueError):
        case_by_name("nope")
