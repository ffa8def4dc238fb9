"""Polynomial bases, L2 projections, and degree-of-freedom layout.

Element bases are scaled monomials orthonormalized against the quadrature
rule of their own (possibly cut) piece, which keeps local elimination
well-conditioned even for sliver cuts.  Edge traces are orthonormal Legendre
polynomials in arc length on the (sub-)segment.  Interface traces restrict
the element's 2D monomials to the interface segment and orthonormalize with
a rank-revealing drop tolerance, so curved segments may carry more than
degree+1 functions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import legvander

from .errors import InfeasibleConstraint, RankDeficiency, SingularMass
from .geometry import CutTopology, StructuredMesh, EDGE_CUT, EDGE_ON_INTERFACE
from .quadrature import QuadRule, interface_edge_rule, interface_rule

__all__ = [
    "poly_space_dim",
    "PolyBasis",
    "SegmentBasis",
    "InterfaceTraceBasis",
    "element_basis",
    "interface_trace_basis",
    "l2_project_cell",
    "l2_project_edge",
    "jump_lift",
    "EdgeBlock",
    "InterfaceSegment",
    "DofMap",
    "build_dofmap",
]

# relative eigenvalue floors for the orthonormalization
VOLUME_DROP_TOL = 1e-13
INTERFACE_DROP_TOL = 1e-8


def poly_space_dim(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> np.ndarray:
    return np.array([(i, t - i) for t in range(degree + 1) for i in range(t, -1, -1)],
                    dtype=np.int64)


def _power_table(z: np.ndarray, pmax: int) -> np.ndarray:
    out = np.ones((pmax + 1, len(z)))
    for p in range(1, pmax + 1):
        out[p] = out[p - 1] * z
    return out


class PolyBasis:
    """Linear combinations of scaled monomials ((x-c)/s)^a ((y-c)/s)^b."""

    def __init__(self, degree: int, center, scale: float, coeff: np.ndarray):
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.coeff = coeff
        self.exps = monomial_exponents(degree)

    @property
    def dim(self) -> int:
        return self.coeff.shape[0]

    def monomial_values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        px = _power_table((pts[:, 0] - self.center[0]) / self.scale, self.degree)
        py = _power_table((pts[:, 1] - self.center[1]) / self.scale, self.degree)
        return px[self.exps[:, 0]] * py[self.exps[:, 1]]

    def values(self, pts: np.ndarray) -> np.ndarray:
        return self.coeff @ self.monomial_values(pts)

    def gradients(self, pts: np.ndarray) -> np.ndarray:
        """Return (dim, npts, 2) array of basis gradients."""
        pts = np.atleast_2d(pts)
        px = _power_table((pts[:, 0] - self.center[0]) / self.scale, self.degree)
        py = _power_table((pts[:, 1] - self.center[1]) / self.scale, self.degree)
        a, b = self.exps[:, 0], self.exps[:, 1]
        dx = np.where(a[:, None] > 0,
                      a[:, None] * px[np.maximum(a - 1, 0)] * py[b], 0.0) / self.scale
        dy = np.where(b[:, None] > 0,
                      b[:, None] * px[a] * py[np.maximum(b - 1, 0)], 0.0) / self.scale
        return np.stack([self.coeff @ dx, self.coeff @ dy], axis=-1)


def _orthonormal_coeff(mono_vals: np.ndarray, weights: np.ndarray, drop_tol: float):
    """Eigen-orthonormalize rows of ``mono_vals`` under the quadrature inner
    product, dropping directions below ``drop_tol`` relative."""
    gram = (mono_vals * weights) @ mono_vals.T
    gram = 0.5 * (gram + gram.T)
    vals, vecs = np.linalg.eigh(gram)
    lam_max = vals[-1]
    if not np.isfinite(lam_max) or lam_max <= 0.0:
        raise SingularMass("piece mass matrix is not positive definite")
    keep = vals > drop_tol * lam_max
    vals, vecs = vals[keep][::-1], vecs[:, keep][:, ::-1]
    return (vecs / np.sqrt(vals)).T, vals


def element_basis(degree: int, rule: QuadRule, center, scale: float,
                  drop_tol: float = VOLUME_DROP_TOL) -> PolyBasis:
    """Orthonormal P_degree basis over the support described by ``rule``."""
    proto = PolyBasis(degree, center, scale, np.eye(poly_space_dim(degree)))
    coeff, _ = _orthonormal_coeff(proto.monomial_values(rule.points),
                                  rule.weights, drop_tol)
    return PolyBasis(degree, center, scale, coeff)


class SegmentBasis:
    """Orthonormal Legendre basis in arc length on the segment [p0, p1]."""

    def __init__(self, p0, p1, degree: int):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.degree = degree
        self.length = float(np.linalg.norm(self.p1 - self.p0))

    @property
    def dim(self) -> int:
        return self.degree + 1

    def _param(self, pts: np.ndarray) -> np.ndarray:
        d = self.p1 - self.p0
        return (np.atleast_2d(pts) - self.p0) @ d / (self.length ** 2)

    def values(self, pts: np.ndarray) -> np.ndarray:
        t = self._param(pts)
        vander = legvander(2.0 * t - 1.0, self.degree)
        norms = np.sqrt((2.0 * np.arange(self.degree + 1) + 1.0) / self.length)
        return (vander * norms).T


class InterfaceTraceBasis:
    """Restrictions of element polynomials to an interface segment.

    The effective rank is the number of Gram singular values above the drop
    tolerance: degree+1 for straight segments and possibly more for curved
    ones.  ``deficient`` flags a rank below the straight-segment count.
    """

    def __init__(self, basis: PolyBasis, endpoints: np.ndarray, expected_rank: int):
        self.basis = basis
        self.endpoints = endpoints
        self.expected_rank = expected_rank

    @property
    def rank(self) -> int:
        return self.basis.dim

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def deficient(self) -> bool:
        return self.rank < self.expected_rank

    def values(self, pts: np.ndarray) -> np.ndarray:
        return self.basis.values(pts)


def interface_trace_basis(rule: QuadRule, degree: int, center, scale: float,
                          endpoints, drop_tol: float = INTERFACE_DROP_TOL
                          ) -> InterfaceTraceBasis:
    """Orthonormalize restricted monomials on an interface segment rule.

    A rank below degree+1 (the straight-segment count) is flagged with a
    RankDeficiency warning but is not fatal.
    """
    proto = PolyBasis(degree, center, scale, np.eye(poly_space_dim(degree)))
    coeff, _ = _orthonormal_coeff(proto.monomial_values(rule.points),
                                  rule.weights, drop_tol)
    basis = PolyBasis(degree, center, scale, coeff)
    itb = InterfaceTraceBasis(basis, np.asarray(endpoints, dtype=float), degree + 1)
    if itb.deficient:
        warnings.warn(RankDeficiency(
            f"interface trace rank {itb.rank} below {itb.expected_rank}"))
    return itb


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def l2_project_cell(f, rule: QuadRule, basis: PolyBasis) -> np.ndarray:
    """Coefficients of the L2 projection of ``f`` onto an orthonormal basis."""
    fv = np.asarray(f(rule.points), dtype=float)
    return basis.values(rule.points) @ (rule.weights * fv)


def l2_project_edge(g, rule: QuadRule, basis) -> np.ndarray:
    gv = np.asarray(g(rule.points), dtype=float)
    return basis.values(rule.points) @ (rule.weights * gv)


def jump_lift(g_D, rule: QuadRule, trace_basis, test_basis=None,
              strict: bool = False, strict_tol: float = 1e-8):
    """Lift of the potential jump into the interface trace basis.

    Returns ``(coeffs, residual)`` where ``residual`` is the largest moment
    of ``g_D - lift`` against ``test_basis`` (the degree-k space the jump
    condition is formally tested against).  With the modified scheme the
    trace degree is k-1, so a nonzero residual measures the part of the jump
    data the reduced space cannot carry; ``strict=True`` makes that fatal.
    """
    gv = np.asarray(g_D(rule.points), dtype=float)
    coeffs = trace_basis.values(rule.points) @ (rule.weights * gv)
    residual = 0.0
    if test_basis is not None:
        lift_vals = coeffs @ trace_basis.values(rule.points)
        moments = test_basis.values(rule.points) @ (rule.weights * (gv - lift_vals))
        residual = float(np.max(np.abs(moments))) if len(moments) else 0.0
        if strict and residual > strict_tol * max(1.0, float(np.max(np.abs(gv)))):
            raise InfeasibleConstraint(
                f"jump data has degree-k content {residual:.3e} beyond the trace space"
            )
    return coeffs, residual


# ---------------------------------------------------------------------------
# dof layout
# ---------------------------------------------------------------------------

@dataclass
class EdgeBlock:
    """Trace dofs of one side piece of a mesh edge."""

    edge: int
    side: int
    basis: SegmentBasis
    offset: int          # -1 for Dirichlet-fixed blocks
    size: int
    dirichlet: bool


@dataclass
class InterfaceSegment:
    """Double-valued trace dofs on one interface segment.

    Only the Omega_2 copy is free; the Omega_1 copy is slaved to it through
    the jump lift.  ``key`` is ('chord', element) or ('edge', edge).
    """

    key: tuple
    basis: InterfaceTraceBasis
    offset: int
    size: int


@dataclass
class DofMap:
    """Global layout of trace unknowns for one scheme and order."""

    scheme: str
    k: int
    trace_degree: int
    edge_blocks: list
    edge_block_ids: dict          # edge -> {side: index into edge_blocks}
    segments: list
    segment_ids: dict             # key -> index into segments
    n_trace: int                  # free (condensed-system) dofs
    n_interior: int               # nominal interior dofs over all elements
    n_dirichlet: int

    def blocks_of_edge(self, edge: int) -> dict:
        return self.edge_block_ids.get(edge, {})


def build_dofmap(mesh: StructuredMesh, topo: CutTopology, k: int, scheme: str,
                 geo_tol: float = 1e-10) -> DofMap:
    """Number the trace unknowns for the chosen scheme.

    Edge traces use degree k (standard) or k-1 (modified); every interface
    segment allocates one free trace copy at the effective basis rank.
    """
    if scheme not in ("standard", "modified"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if k < 1:
        raise ValueError("polynomial order k must be >= 1")
    trace_degree = k if scheme == "standard" else k - 1

    edge_blocks: list[EdgeBlock] = []
    edge_block_ids: dict[int, dict[int, int]] = {}
    offset = 0
    n_dirichlet = 0
    for e in range(mesh.n_edges):
        cls = topo.edge_class[e]
        if cls == EDGE_ON_INTERFACE:
            continue
        dirichlet = mesh.is_boundary_edge(e)
        va, vb = mesh.edges[e]
        pa, pb = mesh.vertices[va], mesh.vertices[vb]
        if cls == EDGE_CUT:
            x = topo.edge_points[e]
            sa = int(topo.levelset.side_of_sign(np.sign(topo.levelset(pa[None, :])))[0])
            sides = [(sa, pa, x), (3 - sa, x, pb)]
        else:
            sides = [(int(topo.edge_side[e]), pa, pb)]
        edge_block_ids[e] = {}
        for side, p0, p1 in sides:
            basis = SegmentBasis(p0, p1, trace_degree)
            size = basis.dim
            if dirichlet:
                blk = EdgeBlock(e, side, basis, -1, size, True)
                n_dirichlet += size
            else:
                blk = EdgeBlock(e, side, basis, offset, size, False)
                offset += size
            edge_block_ids[e][side] = len(edge_blocks)
            edge_blocks.append(blk)

    segments: list[InterfaceSegment] = []
    segment_ids: dict[tuple, int] = {}
    gram_degree = 2 * k + 2
    for t in sorted(topo.cut_elements):
        cut = topo.cut_elements[t]
        rule = interface_rule(topo, t, gram_degree, geo_tol)
        center = mesh.triangle_coords(t).mean(axis=0)
        itb = interface_trace_basis(rule, trace_degree, center, mesh.h, cut.points)
        key = ("chord", int(t))
        segment_ids[key] = len(segments)
        segments.append(InterfaceSegment(key, itb, offset, itb.rank))
        offset += itb.rank
    for e in topo.interface_edges:
        rule = interface_edge_rule(topo, e, gram_degree)
        va, vb = mesh.edges[e]
        pa, pb = mesh.vertices[va], mesh.vertices[vb]
        center = 0.5 * (pa + pb)
        itb = interface_trace_basis(rule, trace_degree, center, mesh.h,
                                    np.array([pa, pb]))
        key = ("edge", int(e))
        segment_ids[key] = len(segments)
        segments.append(InterfaceSegment(key, itb, offset, itb.rank))
        offset += itb.rank

    nq = poly_space_dim(k - 1)
    nu = poly_space_dim(k)
    per_piece = 2 * nq + nu
    n_pieces = mesh.n_triangles + len(topo.cut_elements)
    return DofMap(
        scheme=scheme,
        k=k,
        trace_degree=trace_degree,
        edge_blocks=edge_blocks,
        edge_block_ids=edge_block_ids,
        segments=segments,
        segment_ids=segment_ids,
        n_trace=offset,
        n_interior=per_piece * n_pieces,
        n_dirichlet=n_dirichlet,
    )
