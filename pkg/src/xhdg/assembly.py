"""Element-local X-HDG systems, static condensation, and global assembly.

Per element, the first-order system couples interior flux/potential
unknowns (q, u) to edge traces and double-valued interface traces.  The
interior block is arranged symmetrically (flux rows negated), so the Schur
complement onto the traces is symmetric positive semidefinite; the global
condensed matrix becomes positive definite once Dirichlet dofs are
eliminated.  Dirichlet values and interface jumps are imposed by dof
substitution: a constrained local dof contributes its lift to the
right-hand side and, for jump-slaved interface copies, aliases the free
copy's columns.

Stabilization enters in projected form: each face pairing contracts the
potential against the face's orthonormal trace basis, which reproduces the
standard scheme exactly (a polynomial's restriction to a face lies in the
face trace space) and realizes the modified scheme's edge projection when
the trace degree is k-1.

Uncut elements of a uniform mesh are translates of two reference triangles,
so their condensed blocks are computed once per (orientation, side) and
scattered vectorized; only cut elements, interface-adjacent elements, and
Dirichlet-touching elements are assembled individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .cases import ProblemCase
from .errors import SingularInterior
from .geometry import CUT, EDGE_ON_INTERFACE, CutTopology
from .quadrature import (QuadRule, cut_volume_rule, interface_edge_rule,
                         interface_rule, map_to_segment, map_to_triangle,
                         segment_rule, triangle_rule)
from .spaces import (DofMap, PolyBasis, element_basis, interface_trace_basis,
                     jump_lift, l2_project_edge)

__all__ = [
    "stabilization_value",
    "PieceData",
    "LocalSystem",
    "CondensedBlock",
    "CondensedSystem",
    "InteriorSolution",
    "element_state",
    "local_system",
    "condense",
    "assemble_global",
    "recover_interior",
]


def stabilization_value(alpha_i: float, h_K: float) -> float:
    """Face stabilization weight alpha_i / h_K (the same formula serves tau
    on element edges and eta on interface segments)."""
    return alpha_i / h_K


# ---------------------------------------------------------------------------
# local systems
# ---------------------------------------------------------------------------

@dataclass
class PieceData:
    """One solution piece of an element: a subdomain side with rule and bases."""

    side: int
    rule: QuadRule
    u_basis: PolyBasis
    q_basis: PolyBasis
    q_slice: slice = field(default=slice(0, 0))   # into the full [q; u] vector
    u_slice: slice = field(default=slice(0, 0))   # into the full [q; u] vector
    u_rel: slice = field(default=slice(0, 0))     # into the potential block alone

    @property
    def nq(self) -> int:
        return self.q_basis.dim

    @property
    def nu(self) -> int:
        return self.u_basis.dim


@dataclass
class LocalTraceBlock:
    """A local trace block and the dofmap entity it couples to.

    ``key`` is ('edge', edge_block_index) or ('iface', segment_index, side).
    """

    key: tuple
    sl: slice

    @property
    def size(self) -> int:
        return self.sl.stop - self.sl.start


@dataclass
class LocalSystem:
    """Blocks of the element-local X-HDG equations."""

    element: int
    pieces: list
    blocks: list
    M_int: np.ndarray       # [[-A, -B], [-B^T, D]]
    K: np.ndarray           # [-G_q; G_u]
    H: np.ndarray
    F_int: np.ndarray
    F_tr: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    Gq: np.ndarray
    Gu: np.ndarray

    @property
    def n_int(self) -> int:
        return self.M_int.shape[0]

    @property
    def n_tr(self) -> int:
        return self.H.shape[0]


def _piece_layout(pieces: list) -> tuple[int, int]:
    """Assign slices: all flux dofs first (x then y per piece), then all
    potential dofs."""
    nq_tot = sum(2 * p.nq for p in pieces)
    off = 0
    for p in pieces:
        p.q_slice = slice(off, off + 2 * p.nq)
        off += 2 * p.nq
    off = nq_tot
    for p in pieces:
        p.u_slice = slice(off, off + p.nu)
        p.u_rel = slice(off - nq_tot, off - nq_tot + p.nu)
        off += p.nu
    return nq_tot, off - nq_tot


def _make_pieces(mesh, topo, element, k, geo_tol):
    vol_degree = 2 * k + 2
    center = mesh.triangle_coords(element).mean(axis=0)
    cls = int(topo.element_class[element])
    sides = sorted(topo.cut_elements[element].pieces) if cls == CUT else [cls]
    pieces = []
    for side in sides:
        if cls == CUT:
            rule = cut_volume_rule(topo, element, side, vol_degree, geo_tol)
        else:
            rule = map_to_triangle(triangle_rule(vol_degree), mesh.triangle_coords(element))
        pieces.append(PieceData(
            side=side,
            rule=rule,
            u_basis=element_basis(k, rule, center, mesh.h),
            q_basis=element_basis(k - 1, rule, center, mesh.h),
        ))
    return pieces


def local_system(mesh, topo: CutTopology, dofmap: DofMap, element: int,
                 case: ProblemCase, geo_tol: float = 1e-10) -> LocalSystem:
    """Build the local blocks of the X-HDG equations on one element."""
    k = dofmap.k
    h = mesh.h
    edge_degree = 2 * k + 1
    pieces = _make_pieces(mesh, topo, element, k, geo_tol)
    nq_tot, nu_tot = _piece_layout(pieces)
    piece_of_side = {p.side: p for p in pieces}

    A = np.zeros((nq_tot, nq_tot))
    B = np.zeros((nq_tot, nu_tot))
    D = np.zeros((nu_tot, nu_tot))
    F_f = np.zeros(nu_tot)

    for p in pieces:
        w = p.rule.weights
        qv = p.q_basis.values(p.rule.points)
        uv = p.u_basis.values(p.rule.points)
        qg = p.q_basis.gradients(p.rule.points)
        gram = (qv * w) @ qv.T / case.alpha_of(p.side)
        q0, nq = p.q_slice.start, p.nq
        A[q0:q0 + nq, q0:q0 + nq] = gram
        A[q0 + nq:q0 + 2 * nq, q0 + nq:q0 + 2 * nq] = gram
        B[q0:q0 + nq, p.u_rel] = (qg[:, :, 0] * w) @ uv.T
        B[q0 + nq:q0 + 2 * nq, p.u_rel] = (qg[:, :, 1] * w) @ uv.T
        F_f[p.u_rel] = uv @ (w * case.f(p.side, p.rule.points))

    blocks: list[LocalTraceBlock] = []
    face_data = []  # per block: (piece, R_u, R_qx, R_qy, tau, load or None)
    n_tr = 0

    cut = topo.cut_elements.get(element)
    for le in range(3):
        e = int(mesh.tri_edges[element, le])
        if topo.edge_class[e] == EDGE_ON_INTERFACE:
            continue
        epieces = (cut.edge_pieces[le] if cut is not None
                   else [(int(topo.element_class[element]), None, None)])
        n_out = mesh.outward_normal(element, le)
        for side, _, _ in epieces:
            bid = dofmap.edge_block_ids[e][side]
            blk = dofmap.edge_blocks[bid]
            rule = map_to_segment(segment_rule(edge_degree), blk.basis.p0, blk.basis.p1)
            tb = blk.basis.values(rule.points)
            p = piece_of_side[side]
            tau = stabilization_value(case.alpha_of(side), h)
            normals = np.broadcast_to(n_out, (len(rule), 2))
            face_data.append(_face_pairings(p, rule, tb, tau, normals, None))
            blocks.append(LocalTraceBlock(("edge", bid), slice(n_tr, n_tr + blk.size)))
            n_tr += blk.size

    iface_faces = []
    if cut is not None:
        iface_faces.append((interface_rule(topo, element, edge_degree, geo_tol),
                            dofmap.segment_ids[("chord", element)], (1, 2)))
    else:
        for le in range(3):
            e = int(mesh.tri_edges[element, le])
            if topo.edge_class[e] == EDGE_ON_INTERFACE:
                iface_faces.append((interface_edge_rule(topo, e, edge_degree),
                                    dofmap.segment_ids[("edge", e)],
                                    (int(topo.element_class[element]),)))

    for rule, seg_idx, sides in iface_faces:
        seg = dofmap.segments[seg_idx]
        tb = seg.basis.values(rule.points)
        # the flux-jump datum splits evenly between the two trace copies:
        # constrained tests are single-valued, and both copies accumulate
        # into the same free dof, so the assembled load is <g_N, mu>_Gamma
        load = 0.5 * tb @ (rule.weights * case.g_N(rule.points))
        for side in sides:
            p = piece_of_side[side]
            eta = stabilization_value(case.alpha_of(side), h)
            sgn = 1.0 if side == 1 else -1.0
            face_data.append(_face_pairings(p, rule, tb, eta, sgn * rule.normals, load))
            blocks.append(LocalTraceBlock(("iface", seg_idx, side),
                                          slice(n_tr, n_tr + seg.size)))
            n_tr += seg.size

    Gq = np.zeros((nq_tot, n_tr))
    Gu = np.zeros((nu_tot, n_tr))
    H = np.zeros((n_tr, n_tr))
    F_tr = np.zeros(n_tr)
    for blk, (p, R_u, R_qx, R_qy, tau, load) in zip(blocks, face_data):
        q0, nq = p.q_slice.start, p.nq
        Gq[q0:q0 + nq, blk.sl] = -R_qx.T
        Gq[q0 + nq:q0 + 2 * nq, blk.sl] = -R_qy.T
        Gu[p.u_rel, blk.sl] += -tau * R_u.T
        D[p.u_rel, p.u_rel] += tau * (R_u.T @ R_u)
        H[blk.sl, blk.sl] += tau * np.eye(blk.size)
        if load is not None:
            F_tr[blk.sl] += load

    n_int = nq_tot + nu_tot
    M_int = np.zeros((n_int, n_int))
    M_int[:nq_tot, :nq_tot] = -A
    M_int[:nq_tot, nq_tot:] = -B
    M_int[nq_tot:, :nq_tot] = -B.T
    M_int[nq_tot:, nq_tot:] = D
    K = np.vstack([-Gq, Gu])
    F_int = np.concatenate([np.zeros(nq_tot), F_f])

    return LocalSystem(element=element, pieces=pieces, blocks=blocks,
                       M_int=M_int, K=K, H=H, F_int=F_int, F_tr=F_tr,
                       A=A, B=B, D=D, Gq=Gq, Gu=Gu)


def _face_pairings(p: PieceData, rule: QuadRule, tb: np.ndarray, tau: float,
                   normals: np.ndarray, load):
    """Moment matrices of one face-side against the face trace basis."""
    w = rule.weights
    uv = p.u_basis.values(rule.points)
    qv = p.q_basis.values(rule.points)
    R_u = (tb * w) @ uv.T
    R_qx = (tb * (w * normals[:, 0])) @ qv.T
    R_qy = (tb * (w * normals[:, 1])) @ qv.T
    return p, R_u, R_qx, R_qy, tau, load


@dataclass
class CondensedBlock:
    """Trace Schur complement of one element plus its recovery state.

    ``F_tr`` holds only the trace loads (interface flux-jump moments), so
    the block can serve every translate of its element: the condensed
    right-hand side for a volume load ``F_f`` is ``condensed_rhs(F_f)``.
    """

    element: int
    S: np.ndarray
    F_tr: np.ndarray
    pieces: list
    blocks: list
    K: np.ndarray
    MinvK: np.ndarray         # M_int^{-1} K
    Minv_u: np.ndarray        # M_int^{-1} [0; I] (potential-load columns)
    n_int: int

    @property
    def nu_tot(self) -> int:
        return self.Minv_u.shape[1]

    def interior_solve(self, F_f: np.ndarray, trace_loc: np.ndarray) -> np.ndarray:
        return self.Minv_u @ F_f - self.MinvK @ trace_loc

    def condensed_rhs(self, F_f: np.ndarray) -> np.ndarray:
        return self.F_tr - self.MinvK[-self.nu_tot:, :].T @ F_f


def condense(ls: LocalSystem) -> CondensedBlock:
    """Eliminate (q, u): S = H - K^T M^{-1} K with a diagonally equilibrated
    pivoted factorization of the symmetric indefinite interior block."""
    M = ls.M_int
    d = np.abs(np.diag(M))
    scale = 1.0 / np.sqrt(np.where(d > 0, d, 1.0))
    Ms = scale[:, None] * M * scale[None, :]
    lu = sla.lu_factor(Ms, check_finite=False)
    piv = np.abs(np.diag(lu[0]))
    if not np.isfinite(piv).all() or piv.min() < 1e-14 * max(piv.max(), 1.0):
        raise SingularInterior(ls.element, float(piv.min()))

    def msolve(rhs):
        if rhs.ndim == 1:
            return scale * sla.lu_solve(lu, scale * rhs, check_finite=False)
        return scale[:, None] * sla.lu_solve(lu, scale[:, None] * rhs, check_finite=False)

    MinvK = msolve(ls.K)
    nq_tot = ls.A.shape[0]
    nu_tot = ls.M_int.shape[0] - nq_tot
    Minv_u = msolve(np.vstack([np.zeros((nq_tot, nu_tot)), np.eye(nu_tot)]))
    S = ls.H - ls.K.T @ MinvK
    S = 0.5 * (S + S.T)
    return CondensedBlock(element=ls.element, S=S, F_tr=ls.F_tr.copy(),
                          pieces=ls.pieces, blocks=ls.blocks, K=ls.K,
                          MinvK=MinvK, Minv_u=Minv_u, n_int=ls.M_int.shape[0])


# ---------------------------------------------------------------------------
# global assembly
# ---------------------------------------------------------------------------

@dataclass
class FastGroup:
    """Uncut interior elements sharing one condensed template."""

    orient: int
    side: int
    template: CondensedBlock
    rep_element: int
    rep_centroid: np.ndarray
    eids: np.ndarray
    cols: np.ndarray          # (ne, n_tr) global free dof ids
    F_f: np.ndarray           # (ne, nu) volume load moments


@dataclass
class LoopRecord:
    """Individually wired element (cut, boundary, or interface-adjacent)."""

    cb: CondensedBlock
    wiring: list              # per local block: (offset >= 0 or -1, lift or None)
    F_f: np.ndarray


@dataclass
class CondensedSystem:
    """Symmetric condensed trace system with recovery bookkeeping."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    mesh: object
    topo: CutTopology
    dofmap: DofMap
    case: ProblemCase
    geo_tol: float
    fast_groups: dict
    loop_records: dict
    templates: dict           # (orientation, side) -> CondensedBlock
    template_centroids: dict  # (orientation, side) -> representative centroid
    dirichlet_lifts: dict     # edge block index -> coefficients
    jump_lifts: dict          # segment index -> coefficients
    jump_residual: float      # modified scheme: degree-k content of g_D

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[0]

    @property
    def scheme(self) -> str:
        return self.dofmap.scheme

    @property
    def k(self) -> int:
        return self.dofmap.k


def _block_wiring(dofmap, blk_key, dirichlet_lifts, jump_lifts):
    """Resolve a local trace block to (global offset, additive lift)."""
    if blk_key[0] == "edge":
        blk = dofmap.edge_blocks[blk_key[1]]
        if blk.dirichlet:
            return -1, dirichlet_lifts[blk_key[1]]
        return blk.offset, None
    _, seg_idx, side = blk_key
    seg = dofmap.segments[seg_idx]
    if side == 1:  # slaved copy: u~_1 = u~_2 + lift(g_D)
        return seg.offset, jump_lifts[seg_idx]
    return seg.offset, None


def _scatter_loop(cb, wiring, rows, cols, vals, rhs, rhs_local):
    """Accumulate one element's condensed block under constraint wiring."""
    for bi, (off_i, _) in zip(cb.blocks, wiring):
        if off_i < 0:
            continue
        idx_i = np.arange(off_i, off_i + bi.size)
        acc = rhs_local[bi.sl].copy()
        for bj, (off_j, lift_j) in zip(cb.blocks, wiring):
            S_ij = cb.S[bi.sl, bj.sl]
            if lift_j is not None:
                acc -= S_ij @ lift_j
            if off_j >= 0:
                idx_j = np.arange(off_j, off_j + bj.size)
                rows.append(np.repeat(idx_i, bj.size))
                cols.append(np.tile(idx_j, bi.size))
                vals.append(S_ij.ravel())
        np.add.at(rhs, idx_i, acc)


def assemble_global(mesh, topo: CutTopology, dofmap: DofMap, case: ProblemCase,
                    geo_tol: float = 1e-10) -> CondensedSystem:
    """Condense every element and accumulate the global trace system."""
    k = dofmap.k
    lift_degree = 2 * k + 4

    dirichlet_lifts = {}
    for bid, blk in enumerate(dofmap.edge_blocks):
        if blk.dirichlet:
            rule = map_to_segment(segment_rule(lift_degree), blk.basis.p0, blk.basis.p1)
            dirichlet_lifts[bid] = l2_project_edge(case.g, rule, blk.basis)

    jump_lifts = {}
    jump_residual = 0.0
    for si, seg in enumerate(dofmap.segments):
        if seg.key[0] == "chord":
            rule = interface_rule(topo, seg.key[1], lift_degree, geo_tol)
            center = mesh.triangle_coords(seg.key[1]).mean(axis=0)
        else:
            rule = interface_edge_rule(topo, seg.key[1], lift_degree)
            va, vb = mesh.edges[seg.key[1]]
            center = 0.5 * (mesh.vertices[va] + mesh.vertices[vb])
        test_basis = None
        if dofmap.scheme == "modified":
            test_basis = interface_trace_basis(rule, k, center, mesh.h, seg.basis.endpoints)
        coeffs, res = jump_lift(case.g_D, rule, seg.basis, test_basis)
        jump_lifts[si] = coeffs
        jump_residual = max(jump_residual, res)

    # split elements into the vectorized template path and the loop path
    interface_elems = set()
    for e in topo.interface_edges:
        interface_elems.update(int(t) for t in mesh.edge_tris[e] if t >= 0)
    edge_dirichlet = np.array([mesh.is_boundary_edge(e) for e in range(mesh.n_edges)])
    elem_touches_dirichlet = edge_dirichlet[mesh.tri_edges].any(axis=1)

    fast_sets: dict[tuple, list] = {}
    tmpl_loop: dict[tuple, list] = {}
    full_loop: list[int] = []
    for t in range(mesh.n_triangles):
        cls = int(topo.element_class[t])
        if cls == CUT or t in interface_elems:
            full_loop.append(t)
            continue
        key = (t % 2, cls)
        if elem_touches_dirichlet[t]:
            tmpl_loop.setdefault(key, []).append(t)
        else:
            fast_sets.setdefault(key, []).append(t)

    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.n_trace)
    fast_groups: dict[tuple, FastGroup] = {}
    loop_records: dict[int, LoopRecord] = {}

    templates: dict[tuple, CondensedBlock] = {}
    rep_centroid: dict[tuple, np.ndarray] = {}
    for key in sorted(set(fast_sets) | set(tmpl_loop)):
        rep = (fast_sets.get(key) or tmpl_loop[key])[0]
        templates[key] = condense(local_system(mesh, topo, dofmap, rep, case, geo_tol))
        rep_centroid[key] = mesh.triangle_coords(rep).mean(axis=0)

    # vectorized path: identical Schur complements, per-element volume loads
    for key in sorted(fast_sets):
        eids = np.array(fast_sets[key], dtype=np.int64)
        tmpl = templates[key]
        F_f, cols_e = _fast_loads_and_cols(mesh, dofmap, case, tmpl, rep_centroid[key],
                                           key[1], eids)
        rhs_e = tmpl.F_tr[None, :] - F_f @ tmpl.MinvK[-tmpl.nu_tot:, :]
        ne, ntr = cols_e.shape
        rows.append(np.repeat(cols_e, ntr, axis=1).ravel())
        cols.append(np.tile(cols_e, (1, ntr)).ravel())
        vals.append(np.tile(tmpl.S.ravel(), ne))
        np.add.at(rhs, cols_e.ravel(), rhs_e.ravel())
        fast_groups[key] = FastGroup(orient=key[0], side=key[1], template=tmpl,
                                     rep_element=int(tmpl.element),
                                     rep_centroid=rep_centroid[key],
                                     eids=eids, cols=cols_e, F_f=F_f)

    # template loop path: shared matrices, individual Dirichlet wiring
    for key in sorted(tmpl_loop):
        tmpl = templates[key]
        for t in tmpl_loop[key]:
            F_f, wiring = _tmpl_element_data(mesh, topo, dofmap, case, tmpl,
                                             rep_centroid[key], key[1], t,
                                             dirichlet_lifts, jump_lifts)
            _scatter_loop(tmpl, wiring, rows, cols, vals, rhs, tmpl.condensed_rhs(F_f))
            loop_records[t] = LoopRecord(cb=tmpl, wiring=wiring, F_f=F_f)

    # full loop path: cut and interface-adjacent elements
    for t in full_loop:
        ls = local_system(mesh, topo, dofmap, t, case, geo_tol)
        cb = condense(ls)
        wiring = [_block_wiring(dofmap, b.key, dirichlet_lifts, jump_lifts)
                  for b in cb.blocks]
        F_f = ls.F_int[-cb.nu_tot:]
        _scatter_loop(cb, wiring, rows, cols, vals, rhs, cb.condensed_rhs(F_f))
        loop_records[t] = LoopRecord(cb=cb, wiring=wiring, F_f=F_f)

    n = dofmap.n_trace
    matrix = sp.coo_matrix(
        (np.concatenate(vals) if vals else np.zeros(0),
         (np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64),
          np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64))),
        shape=(n, n),
    ).tocsr()

    return CondensedSystem(matrix=matrix, rhs=rhs, mesh=mesh, topo=topo,
                           dofmap=dofmap, case=case, geo_tol=geo_tol,
                           fast_groups=fast_groups, loop_records=loop_records,
                           templates=templates, template_centroids=rep_centroid,
                           dirichlet_lifts=dirichlet_lifts, jump_lifts=jump_lifts,
                           jump_residual=jump_residual)


def _fast_loads_and_cols(mesh, dofmap, case, tmpl, rep_centroid, side, eids):
    """Volume load moments and free-dof columns for a batch of translates."""
    piece = tmpl.pieces[0]
    rep_pts = piece.rule.points
    uv = piece.u_basis.values(rep_pts)            # translation invariant
    w = piece.rule.weights
    deltas = mesh.centroids()[eids] - rep_centroid
    pts = rep_pts[None, :, :] + deltas[:, None, :]
    fv = case.f(side, pts.reshape(-1, 2)).reshape(len(eids), -1)
    F_f = (fv * w) @ uv.T

    size = dofmap.trace_degree + 1
    edge_off = np.full(mesh.n_edges, -1, dtype=np.int64)
    for e, sides in dofmap.edge_block_ids.items():
        if side in sides:
            edge_off[e] = dofmap.edge_blocks[sides[side]].offset
    offs = edge_off[mesh.tri_edges[eids]]          # (ne, 3)
    cols = offs[:, :, None] + np.arange(size)[None, None, :]
    return F_f, cols.reshape(len(eids), 3 * size)


def _tmpl_element_data(mesh, topo, dofmap, case, tmpl, rep_centroid, side, t,
                       dirichlet_lifts, jump_lifts):
    """Per-element load and wiring for an uncut element reusing a template."""
    piece = tmpl.pieces[0]
    delta = mesh.triangle_coords(t).mean(axis=0) - rep_centroid
    pts = piece.rule.points + delta
    uv = piece.u_basis.values(piece.rule.points)
    F_f = uv @ (piece.rule.weights * case.f(side, pts))
    wiring = []
    for le in range(3):
        e = int(mesh.tri_edges[t, le])
        bid = dofmap.edge_block_ids[e][side]
        wiring.append(_block_wiring(dofmap, ("edge", bid), dirichlet_lifts, jump_lifts))
    return F_f, wiring


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------

@dataclass
class InteriorSolution:
    """Element-wise interior coefficients recovered from a trace solution.

    ``grouped`` maps (orientation, side) to (eids, X) arrays covering all
    uncut elements; ``full`` maps the remaining element ids to their
    coefficient vectors and condensed blocks.  Grouped coefficients pair
    with the group template's bases (translated to each element).
    """

    trace: np.ndarray
    grouped: dict
    full: dict
    _index: dict = field(default=None, repr=False)

    def row_of(self, t: int):
        if self._index is None:
            index = {}
            for key, (eids, _) in self.grouped.items():
                for row, e in enumerate(eids):
                    index[int(e)] = (key, row)
            self._index = index
        return self._index.get(int(t))


def element_state(system: CondensedSystem, interior: InteriorSolution, t: int):
    """Pieces (bases and rule on element ``t``) and its coefficient vector.

    A translate of the template basis is exactly the element's own
    orthonormal basis, so re-centering the template's PolyBasis objects and
    shifting the rule points yields evaluators valid at physical points of
    element ``t``.
    """
    if t in interior.full:
        X, rec = interior.full[t]
        return rec.cb.pieces, X
    key, row = interior.row_of(t)
    tmpl = system.templates[key]
    _, Xg = interior.grouped[key]
    center = system.mesh.triangle_coords(t).mean(axis=0)
    delta = center - system.template_centroids[key]
    pieces = []
    for p in tmpl.pieces:
        u_b = PolyBasis(p.u_basis.degree, center, p.u_basis.scale, p.u_basis.coeff)
        q_b = PolyBasis(p.q_basis.degree, center, p.q_basis.scale, p.q_basis.coeff)
        rule = QuadRule(points=p.rule.points + delta, weights=p.rule.weights,
                        degree=p.rule.degree)
        clone = PieceData(side=p.side, rule=rule, u_basis=u_b, q_basis=q_b)
        clone.q_slice, clone.u_slice, clone.u_rel = p.q_slice, p.u_slice, p.u_rel
        pieces.append(clone)
    return pieces, Xg[row]


def gather_local_trace(cb: CondensedBlock, wiring, trace: np.ndarray) -> np.ndarray:
    lam = np.zeros(cb.S.shape[0])
    for blk, (off, lift) in zip(cb.blocks, wiring):
        if off >= 0:
            lam[blk.sl] = trace[off:off + blk.size]
        if lift is not None:
            lam[blk.sl] += lift
    return lam


def recover_interior(system: CondensedSystem, trace: np.ndarray) -> InteriorSolution:
    """Back-substitute (q, u) on every element from the solved traces."""
    grouped_parts: dict[tuple, tuple[list, list]] = {}
    for key, grp in system.fast_groups.items():
        lam = trace[grp.cols]                      # (ne, ntr)
        X = grp.F_f @ grp.template.Minv_u.T - lam @ grp.template.MinvK.T
        grouped_parts[key] = ([grp.eids], [X])

    full = {}
    for t, rec in sorted(system.loop_records.items()):
        lam = gather_local_trace(rec.cb, rec.wiring, trace)
        X = rec.cb.interior_solve(rec.F_f, lam)
        if _is_template_record(system, t):
            key = (t % 2, rec.cb.pieces[0].side)
            ids, xs = grouped_parts.setdefault(key, ([], []))
            ids.append(np.array([t], dtype=np.int64))
            xs.append(X[None, :])
        else:
            full[t] = (X, rec)

    grouped = {k: (np.concatenate(ids), np.vstack(xs))
               for k, (ids, xs) in grouped_parts.items()}
    return InteriorSolution(trace=trace, grouped=grouped, full=full)


def _is_template_record(system, t) -> bool:
    """Uncut elements away from interface edges reuse their group template."""
    if int(system.topo.element_class[t]) == CUT:
        return False
    return not any(system.topo.edge_class[int(e)] == EDGE_ON_INTERFACE
                   for e in system.mesh.tri_edges[t])
