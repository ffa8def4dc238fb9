"""Broken error norms and convergence orders for solved problems.

Errors are relative L2 norms accumulated piecewise over both subdomains
with cut-cell quadrature of degree 2k+4.  Exact fields are evaluated on
the branch of the piece being integrated: each cut rule targets one side's
region, where that side's smooth branch is the exact solution, and points
of the signed curvature-correction strips then see a smooth integrand
(selecting the branch by level-set sign instead would make the integrand
jump inside the strips and break the signed cancellation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import CondensedSystem, InteriorSolution
from .errors import DegenerateSequence
from .geometry import CUT
from .quadrature import cut_volume_rule, map_to_triangle, triangle_rule

__all__ = ["ErrorRow", "ErrorReport", "broken_errors", "convergence_orders"]


@dataclass
class ErrorRow:
    """One mesh's worth of a convergence study."""

    n: int
    h: float
    n_dof: int
    err_u: float
    err_q: float
    err_grad: float
    solve_residual: float = 0.0
    solve_method: str = ""

    def as_tuple(self):
        return (self.err_u, self.err_q, self.err_grad)


@dataclass
class ErrorReport:
    """Rows plus log2 convergence orders in the benchmark table layout."""

    case: str
    scheme: str
    k: int
    rows: list = field(default_factory=list)

    def add(self, row: ErrorRow) -> None:
        self.rows.append(row)

    def orders(self) -> list:
        """Per-row (ord_u, ord_q, ord_grad); the first row has Nones."""
        out = [(None, None, None)]
        for prev, cur in zip(self.rows, self.rows[1:]):
            hs = (prev.h, cur.h)
            out.append(tuple(
                convergence_orders([hs[0], hs[1]], [getattr(prev, a), getattr(cur, a)])[0]
                for a in ("err_u", "err_q", "err_grad")))
        return out

    def final_orders(self):
        if len(self.rows) < 2:
            raise DegenerateSequence("need at least two meshes for orders")
        return self.orders()[-1]


def convergence_orders(hs, errors) -> list:
    """order_j = log(e_{j-1}/e_j) / log(h_{j-1}/h_j) for consecutive rows."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 2:
        raise DegenerateSequence("need at least two (h, error) pairs")
    if np.any(errors <= 0.0):
        raise DegenerateSequence("zero or negative error in sequence")
    return list(np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:]))


def _accumulate(case, side_pts, w, u_h, q_h, g_h, acc):
    """Add squared errors and exact-norm contributions at quadrature points."""
    sides, pts = side_pts
    u_ex = np.empty(len(pts))
    q_ex = np.empty((len(pts), 2))
    g_ex = np.empty((len(pts), 2))
    for s in (1, 2):
        m = sides == s
        if m.any():
            u_ex[m] = case.u(s, pts[m])
            g_ex[m] = case.grad_u(s, pts[m])
            q_ex[m] = case.alpha_of(s) * g_ex[m]
    acc["u2"] += w @ (u_h - u_ex) ** 2
    acc["q2"] += w @ ((q_h - q_ex) ** 2).sum(axis=1)
    acc["g2"] += w @ ((g_h - g_ex) ** 2).sum(axis=1)
    acc["U2"] += w @ u_ex**2
    acc["Q2"] += w @ (q_ex**2).sum(axis=1)
    acc["G2"] += w @ (g_ex**2).sum(axis=1)


def broken_errors(system: CondensedSystem, interior: InteriorSolution,
                  degree: int | None = None) -> ErrorRow:
    """Relative L2 errors of (u_h, q_h, grad u_h) against the exact fields."""
    case = system.case
    mesh = system.mesh
    k = system.k
    degree = degree if degree is not None else 2 * k + 4
    acc = {key: 0.0 for key in ("u2", "q2", "g2", "U2", "Q2", "G2")}

    ref = triangle_rule(degree)
    for key, (eids, X) in interior.grouped.items():
        tmpl = system.templates[key]
        piece = tmpl.pieces[0]
        rep_rule = map_to_triangle(ref, mesh.triangle_coords(tmpl.element))
        uv = piece.u_basis.values(rep_rule.points)        # (nu, nq)
        ug = piece.u_basis.gradients(rep_rule.points)     # (nu, nq, 2)
        qv = piece.q_basis.values(rep_rule.points)        # (nqb, nq)
        w = rep_rule.weights
        nq, nu = piece.nq, piece.nu
        Xq = X[:, piece.q_slice]
        Xu = X[:, piece.u_slice]
        u_h = Xu @ uv                                      # (ne, npts)
        g_h = np.einsum("ej,jpc->epc", Xu, ug)
        q_h = np.stack([Xq[:, :nq] @ qv, Xq[:, nq:] @ qv], axis=-1)
        deltas = mesh.centroids()[eids] - system.template_centroids[key]
        pts = rep_rule.points[None, :, :] + deltas[:, None, :]
        flat = pts.reshape(-1, 2)
        sides = np.full(len(flat), key[1])
        wq = np.tile(w, len(eids))
        _accumulate(case, (sides, flat), wq,
                    u_h.ravel(), q_h.reshape(-1, 2), g_h.reshape(-1, 2), acc)

    for t, (X, rec) in interior.full.items():
        for piece in rec.cb.pieces:
            if int(system.topo.element_class[t]) == CUT:
                rule = cut_volume_rule(system.topo, t, piece.side, degree, system.geo_tol)
            else:
                rule = map_to_triangle(ref, mesh.triangle_coords(t))
            pts, w = rule.points, rule.weights
            uv = piece.u_basis.values(pts)
            ug = piece.u_basis.gradients(pts)
            qv = piece.q_basis.values(pts)
            xu = X[piece.u_slice]
            xq = X[piece.q_slice]
            u_h = xu @ uv
            g_h = np.einsum("j,jpc->pc", xu, ug)
            q_h = np.stack([xq[:piece.nq] @ qv, xq[piece.nq:] @ qv], axis=-1)
            sides = np.full(len(pts), piece.side)
            _accumulate(case, (sides, pts), w, u_h, q_h, g_h, acc)

    return ErrorRow(
        n=mesh.n,
        h=mesh.h,
        n_dof=system.n_dof,
        err_u=float(np.sqrt(acc["u2"] / acc["U2"])),
        err_q=float(np.sqrt(acc["q2"] / acc["Q2"])),
        err_grad=float(np.sqrt(acc["g2"] / acc["G2"])),
    )
