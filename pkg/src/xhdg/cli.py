"""Batch driver: run convergence studies and dump solution samples.

Configuration comes from a plain-text ``key = value`` file, command-line
flags, or both (flags win).  Tables are written as CSV and/or aligned
Markdown with the same error/order column layout as the convergence
histories in the reference results.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace

import numpy as np

from .assembly import (InteriorSolution, assemble_global, element_state,
                       recover_interior)
from .cases import CASE_NAMES, ProblemCase, case_by_name
from .geometry import CUT, build_uniform_mesh, classify_elements
from .postproc import ErrorReport, broken_errors
from .solver import solve_spd
from .spaces import build_dofmap

__all__ = ["RunConfig", "solve_single", "run_convergence_study",
           "dump_solution", "format_report", "main"]

CSV_HEADER = "mesh,n_dof,err_u,ord_u,err_q,ord_q,err_gradu,ord_gradu"


@dataclass
class RunConfig:
    """Settings for one convergence study."""

    case: str = "circle-homog"
    alpha1: float = 10.0
    alpha2: float = 1.0
    k: int = 1
    scheme: str = "standard"
    meshes: tuple = (8, 16, 32, 64, 128)
    solver: str = "direct"
    tol: float = 1e-12
    geo_tol: float = 1e-10
    out: str | None = None
    fmt: str = "csv"
    dump_solution: str | None = None
    dump_resolution: int = 4

    def validate(self) -> "RunConfig":
        if self.case not in CASE_NAMES:
            raise ValueError(f"unknown case {self.case!r}; choose one of {CASE_NAMES}")
        if not 1 <= self.k <= 4:
            raise ValueError("k must be in 1..4")
        if self.scheme not in ("standard", "modified"):
            raise ValueError("scheme must be 'standard' or 'modified'")
        case = self.make_case()
        if self.scheme == "modified" and not case.levelset.fold_line:
            raise ValueError(
                "the modified scheme requires a piecewise-straight interface; "
                f"case {self.case!r} has a curved one")
        return self

    def make_case(self) -> ProblemCase:
        return case_by_name(self.case, self.alpha1, self.alpha2)


def solve_single(case: ProblemCase, n: int, k: int, scheme: str = "standard",
                 solver: str = "direct", tol: float = 1e-12,
                 geo_tol: float = 1e-10):
    """Mesh, assemble, solve and recover one configuration.

    Returns ``(system, solve_result, interior)``.
    """
    mesh = build_uniform_mesh(case.domain, n)
    topo = classify_elements(mesh, case.levelset)
    dofmap = build_dofmap(mesh, topo, k, scheme, geo_tol)
    system = assemble_global(mesh, topo, dofmap, case, geo_tol)
    result = solve_spd((system.matrix, system.rhs), method=solver, tol=tol)
    interior = recover_interior(system, result.x)
    return system, result, interior


def run_convergence_study(config: RunConfig) -> ErrorReport:
    """Run the mesh sweep and collect the error/order table."""
    config.validate()
    case = config.make_case()
    report = ErrorReport(case=config.case, scheme=config.scheme, k=config.k)
    for n in config.meshes:
        system, result, interior = solve_single(
            case, int(n), config.k, config.scheme,
            solver=config.solver, tol=config.tol, geo_tol=config.geo_tol)
        row = broken_errors(system, interior)
        row.solve_residual = result.residual
        row.solve_method = result.method
        report.add(row)
        if config.dump_solution and int(n) == int(config.meshes[-1]):
            dump_solution(system, interior, config.dump_resolution,
                          config.dump_solution)
    return report


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt_ord(v) -> str:
    return "--" if v is None else f"{v:.2f}"


def format_report(report: ErrorReport, fmt: str = "csv") -> str:
    """Render the table as 'csv' or aligned 'md'."""
    orders = report.orders()
    rows = []
    for row, (ou, oq, og) in zip(report.rows, orders):
        rows.append((f"{row.n}x{row.n}", str(row.n_dof),
                     f"{row.err_u:.6e}", _fmt_ord(ou),
                     f"{row.err_q:.6e}", _fmt_ord(oq),
                     f"{row.err_grad:.6e}", _fmt_ord(og)))
    if fmt == "csv":
        lines = [CSV_HEADER] + [",".join(r) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "md":
        header = CSV_HEADER.split(",")
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
        def line(cells):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"
    raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'md'")


def dump_solution(system, interior: InteriorSolution, resolution: int, path) -> str:
    """Write x,y,u_h samples on a barycentric lattice per element.

    Cut elements are side-resolved: each sample is evaluated with the piece
    selected by the level-set sign at the sample point.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    mesh = system.mesh
    lam = np.array([(i, j) for i in range(resolution) for j in range(resolution - i)],
                   dtype=float) / (resolution - 1)

    lines = ["x,y,u"]
    for t in range(mesh.n_triangles):
        pieces, X = element_state(system, interior, t)
        tri = mesh.triangle_coords(t)
        pts = (1.0 - lam[:, 0:1] - lam[:, 1:2]) * tri[0] + \
            lam[:, 0:1] * tri[1] + lam[:, 1:2] * tri[2]
        if int(system.topo.element_class[t]) == CUT:
            sides = system.topo.levelset.side_at(pts)
        else:
            sides = np.full(len(pts), pieces[0].side)
        vals = np.zeros(len(pts))
        for piece in pieces:
            m = sides == piece.side
            if m.any():
                vals[m] = X[piece.u_slice] @ piece.u_basis.values(pts[m])
        for p, v in zip(pts, vals):
            lines.append(f"{p[0]:.17g},{p[1]:.17g},{v:.17g}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "case": str, "alpha1": float, "alpha2": float, "k": int, "scheme": str,
    "meshes": str, "solver": str, "tol": float, "geo_tol": float,
    "out": str, "format": str, "dump_solution": str, "dump_resolution": int,
}


def _parse_meshes(text: str) -> tuple:
    return tuple(int(tok) for tok in str(text).replace(" ", "").split(",") if tok)


def load_config_file(path) -> dict:
    """Read ``key = value`` lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONFIG_KEYS[key](value)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="xhdg",
        description="Convergence studies for X-HDG elliptic interface solvers.")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--case", choices=CASE_NAMES)
    p.add_argument("--k", type=int)
    p.add_argument("--scheme", choices=("standard", "modified"))
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--meshes", help="comma-separated mesh sizes, e.g. 8,16,32")
    p.add_argument("--solver", choices=("direct", "iterative"))
    p.add_argument("--tol", type=float)
    p.add_argument("--geo-tol", dest="geo_tol", type=float)
    p.add_argument("--out", help="table output path (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "md"))
    p.add_argument("--dump-solution", dest="dump_solution",
                   help="CSV path for solution samples on the finest mesh")
    p.add_argument("--dump-resolution", dest="dump_resolution", type=int)
    return p


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    merged = {}
    if args.config:
        merged.update(load_config_file(args.config))
    if "format" in merged:
        merged["fmt"] = merged.pop("format")
    for key in ("case", "k", "scheme", "alpha1", "alpha2", "meshes", "solver",
                "tol", "geo_tol", "out", "fmt", "dump_solution", "dump_resolution"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "meshes" in merged:
        merged["meshes"] = _parse_meshes(merged["meshes"])
    return replace(RunConfig(), **merged)


def main(argv=None) -> int:
    try:
        config = config_from_args(argv if argv is not None else sys.argv[1:])
        report = run_convergence_study(config)
        text = format_report(report, config.fmt)
        if config.out:
            with open(config.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except Exception as exc:  # CLI contract: nonzero exit with the error class
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
