"""Sampling a solved field for plotting.

Solves the nonhomogeneous circle problem on a 32x32 mesh and writes
x,y,u_h samples to CSV.  Cut elements are side-resolved, so the dump shows
the jump across the interface; plot it with any scatter/trisurf tool, e.g.

    import pandas as pd, matplotlib.pyplot as plt
    d = pd.read_csv("circle_jump_u.csv")
    plt.tricontourf(d.x, d.y, d.u, levels=40); plt.colorbar(); plt.show()
"""

from xhdg import example_circle_nonhomogeneous, solve_single
from xhdg.cli import dump_solution

case = example_circle_nonhomogeneous()
system, result, interior = solve_single(case, 32, k=1)
path = "circle_jump_u.csv"
dump_solution(system, interior, resolution=3, path=path)
print(f"wrote {path}; solve residual {result.residual:.2e}, "
      f"{system.n_dof} trace unknowns")
