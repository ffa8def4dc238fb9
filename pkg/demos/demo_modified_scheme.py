"""Standard versus modified scheme on the straight-segment benchmark.

The modified scheme uses degree k-1 traces (smaller condensed system) and
is admissible because the interface is a straight line.  Both converge at
the optimal rates; the table compares errors and system sizes.
"""

from xhdg import RunConfig, run_convergence_study
from xhdg.cli import format_report

for scheme in ("standard", "modified"):
    config = RunConfig(case="segment", alpha1=1000.0, alpha2=1.0,
                       k=1, scheme=scheme, meshes=(8, 16, 32, 64))
    report = run_convergence_study(config)
    print(f"-- {scheme} scheme --")
    print(format_report(report, "md"))
