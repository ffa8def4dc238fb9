"""Convergence history for the circular-interface benchmark.

Runs the homogeneous-jump circle problem (alpha 10:1) with k = 1 over a
short mesh sweep and prints the error/order table; u converges at order
k+1 = 2 and both flux and gradient at order k = 1.
"""

from xhdg import RunConfig, run_convergence_study
from xhdg.cli import format_report

config = RunConfig(case="circle-homog", alpha1=10.0, alpha2=1.0,
                   k=1, scheme="standard", meshes=(8, 16, 32, 64))
report = run_convergence_study(config)
print(format_report(report, "md"))
ou, oq, og = report.final_orders()
print(f"final orders: u {ou:.2f}, flux {oq:.2f}, gradient {og:.2f}")
