"""Arbitrary-order eXtended HDG methods for 2D elliptic interface problems
on interface-unfitted meshes.

Two schemes are provided: the standard one (degree-k traces, any piecewise
smooth interface) and a modified one (degree k-1 traces, straight-segment
interfaces only).  Both statically condense the element interiors into a
symmetric positive definite system for the potential traces on element
edges and on the interface.
"""

from .assembly import (CondensedSystem, assemble_global, condense,
                       element_state, local_system, recover_interior,
                       stabilization_value)
from .cases import (case_by_name, example_circle_homogeneous,
                    example_circle_nonhomogeneous, example_polygon,
                    example_segment, manufactured_uncut, patch_polynomial)
from .cli import RunConfig, dump_solution, run_convergence_study, solve_single
from .geometry import (AnalyticLevelSet, CircleLevelSet, CutTopology,
                       DiamondLevelSet, HorizontalLineLevelSet, LevelSet,
                       StructuredMesh, build_uniform_mesh, classify_elements,
                       edge_intersection, interface_normal)
from .postproc import ErrorReport, broken_errors, convergence_orders
from .quadrature import (QuadRule, cut_edge_rule, cut_volume_rule,
                         interface_rule, segment_rule, triangle_rule)
from .solver import SparseSymmetric, export_matrix_market, solve_spd
from .spaces import (DofMap, InterfaceTraceBasis, PolyBasis, SegmentBasis,
                     build_dofmap, element_basis, interface_trace_basis,
                     jump_lift, l2_project_cell, l2_project_edge)

__version__ = "0.1.0"
