"""Generalized weak Galerkin finite element solver for the 2D biharmonic
equation with clamped boundary conditions, on triangular, square, and
rectangular partitions of the unit square and the L-shaped domain."""

from .assembly import (AssembledSystem, DofMap, GwgConfig, GwgSystem,
                       WeakFunction, apply_boundary_conditions,
                       assemble_load, assemble_stiffness, make_mesh)
from .errnorms import (ErrorReport, center_seminorms, eb_edge, eg_edge,
                       error_report, l2_e0, rate, triple_bar)
from .errors import (AssemblyError, ConfigError, GwgError, MeshError,
                     NonConvergenceError, SolverError)
from .experiments import (ConvergenceTable, ManufacturedCase, emit, get_case,
                          registry, reproduce_table, run_single, run_sweep)
from .linsolve import solve_cg, solve_dense
from .mesh import (ElementGeometry, Mesh, element_geometry,
                   generate_uniform_rectangular, generate_uniform_square,
                   generate_uniform_triangular, mesh_size)
from .projection import (ElementWorkspace, ProjectionWorkspace,
                         element_workspace, project_edge, project_element,
                         project_weak)
from .weak_hessian import (LocalDofLayout, LocalWeakHessian,
                           apply_weak_hessian, build_delta_g,
                           build_local_weak_hessian)

__version__ = "0.1.0"
