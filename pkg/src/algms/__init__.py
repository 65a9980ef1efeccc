"""Algebraic multiscale solver for DSSY nonconforming discretizations of -div(kappa grad u) = f."""
from .dssy import CellData, SparseSystem, assemble_micro_system
from .errors import (AMSError, ConfigError, IndefiniteError, MatrixMarketError, MeshError,
                     NumericalError, StructuralError)
from .mesh import DofLayout, MicroMesh, build_macro_mesh, build_micro_mesh, uniform_mesh
from .multiscale import AMS, GMSFEM, Options, build_coarse_space, solve_ams, solve_gmsfem
from .problem import Benchmark
from .recovery import recover_field

__version__ = "0.1.0"
