"""Fixed- and moving-mesh P1 finite elements (Galerkin and SUPG) for
time-dependent convection-diffusion on the unit square."""
from .errors import (AdaptationFailure, DegenerateElementError, InterpolationFailure,
                     InvalidArgumentError, InvalidMeshError, MmsupgError, SingularMatrixError)
from .kernels import BACKEND
from .mesh import TriMesh, generate_uniform
from .metric import MmpdeConfig
from .problems import ProblemSpec, by_name, example1, example2, example3
from .timestepper import METHODS, RunConfig, run_simulation

__version__ = "0.1.0"

__all__ = [
    "AdaptationFailure", "BACKEND", "DegenerateElementError", "InterpolationFailure",
    "InvalidArgumentError", "InvalidMeshError", "METHODS", "MmpdeConfig", "MmsupgError",
    "ProblemSpec", "RunConfig", "SingularMatrixError", "TriMesh", "by_name", "example1",
    "example2", "example3", "generate_uniform", "run_simulation",
]
