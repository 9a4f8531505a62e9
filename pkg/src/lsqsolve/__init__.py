"""Sketch-based minimum-norm regression with length-square sampling access."""

from .errors import (DimensionMismatch, EmptyInput, IndexOutOfRange,
                     InvalidParameter, InvalidSpec, LsqError, NoConvergence,
                     NonFiniteEntry, NonHermitianInput, NormBoundViolated,
                     RankZero, RejectionCapExceeded, SizeGateExceeded,
                     SpanViolation, ZeroColumnNorm, ZeroMatrix, ZeroSolution,
                     ZeroVector)
from .instances import Instance, InstanceSpec, generate_instance
from .lsaccess import LsMatrix, LsVector, squared_magnitudes
from .regression import LowRankRegression
from .sketch import SketchPlan, plan_sketch, theoretical_sizes
from .solver import (SolutionHandle, SolverConfig, expected_rounds,
                     sample_solution, sample_solutions, solution_norm, solve,
                     solve_pipeline)

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch", "EmptyInput", "IndexOutOfRange", "Instance",
    "InstanceSpec", "InvalidParameter", "InvalidSpec", "LowRankRegression",
    "LsMatrix", "LsVector", "LsqError", "NoConvergence", "NonFiniteEntry",
    "NonHermitianInput", "NormBoundViolated", "RankZero",
    "RejectionCapExceeded", "SizeGateExceeded", "SketchPlan", "SolutionHandle",
    "SolverConfig", "SpanViolation", "ZeroColumnNorm", "ZeroMatrix",
    "ZeroSolution", "ZeroVector", "expected_rounds", "generate_instance",
    "plan_sketch", "sample_solution", "sample_solutions", "solution_norm",
    "solve", "solve_pipeline", "squared_magnitudes", "theoretical_sizes",
    "__version__",
]
