"""Mixed-binary linear programs: model, simplex LP engine, branch-and-bound, MPS export."""
from .bnb import solve
from .model import (INF, Constraint, MilpError, MilpModel, NumericalFailure, Sense,
                    SolveResult, SolverConfig, Status, Variable)
from .mps import export_mps, write_mps
from .simplex import lp_solve

__all__ = [
    "INF", "Constraint", "MilpError", "MilpModel", "NumericalFailure", "Sense",
    "SolveResult", "SolverConfig", "Status", "Variable", "export_mps", "write_mps",
    "lp_solve", "solve",
]
