"""Self-contained MILP toolkit: model container, simplex, branch and bound, LP files."""
from .bnb import Limits, WeakDualityError, solve_milp
from .lpformat import LpFile, LpFormatError, export_model, read_lp
from .model import (MilpModel, MilpSolution, ModelBuilder, ModelError, Status, from_arrays,
                    relative_gap)
from .simplex import IterationLimitError, LpEngine, SingularBasisError, solve_lp

__all__ = [
    "Limits", "WeakDualityError", "solve_milp", "LpFile", "LpFormatError", "export_model",
    "read_lp", "MilpModel", "MilpSolution", "ModelBuilder", "ModelError", "Status",
    "from_arrays", "relative_gap", "IterationLimitError", "LpEngine", "SingularBasisError",
    "solve_lp",
]
