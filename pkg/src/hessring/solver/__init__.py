from .grid import RadialGrid, RingGrid, RingField, radial_ladder
from .newton import newton_solve, residual, discrete_hessian, SolveReport
from .verify import verify_comparison, verify_gradient_maximum
from .decay import decay_fit, DecayRow
from .io import export_csv, export_binary, read_binary

__all__ = [
    "RadialGrid", "RingGrid", "RingField", "radial_ladder",
    "newton_solve", "residual", "discrete_hessian", "SolveReport",
    "verify_comparison", "verify_gradient_maximum",
    "decay_fit", "DecayRow",
    "export_csv", "export_binary", "read_binary",
]
