"""k-Hessian exterior Dirichlet machinery on star-shaped ring domains."""

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    DomainError,
    InsufficientRangeError,
    NonConvergenceError,
    PreconditionError,
)
from .symfunc import (
    QuadraticTarget,
    Spectrum,
    eigenvalues,
    hk,
    hk_lower,
    in_gamma,
    maclaurin_holds,
    sigma,
    sigma_excl,
)

__all__ = [
    "__version__",
    "CertificationError",
    "DomainError",
    "InsufficientRangeError",
    "NonConvergenceError",
    "PreconditionError",
    "QuadraticTarget",
    "Spectrum",
    "eigenvalues",
    "hk",
    "hk_lower",
    "in_gamma",
    "maclaurin_holds",
    "sigma",
    "sigma_excl",
]
