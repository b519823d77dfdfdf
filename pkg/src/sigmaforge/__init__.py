"""sigmaforge: descendant trees of finite 3-groups from weighted pc
presentations, with transfer-kernel and abelian-quotient bookkeeping."""

from .pc import (
    InvalidPresentation,
    ParseError,
    PcError,
    PcPresentation,
    Violation,
)

__version__ = "0.1.0"

__all__ = [
    "PcPresentation",
    "PcError",
    "ParseError",
    "InvalidPresentation",
    "Violation",
    "__version__",
]
