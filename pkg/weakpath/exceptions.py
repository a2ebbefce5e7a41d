"""
Error types raised by the physics layer.

Everything derives from ``WeakPathError`` (a ``ValueError``) so callers that
only care about "bad input or ill-posed problem" can catch one type, while
the CLI maps them to exit status 1.
"""

from typing import Optional, Tuple


class WeakPathError(ValueError):
    """Base class for physics-layer rejections."""


class GridError(WeakPathError):
    """Grid definition or resolution problem."""


class GridMismatchError(WeakPathError):
    """Two objects live on different grids."""


class NormalizationError(WeakPathError):
    """A state that must be normalized is not."""


class SupportEscapedError(WeakPathError):
    """Amplitude reached the grid boundary."""

    def __init__(self, message: str, edge_amplitude: float):
        super().__init__(message)
        self.edge_amplitude = edge_amplitude


class DenominatorUnderflowError(WeakPathError):
    """Postselection is (nearly) orthogonal to the evolved preselection."""

    def __init__(self, numerator: complex, denominator: complex, floor: float):
        super().__init__(
            f"denominator underflow: |{denominator:.3e}| <= floor {floor:.1e} "
            f"(numerator {numerator:.3e})"
        )
        self.numerator = numerator
        self.denominator = denominator
        self.floor = floor


class CausticError(WeakPathError):
    """Evaluation at or too close to a focal (conjugate) point."""

    def __init__(self, message: str, conjugate_time: Optional[float] = None):
        super().__init__(message)
        self.conjugate_time = conjugate_time


class BudgetExceededError(WeakPathError):
    """Brute-force enumeration would be intractable."""


class PostselectionError(WeakPathError):
    """Postselection accepted (almost) nothing."""

    def __init__(self, message: str, fraction: float):
        super().__init__(message)
        self.fraction = fraction


class IntegratorError(WeakPathError):
    """Classical integrator met a non-finite or runaway force."""


class NodeAtCouplingPointError(WeakPathError):
    """Wavefunction vanishes at the coupling point; inversion impossible."""


class ConfigError(WeakPathError):
    """Experiment configuration failed validation."""

    def __init__(self, message: str, key_path: Tuple = ()):
        super().__init__(message)
        self.key_path = key_path
