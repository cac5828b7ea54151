"""Exception hierarchy and the result record shared by every estimator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any


class JointMomentsError(Exception):
    """Base class for all library errors."""


class DomainError(JointMomentsError, ValueError):
    """Argument outside the region where the quantity is defined."""


class DivergenceError(DomainError):
    """The requested moment or integral is infinite."""


class ConvergenceError(JointMomentsError, ArithmeticError):
    """A numerical scheme failed to settle under refinement."""


class BranchError(ConvergenceError):
    """The square-root branch of the sigma ODE could not be continued."""


class ExtrapolationError(ConvergenceError):
    """An N -> infinity fit is inconsistent with its own error budget."""


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MCMC = "mcmc"
    CUE_DIRECT = "cue_direct"
    KERNEL = "kernel"
    PAINLEVE = "painleve"
    BESSEL_DET = "bessel_det"


@dataclass
class MomentEstimate:
    """A number together with its error bar and the route that produced it."""

    value: float
    abs_error: float
    method: Method
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.method = Method(self.method)
        if not (self.abs_error >= 0 or math.isnan(self.abs_error)):
            raise ValueError(f"abs_error must be nonnegative, got {self.abs_error}")

    def agrees_with(self, other: "MomentEstimate", n_sigma: float = 3.0) -> bool:
        """Whether two estimates lie within ``n_sigma`` combined errors."""
        combined = math.hypot(self.abs_error, other.abs_error)
        return abs(self.value - other.value) <= n_sigma * combined

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "abs_error": self.abs_error,
            "method": self.method.value,
            "metadata": self.metadata,
        }
