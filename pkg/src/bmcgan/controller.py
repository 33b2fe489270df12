"""Brownian motion controller coefficients.

The controlled system is ``dX = f(X) dt + g1(X) dB1 + g2(X) dB2`` with scalar
Brownian motions shared by both coordinates and

    g1(x) = rho1 * x
    g2(x) = rho2 * |x|**beta * x          (Euclidean norm)
"""
import math
from dataclasses import dataclass

from .dynamics import State, as_state
from .errors import ControllerOverflowError


@dataclass(frozen=True)
class BmcParams:
    rho1: float = 0.1
    rho2: float = 0.01
    beta: float = 2.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.rho1 < 0 or self.rho2 < 0:
            raise ValueError("rho1 and rho2 must be non-negative")

    @property
    def guaranteed(self):
        """True when existence and the stability bound are guaranteed (rho2 > 0, beta > 1)."""
        return self.rho2 > 0 and self.beta > 1

    def require_guaranteed(self):
        if not self.guaranteed:
            raise ValueError(f"theory mode needs rho2 > 0 and beta > 1, got rho2={self.rho2}, beta={self.beta}")
        return self

    @property
    def is_null(self):
        return self.rho1 == 0 and self.rho2 == 0


NULL = BmcParams(0.0, 0.0, 2.0)


def diffusion(params, x):
    """Return ``(g1, g2)`` at state ``x``."""
    x = as_state(x)
    phi, th = x
    g1 = State(params.rho1 * phi, params.rho1 * th)
    try:
        scale = params.rho2 * math.hypot(phi, th) ** params.beta
    except OverflowError:
        raise ControllerOverflowError("g2") from None
    except ZeroDivisionError:
        # 0 ** negative beta; the state is zero so g2 is zero
        scale = 0.0
    g2 = State(scale * phi, scale * th)
    if not g1.is_finite():
        raise ControllerOverflowError("g1")
    if not math.isfinite(scale) or not g2.is_finite():
        raise ControllerOverflowError("g2")
    return g1, g2


def null_controller(x):
    """Uncontrolled baseline: both diffusion coefficients vanish everywhere."""
    as_state(x)
    zero = State(0.0, 0.0)
    return zero, zero
