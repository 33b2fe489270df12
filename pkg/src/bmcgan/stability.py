"""Exponential stability bound, its sufficient condition, and trajectory diagnostics."""
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import UnboundedObjectiveError


@dataclass
class StabilityReport:
    phi_bound: float
    margin: float
    condition_holds: bool
    theoretical_rate: Optional[float] = None
    epsilon: Optional[float] = None
    empirical_rate: Optional[float] = None
    converge_step: Optional[int] = None
    maximizer: Optional[float] = None

    def __post_init__(self):
        if self.condition_holds != (self.margin > 0):
            raise ValueError("condition_holds must equal margin > 0")
        if self.theoretical_rate is not None and not self.condition_holds:
            raise ValueError("theoretical_rate is only defined when the condition holds")

    def to_dict(self):
        d = asdict(self)
        d["phi_unbounded"] = math.isinf(self.phi_bound)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        return d


@dataclass(frozen=True)
class ConvergenceCriterion:
    tol: float = 1e-2
    window: int = 100
    max_steps: int = 100_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.window) != self.window or self.window < 1:
            raise ValueError("window must be an integer >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")


def _bound_objective(x, rho2, beta, quad, const):
    return -0.5 * rho2 * rho2 * x ** (2 * beta) + quad * x * x + const


def _constants(alphas, c):
    a1, a2, a3 = alphas
    quad = a2 * a2 + 0.5 * a3 * a3
    const = (1.0 + 0.5 * a1 * a1) * c * c + 2.0 * c + 0.5
    return quad, const


def phi_bound(params, alphas, c):
    """Maximum over ``x >= 0`` of ``-(rho2^2/2) x^(2 beta) + A x^2 + C``.

    ``A = alpha2^2 + alpha3^2 / 2`` and ``C = (1 + alpha1^2/2) c^2 + 2c + 1/2``.
    For ``beta > 1`` the stationarity condition ``beta rho2^2 x^(2beta-2) = 2A``
    has the single positive root used here. Returns ``(phi, maximizer)``.
    """
    rho2, beta = params.rho2, params.beta
    if not (rho2 > 0 and beta > 1):
        raise UnboundedObjectiveError(f"objective is unbounded above for rho2={rho2}, beta={beta}")
    quad, const = _constants(alphas, c)
    if quad == 0:
        return const, 0.0
    x_star = (2.0 * quad / (beta * rho2 * rho2)) ** (1.0 / (2.0 * beta - 2.0))
    return _bound_objective(x_star, rho2, beta, quad, const), x_star


def default_epsilon(margin):
    return min(0.1 * margin, 1e-3)


def check_condition(params, alphas, c, epsilon=None):
    """Evaluate ``rho1^2/2 - phi > 0`` and the implied decay rate bound.

    When the condition holds the bound on ``limsup log|X(t)| / t`` is
    ``-(margin) + epsilon`` with ``0 < epsilon < margin``.
    """
    phi, x_star = phi_bound(params, alphas, c)
    margin = 0.5 * params.rho1 * params.rho1 - phi
    holds = margin > 0
    rate = None
    if holds:
        if epsilon is None:
            epsilon = default_epsilon(margin)
        if not 0 < epsilon < margin:
            raise ValueError(f"epsilon must lie in (0, {margin}), got {epsilon}")
        rate = -margin + epsilon
    return StabilityReport(phi, margin, holds, rate, epsilon, maximizer=x_star)


def unbounded_report(params):
    """Report for parameters outside the guaranteed regime (phi is +inf)."""
    return StabilityReport(math.inf, -math.inf, False)


def detect_convergence(traj, crit=ConvergenceCriterion()):
    """First recorded step starting a run of ``window`` points with ``|X| < tol``.

    Only points with ``step <= max_steps`` count. A trajectory shorter than
    ``window`` needs every point below tolerance. Blown-up runs never converge.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if traj.terminated_early is not None:
        return None
    keep = traj.steps <= crit.max_steps
    steps = traj.steps[keep]
    below = traj.norms[keep] < crit.tol
    w = min(crit.window, below.size)
    if w == 0:
        return None
    run = 0
    for i in range(below.size):
        run = run + 1 if below[i] else 0
        if run >= w:
            return int(steps[i - w + 1])
    return None


def empirical_rate(traj, tail_fraction=0.5):
    """Least squares slope of ``log|X(t)|`` against ``t`` over the trailing fraction of points."""
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    n = len(traj)
    k = int(math.ceil(tail_fraction * n))
    if k < 2:
        raise ValueError("need at least two recorded points in the tail")
    t = traj.times[n - k:]
    y = np.log(np.maximum(traj.norms[n - k:], 1e-300))
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
