"""Dirac-GAN drift field in reparameterized coordinates.

The state is ``(disc_param, gen_param)`` where ``disc_param`` is the slope of
the linear discriminator and ``gen_param`` is the generator's point mass
measured from the data location ``c``. The drift is

    d disc/dt = h1'(disc * c) * c + h2'(disc * (gen + c)) * (gen + c)
    d gen/dt  = h3'(disc * (gen + c)) * disc

so the origin is an equilibrium whenever ``h1'(0) + h2'(0) == 0``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .errors import InvalidStateError

WGAN_LINEAR = "wgan_linear"
GAN_LOGSIGMOID = "gan_logsigmoid"

# Integer codes used by the compiled kernels.
FAMILY_CODES = {WGAN_LINEAR: 0, GAN_LOGSIGMOID: 1}


class State(NamedTuple):
    disc_param: float
    gen_param: float

    @property
    def norm(self):
        return math.hypot(self.disc_param, self.gen_param)

    def is_finite(self):
        return math.isfinite(self.disc_param) and math.isfinite(self.gen_param)


def as_state(x):
    """Coerce a 2-sequence to a finite :class:`State`."""
    if isinstance(x, State):
        s = x
    else:
        if len(x) != 2:
            raise InvalidStateError(f"state must have two coordinates, got {len(x)}")
        s = State(float(x[0]), float(x[1]))
    if not s.is_finite():
        raise InvalidStateError(f"non-finite state {tuple(s)}")
    return s


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def _minus_one(t):
    return -np.ones_like(np.asarray(t, dtype=float))


def _sig_neg(t):
    # d/dt log sigmoid(t) = sigmoid(-t)
    return expit(-np.asarray(t, dtype=float))


def _neg_sig(t):
    # d/dt log sigmoid(-t) = -sigmoid(t)
    return -expit(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class HFamily:
    """Derivatives of the three objective shaping functions and their Lipschitz constants."""

    kind: str
    h1_prime: Callable = field(repr=False)
    h2_prime: Callable = field(repr=False)
    h3_prime: Callable = field(repr=False)
    alpha: tuple = (1e-9, 1e-9, 1e-9)

    @property
    def code(self):
        return FAMILY_CODES[self.kind]

    @property
    def derivatives(self):
        return (self.h1_prime, self.h2_prime, self.h3_prime)


# Constant derivatives are Lipschitz with any constant; 1e-9 keeps the
# declared constants strictly positive.
FAMILIES = {
    WGAN_LINEAR: HFamily(WGAN_LINEAR, _one, _minus_one, _one, (1e-9, 1e-9, 1e-9)),
    GAN_LOGSIGMOID: HFamily(GAN_LOGSIGMOID, _sig_neg, _neg_sig, _sig_neg, (0.25, 0.25, 0.25)),
}


def get_family(kind):
    try:
        return FAMILIES[kind]
    except KeyError:
        raise ValueError(f"unknown family {kind!r}; expected one of {sorted(FAMILIES)}") from None


@dataclass(frozen=True)
class SystemSpec:
    family: HFamily = FAMILIES[WGAN_LINEAR]
    c: float = 1.0

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", get_family(self.family))
        if not math.isfinite(self.c):
            raise ValueError("c must be finite")


def drift(spec, x):
    """Evaluate the drift vector at state ``x``."""
    x = as_state(x)
    phi, th = x
    c = spec.c
    h1, h2, h3 = spec.family.derivatives
    u = phi * (th + c)
    d_phi = float(h1(phi * c)) * c + float(h2(u)) * (th + c)
    d_th = float(h3(u)) * phi
    return State(d_phi, d_th)


def drift_grid(spec, phi, th):
    """Vectorized drift over arrays of coordinates. Returns ``(d_phi, d_th)``."""
    phi = np.asarray(phi, dtype=float)
    th = np.asarray(th, dtype=float)
    c = spec.c
    h1, h2, h3 = spec.family.derivatives
    u = phi * (th + c)
    return h1(phi * c) * c + h2(u) * (th + c), h3(u) * phi


@dataclass(frozen=True)
class GradientField:
    """Row-major grid: ``x`` varies fastest, rows step through ``y``."""

    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray

    def __len__(self):
        return self.x.size

    def rows(self):
        for i in range(self.x.size):
            yield (float(self.x[i]), float(self.y[i]), float(self.dx[i]), float(self.dy[i]))


def _check_range(name, r):
    lo, hi = float(r[0]), float(r[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
        raise ValueError(f"{name} must be a finite interval with hi > lo, got {r!r}")
    return lo, hi


def gradient_field(spec, x_range=(-1.0, 1.0), y_range=(-1.0, 1.0), resolution=21):
    """Drift vectors sampled on a regular grid (``x`` is disc_param, ``y`` is gen_param)."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    x0, x1 = _check_range("x_range", x_range)
    y0, y1 = _check_range("y_range", y_range)
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    X = X.ravel()
    Y = Y.ravel()
    dx = np.empty_like(X)
    dy = np.empty_like(Y)
    for i in range(X.size):
        dx[i], dy[i] = drift(spec, (X[i], Y[i]))
    return GradientField(X, Y, dx, dy)


def lipschitz_check(family, domain=(-10.0, 10.0), samples=1000):
    """Largest observed ``|h'(x) - h'(y)| / |x - y|`` over all pairs of grid points.

    Returns a 3-tuple, one ratio per derivative. Compare against
    ``family.alpha`` (with a small slack) to validate the declared constants.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    lo, hi = _check_range("domain", domain)
    xs = np.linspace(lo, hi, samples)
    diff_x = np.abs(xs[:, None] - xs[None, :])
    off = diff_x > 0
    ratios = []
    for hp in family.derivatives:
        v = np.asarray(hp(xs), dtype=float)
        diff_v = np.abs(v[:, None] - v[None, :])
        ratios.append(float(np.max(diff_v[off] / diff_x[off])))
    return tuple(ratios)
