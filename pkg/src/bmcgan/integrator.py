"""Fixed-step Euler-Maruyama integration of the controlled Dirac-GAN system.

    X[k+1] = X[k] + f(X[k]) dt + g1(X[k]) dB1[k] + g2(X[k]) dB2[k]

with ``dB1`` and ``dB2`` drawn from two independent :class:`NoiseStream`
instances keyed by ``(seed, 0)`` and ``(seed, 1)``.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .controller import NULL, BmcParams
from .dynamics import State, SystemSpec, as_state
from .errors import IntegrationDivergedError
from .noise import B1, B2, NoiseStream, derive_seed

CHUNK = 1 << 15


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 0.1
    n_steps: int = 100_000
    record_stride: int = 1
    x0: tuple = (1.0, 1.0)
    seed: int = 0
    blowup_threshold: float = 1e12

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be an integer >= 1, got {self.n_steps!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be an integer >= 1, got {self.record_stride!r}")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        object.__setattr__(self, "x0", tuple(as_state(self.x0)))
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "record_stride", int(self.record_stride))
        object.__setattr__(self, "seed", int(self.seed))

    def replace(self, **kw):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return SdeConfig(**d)


@dataclass
class Trajectory:
    """Recorded states of one run.

    ``steps`` holds integer step indices; ``times`` is ``steps * dt`` so the
    time grid never accumulates rounding error. ``terminated_early`` is the
    step at which the blow-up threshold was crossed, or ``None``.
    """

    steps: np.ndarray
    states: np.ndarray
    dt: float
    seed: int
    terminated_early: Optional[int] = None

    @property
    def times(self):
        return self.steps * self.dt

    @property
    def norms(self):
        return np.hypot(self.states[:, 0], self.states[:, 1])

    def __len__(self):
        return self.steps.size

    def state(self, i):
        return State(float(self.states[i, 0]), float(self.states[i, 1]))

    def to_csv(self, fh=None):
        """Write ``step,t,disc_param,gen_param,norm``; returns the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "t", "disc_param", "gen_param", "norm"])
        times = self.times
        norms = self.norms
        for i in range(self.steps.size):
            w.writerow([int(self.steps[i]), repr(float(times[i])), repr(float(self.states[i, 0])),
                        repr(float(self.states[i, 1])), repr(float(norms[i]))])
        if fh is None:
            return buf.getvalue()


def _controller_params(params):
    if params is None:
        return NULL
    if callable(params) and not isinstance(params, BmcParams):
        # null_controller or anything behaving like it
        return NULL
    return params


def integrate_batch(spec, params, cfg, seeds, backend=None):
    """Integrate one trajectory per seed, all sharing ``spec``, ``params`` and ``cfg``.

    Returns a list of ``(Trajectory, error)`` pairs where ``error`` is an
    :class:`IntegrationDivergedError` for runs that produced NaN/inf and
    ``None`` otherwise. Results do not depend on batch composition.
    """
    params = _controller_params(params)
    seeds = [int(s) for s in seeds]
    n = len(seeds)
    noisy = not params.is_null
    n_rec_max = cfg.n_steps // cfg.record_stride + 2
    state = np.tile(np.asarray(cfg.x0, dtype=np.float64), (n, 1))
    rec_step = np.zeros((n, n_rec_max), dtype=np.int64)
    rec_state = np.zeros((n, n_rec_max, 2))
    rec_state[:, 0, :] = state
    n_rec = np.ones(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    stop_step = np.full(n, -1, dtype=np.int64)

    if noisy:
        streams = [(NoiseStream(s, B1), NoiseStream(s, B2)) for s in seeds]
    thr = cfg.blowup_threshold
    thr2 = thr * thr if math.isfinite(thr) else math.inf
    done = 0
    while done < cfg.n_steps:
        m = min(CHUNK, cfg.n_steps - done)
        if noisy:
            dB1 = np.empty((n, m))
            dB2 = np.empty((n, m))
            for i, (s1, s2) in enumerate(streams):
                dB1[i] = s1.increments(m, cfg.dt)
                dB2[i] = s2.increments(m, cfg.dt)
        else:
            dB1 = dB2 = np.zeros((n, m))
        if (status == kernels.RUNNING).any():
            kernels.em_chunk(state, done, dB1, dB2, float(cfg.dt), spec.family.code, float(spec.c),
                             float(params.rho1), float(params.rho2), float(params.beta), noisy,
                             cfg.record_stride, cfg.n_steps, thr2, rec_step, rec_state, n_rec,
                             status, stop_step, backend=backend)
        done += m

    out = []
    for i, seed in enumerate(seeds):
        r = n_rec[i]
        traj = Trajectory(rec_step[i, :r].copy(), rec_state[i, :r].copy(), cfg.dt, seed,
                          int(stop_step[i]) if status[i] == kernels.BLOWUP else None)
        err = None
        if status[i] == kernels.NONFINITE:
            err = IntegrationDivergedError(State(*state[i]), int(stop_step[i]))
        out.append((traj, err))
    return out


def integrate(spec, params, cfg, backend=None):
    """Integrate one trajectory with noise keyed by ``cfg.seed``.

    ``params`` is a :class:`BmcParams`, ``None``, or
    :func:`~bmcgan.controller.null_controller` for the uncontrolled system.
    Raises :class:`IntegrationDivergedError` if the update turns non-finite.
    """
    [(traj, err)] = integrate_batch(spec, params, cfg, [cfg.seed], backend=backend)
    if err is not None:
        raise err
    return traj


@dataclass(frozen=True)
class GeometricBrownian:
    """Scalar linear SDE ``dX = a X dt + b X dB`` with its closed-form solution."""

    a: float = 0.5
    b: float = 0.5
    x0: float = 1.0
    T: float = 1.0

    def exact(self, bt):
        return self.x0 * np.exp((self.a - 0.5 * self.b * self.b) * self.T + self.b * bt)


@dataclass
class StrongErrorResult:
    dts: list
    errors: list
    order: float = field(default=float("nan"))


def strong_error(reference, dt_list, n_seeds=1000, base_seed=0):
    """Mean absolute endpoint error of Euler-Maruyama against the exact solution.

    The coarse paths reuse the fine Brownian path (increments are summed), so
    every resolution sees the same noise realization. ``dt_list`` must be
    decreasing and each entry must divide ``reference.T`` and be an integer
    multiple of the finest step. The fitted order is the least squares slope
    of ``log(error)`` against ``log(dt)``; NaN when any error is zero.
    """
    dts = [float(d) for d in dt_list]
    if len(dts) < 2 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt_list must hold at least two strictly decreasing steps")
    if n_seeds < 100:
        raise ValueError("n_seeds must be >= 100")
    fine = dts[-1]
    n_fine = round(reference.T / fine)
    if not math.isclose(n_fine * fine, reference.T, rel_tol=1e-12):
        raise ValueError("finest dt must divide T")
    factors = []
    for d in dts:
        f = round(d / fine)
        if not math.isclose(f * fine, d, rel_tol=1e-12) or n_fine % f:
            raise ValueError(f"dt={d} is not a compatible multiple of the finest step {fine}")
        factors.append(f)

    dW = np.empty((n_seeds, n_fine))
    for i in range(n_seeds):
        dW[i] = NoiseStream(derive_seed(base_seed, i), B1).increments(n_fine, fine)
    exact = reference.exact(dW.sum(axis=1))

    errors = []
    for d, f in zip(dts, factors):
        coarse = dW.reshape(n_seeds, n_fine // f, f).sum(axis=2)
        x = np.full(n_seeds, float(reference.x0))
        for k in range(coarse.shape[1]):
            x = x + reference.a * x * d + reference.b * x * coarse[:, k]
        errors.append(float(np.mean(np.abs(x - exact))))
    if all(e > 0 for e in errors):
        order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    else:
        order = float("nan")
    return StrongErrorResult(dts, errors, order)
