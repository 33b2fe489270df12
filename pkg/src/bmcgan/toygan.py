"""Desk-scale GAN trained by simultaneous gradient ascent with the Brownian motion regularizer.

With ``a = D(x)`` on real samples, ``b = D(G(z))`` on fakes and ``w = dB / lr``
(the discretized white noise, one pair per step shared by both players), the
two maximized objectives are, per sample pair ``(x_i, z_i)`` averaged over
the batch:

    L_D' = log s(a) + log s(-b) + rho1 a^2 w1 / 2 + rho2 (a^4 / 4 + a^2 b^2 / 2) w2
    L_G' = log s(b)             + rho1 b^2 w1 / 2 + rho2 (b^4 / 4 + a^2 b^2 / 2) w2

``s`` is the logistic sigmoid, ``rho1, rho2`` are the controller coefficients
(beta fixed to 2), and the cross term pairs the i-th real sample with the
i-th latent. Each step moves both players by ``lr`` times their gradient, so
the regularizer contributes ``grad(R) * dB`` exactly as an Euler-Maruyama step
would.
"""
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit

from .controller import BmcParams
from .errors import TrainingDivergedError
from .metrics import Snapshot, fit_metric, shifting_difference
from .mlp import Mlp
from .noise import B1, B2, NoiseStream, derive_seed

# Sub-seed indices for the independent random streams of one run.
_INIT, _BATCH, _NOISE, _EVAL, _FIT = range(5)


@dataclass(frozen=True)
class DataSpec:
    """Synthetic target: ``gauss1d`` (mean, std) or ``ring2d`` (n_modes, radius, std)."""

    kind: str = "gauss1d"
    mean: float = 0.0
    std: float = 1.0
    n_modes: int = 8
    radius: float = 2.0

    def __post_init__(self):
        if self.kind not in ("gauss1d", "ring2d"):
            raise ValueError(f"unknown data kind {self.kind!r}")
        if not self.std > 0:
            raise ValueError("std must be positive")
        if self.kind == "ring2d" and self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")

    @property
    def dim(self):
        return 1 if self.kind == "gauss1d" else 2

    def sample(self, n, rng):
        if self.kind == "gauss1d":
            return self.mean + self.std * rng.standard_normal((n, 1))
        k = rng.integers(0, self.n_modes, size=n)
        ang = 2 * np.pi * k / self.n_modes
        centers = self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return centers + self.std * rng.standard_normal((n, 2))


@dataclass(frozen=True)
class GanTrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 64
    n_steps: int = 3000
    bmc: BmcParams = field(default_factory=lambda: BmcParams(0.0, 0.0, 2.0))
    seed: int = 0
    snapshot_stride: int = 25
    latent_dim: int = 2
    data: DataSpec = field(default_factory=DataSpec)
    g_hidden: tuple = (32, 32)
    d_hidden: tuple = (32, 32)
    activation: str = "tanh"
    n_eval_latents: int = 512
    fit_every: int = 0
    fit_samples: int = 1000

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.bmc.beta != 2:
            raise ValueError("the GAN regularizer is defined for beta == 2")
        for name in ("batch_size", "n_steps", "snapshot_stride", "latent_dim", "n_eval_latents"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.fit_every < 0:
            raise ValueError("fit_every must be >= 0")
        object.__setattr__(self, "g_hidden", tuple(self.g_hidden))
        object.__setattr__(self, "d_hidden", tuple(self.d_hidden))

    def generator(self):
        return Mlp((self.latent_dim, *self.g_hidden, self.data.dim), self.activation)

    def discriminator(self):
        return Mlp((self.data.dim, *self.d_hidden, 1), self.activation)

    def to_dict(self):
        return asdict(self)


@dataclass
class GanPair:
    g_net: Mlp
    d_net: Mlp
    g_params: np.ndarray
    d_params: np.ndarray


@dataclass
class StepResult:
    g_params: np.ndarray
    d_params: np.ndarray
    loss_d: float
    loss_g: float


def _scores(pair, x, z):
    fake, g_cache = pair.g_net.forward(pair.g_params, z, keep=True)
    a, real_cache = pair.d_net.forward(pair.d_params, x, keep=True)
    b, fake_cache = pair.d_net.forward(pair.d_params, fake, keep=True)
    return a, b, g_cache, real_cache, fake_cache


def objectives(pair, x, z, dB1, dB2, bmc, lr):
    """``(L_D', L_G')`` evaluated on one batch with frozen noise increments."""
    a, b, *_ = _scores(pair, x, z)
    w1, w2 = dB1 / lr, dB2 / lr
    r1, r2 = bmc.rho1, bmc.rho2
    cross = 0.5 * r2 * a * a * b * b * w2
    ld = log_expit(a) + log_expit(-b) + 0.5 * r1 * a * a * w1 + 0.25 * r2 * a ** 4 * w2 + cross
    lg = log_expit(b) + 0.5 * r1 * b * b * w1 + 0.25 * r2 * b ** 4 * w2 + cross
    return float(np.mean(ld)), float(np.mean(lg))


def gradients(pair, x, z, dB1, dB2, bmc, lr):
    """Analytic gradients of :func:`objectives` wrt discriminator and generator parameters.

    Returns ``(grad_d, grad_g, loss_d, loss_g)`` where the losses are the
    unregularized non-saturating losses (negated base objectives).
    """
    a, b, g_cache, real_cache, fake_cache = _scores(pair, x, z)
    w1, w2 = dB1 / lr, dB2 / lr
    r1, r2 = bmc.rho1, bmc.rho2

    up_real = expit(-a) + r1 * a * w1 + (r2 * a ** 3 + r2 * b * b * a) * w2
    up_fake = -expit(b) + r2 * b * a * a * w2
    gd_real, _ = pair.d_net.backward(pair.d_params, real_cache, up_real)
    gd_fake, _ = pair.d_net.backward(pair.d_params, fake_cache, up_fake)
    grad_d = gd_real + gd_fake

    up_gen = expit(-b) + r1 * b * w1 + (r2 * b ** 3 + r2 * b * a * a) * w2
    _, d_in = pair.d_net.backward(pair.d_params, fake_cache, up_gen)
    # d_in is per-sample; the generator backward averages over the batch.
    grad_g, _ = pair.g_net.backward(pair.g_params, g_cache, d_in)

    loss_d = -float(np.mean(log_expit(a) + log_expit(-b)))
    loss_g = -float(np.mean(log_expit(b)))
    return grad_d, grad_g, loss_d, loss_g


def bmc_train_step(pair, x, z, dB1, dB2, cfg, step=0):
    """One simultaneous ascent step on both regularized objectives."""
    lr = cfg.learning_rate
    grad_d, grad_g, loss_d, loss_g = gradients(pair, x, z, dB1, dB2, cfg.bmc, lr)
    if not (math.isfinite(loss_d) and math.isfinite(loss_g)):
        raise TrainingDivergedError(step)
    return StepResult(pair.g_params + lr * grad_g, pair.d_params + lr * grad_d, loss_d, loss_g)


def plain_train_step(pair, x, z, lr, step=0):
    """Unregularized simultaneous gradient ascent, written independently of the BMC path."""
    fake, g_cache = pair.g_net.forward(pair.g_params, z, keep=True)
    a, real_cache = pair.d_net.forward(pair.d_params, x, keep=True)
    b, fake_cache = pair.d_net.forward(pair.d_params, fake, keep=True)
    gd_real, _ = pair.d_net.backward(pair.d_params, real_cache, expit(-a))
    gd_fake, _ = pair.d_net.backward(pair.d_params, fake_cache, -expit(b))
    _, d_in = pair.d_net.backward(pair.d_params, fake_cache, expit(-b))
    grad_g, _ = pair.g_net.backward(pair.g_params, g_cache, d_in)
    loss_d = -float(np.mean(log_expit(a) + log_expit(-b)))
    loss_g = -float(np.mean(log_expit(b)))
    if not (math.isfinite(loss_d) and math.isfinite(loss_g)):
        raise TrainingDivergedError(step)
    return StepResult(pair.g_params + lr * grad_g, pair.d_params + lr * (gd_real + gd_fake), loss_d, loss_g)


def init_pair(cfg):
    rng = np.random.default_rng(derive_seed(cfg.seed, _INIT))
    g_net, d_net = cfg.generator(), cfg.discriminator()
    return GanPair(g_net, d_net, g_net.init(rng), d_net.init(rng))


def generator_sampler(g_net, g_params, latent_dim):
    def generate(n, rng):
        return g_net.forward(g_params, rng.standard_normal((n, latent_dim)))
    return generate


@dataclass
class TrainResult:
    config: GanTrainConfig
    pair: GanPair
    log: list
    snapshots: list
    shifting: list

    def tail_shifting(self, fraction=0.2):
        """Mean of the last ``fraction`` of consecutive-snapshot shifting differences."""
        vals = [s for _, s in self.shifting]
        if not vals:
            raise ValueError("no shifting differences recorded")
        k = max(1, int(math.ceil(fraction * len(vals))))
        return float(np.mean(vals[-k:]))

    def log_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "loss_d", "loss_g", "shifting_diff", "fit_metric"])
        for row in self.log:
            w.writerow([row["step"], repr(row["loss_d"]), repr(row["loss_g"]),
                        "" if row["shifting_diff"] is None else repr(row["shifting_diff"]),
                        "" if row["fit_metric"] is None else repr(row["fit_metric"])])
        return buf.getvalue()


def train(cfg, keep_snapshots=True, backend=None):
    """Train one GAN. Data batches, latents and noise come from separate seeded streams,
    so runs that differ only in ``bmc`` see identical batches."""
    pair = init_pair(cfg)
    batch_rng = np.random.default_rng(derive_seed(cfg.seed, _BATCH))
    noise_seed = derive_seed(cfg.seed, _NOISE)
    s1, s2 = NoiseStream(noise_seed, B1), NoiseStream(noise_seed, B2)
    latents = np.random.default_rng(derive_seed(cfg.seed, _EVAL)).standard_normal((cfg.n_eval_latents, cfg.latent_dim))
    lr = cfg.learning_rate

    snapshots = [Snapshot(0, pair.g_params.copy(), latents)]
    shifting = []
    log = []
    for step in range(1, cfg.n_steps + 1):
        x = cfg.data.sample(cfg.batch_size, batch_rng)
        z = batch_rng.standard_normal((cfg.batch_size, cfg.latent_dim))
        dB1, dB2 = s1.increment(lr), s2.increment(lr)
        res = bmc_train_step(pair, x, z, dB1, dB2, cfg, step)
        pair.g_params, pair.d_params = res.g_params, res.d_params
        row = {"step": step, "loss_d": res.loss_d, "loss_g": res.loss_g, "shifting_diff": None, "fit_metric": None}
        if step % cfg.snapshot_stride == 0:
            snap = Snapshot(step, pair.g_params.copy(), latents)
            sd = shifting_difference(snapshots[-1], snap, pair.g_net)
            shifting.append((step, sd))
            row["shifting_diff"] = sd
            snapshots.append(snap)
            if not keep_snapshots:
                snapshots = snapshots[-1:]
        if cfg.fit_every and step % cfg.fit_every == 0:
            row["fit_metric"] = fit_metric(generator_sampler(pair.g_net, pair.g_params, cfg.latent_dim), cfg.data,
                                           cfg.fit_samples, seed=derive_seed(cfg.seed, _FIT, step), backend=backend)
        log.append(row)
    return TrainResult(cfg, pair, log, snapshots, shifting)


def save_snapshots(result, out_dir):
    """Write each snapshot as raw little-endian float64 plus one JSON sidecar describing layout."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = result.pair.g_net
    files = []
    for snap in result.snapshots:
        name = f"generator_{snap.step:08d}.bin"
        snap.params.astype("<f8").tofile(out_dir / name)
        files.append({"step": snap.step, "file": name})
    latent_file = "latents.bin"
    result.snapshots[0].latents.astype("<f8").tofile(out_dir / latent_file)
    sidecar = {
        "dtype": "<f8",
        "widths": list(g.widths),
        "activation": g.activation,
        "n_params": g.n_params,
        "layout": [{"weight_offset": w, "weight_shape": list(s), "bias_offset": b} for w, s, b in g.layout],
        "weight_order": "row-major (fan_out, fan_in); y = x @ W.T + b",
        "latents": {"file": latent_file, "shape": list(result.snapshots[0].latents.shape)},
        "snapshots": files,
    }
    (out_dir / "snapshots.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return out_dir / "snapshots.json"


def compare_shifting(base_cfg, rho1=0.1, rho2=0.01, seeds=range(10), fraction=0.2, threads=1):
    """Tail-mean shifting difference for baseline and BMC runs on paired seeds.

    Returns a list of ``(seed, baseline, bmc)`` triples in seed order.
    """
    def one(seed, bmc):
        kw = {k: getattr(base_cfg, k) for k in base_cfg.__dataclass_fields__}
        kw.update(seed=seed, bmc=bmc)
        return train(GanTrainConfig(**kw), keep_snapshots=False).tail_shifting(fraction)

    seeds = list(seeds)
    jobs = [(s, b) for s in seeds for b in (BmcParams(0.0, 0.0, 2.0), BmcParams(rho1, rho2, 2.0))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(lambda j: one(*j), jobs))
    else:
        vals = [one(*j) for j in jobs]
    return [(s, vals[2 * i], vals[2 * i + 1]) for i, s in enumerate(seeds)]
