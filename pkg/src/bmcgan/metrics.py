"""Sample-based distances between generator outputs and data."""
import math
from dataclasses import dataclass

import numpy as np

from .kernels import mean_pairwise_distance


def energy_distance(x, y, backend=None):
    """Energy distance ``sqrt(2 E|X-Y| - E|X-X'| - E|Y-Y'|)`` from two samples.

    Uses the V-statistic (all pairs, including ``i == j``), whose squared value
    is never negative, and takes the square root as ``scipy.stats.energy_distance``
    does. Symmetric in its arguments.
    """
    xy = mean_pairwise_distance(x, y, backend)
    xx = mean_pairwise_distance(x, x, backend)
    yy = mean_pairwise_distance(y, y, backend)
    return math.sqrt(max(2.0 * xy - xx - yy, 0.0))


def fit_metric(generate, data, n_samples=2000, seed=0, backend=None):
    """Energy distance between ``n_samples`` generator outputs and data samples.

    ``generate(n, rng)`` returns an ``(n, d)`` array; ``data`` is anything
    with a ``sample(n, rng)`` method (see :class:`bmcgan.toygan.DataSpec`).
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    gen_rng, data_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    return energy_distance(generate(n_samples, gen_rng), data.sample(n_samples, data_rng), backend)


@dataclass(frozen=True)
class Snapshot:
    step: int
    params: np.ndarray
    latents: np.ndarray


def shifting_difference(s1, s2, g_net):
    """Mean Euclidean distance between two generators' outputs on the shared latent batch."""
    if s1.latents is not s2.latents and not (
            s1.latents.shape == s2.latents.shape and np.array_equal(s1.latents, s2.latents)):
        raise ValueError("snapshots were taken on different latent batches")
    d = g_net.forward(s1.params, s1.latents) - g_net.forward(s2.params, s2.latents)
    return float(np.mean(np.sqrt(np.sum(d * d, axis=1))))
