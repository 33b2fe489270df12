import math

import numpy as np
import pytest
from scipy import stats

from bmcgan.kernels import mean_pairwise_distance
from bmcgan.metrics import Snapshot, energy_distance, fit_metric, shifting_difference
from bmcgan.mlp import Mlp
from bmcgan.toygan import DataSpec


def point_mass_vs_normal(c):
    """Closed-form squared energy distance between delta_c and N(0, 1)."""
    e_abs = 2 * stats.norm.pdf(c) + c * (2 * stats.norm.cdf(c) - 1)
    return 2 * e_abs - 2 / math.sqrt(math.pi)


def test_copy_oracle_is_near_zero():
    data = DataSpec("gauss1d")
    m = fit_metric(lambda n, rng: data.sample(n, rng), data, n_samples=10_000, seed=3)
    assert m < 0.05


@pytest.mark.parametrize("c", [0.0, 1.0])
def test_collapsed_generator_matches_closed_form(c):
    m = fit_metric(lambda n, rng: np.full((n, 1), c), DataSpec("gauss1d"), n_samples=10_000, seed=1)
    assert m > 0.5
    # V-statistic at n = 1e4 has standard deviation near 0.02 here
    assert m ** 2 == pytest.approx(point_mass_vs_normal(c), abs=0.06)


def test_matches_scipy_in_one_dimension():
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((700, 1)), 0.5 + 2 * rng.standard_normal((500, 1))
    assert energy_distance(x, y) == pytest.approx(stats.energy_distance(x[:, 0], y[:, 0]), rel=1e-10)


def test_symmetric_and_zero_on_self():
    rng = np.random.default_rng(4)
    x, y = rng.standard_normal((300, 2)), rng.standard_normal((200, 2)) + 1
    assert energy_distance(x, y) == energy_distance(y, x)
    assert energy_distance(x, x) == 0.0


@pytest.mark.parametrize("shape", [(50, 1), (2000, 2)])
def test_pairwise_backends_agree(shape):
    rng = np.random.default_rng(5)
    x, y = rng.standard_normal(shape), rng.standard_normal((shape[0] + 7, shape[1]))
    a = mean_pairwise_distance(x, y, "numba")
    b = mean_pairwise_distance(x, y, "numpy")
    assert a == pytest.approx(b, rel=1e-12)


def test_fit_metric_rejects_tiny_samples():
    with pytest.raises(ValueError):
        fit_metric(lambda n, rng: np.zeros((n, 1)), DataSpec(), n_samples=10)


NET = Mlp((2, 8, 2))


def snap(params, latents, step=0):
    return Snapshot(step, params, latents)


def test_shifting_identical_is_zero():
    rng = np.random.default_rng(0)
    p, z = NET.init(rng), rng.standard_normal((64, 2))
    assert shifting_difference(snap(p, z), snap(p.copy(), z), NET) == 0.0


def test_shifting_bias_offset_is_exact():
    rng = np.random.default_rng(1)
    p, z = NET.init(rng), rng.standard_normal((64, 2))
    q = p.copy()
    _, shape, b_off = NET.layout[-1]
    delta = np.array([0.3, -0.4])
    q[b_off:b_off + 2] += delta
    assert shifting_difference(snap(p, z), snap(q, z), NET) == pytest.approx(0.5, rel=1e-12)


def test_shifting_is_pseudometric():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((128, 2))
    for _ in range(20):
        a, b, c = (NET.init(rng) for _ in range(3))
        ab = shifting_difference(snap(a, z), snap(b, z), NET)
        ba = shifting_difference(snap(b, z), snap(a, z), NET)
        bc = shifting_difference(snap(b, z), snap(c, z), NET)
        ac = shifting_difference(snap(a, z), snap(c, z), NET)
        assert ab >= 0 and ab == pytest.approx(ba, rel=1e-15)
        assert ac <= ab + bc + 1e-12


def test_shifting_rejects_mismatched_latents():
    rng = np.random.default_rng(3)
    p = NET.init(rng)
    with pytest.raises(ValueError):
        shifting_difference(snap(p, rng.standard_normal((8, 2))), snap(p, rng.standard_normal((8, 2))), NET)
