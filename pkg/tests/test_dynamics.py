import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcgan.dynamics import (FAMILIES, GAN_LOGSIGMOID, WGAN_LINEAR, State, SystemSpec, drift, gradient_field,
                             lipschitz_check)
from bmcgan.errors import InvalidStateError

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_wgan_drift_by_substitution(wgan):
    # h1' = 1, h2' = -1, h3' = 1, c = 1 at (0.5, 0.3):
    # d_phi = 1*1 + (-1)*(0.3 + 1) = -0.3, d_theta = 1*0.5
    d = drift(wgan, (0.5, 0.3))
    assert d == pytest.approx((-0.3, 0.5), abs=1e-15)


@pytest.mark.parametrize("kind", [WGAN_LINEAR, GAN_LOGSIGMOID])
@pytest.mark.parametrize("c", [0.0, 1.0, -2.5, 3.0])
def test_origin_is_equilibrium(kind, c):
    assert drift(SystemSpec(FAMILIES[kind], c), (0.0, 0.0)) == (0.0, 0.0)


def test_wgan_drift_orthogonal_on_random_states(rng):
    spec = SystemSpec(FAMILIES[WGAN_LINEAR], 1.0)
    for phi, th in rng.uniform(-5, 5, size=(100, 2)):
        d = drift(spec, (phi, th))
        assert d == pytest.approx((-th, phi), abs=1e-14)
        assert abs(phi * d[0] + th * d[1]) <= 1e-12 * (1 + phi * phi + th * th)


@given(finite, finite)
def test_wgan_norm_conserved_by_flow(phi, th):
    d = drift(SystemSpec(FAMILIES[WGAN_LINEAR], 0.0), (phi, th))
    assert phi * d[0] + th * d[1] == 0.0


@given(finite, finite, st.floats(-3, 3))
@settings(max_examples=50)
def test_drift_is_pure(phi, th, c):
    spec = SystemSpec(FAMILIES[GAN_LOGSIGMOID], c)
    assert drift(spec, (phi, th)) == drift(spec, (phi, th))


def test_logsigmoid_drift_matches_definition():
    spec = SystemSpec(FAMILIES[GAN_LOGSIGMOID], 1.0)
    phi, th = 0.7, -0.2
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    u = phi * (th + 1.0)
    expected = (sig(-phi) * 1.0 - sig(u) * (th + 1.0), sig(-u) * phi)
    assert drift(spec, (phi, th)) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("bad", [(math.nan, 0.0), (0.0, math.inf), (1.0,)])
def test_drift_rejects_bad_state(wgan, bad):
    with pytest.raises(InvalidStateError):
        drift(wgan, bad)


def test_gradient_field_small_grid(wgan):
    f = gradient_field(wgan, (-1, 1), (-1, 1), 3)
    assert len(f) == 9
    assert (f.dx[4], f.dy[4]) == (0.0, 0.0)
    assert (f.x[4], f.y[4]) == (0.0, 0.0)
    # row-major with x fastest
    assert list(f.x[:3]) == [-1.0, 0.0, 1.0]
    assert list(f.y[:3]) == [-1.0, -1.0, -1.0]


def test_gradient_field_matches_drift():
    spec = SystemSpec(FAMILIES[GAN_LOGSIGMOID], 0.5)
    f = gradient_field(spec, (-2, 3), (-1, 1), 7)
    for x, y, dx, dy in f.rows():
        assert (dx, dy) == drift(spec, (x, y))


def test_wgan_field_is_rotation(wgan):
    f = gradient_field(wgan, (-3, 3), (-2, 2), 25)
    assert np.max(np.abs(f.x * f.dx + f.y * f.dy)) <= 1e-12


@pytest.mark.parametrize("args", [((1, 1), (-1, 1), 3), ((-1, 1), (2, 0), 3), ((-1, 1), (-1, 1), 1)])
def test_gradient_field_rejects_degenerate(wgan, args):
    with pytest.raises(ValueError):
        gradient_field(wgan, *args)


def test_lipschitz_wgan_constants():
    fam = FAMILIES[WGAN_LINEAR]
    ratios = lipschitz_check(fam, (-10, 10), 1000)
    assert ratios == (0.0, 0.0, 0.0)
    assert all(r <= a + 1e-9 for r, a in zip(ratios, fam.alpha))
    assert all(a > 0 for a in fam.alpha)


def test_lipschitz_logsigmoid_bounded_by_quarter():
    fam = FAMILIES[GAN_LOGSIGMOID]
    ratios = lipschitz_check(fam, (-10, 10), 1000)
    assert all(r <= 0.25 + 1e-9 for r in ratios)
    # dense sampling gets close to the supremum of |sigmoid'| = 1/4
    assert min(ratios) > 0.249


def test_lipschitz_single_pair():
    fam = FAMILIES[GAN_LOGSIGMOID]
    r1, r2, r3 = lipschitz_check(fam, (0.0, 1.0), 2)
    expected = abs(0.5 - 1.0 / (1.0 + math.exp(-1.0)))
    assert r1 == pytest.approx(expected, rel=1e-12)
    assert r1 == pytest.approx(0.2311, abs=1e-4)


@pytest.mark.parametrize("kind", sorted(FAMILIES))
def test_every_family_respects_declared_alpha(kind):
    fam = FAMILIES[kind]
    ratios = lipschitz_check(fam, (-10, 10), 800)
    assert all(r <= a + 1e-9 for r, a in zip(ratios, fam.alpha))


@pytest.mark.parametrize("kind", sorted(FAMILIES))
def test_family_derivative_signs_near_zero(kind):
    h1, h2, h3 = FAMILIES[kind].derivatives
    xs = np.linspace(-0.5, 0.5, 11)
    assert np.all(h1(xs) >= 0) and np.all(h3(xs) >= 0) and np.all(h2(xs) <= 0)


def test_state_helpers():
    s = State(3.0, 4.0)
    assert s.norm == 5.0
    assert s.is_finite()
    with pytest.raises(ValueError):
        SystemSpec("nope", 1.0)
