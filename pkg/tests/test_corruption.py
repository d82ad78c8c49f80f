import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgdexp.corruption import (
    AdditiveOblivious,
    Gaussian,
    NoCorruption,
    ResidualSignAdversary,
    SignFlip,
    Uniform,
    corrupt,
    corruption_rate_audit,
)
from sgdexp.measurement import GaussianSphere, sample_block

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_probability_validated_at_construction():
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        SignFlip(1.3)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        ResidualSignAdversary(-0.1)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        AdditiveOblivious(2.0, Uniform(1.0))


def test_noise_law_validation():
    with pytest.raises(ValueError):
        Uniform(0.0)
    with pytest.raises(ValueError):
        Gaussian(-1.0)


def test_sign_flip_deterministic_at_p1():
    y, was = corrupt(SignFlip(1.0), 3.0, np.random.default_rng(0))
    assert y == -3.0 and was is True


@pytest.mark.parametrize(
    "spec",
    [
        NoCorruption(),
        SignFlip(0.0),
        ResidualSignAdversary(0.0),
        AdditiveOblivious(0.0, Uniform(300.0)),
    ],
)
def test_identity_channel_at_p0(spec):
    rng = np.random.default_rng(1)
    a = np.array([1.0, 0.0])
    x = np.array([2.0, -1.0])
    for clean in (-5.0, 0.0, 7.25):
        y, was = corrupt(spec, clean, rng, a=a, x_true=x, x_iter=x)
        assert y == clean and was is False


def test_adversary_requires_iterate():
    with pytest.raises(ValueError, match="x_iter"):
        corrupt(ResidualSignAdversary(0.5), 1.0, np.random.default_rng(0), a=np.array([1.0]))


def test_adversary_reflects_about_prediction():
    rng = np.random.default_rng(2)
    a = np.array([0.6, 0.8])
    x_iter = np.array([1.0, -2.0])
    m = float(x_iter @ a)
    y, was = corrupt(ResidualSignAdversary(1.0), 3.0, rng, a=a, x_iter=x_iter)
    assert was is True
    assert y == pytest.approx(2 * m - 3.0, rel=1e-15)
    # residual magnitude is preserved, sign is flipped
    assert abs(y - m) == pytest.approx(abs(3.0 - m), rel=1e-12)


def test_adversary_relu_reference():
    rng = np.random.default_rng(3)
    a = np.array([1.0, 0.0])
    x_iter = np.array([-2.0, 0.0])  # <x, a> = -2, relu prediction is 0
    y, _ = corrupt(ResidualSignAdversary(1.0), 1.5, rng, a=a, x_iter=x_iter, relu_model=True)
    assert y == pytest.approx(-1.5, rel=1e-15)
    y_lin, _ = corrupt(ResidualSignAdversary(1.0), 1.5, rng, a=a, x_iter=x_iter)
    assert y_lin == pytest.approx(2 * (-2.0) - 1.5, rel=1e-15)


@given(clean=finite, xv=finite, seed=st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_adversary_preserves_residual_magnitude(clean, xv, seed):
    a = np.array([1.0])
    x_iter = np.array([xv])
    y, was = corrupt(ResidualSignAdversary(1.0), clean, np.random.default_rng(seed), a=a, x_iter=x_iter)
    assert was
    m = xv
    assert abs(y - m) == pytest.approx(abs(clean - m), rel=1e-9, abs=1e-9)


def test_oblivious_symmetry_large_uniform():
    # p=1 with uniform noise on [-300, 300]: mean offset ~ 0, P(offset > 0) ~ 1/2
    spec = AdditiveOblivious(1.0, Uniform(300.0))
    rng = np.random.default_rng(4)
    n = 1_000_000
    clean = 11.5
    offsets = np.empty(n)
    for i in range(n):
        y, was = corrupt(spec, clean, rng)
        assert was
        offsets[i] = y - clean
    se_mean = offsets.std(ddof=1) / math.sqrt(n)
    assert abs(offsets.mean()) < 4 * se_mean
    frac_pos = (offsets > 0).mean()
    assert abs(frac_pos - 0.5) < 4 * math.sqrt(0.25 / n)


def test_oblivious_gaussian_variance():
    spec = AdditiveOblivious(1.0, Gaussian(30.0))
    rng = np.random.default_rng(5)
    n = 100_000
    draws = np.array([corrupt(spec, 0.0, rng)[0] for _ in range(n)])
    # variance of the sample variance is ~ 2 var^2 / n
    assert abs(draws.var(ddof=1) - 30.0) < 4 * 30.0 * math.sqrt(2.0 / n)


def test_oblivious_noise_independent_of_measurement():
    # correlation between the added noise and each coordinate of a ~ 0
    d, n = 5, 100_000
    spec = AdditiveOblivious(1.0, Uniform(10.0))
    rng = np.random.default_rng(6)
    A, _ = sample_block(GaussianSphere(d), rng, n)
    noises = np.empty(n)
    for i in range(n):
        y, _ = corrupt(spec, 0.0, rng, a=A[i])
        noises[i] = y
    sig_nu = noises.std(ddof=1)
    for j in range(d):
        corr = np.mean(noises * A[:, j]) / (sig_nu * A[:, j].std(ddof=1))
        assert abs(corr) < 4 / math.sqrt(n)


class TestAudit:
    def test_p0_exact(self):
        assert corruption_rate_audit(SignFlip(0.0), 1000, np.random.default_rng(0)) == 0.0

    def test_p1_exact(self):
        assert corruption_rate_audit(SignFlip(1.0), 1000, np.random.default_rng(0)) == 1.0

    def test_binomial_consistency(self):
        n, p = 100_000, 0.4
        rate = corruption_rate_audit(SignFlip(p), n, np.random.default_rng(7))
        assert abs(rate - p) < 4 * math.sqrt(p * (1 - p) / n)

    @pytest.mark.parametrize(
        "spec",
        [
            ResidualSignAdversary(0.25),
            AdditiveOblivious(0.25, Gaussian(30.0)),
        ],
    )
    def test_binomial_consistency_other_channels(self, spec):
        n = 20_000
        rate = corruption_rate_audit(spec, n, np.random.default_rng(8))
        assert abs(rate - 0.25) < 4 * math.sqrt(0.25 * 0.75 / n)

    def test_minimum_trials(self):
        with pytest.raises(ValueError, match="n_trials"):
            corruption_rate_audit(SignFlip(0.5), 10, np.random.default_rng(0))
