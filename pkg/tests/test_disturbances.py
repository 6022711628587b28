"""Distribution families: support, exact moments, and sampler agreement.

Sampler checks compare batch statistics against the closed-form moments
within 5-sigma normal bands, so they are deterministic given the seeds and
essentially never flake.
"""

import math

import numpy as np
import pytest

from martsafe.disturbances import (
    Categorical,
    ProductOfDisks,
    TruncatedGaussian,
    UniformBall,
    UniformDisk2,
    UniformInterval,
)

RNG = lambda: np.random.default_rng(2024)


def assert_scalar_moments(dist, n=200_000):
    mean, var = dist.exact_moments()
    x = dist.sample_batch(RNG(), n)
    se_mean = math.sqrt(var / n) if var > 0 else 1e-12
    assert abs(float(np.mean(x)) - mean) <= 5.0 * se_mean
    m4 = float(np.mean((x - mean) ** 4))
    se_var = math.sqrt(max(m4 - var * var, 1e-30) / n)
    assert abs(float(np.var(x)) - var) <= 5.0 * se_var


class TestUniformInterval:
    def test_exact_moments(self):
        mean, var = UniformInterval(-1.0, 1.0).exact_moments()
        assert mean == 0.0
        assert var == pytest.approx(1.0 / 3.0, rel=1e-15)

    def test_support(self):
        x = UniformInterval(-1.0, 1.0).sample_batch(RNG(), 10_000)
        assert np.all(x >= -1.0) and np.all(x <= 1.0)

    def test_sampler_moments(self):
        assert_scalar_moments(UniformInterval(-1.0, 1.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            UniformInterval(1.0, 1.0)


class TestTruncatedGaussian:
    def test_standard_window_variance(self):
        # frozen mpmath value for a standard normal truncated at +-1
        _, var = TruncatedGaussian(0.0, 1.0, -1.0, 1.0).exact_moments()
        assert var == pytest.approx(0.29112509477279321, rel=1e-12)

    def test_third_std_window_variance(self):
        _, var = TruncatedGaussian(0.0, 1.0 / 3.0, -1.0, 1.0).exact_moments()
        assert var == pytest.approx(0.10814854718472683, rel=1e-12)
        assert var <= (1.0 / 3.0) ** 2  # satisfies the sigma = 1/3 premise

    def test_asymmetric_mean(self):
        mean, _ = TruncatedGaussian(0.0, 1.0, 0.0, 2.0).exact_moments()
        assert mean > 0.0

    def test_support_and_moments(self):
        dist = TruncatedGaussian(0.0, 1.0, -1.0, 1.0)
        x = dist.sample_batch(RNG(), 10_000)
        assert np.all(x >= -1.0) and np.all(x <= 1.0)
        assert_scalar_moments(dist)

    def test_scalar_sample_in_support(self):
        dist = TruncatedGaussian(0.5, 2.0, -0.25, 0.75)
        rng = RNG()
        for _ in range(200):
            assert -0.25 <= dist.sample(rng) <= 0.75


class TestCategorical:
    PAPER_ATOMS = ((-1.0, 1.0 / 6.0), (0.2, 5.0 / 6.0))

    def test_exact_moments(self):
        mean, var = Categorical(self.PAPER_ATOMS).exact_moments()
        assert mean == pytest.approx(0.0, abs=1e-15)
        assert var == pytest.approx(0.2, rel=1e-12)

    def test_degenerate(self):
        dist = Categorical(((5.0, 1.0),))
        rng = RNG()
        assert all(dist.sample(rng) == 5.0 for _ in range(20))
        assert np.all(dist.sample_batch(rng, 100) == 5.0)

    def test_sampler_moments(self):
        assert_scalar_moments(Categorical(self.PAPER_ATOMS))

    def test_prob_sum_validated(self):
        with pytest.raises(ValueError):
            Categorical(((0.0, 0.5), (1.0, 0.4)))


class TestUniformDisk2:
    def test_exact_moments(self):
        mean, cov = UniformDisk2(0.3).exact_moments()
        assert np.all(mean == 0.0)
        assert cov == pytest.approx(0.0225 * np.eye(2))

    def test_support(self):
        x = UniformDisk2(0.3).sample_batch(RNG(), 20_000)
        assert np.all(np.linalg.norm(x, axis=1) <= 0.3 + 1e-12)

    def test_sampler_moments(self):
        dist = UniformDisk2(0.5)
        mean, cov = dist.exact_moments()
        x = dist.sample_batch(RNG(), 400_000)
        n = x.shape[0]
        for j in range(2):
            se = math.sqrt(cov[j, j] / n)
            assert abs(float(np.mean(x[:, j]))) <= 5.0 * se

    def test_projection_variance_is_quarter_radius_sq(self):
        dist = UniformDisk2(1.0)
        x = dist.sample_batch(RNG(), 400_000)
        e = np.array([math.cos(0.7), math.sin(0.7)])
        proj = x @ e
        assert float(np.var(proj)) == pytest.approx(0.25, abs=0.005)


class TestProductOfDisks:
    def test_dim_and_cov(self):
        dist = ProductOfDisks((0.06, 0.06))
        assert dist.dim == 4
        _, cov = dist.exact_moments()
        assert cov == pytest.approx((0.06**2 / 4.0) * np.eye(4))

    def test_blockwise_support(self):
        dist = ProductOfDisks((0.1, 0.2))
        x = dist.sample_batch(RNG(), 5000)
        assert np.all(np.linalg.norm(x[:, :2], axis=1) <= 0.1 + 1e-12)
        assert np.all(np.linalg.norm(x[:, 2:], axis=1) <= 0.2 + 1e-12)


class TestUniformBall:
    def test_cov(self):
        _, cov = UniformBall(0.5, 4).exact_moments()
        assert cov == pytest.approx((0.25 / 6.0) * np.eye(4))

    def test_support_and_moments(self):
        dist = UniformBall(0.5, 4)
        x = dist.sample_batch(RNG(), 200_000)
        assert np.all(np.linalg.norm(x, axis=1) <= 0.5 + 1e-12)
        _, cov = dist.exact_moments()
        for j in range(4):
            se = math.sqrt(cov[j, j] / x.shape[0])
            assert abs(float(np.mean(x[:, j]))) <= 5.0 * se
            m4 = float(np.mean(x[:, j] ** 4))
            se_v = math.sqrt((m4 - cov[j, j] ** 2) / x.shape[0])
            assert abs(float(np.var(x[:, j])) - cov[j, j]) <= 5.0 * se_v
