import numpy as np
import pytest
from scipy import integrate

from safecma import mathkit
from safecma.mathkit import (
    NonSymmetricMatrix,
    RngStream,
    SingularCovariance,
    chi2_cdf,
    chi2_ppf,
    eig_sym,
    sqrt_spd,
)


def random_spd(rng, d):
    b = rng.standard_normal((d, d))
    return b @ b.T + np.eye(d)


def chi2_cdf_quadrature(x, k):
    """Independent oracle: numeric integration of the chi-squared density."""
    from scipy.special import gammaln

    log_norm = -(k / 2.0) * np.log(2.0) - gammaln(k / 2.0)

    def density(t):
        return np.exp(log_norm + (k / 2.0 - 1.0) * np.log(t) - t / 2.0)

    val, _ = integrate.quad(density, 0.0, x, limit=200)
    return val


class TestEigSym:
    def test_identity(self):
        w, v = eig_sym(np.eye(3))
        assert np.allclose(w, 1.0)
        assert np.max(np.abs(v @ v.T - np.eye(3))) <= 1e-10

    def test_diagonal(self):
        w, _ = eig_sym(np.diag([1.0, 4.0, 9.0]))
        assert np.allclose(w, [1.0, 4.0, 9.0])

    def test_reconstruction_random_spd(self):
        rng = np.random.default_rng(0)
        a = random_spd(rng, 5)
        w, v = eig_sym(a)
        recon = (v * w) @ v.T
        assert np.max(np.abs(a - recon)) <= 1e-9 * np.max(np.abs(a))
        assert np.max(np.abs(v @ v.T - np.eye(5))) <= 1e-10

    def test_rejects_nonsymmetric(self):
        with pytest.raises(NonSymmetricMatrix):
            eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSqrtSpd:
    def test_identity(self):
        assert np.allclose(sqrt_spd(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        assert np.allclose(sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_multiply_back_many_dims(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = int(rng.integers(2, 21))
            a = random_spd(rng, d)
            s = sqrt_spd(a)
            assert np.allclose(s, s.T)
            assert np.max(np.abs(s @ s - a)) <= 1e-9 * np.max(np.abs(a))

    def test_rejects_indefinite(self):
        with pytest.raises(SingularCovariance):
            sqrt_spd(np.diag([1.0, -1.0]))


class TestChi2:
    def test_closed_form_k2(self):
        assert chi2_ppf(0.5, 2) == pytest.approx(2.0 * np.log(2.0), abs=1e-12)
        assert chi2_ppf(0.9, 2) == pytest.approx(2.0 * np.log(10.0), abs=1e-12)

    def test_against_quadrature(self):
        x = chi2_ppf(0.9, 5)
        assert chi2_cdf_quadrature(x, 5) == pytest.approx(0.9, abs=1e-8)

    def test_monotone_in_p(self):
        ps = np.linspace(0.01, 0.99, 99)
        for k in (1, 3, 10):
            values = [chi2_ppf(p, k) for p in ps]
            assert np.all(np.diff(values) > 0)

    def test_cdf_roundtrip(self):
        for p in (0.05, 0.5, 0.95):
            for k in (1, 2, 5, 20):
                assert chi2_cdf(chi2_ppf(p, k), k) == pytest.approx(p, abs=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chi2_ppf(0.0, 2)
        with pytest.raises(ValueError):
            chi2_ppf(1.0, 2)


class TestRngStream:
    def test_determinism(self):
        a = RngStream(42).standard_normal(5)
        b = RngStream(42).standard_normal(5)
        assert np.array_equal(a, b)
        c = RngStream(42)
        first, second = c.standard_normal(5), c.standard_normal(5)
        assert not np.array_equal(first, second)

    def test_law_of_large_numbers(self):
        draws = RngStream(7).standard_normal(100_000)
        assert abs(draws.mean()) < 0.02
        assert abs(draws.var() - 1.0) < 0.05

    def test_rejects_zero_dim(self):
        with pytest.raises(ValueError):
            RngStream(1).standard_normal(0)

    def test_derive_seed_spreads(self):
        seeds = {mathkit.derive_seed(123, i) for i in range(100)}
        assert len(seeds) == 100
