import numpy as np
import pytest

from safecma import gpr


def finite_diff_grad(model, z, step=1e-5):
    g = np.zeros_like(z)
    for i in range(z.shape[0]):
        zp, zm = z.copy(), z.copy()
        zp[i] += step
        zm[i] -= step
        g[i] = (gpr.posterior_mean(model, zp) - gpr.posterior_mean(model, zm)) / (2 * step)
    return g


def random_model(rng, d, n):
    # Moderate length scales keep the Gram system well conditioned so the
    # finite-difference oracle itself stays meaningful.
    inputs = rng.uniform(-2.5, 2.5, (n, d))
    targets = rng.standard_normal(n)
    return gpr.fit(inputs, targets, rng.uniform(0.8, 2.5))


class TestKernel:
    def test_self_similarity(self):
        z = np.array([1.0, -2.0])
        assert gpr.rbf_kernel(z, z, 3.0) == pytest.approx(1.0)

    def test_exponent_minus_one(self):
        h = 2.5
        z = np.zeros(2)
        zp = np.array([h * np.sqrt(2.0), 0.0])
        assert gpr.rbf_kernel(z, zp, h) == pytest.approx(np.exp(-1.0))

    def test_monotone_decreasing(self):
        h = 1.5
        z = np.zeros(3)
        values = [gpr.rbf_kernel(z, np.array([r, 0.0, 0.0]), h)
                  for r in np.linspace(0.0, 5.0, 20)]
        assert np.all(np.diff(values) < 0)


class TestFit:
    def test_interpolates_linear_targets(self):
        inputs = np.array([[0.0, 0.0], [1.0, 0.5], [-1.0, 2.0]])
        targets = 2.0 * inputs[:, 0] - inputs[:, 1]
        model = gpr.fit(inputs, targets, 4.0)
        for z, t in zip(inputs, targets):
            assert gpr.posterior_mean(model, z) == pytest.approx(t, abs=1e-6)

    def test_duplicate_inputs_with_equal_targets(self):
        inputs = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
        targets = np.array([2.0, 2.0, 0.0])
        model = gpr.fit(inputs, targets, 3.0)
        assert gpr.posterior_mean(model, inputs[0]) == pytest.approx(2.0, abs=1e-4)

    def test_zero_targets(self):
        rng = np.random.default_rng(2)
        inputs = rng.standard_normal((5, 3))
        model = gpr.fit(inputs, np.zeros(5), 10.0)
        assert np.allclose(model.alpha, 0.0)
        assert gpr.posterior_mean(model, np.ones(3)) == 0.0

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            gpr.fit(np.array([[0.0, 0.0]]), np.array([1.0]), 1.0)


class TestPosteriorMean:
    def test_decay_far_from_data(self):
        inputs = np.array([[0.0, 0.0], [1.0, 0.0]])
        model = gpr.fit(inputs, np.array([1.0, -1.0]), 0.5)
        assert abs(gpr.posterior_mean(model, np.array([50.0, 50.0]))) < 1e-10

    def test_reflection_symmetry(self):
        inputs = np.array([[-1.0, 0.0], [1.0, 0.0]])
        model = gpr.fit(inputs, np.array([1.0, 1.0]), 2.0)
        a = gpr.posterior_mean(model, np.array([0.3, 0.2]))
        b = gpr.posterior_mean(model, np.array([-0.3, 0.2]))
        assert a == pytest.approx(b, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        inputs = rng.standard_normal((6, 2))
        targets = rng.standard_normal(6)
        model = gpr.fit(inputs, targets, 5.0)
        perm = rng.permutation(6)
        model_p = gpr.fit(inputs[perm], targets[perm], 5.0)
        z = rng.standard_normal(2)
        assert gpr.posterior_mean(model, z) == pytest.approx(
            gpr.posterior_mean(model_p, z), rel=1e-10)


class TestGradient:
    def test_symmetric_pair_gradient_axis(self):
        inputs = np.array([[-1.0, 0.0], [1.0, 0.0]])
        model = gpr.fit(inputs, np.array([-1.0, 1.0]), 2.0)
        g = gpr.posterior_mean_grad(model, np.zeros(2))
        assert abs(g[1]) < 1e-12
        assert g[0] > 0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for d in (2, 5):
            model = random_model(rng, d, 15)
            for _ in range(20):
                z = rng.uniform(-3, 3, d)
                g = gpr.posterior_mean_grad(model, z)
                fd = finite_diff_grad(model, z)
                denom = max(np.linalg.norm(fd), 1e-12)
                assert np.linalg.norm(g - fd) / denom < 1e-5

    def test_zero_alpha_zero_gradient(self):
        inputs = np.array([[0.0, 0.0], [1.0, 1.0]])
        model = gpr.fit(inputs, np.zeros(2), 2.0)
        assert np.allclose(gpr.posterior_mean_grad(model, np.array([0.5, 0.5])), 0.0)
