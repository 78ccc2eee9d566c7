import numpy as np
import pytest

from safecma.baselines import AvoidanceConfig, AvoidanceExhausted, avoidance_ask
from safecma.cmaes import DistributionState, StrategyParams
from safecma.mathkit import RngStream


def setup_state(d=2):
    return DistributionState.initial(np.zeros(d), 1.0), StrategyParams.defaults(d)


class TestAvoidanceAsk:
    def test_all_safe_history_accepts_everything(self):
        state, params = setup_state()
        history = np.array([[0.0, 0.0], [1.0, 1.0]])
        got = avoidance_ask(state, params, history, np.array([True, True]),
                            AvoidanceConfig(), RngStream(1))
        assert len(got) == params.lam

    def test_all_unsafe_history_exhausts(self):
        state, params = setup_state()
        history = np.array([[0.0, 0.0]])
        with pytest.raises(AvoidanceExhausted):
            avoidance_ask(state, params, history, np.array([False]),
                          AvoidanceConfig(), RngStream(2))

    def test_weight_resolves_ties_toward_safe(self):
        # Candidate equidistant between a safe and an unsafe point: doubling
        # w_safe halves the effective distance to the safe point.
        state, params = setup_state()
        history = np.array([[-1.0, 0.0], [1.0, 0.0]])
        safe_flags = np.array([True, False])
        cfg = AvoidanceConfig(w_safe=2.0, w_unsafe=1.0)
        got = avoidance_ask(state, params, history, safe_flags, cfg, RngStream(3))
        # Every accepted candidate's weighted nearest neighbor must be safe.
        for _, _, x in got:
            dists = np.linalg.norm(history - x, axis=1) / np.array([2.0, 1.0])
            assert safe_flags[int(np.argmin(dists))]

    def test_equal_weights_match_euclidean(self):
        state, params = setup_state()
        rng = np.random.default_rng(4)
        history = rng.standard_normal((20, 2))
        safe_flags = rng.random(20) < 0.5
        got = avoidance_ask(state, params, history, safe_flags,
                            AvoidanceConfig(), RngStream(5))
        for _, _, x in got:
            nearest = int(np.argmin(np.linalg.norm(history - x, axis=1)))
            assert safe_flags[nearest]

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            AvoidanceConfig(w_safe=0.0)
