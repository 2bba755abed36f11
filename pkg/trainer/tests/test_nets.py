import math

import numpy as np
import pytest
import torch

from softppo.nets import (
    ActorHead,
    FeatureNet,
    LstmCell,
    parse_observation,
    selection_log_prob,
)


class TestLstmCell:
    def test_zero_weights_give_zero_hidden(self):
        cell = LstmCell(4, 3)
        with torch.no_grad():
            for p in cell.parameters():
                p.zero_()
        x = torch.randn(1, 4)
        hidden, (h, c), _ = cell(x, cell.initial_state())
        assert torch.all(hidden == 0)
        assert torch.all(c == 0)

    def test_gates_stay_in_unit_interval(self):
        torch.manual_seed(0)
        cell = LstmCell(5, 4)
        state = cell.initial_state()
        for _ in range(10):
            x = torch.randn(1, 5) * 10
            _h, state, gates = cell(x, state)
            for gate in gates:
                assert torch.all(gate > 0) and torch.all(gate < 1)

    def test_recurrence_is_stateful(self):
        torch.manual_seed(1)
        cell = LstmCell(3, 3)
        x = torch.randn(1, 3)
        h1, state, _ = cell(x, cell.initial_state())
        h2, _state, _ = cell(x, state)
        assert not torch.allclose(h1, h2)

    def test_cell_state_arithmetic_matches_equations(self):
        torch.manual_seed(2)
        cell = LstmCell(3, 2)
        state = cell.initial_state()
        x = torch.randn(1, 3)
        hidden, (h, c), (f, i, o) = cell(x, state)
        joint = torch.cat([state[0], x], dim=-1)
        cand = torch.tanh(cell.w_c(joint))
        assert torch.allclose(c, f * state[1] + i * cand)
        assert torch.allclose(hidden, o * torch.tanh(c))


class TestFeatureNet:
    def test_sequence_shapes_and_state(self):
        net = FeatureNet(obs_dim=8, hidden_size=5)
        obs = torch.randn(7, 8)
        features, state = net(obs)
        assert features.shape == (7, 5)
        assert state[0].shape == (1, 5)

    def test_feedforward_variant_is_stateless(self):
        net = FeatureNet(obs_dim=8, hidden_size=5, recurrent=False)
        obs = torch.randn(4, 8)
        f1, state = net(obs)
        assert state is None
        f2, _ = net(obs)
        assert torch.allclose(f1, f2)

    def test_recurrent_features_depend_on_history(self):
        torch.manual_seed(3)
        net = FeatureNet(obs_dim=4, hidden_size=4)
        same = torch.ones(2, 4)
        features, _ = net(same)
        assert not torch.allclose(features[0], features[1])


class TestActorHead:
    def test_scores_bounded(self):
        torch.manual_seed(4)
        for control in (True, False):
            head = ActorHead(6, 10, softmax_control=control)
            scores = head(torch.randn(3, 6) * 5)
            assert torch.all(scores >= 0) and torch.all(scores <= 1)

    def test_softmax_control_sums_to_one(self):
        head = ActorHead(6, 10, softmax_control=True)
        with torch.no_grad():
            scores = head(torch.randn(1, 6))
        assert float(scores.sum()) == pytest.approx(1.0, rel=1e-6)


class TestSelectionLogProb:
    def test_shifted_scores_same_distribution(self):
        scores = torch.tensor([0.1, 0.4, 0.2, 0.6, 0.0])
        cand = torch.tensor([True, True, True, True, False])
        lp1 = selection_log_prob(scores, [3, 1], cand, temperature=0.5)
        lp2 = selection_log_prob(scores + 0.3, [3, 1], cand, temperature=0.5)
        assert float(lp1) == pytest.approx(float(lp2), rel=1e-6)

    def test_matches_monte_carlo_frequencies(self):
        """The sequential-softmax log-probability must match the empirical
        frequency of ranked selections drawn by perturbed-logit top-k (the
        server's sampling scheme)."""
        rng = np.random.default_rng(0)
        scores = np.array([0.9, 0.1, 0.5, 0.3])
        cand = np.array([True, True, True, True])
        tau = 0.7
        k = 2
        trials = 10 ** 4
        counts: dict[tuple, int] = {}
        for _ in range(trials):
            perturbed = scores / tau + rng.gumbel(size=4)
            ranked = tuple(np.argsort(-perturbed)[:k].tolist())
            counts[ranked] = counts.get(ranked, 0) + 1
        for ranked, count in counts.items():
            prob = math.exp(float(selection_log_prob(
                torch.as_tensor(scores), list(ranked),
                torch.as_tensor(cand), tau)))
            sigma = math.sqrt(trials * prob * (1 - prob))
            assert abs(count - trials * prob) <= 3.5 * sigma + 1

    def test_gradient_flows_to_scores(self):
        scores = torch.tensor([0.5, 0.2, 0.8], requires_grad=True)
        cand = torch.tensor([True, True, True])
        lp = selection_log_prob(scores, [2, 0], cand, temperature=0.1)
        lp.backward()
        assert scores.grad is not None
        assert torch.isfinite(scores.grad).all()


class TestParseObservation:
    def test_alive_mask_and_sink(self):
        obs = np.array([2.0, 30.0, 0.0, -1.0, 1.5, 0.0])
        energies, distances, alive, sink = parse_observation(obs, 3)
        assert energies.tolist() == [2.0, 0.0, 1.5]
        assert alive.tolist() == [True, False, True]
        assert sink == 2
