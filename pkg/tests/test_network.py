"""Network model: validation, canonical ordering, traffic solve, idle law."""

import numpy as np
import pytest

import sbpq
from sbpq import (DistributionSpec, NetworkSpec, PriorityPolicy, canonicalize,
                  idle_probabilities, solve_traffic, traffic_intensities,
                  validate_spec)
from sbpq.errors import PolicyError

from conftest import (POLICY_5312_24, POLICY_5312_42, random_open_network,
                      reentrant_line)


class TestValidate:
    def test_reentrant_line_is_clean(self, reentrant_96_99):
        assert validate_spec(reentrant_96_99) == []

    def test_routing_row_above_one(self):
        spec = NetworkSpec([0, 0], [1, 0], [0.2, 0.2],
                           [[0.0, 0.7], [0.5, 0.0]], scv_service=[1, 1])
        bad = NetworkSpec(spec.station_of, spec.arrival_rate, spec.mean_service,
                          [[0.0, 0.7], [0.5, 0.7]], scv_service=[1, 1])
        diags = validate_spec(bad)
        assert len(diags) == 1
        assert "routing[2]" in diags[0].path

    def test_identity_routing_rejected(self):
        spec = NetworkSpec([0], [1.0], [0.5], [[1.0]], scv_service=[1.0])
        diags = validate_spec(spec)
        assert any("singular" in d.message for d in diags)

    def test_nonpositive_mean_and_negative_rate(self):
        spec = NetworkSpec([0, 0], [1, -0.5], [0.2, 0.0],
                           np.zeros((2, 2)), scv_service=[1, 1])
        paths = {d.path for d in validate_spec(spec)}
        assert "classes[2].mean_service" in paths
        assert "classes[2].arrival_rate" in paths

    def test_stability_constraint_reported(self):
        # single station, one class, declared bound on its own load
        spec = NetworkSpec([0], [1.0], [0.9], [[0.0]], scv_service=[1.0],
                           stability_constraints=[(0,)])
        assert validate_spec(spec) == []
        hot = NetworkSpec([0], [1.0], [1.2], [[0.0]], scv_service=[1.0],
                          stability_constraints=[(0,)])
        diags = validate_spec(hot)
        assert any("stability" in d.path for d in diags)

    def test_virtual_station_constraint_on_reentrant_line(self):
        spec = reentrant_line(0.96, 0.99)
        # classes 2 and 5 carry load 0.33 + 0.24 < 1: declared constraint holds
        assert validate_spec(spec) == []


class TestDistributionSpec:
    def test_gamma_shape_matches_scv(self):
        d = DistributionSpec("gamma", 1 / 0.6)
        code, shape, scale, _ = d.sampling_params()
        assert code == 0
        assert shape * scale == pytest.approx(1.0)        # unit mean
        assert shape * scale ** 2 == pytest.approx(d.scv)  # declared variance

    def test_hyperexp2_moments(self):
        d = DistributionSpec("hyperexp2", 2.5)
        _, p, m1, m2 = d.sampling_params()
        mean = p * m1 + (1 - p) * m2
        second = 2 * p * m1 ** 2 + 2 * (1 - p) * m2 ** 2
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert second - mean ** 2 == pytest.approx(2.5, abs=1e-12)

    @pytest.mark.parametrize("family,scv", [
        ("exponential", 0.7), ("deterministic", 0.3),
        ("hyperexp2", 0.9), ("gamma", 0.0)])
    def test_inconsistent_scv_rejected(self, family, scv):
        with pytest.raises(ValueError):
            DistributionSpec(family, scv)


class TestCanonicalize:
    def test_reentrant_low_and_high_slots(self, reentrant_96_99):
        idx = canonicalize(reentrant_96_99, POLICY_5312_24)
        # low classes: class 1 -> slot 1, class 4 -> slot 2 (1-based labels)
        assert idx.canon_to_user.tolist() == [0, 3, 2, 4, 1]
        assert idx.low_user_classes.tolist() == [0, 3]
        # high chain: 1+ = 3, 3+ = 5 at station 1; 4+ = 2 at station 2
        assert idx.succ[0] == 2 and idx.succ[2] == 3 and idx.succ[3] == -1
        assert idx.succ[1] == 4 and idx.succ[4] == -1

    def test_station2_low_class_under_swapped_policy(self, reentrant_96_99):
        idx = canonicalize(reentrant_96_99, POLICY_5312_42)
        assert idx.canon_to_user[1] == 1      # class 2 is station 2's low class

    def test_single_class_network(self):
        spec = NetworkSpec([0], [1.0], [0.5], [[0.0]], scv_service=[1.0])
        idx = canonicalize(spec, PriorityPolicy([(0,)]))
        assert idx.low_user_classes.tolist() == [0]
        assert idx.num_classes == idx.num_low == 1
        assert idx.succ.tolist() == [-1]

    def test_h_sets(self, reentrant_96_99):
        idx = canonicalize(reentrant_96_99, POLICY_5312_24)
        assert sorted(idx.h_set(0)) == [0, 2, 4]        # all of station 1
        assert sorted(idx.h_set(2)) == [2, 4]
        assert idx.h_set(4) == [4]
        assert sorted(idx.h_set(3)) == [1, 3]
        # h_set = {k} union h_plus_set
        for k in range(5):
            assert idx.h_set(k) == [k] + idx.h_plus_set(k)

    def test_round_trip_is_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            spec, policy = random_open_network(rng)
            idx = canonicalize(spec, policy)
            assert np.array_equal(idx.canon_to_user[idx.user_to_canon],
                                  np.arange(spec.num_classes))
            assert np.array_equal(idx.user_to_canon[idx.canon_to_user],
                                  np.arange(spec.num_classes))

    def test_policy_mismatch_raises(self, reentrant_96_99):
        with pytest.raises(PolicyError):
            canonicalize(reentrant_96_99, PriorityPolicy([(4, 2, 1), (0, 3)]))


class TestTraffic:
    def test_reentrant_chain_rates(self, reentrant_96_99):
        assert solve_traffic(reentrant_96_99) == pytest.approx(np.ones(5))

    def test_tandem_split(self):
        spec = NetworkSpec([0, 0], [1.0, 0.0], [0.3, 0.3],
                           [[0.0, 0.5], [0.0, 0.0]], scv_service=[1, 1])
        assert solve_traffic(spec) == pytest.approx([1.0, 0.5])

    def test_linearity_in_sources(self):
        rng = np.random.default_rng(7)
        spec, _ = random_open_network(rng, max_stations=2, max_classes=6)
        K = spec.num_classes
        inv = np.linalg.inv(np.eye(K) - spec.routing.T)
        for k in range(K):
            alpha = np.zeros(K)
            alpha[k] = 0.7
            s = NetworkSpec(spec.station_of, alpha, spec.mean_service,
                            spec.routing, scv_service=np.ones(K))
            assert solve_traffic(s) == pytest.approx(0.7 * inv[:, k])

    def test_rates_dominate_external(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            spec, _ = random_open_network(rng)
            lam = solve_traffic(spec)
            assert np.all(lam >= spec.arrival_rate - 1e-12)
            # equality exactly for classes no one routes into
            fed = spec.routing.sum(axis=0) > 0
            assert lam[~fed] == pytest.approx(spec.arrival_rate[~fed])

    def test_intensities_match_profile(self, reentrant_96_99):
        rho, flagged = traffic_intensities(reentrant_96_99)
        assert rho == pytest.approx([0.96, 0.99])
        assert flagged == []

    def test_intensity_flagging_and_sum_identity(self):
        spec = NetworkSpec([0] * 5, np.ones(5), [0.1] * 5,
                           np.zeros((5, 5)), scv_service=np.ones(5))
        rho, flagged = traffic_intensities(spec)
        assert rho == pytest.approx([0.5])
        assert flagged == []
        rng = np.random.default_rng(13)
        for _ in range(10):
            s, _ = random_open_network(rng)
            lam = solve_traffic(s)
            rho, _ = traffic_intensities(s)
            assert rho.sum() == pytest.approx(float(np.sum(lam * s.mean_service)))

    def test_overload_flag(self):
        spec = NetworkSpec([0], [1.0], [1.5], [[0.0]], scv_service=[1.0])
        _, flagged = traffic_intensities(spec)
        assert flagged == [0]


class TestIdleProbabilities:
    def test_reentrant_values(self, reentrant_96_99):
        beta = idle_probabilities(reentrant_96_99, POLICY_5312_24)
        assert beta[0] == pytest.approx(0.04)            # 1 - rho_1
        assert beta[4] == pytest.approx(1 - 0.24)        # top class at station 1
        assert beta[3] == pytest.approx(0.01)            # 1 - rho_2
        assert beta[1] == pytest.approx(1 - 0.33)
        assert beta[2] == pytest.approx(1 - 0.48)

    def test_low_classes_see_station_slack(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            spec, policy = random_open_network(rng)
            beta = idle_probabilities(spec, policy)
            rho, _ = traffic_intensities(spec)
            for j in range(spec.num_stations):
                assert beta[policy.low_class(j)] == pytest.approx(1 - rho[j])

    def test_busy_classes_below_one(self):
        rng = np.random.default_rng(19)
        spec, policy = random_open_network(rng)
        lam = solve_traffic(spec)
        beta = idle_probabilities(spec, policy)
        for k in range(spec.num_classes):
            if lam[k] * spec.mean_service[k] > 0:
                assert beta[k] < 1.0


class TestRelabeling:
    def test_constants_invariant_under_user_relabeling(self, reentrant_96_99):
        perm = [3, 0, 4, 2, 1]
        spec2 = reentrant_96_99.relabel(perm)
        pol2 = POLICY_5312_24.relabel(perm)
        r1 = sbpq.analyze(reentrant_96_99, POLICY_5312_24)
        r2 = sbpq.analyze(spec2, pol2)
        m1 = {perm[c.user_class]: c.mean_estimate for c in r1.constants}
        m2 = {c.user_class: c.mean_estimate for c in r2.constants}
        assert m1 == pytest.approx(m2)
        assert r1.cycle_time == pytest.approx(r2.cycle_time, rel=1e-12)
