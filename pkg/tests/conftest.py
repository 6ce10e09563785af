"""Shared builders: the bundled re-entrant line, simple queues, and a seeded
generator of random valid (network, policy) instances."""

from __future__ import annotations

import numpy as np
import pytest

from sbpq import DistributionSpec, NetworkSpec, PriorityPolicy
from sbpq.errors import AssumptionFailure
from sbpq.matrices import build_bundle
from sbpq.network import canonical_view
from sbpq.network import solve_traffic


GAMMA_SHAPES = {"arrival": 0.75, 1: 0.95, 2: 0.6, 3: 0.95, 4: 0.6, 5: 0.95}

# the four §-style policy shorthands used across tests (0-based, high->low)
POLICY_5312_24 = PriorityPolicy([(4, 2, 0), (1, 3)])   # {(5,3,1),(2,4)}
POLICY_5312_42 = PriorityPolicy([(4, 2, 0), (3, 1)])   # {(5,3,1),(4,2)}


def reentrant_line(rho1: float, rho2: float, scv=None) -> NetworkSpec:
    """Two-station five-class chain 1->2->3->4->5 over stations (1,2,1,2,1).

    Means are the load profile rho1*(1/2, ., 1/4, ., 1/4), rho2*(., 1/3, ., 2/3, .);
    primitives are gamma with the standard shape table unless scv overrides.
    """
    P = np.zeros((5, 5))
    P[0, 1] = P[1, 2] = P[2, 3] = P[3, 4] = 1.0
    means = [rho1 / 2, rho2 / 3, rho1 / 4, rho2 * 2 / 3, rho1 / 4]
    if scv is None:
        service = [DistributionSpec("gamma", 1 / GAMMA_SHAPES[k]) for k in (1, 2, 3, 4, 5)]
        arrival = [DistributionSpec("gamma", 1 / GAMMA_SHAPES["arrival"]),
                   None, None, None, None]
    else:
        service = [DistributionSpec.from_scv(scv)] * 5
        arrival = [DistributionSpec.from_scv(scv), None, None, None, None]
    return NetworkSpec(
        station_of=[0, 1, 0, 1, 0],
        arrival_rate=[1.0, 0, 0, 0, 0],
        mean_service=means,
        routing=P,
        arrival_dist=arrival,
        service_dist=service,
        stability_constraints=[(1, 4)])


def single_queue(rho: float, family: str = "exponential",
                 alpha: float = 1.0) -> tuple[NetworkSpec, PriorityPolicy]:
    spec = NetworkSpec(
        station_of=[0], arrival_rate=[alpha], mean_service=[rho / alpha],
        routing=[[0.0]],
        arrival_dist=[DistributionSpec(family, 1.0 if family == "exponential" else 0.0)],
        service_dist=[DistributionSpec(family, 1.0 if family == "exponential" else 0.0)])
    return spec, PriorityPolicy([(0,)])


def priority_station(alpha_low=0.3, alpha_high=0.3, m_low=1.0,
                     m_high=1.0) -> tuple[NetworkSpec, PriorityPolicy]:
    """Two exponential classes at one station; class 1 has priority."""
    spec = NetworkSpec(
        station_of=[0, 0],
        arrival_rate=[alpha_low, alpha_high],
        mean_service=[m_low, m_high],
        routing=np.zeros((2, 2)),
        arrival_dist=[DistributionSpec("exponential", 1.0)] * 2,
        service_dist=[DistributionSpec("exponential", 1.0)] * 2)
    return spec, PriorityPolicy([(1, 0)])


def not_p_matrix_instance() -> tuple[NetworkSpec, PriorityPolicy]:
    """A stable open network whose reflection matrix fails the minor check."""
    P = np.array([
        [0.0, 0.699, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.743],
        [0.0, 0.0, 0.0, 0.0, 0.61],
        [0.0, 0.161, 0.304, 0.0, 0.281],
        [0.338, 0.0, 0.166, 0.087, 0.0]])
    spec = NetworkSpec([0, 1, 1, 1, 0], [0.0, 0.597, 0.0, 0.244, 0.846],
                       [0.0951, 0.4624, 0.1634, 0.643, 0.2889], P,
                       scv_service=np.ones(5), scv_arrival=np.ones(5))
    return spec, PriorityPolicy([(4, 0), (3, 1, 2)])


def singular_high_block_instance() -> tuple[NetworkSpec, PriorityPolicy]:
    """Routing into the high classes tuned so their block loses rank."""
    p = (1 / 1.2) * (1 / 0.9) / (0.8 * 20 * 20)
    P = np.zeros((4, 4))
    P[0, 3] = 0.8
    P[1, 2] = p
    spec = NetworkSpec([0, 1, 0, 1], [0.2, 0.2, 0, 0], [0.05, 0.05, 1.2, 0.9],
                       P, scv_service=np.ones(4), scv_arrival=np.ones(4))
    return spec, PriorityPolicy([(2, 0), (3, 1)])


def random_open_network(rng: np.random.Generator, max_stations=3,
                        max_classes=8) -> tuple[NetworkSpec, PriorityPolicy]:
    """One random stable open network with a random priority policy.

    Loads are kept below ~0.95 per station; classes the traffic never
    reaches keep unit means.  No assumption filtering here.
    """
    J = int(rng.integers(1, max_stations + 1))
    K = int(rng.integers(J, max_classes + 1))
    station_of = np.concatenate([np.arange(J), rng.integers(0, J, K - J)])
    station_of = rng.permutation(station_of)
    # relabel so stations appear in order of first class (cosmetic only)
    P = rng.uniform(0, 1, (K, K)) * (rng.uniform(0, 1, (K, K)) < 0.45)
    rs = P.sum(axis=1, keepdims=True)
    shrink = rng.uniform(0.3, 0.95, (K, 1))
    P = np.where(rs > 0, P / np.maximum(rs, 1e-300) * shrink, 0.0)
    alpha = np.where(rng.uniform(0, 1, K) < 0.5, rng.uniform(0.2, 1.0, K), 0.0)
    if alpha.max() == 0:
        alpha[int(rng.integers(K))] = 1.0
    probe = NetworkSpec(station_of, alpha, np.ones(K), P, scv_service=np.ones(K))
    lam = solve_traffic(probe)
    m = np.ones(K)
    for j in range(J):
        cls = [k for k in range(K) if station_of[k] == j]
        wts = rng.uniform(0.2, 1.0, len(cls))
        denom = sum(lam[c] * w for c, w in zip(cls, wts))
        if denom > 0:
            m[cls] = wts / denom * rng.uniform(0.4, 0.95)
    scv = rng.uniform(0.25, 2.5, K)
    spec = NetworkSpec(station_of, alpha, m, P,
                       scv_service=scv, scv_arrival=rng.uniform(0.25, 2.5, K))
    order = [tuple(int(c) for c in rng.permutation(spec.classes_at(j)))
             for j in range(J)]
    return spec, PriorityPolicy(order)


def random_valid_instance(rng: np.random.Generator, max_stations=3,
                          max_classes=8):
    """Draw random instances until one satisfies the structural assumptions."""
    while True:
        spec, policy = random_open_network(rng, max_stations, max_classes)
        try:
            view = canonical_view(spec, policy)
            bundle = build_bundle(view, check=False)
        except AssumptionFailure:
            continue
        if bundle.diagnostics.p_matrix.status == "yes" and bundle.w is not None:
            return spec, policy, view, bundle


@pytest.fixture(scope="session")
def reentrant_96_99():
    return reentrant_line(0.96, 0.99)


@pytest.fixture(scope="session")
def reentrant_90_99():
    return reentrant_line(0.90, 0.99)
