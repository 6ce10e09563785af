"""Multiclass network data model, validation, and first-order traffic quantities.

Conventions used throughout the package:

* classes and stations are 0-based in the Python API; config files and CSV
  outputs use 1-based labels,
* station order is significant: station ``j`` is the one whose load sits at
  the ``j``-th separation scale in the heavy-traffic family, so configs must
  list stations from least to most critically loaded,
* inter-arrival times are ``T_e / arrival_rate`` and service times are
  ``mean_service * T_s`` where ``T_e``, ``T_s`` are unit-mean draws described
  by :class:`DistributionSpec`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import PolicyError, SingularRoutingError

PIVOT_TOL = 1e-12

_FAMILIES = ("gamma", "exponential", "deterministic", "hyperexp2")


@dataclass(frozen=True)
class DistributionSpec:
    """A unit-mean positive distribution with a declared squared CV.

    The draw is always normalized to mean 1; the simulator rescales it by the
    class mean service time (or by 1/arrival_rate for inter-arrival times).
    """

    family: str
    scv: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        if self.scv < 0:
            raise ValueError(f"scv must be >= 0, got {self.scv}")
        if self.family == "gamma" and self.scv <= 0:
            raise ValueError("gamma requires scv > 0 (shape = 1/scv)")
        if self.family == "exponential" and abs(self.scv - 1.0) > 1e-12:
            raise ValueError("exponential has scv 1; declare scv: 1.0")
        if self.family == "deterministic" and self.scv != 0:
            raise ValueError("deterministic has scv 0")
        if self.family == "hyperexp2" and self.scv <= 1:
            raise ValueError("hyperexp2 requires scv > 1")

    @staticmethod
    def from_scv(scv: float) -> "DistributionSpec":
        """Pick the natural family for a target scv (deterministic, gamma, ...)."""
        if scv == 0:
            return DistributionSpec("deterministic", 0.0)
        return DistributionSpec("gamma", scv)

    def sampling_params(self) -> tuple[int, float, float, float]:
        """Encode as (family_code, p1, p2, p3) for the simulation kernel.

        gamma: shape 1/scv, scale scv.  hyperexp2: branch prob p and the two
        branch means, balanced so the mixture has mean 1 and the declared scv.
        """
        if self.family == "gamma":
            a = 1.0 / self.scv
            return 0, a, self.scv, 0.0
        if self.family == "exponential":
            return 1, 0.0, 0.0, 0.0
        if self.family == "deterministic":
            return 2, 0.0, 0.0, 0.0
        c2 = self.scv
        p = 0.5 * (1.0 + np.sqrt((c2 - 1.0) / (c2 + 1.0)))
        return 3, p, 1.0 / (2.0 * p), 1.0 / (2.0 * (1.0 - p))


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: the offending field path plus a message."""

    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


class NetworkSpec:
    """An open multiclass network: stations, classes, rates, routing.

    Parameters
    ----------
    station_of : length-K array of station indices (0-based).
    arrival_rate : length-K external arrival rates, >= 0.
    mean_service : length-K mean service times, > 0.
    routing : K x K substochastic routing matrix.
    scv_arrival, scv_service : squared CVs; used to build default gamma /
        deterministic distributions when explicit specs are not given.
    arrival_dist, service_dist : optional explicit per-class DistributionSpec.
    stability_constraints : optional class subsets whose total load must be
        < 1 (declared, policy-specific stability conditions).
    """

    def __init__(self, station_of, arrival_rate, mean_service, routing,
                 scv_arrival=None, scv_service=None,
                 arrival_dist=None, service_dist=None,
                 stability_constraints=()):
        self.station_of = np.asarray(station_of, dtype=np.int64)
        self.arrival_rate = np.asarray(arrival_rate, dtype=float)
        self.mean_service = np.asarray(mean_service, dtype=float)
        self.routing = np.asarray(routing, dtype=float)
        K = self.station_of.shape[0]

        if service_dist is None:
            if scv_service is None:
                raise ValueError("need scv_service or service_dist")
            service_dist = tuple(DistributionSpec.from_scv(c) for c in scv_service)
        if arrival_dist is None:
            scv_a = np.ones(K) if scv_arrival is None else np.asarray(scv_arrival, float)
            arrival_dist = tuple(
                DistributionSpec.from_scv(scv_a[k]) if self.arrival_rate[k] > 0 else None
                for k in range(K))
        self.service_dist: tuple[DistributionSpec, ...] = tuple(service_dist)
        self.arrival_dist: tuple[DistributionSpec | None, ...] = tuple(arrival_dist)
        self.scv_service = np.array([d.scv for d in self.service_dist])
        self.scv_arrival = np.array(
            [d.scv if d is not None else 0.0 for d in self.arrival_dist])
        self.stability_constraints = tuple(tuple(sorted(s)) for s in stability_constraints)
        for a in (self.station_of, self.arrival_rate, self.mean_service,
                  self.routing, self.scv_service, self.scv_arrival):
            a.setflags(write=False)

    @property
    def num_classes(self) -> int:
        return self.station_of.shape[0]

    @property
    def num_stations(self) -> int:
        return int(self.station_of.max()) + 1 if self.num_classes else 0

    def classes_at(self, j: int) -> list[int]:
        return [k for k in range(self.num_classes) if self.station_of[k] == j]

    @property
    def arrival_classes(self) -> list[int]:
        return [k for k in range(self.num_classes) if self.arrival_rate[k] > 0]

    def with_means(self, mean_service) -> "NetworkSpec":
        """Copy of this network with different mean service times."""
        return NetworkSpec(self.station_of, self.arrival_rate, mean_service,
                           self.routing, arrival_dist=self.arrival_dist,
                           service_dist=self.service_dist,
                           stability_constraints=self.stability_constraints)

    def relabel(self, perm: Sequence[int]) -> "NetworkSpec":
        """Network with class k renamed to perm[k] (a permutation of 0..K-1)."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.argsort(perm)
        return NetworkSpec(
            self.station_of[inv], self.arrival_rate[inv], self.mean_service[inv],
            self.routing[np.ix_(inv, inv)],
            arrival_dist=tuple(self.arrival_dist[i] for i in inv),
            service_dist=tuple(self.service_dist[i] for i in inv),
            stability_constraints=tuple(
                tuple(sorted(int(perm[k]) for k in s)) for s in self.stability_constraints))


class PriorityPolicy:
    """Strict priority ranking of the classes at each station.

    ``order[j]`` lists station j's classes from highest to lowest priority.
    """

    def __init__(self, order: Sequence[Sequence[int]]):
        self.order = tuple(tuple(int(c) for c in station) for station in order)

    def low_class(self, j: int) -> int:
        return self.order[j][-1]

    def rank_of(self, k: int) -> int:
        """0 = highest priority at the class's station."""
        for station in self.order:
            if k in station:
                return station.index(k)
        raise PolicyError(f"class {k} not covered by policy")

    def relabel(self, perm: Sequence[int]) -> "PriorityPolicy":
        return PriorityPolicy(tuple(tuple(int(perm[c]) for c in st) for st in self.order))

    def __eq__(self, other):
        return isinstance(other, PriorityPolicy) and self.order == other.order

    def __hash__(self):
        return hash(self.order)

    def __repr__(self):
        inner = ",".join("(" + ",".join(str(c + 1) for c in st) + ")" for st in self.order)
        return "{" + inner + "}"


@dataclass(frozen=True)
class CanonicalIndexing:
    """Bijection between user class labels and the analysis ordering.

    Canonical slots 0..J-1 hold each station's lowest-priority class (slot j
    belongs to station j); the remaining slots hold the high-priority classes
    grouped by station and ordered upward in priority.  ``succ[c]`` is the
    canonical class one priority step above c at the same station (-1 for a
    station's top class).
    """

    canon_to_user: np.ndarray
    user_to_canon: np.ndarray
    num_stations: int
    station_of_canon: np.ndarray
    succ: np.ndarray

    @property
    def num_low(self) -> int:
        return self.num_stations

    @property
    def num_classes(self) -> int:
        return self.canon_to_user.shape[0]

    @property
    def low_user_classes(self) -> np.ndarray:
        return self.canon_to_user[: self.num_low]

    def h_set(self, k: int) -> list[int]:
        """User classes at s(k) with priority >= class k's (k included)."""
        c = int(self.user_to_canon[k])
        out = [k]
        while self.succ[c] >= 0:
            c = int(self.succ[c])
            out.append(int(self.canon_to_user[c]))
        return out

    def h_plus_set(self, k: int) -> list[int]:
        """User classes at s(k) with priority strictly above class k's."""
        return self.h_set(k)[1:]


def validate_policy(spec: NetworkSpec, policy: PriorityPolicy) -> None:
    """Raise PolicyError unless the policy is a per-station permutation."""
    if len(policy.order) != spec.num_stations:
        raise PolicyError(
            f"policy covers {len(policy.order)} stations, network has {spec.num_stations}")
    seen: set[int] = set()
    for j, station in enumerate(policy.order):
        members = set(station)
        expected = set(spec.classes_at(j))
        if members != expected:
            raise PolicyError(
                f"station {j + 1} policy lists classes "
                f"{sorted(c + 1 for c in members)}, expected {sorted(c + 1 for c in expected)}")
        if len(station) != len(members):
            raise PolicyError(f"station {j + 1} policy has duplicate classes")
        seen |= members
    if seen != set(range(spec.num_classes)):
        raise PolicyError("policy does not cover every class exactly once")


def validate_spec(spec: NetworkSpec) -> list[Diagnostic]:
    """Check every structural invariant; one diagnostic per violation.

    Returns an empty list iff the spec is a well-formed open network and all
    declared stability constraints hold.
    """
    out: list[Diagnostic] = []
    K = spec.num_classes
    P = spec.routing
    if P.shape != (K, K):
        out.append(Diagnostic("routing", f"expected {K}x{K} matrix, got {P.shape}"))
        return out
    if np.any(P < 0) or np.any(P > 1):
        bad = np.argwhere((P < 0) | (P > 1))[0]
        out.append(Diagnostic(f"routing[{bad[0] + 1}][{bad[1] + 1}]",
                              "entries must lie in [0, 1]"))
    rowsum = P.sum(axis=1)
    for k in np.nonzero(rowsum > 1 + 1e-12)[0]:
        out.append(Diagnostic(f"routing[{k + 1}]",
                              f"row sums to {rowsum[k]:.6g} > 1"))
    singular = False
    if not out:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, _ = scipy.linalg.lu_factor(np.eye(K) - P.T, check_finite=False)
        if np.abs(np.diag(lu)).min() <= PIVOT_TOL:
            out.append(Diagnostic("routing", "I-P singular: network is not open"))
            singular = True

    J = spec.num_stations
    stations = set(int(s) for s in spec.station_of)
    if stations != set(range(J)):
        out.append(Diagnostic("classes.station",
                              "station indices must be contiguous and every station non-empty"))
    if np.any(spec.mean_service <= 0):
        k = int(np.nonzero(spec.mean_service <= 0)[0][0])
        out.append(Diagnostic(f"classes[{k + 1}].mean_service", "must be > 0"))
    if np.any(spec.arrival_rate < 0):
        k = int(np.nonzero(spec.arrival_rate < 0)[0][0])
        out.append(Diagnostic(f"classes[{k + 1}].arrival_rate", "must be >= 0"))
    if not np.any(spec.arrival_rate > 0):
        out.append(Diagnostic("classes.arrival_rate", "at least one class needs arrivals"))

    for s in spec.stability_constraints:
        if any(k < 0 or k >= K for k in s):
            out.append(Diagnostic("stability_constraints", f"unknown class in {s}"))

    if not out and not singular:
        lam = solve_traffic(spec)
        for s in spec.stability_constraints:
            load = float(sum(lam[k] * spec.mean_service[k] for k in s))
            if load >= 1:
                labels = [k + 1 for k in s]
                out.append(Diagnostic(f"stability_constraints{labels}",
                                      f"declared load bound violated: {load:.6g} >= 1"))
    return out


def canonicalize(spec: NetworkSpec, policy: PriorityPolicy) -> CanonicalIndexing:
    """Build the low-first analysis ordering induced by a priority policy.

    Low classes come first in station order; high classes follow grouped by
    station, ordered by ascending priority, which makes each station's
    priority chain contiguous.  Deterministic for fixed input.
    """
    validate_policy(spec, policy)
    J = spec.num_stations
    canon: list[int] = [policy.low_class(j) for j in range(J)]
    for j in range(J):
        canon.extend(reversed(policy.order[j][:-1]))
    canon_arr = np.array(canon, dtype=np.int64)
    user_to_canon = np.argsort(canon_arr)
    succ = np.full(len(canon), -1, dtype=np.int64)
    for j in range(J):
        chain = [int(user_to_canon[u]) for u in reversed(policy.order[j])]
        for a, b in zip(chain, chain[1:]):
            succ[a] = b
    idx = CanonicalIndexing(
        canon_to_user=canon_arr,
        user_to_canon=user_to_canon,
        num_stations=J,
        station_of_canon=spec.station_of[canon_arr],
        succ=succ,
    )
    for a in (idx.canon_to_user, idx.user_to_canon, idx.station_of_canon, idx.succ):
        a.setflags(write=False)
    return idx


def solve_traffic(spec: NetworkSpec) -> np.ndarray:
    """Solve lambda = alpha + P^T lambda for the nominal per-class rates."""
    K = spec.num_classes
    A = np.eye(K) - spec.routing.T
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if np.abs(np.diag(lu)).min() <= PIVOT_TOL:
        raise SingularRoutingError("I - P^T is singular; cannot solve traffic equations")
    lam = scipy.linalg.lu_solve((lu, piv), spec.arrival_rate)
    resid = np.linalg.norm(lam - spec.arrival_rate - spec.routing.T @ lam, ord=np.inf)
    scale = max(np.linalg.norm(lam, ord=np.inf), 1e-300)
    if resid > 1e-10 * scale:
        raise SingularRoutingError(f"traffic equation residual {resid:.3e} too large")
    return lam


def traffic_intensities(spec: NetworkSpec,
                        lam: np.ndarray | None = None) -> tuple[np.ndarray, list[int]]:
    """Per-station loads rho_j = sum over the station's classes of lambda*m.

    Returns (rho, overloaded) where overloaded flags stations with rho >= 1.
    Note rho_j < 1 is the nominal load; in a multiclass network it is not
    always exactly the long-run busy fraction of the station.
    """
    if lam is None:
        lam = solve_traffic(spec)
    J = spec.num_stations
    rho = np.zeros(J)
    for k in range(spec.num_classes):
        rho[spec.station_of[k]] += lam[k] * spec.mean_service[k]
    return rho, [j for j in range(J) if rho[j] >= 1.0]


def idle_probabilities(spec: NetworkSpec, policy: PriorityPolicy,
                       lam: np.ndarray | None = None) -> np.ndarray:
    """Exact steady-state probability that class k sees its station clear.

    beta_k = 1 - sum of lambda_l * m_l over classes l at s(k) with priority
    at least class k's.  This identity is exact for every stable network, not
    an asymptotic statement, so it doubles as a sharp simulator cross-check.
    """
    if lam is None:
        lam = solve_traffic(spec)
    idx = canonicalize(spec, policy)
    beta = np.empty(spec.num_classes)
    for k in range(spec.num_classes):
        beta[k] = 1.0 - sum(lam[l] * spec.mean_service[l] for l in idx.h_set(k))
    return beta


@dataclass(frozen=True)
class CanonicalView:
    """Network parameters permuted into canonical (low-first) order."""

    alpha: np.ndarray
    lam: np.ndarray
    mean: np.ndarray
    mu: np.ndarray
    P: np.ndarray
    ce2: np.ndarray
    cs2: np.ndarray
    station_of: np.ndarray
    rho: np.ndarray
    indexing: CanonicalIndexing

    @property
    def num_low(self) -> int:
        return self.indexing.num_low

    @property
    def num_classes(self) -> int:
        return self.indexing.num_classes

    @property
    def constituency(self) -> np.ndarray:
        """J x K station-membership indicator in canonical order."""
        J, K = self.indexing.num_stations, self.num_classes
        C = np.zeros((J, K))
        C[self.station_of, np.arange(K)] = 1.0
        return C


def canonical_view(spec: NetworkSpec, policy: PriorityPolicy) -> CanonicalView:
    """Permute all network parameters into the policy's canonical order."""
    idx = canonicalize(spec, policy)
    c = idx.canon_to_user
    lam = solve_traffic(spec)
    rho, _ = traffic_intensities(spec, lam)
    return CanonicalView(
        alpha=spec.arrival_rate[c],
        lam=lam[c],
        mean=spec.mean_service[c],
        mu=1.0 / spec.mean_service[c],
        P=spec.routing[np.ix_(c, c)],
        ce2=spec.scv_arrival[c],
        cs2=spec.scv_service[c],
        station_of=spec.station_of[c],
        rho=rho,
        indexing=idx,
    )
