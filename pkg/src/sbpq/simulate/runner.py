"""Replication orchestration and aggregation on top of the event kernel.

Random-number discipline: a master seed opens a `numpy.random.SeedSequence`;
`spawn(reps)` gives one child per replication, and each child spawns 3K
streams consumed as [arrival class 0..K-1, service class 0..K-1, routing
class 0..K-1].  The stream layout depends only on the network size, never on
the policy, so runs with the same seed use common random numbers across
policies.  Replications may execute concurrently (the kernel releases the
GIL); aggregation is a deterministic reduction in replication order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateJoint
from ..heavytraffic import analyze
from ..network import NetworkSpec, PriorityPolicy, idle_probabilities
from ..stats import JointPMF, ci, iqr
from .kernel import run_kernel

DEFAULT_HIST_CAP = 2000
HIST_CAP_MIN = 50


@dataclass
class SimConfig:
    """Knobs for one simulation experiment."""

    arrivals: int
    reps: int = 1
    seed: int = 0
    warmup_frac: float = 0.1
    joint_pairs: tuple[tuple[int, int], ...] | None = None   # None: all low pairs
    hist_cap_factor: float = 20.0
    hist_cap_default: int = DEFAULT_HIST_CAP
    threads: int | None = None

    def __post_init__(self):
        self.arrivals = int(self.arrivals)
        if self.arrivals <= 0:
            raise ValueError("arrivals must be positive")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ValueError("warmup_frac must lie in [0, 1)")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        env = os.environ.get("SBPQ_THREADS")
        return max(1, int(env)) if env else 1


@dataclass
class ReplicationStats:
    """Raw outputs of a single replication (time masses, not densities)."""

    span: float
    zbar: np.ndarray
    idle_frac: np.ndarray
    hist: list[np.ndarray]                  # per class, length cap+1, time mass
    joints: list[np.ndarray]                # per pair, 2D time mass
    busy_time: np.ndarray
    drawn_sum: np.ndarray
    head_rem_end: np.ndarray
    n_departures: np.ndarray
    n_arrivals_class: np.ndarray
    cycle_sum: float
    cycle_count: int
    t_end: float

    @property
    def cycle_mean(self) -> float:
        return self.cycle_sum / self.cycle_count if self.cycle_count else np.nan

    @property
    def departure_rate(self) -> np.ndarray:
        return self.n_departures / self.t_end


@dataclass
class SimulationResult:
    """Aggregated experiment output: means with Student-t 95% intervals."""

    spec: NetworkSpec
    policy: PriorityPolicy
    config: SimConfig
    class_mean: np.ndarray
    class_ci: np.ndarray
    idle_frac: np.ndarray
    idle_ci: np.ndarray
    beta_exact: np.ndarray
    hist: dict[int, np.ndarray]             # pooled, normalized pmf per class
    hist_cap: dict[int, int]
    joints: dict[tuple[int, int], JointPMF]
    iqr_stats: dict[tuple[int, int], tuple[float, float]]
    cycle_mean: float
    cycle_ci: float
    cycle_count: int
    reps: list[ReplicationStats] = field(repr=False, default_factory=list)

    @property
    def rep_class_means(self) -> np.ndarray:
        return np.stack([r.zbar for r in self.reps])

    @property
    def rep_cycle_means(self) -> np.ndarray:
        return np.array([r.cycle_mean for r in self.reps])


def _policy_station_table(spec: NetworkSpec, policy: PriorityPolicy):
    """Flattened per-station class lists in priority order plus class ranks."""
    J = spec.num_stations
    st_start = np.zeros(J + 1, np.int64)
    classes = []
    rank = np.zeros(spec.num_classes, np.int64)
    for j in range(J):
        for r, k in enumerate(policy.order[j]):
            classes.append(k)
            rank[k] = r
        st_start[j + 1] = len(classes)
    return st_start, np.array(classes, np.int64), rank


def default_hist_caps(spec: NetworkSpec, policy: PriorityPolicy,
                      config: SimConfig) -> np.ndarray:
    """Per-class histogram caps: 20x the analytic mean where available.

    High-priority classes collapse in heavy traffic, so they share the
    default cap; everything above a cap lands in the overflow bucket.
    """
    caps = np.full(spec.num_classes, config.hist_cap_default, np.int64)
    report = analyze(spec, policy, check=False)
    if report.ok:
        for c in report.constants:
            caps[c.user_class] = max(HIST_CAP_MIN,
                                     int(np.ceil(config.hist_cap_factor * c.mean_estimate)))
    return caps


def default_joint_pairs(spec: NetworkSpec,
                        policy: PriorityPolicy) -> tuple[tuple[int, int], ...]:
    """All unordered pairs of lowest-priority classes, by station order."""
    lows = [policy.low_class(j) for j in range(spec.num_stations)]
    return tuple((lows[a], lows[b])
                 for a in range(len(lows)) for b in range(len(lows)) if a < b)


def _kernel_inputs(spec: NetworkSpec, policy: PriorityPolicy, config: SimConfig):
    K = spec.num_classes
    st_start, st_classes, _ = _policy_station_table(spec, policy)
    arr_classes = np.array(spec.arrival_classes, np.int64)
    route_cum = np.cumsum(spec.routing, axis=1)
    caps = default_hist_caps(spec, policy, config)
    pairs = config.joint_pairs
    if pairs is None:
        pairs = default_joint_pairs(spec, policy)
    pair_i = np.array([p[0] for p in pairs], np.int64)
    pair_j = np.array([p[1] for p in pairs], np.int64)

    def params(dists):
        fam = np.zeros(K, np.int64)
        p1 = np.zeros(K)
        p2 = np.zeros(K)
        p3 = np.zeros(K)
        for k, d in enumerate(dists):
            if d is None:
                continue
            fam[k], p1[k], p2[k], p3[k] = d.sampling_params()
        return fam, p1, p2, p3

    return dict(
        station_of=spec.station_of,
        st_start=st_start,
        st_classes=st_classes,
        arr_classes=arr_classes,
        route_cum=route_cum,
        alpha=spec.arrival_rate,
        mean_svc=spec.mean_service,
        arr=params(spec.arrival_dist),
        svc=params(spec.service_dist),
        caps=caps,
        pairs=pairs,
        pair_i=pair_i,
        pair_j=pair_j,
    )


def run_replication(spec: NetworkSpec, policy: PriorityPolicy, config: SimConfig,
                    seed_seq: np.random.SeedSequence | None = None,
                    _inputs=None) -> ReplicationStats:
    """One deterministic replication.

    seed_seq defaults to the first child of SeedSequence(config.seed); pass
    an explicit child to place the replication inside an experiment.
    """
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(config.seed).spawn(1)[0]
    ki = _inputs if _inputs is not None else _kernel_inputs(spec, policy, config)
    K = spec.num_classes
    rngs = tuple(np.random.default_rng(s) for s in seed_seq.spawn(3 * K))
    warmup = int(config.warmup_frac * config.arrivals)
    caps = ki["caps"]
    pair_i, pair_j = ki["pair_i"], ki["pair_j"]
    cap_i = caps[pair_i] if len(pair_i) else np.zeros(0, np.int64)
    cap_j = caps[pair_j] if len(pair_j) else np.zeros(0, np.int64)
    (z_int, hist_flat, joint_flat, empty_time, span, busy, drawn, head_rem,
     n_dep, n_arr, sum_soj, n_soj, t_end) = run_kernel(
        ki["station_of"], ki["st_start"], ki["st_classes"], ki["arr_classes"],
        ki["route_cum"], ki["alpha"], ki["mean_svc"],
        *ki["arr"], *ki["svc"],
        config.arrivals, warmup,
        caps, pair_i, pair_j, cap_i, cap_j, rngs)

    hists = []
    off = 0
    for k in range(K):
        hists.append(hist_flat[off:off + caps[k] + 1].copy())
        off += caps[k] + 1
    joints = []
    off = 0
    for p in range(len(pair_i)):
        n = (cap_i[p] + 1) * (cap_j[p] + 1)
        joints.append(joint_flat[off:off + n].reshape(cap_i[p] + 1, cap_j[p] + 1).copy())
        off += n

    # map station-rank empty times back to classes: Z_{H(k)} == 0 exactly when
    # every class ranked at least as high as k at its station is empty
    st_start, st_classes, rank = _policy_station_table(spec, policy)
    idle = np.zeros(K)
    for j in range(spec.num_stations):
        for r, k in enumerate(policy.order[j]):
            idle[k] = empty_time[st_start[j] + r] / span
    return ReplicationStats(
        span=span, zbar=z_int / span, idle_frac=idle, hist=hists, joints=joints,
        busy_time=busy, drawn_sum=drawn, head_rem_end=head_rem,
        n_departures=n_dep, n_arrivals_class=n_arr,
        cycle_sum=sum_soj, cycle_count=n_soj, t_end=t_end)


def run_experiment(spec: NetworkSpec, policy: PriorityPolicy,
                   config: SimConfig) -> SimulationResult:
    """Independent replications plus deterministic aggregation."""
    if config.reps < 2:
        raise ValueError("need at least 2 replications for confidence intervals")
    ki = _kernel_inputs(spec, policy, config)
    children = np.random.SeedSequence(config.seed).spawn(config.reps)
    threads = config.resolved_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(
                lambda s: run_replication(spec, policy, config, s, _inputs=ki),
                children))
    else:
        reps = [run_replication(spec, policy, config, s, _inputs=ki)
                for s in children]

    K = spec.num_classes
    mean = np.zeros(K)
    half = np.zeros(K)
    idle = np.zeros(K)
    idle_h = np.zeros(K)
    for k in range(K):
        mean[k], half[k] = ci([r.zbar[k] for r in reps])
        idle[k], idle_h[k] = ci([r.idle_frac[k] for r in reps])
    cyc_mean, cyc_half = ci([r.cycle_mean for r in reps])

    caps = ki["caps"]
    hist_pool = {}
    for k in range(K):
        total = np.sum([r.hist[k] for r in reps], axis=0)
        hist_pool[k] = total / total.sum()
    joints = {}
    iqr_stats = {}
    for p, pair in enumerate(ki["pairs"]):
        pooled = np.sum([r.joints[p] for r in reps], axis=0)
        joints[pair] = JointPMF.from_counts(pooled)
        vals = []
        for r in reps:
            try:
                vals.append(iqr(JointPMF.from_counts(r.joints[p])))
            except DegenerateJoint:
                pass
        if len(vals) >= 2:
            iqr_stats[pair] = ci(vals)
        elif vals:
            iqr_stats[pair] = (vals[0], np.nan)

    return SimulationResult(
        spec=spec, policy=policy, config=config,
        class_mean=mean, class_ci=half,
        idle_frac=idle, idle_ci=idle_h,
        beta_exact=idle_probabilities(spec, policy),
        hist=hist_pool, hist_cap={k: int(caps[k]) for k in range(K)},
        joints=joints, iqr_stats=iqr_stats,
        cycle_mean=cyc_mean, cycle_ci=cyc_half,
        cycle_count=int(sum(r.cycle_count for r in reps)),
        reps=reps)
