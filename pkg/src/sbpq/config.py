"""YAML network configs: one file drives every command.

Schema (all class/station labels 1-based; class k is the k-th `classes`
entry):

    name: optional free text
    stations: [1, 2]            # order fixes the load-separation scale r^j
    classes:
      - station: 1
        arrival_rate: 1.0                       # omit or 0 for no arrivals
        arrival_dist: {family: gamma, shape: 0.75}
        mean_service: 0.48
        dist: {family: gamma, shape: 0.95}      # service distribution
    routing: K x K row-substochastic matrix (list of lists)
    policy: per-station class lists, highest priority first
    stability_constraints:                      # optional declared checks
      - classes: [2, 5]                         # requires sum lambda*m < 1
    sim: {arrivals: 1e6, reps: 5, seed: 1, warmup_frac: 0.1,
          joints: [[1, 4]]}                     # optional defaults for simulate

Distributions: gamma takes `shape` a (scv = 1/a) or `scv` directly;
exponential (scv 1), deterministic (scv 0) and hyperexp2 (scv > 1) take
`scv`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .network import DistributionSpec, NetworkSpec, PriorityPolicy


@dataclass
class LoadedConfig:
    name: str
    spec: NetworkSpec
    policy: PriorityPolicy
    sim: dict = field(default_factory=dict)
    path: Path | None = None
    sha256: str = ""


def _dist_from_node(node, path: str) -> DistributionSpec:
    if not isinstance(node, dict) or "family" not in node:
        raise ConfigError(f"{path}: expected a mapping with a 'family' key")
    family = node["family"]
    try:
        if family == "gamma" and "shape" in node:
            return DistributionSpec("gamma", 1.0 / float(node["shape"]))
        if family == "exponential":
            return DistributionSpec("exponential", float(node.get("scv", 1.0)))
        if family == "deterministic":
            return DistributionSpec("deterministic", float(node.get("scv", 0.0)))
        if "scv" not in node:
            raise ConfigError(f"{path}: needs 'scv' (or 'shape' for gamma)")
        return DistributionSpec(family, float(node["scv"]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> LoadedConfig:
    """Parse and structurally check a config file.

    Raises ConfigError with a field path on malformed input; deeper
    numerical validation is `validate_spec`'s job.
    """
    path = Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    stations = doc.get("stations")
    if not isinstance(stations, list) or not stations:
        raise ConfigError("stations: must be a non-empty list")
    station_index = {label: j for j, label in enumerate(stations)}
    if len(station_index) != len(stations):
        raise ConfigError("stations: duplicate labels")

    classes = doc.get("classes")
    if not isinstance(classes, list) or not classes:
        raise ConfigError("classes: must be a non-empty list")
    K = len(classes)
    station_of = np.zeros(K, np.int64)
    arrival = np.zeros(K)
    mean = np.zeros(K)
    sdist: list[DistributionSpec] = []
    adist: list[DistributionSpec | None] = []
    for i, entry in enumerate(classes):
        p = f"classes[{i + 1}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{p}: expected a mapping")
        if entry.get("station") not in station_index:
            raise ConfigError(f"{p}.station: unknown station {entry.get('station')!r}")
        station_of[i] = station_index[entry["station"]]
        arrival[i] = float(entry.get("arrival_rate", 0.0))
        if "mean_service" not in entry:
            raise ConfigError(f"{p}.mean_service: required")
        mean[i] = float(entry["mean_service"])
        if "dist" not in entry:
            raise ConfigError(f"{p}.dist: required")
        sdist.append(_dist_from_node(entry["dist"], f"{p}.dist"))
        if arrival[i] > 0:
            if "arrival_dist" not in entry:
                raise ConfigError(f"{p}.arrival_dist: required when arrival_rate > 0")
            adist.append(_dist_from_node(entry["arrival_dist"], f"{p}.arrival_dist"))
        else:
            adist.append(None)

    routing = doc.get("routing")
    if not isinstance(routing, list) or len(routing) != K \
            or any(not isinstance(r, list) or len(r) != K for r in routing):
        raise ConfigError(f"routing: must be a {K}x{K} matrix")
    routing = np.array(routing, dtype=float)

    policy_node = doc.get("policy")
    if not isinstance(policy_node, list) or len(policy_node) != len(stations):
        raise ConfigError("policy: one ordered class list per station required")
    order = []
    for j, lst in enumerate(policy_node):
        if not isinstance(lst, list) or not lst:
            raise ConfigError(f"policy[{j + 1}]: expected a non-empty list")
        for label in lst:
            if not isinstance(label, int) or not 1 <= label <= K:
                raise ConfigError(f"policy[{j + 1}]: unknown class {label!r}")
        order.append(tuple(label - 1 for label in lst))

    constraints = []
    for i, node in enumerate(doc.get("stability_constraints") or []):
        p = f"stability_constraints[{i + 1}]"
        if not isinstance(node, dict) or "classes" not in node:
            raise ConfigError(f"{p}: expected a mapping with 'classes'")
        members = node["classes"]
        if any(not isinstance(c, int) or not 1 <= c <= K for c in members):
            raise ConfigError(f"{p}.classes: labels must be in 1..{K}")
        constraints.append(tuple(c - 1 for c in members))

    sim = doc.get("sim") or {}
    if not isinstance(sim, dict):
        raise ConfigError("sim: must be a mapping")

    spec = NetworkSpec(station_of, arrival, mean, routing,
                       arrival_dist=adist, service_dist=sdist,
                       stability_constraints=constraints)
    return LoadedConfig(name=str(doc.get("name", path.stem)), spec=spec,
                        policy=PriorityPolicy(order), sim=sim,
                        path=path, sha256=digest)
