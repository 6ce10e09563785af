"""Steady-state toolkit for multiclass queueing networks under static buffer
priority: exact first-order quantities, heavy-traffic product-form
approximations, a discrete-event simulator, and policy ranking."""

__version__ = "0.1.0"

from .config import LoadedConfig, load_config
from .errors import (AssumptionFailure, CombinatorialGuard, ConfigError,
                     DegenerateJoint, DimensionTooLarge,
                     InternalConsistencyError, NegativeServiceMean,
                     NotPMatrix, PolicyError, SbpqError, SingularHighBlock,
                     SingularRoutingError)
from .heavytraffic import (AnalysisReport, GeometricApprox,
                           HeavyTrafficConstants, MultiScaleFamily, analyze,
                           compute_constants, cycle_time_estimate,
                           load_profile, two_station_reentrant_d,
                           variance_form)
from .matrices import (MatrixBundle, PMatrixVerdict, build_bundle,
                       check_P_matrix)
from .network import (CanonicalIndexing, CanonicalView, Diagnostic,
                      DistributionSpec, NetworkSpec, PriorityPolicy,
                      canonical_view, canonicalize, idle_probabilities,
                      solve_traffic, traffic_intensities, validate_spec)
from .optimize import PolicyRanking, enumerate_policies, rank_policies
from .simulate import (SimConfig, SimulationResult, run_experiment,
                       run_replication)
from .stats import JointPMF, ci, hist_compare, iqr

__all__ = [
    "__version__",
    "AnalysisReport", "AssumptionFailure", "CanonicalIndexing",
    "CanonicalView", "CombinatorialGuard", "ConfigError", "DegenerateJoint",
    "Diagnostic", "DimensionTooLarge", "DistributionSpec", "GeometricApprox",
    "HeavyTrafficConstants", "InternalConsistencyError", "JointPMF",
    "LoadedConfig", "MatrixBundle", "MultiScaleFamily", "NegativeServiceMean",
    "NetworkSpec", "NotPMatrix", "PMatrixVerdict", "PolicyError",
    "PolicyRanking", "PriorityPolicy", "SbpqError", "SimConfig",
    "SimulationResult", "SingularHighBlock", "SingularRoutingError",
    "analyze", "build_bundle", "canonical_view", "canonicalize",
    "check_P_matrix", "ci", "compute_constants", "cycle_time_estimate",
    "enumerate_policies", "hist_compare", "idle_probabilities", "iqr",
    "load_config", "load_profile", "rank_policies", "run_experiment",
    "run_replication", "solve_traffic", "traffic_intensities",
    "two_station_reentrant_d", "validate_spec", "variance_form",
]
