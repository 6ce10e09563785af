from .runner import (ReplicationStats, SimConfig, SimulationResult,
                     default_hist_caps, default_joint_pairs,
                     run_experiment, run_replication)

__all__ = [
    "ReplicationStats", "SimConfig", "SimulationResult",
    "default_hist_caps", "default_joint_pairs",
    "run_experiment", "run_replication",
]
