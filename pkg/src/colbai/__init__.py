"""Simulation library for best arm identification in the collaborative
(multi-agent, round-limited) model with non-IID, weighted local rewards."""

from .algorithms import (
    AlgoResult,
    RoundSchedule,
    compute_schedule,
    run_centralized_baseline,
    run_col_learn,
    run_two_arm_weighted,
)
from .core import (
    GapProfile,
    Instance,
    RewardFamily,
    TiedBestArm,
    WeightVector,
    chernoff_tail,
    gap_profile,
    global_mean,
    sample_pull,
)
from .hard import (
    HardInstance,
    HardParams,
    derive_params,
    expand_to_K_agents,
    sample_conditioned,
    sample_hard_instance,
)
from .harness import (
    ExperimentConfig,
    compute_speedup,
    hardness_probe,
    run_trials,
    time_to_target,
    wilson_interval,
)

__version__ = "0.1.0"
