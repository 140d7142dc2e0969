"""Decide whether two-source single-lab statistics admit a classical model with independent sources."""

__version__ = "0.1.0"

from .behavior import (
    Behavior,
    NegativityCertificate,
    PairDistribution,
    SettingTables,
    behavior_from_tables,
    check_no_disturbance,
    pair_distribution_from_moments,
)
from .decision import (
    CorrelationBounds,
    DecisionReport,
    Verdict,
    WitnessModel,
    build_witness,
    compute_bounds,
    construct_jpd,
    decide_four_sides,
    decide_single,
    mix_behaviors,
    necessary_bound_check,
)
from .errors import (
    BictxError,
    ConstructionError,
    ContractError,
    DomainError,
    NoDisturbanceError,
    PreconditionError,
    SourceDependenceError,
)
from .oracle import (
    OracleConfig,
    bisect_violation_boundary,
    enumerate_deterministic,
    grid_feasibility,
)
from .quantum import ideal_behavior, sample_setting, verify_mermin_peres
from .stats import CountTable, estimate_behavior, propagate_uncertainty
from .sweeps import RegionSpec, SweepSpec, run_region, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
