"""Decoy-state MDI-QKD key-rate bounds for sources with photon-number errors.

Sources are described by intervals on their photon-number coefficients;
the bounds are certified for every state inside those intervals.  An exact
expectation-level oracle checks each bound on concrete per-pulse scenarios.
"""

from .bounds import BoundsReport, evaluate_bounds
from .channel import STANDARD_CHANNEL, ChannelParams, ObservedStats, simulate_observables, yield_matrix
from .errors import ConditionError, DenominatorError, GateError, NoKeyError, SigmaGateError
from .fock_source import (
    CoeffIntervalSet,
    PartyEnsemble,
    build_ensemble,
    check_condition_ratio_w,
    check_condition_ratio_z,
    coeff_intervals,
    require_conditions,
)
from .optimizer import PartySettings, ScanSpec, infinite_decoy_reference, optimize_key_rate
from .oracle import (
    PerPulseScenario,
    check_soundness,
    exact_tallies,
    generate_scenario,
    ground_truth_targets,
    observables_from_scenario,
    verify_derivation_slacks,
)

__all__ = [
    "BoundsReport", "evaluate_bounds",
    "STANDARD_CHANNEL", "ChannelParams", "ObservedStats", "simulate_observables", "yield_matrix",
    "ConditionError", "DenominatorError", "GateError", "NoKeyError", "SigmaGateError",
    "CoeffIntervalSet", "PartyEnsemble", "build_ensemble", "check_condition_ratio_w",
    "check_condition_ratio_z", "coeff_intervals", "require_conditions",
    "PartySettings", "ScanSpec", "infinite_decoy_reference", "optimize_key_rate",
    "PerPulseScenario", "check_soundness", "exact_tallies", "generate_scenario",
    "ground_truth_targets", "observables_from_scenario", "verify_derivation_slacks",
]
