"""Diagnostics: energy decomposition, tail/drift probes, minorization, TV decay."""

from .chainstats import ChainStats, chain_diagnostics, integrated_autocorr_time
from .drift import (
    DEFAULT_A_GRID,
    DriftReport,
    RejectionMassCurve,
    drift_estimate,
    rejection_mass,
)
from .energy import (
    EnergyDecomposition,
    TERM_NAMES,
    energy_decomposition,
    energy_error_trace,
    negative_energy_horizon,
)
from .smallset import (
    GrowthProbe,
    SmallSetProbe,
    minorization_epsilon,
    proposal_growth_probe,
    smallset_probe,
)
from .tail import TailAcceptanceProfile, tail_acceptance
from .tv import TvDecayCurve, tv_decay

__all__ = [
    "ChainStats",
    "chain_diagnostics",
    "integrated_autocorr_time",
    "DEFAULT_A_GRID",
    "DriftReport",
    "RejectionMassCurve",
    "drift_estimate",
    "rejection_mass",
    "EnergyDecomposition",
    "TERM_NAMES",
    "energy_decomposition",
    "energy_error_trace",
    "negative_energy_horizon",
    "GrowthProbe",
    "SmallSetProbe",
    "minorization_epsilon",
    "proposal_growth_probe",
    "smallset_probe",
    "TailAcceptanceProfile",
    "tail_acceptance",
    "TvDecayCurve",
    "tv_decay",
]
