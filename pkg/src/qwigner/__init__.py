"""Continuous phase-space (Wigner) toolkit for single qubits.

The package models the full workflow around the continuous Wigner function
of a two-level system: exact state algebra, the rotated-parity kernel and
its closed form, pure dephasing, shot-by-shot simulation of the
rotation-plus-push-out measurement sequence, state tomography, and the fits
that expose the negative-to-positive transition at purity 2/3.
"""

__version__ = "0.1.0"

from .dephasing import ChannelParams, JitterModel, decay_factor, dephase, r_of_t, sample_dephased_state
from .estimation import (
    BootstrapInterval,
    FitConvergenceError,
    FitResult,
    PauliTallies,
    TomographyResult,
    bootstrap_errors,
    estimate_wigner_from_tally,
    fit_exponential_decay,
    fit_wmin_line,
    simulate_tomography,
    tomography_from_expectations,
    tomography_linear_inversion,
)
from .qubit import (
    BlochState,
    DensityMatrix,
    DomainError,
    bloch_from_density,
    conjugate_state,
    density_from_bloch,
    euler_rotation,
    fidelity,
    purity,
    rotation_x,
    rotation_z,
)
from .shots import (
    CampaignConfig,
    CampaignResult,
    DetectionModel,
    PulseParams,
    ShotTally,
    SurvivalEstimate,
    WignerEstimate,
    derive_rng,
    duration_for_x,
    duration_for_z,
    measure_shot,
    ramsey_sequence,
    run_campaign,
    run_wigner_point,
)
from .wigner import (
    NegativityReport,
    PhasePoint,
    WignerGrid,
    R_NEGATIVITY_THRESHOLD,
    integrate_wigner,
    kernel,
    negativity_report,
    wigner_closed_form,
    wigner_grid,
    wigner_measurement_form,
    wigner_min_analytic,
    wigner_value,
)

__all__ = [
    "BlochState",
    "BootstrapInterval",
    "CampaignConfig",
    "CampaignResult",
    "ChannelParams",
    "DensityMatrix",
    "DetectionModel",
    "DomainError",
    "FitConvergenceError",
    "FitResult",
    "JitterModel",
    "NegativityReport",
    "PauliTallies",
    "PhasePoint",
    "PulseParams",
    "R_NEGATIVITY_THRESHOLD",
    "ShotTally",
    "SurvivalEstimate",
    "TomographyResult",
    "WignerEstimate",
    "WignerGrid",
    "bloch_from_density",
    "bootstrap_errors",
    "conjugate_state",
    "decay_factor",
    "density_from_bloch",
    "dephase",
    "derive_rng",
    "duration_for_x",
    "duration_for_z",
    "estimate_wigner_from_tally",
    "euler_rotation",
    "fidelity",
    "fit_exponential_decay",
    "fit_wmin_line",
    "integrate_wigner",
    "kernel",
    "measure_shot",
    "negativity_report",
    "purity",
    "r_of_t",
    "ramsey_sequence",
    "rotation_x",
    "rotation_z",
    "run_campaign",
    "run_wigner_point",
    "sample_dephased_state",
    "simulate_tomography",
    "tomography_from_expectations",
    "tomography_linear_inversion",
    "wigner_closed_form",
    "wigner_grid",
    "wigner_measurement_form",
    "wigner_min_analytic",
    "wigner_value",
]
