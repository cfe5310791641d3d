"""Heralded single-photon path entanglement: simulation and certification."""

from .fockcore import (
    DensityOperator,
    FockTruncation,
    ModeOperator,
    PureState,
    beam_splitter_unitary,
    displacement_operator,
    expectation_value,
    loss_channel,
    partial_trace,
    two_mode_squeezed_state,
)
from .herald import (
    HeraldedState,
    HeraldingError,
    PhaseConfig,
    SourceParams,
    heralding_rate,
    ideal_lossy_state,
    simulate_heralded_state,
)
from .measurement import (
    DetectorModel,
    DisplacementSetting,
    JointClickProbabilities,
    click_povm,
    joint_click_probabilities,
    multiphoton_coincidence_probability,
    p00_phase_model,
    phase_averaged_witness_operator,
)
from .stats import (
    CountRecord,
    ProbEstimate,
    PStarDomainError,
    estimate_probabilities,
    sample_counts,
    sigma_ppt_max,
    sigma_w_exp,
    violation_k,
)
from .witness import (
    MultiphotonBounds,
    QubitProbs,
    WitnessReport,
    beta_bound,
    certify,
    optimal_alpha,
    w_exp,
    w_ppt_fluctuation_bound,
    w_ppt_max,
    w_ppt_qubit,
)

__version__ = "0.1.0"

__all__ = [
    "DensityOperator",
    "FockTruncation",
    "ModeOperator",
    "PureState",
    "beam_splitter_unitary",
    "displacement_operator",
    "expectation_value",
    "loss_channel",
    "partial_trace",
    "two_mode_squeezed_state",
    "HeraldedState",
    "HeraldingError",
    "PhaseConfig",
    "SourceParams",
    "heralding_rate",
    "ideal_lossy_state",
    "simulate_heralded_state",
    "DetectorModel",
    "DisplacementSetting",
    "JointClickProbabilities",
    "click_povm",
    "joint_click_probabilities",
    "multiphoton_coincidence_probability",
    "p00_phase_model",
    "phase_averaged_witness_operator",
    "CountRecord",
    "ProbEstimate",
    "PStarDomainError",
    "estimate_probabilities",
    "sample_counts",
    "sigma_ppt_max",
    "sigma_w_exp",
    "violation_k",
    "MultiphotonBounds",
    "QubitProbs",
    "WitnessReport",
    "beta_bound",
    "certify",
    "optimal_alpha",
    "w_exp",
    "w_ppt_fluctuation_bound",
    "w_ppt_max",
    "w_ppt_qubit",
]
