//! Stochastic models of the physical processes in the node.

mod atom;
mod config;
mod emission;
mod readout;

pub use atom::{
    atom_survival, blow_away, detuning_for_transfer, microwave_pi_map, optical_pump,
    two_level_rotation, two_photon_rotation, AtomState, Level, ROTATION_PHASE,
};
pub use config::{ErrorModel, MapErrorModel, NodeConfig, NodeParams, FWHM_PER_SIGMA};
pub use emission::{
    entangled_emission, first_attempt_detection_probability, gate_acceptance,
    per_cycle_detection_probability, sample_emission_time, sample_excitation_cycle, Channel,
    Click, ClickOrigin, CycleOutcome, Emission,
};
pub(crate) use emission::{emission_state, small_poisson};
pub use readout::{
    readout_counts, readout_counts_with_loss, readout_threshold, readout_threshold_with_loss,
    ReadoutPrediction,
};
