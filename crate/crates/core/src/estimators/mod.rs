//! Estimators turning logs and scan tables into reported quantities.

mod budget;
mod fits;
mod g2;
mod lsq;
mod tomography;

pub use budget::{compose_error_budget, visibility_penalty, BudgetEntry, ErrorBudget};
pub use fits::{
    fit_decay_histogram, fit_parity, fit_rabi, fit_ramsey, FitKind, Histogram, Series,
};
pub use g2::{estimate_g2, G2Accumulator, G2Estimate};
pub use lsq::{FitParam, FitResult};
pub use tomography::{
    bootstrap_lower_bound, correct_for_readout, forward_confusion, invert_confusion, joint_probabilities,
    pump_fidelity_from_contrast, HyperfineReadout, JointCounts,
};

pub use crate::physics::{readout_threshold, readout_threshold_with_loss, ReadoutPrediction};
