//! Simulator and estimator toolkit for a single-neutral-atom quantum network
//! node: photon generation statistics, atom–photon entanglement and the
//! analysis chain that turns event logs into fidelities and error budgets.

pub mod error;
pub mod estimators;
pub mod io;
pub mod physics;
pub mod quantum;
pub mod sequence;
pub mod special;

pub use error::{Error, Result};
