//! Experiment orchestration: full shot sequences producing reproducible logs.

mod entanglement;
mod g2;
mod log;
mod rng;
mod spec;
mod spectroscopy;

pub use entanglement::{
    draw_fiber, ideal_even_parity, optimize_waveplates, run_entanglement, scan_waveplates,
    ScanRow, ScanSpec, WaveplateOptimum, WaveplateScan,
};
pub use g2::run_g2;
pub use log::{
    config_hash, AtomOutcome, ClickRecord, EventLog, LogHeader, LogRecord, ShotRecord,
    SummaryRecord, FORMAT_VERSION,
};
pub use rng::{stream, Domain};
pub use spec::{
    check_grid, linspace, Experiment, FiberModel, G2Source, SequenceSpec, Transition, Waveplates,
};
pub use spectroscopy::{
    rabi_grid, ramsey_grid, run_rabi, run_ramsey, run_readout_histogram, PopulationPoint,
    ReadoutShot,
};
