use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::MeasurementBasis;

/// Polarization rotation of the single-mode fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberModel {
    /// One Haar-random unitary per log, drawn from the seed.
    #[default]
    Haar,
    Identity,
}

/// Waveplate setting for an entanglement run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Waveplates {
    /// Angles that maximize the ideal parity contrast for the drawn fiber.
    Optimal,
    Fixed { alpha_deg: f64, beta_deg: f64 },
}

/// Two-level transition driven in Rabi and Ramsey runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// `|1,0⟩ ↔ |2,0⟩` after optical pumping.
    Clock,
    /// `↑ ↔ ↑'` microwave transition.
    Bare,
    /// `↓ ↔ ↑'` two-photon transition at the magic field.
    Magic,
}

impl std::str::FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clock" => Ok(Transition::Clock),
            "bare" => Ok(Transition::Bare),
            "magic" => Ok(Transition::Magic),
            other => Err(Error::InvalidArgument(format!("unknown transition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum G2Source {
    /// The atom, with a 50:50 splitter in front of the two SPCMs.
    Atom,
    /// Two independent Poisson click streams, one gate per cycle.
    Poisson { mean_per_gate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Entanglement {
        basis: MeasurementBasis,
        /// Heralded shots to record.
        shots: u64,
        waveplates: Waveplates,
    },
    G2 {
        cycles: u64,
        source: G2Source,
    },
    Rabi {
        transition: Transition,
        durations_us: Vec<f64>,
        shots_per_point: u64,
    },
    Ramsey {
        transition: Transition,
        delays_us: Vec<f64>,
        shots_per_point: u64,
        detuning_khz: f64,
    },
    ReadoutHistogram {
        shots: u64,
        /// Probability that a trap holds an atom.
        atom_fraction: f64,
        /// Include trap loss during the exposure.
        with_loss: bool,
    },
}

/// What to run, with which seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub seed: u64,
    #[serde(default)]
    pub fiber: FiberModel,
    pub experiment: Experiment,
}

impl SequenceSpec {
    pub fn new(seed: u64, experiment: Experiment) -> Self {
        SequenceSpec {
            seed,
            fiber: FiberModel::default(),
            experiment,
        }
    }

    pub fn with_fiber(mut self, fiber: FiberModel) -> Self {
        self.fiber = fiber;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let budget = |n: u64| {
            if n == 0 {
                Err(Error::InvalidArgument("shot or cycle budget must be > 0".into()))
            } else {
                Ok(())
            }
        };
        match &self.experiment {
            Experiment::Entanglement { shots, waveplates, .. } => {
                budget(*shots)?;
                if let Waveplates::Fixed { alpha_deg, beta_deg } = waveplates {
                    if !(alpha_deg.is_finite() && beta_deg.is_finite()) {
                        return Err(Error::InvalidArgument("waveplate angles must be finite".into()));
                    }
                }
                Ok(())
            }
            Experiment::G2 { cycles, source } => {
                budget(*cycles)?;
                if let G2Source::Poisson { mean_per_gate } = source {
                    if !(mean_per_gate.is_finite() && *mean_per_gate > 0.0) {
                        return Err(Error::InvalidArgument("Poisson mean must be > 0".into()));
                    }
                }
                Ok(())
            }
            Experiment::Rabi { durations_us, shots_per_point, .. } => {
                budget(*shots_per_point)?;
                check_time_grid(durations_us)
            }
            Experiment::Ramsey {
                delays_us,
                shots_per_point,
                detuning_khz,
                ..
            } => {
                budget(*shots_per_point)?;
                if !detuning_khz.is_finite() {
                    return Err(Error::InvalidArgument("detuning must be finite".into()));
                }
                check_time_grid(delays_us)
            }
            Experiment::ReadoutHistogram {
                shots, atom_fraction, ..
            } => {
                budget(*shots)?;
                if !(0.0..=1.0).contains(atom_fraction) {
                    return Err(Error::InvalidArgument("atom_fraction outside [0, 1]".into()));
                }
                Ok(())
            }
        }
    }
}

/// Non-empty, finite and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("scan grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("scan grid values must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("scan grid must be strictly increasing".into()));
    }
    Ok(())
}

fn check_time_grid(grid: &[f64]) -> Result<()> {
    check_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(Error::InvalidArgument("durations must be >= 0".into()));
    }
    Ok(())
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
