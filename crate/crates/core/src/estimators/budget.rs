use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::Angle;

/// One infidelity source. A `bound` entry is only known to be below `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
    pub bound: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudget {
    entries: Vec<BudgetEntry>,
}

impl ErrorBudget {
    pub fn new(entries: Vec<BudgetEntry>) -> Result<Self> {
        for e in &entries {
            if !(0.0..=1.0).contains(&e.value) {
                return Err(Error::InvalidArgument(format!(
                    "budget entry {:?} outside [0, 1]: {}",
                    e.name, e.value
                )));
            }
            if !(e.uncertainty.is_finite() && e.uncertainty >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "budget entry {:?} has a bad uncertainty",
                    e.name
                )));
            }
        }
        Ok(ErrorBudget { entries })
    }

    /// Infidelity sources of the reference entanglement measurement.
    pub fn reference() -> Self {
        let e = |name: &str, value, uncertainty, bound| BudgetEntry {
            name: name.into(),
            value,
            uncertainty,
            bound,
        };
        ErrorBudget {
            entries: vec![
                e("atomic state measurement", 0.05, 0.07, false),
                e("atom basis rotation", 0.005, 0.005, false),
                e("atom dephasing", 0.005, 0.0, true),
                e("photon detection noise", 0.003, 0.0, true),
                e("waveplate rotation error", 0.003, 0.0, true),
                e("excitation polarization", 0.005, 0.0, true),
                e("imperfect optical pumping", 0.0, 0.0, false),
            ],
        }
    }

    pub fn entries(&self) -> &[BudgetEntry] {
        &self.entries
    }
}

/// Linear sum of the values (bounds at their bound) and quadrature sum of
/// the uncertainties.
pub fn compose_error_budget(budget: &ErrorBudget) -> (f64, f64) {
    let total = budget.entries.iter().map(|e| e.value).sum();
    let var: f64 = budget.entries.iter().map(|e| e.uncertainty.powi(2)).sum();
    (total, var.sqrt())
}

/// Parity visibility factor `cos 2Δα` for a QWP misset by `delta_alpha`.
pub fn visibility_penalty(delta_alpha: Angle) -> f64 {
    (2.0 * delta_alpha.radians()).cos()
}
