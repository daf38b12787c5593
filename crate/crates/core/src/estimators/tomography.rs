use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{readout_threshold_with_loss, NodeConfig};
use crate::quantum::{fidelity_lower_bound, DiagonalTomogram, MeasurementBasis};
use crate::sequence::{EventLog, LogRecord, ShotRecord};

/// Streaming joint-outcome counter for one basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointCounts {
    basis: MeasurementBasis,
    counts: [u64; 4],
    rejected: u64,
}

impl JointCounts {
    pub fn new(basis: MeasurementBasis) -> Self {
        JointCounts {
            basis,
            counts: [0; 4],
            rejected: 0,
        }
    }

    pub fn from_counts(basis: MeasurementBasis, counts: [u64; 4]) -> Self {
        JointCounts {
            basis,
            counts,
            rejected: 0,
        }
    }

    pub fn add_shot(&mut self, s: &ShotRecord) {
        if s.basis != self.basis {
            return;
        }
        if s.is_valid() {
            self.counts[s.joint_index()] += 1;
        } else {
            self.rejected += 1;
        }
    }

    pub fn add(&mut self, r: &LogRecord) {
        if let LogRecord::Shot(s) = r {
            self.add_shot(s);
        }
    }

    pub fn counts(&self) -> [u64; 4] {
        self.counts
    }

    /// Shots dropped for trap loss or a multi-photon flag.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn tomogram(&self) -> Result<DiagonalTomogram> {
        DiagonalTomogram::from_counts(self.basis, self.counts)
    }
}

/// Joint frequencies of the valid shots of `basis` in a log.
pub fn joint_probabilities(log: &EventLog, basis: MeasurementBasis) -> Result<DiagonalTomogram> {
    let mut acc = JointCounts::new(basis);
    log.shots().for_each(|s| acc.add_shot(s));
    acc.tomogram()
}

fn resample(rng: &mut ChaCha8Rng, counts: [u64; 4]) -> [u64; 4] {
    let mut left: u64 = counts.iter().sum();
    let total = left as f64;
    let mut mass = 1.0;
    let mut out = [0; 4];
    for i in 0..3 {
        let p = counts[i] as f64 / total;
        let k = if left == 0 || p <= 0.0 {
            0
        } else {
            let q = (p / mass).min(1.0);
            Binomial::new(left, q).expect("probability in [0, 1]").sample(rng)
        };
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out[3] = left;
    out
}

/// Parametric bootstrap of the fidelity lower bound: multinomial resamples
/// of both count vectors. Returns the mean and standard deviation over
/// `replicates` draws.
pub fn bootstrap_lower_bound(
    z: &JointCounts,
    x: &JointCounts,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicates < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 replicates".into()));
    }
    z.tomogram()?;
    x.tomogram()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let tz = DiagonalTomogram::from_counts(z.basis, resample(&mut rng, z.counts))?;
        let tx = DiagonalTomogram::from_counts(x.basis, resample(&mut rng, x.counts))?;
        values.push(fidelity_lower_bound(&tz, &tx)?.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

fn check_fidelity(f_meas: f64) -> Result<()> {
    if !(f_meas > 0.5 && f_meas <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "atom-measurement fidelity must lie in (0.5, 1], got {f_meas}"
        )));
    }
    Ok(())
}

/// Undo a symmetric atom-measurement error of fidelity `f_meas` on a Bell
/// fidelity: the correlated part `F - 1/2` is divided by `2 f_meas - 1`.
pub fn correct_for_readout(f_raw: f64, f_meas: f64) -> Result<f64> {
    check_fidelity(f_meas)?;
    Ok(0.5 + (f_raw - 0.5) / (2.0 * f_meas - 1.0))
}

/// Flip the atom outcome with probability `1 - f_meas`.
pub fn forward_confusion(t: &DiagonalTomogram, f_meas: f64) -> Result<DiagonalTomogram> {
    check_fidelity(f_meas)?;
    mix(t, f_meas, 1.0 - f_meas, true)
}

/// Exact inverse of [`forward_confusion`]. Fails when the corrected
/// populations leave `[0, 1]`.
pub fn invert_confusion(t: &DiagonalTomogram, f_meas: f64) -> Result<DiagonalTomogram> {
    check_fidelity(f_meas)?;
    let d = 2.0 * f_meas - 1.0;
    mix(t, f_meas / d, -(1.0 - f_meas) / d, false)
}

/// `p'[a, ν] = keep·p[a, ν] + flip·p[1-a, ν]`.
fn mix(t: &DiagonalTomogram, keep: f64, flip: f64, forward: bool) -> Result<DiagonalTomogram> {
    let p = t.populations();
    let s = t.uncertainties();
    let mut q = [0.0; 4];
    let mut e = [0.0; 4];
    for a in 0..2 {
        for nu in 0..2 {
            let (i, j) = (2 * a + nu, 2 * (1 - a) + nu);
            q[i] = keep * p[i] + flip * p[j];
            e[i] = ((keep * s[i]).powi(2) + (flip * s[j]).powi(2)).sqrt();
        }
    }
    for v in q.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    if !forward && q.iter().any(|v| *v < 0.0 || *v > 1.0) {
        return Err(Error::Estimator(format!(
            "readout correction gives populations outside [0, 1]: {q:?}"
        )));
    }
    DiagonalTomogram::new(t.basis(), q, e)
}

/// Predicted state-selective readout (blow-away, then fluorescence).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineReadout {
    pub threshold: u64,
    /// P(dark | f = 2).
    pub upper_correct: f64,
    /// P(bright | f = 1).
    pub lower_correct: f64,
}

impl HyperfineReadout {
    pub fn predict(config: &NodeConfig) -> Result<Self> {
        let (mu_atom, mu_bg) = config.readout_means();
        let loss = 1.0 - config.errors.fluor_readout_fidelity;
        let r = readout_threshold_with_loss(mu_atom, mu_bg, loss)?;
        let b = config.errors.blowaway_fidelity;
        Ok(HyperfineReadout {
            threshold: r.threshold,
            upper_correct: b * r.p_correct_empty + (1.0 - b) * (1.0 - r.p_correct_atom),
            lower_correct: b * r.p_correct_atom + (1.0 - b) * (1.0 - r.p_correct_empty),
        })
    }

    /// Contrast of the measured dark fraction per unit of `f = 2` population.
    pub fn contrast_scale(&self) -> f64 {
        self.upper_correct + self.lower_correct - 1.0
    }
}

/// Pumping fidelity implied by the fitted contrast of a clock Rabi
/// oscillation, after removing the readout contrast loss.
pub fn pump_fidelity_from_contrast(contrast: f64, readout: &HyperfineReadout) -> Result<f64> {
    let k = readout.contrast_scale();
    if !(k > 0.0) {
        return Err(Error::Estimator("readout has no contrast".into()));
    }
    Ok(contrast / k)
}
