//! Fluorescence readout.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::config::NodeConfig;
use crate::error::{Error, Result};
use crate::special::{poisson_at_least, poisson_below};

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Photon counts on the two SPCMs during one fluorescence exposure.
pub fn readout_counts<R: Rng + ?Sized>(
    atom_present: bool,
    config: &NodeConfig,
    rng: &mut R,
) -> (u64, u64) {
    let (atom, bg) = config.readout_means();
    let per_spcm = if atom_present { atom } else { bg } / 2.0;
    (poisson(rng, per_spcm), poisson(rng, per_spcm))
}

/// Readout counts when the atom can also be lost from the trap during the
/// exposure. A lost atom shows only background.
pub fn readout_counts_with_loss<R: Rng + ?Sized>(
    atom_present: bool,
    config: &NodeConfig,
    rng: &mut R,
) -> (u64, u64) {
    let present = atom_present
        && super::atom::atom_survival(config.readout_loss_window_s(), config, rng);
    readout_counts(present, config, rng)
}

/// Optimal count threshold for telling an atom from background, with the
/// predicted classification probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutPrediction {
    /// Counts at or above this value mean "atom present".
    pub threshold: u64,
    pub p_correct_atom: f64,
    pub p_correct_empty: f64,
}

impl ReadoutPrediction {
    /// Mean of the two class-conditional success probabilities.
    pub fn fidelity(&self) -> f64 {
        0.5 * (self.p_correct_atom + self.p_correct_empty)
    }

    pub fn misclassification(&self) -> f64 {
        1.0 - self.fidelity()
    }
}

/// Integer threshold minimizing the total Poisson misclassification
/// probability for summed counts with means `mu_atom` and `mu_bg`.
pub fn readout_threshold(mu_atom: f64, mu_bg: f64) -> Result<ReadoutPrediction> {
    readout_threshold_with_loss(mu_atom, mu_bg, 0.0)
}

/// Same as [`readout_threshold`], where a present atom is lost (and shows
/// background only) with probability `loss`. The threshold is the loss-free
/// optimum.
pub fn readout_threshold_with_loss(mu_atom: f64, mu_bg: f64, loss: f64) -> Result<ReadoutPrediction> {
    if !(mu_atom.is_finite() && mu_bg.is_finite()) || mu_bg < 0.0 || mu_atom < mu_bg {
        return Err(Error::InvalidArgument(format!(
            "readout means need mu_atom >= mu_bg >= 0 (got {mu_atom}, {mu_bg})"
        )));
    }
    if !(0.0..=1.0).contains(&loss) {
        return Err(Error::InvalidArgument(format!("loss {loss} outside [0, 1]")));
    }
    let upper = (mu_atom + 20.0 * mu_atom.sqrt() + 10.0).ceil() as u64;
    let mut best = (f64::INFINITY, 0);
    for t in 0..=upper {
        let err = poisson_below(t, mu_atom) + poisson_at_least(t, mu_bg);
        if err < best.0 - 1e-15 {
            best = (err, t);
        }
    }
    let t = best.1;
    let bright_atom = 1.0 - poisson_below(t, mu_atom);
    let bright_bg = poisson_at_least(t, mu_bg);
    Ok(ReadoutPrediction {
        threshold: t,
        p_correct_atom: (1.0 - loss) * bright_atom + loss * bright_bg,
        p_correct_empty: 1.0 - bright_bg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_separates_default_peaks() {
        let r = readout_threshold(200.0, 80.0).unwrap();
        assert!(r.misclassification() < 1e-5);
        assert!(r.threshold > 80 && r.threshold < 200);
        let same = readout_threshold(50.0, 50.0).unwrap();
        assert!((same.fidelity() - 0.5).abs() < 1e-12);
        assert!(readout_threshold(10.0, 20.0).is_err());
    }

    #[test]
    fn threshold_is_brute_force_optimum() {
        let r = readout_threshold(30.0, 8.0).unwrap();
        let err = |t| poisson_below(t, 30.0) + poisson_at_least(t, 8.0);
        for t in 0..80 {
            assert!(err(r.threshold) <= err(t) + 1e-15);
        }
    }

    #[test]
    fn loss_folds_into_atom_class() {
        let r = readout_threshold_with_loss(200.0, 80.0, 0.004).unwrap();
        assert!((r.p_correct_atom - 0.996).abs() < 1e-5);
    }

    #[test]
    fn no_background_no_counts() {
        let mut cfg = NodeConfig::default();
        cfg.node.mu_bg_per_spcm = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(readout_counts(false, &cfg, &mut rng), (0, 0));
    }

    #[test]
    fn count_means() {
        let cfg = NodeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let (mut a, mut b) = (0u64, 0u64);
        for _ in 0..n {
            let (x, y) = readout_counts(true, &cfg, &mut rng);
            a += x;
            b += y;
        }
        assert!((a as f64 / n as f64 - 100.0).abs() < 0.4);
        assert!((b as f64 / n as f64 - 100.0).abs() < 0.4);

        let mut alt = cfg.clone();
        alt.node.atom_counts_include_bg = false;
        let sum: u64 = (0..n)
            .map(|_| {
                let (x, y) = readout_counts(true, &alt, &mut rng);
                x + y
            })
            .sum();
        assert!((sum as f64 / n as f64 - 280.0).abs() < 1.0);
    }

    #[test]
    fn loss_reduces_bright_fraction() {
        let cfg = NodeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let dark = (0..n)
            .filter(|_| {
                let (x, y) = readout_counts_with_loss(true, &cfg, &mut rng);
                x + y < 130
            })
            .count() as f64
            / n as f64;
        assert!((dark - 0.004).abs() < 4.0 * (0.004f64 / n as f64).sqrt());
    }
}
