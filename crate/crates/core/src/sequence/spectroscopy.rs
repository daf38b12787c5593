//! Rabi, Ramsey and readout-histogram runs.

use rand::Rng;
use rayon::prelude::*;

use super::rng::{stream, Domain};
use super::spec::{linspace, Experiment, SequenceSpec, Transition};
use crate::error::{Error, Result};
use crate::physics::{
    blow_away, optical_pump, readout_counts, readout_counts_with_loss, readout_threshold,
    AtomState, Level, NodeConfig, ROTATION_PHASE,
};
use crate::quantum::dephasing_factor;

/// Shots and dark (`f = 2`) readouts at one scan point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationPoint {
    pub x_us: f64,
    pub shots: u64,
    pub upper: u64,
}

impl PopulationPoint {
    pub fn fraction(&self) -> f64 {
        self.upper as f64 / self.shots as f64
    }
}

struct Drive {
    lower: Level,
    upper: Level,
    rabi_khz: f64,
    t2_us: f64,
    phase: f64,
    area_scale: f64,
}

fn drive(transition: Transition, config: &NodeConfig) -> Drive {
    let n = &config.node;
    match transition {
        Transition::Clock => Drive {
            lower: Level::ClockLower,
            upper: Level::ClockUpper,
            rabi_khz: n.clock_rabi_khz,
            t2_us: n.t2_clock_us,
            phase: 0.0,
            area_scale: 1.0,
        },
        Transition::Bare => Drive {
            lower: Level::Up,
            upper: Level::UpPrime,
            rabi_khz: config.map_rabi_khz(),
            t2_us: n.t2_bare_us,
            phase: 0.0,
            area_scale: 1.0,
        },
        Transition::Magic => Drive {
            lower: Level::Down,
            upper: Level::UpPrime,
            rabi_khz: n.two_photon_rabi_khz,
            t2_us: n.t2_magic_us,
            phase: ROTATION_PHASE,
            area_scale: 1.0 + config.rotation_area_error(),
        },
    }
}

impl Transition {
    pub fn rabi_khz(self, config: &NodeConfig) -> f64 {
        drive(self, config).rabi_khz
    }

    pub fn t2_us(self, config: &NodeConfig) -> f64 {
        drive(self, config).t2_us
    }
}

/// Drive durations covering four Rabi periods.
pub fn rabi_grid(transition: Transition, config: &NodeConfig, points: usize) -> Vec<f64> {
    let period_us = 1e3 / transition.rabi_khz(config);
    linspace(0.0, 4.0 * period_us, points)
}

/// Delays over three T2* and a detuning (kHz) giving two fringes per T2*.
pub fn ramsey_grid(transition: Transition, config: &NodeConfig, points: usize) -> (Vec<f64>, f64) {
    let t2 = transition.t2_us(config);
    (linspace(0.0, 3.0 * t2, points), 2e3 / t2)
}

/// Clock runs start from optical pumping; the qubit transitions start in
/// their lower level.
fn prepare<R: Rng>(transition: Transition, config: &NodeConfig, rng: &mut R) -> AtomState {
    match transition {
        Transition::Clock => optical_pump(rng, config),
        Transition::Bare => AtomState::pure(Level::Up),
        Transition::Magic => AtomState::pure(Level::Down),
    }
}

/// Blow-away plus fluorescence: true when the readout is dark.
fn reads_dark<R: Rng>(state: &AtomState, config: &NodeConfig, threshold: u64, rng: &mut R) -> bool {
    let retained = blow_away(state, config, rng);
    let (a, b) = readout_counts_with_loss(retained, config, rng);
    a + b < threshold
}

fn scan<F>(seed: u64, grid: &[f64], shots: u64, shot: F) -> Vec<PopulationPoint>
where
    F: Fn(f64, &mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    grid.iter()
        .enumerate()
        .map(|(k, &x)| {
            let upper = (0..shots)
                .into_par_iter()
                .filter(|&s| {
                    let mut rng = stream(seed, Domain::Spectroscopy, k as u64 * shots + s);
                    shot(x, &mut rng)
                })
                .count() as u64;
            PopulationPoint {
                x_us: x,
                shots,
                upper,
            }
        })
        .collect()
}

fn threshold(config: &NodeConfig) -> Result<u64> {
    let (a, b) = config.readout_means();
    Ok(readout_threshold(a, b)?.threshold)
}

/// Upper-state population versus drive duration.
pub fn run_rabi(spec: &SequenceSpec, config: &NodeConfig) -> Result<Vec<PopulationPoint>> {
    config.validate()?;
    spec.validate()?;
    let Experiment::Rabi {
        transition,
        durations_us,
        shots_per_point,
    } = &spec.experiment
    else {
        return Err(Error::InvalidArgument("spec is not a Rabi run".into()));
    };
    let d = drive(*transition, config);
    let thr = threshold(config)?;
    let omega = 2.0 * std::f64::consts::PI * d.rabi_khz * 1e-3;
    Ok(scan(spec.seed, durations_us, *shots_per_point, |t, rng| {
        let mut s = prepare(*transition, config, rng);
        s.rotate(d.lower, d.upper, omega * t, d.phase);
        reads_dark(&s, config, thr, rng)
    }))
}

/// Upper-state population after a π/2, wait, π/2 sequence versus the wait.
pub fn run_ramsey(spec: &SequenceSpec, config: &NodeConfig) -> Result<Vec<PopulationPoint>> {
    config.validate()?;
    spec.validate()?;
    let Experiment::Ramsey {
        transition,
        delays_us,
        shots_per_point,
        detuning_khz,
    } = &spec.experiment
    else {
        return Err(Error::InvalidArgument("spec is not a Ramsey run".into()));
    };
    let d = drive(*transition, config);
    let thr = threshold(config)?;
    let half = std::f64::consts::FRAC_PI_2 * d.area_scale;
    let delta = 2.0 * std::f64::consts::PI * detuning_khz * 1e-3;
    Ok(scan(spec.seed, delays_us, *shots_per_point, |t, rng| {
        let mut s = prepare(*transition, config, rng);
        s.rotate(d.lower, d.upper, half, d.phase);
        s.dephase(d.lower, d.upper, dephasing_factor(t, d.t2_us));
        // free precession at the detuning is a phase shift of the second pulse
        s.rotate(d.lower, d.upper, half, d.phase + delta * t);
        reads_dark(&s, config, thr, rng)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadoutShot {
    pub atom_present: bool,
    pub counts: [u64; 2],
}

/// Fluorescence counts for traps that hold an atom with probability
/// `atom_fraction`.
pub fn run_readout_histogram(spec: &SequenceSpec, config: &NodeConfig) -> Result<Vec<ReadoutShot>> {
    config.validate()?;
    spec.validate()?;
    let Experiment::ReadoutHistogram {
        shots,
        atom_fraction,
        with_loss,
    } = &spec.experiment
    else {
        return Err(Error::InvalidArgument("spec is not a readout run".into()));
    };
    Ok((0..*shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(spec.seed, Domain::Readout, i);
            let present = rng.random::<f64>() < *atom_fraction;
            let (a, b) = if *with_loss {
                readout_counts_with_loss(present, config, &mut rng)
            } else {
                readout_counts(present, config, &mut rng)
            };
            ReadoutShot {
                atom_present: present,
                counts: [a, b],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::spec::linspace;

    #[test]
    fn ideal_clock_rabi_follows_sin_squared() {
        let cfg = NodeConfig::ideal();
        let spec = SequenceSpec::new(
            1,
            Experiment::Rabi {
                transition: Transition::Clock,
                durations_us: linspace(0.0, 10.0, 11),
                shots_per_point: 2000,
            },
        );
        for p in run_rabi(&spec, &cfg).unwrap() {
            let expect = (std::f64::consts::PI * 0.118 * p.x_us).sin().powi(2);
            let sigma = (expect * (1.0 - expect) / 2000.0).sqrt().max(1e-3);
            assert!((p.fraction() - expect).abs() < 4.0 * sigma, "{p:?}");
        }
    }

    #[test]
    fn magic_pi_half_time() {
        // a π/2 pulse of the configured length puts half the population up
        let cfg = NodeConfig::ideal();
        let spec = SequenceSpec::new(
            2,
            Experiment::Rabi {
                transition: Transition::Magic,
                durations_us: vec![87.0, 174.2],
                shots_per_point: 4000,
            },
        );
        let pts = run_rabi(&spec, &cfg).unwrap();
        assert!((pts[0].fraction() - 0.5).abs() < 0.03);
        assert!(pts[1].fraction() > 0.99);
    }

    #[test]
    fn ramsey_envelope_decays() {
        let cfg = NodeConfig::ideal();
        let spec = SequenceSpec::new(
            3,
            Experiment::Ramsey {
                transition: Transition::Bare,
                delays_us: vec![0.0, 300.0],
                shots_per_point: 4000,
                detuning_khz: 0.0,
            },
        );
        let pts = run_ramsey(&spec, &cfg).unwrap();
        assert!(pts[0].fraction() > 0.99);
        assert!((pts[1].fraction() - 0.5).abs() < 0.03);
    }

    #[test]
    fn readout_histogram_has_two_peaks() {
        let cfg = NodeConfig::default();
        let spec = SequenceSpec::new(
            4,
            Experiment::ReadoutHistogram {
                shots: 10_000,
                atom_fraction: 0.5,
                with_loss: false,
            },
        );
        let shots = run_readout_histogram(&spec, &cfg).unwrap();
        let (with, without): (Vec<_>, Vec<_>) = shots.iter().partition(|s| s.atom_present);
        let mean = |v: &[&ReadoutShot]| {
            v.iter().map(|s| (s.counts[0] + s.counts[1]) as f64).sum::<f64>() / v.len() as f64
        };
        assert!((mean(&with) - 200.0).abs() < 1.5);
        assert!((mean(&without) - 80.0).abs() < 1.0);
    }
}
