//! Heralded atom–photon entanglement runs and waveplate scans.

use nalgebra::Matrix2;
use rand::Rng;
use rayon::prelude::*;

use super::log::{
    AtomOutcome, ClickRecord, EventLog, LogHeader, LogRecord, ShotRecord, SummaryRecord,
};
use super::rng::{stream, Domain};
use super::spec::{check_grid, Experiment, FiberModel, SequenceSpec, Waveplates};
use crate::error::{Error, Result};
use crate::physics::{
    atom_survival, blow_away, emission_state, microwave_pi_map, optical_pump,
    readout_counts_with_loss, readout_threshold, sample_excitation_cycle, two_photon_rotation,
    AtomState, Channel, ClickOrigin, Level, NodeConfig,
};
use crate::quantum::{
    c, dephasing_factor, hadamard, haar_unitary, jones_hwp, jones_qwp, measure_photon, Angle,
    AtomBasis, MeasurementBasis, PhotonMeasurement, PolarizationOp, C64,
};

const CHUNK: u64 = 1 << 13;

/// The fiber unitary of a run: fixed per seed.
pub fn draw_fiber(seed: u64, model: FiberModel) -> PolarizationOp {
    match model {
        FiberModel::Haar => haar_unitary(&mut stream(seed, Domain::Fiber, 0)),
        FiberModel::Identity => PolarizationOp::identity(),
    }
}

fn waveplates(alpha: Angle, beta: Angle) -> PolarizationOp {
    jones_hwp(beta) * jones_qwp(alpha)
}

/// Even parity `P(↑',H) + P(↓,V)` of the ideal Bell state behind the fiber
/// and a QWP at `alpha` followed by a HWP at `beta`, with a perfect atom
/// measurement in `basis`.
pub fn ideal_even_parity(
    fiber: &PolarizationOp,
    basis: MeasurementBasis,
    alpha: Angle,
    beta: Angle,
) -> f64 {
    let state = emission_state(0.0, fiber)
        .apply_photon(&waveplates(alpha, beta))
        .expect("waveplates are unitary");
    let state = match basis {
        MeasurementBasis::Z => state,
        MeasurementBasis::X => state.apply_atom(&hadamard()),
    };
    state.element(0, 0).re + state.element(3, 3).re
}

/// Coefficients `(c, a, b)` of the exact parity curve `c + a·cos 4β + b·sin 4β`.
fn parity_harmonics(fiber: &PolarizationOp, basis: MeasurementBasis, alpha: Angle) -> [f64; 3] {
    let p = |deg: f64| ideal_even_parity(fiber, basis, alpha, Angle::from_degrees(deg));
    let (p0, p22, p45) = (p(0.0), p(22.5), p(45.0));
    let c = 0.5 * (p0 + p45);
    [c, 0.5 * (p0 - p45), p22 - c]
}

/// Waveplate angles maximizing the parity contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateOptimum {
    pub alpha_deg: f64,
    /// HWP angle of maximal even parity, in `[0°, 90°)`.
    pub beta_deg: f64,
    pub visibility: f64,
}

/// Coarse-to-fine search (5°, 1°, 0.1°) over the QWP angle for the largest
/// parity oscillation amplitude; the HWP angle follows from its phase.
pub fn optimize_waveplates(fiber: &PolarizationOp, basis: MeasurementBasis) -> WaveplateOptimum {
    let visibility = |deg: f64| {
        let [c, a, b] = parity_harmonics(fiber, basis, Angle::from_degrees(deg));
        a.hypot(b) / c
    };
    let best_on = |grid: Vec<f64>| {
        grid.into_iter()
            .map(|a| (a, visibility(a)))
            .fold((0.0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
    };
    let (coarse, _) = best_on((0..36).map(|i| 5.0 * i as f64).collect());
    let (mid, _) = best_on((-5..=5).map(|i| coarse + i as f64).collect());
    let (fine, vis) = best_on((-10..=10).map(|i| mid + 0.1 * i as f64).collect());
    let alpha_deg = fine.rem_euclid(180.0);
    let [_, a, b] = parity_harmonics(fiber, basis, Angle::from_degrees(alpha_deg));
    let beta_deg = (b.atan2(a).to_degrees() / 4.0).rem_euclid(90.0);
    WaveplateOptimum {
        alpha_deg,
        beta_deg,
        visibility: vis,
    }
}

/// Everything fixed for the shots of one run.
struct ShotPlan<'a> {
    config: &'a NodeConfig,
    basis: MeasurementBasis,
    alpha_deg: f64,
    beta_deg: f64,
    clean: PhotonMeasurement,
    corrupted: PhotonMeasurement,
    threshold: u64,
    coherence: f64,
    readout_delay_s: f64,
}

struct TrialResult {
    cycles: u64,
    gates: u64,
    shot: Option<HeraldedShot>,
}

struct HeraldedShot {
    cycle_in_trial: u64,
    attempt: u32,
    clicks: Vec<(Channel, f64, ClickOrigin)>,
    photon: Channel,
    herald: ClickOrigin,
    atom: AtomOutcome,
    counts: [u64; 2],
    trapped: bool,
    multi_photon: bool,
}

impl<'a> ShotPlan<'a> {
    fn new(
        config: &'a NodeConfig,
        fiber: &PolarizationOp,
        basis: MeasurementBasis,
        alpha_deg: f64,
        beta_deg: f64,
    ) -> Result<Self> {
        let e = &config.errors;
        let chain = [
            jones_qwp(Angle::from_degrees(alpha_deg + e.qwp_error_deg)),
            jones_hwp(Angle::from_degrees(beta_deg + e.hwp_error_deg)),
        ];
        let clean = measure_photon(&emission_state(0.0, fiber), &chain)?;
        let corrupted = measure_photon(&emission_state(1.0, fiber), &chain)?;
        let (mu_atom, mu_bg) = config.readout_means();
        let threshold = readout_threshold(mu_atom, mu_bg)?.threshold;
        let n = &config.node;
        let coherence = if e.atom_dephasing {
            dephasing_factor(config.dephasing_window_us(), n.t2_bare_us)
        } else {
            1.0
        };
        let rotation_us = match basis {
            MeasurementBasis::Z => 0.0,
            MeasurementBasis::X => n.pi_half_len_us,
        };
        let readout_delay_s = (n.branch_delay_us + n.map_pulse_len_us + rotation_us) * 1e-6;
        Ok(ShotPlan {
            config,
            basis,
            alpha_deg,
            beta_deg,
            clean,
            corrupted,
            threshold,
            coherence,
            readout_delay_s,
        })
    }

    fn measurement(&self, multi: bool) -> &PhotonMeasurement {
        if multi {
            &self.corrupted
        } else {
            &self.clean
        }
    }

    /// One loaded atom: excitation cycles until a herald or trap loss.
    fn trial<R: Rng>(&self, rng: &mut R) -> TrialResult {
        let cfg = self.config;
        let loss = cfg.cycle_loss_probability();
        let mut out = TrialResult {
            cycles: 0,
            gates: 0,
            shot: None,
        };
        loop {
            let pumped = optical_pump(rng, cfg);
            let outcome = sample_excitation_cycle(&pumped, cfg, rng, |r, multi| {
                if r.random::<f64>() < self.measurement(multi).p_h {
                    Channel::One
                } else {
                    Channel::Two
                }
            });
            out.cycles += 1;
            out.gates += u64::from(outcome.attempts_run);
            if let Some(herald) = outcome.herald().copied() {
                let multi_photon = outcome.multi_photon && herald.origin == ClickOrigin::Photon;
                let atom = if herald.origin == ClickOrigin::Photon {
                    let m = self.measurement(multi_photon);
                    let q = match herald.channel {
                        Channel::One => m.atom_given_h,
                        Channel::Two => m.atom_given_v,
                    };
                    qubit_state(q.unwrap_or_else(maximally_mixed))
                } else if outcome.emission.is_some() {
                    // photon lost or later in the gate; the atom is uncorrelated with ν
                    qubit_state(maximally_mixed())
                } else {
                    pumped
                };
                let (outcome_atom, counts, trapped) = self.measure_atom(atom, rng);
                out.shot = Some(HeraldedShot {
                    cycle_in_trial: out.cycles - 1,
                    attempt: herald.attempt,
                    clicks: outcome
                        .clicks
                        .iter()
                        .map(|c| (c.channel, c.time_ns, c.origin))
                        .collect(),
                    photon: herald.channel,
                    herald: herald.origin,
                    atom: outcome_atom,
                    counts,
                    trapped,
                    multi_photon,
                });
                return out;
            }
            if rng.random::<f64>() < loss {
                return out;
            }
        }
    }

    fn measure_atom<R: Rng>(&self, mut atom: AtomState, rng: &mut R) -> (AtomOutcome, [u64; 2], bool) {
        let cfg = self.config;
        atom.dephase(Level::Up, Level::Down, self.coherence);
        let mut atom = microwave_pi_map(&atom, cfg, rng);
        if self.basis == MeasurementBasis::X {
            atom = two_photon_rotation(&atom, std::f64::consts::FRAC_PI_2, cfg);
        }
        let trapped = atom_survival(self.readout_delay_s, cfg, rng);
        let retained = blow_away(&atom, cfg, rng);
        let (a, b) = readout_counts_with_loss(trapped && retained, cfg, rng);
        let outcome = if a + b >= self.threshold {
            AtomOutcome::Down
        } else {
            AtomOutcome::UpPrime
        };
        (outcome, [a, b], trapped)
    }
}

fn maximally_mixed() -> Matrix2<C64> {
    Matrix2::identity() * c(0.5, 0.0)
}

fn qubit_state(q: Matrix2<C64>) -> AtomState {
    AtomState::from_qubit(&q, AtomBasis::Bare)
}

/// Heralded entanglement generation and atom-state verification.
pub fn run_entanglement(spec: &SequenceSpec, config: &NodeConfig) -> Result<EventLog> {
    config.validate()?;
    spec.validate()?;
    let Experiment::Entanglement {
        basis,
        shots,
        waveplates,
    } = &spec.experiment
    else {
        return Err(Error::InvalidArgument("spec is not an entanglement run".into()));
    };
    let fiber = draw_fiber(spec.seed, spec.fiber);
    let (alpha_deg, beta_deg) = match *waveplates {
        Waveplates::Optimal => {
            let o = optimize_waveplates(&fiber, *basis);
            (o.alpha_deg, o.beta_deg)
        }
        Waveplates::Fixed {
            alpha_deg,
            beta_deg,
        } => (alpha_deg, beta_deg),
    };
    let plan = ShotPlan::new(config, &fiber, *basis, alpha_deg, beta_deg)?;
    let header = LogHeader::new(config, spec, &fiber);
    let domain = match basis {
        MeasurementBasis::Z => Domain::Trial,
        MeasurementBasis::X => Domain::TrialX,
    };
    let mut records = Vec::new();
    let mut summary = SummaryRecord::default();
    let mut next_trial = 0u64;
    'outer: while summary.shots < *shots {
        let results: Vec<TrialResult> = (next_trial..next_trial + CHUNK)
            .into_par_iter()
            .map(|i| plan.trial(&mut stream(spec.seed, domain, i)))
            .collect();
        next_trial += CHUNK;
        for r in results {
            let first_cycle = summary.cycles;
            summary.trials += 1;
            summary.cycles += r.cycles;
            summary.gates += r.gates;
            let Some(shot) = r.shot else { continue };
            let id = summary.shots;
            let cycle = first_cycle + shot.cycle_in_trial;
            summary.detected_cycles += 1;
            if shot.attempt == 1 {
                summary.first_attempt_detections += 1;
            }
            for &(channel, t, origin) in &shot.clicks {
                match origin {
                    ClickOrigin::Photon => summary.photon_clicks += 1,
                    ClickOrigin::Dark => summary.dark_clicks += 1,
                }
                records.push(LogRecord::Click(ClickRecord {
                    shot: id,
                    cycle,
                    attempt: shot.attempt,
                    channel: channel.number(),
                    t_ns: t.round() as i64,
                    origin,
                }));
            }
            records.push(LogRecord::Shot(ShotRecord {
                shot: id,
                cycle,
                basis: *basis,
                alpha_deg: plan.alpha_deg,
                beta_deg: plan.beta_deg,
                photon: shot.photon.number(),
                atom: shot.atom,
                counts: shot.counts,
                trapped: shot.trapped,
                multi_photon: shot.multi_photon,
                herald: shot.herald,
            }));
            summary.shots += 1;
            if summary.shots == *shots {
                break 'outer;
            }
        }
    }
    records.push(LogRecord::Summary(summary));
    Ok(EventLog { header, records })
}

/// A HWP scan at fixed QWP angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub seed: u64,
    pub fiber: FiberModel,
    pub basis: MeasurementBasis,
    /// QWP angle; `None` picks the optimum for the drawn fiber.
    pub alpha_deg: Option<f64>,
    pub betas_deg: Vec<f64>,
    pub shots_per_point: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub beta_deg: f64,
    /// Valid-shot counts in `(↑'H, ↑'V, ↓H, ↓V)` order.
    pub counts: [u64; 4],
}

impl ScanRow {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn even_parity(&self) -> f64 {
        (self.counts[0] + self.counts[3]) as f64 / self.shots().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveplateScan {
    pub basis: MeasurementBasis,
    pub alpha_deg: f64,
    pub rows: Vec<ScanRow>,
}

/// One entanglement run per HWP angle, all with the same seed so that the
/// points share their random numbers.
pub fn scan_waveplates(scan: &ScanSpec, config: &NodeConfig) -> Result<WaveplateScan> {
    check_grid(&scan.betas_deg)?;
    let fiber = draw_fiber(scan.seed, scan.fiber);
    let alpha_deg = scan
        .alpha_deg
        .unwrap_or_else(|| optimize_waveplates(&fiber, scan.basis).alpha_deg);
    let mut rows = Vec::with_capacity(scan.betas_deg.len());
    for &beta_deg in &scan.betas_deg {
        let spec = SequenceSpec::new(
            scan.seed,
            Experiment::Entanglement {
                basis: scan.basis,
                shots: scan.shots_per_point,
                waveplates: Waveplates::Fixed {
                    alpha_deg,
                    beta_deg,
                },
            },
        )
        .with_fiber(scan.fiber);
        let log = run_entanglement(&spec, config)?;
        let mut counts = [0u64; 4];
        for s in log.shots().filter(|s| s.is_valid()) {
            counts[s.joint_index()] += 1;
        }
        rows.push(ScanRow { beta_deg, counts });
    }
    Ok(WaveplateScan {
        basis: scan.basis,
        alpha_deg,
        rows,
    })
}
