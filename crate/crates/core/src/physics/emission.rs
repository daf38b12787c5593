//! Pulsed excitation, three-channel decay and photon detection.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::atom::{AtomState, Level};
use super::config::NodeConfig;
use crate::quantum::{bell_psi_plus, JointState, PolarizationOp, C64};
use crate::special::emg_cdf;

/// SPCM behind the polarizing beam splitter: 1 sees H, 2 sees V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Channel {
    pub fn number(self) -> u8 {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Channel::One),
            2 => Some(Channel::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickOrigin {
    Photon,
    Dark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Emission {
    SigmaPlus,
    SigmaMinus,
}

/// One detector click inside an excitation gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Click {
    /// 1-based attempt index within the cycle.
    pub attempt: u32,
    pub channel: Channel,
    /// Time since the gate opened.
    pub time_ns: f64,
    pub origin: ClickOrigin,
}

/// Everything that happened during one excitation cycle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CycleOutcome {
    /// Attempt in which the σ photon was emitted, if any.
    pub emission_attempt: Option<u32>,
    pub emission: Option<Emission>,
    /// Gates opened before the cycle ended.
    pub attempts_run: u32,
    /// All clicks of the gate that ended the cycle, in time order.
    pub clicks: Vec<Click>,
    pub photon_detected: bool,
    pub multi_photon: bool,
}

impl CycleOutcome {
    pub fn detected(&self) -> bool {
        !self.clicks.is_empty()
    }

    /// The first click, which triggers the atom measurement.
    pub fn herald(&self) -> Option<&Click> {
        self.clicks.first()
    }

    pub fn photon_click(&self) -> Option<&Click> {
        self.clicks.iter().find(|c| c.origin == ClickOrigin::Photon)
    }
}

/// Arrival time after the gate opens: Gaussian pulse jitter plus exponential
/// decay.
pub fn sample_emission_time<R: Rng + ?Sized>(rng: &mut R, config: &NodeConfig) -> f64 {
    let n = &config.node;
    let gauss = Normal::new(n.pulse_center_ns, config.emission_sigma_ns())
        .expect("validated config")
        .sample(rng);
    let decay = Exp::new(1.0 / n.tau_excited_ns)
        .expect("validated config")
        .sample(rng);
    gauss + decay
}

/// Fraction of emitted photons that arrive inside the gate.
pub fn gate_acceptance(config: &NodeConfig) -> f64 {
    let n = &config.node;
    let s = config.emission_sigma_ns();
    emg_cdf(n.gate_window_ns, n.pulse_center_ns, s, n.tau_excited_ns)
        - emg_cdf(0.0, n.pulse_center_ns, s, n.tau_excited_ns)
}

/// Poisson sample by inversion; meant for the tiny per-gate dark means.
pub(crate) fn small_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let mut u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut k = 0;
    while u > p && k < 1000 {
        u -= p;
        k += 1;
        p *= mean / k as f64;
    }
    k
}

/// Simulate one excitation cycle of up to `attempts_per_cycle` attempts.
///
/// Only an atom in `|f=1, m_f=0⟩` is excited. Each excitation decays by π
/// (back to the start state, photon not collected) or σ± with probability
/// 1/3 each; after a σ decay the remaining attempts cannot excite. The cycle
/// stops at the first gate containing any click. `assign_channel` receives
/// the multi-photon flag and decides which SPCM sees a detected photon.
pub fn sample_excitation_cycle<R, F>(
    state: &AtomState,
    config: &NodeConfig,
    rng: &mut R,
    mut assign_channel: F,
) -> CycleOutcome
where
    R: Rng + ?Sized,
    F: FnMut(&mut R, bool) -> Channel,
{
    let n = &config.node;
    let dark_mean = config.errors.dark_rate_hz * n.gate_window_ns * 1e-9;
    let eta = config.eta_chain();
    let mut ready = rng.random::<f64>() < state.population(Level::ClockLower);
    let mut out = CycleOutcome::default();

    for attempt in 1..=n.attempts_per_cycle {
        out.attempts_run = attempt;
        let mut clicks = Vec::new();
        if ready {
            let branch: f64 = rng.random();
            if branch >= 1.0 / 3.0 {
                ready = false;
                out.emission_attempt = Some(attempt);
                out.emission = Some(if branch < 2.0 / 3.0 {
                    Emission::SigmaPlus
                } else {
                    Emission::SigmaMinus
                });
                let survives = rng.random::<f64>() < eta;
                let t = sample_emission_time(rng, config);
                if survives && (0.0..=n.gate_window_ns).contains(&t) {
                    let multi = rng.random::<f64>() < config.errors.multi_photon_rate;
                    let channel = assign_channel(rng, multi);
                    out.photon_detected = true;
                    out.multi_photon = multi;
                    clicks.push(Click {
                        attempt,
                        channel,
                        time_ns: t,
                        origin: ClickOrigin::Photon,
                    });
                }
            }
        }
        for channel in [Channel::One, Channel::Two] {
            for _ in 0..small_poisson(rng, dark_mean) {
                clicks.push(Click {
                    attempt,
                    channel,
                    time_ns: rng.random::<f64>() * n.gate_window_ns,
                    origin: ClickOrigin::Dark,
                });
            }
        }
        if !clicks.is_empty() {
            clicks.sort_by(|a, b| a.time_ns.total_cmp(&b.time_ns));
            out.clicks = clicks;
            return out;
        }
    }
    out
}

/// Closed-form probability that a cycle produces at least one click.
pub fn per_cycle_detection_probability(config: &NodeConfig) -> f64 {
    let photon = config.errors.pump_fidelity
        * config.sigma_emission_probability()
        * config.eta_chain()
        * gate_acceptance(config);
    let no_dark = (-config.dark_clicks_per_gate() * config.node.attempts_per_cycle as f64).exp();
    1.0 - (1.0 - photon) * no_dark
}

/// Closed-form probability of a click in the first attempt of a cycle.
pub fn first_attempt_detection_probability(config: &NodeConfig) -> f64 {
    let photon =
        config.errors.pump_fidelity * (2.0 / 3.0) * config.eta_chain() * gate_acceptance(config);
    1.0 - (1.0 - photon) * (-config.dark_clicks_per_gate()).exp()
}

/// Joint state of the atom and an emitted σ photon after the fiber:
/// `(1-w)·ψ⁺ + w·I/4` with `w = multi_photon_rate`.
pub fn entangled_emission(config: &NodeConfig, fiber: &PolarizationOp) -> JointState {
    let w = config.errors.multi_photon_rate;
    emission_state(w, fiber)
}

pub(crate) fn emission_state(white_noise: f64, fiber: &PolarizationOp) -> JointState {
    let bell = bell_psi_plus();
    let mixed = bell.rho() * C64::new(1.0 - white_noise, 0.0)
        + nalgebra::Matrix4::identity() * C64::new(white_noise / 4.0, 0.0);
    JointState::new(mixed, bell.atom_basis(), bell.photon_basis())
        .expect("convex mixture of valid states")
        .apply_photon(fiber)
        .expect("fiber is unitary")
}
