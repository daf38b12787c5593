//! Physical parameters of the node.
//!
//! Field names carry their unit as a suffix. Defaults are the measured values
//! of the reference apparatus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timings, efficiencies, rates and coherence times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeParams {
    pub tau_excited_ns: f64,
    pub pulse_fwhm_ns: f64,
    /// Excitation pulse centre relative to gate opening.
    pub pulse_center_ns: f64,
    pub gate_window_ns: f64,
    pub trap_off_window_ns: f64,
    pub attempts_per_cycle: u32,
    pub attempt_spacing_us: f64,
    /// Collection efficiency into the single-mode fiber.
    pub eta_fiber: f64,
    pub optics_loss: f64,
    pub spcm_qe: f64,
    /// Raman background per SPCM while the trap light is on.
    pub raman_bg_rate_hz: f64,
    pub readout_exposure_ms: f64,
    /// Mean readout counts per SPCM with an atom.
    pub mu_atom_per_spcm: f64,
    pub mu_bg_per_spcm: f64,
    /// Whether `mu_atom_per_spcm` already contains the background counts.
    pub atom_counts_include_bg: bool,
    pub cycles_per_atom_mean: f64,
    pub t2_bare_us: f64,
    pub t2_magic_us: f64,
    pub t2_clock_us: f64,
    pub map_pulse_len_us: f64,
    pub branch_delay_us: f64,
    pub two_photon_rabi_khz: f64,
    pub pi_half_len_us: f64,
    pub clock_rabi_khz: f64,
    pub bias_field_gauss: f64,
    pub trap_lifetime_s: f64,
    pub loading_probability: f64,
}

impl Default for NodeParams {
    fn default() -> Self {
        NodeParams {
            tau_excited_ns: 26.4,
            pulse_fwhm_ns: 18.7,
            pulse_center_ns: 40.0,
            gate_window_ns: 200.0,
            trap_off_window_ns: 250.0,
            attempts_per_cycle: 5,
            attempt_spacing_us: 20.0,
            eta_fiber: 0.066,
            optics_loss: 0.15,
            spcm_qe: 0.65,
            raman_bg_rate_hz: 2000.0,
            readout_exposure_ms: 20.0,
            mu_atom_per_spcm: 100.0,
            mu_bg_per_spcm: 40.0,
            atom_counts_include_bg: true,
            cycles_per_atom_mean: 80.0,
            t2_bare_us: 110.0,
            t2_magic_us: 3200.0,
            t2_clock_us: 3320.0,
            map_pulse_len_us: 5.3,
            branch_delay_us: 5.0,
            two_photon_rabi_khz: 2.87,
            pi_half_len_us: 87.0,
            clock_rabi_khz: 118.0,
            bias_field_gauss: 3.23,
            trap_lifetime_s: 2.0,
            loading_probability: 0.95,
        }
    }
}

/// How a failed mapping pulse leaves the atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapErrorModel {
    /// The pulse either transfers fully or not at all, shot by shot.
    #[default]
    Incoherent,
    /// A fixed resonance offset makes every pulse a detuned coherent rotation.
    Detuning,
}

/// Error knobs. [`ErrorModel::zeroed`] switches every one of them off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorModel {
    /// Dark counts per SPCM.
    pub dark_rate_hz: f64,
    pub pump_fidelity: f64,
    /// Transfer fidelity of the ↑ → ↑' mapping pulse.
    pub map_fidelity_m1: f64,
    pub map_error_model: MapErrorModel,
    pub blowaway_fidelity: f64,
    pub fluor_readout_fidelity: f64,
    /// Population transfer of a two-photon π pulse; sets the pulse-area error.
    pub rotation_pi_fidelity: f64,
    /// Fraction of heralded cycles corrupted by excitation-polarization error.
    pub multi_photon_rate: f64,
    /// Dephase the bare qubit between herald and mapping.
    pub atom_dephasing: bool,
    pub qwp_error_deg: f64,
    pub hwp_error_deg: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            dark_rate_hz: 50.0,
            pump_fidelity: 0.987,
            map_fidelity_m1: 0.96,
            map_error_model: MapErrorModel::Incoherent,
            blowaway_fidelity: 0.992,
            fluor_readout_fidelity: 0.996,
            rotation_pi_fidelity: 0.96,
            multi_photon_rate: 0.005,
            atom_dephasing: true,
            qwp_error_deg: 0.0,
            hwp_error_deg: 0.0,
        }
    }
}

impl ErrorModel {
    pub fn zeroed() -> Self {
        ErrorModel {
            dark_rate_hz: 0.0,
            pump_fidelity: 1.0,
            map_fidelity_m1: 1.0,
            map_error_model: MapErrorModel::Incoherent,
            blowaway_fidelity: 1.0,
            fluor_readout_fidelity: 1.0,
            rotation_pi_fidelity: 1.0,
            multi_photon_rate: 0.0,
            atom_dephasing: false,
            qwp_error_deg: 0.0,
            hwp_error_deg: 0.0,
        }
    }
}

/// Complete description of the node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    #[serde(default)]
    pub node: NodeParams,
    #[serde(default)]
    pub errors: ErrorModel,
}

impl NodeConfig {
    /// Default node with every error knob switched off.
    pub fn ideal() -> Self {
        NodeConfig {
            node: NodeParams::default(),
            errors: ErrorModel::zeroed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.node;
        let e = &self.errors;
        let positive = [
            ("tau_excited_ns", n.tau_excited_ns),
            ("pulse_fwhm_ns", n.pulse_fwhm_ns),
            ("gate_window_ns", n.gate_window_ns),
            ("trap_off_window_ns", n.trap_off_window_ns),
            ("attempt_spacing_us", n.attempt_spacing_us),
            ("raman_bg_rate_hz", n.raman_bg_rate_hz),
            ("readout_exposure_ms", n.readout_exposure_ms),
            ("mu_atom_per_spcm", n.mu_atom_per_spcm),
            ("mu_bg_per_spcm", n.mu_bg_per_spcm),
            ("cycles_per_atom_mean", n.cycles_per_atom_mean),
            ("t2_bare_us", n.t2_bare_us),
            ("t2_magic_us", n.t2_magic_us),
            ("t2_clock_us", n.t2_clock_us),
            ("map_pulse_len_us", n.map_pulse_len_us),
            ("branch_delay_us", n.branch_delay_us),
            ("two_photon_rabi_khz", n.two_photon_rabi_khz),
            ("pi_half_len_us", n.pi_half_len_us),
            ("clock_rabi_khz", n.clock_rabi_khz),
            ("bias_field_gauss", n.bias_field_gauss),
            ("trap_lifetime_s", n.trap_lifetime_s),
            ("eta_fiber", n.eta_fiber),
            ("spcm_qe", n.spcm_qe),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0 (got {v})")));
            }
        }
        if n.attempts_per_cycle == 0 {
            return Err(Error::InvalidConfig("attempts_per_cycle must be > 0".into()));
        }
        if n.cycles_per_atom_mean < 1.0 {
            return Err(Error::InvalidConfig("cycles_per_atom_mean must be >= 1".into()));
        }
        if !n.pulse_center_ns.is_finite() {
            return Err(Error::InvalidConfig("pulse_center_ns must be finite".into()));
        }
        let unit = [
            ("eta_fiber", n.eta_fiber),
            ("optics_loss", n.optics_loss),
            ("spcm_qe", n.spcm_qe),
            ("loading_probability", n.loading_probability),
            ("pump_fidelity", e.pump_fidelity),
            ("map_fidelity_m1", e.map_fidelity_m1),
            ("blowaway_fidelity", e.blowaway_fidelity),
            ("fluor_readout_fidelity", e.fluor_readout_fidelity),
            ("rotation_pi_fidelity", e.rotation_pi_fidelity),
            ("multi_photon_rate", e.multi_photon_rate),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1] (got {v})")));
            }
        }
        if e.fluor_readout_fidelity <= 0.0 {
            return Err(Error::InvalidConfig("fluor_readout_fidelity must be > 0".into()));
        }
        if !(e.dark_rate_hz.is_finite() && e.dark_rate_hz >= 0.0) {
            return Err(Error::InvalidConfig("dark_rate_hz must be >= 0".into()));
        }
        if !(e.qwp_error_deg.is_finite() && e.hwp_error_deg.is_finite()) {
            return Err(Error::InvalidConfig("waveplate errors must be finite".into()));
        }
        Ok(())
    }

    /// Survival probability of an emitted σ photon through fiber, optics and SPCM.
    pub fn eta_chain(&self) -> f64 {
        self.node.eta_fiber * (1.0 - self.node.optics_loss) * self.node.spcm_qe
    }

    /// `1 - (1/3)^N`: chance of at least one σ decay in a cycle.
    pub fn sigma_emission_probability(&self) -> f64 {
        1.0 - (1.0f64 / 3.0).powi(self.node.attempts_per_cycle as i32)
    }

    /// The efficiency-chain closed form `(1-(1/3)^N)·η_fiber·(1-loss)·QE`.
    pub fn nominal_detection_probability(&self) -> f64 {
        self.sigma_emission_probability() * self.eta_chain()
    }

    pub fn emission_sigma_ns(&self) -> f64 {
        self.node.pulse_fwhm_ns / FWHM_PER_SIGMA
    }

    /// Mean dark clicks per gate summed over both SPCMs.
    pub fn dark_clicks_per_gate(&self) -> f64 {
        2.0 * self.errors.dark_rate_hz * self.node.gate_window_ns * 1e-9
    }

    /// Free precession of the bare qubit before mapping: branch delay plus half
    /// the mapping pulse.
    pub fn dephasing_window_us(&self) -> f64 {
        self.node.branch_delay_us + 0.5 * self.node.map_pulse_len_us
    }

    /// Rabi frequency of the ↑ ↔ ↑' microwave transition implied by the π pulse length.
    pub fn map_rabi_khz(&self) -> f64 {
        1e3 / (2.0 * self.node.map_pulse_len_us)
    }

    /// Relative pulse-area error ε with `sin²(π(1+ε)/2) = rotation_pi_fidelity`.
    pub fn rotation_area_error(&self) -> f64 {
        2.0 / std::f64::consts::PI * self.errors.rotation_pi_fidelity.sqrt().acos()
    }

    /// Probability that a trapped atom is lost per excitation cycle.
    pub fn cycle_loss_probability(&self) -> f64 {
        1.0 / self.node.cycles_per_atom_mean
    }

    /// Mean summed-SPCM readout counts with and without an atom.
    pub fn readout_means(&self) -> (f64, f64) {
        let n = &self.node;
        let atom = if n.atom_counts_include_bg {
            n.mu_atom_per_spcm
        } else {
            n.mu_atom_per_spcm + n.mu_bg_per_spcm
        };
        (2.0 * atom, 2.0 * n.mu_bg_per_spcm)
    }

    /// Time over which trap loss corrupts a fluorescence readout, chosen so the
    /// exponential survival reproduces `fluor_readout_fidelity`.
    pub fn readout_loss_window_s(&self) -> f64 {
        -self.node.trap_lifetime_s * self.errors.fluor_readout_fidelity.ln()
    }
}

/// `FWHM = 2√(2 ln 2)·σ` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        NodeConfig::default().validate().unwrap();
        NodeConfig::ideal().validate().unwrap();
    }

    #[test]
    fn derived_quantities() {
        let cfg = NodeConfig::default();
        assert!((cfg.eta_chain() - 0.066 * 0.85 * 0.65).abs() < 1e-15);
        assert!((cfg.sigma_emission_probability() - 0.995_884_773_662_551).abs() < 1e-12);
        assert!((cfg.nominal_detection_probability() - 0.036315).abs() < 1e-5);
        assert!((cfg.dephasing_window_us() - 7.65).abs() < 1e-12);
        assert!((cfg.dark_clicks_per_gate() - 2e-5).abs() < 1e-18);
        // sin²(π(1+ε)/2) = 0.96
        let eps = cfg.rotation_area_error();
        let transfer = (std::f64::consts::FRAC_PI_2 * (1.0 + eps)).sin().powi(2);
        assert!((transfer - 0.96).abs() < 1e-12);
        assert!((cfg.map_rabi_khz() - 94.339_622_641_509_43).abs() < 1e-9);
        let window = cfg.readout_loss_window_s();
        assert!(((-window / 2.0).exp() - 0.996).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let mut cfg = NodeConfig::default();
        cfg.errors.pump_fidelity = 1.2;
        assert!(cfg.validate().is_err());
        let mut cfg = NodeConfig::default();
        cfg.node.gate_window_ns = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = NodeConfig::default();
        cfg.node.attempts_per_cycle = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = NodeConfig::default();
        cfg.errors.dark_rate_hz = -1.0;
        assert!(cfg.validate().is_err());
    }
}
