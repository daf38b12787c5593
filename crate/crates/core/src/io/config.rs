use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{ErrorModel, NodeConfig, NodeParams};
use crate::sequence::FiberModel;

/// Run statistics used by the command-line battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub seed: u64,
    pub fiber: FiberModel,
    /// Heralded shots per basis in an entanglement run.
    pub shots: u64,
    pub g2_cycles: u64,
    pub shots_per_point: u64,
    pub scan_points: usize,
    pub readout_shots: u64,
    pub readout_atom_fraction: f64,
}

impl Default for SequenceSection {
    fn default() -> Self {
        SequenceSection {
            seed: 1,
            fiber: FiberModel::Haar,
            shots: 150,
            g2_cycles: 3_000_000,
            shots_per_point: 200,
            scan_points: 61,
            readout_shots: 10_000,
            readout_atom_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Coincidence window from gate opening.
    pub g2_window_ns: f64,
    /// Atom-measurement fidelity used for the corrected Bell fidelity.
    pub atom_measurement_fidelity: f64,
    pub decay_bins: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            g2_window_ns: 200.0,
            atom_measurement_fidelity: 0.95,
            decay_bins: 100,
        }
    }
}

/// The on-disk configuration: node parameters, error knobs, run statistics
/// and analysis settings. Missing keys take their defaults, unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub node: NodeParams,
    pub sequence: SequenceSection,
    pub errors: ErrorModel,
    pub analysis: AnalysisSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((0, 0));
            Error::ConfigParse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn node_config(&self) -> NodeConfig {
        NodeConfig {
            node: self.node.clone(),
            errors: self.errors.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.node_config().validate()?;
        let s = &self.sequence;
        if s.shots == 0 || s.g2_cycles == 0 || s.shots_per_point == 0 || s.readout_shots == 0 {
            return Err(Error::InvalidConfig("sequence statistics must be > 0".into()));
        }
        if s.scan_points < 3 {
            return Err(Error::InvalidConfig("scan_points must be >= 3".into()));
        }
        if !(0.0..=1.0).contains(&s.readout_atom_fraction) {
            return Err(Error::InvalidConfig("readout_atom_fraction must lie in [0, 1]".into()));
        }
        let a = &self.analysis;
        if !(a.g2_window_ns > 0.0 && a.g2_window_ns <= self.node.gate_window_ns) {
            return Err(Error::InvalidConfig(
                "g2_window_ns must lie in (0, gate_window_ns]".into(),
            ));
        }
        if !(a.atom_measurement_fidelity > 0.5 && a.atom_measurement_fidelity <= 1.0) {
            return Err(Error::InvalidConfig(
                "atom_measurement_fidelity must lie in (0.5, 1]".into(),
            ));
        }
        if a.decay_bins < 10 {
            return Err(Error::InvalidConfig("decay_bins must be >= 10".into()));
        }
        Ok(())
    }

    /// The default configuration with every key documented in a comment.
    pub fn reference_document() -> String {
        let mut out = String::from(
            "# Reference configuration. Every key is optional; the values below are\n\
             # the defaults.\n",
        );
        let text = ConfigFile::default().to_toml();
        let mut section = "";
        for line in text.lines() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name;
                out.push('\n');
            } else if let Some((key, _)) = t.split_once(" = ") {
                if let Some((_, _, doc)) = DOCS.iter().find(|(s, k, _)| *s == section && *k == key) {
                    out.push_str("# ");
                    out.push_str(doc);
                    out.push('\n');
                }
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

const DOCS: &[(&str, &str, &str)] = &[
    ("node", "tau_excited_ns", "Excited-state lifetime (ns)."),
    ("node", "pulse_fwhm_ns", "Excitation pulse FWHM (ns)."),
    ("node", "pulse_center_ns", "Excitation pulse centre after gate opening (ns)."),
    ("node", "gate_window_ns", "SPCM gate length (ns)."),
    ("node", "trap_off_window_ns", "Trap-off time per excitation attempt (ns)."),
    ("node", "attempts_per_cycle", "Excitation attempts per pump-and-excite cycle."),
    ("node", "attempt_spacing_us", "Spacing between attempts (us)."),
    ("node", "eta_fiber", "Collection efficiency into the single-mode fiber."),
    ("node", "optics_loss", "Loss in the detection optics."),
    ("node", "spcm_qe", "SPCM quantum efficiency."),
    ("node", "raman_bg_rate_hz", "Raman background per SPCM with the trap on (Hz)."),
    ("node", "readout_exposure_ms", "Fluorescence readout exposure (ms)."),
    ("node", "mu_atom_per_spcm", "Mean readout counts per SPCM with an atom."),
    ("node", "mu_bg_per_spcm", "Mean readout counts per SPCM without an atom."),
    ("node", "atom_counts_include_bg", "Whether mu_atom_per_spcm already includes the background."),
    ("node", "cycles_per_atom_mean", "Mean excitation cycles before an atom is lost."),
    ("node", "t2_bare_us", "T2* of the bare qubit (us)."),
    ("node", "t2_magic_us", "T2* of the magic-field qubit (us)."),
    ("node", "t2_clock_us", "T2* of the clock qubit (us)."),
    ("node", "map_pulse_len_us", "Mapping microwave pi pulse length (us)."),
    ("node", "branch_delay_us", "Delay from herald to the mapping pulse (us)."),
    ("node", "two_photon_rabi_khz", "Two-photon Rabi frequency (kHz)."),
    ("node", "pi_half_len_us", "Two-photon pi/2 pulse length (us)."),
    ("node", "clock_rabi_khz", "Clock-transition Rabi frequency (kHz)."),
    ("node", "bias_field_gauss", "Bias magnetic field (G)."),
    ("node", "trap_lifetime_s", "Trap lifetime (s)."),
    ("node", "loading_probability", "Probability that a loading attempt yields an atom."),
    ("sequence", "seed", "Master seed; --seed on the command line overrides it."),
    ("sequence", "fiber", "Fiber polarization model: \"haar\" or \"identity\"."),
    ("sequence", "shots", "Heralded shots per basis in an entanglement run."),
    ("sequence", "g2_cycles", "Excitation cycles in a g2 run."),
    ("sequence", "shots_per_point", "Shots per point of a Rabi or Ramsey scan."),
    ("sequence", "scan_points", "Points in a Rabi or Ramsey scan."),
    ("sequence", "readout_shots", "Shots in a readout histogram run."),
    ("sequence", "readout_atom_fraction", "Fraction of readout shots with an atom."),
    ("errors", "dark_rate_hz", "Dark-count rate per SPCM (Hz)."),
    ("errors", "pump_fidelity", "Optical pumping fidelity into the initial state."),
    ("errors", "map_fidelity_m1", "Transfer fidelity of the mapping pulse."),
    ("errors", "map_error_model", "Mapping failure model: \"incoherent\" or \"detuning\"."),
    ("errors", "blowaway_fidelity", "Fidelity of the state-selective blow-away."),
    ("errors", "fluor_readout_fidelity", "Fluorescence readout fidelity including atom loss."),
    ("errors", "rotation_pi_fidelity", "Population transfer of a two-photon pi pulse."),
    ("errors", "multi_photon_rate", "Fraction of heralds corrupted by excitation-polarization error."),
    ("errors", "atom_dephasing", "Dephase the bare qubit before mapping."),
    ("errors", "qwp_error_deg", "Quarter-wave plate angle error (deg)."),
    ("errors", "hwp_error_deg", "Half-wave plate angle error (deg)."),
    ("analysis", "g2_window_ns", "Coincidence window from gate opening (ns)."),
    ("analysis", "atom_measurement_fidelity", "Atom-measurement fidelity for the corrected Bell fidelity."),
    ("analysis", "decay_bins", "Bins of the photon arrival-time histogram."),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(ConfigFile::parse("").unwrap(), ConfigFile::default());
    }

    #[test]
    fn round_trip() {
        let mut c = ConfigFile::default();
        c.node.eta_fiber = 0.0713;
        c.errors = ErrorModel::zeroed();
        c.sequence.fiber = FiberModel::Identity;
        let text = c.to_toml();
        let back = ConfigFile::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = ConfigFile::parse("[node]\ntau_excited_ns = 26.4\nbogus = 1\n").unwrap_err();
        match err {
            Error::ConfigParse { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        let err = ConfigFile::parse("[errors]\ndark_rate_hz = \"x\"\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let err = ConfigFile::parse("[errors]\npump_fidelity = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert!(ConfigFile::parse("[analysis]\ng2_window_ns = 500.0\n").is_err());
    }

    #[test]
    fn reference_documents_every_key() {
        let doc = ConfigFile::reference_document();
        assert_eq!(ConfigFile::parse(&doc).unwrap(), ConfigFile::default());
        let lines: Vec<&str> = doc.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.contains(" = ") && !line.starts_with('#') {
                assert!(lines[i - 1].starts_with("# "), "undocumented key: {line}");
            }
        }
        let keys = lines.iter().filter(|l| l.contains(" = ") && !l.starts_with('#')).count();
        assert_eq!(keys, DOCS.len());
    }
}
