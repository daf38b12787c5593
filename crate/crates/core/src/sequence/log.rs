use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::SequenceSpec;
use crate::physics::{ClickOrigin, NodeConfig};
use crate::quantum::{MeasurementBasis, PolarizationOp};

pub const FORMAT_VERSION: u32 = 1;

/// Hex SHA-256 of the compact JSON form of a config.
pub fn config_hash(config: &NodeConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Atom result as read out after blow-away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomOutcome {
    /// Dark readout: the atom was in `f = 2` and was pushed out.
    UpPrime,
    /// Bright readout.
    Down,
}

impl AtomOutcome {
    /// Tomogram slot: 0 for ↑', 1 for ↓.
    pub fn slot(self) -> usize {
        match self {
            AtomOutcome::UpPrime => 0,
            AtomOutcome::Down => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub config: NodeConfig,
    pub spec: SequenceSpec,
    /// Fiber Jones matrix, row-major, as `[re, im]` pairs.
    pub fiber: [[f64; 2]; 4],
}

impl LogHeader {
    pub fn new(config: &NodeConfig, spec: &SequenceSpec, fiber: &PolarizationOp) -> Self {
        let m = fiber.matrix();
        let e = |r: usize, c: usize| [m[(r, c)].re, m[(r, c)].im];
        LogHeader {
            format_version: FORMAT_VERSION,
            seed: spec.seed,
            config_hash: config_hash(config),
            config: config.clone(),
            spec: spec.clone(),
            fiber: [e(0, 0), e(0, 1), e(1, 0), e(1, 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub shot: u64,
    pub cycle: u64,
    pub attempt: u32,
    /// SPCM number, 1 (H) or 2 (V).
    pub channel: u8,
    pub t_ns: i64,
    pub origin: ClickOrigin,
}

/// Outcome of one heralded entanglement shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub cycle: u64,
    pub basis: MeasurementBasis,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    /// Heralding SPCM, 1 (H) or 2 (V).
    pub photon: u8,
    pub atom: AtomOutcome,
    pub counts: [u64; 2],
    /// Atom still trapped when the readout started.
    pub trapped: bool,
    pub multi_photon: bool,
    pub herald: ClickOrigin,
}

impl ShotRecord {
    /// Counts toward tomography: trapped and not flagged.
    pub fn is_valid(&self) -> bool {
        self.trapped && !self.multi_photon
    }

    /// Joint index `2·atom + photon` in `(↑'H, ↑'V, ↓H, ↓V)` order.
    pub fn joint_index(&self) -> usize {
        2 * self.atom.slot() + usize::from(self.photon == 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryRecord {
    /// Atoms loaded (entanglement) or zero.
    pub trials: u64,
    pub cycles: u64,
    pub gates: u64,
    pub detected_cycles: u64,
    pub first_attempt_detections: u64,
    pub shots: u64,
    pub photon_clicks: u64,
    pub dark_clicks: u64,
}

/// One line of a log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Click(ClickRecord),
    Shot(ShotRecord),
    Summary(SummaryRecord),
}

/// Header plus the records that follow it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

impl EventLog {
    pub fn shots(&self) -> impl Iterator<Item = &ShotRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Shot(s) => Some(s),
            _ => None,
        })
    }

    pub fn clicks(&self) -> impl Iterator<Item = &ClickRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Click(c) => Some(c),
            _ => None,
        })
    }

    pub fn summary(&self) -> Option<&SummaryRecord> {
        self.records.iter().rev().find_map(|r| match r {
            LogRecord::Summary(s) => Some(s),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config() {
        let a = NodeConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.errors.dark_rate_hz = 51.0;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn record_wire_form() {
        let r = LogRecord::Click(ClickRecord {
            shot: 1,
            cycle: 2,
            attempt: 3,
            channel: 2,
            t_ns: 57,
            origin: ClickOrigin::Photon,
        });
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"click","shot":1,"cycle":2,"attempt":3,"channel":2,"t_ns":57,"origin":"photon"}"#
        );
        assert_eq!(serde_json::from_str::<LogRecord>(&s).unwrap(), r);
    }
}
