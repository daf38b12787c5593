use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{EventLog, LogRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    pub sigma: f64,
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    pub gates: u64,
}

impl G2Estimate {
    /// `g² = P₁₂ / (P₁ P₂)` from per-gate counts. The uncertainty is the
    /// Poisson error of the coincidence count, taken as one when none were
    /// seen.
    pub fn from_counts(singles_1: u64, singles_2: u64, coincidences: u64, gates: u64) -> Result<Self> {
        if singles_1 == 0 || singles_2 == 0 {
            return Err(Error::Estimator(
                "g2 undefined: no singles on one of the channels".into(),
            ));
        }
        if gates == 0 {
            return Err(Error::Estimator("g2 undefined: no gates".into()));
        }
        let norm = gates as f64 / (singles_1 as f64 * singles_2 as f64);
        Ok(G2Estimate {
            g2: coincidences as f64 * norm,
            sigma: (coincidences as f64).sqrt().max(1.0) * norm,
            singles_1,
            singles_2,
            coincidences,
            gates,
        })
    }
}

/// Streaming g² estimator over click records. Clicks of one gate share a
/// shot id; only clicks with `t_ns <= window` count.
#[derive(Debug, Clone)]
pub struct G2Accumulator {
    window_ns: f64,
    gate_ns: Option<f64>,
    current: Option<u64>,
    seen: [bool; 2],
    singles: [u64; 2],
    coincidences: u64,
    gates: Option<u64>,
}

impl G2Accumulator {
    pub fn new(window_ns: f64) -> Result<Self> {
        if !(window_ns.is_finite() && window_ns > 0.0) {
            return Err(Error::InvalidArgument("g2 window must be > 0".into()));
        }
        Ok(G2Accumulator {
            window_ns,
            gate_ns: None,
            current: None,
            seen: [false; 2],
            singles: [0; 2],
            coincidences: 0,
            gates: None,
        })
    }

    fn flush(&mut self) {
        for k in 0..2 {
            if self.seen[k] {
                self.singles[k] += 1;
            }
        }
        if self.seen[0] && self.seen[1] {
            self.coincidences += 1;
        }
        self.seen = [false; 2];
    }

    pub fn add(&mut self, record: &LogRecord) -> Result<()> {
        match record {
            LogRecord::Header(h) => {
                if self.window_ns > h.config.node.gate_window_ns {
                    return Err(Error::InvalidArgument(format!(
                        "g2 window {} ns exceeds the {} ns gate",
                        self.window_ns, h.config.node.gate_window_ns
                    )));
                }
                self.gate_ns = Some(h.config.node.gate_window_ns);
            }
            LogRecord::Click(c) => {
                if self.current != Some(c.shot) {
                    self.flush();
                    self.current = Some(c.shot);
                }
                if (c.t_ns as f64) <= self.window_ns {
                    match c.channel {
                        1 => self.seen[0] = true,
                        2 => self.seen[1] = true,
                        other => {
                            return Err(Error::Estimator(format!("unknown SPCM channel {other}")))
                        }
                    }
                }
            }
            LogRecord::Summary(s) => self.gates = Some(self.gates.unwrap_or(0) + s.gates),
            LogRecord::Shot(_) => {}
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<G2Estimate> {
        self.flush();
        let gates = self
            .gates
            .ok_or_else(|| Error::Estimator("log has no summary record with the gate count".into()))?;
        G2Estimate::from_counts(self.singles[0], self.singles[1], self.coincidences, gates)
    }
}

pub fn estimate_g2(log: &EventLog, window_ns: f64) -> Result<G2Estimate> {
    let mut acc = G2Accumulator::new(window_ns)?;
    acc.add(&LogRecord::Header(log.header.clone()))?;
    for r in &log.records {
        acc.add(r)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::NodeConfig;
    use crate::sequence::{run_g2, Experiment, G2Source, SequenceSpec};

    #[test]
    fn independent_channels_give_one() {
        let e = G2Estimate::from_counts(1000, 1000, 100, 10_000).unwrap();
        assert!((e.g2 - 1.0).abs() < 1e-12);
        assert!((e.sigma - 0.1).abs() < 1e-12);
        let e = G2Estimate::from_counts(1000, 1000, 0, 10_000).unwrap();
        assert_eq!(e.g2, 0.0);
        assert!(G2Estimate::from_counts(0, 10, 0, 100).is_err());
    }

    #[test]
    fn poisson_source_is_coherent() {
        let spec = SequenceSpec::new(
            4,
            Experiment::G2 {
                cycles: 200_000,
                source: G2Source::Poisson { mean_per_gate: 0.1 },
            },
        );
        let log = run_g2(&spec, &NodeConfig::default()).unwrap();
        let e = estimate_g2(&log, 200.0).unwrap();
        assert!((e.g2 - 1.0).abs() < 3.0 * e.sigma, "{e:?}");
    }

    #[test]
    fn window_limits() {
        assert!(G2Accumulator::new(0.0).is_err());
        let spec = SequenceSpec::new(
            1,
            Experiment::G2 {
                cycles: 1000,
                source: G2Source::Atom,
            },
        );
        let log = run_g2(&spec, &NodeConfig::default()).unwrap();
        assert!(estimate_g2(&log, 300.0).is_err());
    }
}
