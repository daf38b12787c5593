//! Hanbury Brown–Twiss runs.

use rand::Rng;
use rayon::prelude::*;

use super::entanglement::draw_fiber;
use super::log::{ClickRecord, EventLog, LogHeader, LogRecord, SummaryRecord};
use super::rng::{stream, Domain};
use super::spec::{Experiment, G2Source, SequenceSpec};
use crate::error::{Error, Result};
use crate::physics::{
    optical_pump, sample_excitation_cycle, small_poisson, Channel, Click, ClickOrigin, NodeConfig,
};

const CHUNK: u64 = 1 << 16;

struct GateClicks {
    attempts_run: u32,
    clicks: Vec<Click>,
}

fn atom_cycle<R: Rng>(config: &NodeConfig, rng: &mut R) -> GateClicks {
    let pumped = optical_pump(rng, config);
    let out = sample_excitation_cycle(&pumped, config, rng, |r, _| {
        if r.random::<bool>() {
            Channel::One
        } else {
            Channel::Two
        }
    });
    GateClicks {
        attempts_run: out.attempts_run,
        clicks: out.clicks,
    }
}

fn poisson_gate<R: Rng>(mean: f64, gate_ns: f64, rng: &mut R) -> GateClicks {
    let mut clicks = Vec::new();
    for channel in [Channel::One, Channel::Two] {
        for _ in 0..small_poisson(rng, mean) {
            clicks.push(Click {
                attempt: 1,
                channel,
                time_ns: rng.random::<f64>() * gate_ns,
                origin: ClickOrigin::Photon,
            });
        }
    }
    clicks.sort_by(|a, b| a.time_ns.total_cmp(&b.time_ns));
    GateClicks {
        attempts_run: 1,
        clicks,
    }
}

/// Excitation cycles with a 50:50 splitter in front of the SPCMs. Every gate
/// with clicks becomes one shot in the log.
pub fn run_g2(spec: &SequenceSpec, config: &NodeConfig) -> Result<EventLog> {
    config.validate()?;
    spec.validate()?;
    let Experiment::G2 { cycles, source } = &spec.experiment else {
        return Err(Error::InvalidArgument("spec is not a g2 run".into()));
    };
    let header = LogHeader::new(config, spec, &draw_fiber(spec.seed, spec.fiber));
    let gate_ns = config.node.gate_window_ns;
    let mut records = Vec::new();
    let mut summary = SummaryRecord::default();
    let mut start = 0u64;
    while start < *cycles {
        let end = (start + CHUNK).min(*cycles);
        let gates: Vec<GateClicks> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(spec.seed, Domain::Cycle, i);
                match *source {
                    G2Source::Atom => atom_cycle(config, &mut rng),
                    G2Source::Poisson { mean_per_gate } => poisson_gate(mean_per_gate, gate_ns, &mut rng),
                }
            })
            .collect();
        for (offset, g) in gates.into_iter().enumerate() {
            let cycle = start + offset as u64;
            summary.cycles += 1;
            summary.gates += u64::from(g.attempts_run);
            if g.clicks.is_empty() {
                continue;
            }
            summary.detected_cycles += 1;
            if g.attempts_run == 1 {
                summary.first_attempt_detections += 1;
            }
            for c in &g.clicks {
                match c.origin {
                    ClickOrigin::Photon => summary.photon_clicks += 1,
                    ClickOrigin::Dark => summary.dark_clicks += 1,
                }
                records.push(LogRecord::Click(ClickRecord {
                    shot: summary.shots,
                    cycle,
                    attempt: c.attempt,
                    channel: c.channel.number(),
                    t_ns: c.time_ns.round() as i64,
                    origin: c.origin,
                }));
            }
            summary.shots += 1;
        }
        start = end;
    }
    records.push(LogRecord::Summary(summary));
    Ok(EventLog { header, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64, cycles: u64, source: G2Source) -> SequenceSpec {
        SequenceSpec::new(seed, Experiment::G2 { cycles, source })
    }

    #[test]
    fn no_dark_counts_no_coincidences() {
        let mut cfg = NodeConfig::default();
        cfg.errors.dark_rate_hz = 0.0;
        let log = run_g2(&spec(1, 200_000, G2Source::Atom), &cfg).unwrap();
        let mut last = u64::MAX;
        for c in log.clicks() {
            assert_ne!(c.shot, last, "two clicks in one gate");
            last = c.shot;
        }
        assert!(log.summary().unwrap().detected_cycles > 5000);
    }

    #[test]
    fn summary_consistency() {
        let log = run_g2(&spec(2, 100_000, G2Source::Atom), &NodeConfig::default()).unwrap();
        let s = log.summary().unwrap();
        assert_eq!(s.cycles, 100_000);
        assert_eq!(s.photon_clicks + s.dark_clicks, log.clicks().count() as u64);
        assert!(s.gates <= 5 * s.cycles && s.gates >= s.cycles);
        assert!(log.clicks().all(|c| (0..=200).contains(&c.t_ns)));
    }

    #[test]
    fn deterministic_across_chunks() {
        let cfg = NodeConfig::default();
        let a = run_g2(&spec(3, 70_000, G2Source::Atom), &cfg).unwrap();
        let b = run_g2(&spec(3, 70_000, G2Source::Atom), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
