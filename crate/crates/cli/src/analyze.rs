use std::path::PathBuf;

use atomnode::estimators::{
    compose_error_budget, correct_for_readout, ErrorBudget, G2Accumulator, Histogram, JointCounts,
};
use atomnode::io::{open_log, ConfigFile, Report, Table};
use atomnode::quantum::{fidelity_lower_bound, MeasurementBasis};
use atomnode::sequence::LogRecord;
use atomnode::{Error, Result};
use clap::{Args, Subcommand};

use crate::{write_file, Outcome};

#[derive(Subcommand)]
pub enum Analyze {
    /// Second-order correlation at zero delay.
    G2 {
        log: PathBuf,
        /// Coincidence window from gate opening (ns).
        #[arg(long)]
        window: Option<f64>,
    },
    /// Lower bound on the atom-photon Bell fidelity from a z and an x log.
    Fidelity {
        z_log: PathBuf,
        x_log: PathBuf,
        /// Atom-measurement fidelity to correct for.
        #[arg(long)]
        correct_readout: Option<f64>,
    },
    /// Compose an infidelity budget; the reference budget when no file is
    /// given.
    Budget {
        /// JSON budget: {"entries": [{"name", "value", "uncertainty", "bound"}]}.
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct HistogramArgs {
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    bins: Option<usize>,
}

pub fn run(cmd: Analyze, cfg: &ConfigFile) -> Result<Outcome> {
    match cmd {
        Analyze::G2 { log, window } => g2(log, window.unwrap_or(cfg.analysis.g2_window_ns)),
        Analyze::Fidelity {
            z_log,
            x_log,
            correct_readout,
        } => fidelity(z_log, x_log, correct_readout),
        Analyze::Budget { input } => budget(input),
    }
}

fn finish(mut r: Report, title: &str) -> Outcome {
    let text = format!("{title}\n{}", r.table());
    r.set("status", "ok");
    Outcome::ok(text, r)
}

fn g2(path: PathBuf, window: f64) -> Result<Outcome> {
    let reader = open_log(&path)?;
    let mut acc = G2Accumulator::new(window)?;
    acc.add(&LogRecord::Header(reader.header().clone()))?;
    for rec in reader {
        acc.add(&rec?)?;
    }
    let e = acc.finish()?;
    let mut r = Report::new();
    r.set("command", "analyze g2");
    r.set("window_ns", window);
    r.set("gates", e.gates);
    r.set("singles_1", e.singles_1);
    r.set("singles_2", e.singles_2);
    r.set("coincidences", e.coincidences);
    r.set("g2", e.g2);
    r.set("g2_sigma", e.sigma);
    Ok(finish(r, "g2(0)"))
}

fn count(path: &PathBuf, basis: MeasurementBasis) -> Result<(JointCounts, String)> {
    let reader = open_log(path)?;
    let hash = reader.header().config_hash.clone();
    let mut acc = JointCounts::new(basis);
    for rec in reader {
        acc.add(&rec?);
    }
    if acc.counts().iter().sum::<u64>() == 0 {
        return Err(Error::Estimator(format!(
            "{} holds no valid {basis}-basis shots",
            path.display()
        )));
    }
    Ok((acc, hash))
}

fn fidelity(z_log: PathBuf, x_log: PathBuf, correct: Option<f64>) -> Result<Outcome> {
    let (z, hz) = count(&z_log, MeasurementBasis::Z)?;
    let (x, hx) = count(&x_log, MeasurementBasis::X)?;
    let (tz, tx) = (z.tomogram()?, x.tomogram()?);
    let (f, sigma) = fidelity_lower_bound(&tz, &tx)?;
    let mut r = Report::new();
    r.set("command", "analyze fidelity");
    r.set("same_config", hz == hx);
    r.set("z_valid_shots", z.counts().iter().sum::<u64>());
    r.set("x_valid_shots", x.counts().iter().sum::<u64>());
    r.set("z_rejected", z.rejected());
    r.set("x_rejected", x.rejected());
    for (name, t) in [("z", &tz), ("x", &tx)] {
        let p = t.populations();
        r.set(&format!("{name}.up_h"), p[0]);
        r.set(&format!("{name}.up_v"), p[1]);
        r.set(&format!("{name}.down_h"), p[2]);
        r.set(&format!("{name}.down_v"), p[3]);
    }
    r.set("f_low", f);
    r.set("f_low_sigma", sigma);
    if let Some(fm) = correct {
        let c = correct_for_readout(f, fm)?;
        r.set("atom_measurement_fidelity", fm);
        r.set("f_low_corrected", c);
        r.set("f_low_corrected_sigma", sigma / (2.0 * fm - 1.0));
    }
    Ok(finish(r, "atom-photon fidelity"))
}

fn budget(input: Option<PathBuf>) -> Result<Outcome> {
    let b = match input {
        Some(p) => {
            let text = std::fs::read_to_string(&p)?;
            let raw: ErrorBudget = serde_json::from_str(&text).map_err(|e| Error::MalformedTable {
                line: e.line(),
                message: e.to_string(),
            })?;
            ErrorBudget::new(raw.entries().to_vec())?
        }
        None => ErrorBudget::reference(),
    };
    let (total, sigma) = compose_error_budget(&b);
    let mut r = Report::new();
    r.set("command", "analyze budget");
    for (i, e) in b.entries().iter().enumerate() {
        r.set(&format!("entry{i}.name"), e.name.as_str());
        r.set(&format!("entry{i}.value"), e.value);
        r.set(&format!("entry{i}.uncertainty"), e.uncertainty);
        r.set(&format!("entry{i}.bound"), e.bound);
    }
    r.set("total", total);
    r.set("sigma", sigma);
    r.set("fidelity_implied", 1.0 - total);
    Ok(finish(r, "error budget"))
}

/// Arrival times of all clicks within the gate.
pub fn histogram(a: HistogramArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let reader = open_log(&a.log)?;
    let gate = reader.header().config.node.gate_window_ns;
    let bins = a.bins.unwrap_or(cfg.analysis.decay_bins);
    let mut times = Vec::new();
    for rec in reader {
        if let LogRecord::Click(c) = rec? {
            times.push(c.t_ns as f64);
        }
    }
    let h = Histogram::from_samples(times, 0.0, gate, bins)?;
    write_file(&a.out, &Table::from_histogram(&h).to_string())?;
    let mut r = Report::new();
    r.set("command", "histogram");
    r.set("clicks", h.total());
    r.set("bins", bins as u64);
    r.set("out", a.out.display().to_string());
    let text = format!("{} clicks in {bins} bins -> {}\n", h.total(), a.out.display());
    Ok(Outcome::ok(text, r))
}
