use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use atomnode::io::{write_log_to, ConfigFile, Report, Table};
use atomnode::physics::{per_cycle_detection_probability, NodeConfig};
use atomnode::quantum::MeasurementBasis;
use atomnode::sequence::{
    linspace, rabi_grid, ramsey_grid, run_entanglement, run_g2, run_rabi, run_ramsey,
    run_readout_histogram, scan_waveplates, EventLog, Experiment, G2Source, ScanSpec,
    SequenceSpec, Transition, Waveplates,
};
use atomnode::{Error, Result};
use clap::{Args, Subcommand, ValueEnum};

use crate::{write_file, Outcome};

#[derive(Subcommand)]
pub enum Simulate {
    /// Heralded atom-photon entanglement in one basis.
    Entanglement(EntanglementArgs),
    /// Photon statistics with a 50:50 splitter (HBT).
    G2(G2Args),
    /// Rabi oscillation scan.
    Rabi(ScanArgs),
    /// Ramsey fringe scan.
    Ramsey(RamseyArgs),
    /// Fluorescence readout count histogram.
    Readout(ReadoutArgs),
    /// Joint outcomes versus HWP angle at a fixed QWP angle.
    Parity(ParityArgs),
}

#[derive(Args)]
pub struct Common {
    /// Overrides the seed of the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Basis {
    Z,
    X,
}

impl From<Basis> for MeasurementBasis {
    fn from(b: Basis) -> Self {
        match b {
            Basis::Z => MeasurementBasis::Z,
            Basis::X => MeasurementBasis::X,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TransitionArg {
    Clock,
    Bare,
    Magic,
}

impl From<TransitionArg> for Transition {
    fn from(t: TransitionArg) -> Self {
        match t {
            TransitionArg::Clock => Transition::Clock,
            TransitionArg::Bare => Transition::Bare,
            TransitionArg::Magic => Transition::Magic,
        }
    }
}

#[derive(Args)]
pub struct EntanglementArgs {
    #[command(flatten)]
    common: Common,
    /// Heralded shots to record.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum, default_value = "z")]
    basis: Basis,
    /// QWP angle in degrees; needs --beta. Optimal angles are used otherwise.
    #[arg(long, requires = "beta")]
    alpha: Option<f64>,
    /// HWP angle in degrees.
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
}

#[derive(Args)]
pub struct G2Args {
    #[command(flatten)]
    common: Common,
    /// Excitation cycles.
    #[arg(long, alias = "shots")]
    cycles: Option<u64>,
    /// Replace the atom by two independent Poisson sources with this mean
    /// click number per gate.
    #[arg(long)]
    poisson: Option<f64>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "magic")]
    transition: TransitionArg,
    /// Shots per point.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
pub struct RamseyArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Detuning in kHz; by default two fringes per coherence time.
    #[arg(long)]
    detuning: Option<f64>,
}

#[derive(Args)]
pub struct ReadoutArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    atom_fraction: Option<f64>,
    /// Leave out atom loss during the exposure.
    #[arg(long)]
    no_loss: bool,
}

#[derive(Args)]
pub struct ParityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "z")]
    basis: Basis,
    /// Valid shots per HWP angle.
    #[arg(long)]
    shots: Option<u64>,
    /// QWP angle in degrees; the optimal one when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// HWP angles from 0 to 90 degrees.
    #[arg(long, default_value_t = 19)]
    points: usize,
}

fn save_log(path: &Path, log: &EventLog) -> Result<u64> {
    let file = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", path.display()),
        ))
    })?;
    write_log_to(BufWriter::new(file), log)?;
    Ok(log.records.len() as u64 + 1)
}

fn base_report(kind: &str, seed: u64, out: &Path) -> Report {
    let mut r = Report::new();
    r.set("command", format!("simulate {kind}"));
    r.set("seed", seed);
    r.set("out", out.display().to_string());
    r
}

pub fn run(cmd: Simulate, cfg: ConfigFile) -> Result<Outcome> {
    let node = cfg.node_config();
    match cmd {
        Simulate::Entanglement(a) => entanglement(a, &cfg, &node),
        Simulate::G2(a) => g2(a, &cfg, &node),
        Simulate::Rabi(a) => scan("rabi", a, None, &cfg, &node),
        Simulate::Ramsey(a) => scan("ramsey", a.scan, Some(a.detuning), &cfg, &node),
        Simulate::Readout(a) => readout(a, &cfg, &node),
        Simulate::Parity(a) => parity(a, &cfg, &node),
    }
}

fn entanglement(a: EntanglementArgs, cfg: &ConfigFile, node: &NodeConfig) -> Result<Outcome> {
    let seed = a.common.seed.unwrap_or(cfg.sequence.seed);
    let waveplates = match (a.alpha, a.beta) {
        (Some(alpha_deg), Some(beta_deg)) => Waveplates::Fixed { alpha_deg, beta_deg },
        _ => Waveplates::Optimal,
    };
    let spec = SequenceSpec::new(
        seed,
        Experiment::Entanglement {
            basis: a.basis.into(),
            shots: a.shots.unwrap_or(cfg.sequence.shots),
            waveplates,
        },
    )
    .with_fiber(cfg.sequence.fiber);
    let log = run_entanglement(&spec, node)?;
    let lines = save_log(&a.common.out, &log)?;
    let s = log.summary().copied().unwrap_or_default();
    let valid = log.shots().filter(|s| s.is_valid()).count() as u64;
    let rate = s.detected_cycles as f64 / s.cycles.max(1) as f64;
    let mut r = base_report("entanglement", seed, &a.common.out);
    r.set("basis", MeasurementBasis::from(a.basis).to_string());
    r.set("lines", lines);
    r.set("shots", s.shots);
    r.set("valid_shots", valid);
    r.set("trials", s.trials);
    r.set("cycles", s.cycles);
    r.set("detection_per_cycle", rate);
    let text = format!(
        "{} shots ({valid} valid) in {} cycles, {:.4} detections per cycle -> {}\n",
        s.shots,
        s.cycles,
        rate,
        a.common.out.display()
    );
    Ok(Outcome::ok(text, r))
}

fn g2(a: G2Args, cfg: &ConfigFile, node: &NodeConfig) -> Result<Outcome> {
    let seed = a.common.seed.unwrap_or(cfg.sequence.seed);
    let source = match a.poisson {
        Some(mean_per_gate) => G2Source::Poisson { mean_per_gate },
        None => G2Source::Atom,
    };
    let spec = SequenceSpec::new(
        seed,
        Experiment::G2 {
            cycles: a.cycles.unwrap_or(cfg.sequence.g2_cycles),
            source,
        },
    )
    .with_fiber(cfg.sequence.fiber);
    let log = run_g2(&spec, node)?;
    let lines = save_log(&a.common.out, &log)?;
    let s = log.summary().copied().unwrap_or_default();
    let cycles = s.cycles.max(1) as f64;
    let rate = s.detected_cycles as f64 / cycles;
    let mut r = base_report("g2", seed, &a.common.out);
    r.set("lines", lines);
    r.set("cycles", s.cycles);
    r.set("gates", s.gates);
    r.set("detected_cycles", s.detected_cycles);
    r.set("detection_per_cycle", rate);
    r.set("detection_per_cycle_err", (rate * (1.0 - rate) / cycles).sqrt());
    r.set("first_attempt_per_cycle", s.first_attempt_detections as f64 / cycles);
    if a.poisson.is_none() {
        r.set("detection_model", per_cycle_detection_probability(node));
    }
    r.set("photon_clicks", s.photon_clicks);
    r.set("dark_clicks", s.dark_clicks);
    let text = format!(
        "{} cycles, {} detected ({:.4} per cycle), {} photon and {} dark clicks -> {}\n",
        s.cycles,
        s.detected_cycles,
        rate,
        s.photon_clicks,
        s.dark_clicks,
        a.common.out.display()
    );
    Ok(Outcome::ok(text, r))
}

fn scan(
    kind: &str,
    a: ScanArgs,
    detuning: Option<Option<f64>>,
    cfg: &ConfigFile,
    node: &NodeConfig,
) -> Result<Outcome> {
    let seed = a.common.seed.unwrap_or(cfg.sequence.seed);
    let transition = Transition::from(a.transition);
    let points = a.points.unwrap_or(cfg.sequence.scan_points);
    let shots_per_point = a.shots.unwrap_or(cfg.sequence.shots_per_point);
    let (experiment, detuning_khz) = match detuning {
        None => (
            Experiment::Rabi {
                transition,
                durations_us: rabi_grid(transition, node, points),
                shots_per_point,
            },
            None,
        ),
        Some(d) => {
            let (delays_us, default) = ramsey_grid(transition, node, points);
            let detuning_khz = d.unwrap_or(default);
            (
                Experiment::Ramsey {
                    transition,
                    delays_us,
                    shots_per_point,
                    detuning_khz,
                },
                Some(detuning_khz),
            )
        }
    };
    let spec = SequenceSpec::new(seed, experiment);
    let points = if detuning.is_some() {
        run_ramsey(&spec, node)?
    } else {
        run_rabi(&spec, node)?
    };
    let mut table = Table::from_points(kind, &points);
    table.meta.push(("transition".into(), format!("{:?}", transition).to_lowercase()));
    table.meta.push(("seed".into(), seed.to_string()));
    if let Some(d) = detuning_khz {
        table.meta.push(("detuning_khz".into(), d.to_string()));
    }
    write_file(&a.common.out, &table.to_string())?;
    let mut r = base_report(kind, seed, &a.common.out);
    r.set("transition", format!("{:?}", transition).to_lowercase());
    r.set("points", points.len() as u64);
    r.set("shots_per_point", shots_per_point);
    if let Some(d) = detuning_khz {
        r.set("detuning_khz", d);
    }
    let text = format!(
        "{kind} scan of {} points x {shots_per_point} shots -> {}\n",
        points.len(),
        a.common.out.display()
    );
    Ok(Outcome::ok(text, r))
}

fn readout(a: ReadoutArgs, cfg: &ConfigFile, node: &NodeConfig) -> Result<Outcome> {
    let seed = a.common.seed.unwrap_or(cfg.sequence.seed);
    let spec = SequenceSpec::new(
        seed,
        Experiment::ReadoutHistogram {
            shots: a.shots.unwrap_or(cfg.sequence.readout_shots),
            atom_fraction: a.atom_fraction.unwrap_or(cfg.sequence.readout_atom_fraction),
            with_loss: !a.no_loss,
        },
    );
    let shots = run_readout_histogram(&spec, node)?;
    let table = Table::from_readout(&shots);
    write_file(&a.common.out, &table.to_string())?;
    let atoms = shots.iter().filter(|s| s.atom_present).count() as u64;
    let mut r = base_report("readout", seed, &a.common.out);
    r.set("shots", shots.len() as u64);
    r.set("atom_shots", atoms);
    r.set("empty_shots", shots.len() as u64 - atoms);
    let text = format!(
        "{} readout shots ({atoms} with an atom) -> {}\n",
        shots.len(),
        a.common.out.display()
    );
    Ok(Outcome::ok(text, r))
}

fn parity(a: ParityArgs, cfg: &ConfigFile, node: &NodeConfig) -> Result<Outcome> {
    let seed = a.common.seed.unwrap_or(cfg.sequence.seed);
    if a.points < 3 {
        return Err(Error::InvalidArgument("a parity scan needs at least 3 points".into()));
    }
    let scan = ScanSpec {
        seed,
        fiber: cfg.sequence.fiber,
        basis: a.basis.into(),
        alpha_deg: a.alpha,
        betas_deg: linspace(0.0, 90.0, a.points),
        shots_per_point: a.shots.unwrap_or(cfg.sequence.shots),
    };
    let result = scan_waveplates(&scan, node)?;
    let mut table = Table::from_scan(&result);
    table.meta.push(("seed".into(), seed.to_string()));
    write_file(&a.common.out, &table.to_string())?;
    let mut r = base_report("parity", seed, &a.common.out);
    r.set("basis", result.basis.to_string());
    r.set("alpha_deg", result.alpha_deg);
    r.set("points", result.rows.len() as u64);
    let text = format!(
        "parity scan of {} HWP angles at QWP {:.2} deg -> {}\n",
        result.rows.len(),
        result.alpha_deg,
        a.common.out.display()
    );
    Ok(Outcome::ok(text, r))
}
