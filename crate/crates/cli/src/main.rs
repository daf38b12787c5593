mod analyze;
mod battery;
mod fit;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomnode::io::{ConfigFile, Report};
use atomnode::Error;
use clap::{Parser, Subcommand};

/// Single-atom quantum network node simulator.
#[derive(Parser)]
#[command(name = "atomnode", version)]
struct Cli {
    /// Configuration file; defaults apply when omitted.
    #[arg(long, global = true, env = "ATOMNODE_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write an event log or scan table.
    #[command(subcommand)]
    Simulate(simulate::Simulate),
    /// Estimate g2, Bell fidelity or the error budget.
    #[command(subcommand)]
    Analyze(analyze::Analyze),
    /// Fit a model to a histogram or scan table.
    Fit(fit::FitArgs),
    /// Photon arrival-time histogram of a log.
    Histogram(analyze::HistogramArgs),
    /// Run the standard battery and write a report.
    Report(battery::ReportArgs),
    /// Configuration helpers.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print the documented default configuration.
    Defaults {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command prints: human-readable text, then the summary as one JSON
/// line. A non-zero `code` still prints both.
pub struct Outcome {
    pub text: String,
    pub summary: Report,
    pub code: u8,
}

impl Outcome {
    pub fn ok(text: String, summary: Report) -> Self {
        Outcome {
            text,
            summary,
            code: 0,
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ConfigParse { .. } | Error::InvalidConfig(_) => 2,
        Error::Io(_) => 3,
        Error::MalformedLog { .. } | Error::MalformedTable { .. } => 4,
        Error::Estimator(_) => 5,
        Error::InvalidArgument(_) | Error::InvalidState(_) => 1,
    }
}

pub fn load_config(path: Option<&Path>) -> atomnode::Result<ConfigFile> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("cannot read config {}: {e}", p.display()),
                ))
            })?;
            ConfigFile::parse(&text)
        }
        None => Ok(ConfigFile::default()),
    }
}

pub fn write_file(path: &Path, contents: &str) -> atomnode::Result<()> {
    std::fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })
}

fn run(cli: Cli) -> atomnode::Result<Outcome> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(s) => simulate::run(s, config),
        Command::Analyze(a) => analyze::run(a, &config),
        Command::Fit(f) => fit::run(f),
        Command::Histogram(h) => analyze::histogram(h, &config),
        Command::Report(r) => battery::run(r, config),
        Command::Config(ConfigCommand::Defaults { out }) => {
            let doc = ConfigFile::reference_document();
            let mut summary = Report::new();
            summary.set("status", "ok");
            let text = match out {
                Some(p) => {
                    write_file(&p, &doc)?;
                    summary.set("out", p.display().to_string());
                    format!("wrote {}\n", p.display())
                }
                None => doc,
            };
            Ok(Outcome::ok(text, summary))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            let mut summary = out.summary;
            if summary.get("status").is_none() {
                summary.set("status", if out.code == 0 { "ok" } else { "error" });
            }
            println!("{}", summary.summary_line());
            ExitCode::from(out.code)
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            let mut summary = Report::new();
            summary.set("status", "error");
            summary.set("exit_code", code as u64);
            summary.set("error", e.to_string());
            println!("{}", summary.summary_line());
            ExitCode::from(code)
        }
    }
}
