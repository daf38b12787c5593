use std::path::PathBuf;

use atomnode::estimators::{
    fit_decay_histogram, fit_parity, fit_rabi, fit_ramsey, FitKind, FitResult, Series,
};
use atomnode::io::{Report, Table};
use atomnode::sequence::linspace;
use atomnode::Result;
use clap::{Args, ValueEnum};

use crate::{write_file, Outcome};

#[derive(Clone, Copy, ValueEnum)]
pub enum Model {
    /// Exponentially modified Gaussian on an arrival-time histogram.
    Decay,
    /// Gaussian-damped cosine on a Ramsey scan.
    Ramsey,
    /// Cosine on a Rabi scan.
    Rabi,
    /// 4β sinusoid on a waveplate parity scan.
    Parity,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(value_enum)]
    model: Model,
    table: PathBuf,
    /// Write data, model and residual per point.
    #[arg(long)]
    residuals: Option<PathBuf>,
    /// Write the model on a fine grid.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    samples: usize,
}

pub fn run(a: FitArgs) -> Result<Outcome> {
    let table = Table::load(&a.table)?;
    let (kind, x, y, fit) = match a.model {
        Model::Decay => {
            let h = table.to_histogram()?;
            let y = h.counts.iter().map(|&c| c as f64).collect();
            (FitKind::Decay, h.centers(), y, fit_decay_histogram(&h)?)
        }
        Model::Ramsey | Model::Rabi => {
            let s = Series::from_points(&table.to_points()?)?;
            let (kind, fit) = match a.model {
                Model::Ramsey => (FitKind::Ramsey, fit_ramsey(&s)?),
                _ => (FitKind::Rabi, fit_rabi(&s)?),
            };
            (kind, s.x, s.y, fit)
        }
        Model::Parity => {
            let s = table.to_parity_series()?;
            let fit = fit_parity(&s)?;
            (FitKind::Parity, s.x, s.y, fit)
        }
    };
    if let Some(p) = &a.residuals {
        let mut t = Table::new("residuals", &["x", "data", "model", "residual"]);
        for (&xi, &yi) in x.iter().zip(&y) {
            let m = kind.evaluate(&fit, xi);
            t.push(vec![xi, yi, m, yi - m]);
        }
        write_file(p, &t.to_string())?;
    }
    if let Some(p) = &a.curve {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = Table::new("curve", &["x", "model"]);
        for xi in linspace(lo, hi, a.samples.max(2)) {
            t.push(vec![xi, kind.evaluate(&fit, xi)]);
        }
        write_file(p, &t.to_string())?;
    }
    Ok(outcome(&fit))
}

fn outcome(fit: &FitResult) -> Outcome {
    let mut r = Report::new();
    r.set("command", "fit");
    let mut text = String::new();
    for p in &fit.params {
        let bound = if fit.lower_bounds.contains(&p.name) {
            " (lower bound)"
        } else {
            ""
        };
        text.push_str(&format!("{:<12} {:>14.6} +- {:.6}{bound}\n", p.name, p.value, p.error));
        r.set(&p.name, p.value);
        r.set(&format!("{}_err", p.name), p.error);
    }
    text.push_str(&format!(
        "rss {:.6}, dof {}, {} iterations{}\n",
        fit.rss,
        fit.dof,
        fit.iterations,
        if fit.converged { "" } else { ", NOT CONVERGED" }
    ));
    r.set("rss", fit.rss);
    r.set("dof", fit.dof as u64);
    r.set("iterations", fit.iterations as u64);
    r.set("converged", fit.converged);
    r.set("lower_bounds", fit.lower_bounds.join(","));
    let code = if fit.converged { 0 } else { 5 };
    Outcome {
        text,
        summary: r,
        code,
    }
}
