//! Model fits for arrival-time histograms, Ramsey and Rabi scans and parity
//! oscillations.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::lsq::{solve, FitResult, Solution};
use crate::error::{Error, Result};
use crate::physics::FWHM_PER_SIGMA;
use crate::sequence::PopulationPoint;
use crate::special::emg_pdf;

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::InvalidArgument("histogram needs hi > lo and bins > 0".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for s in samples {
            if s >= lo && s < hi {
                counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        Ok(Histogram { lo, width, counts })
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.lo + (i as f64 + 0.5) * self.width)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `(x, y)` data with optional 1σ errors on `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Series {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("x and y lengths differ".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite data".into()));
        }
        Ok(Series { x, y, sigma: None })
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != self.x.len() || sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("sigma must be positive, one per point".into()));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Upper-state fraction per point, unweighted.
    pub fn from_points(points: &[PopulationPoint]) -> Result<Self> {
        Series::new(
            points.iter().map(|p| p.x_us).collect(),
            points.iter().map(|p| p.fraction()).collect(),
        )
    }

    fn span(&self) -> f64 {
        let (lo, hi) = self
            .x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    }

    fn mean_y(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }
}

fn finish(names: &[&str], sol: &Solution, n: usize) -> FitResult {
    let mut out = FitResult {
        params: Vec::new(),
        rss: sol.rss,
        dof: n.saturating_sub(names.len()),
        converged: sol.converged && sol.params.iter().all(|v| v.is_finite()),
        iterations: sol.iterations,
        lower_bounds: Vec::new(),
    };
    for (k, name) in names.iter().enumerate() {
        out.push(name, sol.params[k], sol.cov[(k, k)].max(0.0).sqrt());
    }
    out
}

fn best(solutions: Vec<Solution>) -> Solution {
    solutions
        .into_iter()
        .min_by(|a, b| {
            (!a.converged, a.rss)
                .partial_cmp(&(!b.converged, b.rss))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one start")
}

fn emg_model(p: &[f64], t: f64) -> f64 {
    let sigma = p[2].abs().max(1e-9) / FWHM_PER_SIGMA;
    p[0] * emg_pdf(t, p[1], sigma, p[3].abs().max(1e-9))
}

/// Fit `A·EMG(t; t0, FWHM, τ)` to an arrival-time histogram with Poisson
/// weights. Parameters: `amplitude` (counts·width), `t0`, `fwhm`, `tau`.
pub fn fit_decay_histogram(hist: &Histogram) -> Result<FitResult> {
    let nonempty = hist.counts.iter().filter(|&&c| c > 0).count();
    if nonempty < 10 {
        return Err(Error::Estimator(format!(
            "decay fit needs at least 10 nonempty bins, got {nonempty}"
        )));
    }
    let x = hist.centers();
    let y: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let sigma: Vec<f64> = y.iter().map(|&c| c.max(1.0).sqrt()).collect();
    let total: f64 = y.iter().sum();
    let mean = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / total;
    let var = x.iter().zip(&y).map(|(a, b)| (a - mean).powi(2) * b).sum::<f64>() / total;
    let mode = x[y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)];
    let skew_scale = (mean - mode).abs().max(2.0 * hist.width);
    let starts: Vec<Solution> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| {
            let tau = k * skew_scale;
            let s = (var - tau * tau).max(hist.width * hist.width).sqrt();
            let p0 = [total * hist.width, mean - tau, FWHM_PER_SIGMA * s, tau];
            solve(emg_model, &x, &y, Some(&sigma), &p0)
        })
        .collect();
    let sol = best(starts);
    let mut out = finish(&["amplitude", "t0", "fwhm", "tau"], &sol, x.len());
    for p in out.params.iter_mut().filter(|p| p.name == "fwhm" || p.name == "tau") {
        p.value = p.value.abs();
    }
    Ok(out)
}

/// Dominant angular frequency (rad per x unit) and the phase of
/// `Σ (y - ȳ) e^{-iωx}` at it.
fn periodogram_peak(s: &Series) -> (f64, f64) {
    let mut xs: Vec<f64> = s.x.clone();
    xs.sort_by(f64::total_cmp);
    let mut steps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    steps.sort_by(f64::total_cmp);
    let dt = steps.get(steps.len() / 2).copied().unwrap_or(1.0);
    let span = s.span().max(dt);
    let nyquist = PI / dt;
    let resolution = 2.0 * PI / span;
    let n = ((nyquist / resolution) * 20.0).ceil().clamp(50.0, 200_000.0) as usize;
    let mean = s.mean_y();
    let transform = |w: f64| {
        s.x.iter().zip(&s.y).fold((0.0, 0.0), |(re, im), (&t, &v)| {
            let (sn, cs) = (w * t).sin_cos();
            (re + (v - mean) * cs, im - (v - mean) * sn)
        })
    };
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 1..=n {
        let w = nyquist * k as f64 / n as f64;
        let (re, im) = transform(w);
        let power = re * re + im * im;
        if power > best.1 {
            best = (w, power);
        }
    }
    let (re, im) = transform(best.0);
    (best.0, im.atan2(re))
}

fn check_oscillation_data(s: &Series, what: &str) -> Result<()> {
    if s.x.len() < 8 {
        return Err(Error::Estimator(format!("{what} fit needs at least 8 points")));
    }
    Ok(())
}

fn ramsey_model(p: &[f64], t: f64) -> f64 {
    p[4] + p[3] * (-(t / p[0]).powi(2)).exp() * (p[1] * t + p[2]).cos()
}

/// Fit `offset + amplitude·exp(-(t/T₂*)²)·cos(ωt + φ)`. Parameters: `t2star`,
/// `omega` (rad per time unit), `phi`, `amplitude`, `offset`. When the
/// envelope barely decays over the scan, `t2star` is flagged as a lower
/// bound.
pub fn fit_ramsey(s: &Series) -> Result<FitResult> {
    check_oscillation_data(s, "Ramsey")?;
    let (omega, phase) = periodogram_peak(s);
    let (lo, hi) = s
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = s.span();
    let starts: Vec<Solution> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|k| {
            let p0 = [k * span, omega, phase, 0.5 * (hi - lo), s.mean_y()];
            solve(ramsey_model, &s.x, &s.y, s.sigma.as_deref(), &p0)
        })
        .collect();
    let sol = best(starts);
    let mut out = finish(&["t2star", "omega", "phi", "amplitude", "offset"], &sol, s.x.len());
    normalize_sinusoid(&mut out, "amplitude", "phi");
    if let Some(t2) = out.params.iter_mut().find(|p| p.name == "t2star") {
        t2.value = t2.value.abs();
        if t2.value > 2.0 * span || !(t2.error < t2.value) {
            out.lower_bounds.push("t2star".into());
        }
    }
    Ok(out)
}

/// Make the amplitude positive by shifting the phase by π, and wrap the
/// phase into `(-π, π]`.
fn normalize_sinusoid(out: &mut FitResult, amp: &str, phase: &str) {
    let flip = out.value(amp) < 0.0;
    for p in out.params.iter_mut() {
        if p.name == amp && flip {
            p.value = -p.value;
        }
        if p.name == phase {
            let v = if flip { p.value + PI } else { p.value };
            p.value = -((-v + PI).rem_euclid(2.0 * PI) - PI);
        }
    }
}

fn rabi_model(p: &[f64], t: f64) -> f64 {
    p[3] + p[1] * (2.0 * PI * p[0] * t + p[2]).cos()
}

/// Fit `offset + amplitude·cos(2πft + φ)`. Parameters: `rabi_rate` (cycles
/// per time unit), `amplitude`, `phi`, `offset`, and the derived `contrast`
/// = 2·amplitude.
pub fn fit_rabi(s: &Series) -> Result<FitResult> {
    check_oscillation_data(s, "Rabi")?;
    let (omega, phase) = periodogram_peak(s);
    let (lo, hi) = s
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let p0 = [omega / (2.0 * PI), 0.5 * (hi - lo), phase, s.mean_y()];
    let sol = solve(rabi_model, &s.x, &s.y, s.sigma.as_deref(), &p0);
    let mut out = finish(&["rabi_rate", "amplitude", "phi", "offset"], &sol, s.x.len());
    normalize_sinusoid(&mut out, "amplitude", "phi");
    if let Some(f) = out.params.iter_mut().find(|p| p.name == "rabi_rate") {
        f.value = f.value.abs();
    }
    let (a, da) = (out.value("amplitude"), out.error("amplitude"));
    out.push("contrast", 2.0 * a, 2.0 * da);
    Ok(out)
}

/// Fit `offset·(1 + V·cos(4β - φ))` to parity versus HWP angle (degrees) by
/// linear least squares. Parameters: `visibility`, `phase_deg` (of the 4β
/// oscillation), `offset`.
pub fn fit_parity(s: &Series) -> Result<FitResult> {
    if s.x.len() < 3 {
        return Err(Error::Estimator("parity fit needs at least 3 points".into()));
    }
    if s.span() < 45.0 - 1e-9 {
        return Err(Error::Estimator(
            "parity scan must span at least half a period (45°)".into(),
        ));
    }
    let w: Vec<f64> = match &s.sigma {
        Some(sig) => sig.iter().map(|v| 1.0 / (v * v)).collect(),
        None => vec![1.0; s.x.len()],
    };
    let mut a = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let rows: Vec<Vector3<f64>> = s
        .x
        .iter()
        .map(|b| {
            let t = 4.0 * b.to_radians();
            Vector3::new(1.0, t.cos(), t.sin())
        })
        .collect();
    for ((r, &y), &wi) in rows.iter().zip(&s.y).zip(&w) {
        a += r * r.transpose() * wi;
        rhs += r * y * wi;
    }
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Estimator("parity design matrix is singular".into()))?;
    let coef = inv * rhs;
    let rss: f64 = rows
        .iter()
        .zip(&s.y)
        .zip(&w)
        .map(|((r, y), wi)| (y - r.dot(&coef)).powi(2) * wi)
        .sum();
    let n = s.x.len();
    let scale = match s.sigma {
        Some(_) => 1.0,
        None if n > 3 => rss / (n - 3) as f64,
        None => 0.0,
    };
    let cov = inv * scale;
    let (c, ac, bs) = (coef[0], coef[1], coef[2]);
    if !(c > 0.0) {
        return Err(Error::Estimator("parity offset is not positive".into()));
    }
    let r = ac.hypot(bs);
    let vis = r / c;
    let grad_v = if r > 0.0 {
        Vector3::new(-r / (c * c), ac / (r * c), bs / (r * c))
    } else {
        Vector3::new(0.0, 1.0 / c, 1.0 / c)
    };
    let grad_phi = if r > 0.0 {
        Vector3::new(0.0, -bs / (r * r), ac / (r * r))
    } else {
        Vector3::zeros()
    };
    let var = |g: &Vector3<f64>| (g.transpose() * cov * g)[(0, 0)].max(0.0);
    let mut out = FitResult {
        params: Vec::new(),
        rss,
        dof: n.saturating_sub(3),
        converged: true,
        iterations: 1,
        lower_bounds: Vec::new(),
    };
    out.push("visibility", vis, var(&grad_v).sqrt());
    out.push("phase_deg", bs.atan2(ac).to_degrees(), var(&grad_phi).sqrt().to_degrees());
    out.push("offset", c, cov[(0, 0)].max(0.0).sqrt());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Decay,
    Ramsey,
    Rabi,
    Parity,
}

impl FitKind {
    /// The fitted model at `x`, for residuals and plotting.
    pub fn evaluate(self, fit: &FitResult, x: f64) -> f64 {
        let v = |n: &str| fit.value(n);
        match self {
            FitKind::Decay => emg_model(&[v("amplitude"), v("t0"), v("fwhm"), v("tau")], x),
            FitKind::Ramsey => ramsey_model(
                &[v("t2star"), v("omega"), v("phi"), v("amplitude"), v("offset")],
                x,
            ),
            FitKind::Rabi => rabi_model(&[v("rabi_rate"), v("amplitude"), v("phi"), v("offset")], x),
            FitKind::Parity => {
                let arg = 4.0 * x.to_radians() - v("phase_deg").to_radians();
                v("offset") * (1.0 + v("visibility") * arg.cos())
            }
        }
    }
}
