use serde::{Deserialize, Serialize};

use super::state::JointState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementBasis {
    Z,
    X,
}

impl std::fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasurementBasis::Z => "z",
            MeasurementBasis::X => "x",
        })
    }
}

impl std::str::FromStr for MeasurementBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" | "Z" => Ok(MeasurementBasis::Z),
            "x" | "X" => Ok(MeasurementBasis::X),
            other => Err(Error::InvalidArgument(format!("unknown basis {other:?}"))),
        }
    }
}

/// Joint populations `(↑'H, ↑'V, ↓H, ↓V)` measured in one basis, with
/// per-entry 1σ uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTomogram {
    basis: MeasurementBasis,
    p: [f64; 4],
    sigma: [f64; 4],
}

impl DiagonalTomogram {
    pub fn new(basis: MeasurementBasis, p: [f64; 4], sigma: [f64; 4]) -> Result<Self> {
        if p.iter().chain(&sigma).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tomogram entry".into()));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidArgument(format!(
                "tomogram populations must lie in [0, 1]: {p:?}"
            )));
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument("negative uncertainty".into()));
        }
        let combined = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > combined.max(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "tomogram populations sum to {sum}"
            )));
        }
        Ok(DiagonalTomogram { basis, p, sigma })
    }

    pub(crate) fn exact(basis: MeasurementBasis, p: [f64; 4]) -> Self {
        DiagonalTomogram {
            basis,
            p,
            sigma: [0.0; 4],
        }
    }

    /// Tomogram from raw counts `(↑'H, ↑'V, ↓H, ↓V)` with binomial errors.
    pub fn from_counts(basis: MeasurementBasis, counts: [u64; 4]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Estimator("no valid shots in tomogram".into()));
        }
        let nf = n as f64;
        let p = counts.map(|k| k as f64 / nf);
        let sigma = p.map(|q| (q * (1.0 - q) / nf).sqrt());
        DiagonalTomogram::new(basis, p, sigma)
    }

    pub fn basis(&self) -> MeasurementBasis {
        self.basis
    }

    pub fn populations(&self) -> [f64; 4] {
        self.p
    }

    pub fn uncertainties(&self) -> [f64; 4] {
        self.sigma
    }

    pub fn up_h(&self) -> f64 {
        self.p[0]
    }

    pub fn up_v(&self) -> f64 {
        self.p[1]
    }

    pub fn down_h(&self) -> f64 {
        self.p[2]
    }

    pub fn down_v(&self) -> f64 {
        self.p[3]
    }

    /// Even parity `P(↑',H) + P(↓,V)`.
    pub fn even_parity(&self) -> f64 {
        self.p[0] + self.p[3]
    }

    pub fn odd_parity(&self) -> f64 {
        self.p[1] + self.p[2]
    }
}

/// Bell-state overlap `(ρ₀₀ + ρ₃₃)/2 + Re ρ₀₃` in slot indices, which reads
/// `(ρ↑'H,↑'H + ρ↓V,↓V)/2 + Re ρ↑'H,↓V` in the mapped linear frame.
pub fn fidelity_full(rho: &JointState) -> Result<f64> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > super::EXACT_TOL {
        return Err(Error::InvalidState(format!("state not normalized: trace {tr}")));
    }
    let f = 0.5 * (rho.element(0, 0).re + rho.element(3, 3).re) + rho.element(0, 3).re;
    Ok(f.clamp(0.0, 1.0))
}

/// Lower bound on the Bell fidelity from z- and x-basis diagonals, with a
/// linearized uncertainty.
pub fn fidelity_lower_bound(z: &DiagonalTomogram, x: &DiagonalTomogram) -> Result<(f64, f64)> {
    let [zuh, zuv, zdh, zdv] = z.p;
    let [xuh, xuv, xdh, xdv] = x.p;
    if zuv < 0.0 || zdh < 0.0 {
        return Err(Error::InvalidArgument(
            "negative population under the square root".into(),
        ));
    }
    let root = (zuv * zdh).sqrt();
    let f = 0.5 * (zuh + zdv - 2.0 * root + xuh + xdv - xuv - xdh);

    let [suh, suv, sdh, sdv] = z.sigma;
    // variance of the 2·√(ρ↑'V ρ↓H) term
    let root_var = if zuv > 0.0 && zdh > 0.0 {
        (zdh / zuv) * suv * suv + (zuv / zdh) * sdh * sdh
    } else {
        // derivative diverges at zero; use a one-sided finite step instead
        let step = 2.0 * (((zuv + suv) * (zdh + sdh)).sqrt() - root);
        step * step
    };
    let x_var: f64 = x.sigma.iter().map(|s| s * s).sum();
    let var = 0.25 * (suh * suh + sdv * sdv + root_var + x_var);
    Ok((f, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(basis: MeasurementBasis, p: [f64; 4]) -> DiagonalTomogram {
        DiagonalTomogram::new(basis, p, [0.0; 4]).unwrap()
    }

    #[test]
    fn perfect_and_mixed() {
        let z = t(MeasurementBasis::Z, [0.5, 0.0, 0.0, 0.5]);
        let x = t(MeasurementBasis::X, [0.5, 0.0, 0.0, 0.5]);
        assert_eq!(fidelity_lower_bound(&z, &x).unwrap().0, 1.0);
        let z = t(MeasurementBasis::Z, [0.25; 4]);
        let x = t(MeasurementBasis::X, [0.25; 4]);
        assert!(fidelity_lower_bound(&z, &x).unwrap().0.abs() < 1e-15);
    }

    #[test]
    fn tomogram_validation() {
        assert!(DiagonalTomogram::new(MeasurementBasis::Z, [0.5, 0.5, 0.1, 0.0], [0.0; 4]).is_err());
        assert!(DiagonalTomogram::new(MeasurementBasis::Z, [1.1, -0.1, 0.0, 0.0], [0.0; 4]).is_err());
        // sum off by 0.01 but within combined uncertainty
        assert!(DiagonalTomogram::new(MeasurementBasis::Z, [0.5, 0.0, 0.0, 0.49], [0.01; 4]).is_ok());
        assert!(DiagonalTomogram::from_counts(MeasurementBasis::X, [0; 4]).is_err());
    }

    #[test]
    fn uncertainty_matches_finite_difference_propagation() {
        let z = DiagonalTomogram::new(
            MeasurementBasis::Z,
            [0.47, 0.01, 0.03, 0.49],
            [0.01, 0.002, 0.004, 0.01],
        )
        .unwrap();
        let x = DiagonalTomogram::new(
            MeasurementBasis::X,
            [0.46, 0.03, 0.04, 0.47],
            [0.01, 0.004, 0.005, 0.01],
        )
        .unwrap();
        let (f0, sigma) = fidelity_lower_bound(&z, &x).unwrap();
        // independent oracle: numerical gradient of the bound
        let eval = |zp: [f64; 4], xp: [f64; 4]| {
            0.5 * (zp[0] + zp[3] - 2.0 * (zp[1] * zp[2]).sqrt() + xp[0] + xp[3] - xp[1] - xp[2])
        };
        let h = 1e-7;
        let mut var = 0.0;
        for i in 0..4 {
            let mut zp = z.populations();
            zp[i] += h;
            let d = (eval(zp, x.populations()) - f0) / h;
            var += (d * z.uncertainties()[i]).powi(2);
            let mut xp = x.populations();
            xp[i] += h;
            let d = (eval(z.populations(), xp) - f0) / h;
            var += (d * x.uncertainties()[i]).powi(2);
        }
        assert!((sigma - var.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn rejects_unnormalized_state() {
        use crate::quantum::{bell_psi_plus, AtomBasis, PolBasis};
        let b = bell_psi_plus();
        let scaled = JointState::from_parts_unchecked(
            b.rho() * crate::quantum::c(2.0, 0.0),
            AtomBasis::Bare,
            PolBasis::Circular,
        );
        assert!(fidelity_full(&scaled).is_err());
    }
}
