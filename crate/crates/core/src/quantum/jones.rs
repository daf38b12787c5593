//! Jones calculus for the photon polarization.
//!
//! Column vectors are written in the linear `(H, V)` basis. The circular
//! states follow the fixed convention `|σ±⟩ = (|H⟩ ∓ i|V⟩)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{c, max_abs, C64, EXACT_TOL};
use crate::error::{Error, Result};

/// A plane angle, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn from_radians(rad: f64) -> Self {
        Angle(rad)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Angle(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolBasis {
    /// Slot 0 = σ⁻, slot 1 = σ⁺.
    Circular,
    /// Slot 0 = H, slot 1 = V.
    Linear,
}

/// A normalized single-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPol {
    basis: PolBasis,
    amp: Vector2<C64>,
}

impl PhotonPol {
    pub fn new(basis: PolBasis, amp: Vector2<C64>) -> Result<Self> {
        let norm = amp.norm_squared();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!(
                "polarization amplitude norm² = {norm}"
            )));
        }
        Ok(PhotonPol { basis, amp })
    }

    pub fn h() -> Self {
        PhotonPol {
            basis: PolBasis::Linear,
            amp: Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
        }
    }

    pub fn v() -> Self {
        PhotonPol {
            basis: PolBasis::Linear,
            amp: Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
        }
    }

    pub fn sigma_plus() -> Self {
        PhotonPol {
            basis: PolBasis::Circular,
            amp: Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
        }
    }

    pub fn sigma_minus() -> Self {
        PhotonPol {
            basis: PolBasis::Circular,
            amp: Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
        }
    }

    pub fn basis(&self) -> PolBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> Vector2<C64> {
        self.amp
    }

    /// Amplitudes in the `(H, V)` basis.
    pub fn to_linear(&self) -> Vector2<C64> {
        match self.basis {
            PolBasis::Linear => self.amp,
            PolBasis::Circular => circular_to_linear() * self.amp,
        }
    }

    /// `|⟨other|self⟩|²`, comparing both states in the linear basis.
    pub fn overlap(&self, other: &PhotonPol) -> f64 {
        other.to_linear().dotc(&self.to_linear()).norm_sqr()
    }
}

/// Change of basis whose columns are `|σ⁻⟩, |σ⁺⟩` written in `(H, V)`.
pub fn circular_to_linear() -> Matrix2<C64> {
    let s = FRAC_1_SQRT_2;
    Matrix2::new(c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Unitary,
    Projector,
}

/// A 2×2 Jones operator: a retarder, a fiber unitary or a polarizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationOp {
    m: Matrix2<C64>,
    kind: OpKind,
}

impl PolarizationOp {
    pub fn unitary(m: Matrix2<C64>) -> Result<Self> {
        let dev = max_abs(&(m.adjoint() * m - Matrix2::identity()));
        if dev > EXACT_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary (|M†M - I| = {dev:e})"
            )));
        }
        Ok(PolarizationOp {
            m,
            kind: OpKind::Unitary,
        })
    }

    pub fn projector(m: Matrix2<C64>) -> Result<Self> {
        let idem = max_abs(&(m * m - m));
        let herm = max_abs(&(m.adjoint() - m));
        if idem > EXACT_TOL || herm > EXACT_TOL {
            return Err(Error::InvalidArgument(
                "matrix is not an orthogonal projector".into(),
            ));
        }
        Ok(PolarizationOp {
            m,
            kind: OpKind::Projector,
        })
    }

    pub fn identity() -> Self {
        PolarizationOp {
            m: Matrix2::identity(),
            kind: OpKind::Unitary,
        }
    }

    /// Projector onto `pol`.
    pub fn project_onto(pol: &PhotonPol) -> Self {
        let v = pol.to_linear();
        PolarizationOp {
            m: v * v.adjoint(),
            kind: OpKind::Projector,
        }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.m
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn is_unitary(&self) -> bool {
        self.kind == OpKind::Unitary
    }

    /// Apply to a Jones vector written in the linear basis.
    pub fn apply(&self, v: &Vector2<C64>) -> Vector2<C64> {
        self.m * v
    }

    /// True when `self = e^{iφ}·other` for some global phase φ.
    pub fn equals_up_to_phase(&self, other: &PolarizationOp, tol: f64) -> bool {
        // |Tr(A†B)| = 2 exactly when A and B differ by a phase (both unitary).
        let overlap = (self.m.adjoint() * other.m).trace().norm();
        (overlap - 2.0).abs() <= tol
    }
}

impl Mul for PolarizationOp {
    type Output = PolarizationOp;

    /// Matrix product; `a * b` applies `b` first.
    fn mul(self, rhs: PolarizationOp) -> PolarizationOp {
        let kind = if self.kind == OpKind::Unitary && rhs.kind == OpKind::Unitary {
            OpKind::Unitary
        } else {
            OpKind::Projector
        };
        PolarizationOp {
            m: self.m * rhs.m,
            kind,
        }
    }
}

/// Real rotation matrix `R(θ) = [[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: Angle) -> Matrix2<C64> {
    let (s, co) = theta.radians().sin_cos();
    Matrix2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// Half-wave plate with fast axis at `theta` from horizontal.
pub fn jones_hwp(theta: Angle) -> PolarizationOp {
    let (s, co) = (2.0 * theta.radians()).sin_cos();
    PolarizationOp {
        m: Matrix2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0)),
        kind: OpKind::Unitary,
    }
}

/// Quarter-wave plate with fast axis at `theta`: `R(θ)·diag(1, i)·R(-θ)`.
pub fn jones_qwp(theta: Angle) -> PolarizationOp {
    let retarder = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    PolarizationOp {
        m: rotation(theta) * retarder * rotation(Angle(-theta.radians())),
        kind: OpKind::Unitary,
    }
}

/// Haar-random element of U(2).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> PolarizationOp {
    let mut g = [0.0f64; 4];
    for x in g.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = c(g[0] / norm, g[1] / norm);
    let b = c(g[2] / norm, g[3] / norm);
    let phase = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    let m = Matrix2::new(a, -b.conj(), b, a.conj()) * phase;
    PolarizationOp {
        m,
        kind: OpKind::Unitary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn is_unitary(op: &PolarizationOp) -> bool {
        PolarizationOp::unitary(*op.matrix()).is_ok()
    }

    #[test]
    fn hwp_maps_h() {
        let h = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let out = jones_hwp(Angle::from_degrees(0.0)).apply(&h);
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-15);

        let out = jones_hwp(Angle::from_degrees(22.5)).apply(&h);
        assert!((out[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out[1].re - FRAC_1_SQRT_2).abs() < 1e-15);

        let out = jones_hwp(Angle::from_degrees(45.0)).apply(&h);
        assert!(out[0].norm() < 1e-15);
        assert!((out[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qwp_squared_is_hwp_on_degree_grid() {
        for deg in 0..360 {
            let a = Angle::from_degrees(deg as f64);
            let q = jones_qwp(a);
            let h = jones_hwp(a);
            assert!(is_unitary(&q) && is_unitary(&h));
            assert!((q * q).equals_up_to_phase(&h, 1e-12), "angle {deg}");
            assert!((h * h).equals_up_to_phase(&PolarizationOp::identity(), 1e-12));
        }
    }

    #[test]
    fn qwp_at_45_turns_circular_into_linear() {
        let q = jones_qwp(Angle::from_degrees(45.0));
        for pol in [PhotonPol::sigma_plus(), PhotonPol::sigma_minus()] {
            let out = q.apply(&pol.to_linear());
            // linear polarization: the two components share a phase
            let rel = out[0].conj() * out[1];
            assert!(rel.im.abs() < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn circular_convention() {
        let sp = PhotonPol::sigma_plus().to_linear();
        assert!((sp[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((sp[1] - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(PhotonPol::sigma_plus().overlap(&PhotonPol::sigma_minus()) < 1e-30);
        assert!((PhotonPol::sigma_plus().overlap(&PhotonPol::h()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            assert!(is_unitary(&haar_unitary(&mut rng)));
        }
    }

    #[test]
    fn rejects_non_unitary_and_bad_projector() {
        let m = Matrix2::new(c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(PolarizationOp::unitary(m).is_err());
        assert!(PolarizationOp::projector(m).is_err());
        let p = PolarizationOp::project_onto(&PhotonPol::sigma_plus());
        assert!(PolarizationOp::projector(*p.matrix()).is_ok());
        assert!(PhotonPol::new(PolBasis::Linear, Vector2::new(c(1.0, 0.0), c(1.0, 0.0))).is_err());
    }
}
