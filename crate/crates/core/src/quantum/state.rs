use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fidelity::{DiagonalTomogram, MeasurementBasis};
use super::jones::{circular_to_linear, PolBasis, PolarizationOp};
use super::{c, max_abs, C64, EXACT_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Which atomic pair occupies the qubit slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomBasis {
    /// `(↑, ↓)`, the pair entangled at emission.
    Bare,
    /// `(↑', ↓)`, after the microwave mapping pulse.
    Mapped,
}

/// Density matrix of the atom ⊗ photon pair with basis tags.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    rho: Matrix4<C64>,
    atom: AtomBasis,
    photon: PolBasis,
}

impl JointState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(rho: Matrix4<C64>, atom: AtomBasis, photon: PolBasis) -> Result<Self> {
        let herm = max_abs(&(rho - rho.adjoint()));
        if herm > EXACT_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!("trace = {tr}")));
        }
        let state = JointState {
            rho: hermitian_part(&rho),
            atom,
            photon,
        };
        let min_eig = state.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(state)
    }

    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(rho: Matrix4<C64>, atom: AtomBasis, photon: PolBasis) -> Self {
        JointState { rho, atom, photon }
    }

    pub fn rho(&self) -> &Matrix4<C64> {
        &self.rho
    }

    pub fn atom_basis(&self) -> AtomBasis {
        self.atom
    }

    pub fn photon_basis(&self) -> PolBasis {
        self.photon
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.rho[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.rho);
        let mut out = [0.0; 4];
        for (o, v) in out.iter_mut().zip(eig.eigenvalues.iter()) {
            *o = *v;
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Relabel ↑ as ↑' after a perfect mapping pulse.
    pub fn with_mapped_atom(mut self) -> Self {
        self.atom = AtomBasis::Mapped;
        self
    }

    /// Re-express the photon in the `(H, V)` basis.
    pub fn to_linear(&self) -> JointState {
        match self.photon {
            PolBasis::Linear => self.clone(),
            PolBasis::Circular => {
                let u = kron2(&Matrix2::identity(), &circular_to_linear());
                JointState {
                    rho: hermitian_part(&(u * self.rho * u.adjoint())),
                    atom: self.atom,
                    photon: PolBasis::Linear,
                }
            }
        }
    }

    /// Apply a unitary to the photon; the state is first written in `(H, V)`.
    pub fn apply_photon(&self, op: &PolarizationOp) -> Result<JointState> {
        if !op.is_unitary() {
            return Err(Error::InvalidArgument(
                "photon operation must be unitary".into(),
            ));
        }
        let lin = self.to_linear();
        let u = kron2(&Matrix2::identity(), op.matrix());
        Ok(JointState {
            rho: hermitian_part(&(u * lin.rho * u.adjoint())),
            atom: lin.atom,
            photon: PolBasis::Linear,
        })
    }

    /// Apply a unitary acting on the atom slot.
    pub fn apply_atom(&self, u_atom: &Matrix2<C64>) -> JointState {
        let u = kron2(u_atom, &Matrix2::identity());
        JointState {
            rho: hermitian_part(&(u * self.rho * u.adjoint())),
            atom: self.atom,
            photon: self.photon,
        }
    }

    /// Reduced atom state (photon traced out).
    pub fn atom_state(&self) -> Matrix2<C64> {
        let mut out = Matrix2::zeros();
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = (0..2).map(|p| self.rho[(2 * a + p, 2 * b + p)]).sum();
            }
        }
        out
    }

    /// Reduced photon state (atom traced out).
    pub fn photon_state(&self) -> Matrix2<C64> {
        let mut out = Matrix2::zeros();
        for p in 0..2 {
            for q in 0..2 {
                out[(p, q)] = (0..2).map(|a| self.rho[(2 * a + p, 2 * a + q)]).sum();
            }
        }
        out
    }

    /// Exact joint populations in the z basis (slot basis) or the x basis
    /// (Hadamard on both slots), ordered `(↑'H, ↑'V, ↓H, ↓V)`.
    pub fn diagonal_tomogram(&self, basis: MeasurementBasis) -> DiagonalTomogram {
        let rho = match basis {
            MeasurementBasis::Z => self.rho,
            MeasurementBasis::X => {
                let h = hadamard();
                let u = kron2(&h, &h);
                u * self.rho * u.adjoint()
            }
        };
        let p = [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re, rho[(3, 3)].re];
        DiagonalTomogram::exact(basis, p.map(|x| x.max(0.0)))
    }
}

/// Result of projecting the photon onto H or V behind a waveplate chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonMeasurement {
    pub p_h: f64,
    pub p_v: f64,
    /// Normalized atom state conditioned on H; `None` when `p_h` is zero.
    pub atom_given_h: Option<Matrix2<C64>>,
    pub atom_given_v: Option<Matrix2<C64>>,
}

/// The Bell state `(|↓,σ⁺⟩ + |↑,σ⁻⟩)/√2` in the bare, circular frame.
pub fn bell_psi_plus() -> JointState {
    let s = FRAC_1_SQRT_2;
    let psi = nalgebra::Vector4::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0));
    JointState {
        rho: psi * psi.adjoint(),
        atom: AtomBasis::Bare,
        photon: PolBasis::Circular,
    }
}

/// `p·|ψ⁺⟩⟨ψ⁺| + (1-p)·I/4`.
pub fn werner_state(p: f64) -> Result<JointState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "Werner weight {p} outside [0, 1]"
        )));
    }
    let bell = bell_psi_plus();
    let rho = bell.rho * c(p, 0.0) + Matrix4::identity() * c((1.0 - p) / 4.0, 0.0);
    Ok(JointState { rho, ..bell })
}

/// Gaussian Ramsey envelope `exp(-(t/T₂*)²)`.
pub fn dephasing_factor(t: f64, t2star: f64) -> f64 {
    (-(t / t2star).powi(2)).exp()
}

/// Multiply every atom-coherence element by `exp(-(t/T₂*)²)`.
pub fn dephase_atom(rho: &JointState, t: f64, t2star: f64) -> Result<JointState> {
    if t < 0.0 || !(t2star > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dephasing needs t >= 0 and T2* > 0 (got t={t}, T2*={t2star})"
        )));
    }
    let k = dephasing_factor(t, t2star);
    let mut out = rho.rho;
    for i in 0..4 {
        for j in 0..4 {
            if i / 2 != j / 2 {
                out[(i, j)] *= k;
            }
        }
    }
    Ok(JointState { rho: out, ..*rho })
}

/// Project the photon onto H/V after the waveplate chain (applied in order).
pub fn measure_photon(rho: &JointState, chain: &[PolarizationOp]) -> Result<PhotonMeasurement> {
    let mut w = PolarizationOp::identity();
    for op in chain {
        if !op.is_unitary() {
            return Err(Error::InvalidArgument(
                "waveplate chain contains a non-unitary element".into(),
            ));
        }
        w = *op * w;
    }
    let out = rho.apply_photon(&w)?;
    let conditional = |p: usize| {
        let mut m = Matrix2::zeros();
        for a in 0..2 {
            for b in 0..2 {
                m[(a, b)] = out.rho[(2 * a + p, 2 * b + p)];
            }
        }
        let prob = m.trace().re;
        (prob, m)
    };
    let (p_h, m_h) = conditional(0);
    let (p_v, m_v) = conditional(1);
    let normalize = |prob: f64, m: Matrix2<C64>| (prob > 1e-15).then(|| m / c(prob, 0.0));
    Ok(PhotonMeasurement {
        p_h: p_h.max(0.0),
        p_v: p_v.max(0.0),
        atom_given_h: normalize(p_h, m_h),
        atom_given_v: normalize(p_v, m_v),
    })
}

/// Random mixed state `G G† / Tr(G G†)` from a 4×`rank` complex Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> JointState {
    let rank = rank.clamp(1, 4);
    let mut g = nalgebra::DMatrix::<C64>::zeros(4, rank);
    for x in g.iter_mut() {
        *x = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let gg = &g * g.adjoint();
    let tr = gg.trace();
    let mut rho = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            rho[(i, j)] = gg[(i, j)] / tr;
        }
    }
    JointState {
        rho: hermitian_part(&rho),
        atom: AtomBasis::Mapped,
        photon: PolBasis::Linear,
    }
}

/// `(m + m†)/2`, written so that the result is Hermitian bit for bit.
fn hermitian_part(m: &Matrix4<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        out[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in i + 1..4 {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

pub(crate) fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub(crate) fn hadamard() -> Matrix2<C64> {
    let s = FRAC_1_SQRT_2;
    Matrix2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fidelity_full, fidelity_lower_bound, haar_unitary, jones_hwp, Angle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_state_elements() {
        let b = bell_psi_plus();
        // ↑σ⁻ = slot (0,0) = 0, ↓σ⁺ = slot (1,1) = 3
        assert!((b.element(0, 0).re - 0.5).abs() < 1e-15);
        assert!((b.element(3, 3).re - 0.5).abs() < 1e-15);
        assert!((b.element(3, 0).re - 0.5).abs() < 1e-15);
        assert!((b.purity() - 1.0).abs() < 1e-14);
        let atom = b.atom_state();
        assert!((atom[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((atom[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(atom[(0, 1)].norm() < 1e-15);
        assert!((fidelity_full(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn werner_fidelity_matches_closed_form() {
        // brute-force oracle: overlap ⟨ψ|ρ|ψ⟩ with the explicit Bell vector
        let s = FRAC_1_SQRT_2;
        let psi = nalgebra::Vector4::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0));
        for k in 0..=20 {
            let p = k as f64 * 0.05;
            let w = werner_state(p).unwrap();
            let oracle = (psi.adjoint() * w.rho() * psi)[(0, 0)].re;
            let f = fidelity_full(&w).unwrap();
            assert!((f - oracle).abs() < 1e-12);
            assert!((f - (1.0 + 3.0 * p) / 4.0).abs() < 1e-12);
        }
        assert!((fidelity_full(&werner_state(0.9).unwrap()).unwrap() - 0.925).abs() < 1e-12);
        assert!(werner_state(1.2).is_err());
        assert!(werner_state(-0.1).is_err());
    }

    #[test]
    fn werner_lower_bound_equals_weight() {
        for p in [0.2, 0.5, 0.8] {
            let w = werner_state(p).unwrap();
            // oracle: analytic diagonals (1±p)/4 in both bases
            let even = (1.0 + p) / 4.0;
            let odd = (1.0 - p) / 4.0;
            for basis in [MeasurementBasis::Z, MeasurementBasis::X] {
                let t = w.diagonal_tomogram(basis);
                let expect = [even, odd, odd, even];
                for (a, b) in t.populations().iter().zip(expect) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            let (f, _) = fidelity_lower_bound(
                &w.diagonal_tomogram(MeasurementBasis::Z),
                &w.diagonal_tomogram(MeasurementBasis::X),
            )
            .unwrap();
            assert!((f - p).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_factors() {
        let b = bell_psi_plus();
        let same = dephase_atom(&b, 0.0, 110.0).unwrap();
        assert_eq!(same.rho(), b.rho());
        let d = dephase_atom(&b, 110.0, 110.0).unwrap();
        assert!((d.element(0, 3).re - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((d.element(0, 0).re - 0.5).abs() < 1e-15);
        let k = dephasing_factor(7.7, 110.0);
        assert!((k - 0.9951).abs() < 5e-5);
        assert!(1.0 - k < 0.01);
        assert!(dephase_atom(&b, -1.0, 1.0).is_err());
        assert!(dephase_atom(&b, 1.0, 0.0).is_err());
    }

    #[test]
    fn measurement_of_bell_state() {
        let b = bell_psi_plus();
        let m = measure_photon(&b, &[]).unwrap();
        assert!((m.p_h - 0.5).abs() < 1e-12 && (m.p_v - 0.5).abs() < 1e-12);
        for atom in [m.atom_given_h.unwrap(), m.atom_given_v.unwrap()] {
            let purity = (atom * atom).trace().re;
            assert!((purity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hwp45_swaps_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let rho = random_density_matrix(&mut rng, 2);
            let fiber = haar_unitary(&mut rng);
            let m0 = measure_photon(&rho, &[fiber]).unwrap();
            let m1 = measure_photon(&rho, &[fiber, jones_hwp(Angle::from_degrees(45.0))]).unwrap();
            assert!((m0.p_h - m1.p_v).abs() < 1e-12);
            assert!((m0.p_v - m1.p_h).abs() < 1e-12);
            assert!((m0.p_h + m0.p_v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_projector_in_chain() {
        let p = PolarizationOp::project_onto(&super::super::PhotonPol::h());
        assert!(measure_photon(&bell_psi_plus(), &[p]).is_err());
    }

    #[test]
    fn constructor_validates() {
        let mut m = Matrix4::<C64>::identity() * c(0.25, 0.0);
        assert!(JointState::new(m, AtomBasis::Mapped, PolBasis::Linear).is_ok());
        m[(0, 1)] = c(0.1, 0.0);
        assert!(JointState::new(m, AtomBasis::Mapped, PolBasis::Linear).is_err());
        let bad = Matrix4::<C64>::identity() * c(0.5, 0.0);
        assert!(JointState::new(bad, AtomBasis::Mapped, PolBasis::Linear).is_err());
        let mut neg = Matrix4::<C64>::zeros();
        neg[(0, 0)] = c(1.5, 0.0);
        neg[(1, 1)] = c(-0.5, 0.0);
        assert!(JointState::new(neg, AtomBasis::Mapped, PolBasis::Linear).is_err());
    }
}
