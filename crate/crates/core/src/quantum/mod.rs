//! Finite-dimensional quantum toolkit for the atom–photon pair.
//!
//! The joint system is one atomic qubit times one photon polarization qubit.
//! Everything is held in a fixed "slot" ordering so that the target Bell
//! state is always `(|00⟩ + |11⟩)/√2`:
//!
//! | slot | atom (bare / mapped) | photon (circular / linear) |
//! |------|----------------------|----------------------------|
//! | 0    | ↑ / ↑'               | σ⁻ / H                     |
//! | 1    | ↓ / ↓                | σ⁺ / V                     |
//!
//! Joint index is `2 * atom_slot + photon_slot`, so the diagonal order
//! `(↑'H, ↑'V, ↓H, ↓V)` of a [`DiagonalTomogram`] is simply `0..4`.

mod atom;
mod fidelity;
mod jones;
mod state;

pub use atom::{AtomLevel, Manifold};
pub use fidelity::{fidelity_full, fidelity_lower_bound, DiagonalTomogram, MeasurementBasis};
pub use jones::{
    circular_to_linear, haar_unitary, jones_hwp, jones_qwp, rotation, Angle, OpKind, PhotonPol,
    PolBasis, PolarizationOp,
};
pub use state::{
    bell_psi_plus, dephase_atom, dephasing_factor, measure_photon, random_density_matrix,
    werner_state, AtomBasis, JointState, PhotonMeasurement,
};
pub(crate) use state::hadamard;

pub use num_complex::Complex64 as C64;

/// Tolerance for Hermiticity, trace and unitarity checks.
pub const EXACT_TOL: f64 = 1e-12;

/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus of a complex matrix.
pub(crate) fn max_abs<'a>(m: impl IntoIterator<Item = &'a C64>) -> f64 {
    m.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
