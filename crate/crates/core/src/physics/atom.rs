//! Five-level ground-state model of the atom and the pulses acting on it.

use nalgebra::{Matrix2, SMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{MapErrorModel, NodeConfig};
use crate::quantum::{c, AtomBasis, AtomLevel, C64};

/// Ground-state sublevels used by the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// `|1, -1⟩`
    Down,
    /// `|1, +1⟩`
    Up,
    /// `|2, +1⟩`
    UpPrime,
    /// `|1, 0⟩`, the excitation start state.
    ClockLower,
    /// `|2, 0⟩`
    ClockUpper,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::Down,
        Level::Up,
        Level::UpPrime,
        Level::ClockLower,
        Level::ClockUpper,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn atom_level(self) -> AtomLevel {
        match self {
            Level::Down => AtomLevel::DOWN,
            Level::Up => AtomLevel::UP,
            Level::UpPrime => AtomLevel::UP_PRIME,
            Level::ClockLower => AtomLevel::CLOCK_LOWER,
            Level::ClockUpper => AtomLevel::CLOCK_UPPER,
        }
    }
}

type Matrix5 = SMatrix<C64, 5, 5>;

/// Density matrix over the five [`Level`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomState {
    rho: Matrix5,
}

impl AtomState {
    pub fn pure(level: Level) -> Self {
        let mut rho = Matrix5::zeros();
        rho[(level.index(), level.index())] = c(1.0, 0.0);
        AtomState { rho }
    }

    /// Incoherent mixture of levels; weights must sum to one.
    pub fn mixture(weights: &[(Level, f64)]) -> Self {
        let mut rho = Matrix5::zeros();
        for &(level, w) in weights {
            rho[(level.index(), level.index())] += c(w, 0.0);
        }
        AtomState { rho }
    }

    /// Embed a qubit density matrix; slot 0 is ↑ (bare) or ↑' (mapped), slot 1 is ↓.
    pub fn from_qubit(q: &Matrix2<C64>, basis: AtomBasis) -> Self {
        let upper = match basis {
            AtomBasis::Bare => Level::Up,
            AtomBasis::Mapped => Level::UpPrime,
        };
        let idx = [upper.index(), Level::Down.index()];
        let mut rho = Matrix5::zeros();
        for a in 0..2 {
            for b in 0..2 {
                rho[(idx[a], idx[b])] = q[(a, b)];
            }
        }
        AtomState { rho }
    }

    /// The qubit block in the given basis (not renormalized).
    pub fn qubit(&self, basis: AtomBasis) -> Matrix2<C64> {
        let upper = match basis {
            AtomBasis::Bare => Level::Up,
            AtomBasis::Mapped => Level::UpPrime,
        };
        let idx = [upper.index(), Level::Down.index()];
        Matrix2::from_fn(|a, b| self.rho[(idx[a], idx[b])])
    }

    pub fn population(&self, level: Level) -> f64 {
        self.rho[(level.index(), level.index())].re
    }

    pub fn coherence(&self, a: Level, b: Level) -> C64 {
        self.rho[(a.index(), b.index())]
    }

    /// Total population in the `f = 2` manifold.
    pub fn upper_manifold_population(&self) -> f64 {
        Level::ALL
            .iter()
            .filter(|l| l.atom_level().is_upper_ground())
            .map(|&l| self.population(l))
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    fn conjugate(&mut self, a: Level, b: Level, u: &Matrix2<C64>) {
        let mut full = Matrix5::identity();
        let idx = [a.index(), b.index()];
        for i in 0..2 {
            for j in 0..2 {
                full[(idx[i], idx[j])] = u[(i, j)];
            }
        }
        self.rho = full * self.rho * full.adjoint();
    }

    /// Resonant rotation by `area` about an equatorial axis at `phase` on the
    /// pair `(a, b)`.
    pub fn rotate(&mut self, a: Level, b: Level, area: f64, phase: f64) {
        self.conjugate(a, b, &two_level_rotation(area, phase, 0.0));
    }

    /// Rotation with a detuning expressed as a fraction of the Rabi frequency.
    pub fn rotate_detuned(&mut self, a: Level, b: Level, area: f64, phase: f64, detuning: f64) {
        self.conjugate(a, b, &two_level_rotation(area, phase, detuning));
    }

    /// Multiply the `(a, b)` coherence by `factor`.
    pub fn dephase(&mut self, a: Level, b: Level, factor: f64) {
        let (i, j) = (a.index(), b.index());
        self.rho[(i, j)] *= c(factor, 0.0);
        self.rho[(j, i)] *= c(factor, 0.0);
    }
}

/// `exp(-i θ/2 (cos φ σx + sin φ σy + Δ σz)/√(1+Δ²)·√(1+Δ²))` on a pair,
/// i.e. Rabi area `θ` with detuning `Δ` in units of the Rabi frequency.
pub fn two_level_rotation(area: f64, phase: f64, detuning: f64) -> Matrix2<C64> {
    let g = (1.0 + detuning * detuning).sqrt();
    let half = 0.5 * area * g;
    let (s, co) = half.sin_cos();
    let (nx, ny, nz) = (phase.cos() / g, phase.sin() / g, detuning / g);
    let i = c(0.0, 1.0);
    Matrix2::new(
        c(co, 0.0) - i * s * nz,
        -i * s * c(nx, -ny),
        -i * s * c(nx, ny),
        c(co, 0.0) + i * s * nz,
    )
}

/// Detuning (in Rabi units) at which a π pulse transfers `fidelity` of the
/// population.
pub fn detuning_for_transfer(fidelity: f64) -> f64 {
    let transfer = |x: f64| {
        let g2 = 1.0 + x * x;
        (0.5 * std::f64::consts::PI * g2.sqrt()).sin().powi(2) / g2
    };
    // transfer falls monotonically from 1 to 0 on [0, √3]
    let (mut lo, mut hi) = (0.0, 3f64.sqrt());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if transfer(mid) > fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Phase at which a π pulse from `a` lands in `b` with a real, positive
/// amplitude, so a perfect pulse is a pure relabeling.
const RELABEL_PHASE: f64 = std::f64::consts::FRAC_PI_2;

/// Axis of the two-photon rotation. A π/2 pulse about it turns the
/// `(↑', ↓)` measurement into the Hadamard basis.
pub const ROTATION_PHASE: f64 = -std::f64::consts::FRAC_PI_2;

/// Optical pumping into `|1, 0⟩`; failures land in `|1, ±1⟩` with equal weight.
pub fn optical_pump<R: Rng + ?Sized>(rng: &mut R, config: &NodeConfig) -> AtomState {
    if rng.random::<f64>() < config.errors.pump_fidelity {
        AtomState::pure(Level::ClockLower)
    } else if rng.random::<bool>() {
        AtomState::pure(Level::Up)
    } else {
        AtomState::pure(Level::Down)
    }
}

/// Microwave π pulse ↑ → ↑'. ↓ is far detuned and left alone.
pub fn microwave_pi_map<R: Rng + ?Sized>(
    state: &AtomState,
    config: &NodeConfig,
    rng: &mut R,
) -> AtomState {
    let f = config.errors.map_fidelity_m1;
    let mut out = state.clone();
    let pi = std::f64::consts::PI;
    match config.errors.map_error_model {
        MapErrorModel::Incoherent => {
            if f >= 1.0 || rng.random::<f64>() < f {
                out.rotate(Level::Up, Level::UpPrime, pi, RELABEL_PHASE);
            }
        }
        MapErrorModel::Detuning => {
            let delta = detuning_for_transfer(f);
            out.rotate_detuned(Level::Up, Level::UpPrime, pi, RELABEL_PHASE, delta);
        }
    }
    out
}

/// Two-photon Raman rotation on `(↑', ↓)` with the calibrated area error.
pub fn two_photon_rotation(state: &AtomState, pulse_area: f64, config: &NodeConfig) -> AtomState {
    let mut out = state.clone();
    let area = pulse_area * (1.0 + config.rotation_area_error());
    out.rotate(Level::UpPrime, Level::Down, area, ROTATION_PHASE);
    out
}

/// Push out atoms in `f = 2`. Each manifold is handled correctly with
/// probability `blowaway_fidelity`.
pub fn blow_away<R: Rng + ?Sized>(state: &AtomState, config: &NodeConfig, rng: &mut R) -> bool {
    let in_upper = rng.random::<f64>() < state.upper_manifold_population();
    let correct = rng.random::<f64>() < config.errors.blowaway_fidelity;
    in_upper != correct
}

/// Exponential trap survival over `elapsed_s`.
pub fn atom_survival<R: Rng + ?Sized>(elapsed_s: f64, config: &NodeConfig, rng: &mut R) -> bool {
    let p = (-elapsed_s.max(0.0) / config.node.trap_lifetime_s).exp();
    p >= 1.0 || rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn rotation_is_unitary_and_transfers() {
        for (area, phase, d) in [(PI, 0.0, 0.0), (0.3, 1.1, 0.4), (2.0, -0.5, 1.5)] {
            let u = two_level_rotation(area, phase, d);
            let err = u * u.adjoint() - Matrix2::identity();
            assert!(max_abs(err.iter()) < 1e-14);
            let transfer = u[(1, 0)].norm_sqr();
            let g2 = 1.0 + d * d;
            let expect = (0.5 * area * g2.sqrt()).sin().powi(2) / g2;
            assert!((transfer - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn pi_pulse_on_up_prime() {
        let cfg = NodeConfig::ideal();
        let s = two_photon_rotation(&AtomState::pure(Level::UpPrime), PI, &cfg);
        assert!((s.population(Level::Down) - 1.0).abs() < 1e-14);
        let s = two_photon_rotation(&AtomState::pure(Level::UpPrime), PI / 2.0, &cfg);
        assert!((s.population(Level::Down) - 0.5).abs() < 1e-14);
        assert!((s.population(Level::UpPrime) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn calibrated_area_error_gives_transfer() {
        let cfg = NodeConfig::default();
        let s = two_photon_rotation(&AtomState::pure(Level::UpPrime), PI, &cfg);
        assert!((s.population(Level::Down) - 0.96).abs() < 1e-12);
    }

    #[test]
    fn half_pi_is_hadamard_measurement() {
        // |+⟩ = (↑' + ↓)/√2 must end in ↑'
        let q = Matrix2::from_element(c(0.5, 0.0));
        let s = AtomState::from_qubit(&q, AtomBasis::Mapped);
        let s = two_photon_rotation(&s, PI / 2.0, &NodeConfig::ideal());
        assert!((s.population(Level::UpPrime) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ideal_map_is_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = Matrix2::new(c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.0));
        let s = AtomState::from_qubit(&q, AtomBasis::Bare);
        let m = microwave_pi_map(&s, &NodeConfig::ideal(), &mut rng);
        assert!(max_abs((m.qubit(AtomBasis::Mapped) - q).iter()) < 1e-14);
    }

    #[test]
    fn incoherent_map_transfer_rate() {
        let cfg = NodeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let up = AtomState::pure(Level::Up);
        let hits = (0..n)
            .filter(|_| microwave_pi_map(&up, &cfg, &mut rng).population(Level::UpPrime) > 0.5)
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.96).abs() < 4.0 * (0.96f64 * 0.04 / n as f64).sqrt());
    }

    #[test]
    fn detuned_map_transfer() {
        let mut cfg = NodeConfig::default();
        cfg.errors.map_error_model = MapErrorModel::Detuning;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = microwave_pi_map(&AtomState::pure(Level::Up), &cfg, &mut rng);
        assert!((m.population(Level::UpPrime) - 0.96).abs() < 1e-12);
        assert!((detuning_for_transfer(1.0)).abs() < 1e-12);
    }

    #[test]
    fn pumping_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..1000)
            .all(|_| optical_pump(&mut rng, &NodeConfig::ideal()).population(Level::ClockLower) == 1.0));
        let cfg = NodeConfig::default();
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let s = optical_pump(&mut rng, &cfg);
            if s.population(Level::ClockLower) == 1.0 {
                counts[0] += 1;
            } else if s.population(Level::Up) == 1.0 {
                counts[1] += 1;
            } else {
                counts[2] += 1;
            }
        }
        let p0 = counts[0] as f64 / n as f64;
        assert!((p0 - 0.987).abs() < 4.0 * (0.987f64 * 0.013 / n as f64).sqrt());
        assert!((counts[1] as f64 - counts[2] as f64).abs() < 4.0 * ((counts[1] + counts[2]) as f64).sqrt());
    }

    #[test]
    fn blow_away_symmetric_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ideal = NodeConfig::ideal();
        assert!(!blow_away(&AtomState::pure(Level::UpPrime), &ideal, &mut rng));
        assert!(blow_away(&AtomState::pure(Level::Down), &ideal, &mut rng));
        let cfg = NodeConfig::default();
        let n = 200_000;
        let kept_upper = (0..n)
            .filter(|_| blow_away(&AtomState::pure(Level::UpPrime), &cfg, &mut rng))
            .count() as f64
            / n as f64;
        let lost_lower = (0..n)
            .filter(|_| !blow_away(&AtomState::pure(Level::Down), &cfg, &mut rng))
            .count() as f64
            / n as f64;
        let tol = 4.0 * (0.008f64 / n as f64).sqrt();
        assert!((kept_upper - 0.008).abs() < tol);
        assert!((lost_lower - 0.008).abs() < tol);
    }

    #[test]
    fn survival_probability() {
        let cfg = NodeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!((0..1000).all(|_| atom_survival(0.0, &cfg, &mut rng)));
        let n = 400_000;
        let lost = (0..n).filter(|_| !atom_survival(0.09, &cfg, &mut rng)).count() as f64 / n as f64;
        let expect = 1.0 - (-0.045f64).exp();
        assert!((lost - expect).abs() < 4.0 * (expect / n as f64).sqrt());
    }

    #[test]
    fn dephasing_scales_coherence() {
        let q = Matrix2::from_element(c(0.5, 0.0));
        let mut s = AtomState::from_qubit(&q, AtomBasis::Bare);
        s.dephase(Level::Up, Level::Down, 0.8);
        assert!((s.coherence(Level::Up, Level::Down).re - 0.4).abs() < 1e-15);
        assert!((s.coherence(Level::Down, Level::Up).re - 0.4).abs() < 1e-15);
        assert!((s.trace() - 1.0).abs() < 1e-15);
    }
}
