use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-structure manifold of a ⁸⁷Rb level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    Ground5S12,
    Excited5P12,
    Excited5P32,
}

/// A hyperfine Zeeman sublevel `|f, m_f⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomLevel {
    f: u8,
    m_f: i8,
    manifold: Manifold,
}

impl AtomLevel {
    /// `|f=1, m_f=-1⟩`, the ↓ qubit state.
    pub const DOWN: AtomLevel = AtomLevel::ground(1, -1);
    /// `|f=1, m_f=+1⟩`, the ↑ qubit state before mapping.
    pub const UP: AtomLevel = AtomLevel::ground(1, 1);
    /// `|f=2, m_f=+1⟩`, the ↑' qubit state after mapping.
    pub const UP_PRIME: AtomLevel = AtomLevel::ground(2, 1);
    /// `|f=1, m_f=0⟩`, lower clock state and the excitation start state.
    pub const CLOCK_LOWER: AtomLevel = AtomLevel::ground(1, 0);
    /// `|f=2, m_f=0⟩`, upper clock state.
    pub const CLOCK_UPPER: AtomLevel = AtomLevel::ground(2, 0);

    const fn ground(f: u8, m_f: i8) -> Self {
        AtomLevel {
            f,
            m_f,
            manifold: Manifold::Ground5S12,
        }
    }

    pub fn new(f: u8, m_f: i8, manifold: Manifold) -> Result<Self> {
        if f > 2 {
            return Err(Error::InvalidArgument(format!(
                "hyperfine number f={f} outside 0..=2"
            )));
        }
        if m_f.unsigned_abs() > f {
            return Err(Error::InvalidArgument(format!(
                "|m_f|={} exceeds f={f}",
                m_f.unsigned_abs()
            )));
        }
        Ok(AtomLevel { f, m_f, manifold })
    }

    pub fn f(&self) -> u8 {
        self.f
    }

    pub fn m_f(&self) -> i8 {
        self.m_f
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    /// True for ground-state levels in the upper hyperfine manifold, which a
    /// blow-away pulse removes.
    pub fn is_upper_ground(&self) -> bool {
        self.manifold == Manifold::Ground5S12 && self.f == 2
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|f={}, m_f={:+}⟩", self.f, self.m_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_levels() {
        assert_eq!((AtomLevel::DOWN.f(), AtomLevel::DOWN.m_f()), (1, -1));
        assert_eq!((AtomLevel::UP.f(), AtomLevel::UP.m_f()), (1, 1));
        assert_eq!((AtomLevel::UP_PRIME.f(), AtomLevel::UP_PRIME.m_f()), (2, 1));
        assert!(AtomLevel::UP_PRIME.is_upper_ground());
        assert!(!AtomLevel::DOWN.is_upper_ground());
        assert!(AtomLevel::CLOCK_UPPER.is_upper_ground());
    }

    #[test]
    fn rejects_bad_projection() {
        assert!(AtomLevel::new(1, 2, Manifold::Ground5S12).is_err());
        assert!(AtomLevel::new(3, 0, Manifold::Excited5P32).is_err());
        assert!(AtomLevel::new(0, 0, Manifold::Excited5P32).is_ok());
    }
}
