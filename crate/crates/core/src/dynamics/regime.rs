//! Eigenvalue classification of the self-coupled damped flow
//! `x'' + x' + w x = 0`, i.e. the planar system `(x, p)' = [[0, 1], [-w, -1]] (x, p)`.
//!
//! The characteristic roots are `lambda = -1/2 +- sqrt(1/4 - w)`; both real
//! parts are negative exactly when `w > 0`, the system is a saddle for
//! `w < 0`, and `w = 0` / `w = 1/4` sit on the boundary between regimes.
//! Compressive control segments live in the attractor range `0 < w < 1/4`
//! where the slow eigenvalue governs the contraction rate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Qualitative phase-plane behaviour of `x'' + x' + w x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeClass {
    /// `0 < w < 1/4`: two negative real eigenvalues, monotone contraction.
    Attractor,
    /// `w > 1/4`: complex pair with negative real part, decaying spirals.
    DampedOscillator,
    /// `w < 0`: one positive and one negative real eigenvalue.
    Saddle,
    /// `w = 0`: a line of equilibria, eigenvalues `0` and `-1`.
    Neutral,
    /// `w = 1/4`: repeated eigenvalue `-1/2`.
    CriticallyDamped,
}

/// Eigenvalues and classification for one restoring coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub w: f64,
    pub eigenvalues: [Complex64; 2],
    pub class: RegimeClass,
}

/// Classifies `x'' + x' + w x = 0` and returns both eigenvalues
/// (`-1/2 +- sqrt(1/4 - w)` as a complex pair when `w > 1/4`).
pub fn eigen_regime(w: f64) -> RegimeReport {
    let disc = 0.25 - w;
    let eigenvalues = if disc >= 0.0 {
        let r = disc.sqrt();
        [Complex64::new(-0.5 + r, 0.0), Complex64::new(-0.5 - r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(-0.5, r), Complex64::new(-0.5, -r)]
    };
    let class = if w == 0.0 {
        RegimeClass::Neutral
    } else if w == 0.25 {
        RegimeClass::CriticallyDamped
    } else if w < 0.0 {
        RegimeClass::Saddle
    } else if w < 0.25 {
        RegimeClass::Attractor
    } else {
        RegimeClass::DampedOscillator
    };
    RegimeReport { w, eigenvalues, class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classification_covers_all_ranges() {
        assert_eq!(eigen_regime(0.2).class, RegimeClass::Attractor);
        assert_eq!(eigen_regime(0.5).class, RegimeClass::DampedOscillator);
        assert_eq!(eigen_regime(-1.0).class, RegimeClass::Saddle);
        assert_eq!(eigen_regime(0.0).class, RegimeClass::Neutral);
        assert_eq!(eigen_regime(0.25).class, RegimeClass::CriticallyDamped);
    }

    #[test]
    fn eigenvalues_satisfy_characteristic_polynomial() {
        for &w in &[0.2, 0.5, -1.0, 0.0, 0.25, 3.7] {
            for lam in eigen_regime(w).eigenvalues {
                let residual = lam * lam + lam + Complex64::new(w, 0.0);
                assert_abs_diff_eq!(residual.norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn attractor_slow_eigenvalue_drives_contraction() {
        // w = 0.2: slow root -1/2 + sqrt(0.05).
        let rep = eigen_regime(0.2);
        let slow = rep.eigenvalues[0].re;
        assert_abs_diff_eq!(slow, -0.5 + 0.05f64.sqrt(), epsilon = 1e-15);
        assert!(slow < 0.0 && slow > rep.eigenvalues[1].re);
    }
}
