//! Complex 2×2 propagator algebra.
//!
//! A single pulse is parameterized as
//!
//! ```text
//! U(α, β) = [  ε e^{iα}          √(1−ε²) e^{iβ} ]
//!           [ −√(1−ε²) e^{−iβ}   ε e^{−iα}      ]
//! ```
//!
//! and a phase shift φ of the drive acts as `R†(φ) U R(φ)` with
//! `R(φ) = exp(−iφσz/2)`.

use std::ops::Mul;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for every unitarity check in the crate.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Below this modulus a diagonal (or off-diagonal) phase is unobservable and set to zero.
pub const PHASE_GAUGE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unitary2 {
    pub u11: C64,
    pub u12: C64,
    pub u21: C64,
    pub u22: C64,
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2 {
        u11: C64 { re: 1.0, im: 0.0 },
        u12: C64 { re: 0.0, im: 0.0 },
        u21: C64 { re: 0.0, im: 0.0 },
        u22: C64 { re: 1.0, im: 0.0 },
    };

    pub fn new(u11: C64, u12: C64, u21: C64, u22: C64) -> Self {
        Unitary2 { u11, u12, u21, u22 }
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Unitary2::new(a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), d)
    }

    pub fn dagger(&self) -> Self {
        Unitary2::new(
            self.u11.conj(),
            self.u21.conj(),
            self.u12.conj(),
            self.u22.conj(),
        )
    }

    pub fn det(&self) -> C64 {
        self.u11 * self.u22 - self.u12 * self.u21
    }

    pub fn scale(&self, c: C64) -> Self {
        Unitary2::new(self.u11 * c, self.u12 * c, self.u21 * c, self.u22 * c)
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.u11, self.u12, self.u21, self.u22]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Unitary2) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.dagger() * *self).max_abs_diff(&Unitary2::IDENTITY)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol && (self.det().norm() - 1.0).abs() <= tol
    }

    /// Distance to `other` after optimally removing a global phase.
    pub fn distance_up_to_phase(&self, other: &Unitary2) -> f64 {
        // Phase of the Hilbert–Schmidt overlap aligns the two matrices.
        let overlap: C64 = self
            .entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| b.conj() * a)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.max_abs_diff(&other.scale(phase))
    }

    pub fn apply(&self, v: &StateVector2) -> StateVector2 {
        StateVector2 {
            c1: self.u11 * v.c1 + self.u12 * v.c2,
            c2: self.u21 * v.c1 + self.u22 * v.c2,
        }
    }

    /// `1 − |u11|²`, the population moved out of the initial state.
    pub fn transition_probability(&self) -> f64 {
        (1.0 - self.u11.norm_sqr()).clamp(0.0, 1.0)
    }

    /// `exp(−i b·σ)` for a real 3-vector `b = (bx, by, bz)`.
    pub fn exp_su2(b: [f64; 3]) -> Self {
        let [bx, by, bz] = b;
        let norm = (bx * bx + by * by + bz * bz).sqrt();
        if norm == 0.0 {
            return Unitary2::IDENTITY;
        }
        let (s, c) = norm.sin_cos();
        let k = s / norm;
        Unitary2::new(
            C64::new(c, -k * bz),
            C64::new(-k * by, -k * bx),
            C64::new(k * by, -k * bx),
            C64::new(c, k * bz),
        )
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, b: Unitary2) -> Unitary2 {
        let a = self;
        Unitary2::new(
            a.u11 * b.u11 + a.u12 * b.u21,
            a.u11 * b.u12 + a.u12 * b.u22,
            a.u21 * b.u11 + a.u22 * b.u21,
            a.u21 * b.u12 + a.u22 * b.u22,
        )
    }
}

/// Single-pulse parameters `(ε, α, β)`; ε is validated into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    epsilon: f64,
    alpha: f64,
    beta: f64,
}

impl PulseParams {
    pub fn new(epsilon: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::domain("non-finite phase"));
        }
        Ok(PulseParams {
            epsilon,
            alpha,
            beta,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        PulseParams { alpha, ..self }
    }

    /// `β → β + φ`, the effect of a constant drive phase φ.
    pub fn shifted(self, phi: f64) -> Self {
        PulseParams {
            beta: self.beta + phi,
            ..self
        }
    }

    /// Single-pulse transition probability `1 − ε²`.
    pub fn transition_probability(&self) -> f64 {
        1.0 - self.epsilon * self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector2 {
    pub c1: C64,
    pub c2: C64,
}

impl StateVector2 {
    pub fn new(c1: C64, c2: C64) -> Result<Self> {
        let v = StateVector2 { c1, c2 };
        if (v.norm_sqr() - 1.0).abs() > UNITARITY_TOL {
            return Err(Error::Validation(format!(
                "state norm² {} differs from 1",
                v.norm_sqr()
            )));
        }
        Ok(v)
    }

    pub fn ground() -> Self {
        StateVector2 {
            c1: C64::new(1.0, 0.0),
            c2: C64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    /// `ρ12 = c1·c2*`.
    pub fn coherence(&self) -> C64 {
        self.c1 * self.c2.conj()
    }
}

pub fn make_propagator(p: &PulseParams) -> Unitary2 {
    let e = p.epsilon;
    let s = (1.0 - e * e).max(0.0).sqrt();
    Unitary2::new(
        C64::from_polar(e, p.alpha),
        C64::from_polar(s, p.beta),
        -C64::from_polar(s, -p.beta),
        C64::from_polar(e, -p.alpha),
    )
}

/// `R(φ) = exp(−iφσz/2) = diag(e^{−iφ/2}, e^{iφ/2})`.
pub fn phase_rotation(phi: f64) -> Unitary2 {
    Unitary2::diag(C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0))
}

/// `R†(φ) U R(φ)`: the propagator of the same pulse driven with an extra phase φ.
pub fn shift_phase(u: &Unitary2, phi: f64) -> Unitary2 {
    // Conjugation by a diagonal matrix only rephases the off-diagonals.
    let w = C64::from_polar(1.0, phi);
    Unitary2::new(u.u11, u.u12 * w, u.u21 * w.conj(), u.u22)
}

/// Inverse of [`make_propagator`] modulo a global phase.
///
/// The global phase is fixed by `det = 1`; `α` is set to zero when ε is
/// numerically zero and `β` likewise when `√(1−ε²)` vanishes.
pub fn extract_params(u: &Unitary2) -> Result<PulseParams> {
    if !u.is_unitary(UNITARITY_TOL * 100.0) {
        return Err(Error::Validation(format!(
            "matrix is not unitary (defect {:.3e})",
            u.unitarity_defect()
        )));
    }
    let g = u.det().sqrt();
    let v = u.scale(g.conj() / g.norm());
    let eps = v.u11.norm().min(1.0);
    let s = v.u12.norm();
    let alpha = if eps < PHASE_GAUGE_EPS { 0.0 } else { v.u11.arg() };
    let beta = if s < PHASE_GAUGE_EPS { 0.0 } else { v.u12.arg() };
    PulseParams::new(eps, alpha, beta)
}

/// `e^{iθ}`.
pub(crate) fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
