//! Power-series expansion of the composite diagonal element.
//!
//! Dropping the outer phase rotations, the composite propagator's population
//! transfer is fixed by
//!
//! ```text
//! Ũ = U0 R(χ_{n−2} + α̃) ··· U0 R(χ_1 + α̃) U0 R(α̃) U0,   U0 = U(0, 0)
//! ```
//!
//! with `χ_k = Φ_1 + … + Φ_k` and `α̃ = φ2 − 2α`. Each entry of `U0` is a
//! power series in ε and each `R` contributes `e^{∓iα̃/2}`, so `Ũ11` is a
//! truncated polynomial in ε whose coefficients are finite sums of
//! half-integer α̃ harmonics. Harmonic indices are stored doubled.

mod search;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::{compose_radians, phases_from_law, CompositeSequence, PhaseLaw};
use crate::su2::{cis, PulseParams};

pub use search::{search_phases, canonicalize, Candidate, SearchConfig, SearchOutcome};

/// Largest ε power `expand_u11` will track.
pub const MAX_TRUNCATION: usize = 32;
/// Amplitudes below this are treated as exact zeros.
pub const PRUNE_EPS: f64 = 1e-14;
/// A coefficient counts as nullified when every harmonic is below this.
pub const NULLIFY_TOL: f64 = 1e-10;
/// Analytic floor of the minimized first-order magnitude for three pulses.
pub const FIRST_ORDER_FLOOR: f64 = 1.0;

/// Truncated polynomial in ε with α̃-harmonic coefficients.
///
/// Dense storage: `data[j * width + (k + max_harmonic)]` is the amplitude of
/// `ε^j e^{i k α̃ / 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPolynomial {
    truncation: usize,
    max_harmonic: i32,
    data: Vec<C64>,
}

impl HarmonicPolynomial {
    pub fn zero(truncation: usize, max_harmonic: i32) -> Self {
        let width = (2 * max_harmonic + 1) as usize;
        HarmonicPolynomial {
            truncation,
            max_harmonic,
            data: vec![C64::new(0.0, 0.0); (truncation + 1) * width],
        }
    }

    fn width(&self) -> usize {
        (2 * self.max_harmonic + 1) as usize
    }

    fn idx(&self, j: usize, k2: i32) -> usize {
        j * self.width() + (k2 + self.max_harmonic) as usize
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Amplitude of `ε^j e^{i (k2/2) α̃}`; zero outside the stored range.
    pub fn coefficient(&self, j: usize, k2: i32) -> C64 {
        if j > self.truncation || k2.abs() > self.max_harmonic {
            return C64::new(0.0, 0.0);
        }
        self.data[self.idx(j, k2)]
    }

    fn set(&mut self, j: usize, k2: i32, v: C64) {
        let i = self.idx(j, k2);
        self.data[i] = v;
    }

    /// Nonzero terms `(j, k2, amplitude)` after pruning, ordered by `j` then `k2`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, i32, C64)> + '_ {
        (0..=self.truncation).flat_map(move |j| {
            (-self.max_harmonic..=self.max_harmonic).filter_map(move |k2| {
                let a = self.coefficient(j, k2);
                (a.norm() >= PRUNE_EPS).then_some((j, k2, a))
            })
        })
    }

    /// Surviving harmonics of the ε^j coefficient.
    pub fn order(&self, j: usize) -> Vec<(i32, C64)> {
        self.terms()
            .filter(|&(jj, _, _)| jj == j)
            .map(|(_, k, a)| (k, a))
            .collect()
    }

    pub fn max_harmonic_magnitude(&self, j: usize) -> f64 {
        self.order(j).iter().map(|(_, a)| a.norm()).fold(0.0, f64::max)
    }

    /// `Σ_k |a_{jk}|²`, the α̃-average of `|c_j(α̃)|²`.
    pub fn order_power(&self, j: usize) -> f64 {
        if j > self.truncation {
            return 0.0;
        }
        (-self.max_harmonic..=self.max_harmonic)
            .map(|k| self.coefficient(j, k).norm_sqr())
            .sum()
    }

    /// `c_j(α̃)`.
    pub fn order_at(&self, j: usize, alpha_tilde: f64) -> C64 {
        (-self.max_harmonic..=self.max_harmonic)
            .map(|k| self.coefficient(j, k) * cis(k as f64 * alpha_tilde / 2.0))
            .sum()
    }

    /// `max_α̃ |c_j(α̃)|`, by a dense scan refined with golden-section search.
    pub fn sup_over_alpha(&self, j: usize) -> f64 {
        let f = |a: f64| self.order_at(j, a).norm();
        // Harmonics are half-integer, so the period in α̃ is 4π.
        let grid = 2048;
        let h = 4.0 * PI / grid as f64;
        let (best_i, _) = (0..grid)
            .map(|i| (i, f(i as f64 * h)))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let (mut a, mut b) = ((best_i as f64 - 1.0) * h, (best_i as f64 + 1.0) * h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f((a + b) / 2.0).max(f(best_i as f64 * h))
    }

    /// Value at a point; equals `Ũ11(ε, α̃)` up to the truncation error.
    pub fn evaluate(&self, eps: f64, alpha_tilde: f64) -> C64 {
        (0..=self.truncation)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, j| acc * eps + self.order_at(j, alpha_tilde))
    }

    /// `self ← self · c · e^{i (dk/2) α̃}`.
    fn rotate(&mut self, c: C64, dk: i32) {
        let mut out = HarmonicPolynomial::zero(self.truncation, self.max_harmonic);
        for j in 0..=self.truncation {
            for k in -self.max_harmonic..=self.max_harmonic {
                let a = self.coefficient(j, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let kk = k + dk;
                assert!(kk.abs() <= self.max_harmonic, "harmonic range exceeded");
                out.set(j, kk, a * c);
            }
        }
        *self = out;
    }

    /// `self · s(ε)` for a real ε-series `s` (coefficients by power).
    fn mul_series(&self, s: &[f64]) -> Self {
        let mut out = HarmonicPolynomial::zero(self.truncation, self.max_harmonic);
        for j in 0..=self.truncation {
            for k in -self.max_harmonic..=self.max_harmonic {
                let a = self.coefficient(j, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (p, &sp) in s.iter().enumerate() {
                    if j + p > self.truncation {
                        break;
                    }
                    if sp == 0.0 {
                        continue;
                    }
                    let i = out.idx(j + p, k);
                    out.data[i] += a * sp;
                }
            }
        }
        out
    }

    fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&o.data) {
            *a += b;
        }
        out
    }

    fn neg(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|a| *a = -*a);
        out
    }
}

/// Coefficients of `√(1 − ε²)` up to `ε^truncation`.
fn sqrt_one_minus_eps2(truncation: usize) -> Vec<f64> {
    let mut s = vec![0.0; truncation + 1];
    let mut c = 1.0;
    for k in 0..=truncation / 2 {
        if k > 0 {
            c *= (k as f64 - 1.5) / k as f64;
        }
        s[2 * k] = c;
    }
    s
}

/// Prefix sums `χ_k = Φ_1 + … + Φ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiPhases {
    pub chi: Vec<f64>,
}

impl ChiPhases {
    pub fn from_big_phi(big_phi: &[f64]) -> Self {
        let chi = big_phi
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        ChiPhases { chi }
    }

    /// Inverse map back to Φ.
    pub fn big_phi(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.chi
            .iter()
            .map(|&c| {
                let d = c - prev;
                prev = c;
                d
            })
            .collect()
    }
}

/// Symbolic `Ũ11` of the n-pulse sequence with second differences `big_phi`.
pub fn expand_u11(big_phi: &[f64], truncation: usize) -> Result<HarmonicPolynomial> {
    if truncation == 0 {
        return Err(Error::domain("truncation must be at least 1"));
    }
    if truncation > MAX_TRUNCATION {
        return Err(Error::Resource(format!(
            "truncation {truncation} exceeds cap {MAX_TRUNCATION}"
        )));
    }
    let n = big_phi.len() + 2;
    let max_harmonic = (n - 1) as i32;
    let s = sqrt_one_minus_eps2(truncation);
    let mut eps = vec![0.0; truncation + 1];
    eps[1] = 1.0;

    let mut one = HarmonicPolynomial::zero(truncation, max_harmonic);
    one.set(0, 0, C64::new(1.0, 0.0));
    // v = U0 · e1 = (ε, −s)
    let mut v1 = one.mul_series(&eps);
    let mut v2 = one.mul_series(&s).neg();

    let chi = std::iter::once(0.0).chain(ChiPhases::from_big_phi(big_phi).chi);
    for c in chi {
        // R(χ + α̃)
        v1.rotate(cis(-c / 2.0), -1);
        v2.rotate(cis(c / 2.0), 1);
        // U0 = [[ε, s], [−s, ε]]
        let n1 = v1.mul_series(&eps).add(&v2.mul_series(&s));
        let n2 = v1.mul_series(&s).neg().add(&v2.mul_series(&eps));
        v1 = n1;
        v2 = n2;
    }
    Ok(v1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub n: usize,
    pub claimed_j0: usize,
    pub j0_achieved: usize,
    /// `(j, max harmonic magnitude of c_j)` for `j = 1..=truncation`.
    pub residuals: Vec<(usize, f64)>,
    /// `max_α̃ |c_1(α̃)|`.
    pub minimized_first_order: f64,
    pub passed: bool,
}

impl UniversalityReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("n: {}\n", self.n));
        s.push_str(&format!("claimed_j0: {}\n", self.claimed_j0));
        s.push_str(&format!("j0_achieved: {}\n", self.j0_achieved));
        s.push_str(&format!(
            "minimized_first_order: {:.12e}\n",
            self.minimized_first_order
        ));
        for (j, r) in &self.residuals {
            s.push_str(&format!("residual_{j}: {r:.6e}\n"));
        }
        s.push_str(&format!(
            "result: {}\n",
            if self.passed { "pass" } else { "fail" }
        ));
        s
    }
}

/// Check that `c_j` vanishes for every `j ≤ claimed_j0`.
///
/// `claimed_j0 = 0` means nothing is nullified; the first-order magnitude
/// must then sit at its analytic floor of 1.
pub fn verify_universal(big_phi: &[f64], claimed_j0: usize) -> Result<UniversalityReport> {
    let truncation = (2 * claimed_j0 + 3).min(MAX_TRUNCATION);
    let poly = expand_u11(big_phi, truncation)?;
    let residuals: Vec<(usize, f64)> = (1..=truncation)
        .map(|j| (j, poly.max_harmonic_magnitude(j)))
        .collect();
    let j0_achieved = residuals
        .iter()
        .take_while(|(_, r)| *r < NULLIFY_TOL)
        .count();
    let minimized_first_order = poly.sup_over_alpha(1);
    let passed = if claimed_j0 == 0 {
        (minimized_first_order - FIRST_ORDER_FLOOR).abs() < NULLIFY_TOL
    } else {
        j0_achieved >= claimed_j0
    };
    Ok(UniversalityReport {
        n: big_phi.len() + 2,
        claimed_j0,
        j0_achieved,
        residuals,
        minimized_first_order,
        passed,
    })
}

/// Grid points in α for the brute-force worst case.
pub const ORACLE_ALPHA_POINTS: usize = 720;

/// `max_α |U11|²` of the composite product at single-pulse error ε (β = 0).
pub fn worst_infidelity(phases: &[f64], eps: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..ORACLE_ALPHA_POINTS {
        let alpha = 2.0 * PI * i as f64 / ORACLE_ALPHA_POINTS as f64;
        let p = PulseParams::new(eps, alpha, 0.0)?;
        worst = worst.max(compose_radians(phases, &p).u11.norm_sqr());
    }
    Ok(worst)
}

/// Log–log slope of worst-case infidelity against ε, by direct matrix products.
///
/// Returns `+∞` when every infidelity is exactly zero.
pub fn oracle_scaling(seq: &CompositeSequence, eps_grid: &[f64]) -> Result<f64> {
    if eps_grid.len() < 4 {
        return Err(Error::domain("oracle_scaling needs at least 4 ε values"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e <= 0.2)) {
        return Err(Error::domain("ε values must lie in (0, 0.2]"));
    }
    let phases = seq.radians();
    let mut pts = Vec::with_capacity(eps_grid.len());
    for &e in eps_grid {
        let inf = worst_infidelity(&phases, e)?;
        if inf > 0.0 {
            pts.push((e.ln(), inf.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(f64::INFINITY);
    }
    Ok(least_squares_slope(&pts))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest `| |U11|(φ2+δ, α) − |U11|(φ2, α−δ/2) |` over random `(ε, α, β, δ)`.
pub fn phi2_alpha_equivalence(law: &PhaseLaw, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::domain("samples must be at least 1"));
    }
    let big = law.big_phi_radians();
    let phi2 = law.phi2().radians();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let eps: f64 = rng.random_range(0.0..=1.0);
        let alpha = rng.random_range(-PI..PI);
        let beta = rng.random_range(-PI..PI);
        let delta = rng.random_range(-PI..PI);
        let shifted = phases_from_law(&PhaseLaw::from_radians(&big, phi2 + delta)?).radians();
        let base = phases_from_law(&PhaseLaw::from_radians(&big, phi2)?).radians();
        let p = PulseParams::new(eps, alpha, beta)?;
        let a = compose_radians(&shifted, &p).u11.norm();
        let b = compose_radians(&base, &p.with_alpha(alpha - delta / 2.0)).u11.norm();
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}
