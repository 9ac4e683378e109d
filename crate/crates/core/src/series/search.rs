//! Multi-start pattern search for universal Φ sets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expand_u11, HarmonicPolynomial};
use crate::angle::{format_pi_list, Angle};
use crate::error::{Error, Result};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub target_j0: usize,
    /// Restrict to palindromic Φ (`Φ_k = Φ_{n−k−1}`).
    pub anagram: bool,
    pub restarts: usize,
    pub seed: u64,
    /// Weight of the order-(j0+1) power in the exploration objective.
    pub weight: f64,
    /// A candidate is kept when all nullified harmonics fall below this.
    pub tolerance: f64,
    pub max_evals: usize,
}

impl SearchConfig {
    pub fn new(n: usize, target_j0: usize) -> Self {
        SearchConfig {
            n,
            target_j0,
            anagram: false,
            restarts: 32,
            seed: 0,
            weight: 1e-3,
            tolerance: 1e-9,
            max_evals: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Canonical Φ in `[0, 2π)`.
    pub big_phi: Vec<f64>,
    /// Largest harmonic magnitude over orders `1..=target_j0`.
    pub residual: f64,
    /// `max_α̃ |c_{j0+1}(α̃)|`.
    pub next_order: f64,
}

impl Candidate {
    /// Φ in rational-π form when every entry snaps within 1e-9, decimals otherwise.
    pub fn big_phi_display(&self) -> String {
        let xs: Vec<Angle> = self
            .big_phi
            .iter()
            .map(|&x| Angle::Radians(x).snapped(1e-9))
            .collect();
        format_pi_list(&xs)
    }

    /// One machine-readable record: `residual,next_order,Φ`.
    pub fn record(&self) -> String {
        format!(
            "{:.6e},{:.12e},{}",
            self.residual,
            self.next_order,
            self.big_phi_display()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Distinct canonical solutions, sorted by residual then Φ tuple.
    pub candidates: Vec<Candidate>,
    /// Smallest residual seen in any restart, kept or not.
    pub best_residual: f64,
}

/// Canonical representative under global sign flip and order reversal.
pub fn canonicalize(big_phi: &[f64]) -> Vec<f64> {
    let zero_tol = 1e-9;
    let red = |x: f64| {
        let r = x.rem_euclid(TAU);
        if r < zero_tol || TAU - r < zero_tol {
            0.0
        } else {
            r
        }
    };
    let mut v: Vec<f64> = big_phi.iter().map(|&x| red(x)).collect();
    if let Some(&first) = v.iter().find(|&&x| x != 0.0) {
        if first > PI + zero_tol {
            v = v.iter().map(|&x| red(-x)).collect();
        }
    }
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    if lex_less(&rev, &v) {
        rev
    } else {
        v
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x < y;
        }
    }
    false
}

fn periodic_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(0.0, f64::max)
}

struct Problem {
    n: usize,
    target_j0: usize,
    anagram: bool,
    weight: f64,
}

impl Problem {
    fn dims(&self) -> usize {
        let m = self.n - 2;
        if self.anagram {
            m.div_ceil(2)
        } else {
            m
        }
    }

    fn big_phi(&self, x: &[f64]) -> Vec<f64> {
        let m = self.n - 2;
        if self.anagram {
            (0..m).map(|k| x[k.min(m - 1 - k)]).collect()
        } else {
            x.to_vec()
        }
    }

    fn poly(&self, x: &[f64]) -> HarmonicPolynomial {
        expand_u11(&self.big_phi(x), self.target_j0 + 1).expect("truncation within cap")
    }

    fn nullification(&self, p: &HarmonicPolynomial) -> f64 {
        (1..=self.target_j0).map(|j| p.order_power(j)).sum()
    }

    fn explore(&self, x: &[f64]) -> f64 {
        let p = self.poly(x);
        self.nullification(&p) + self.weight * p.order_power(self.target_j0 + 1)
    }

    fn polish(&self, x: &[f64]) -> f64 {
        self.nullification(&self.poly(x))
    }

    fn residual(&self, p: &HarmonicPolynomial) -> f64 {
        (1..=self.target_j0)
            .map(|j| p.max_harmonic_magnitude(j))
            .fold(0.0, f64::max)
    }
}

/// Compass search on the torus: try ±step along each axis, halve on failure.
fn pattern_search(
    f: impl Fn(&[f64]) -> f64,
    mut x: Vec<f64>,
    mut step: f64,
    min_step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    let mut evals = 1;
    while step >= min_step && evals < max_evals {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut t = x.clone();
                t[i] = (t[i] + dir * step).rem_euclid(TAU);
                let ft = f(&t);
                evals += 1;
                if ft < fx {
                    x = t;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    r
}

/// Shifted Halton point `index` in `[0, 2π)^dims`.
fn start_point(index: usize, shift: &[f64]) -> Vec<f64> {
    shift
        .iter()
        .enumerate()
        .map(|(d, s)| {
            let base = PRIMES[d % PRIMES.len()];
            // Dimensions beyond the prime table reuse a base with a distinct index stride.
            let idx = (index as u64 + 1) * (1 + (d / PRIMES.len()) as u64);
            TAU * (radical_inverse(idx, base) + s).fract()
        })
        .collect()
}

/// Search for Φ sets that nullify `c_1 … c_{target_j0}` and minimize `c_{target_j0+1}`.
///
/// Each restart runs a pattern search on the weighted objective, then (when
/// anything must vanish) polishes on the nullification term alone so the
/// result sits on the exact solution set rather than the weighted optimum.
pub fn search_phases(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.n < 3 || cfg.n.is_multiple_of(2) {
        return Err(Error::domain(format!("n = {} must be odd and at least 3", cfg.n)));
    }
    if cfg.restarts == 0 {
        return Err(Error::domain("at least one restart is required"));
    }
    if cfg.target_j0 + 1 > super::MAX_TRUNCATION {
        return Err(Error::Resource(format!(
            "target_j0 {} exceeds the series cap",
            cfg.target_j0
        )));
    }
    let problem = Problem {
        n: cfg.n,
        target_j0: cfg.target_j0,
        anagram: cfg.anagram,
        weight: cfg.weight,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shift: Vec<f64> = (0..problem.dims()).map(|_| rng.random::<f64>()).collect();

    let runs: Vec<(Vec<f64>, f64, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = start_point(r, &shift);
            let (mut x, _) = pattern_search(|x| problem.explore(x), x0, PI / 2.0, 1e-10, cfg.max_evals);
            if cfg.target_j0 > 0 {
                x = pattern_search(|x| problem.polish(x), x, 0.05, 1e-15, cfg.max_evals).0;
            }
            let p = problem.poly(&x);
            let big = canonicalize(&problem.big_phi(&x));
            (big, problem.residual(&p), p.order_power(cfg.target_j0 + 1))
        })
        .collect();

    let best_residual = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (big, res, _) in runs.into_iter().filter(|r| r.1 < cfg.tolerance) {
        match kept.iter_mut().find(|(k, _)| periodic_distance(k, &big) < 1e-6) {
            Some(existing) if res < existing.1 => *existing = (big, res),
            Some(_) => {}
            None => kept.push((big, res)),
        }
    }
    let mut candidates: Vec<Candidate> = kept
        .into_iter()
        .map(|(big, residual)| {
            let next = expand_u11(&big, cfg.target_j0 + 1)
                .expect("truncation within cap")
                .sup_over_alpha(cfg.target_j0 + 1);
            Candidate {
                big_phi: big,
                residual,
                next_order: next,
            }
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then_with(|| {
                if lex_less(&a.big_phi, &b.big_phi) {
                    std::cmp::Ordering::Less
                } else if lex_less(&b.big_phi, &a.big_phi) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
    });
    Ok(SearchOutcome {
        candidates,
        best_residual,
    })
}
