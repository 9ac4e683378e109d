//! Single-pulse propagators for physical pulses.
//!
//! The Schrödinger equation is solved in the frame rotating with the drive,
//!
//! ```text
//! H(t) = ½ (Δ(t) σz + Ω(t) σx),   Δ(t) = Δ0 + chirp·(t − T/2) + stark·Ω(t)
//! ```
//!
//! Constant Hamiltonians are exponentiated in one shot. Otherwise `[0, T]` is
//! split into equal steps, each advanced by the exact SU(2) exponential of a
//! fourth-order Magnus generator, and the step count is doubled until two
//! successive refinements agree entrywise within the requested tolerance.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su2::Unitary2;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_INITIAL_STEPS: usize = 64;
/// Refinement stops with a convergence error beyond this many steps.
pub const DEFAULT_MAX_STEPS: usize = 1 << 22;

/// Gaussian envelopes span ±3σ, so σ = T/6.
pub const GAUSSIAN_SIGMAS_PER_HALF_WINDOW: f64 = 3.0;

/// Envelope as a fraction of the peak Rabi frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeShape {
    Rectangular,
    Gaussian,
    /// Piecewise-linear samples; the time column is rescaled onto `[0, T]`.
    Sampled(SampledEnvelope),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEnvelope {
    times: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl SampledEnvelope {
    pub fn new(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if times.len() != amplitudes.len() || times.len() < 2 {
            return Err(Error::Validation(
                "sampled envelope needs at least two (time, amplitude) pairs".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(
                "sampled envelope times must be strictly increasing".into(),
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Validation(
                "sampled envelope amplitudes must be finite and nonnegative".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("non-finite sample time".into()));
        }
        Ok(SampledEnvelope { times, amplitudes })
    }

    /// Two whitespace- or comma-separated columns `time_seconds amplitude_fraction`,
    /// one pair per line; `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut amps = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let cols: Vec<&str> = body
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::parse(i + 1, "expected two numeric columns"));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad number `{s}`")))
            };
            times.push(num(cols[0])?);
            amps.push(num(cols[1])?);
        }
        SampledEnvelope::new(times, amps)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(f))
    }

    /// Linear interpolation at fractional position `x ∈ [0, 1]` of the window.
    fn at_fraction(&self, x: f64) -> f64 {
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        let t = t0 + x.clamp(0.0, 1.0) * (t1 - t0);
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.amplitudes[0];
        }
        if k >= self.times.len() {
            return *self.amplitudes.last().unwrap();
        }
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let (a, b) = (self.amplitudes[k - 1], self.amplitudes[k]);
        a + (b - a) * (t - ta) / (tb - ta)
    }
}

impl EnvelopeShape {
    fn value(&self, t: f64, duration: f64) -> f64 {
        match self {
            EnvelopeShape::Rectangular => 1.0,
            EnvelopeShape::Gaussian => {
                let sigma = duration / (2.0 * GAUSSIAN_SIGMAS_PER_HALF_WINDOW);
                let x = (t - duration / 2.0) / sigma;
                (-0.5 * x * x).exp()
            }
            EnvelopeShape::Sampled(s) => s.at_fraction(t / duration),
        }
    }
}

/// One constituent pulse. Angular units: rad/s and rad/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: EnvelopeShape,
    pub omega_peak: f64,
    pub duration: f64,
    pub detuning0: f64,
    pub chirp: f64,
    pub stark_coeff: f64,
}

impl PulseSpec {
    pub fn rectangular(omega_peak: f64, duration: f64, detuning0: f64) -> Self {
        PulseSpec {
            shape: EnvelopeShape::Rectangular,
            omega_peak,
            duration,
            detuning0,
            chirp: 0.0,
            stark_coeff: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_peak,
            self.duration,
            self.detuning0,
            self.chirp,
            self.stark_coeff,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::domain("non-finite pulse parameter"));
        }
        if self.duration <= 0.0 {
            return Err(Error::domain(format!(
                "pulse duration {} must be positive",
                self.duration
            )));
        }
        if self.omega_peak < 0.0 {
            return Err(Error::domain("peak Rabi frequency must be nonnegative"));
        }
        Ok(())
    }

    pub fn rabi(&self, t: f64) -> f64 {
        self.omega_peak * self.shape.value(t, self.duration)
    }

    pub fn detuning(&self, t: f64) -> f64 {
        self.detuning0 + self.chirp * (t - self.duration / 2.0) + self.stark_coeff * self.rabi(t)
    }

    fn is_time_independent(&self) -> bool {
        matches!(self.shape, EnvelopeShape::Rectangular) && self.chirp == 0.0
    }

    /// Field vector `h` with `H = ½ h·σ`.
    fn field(&self, t: f64) -> [f64; 3] {
        [self.rabi(t), 0.0, self.detuning(t)]
    }
}

/// Step-refinement controls for [`Propagator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagator {
    pub tolerance: f64,
    pub initial_steps: usize,
    pub max_steps: usize,
    /// Skip stepping when the Hamiltonian is constant.
    pub exact_constant: bool,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator {
            tolerance: DEFAULT_TOLERANCE,
            initial_steps: DEFAULT_INITIAL_STEPS,
            max_steps: DEFAULT_MAX_STEPS,
            exact_constant: true,
        }
    }
}

impl Propagator {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Propagator {
            tolerance,
            ..Default::default()
        }
    }

    /// Always refine by stepping, even for constant Hamiltonians.
    pub fn stepping_only(mut self) -> Self {
        self.exact_constant = false;
        self
    }

    pub fn propagate(&self, pulse: &PulseSpec) -> Result<Unitary2> {
        self.propagate_window(pulse, 0.0, pulse.duration)
    }

    /// Evolution operator over the sub-window `[t0, t1]` of the pulse.
    pub fn propagate_window(&self, pulse: &PulseSpec, t0: f64, t1: f64) -> Result<Unitary2> {
        pulse.validate()?;
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            return Err(Error::domain("invalid time window"));
        }
        if t1 == t0 {
            return Ok(Unitary2::IDENTITY);
        }
        if self.exact_constant && pulse.is_time_independent() {
            let h = pulse.field(t0);
            let dt = t1 - t0;
            return Ok(Unitary2::exp_su2([h[0] * dt / 2.0, h[1] * dt / 2.0, h[2] * dt / 2.0]));
        }
        let mut steps = self.initial_steps.max(1);
        let mut prev = magnus4(pulse, t0, t1, steps);
        let mut residual = f64::INFINITY;
        while steps * 2 <= self.max_steps {
            steps *= 2;
            let next = magnus4(pulse, t0, t1, steps);
            residual = next.max_abs_diff(&prev);
            if residual < self.tolerance {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Convergence {
            steps,
            residual,
            context: String::new(),
        })
    }
}

/// Fourth-order Magnus integrator with two Gauss–Legendre nodes per step.
fn magnus4(pulse: &PulseSpec, t0: f64, t1: f64, steps: usize) -> Unitary2 {
    let h = (t1 - t0) / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    let w = 3f64.sqrt() * h * h / 24.0;
    let mut u = Unitary2::IDENTITY;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let a = pulse.field(t + (0.5 - c) * h);
        let b = pulse.field(t + (0.5 + c) * h);
        // b × a
        let cross = [
            b[1] * a[2] - b[2] * a[1],
            b[2] * a[0] - b[0] * a[2],
            b[0] * a[1] - b[1] * a[0],
        ];
        let gen = [
            h / 4.0 * (a[0] + b[0]) + w * cross[0],
            h / 4.0 * (a[1] + b[1]) + w * cross[1],
            h / 4.0 * (a[2] + b[2]) + w * cross[2],
        ];
        u = Unitary2::exp_su2(gen) * u;
    }
    u
}

/// Time-ordered propagator of `pulse` at the default tolerance controls.
pub fn propagate(pulse: &PulseSpec, tolerance: f64) -> Result<Unitary2> {
    Propagator::with_tolerance(tolerance).propagate(pulse)
}

/// `1 − |u11|²` of the pulse propagator.
pub fn transition_probability(pulse: &PulseSpec) -> Result<f64> {
    Ok(propagate(pulse, DEFAULT_TOLERANCE)?.transition_probability())
}

/// Running value of `δ(t) = ∫₀ᵗ Δ(t′) dt′`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseAccumulator {
    pub delta_integral: f64,
}

impl PhaseAccumulator {
    /// Advance over `[t, t + dt]` with Simpson's rule.
    pub fn advance(&mut self, pulse: &PulseSpec, t: f64, dt: f64) {
        let f = |s: f64| pulse.detuning(s);
        self.delta_integral += dt / 6.0 * (f(t) + 4.0 * f(t + dt / 2.0) + f(t + dt));
    }
}

/// Direct integration of the unrotated Hamiltonian
/// `H = ½ Ω(t) (e^{iδ(t)} |1⟩⟨2| + h.c.)`, mapped back into the rotating frame
/// by `diag(e^{−iδ(T)/2}, e^{iδ(T)/2})`. Second-order midpoint stepping; used to
/// cross-check the frame convention of [`Propagator`].
pub fn propagate_phase_accumulating(pulse: &PulseSpec, steps: usize) -> Result<Unitary2> {
    pulse.validate()?;
    let steps = steps.max(1);
    let h = pulse.duration / steps as f64;
    let mut acc = PhaseAccumulator::default();
    let mut u = Unitary2::IDENTITY;
    for k in 0..steps {
        let t = k as f64 * h;
        let mut mid = acc;
        mid.advance(pulse, t, h / 2.0);
        let om = pulse.rabi(t + h / 2.0);
        let d = mid.delta_integral;
        // ½Ω(cos δ σx − sin δ σy) has H12 = ½Ω e^{iδ}.
        let gen = [om * d.cos() * h / 2.0, -om * d.sin() * h / 2.0, 0.0];
        u = Unitary2::exp_su2(gen) * u;
        acc.advance(pulse, t, h);
    }
    let d = acc.delta_integral;
    Ok(crate::su2::phase_rotation(d) * u)
}
