//! CPMG-style rephasing of an inhomogeneously broadened ensemble.
//!
//! Every member starts in the equal superposition, precesses freely for
//! `τ`, is inverted, precesses for `2τ`, … and finally for `τ`. The recorded
//! quantity is the ensemble-averaged coherence relative to its initial value.
//!
//! The written coherence has no fixed phase relation to the RF carrier, so by
//! default the result is averaged over that relative phase. Only the part of
//! the final coherence that is linear in the initial one, `U11·conj(U22)`,
//! survives; the stimulated-echo and population terms average out.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use crate::dynamics::{Propagator, PulseSpec};
use crate::error::{Error, Result};
use crate::scanner::{map_grid, GridSpec, ProfileGrid, Provenance};
use crate::sequences::{composite_physical_propagator, composite_propagator, CompositeSequence};
use crate::su2::{phase_rotation, PulseParams, Unitary2};

/// Default detuning spread, about one over a 20 µs dephasing time (rad/s).
pub const DEFAULT_DETUNING_SIGMA: f64 = 5.0e4;
/// Default relative RF-amplitude spread.
pub const DEFAULT_RABI_SIGMA: f64 = 0.05;
/// Default coherence decay time (s).
pub const DEFAULT_DECOHERENCE_TIME: f64 = 500e-6;
pub const DEFAULT_STORAGE_TIME: f64 = 400e-6;

/// Spread of one member parameter about its nominal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Every member takes the nominal value.
    Delta,
    Gaussian { sigma: f64 },
    /// Members draw uniformly from the listed absolute values.
    Sampled(Vec<f64>),
}

impl Distribution {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Distribution::Delta => Ok(()),
            Distribution::Gaussian { sigma } if sigma.is_finite() && *sigma >= 0.0 => Ok(()),
            Distribution::Gaussian { .. } => {
                Err(Error::domain(format!("{name} sigma must be finite and non-negative")))
            }
            Distribution::Sampled(v) if v.is_empty() => {
                Err(Error::domain(format!("{name} sample list is empty")))
            }
            Distribution::Sampled(v) if v.iter().any(|x| !x.is_finite()) => {
                Err(Error::domain(format!("{name} samples must be finite")))
            }
            Distribution::Sampled(_) => Ok(()),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, nominal: f64) -> f64 {
        match self {
            Distribution::Delta => nominal,
            Distribution::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    nominal
                } else {
                    Normal::new(nominal, *sigma).expect("validated sigma").sample(rng)
                }
            }
            Distribution::Sampled(v) => v[rng.random_range(0..v.len())],
        }
    }

    /// Short description for provenance headers.
    pub fn describe(&self) -> String {
        match self {
            Distribution::Delta => "delta".to_string(),
            Distribution::Gaussian { sigma } => format!("gaussian({sigma})"),
            Distribution::Sampled(v) => format!("sampled({})", v.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Detuning offset, rad/s, added to the pulse detuning.
    pub detuning: Distribution,
    /// Multiplier on the Rabi frequency, nominal 1.
    pub rabi_scale: Distribution,
    pub member_count: usize,
    pub seed: u64,
}

/// One ensemble member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub detuning_offset: f64,
    pub rabi_scale: f64,
}

impl EnsembleSpec {
    /// A single member with nominal parameters.
    pub fn delta() -> Self {
        EnsembleSpec {
            detuning: Distribution::Delta,
            rabi_scale: Distribution::Delta,
            member_count: 1,
            seed: 0,
        }
    }

    pub fn gaussian(detuning_sigma: f64, rabi_sigma: f64, member_count: usize, seed: u64) -> Self {
        EnsembleSpec {
            detuning: Distribution::Gaussian {
                sigma: detuning_sigma,
            },
            rabi_scale: Distribution::Gaussian { sigma: rabi_sigma },
            member_count,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.member_count == 0 {
            return Err(Error::domain("ensemble needs at least one member"));
        }
        self.detuning.validate("detuning")?;
        self.rabi_scale.validate("rabi scale")
    }

    /// Member `i` depends only on `(seed, i)`.
    pub fn member(&self, i: usize) -> Member {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        Member {
            detuning_offset: self.detuning.sample(&mut rng, 0.0),
            rabi_scale: self.rabi_scale.sample(&mut rng, 1.0),
        }
    }

    pub fn members(&self) -> Vec<Member> {
        (0..self.member_count).map(|i| self.member(i)).collect()
    }

    fn provenance_fields(&self) -> Vec<(String, String)> {
        vec![
            ("detuning_dist".into(), self.detuning.describe()),
            ("rabi_dist".into(), self.rabi_scale.describe()),
            ("member_count".into(), self.member_count.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

/// How the inversion pulses act.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PulseModel {
    /// Integrate the given pulse for each member; each composite element has
    /// the pulse's duration.
    Physical(PulseSpec),
    /// Instantaneous pulses with fixed Cayley–Klein parameters, identical for
    /// every member.
    Ideal(PulseParams),
}

/// Treatment of free-precession phases between inversions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FreePrecession {
    /// Each member precesses by its own detuning offset times the interval.
    Explicit,
    /// The free-precession phase is taken as uniformly distributed over the
    /// ensemble (dephasing much faster than the interval), averaged exactly.
    Dephased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoProtocol {
    /// Seconds from the end of writing to readout.
    pub storage_time: f64,
    /// Number of inversion blocks; even.
    pub inversion_count: usize,
    pub sequence: CompositeSequence,
    pub pulse: PulseModel,
    /// Exponential envelope time constant, seconds.
    pub decoherence_time: Option<f64>,
    pub free_precession: FreePrecession,
    /// Average over the coherence phase relative to the RF carrier.
    pub rf_phase_average: bool,
}

impl EchoProtocol {
    /// Two inversions in 400 µs, T2 = 500 µs, dephased free precession.
    pub fn cpmg(sequence: CompositeSequence, pulse: PulseModel) -> Self {
        EchoProtocol {
            storage_time: DEFAULT_STORAGE_TIME,
            inversion_count: 2,
            sequence,
            pulse,
            decoherence_time: Some(DEFAULT_DECOHERENCE_TIME),
            free_precession: FreePrecession::Dephased,
            rf_phase_average: true,
        }
    }

    fn block_duration(&self) -> f64 {
        match &self.pulse {
            PulseModel::Physical(p) => p.duration * self.sequence.len() as f64,
            PulseModel::Ideal(_) => 0.0,
        }
    }

    /// Free-precession intervals `τ, 2τ, …, 2τ, τ` in seconds.
    pub fn intervals(&self) -> Result<Vec<f64>> {
        if !(self.storage_time.is_finite() && self.storage_time > 0.0) {
            return Err(Error::domain("storage time must be positive"));
        }
        if !self.inversion_count.is_multiple_of(2) {
            return Err(Error::domain("inversion count must be even"));
        }
        if let Some(t2) = self.decoherence_time {
            if !(t2.is_finite() && t2 > 0.0) {
                return Err(Error::domain("decoherence time must be positive"));
            }
        }
        if self.sequence.is_empty() {
            return Err(Error::domain("inversion sequence is empty"));
        }
        let n = self.inversion_count;
        if n == 0 {
            return Ok(vec![self.storage_time]);
        }
        let free = self.storage_time - n as f64 * self.block_duration();
        if free < 0.0 {
            return Err(Error::domain(format!(
                "{n} inversion blocks of {:.6e} s do not fit in {:.6e} s",
                self.block_duration(),
                self.storage_time
            )));
        }
        let tau = free / (2 * n) as f64;
        Ok(interval_weights(n).iter().map(|&w| w as f64 * tau).collect())
    }

    fn block(&self, m: &Member, prop: &Propagator) -> Result<Unitary2> {
        match &self.pulse {
            PulseModel::Ideal(p) => Ok(composite_propagator(&self.sequence, p)),
            PulseModel::Physical(base) => {
                let pulse = PulseSpec {
                    omega_peak: base.omega_peak * m.rabi_scale,
                    detuning0: base.detuning0 + m.detuning_offset,
                    ..base.clone()
                };
                composite_physical_propagator(&self.sequence, &pulse, prop)
            }
        }
    }
}

fn interval_weights(n: usize) -> Vec<u32> {
    let mut w = vec![2; n + 1];
    w[0] = 1;
    w[n] = 1;
    w
}

/// Total evolution for given free-precession phases and inversion block.
fn train(phases: &[f64], block: &Unitary2) -> Unitary2 {
    let mut u = phase_rotation(phases[0]);
    for &th in &phases[1..] {
        u = phase_rotation(th) * *block * u;
    }
    u
}

/// Final coherence of one member relative to the initial one.
fn member_response(protocol: &EchoProtocol, phases: &[f64], block: &Unitary2) -> C64 {
    let u = train(phases, block);
    if protocol.rf_phase_average {
        u.u11 * u.u22.conj()
    } else {
        // Initial state (|1⟩+|2⟩)/√2, initial coherence 1/2.
        let c1 = (u.u11 + u.u12) / 2f64.sqrt();
        let c2 = (u.u21 + u.u22) / 2f64.sqrt();
        c1 * c2.conj() * 2.0
    }
}

/// Rephasing efficiency in `[0, 1]`.
pub fn rephasing_efficiency(protocol: &EchoProtocol, ensemble: &EnsembleSpec) -> Result<f64> {
    rephasing_efficiency_with(protocol, ensemble, &Propagator::default())
}

pub fn rephasing_efficiency_with(
    protocol: &EchoProtocol,
    ensemble: &EnsembleSpec,
    prop: &Propagator,
) -> Result<f64> {
    ensemble.validate()?;
    let intervals = protocol.intervals()?;
    if let PulseModel::Physical(p) = &protocol.pulse {
        p.validate()?;
    }
    let members = ensemble.members();
    let responses = members
        .par_iter()
        .map(|m| contribution(protocol, &intervals, m, prop))
        .collect::<Result<Vec<C64>>>()?;
    let mean = responses.iter().fold(C64::new(0.0, 0.0), |a, b| a + b) / members.len() as f64;
    let envelope = protocol
        .decoherence_time
        .map_or(1.0, |t2| (-protocol.storage_time / t2).exp());
    Ok((mean.norm() * envelope).min(1.0))
}

fn contribution(
    protocol: &EchoProtocol,
    intervals: &[f64],
    m: &Member,
    prop: &Propagator,
) -> Result<C64> {
    let block = protocol.block(m, prop)?;
    Ok(match protocol.free_precession {
        FreePrecession::Explicit => {
            let phases: Vec<f64> = intervals.iter().map(|t| m.detuning_offset * t).collect();
            member_response(protocol, &phases, &block)
        }
        FreePrecession::Dephased => dephased_response(protocol, &block),
    })
}

/// Exact average over a uniformly distributed free-precession phase.
///
/// The response is a trigonometric polynomial in that phase whose degree is
/// bounded by the total interval weight, so an equispaced rule with more
/// nodes than that degree integrates it exactly.
fn dephased_response(protocol: &EchoProtocol, block: &Unitary2) -> C64 {
    let weights = if protocol.inversion_count == 0 {
        vec![1]
    } else {
        interval_weights(protocol.inversion_count)
    };
    let total: u32 = weights.iter().sum();
    let nodes = 2 * total as usize + 4;
    let sum = (0..nodes).fold(C64::new(0.0, 0.0), |acc, k| {
        let th = 2.0 * PI * k as f64 / nodes as f64;
        let phases: Vec<f64> = weights.iter().map(|&w| w as f64 * th).collect();
        acc + member_response(protocol, &phases, block)
    });
    sum / nodes as f64
}

/// Efficiency over a detuning × duration grid; the physical pulse's detuning
/// and duration are overridden per cell.
pub fn efficiency_map(
    protocol: &EchoProtocol,
    ensemble: &EnsembleSpec,
    grid: &GridSpec,
    prop: &Propagator,
) -> Result<ProfileGrid> {
    ensemble.validate()?;
    let (detunings, durations, values) = map_grid(grid, |d, t| {
        let mut cell = protocol.clone();
        cell.pulse = PulseModel::Physical(grid.pulse_at(d, t));
        cell_efficiency(&cell, ensemble, prop)
    })?;
    let mut provenance = Provenance::new(prop.tolerance)
        .with("storage_s", format!("{:e}", protocol.storage_time))
        .with("inversions", protocol.inversion_count.to_string())
        .with(
            "decoherence_s",
            protocol
                .decoherence_time
                .map_or("none".to_string(), |t| format!("{t:e}")),
        )
        .with("free_precession", format!("{:?}", protocol.free_precession));
    provenance.fields.extend(ensemble.provenance_fields());
    Ok(ProfileGrid {
        detunings,
        durations,
        values,
        sequence: protocol.sequence.label().unwrap_or("custom").to_string(),
        provenance,
    })
}

fn cell_efficiency(protocol: &EchoProtocol, ensemble: &EnsembleSpec, prop: &Propagator) -> Result<f64> {
    let intervals = protocol.intervals()?;
    let mut sum = C64::new(0.0, 0.0);
    for i in 0..ensemble.member_count {
        sum += contribution(protocol, &intervals, &ensemble.member(i), prop)?;
    }
    let envelope = protocol
        .decoherence_time
        .map_or(1.0, |t2| (-protocol.storage_time / t2).exp());
    Ok(((sum / ensemble.member_count as f64).norm() * envelope).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(eps: f64) -> PulseModel {
        PulseModel::Ideal(PulseParams::new(eps, 0.3, 0.0).unwrap())
    }

    #[test]
    fn perfect_inversions_refocus() {
        let mut p = EchoProtocol::cpmg(CompositeSequence::single(), ideal(0.0));
        p.decoherence_time = None;
        p.free_precession = FreePrecession::Explicit;
        let e = EnsembleSpec::gaussian(1e5, 0.1, 64, 3);
        assert!((rephasing_efficiency(&p, &e).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dephased_ideal_gives_square() {
        let eps: f64 = 0.4;
        let mut p = EchoProtocol::cpmg(CompositeSequence::single(), ideal(eps));
        p.decoherence_time = None;
        let prob = 1.0 - eps * eps;
        let eff = rephasing_efficiency(&p, &EnsembleSpec::delta()).unwrap();
        assert!((eff - prob * prob).abs() < 1e-12);
    }

    #[test]
    fn timing() {
        let mut p = EchoProtocol::cpmg(
            CompositeSequence::single(),
            PulseModel::Physical(PulseSpec::rectangular(1e5, 10e-6, 0.0)),
        );
        let iv = p.intervals().unwrap();
        assert_eq!(iv.len(), 3);
        assert!((iv[0] - 95e-6).abs() < 1e-15 && (iv[1] - 190e-6).abs() < 1e-15);
        p.inversion_count = 3;
        assert!(p.intervals().is_err());
        p.inversion_count = 2;
        p.storage_time = 10e-6;
        assert!(p.intervals().is_err());
    }

    #[test]
    fn members_are_reproducible() {
        let e = EnsembleSpec::gaussian(1.0, 0.1, 10, 42);
        assert_eq!(e.members(), e.members());
        assert_ne!(e.member(0), e.member(1));
    }

    #[test]
    fn decoherence_envelope() {
        let mut p = EchoProtocol::cpmg(CompositeSequence::single(), ideal(0.0));
        p.storage_time = 500e-6;
        let eff = rephasing_efficiency(&p, &EnsembleSpec::delta()).unwrap();
        assert!((eff - (-1f64).exp()).abs() < 1e-12);
    }
}
