use std::f64::consts::PI;

use proptest::prelude::*;
use ucp_core::dynamics::{
    propagate_phase_accumulating, EnvelopeShape, Propagator, PulseSpec, SampledEnvelope,
};

const OMEGA: f64 = 2.0 * PI * 50e3;

fn rabi_formula(om: f64, delta: f64, t: f64) -> f64 {
    let w2 = om * om + delta * delta;
    om * om / w2 * (w2.sqrt() * t / 2.0).sin().powi(2)
}

/// Truncated-Gaussian pulse area by composite Simpson.
fn area(pulse: &PulseSpec) -> f64 {
    let n = 20_000;
    let h = pulse.duration / n as f64;
    let mut s = pulse.rabi(0.0) + pulse.rabi(pulse.duration);
    for k in 1..n {
        s += pulse.rabi(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stepping_matches_rabi(delta in -3.0..3.0f64, t in 0.05..4.0f64) {
        let pulse = PulseSpec::rectangular(OMEGA, t * PI / OMEGA, delta * OMEGA);
        let p = Propagator::default().stepping_only().propagate(&pulse).unwrap();
        let exact = rabi_formula(OMEGA, delta * OMEGA, pulse.duration);
        prop_assert!((p.transition_probability() - exact).abs() < 1e-10);
    }
}

#[test]
fn resonant_gaussian_follows_pulse_area() {
    for scale in [0.5, 1.0, 2.3] {
        let pulse = PulseSpec {
            shape: EnvelopeShape::Gaussian,
            omega_peak: scale * OMEGA,
            duration: 10e-6,
            detuning0: 0.0,
            chirp: 0.0,
            stark_coeff: 0.0,
        };
        let theta = area(&pulse);
        let p = Propagator::default().propagate(&pulse).unwrap().transition_probability();
        assert!((p - (theta / 2.0).sin().powi(2)).abs() < 1e-9, "scale {scale}");
    }
}

#[test]
fn rotating_frame_matches_lab_phase_integration() {
    let pulse = PulseSpec {
        shape: EnvelopeShape::Gaussian,
        omega_peak: OMEGA,
        duration: 12e-6,
        detuning0: 0.3 * OMEGA,
        chirp: 4e10,
        stark_coeff: 0.2,
    };
    let direct = Propagator::with_tolerance(1e-12).propagate(&pulse).unwrap();
    let lab = propagate_phase_accumulating(&pulse, 40_000).unwrap();
    assert!(direct.distance_up_to_phase(&lab) < 1e-6, "{}", direct.distance_up_to_phase(&lab));
}

#[test]
fn step_budget_exhaustion_is_reported() {
    let pulse = PulseSpec {
        chirp: 1e12,
        ..PulseSpec::rectangular(OMEGA, 10e-6, 0.0)
    };
    let prop = Propagator {
        max_steps: 128,
        ..Propagator::with_tolerance(1e-14)
    };
    assert!(matches!(prop.propagate(&pulse), Err(ucp_core::Error::Convergence { .. })));
}

#[test]
fn sampled_envelope_reproduces_rectangle() {
    let text = "# t, amplitude\n0, 1\n1e-6 1\n2e-6,1\n";
    let env = SampledEnvelope::parse(text.as_bytes()).unwrap();
    let pulse = PulseSpec {
        shape: EnvelopeShape::Sampled(env),
        ..PulseSpec::rectangular(OMEGA, 7e-6, 0.4 * OMEGA)
    };
    let p = Propagator::default().propagate(&pulse).unwrap().transition_probability();
    assert!((p - rabi_formula(OMEGA, 0.4 * OMEGA, 7e-6)).abs() < 1e-9);
}

#[test]
fn bad_inputs() {
    assert!(Propagator::default()
        .propagate(&PulseSpec::rectangular(OMEGA, 0.0, 0.0))
        .is_err());
    assert!(SampledEnvelope::parse("0 1\nx y\n".as_bytes()).is_err());
    assert!(SampledEnvelope::parse("1 1\n0 1\n".as_bytes()).is_err());
}
