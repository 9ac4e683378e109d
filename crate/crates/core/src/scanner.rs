//! Excitation-profile grids and correlated-error line scans.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Propagator, PulseSpec};
use crate::error::{Error, Result};
use crate::sequences::{composite_physical_propagator, CompositeSequence};

/// Evenly spaced axis `min..=max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.count < 2 {
            return Err(Error::domain(format!("{name} axis needs at least 2 points")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::domain(format!("{name} axis needs finite min < max")));
        }
        Ok(())
    }

    /// Points are placed symmetrically about the centre so that an axis with
    /// `min = −max` is exactly antisymmetric.
    pub fn values(&self) -> Vec<f64> {
        let c = 0.5 * (self.min + self.max);
        let h = (self.max - self.min) / (self.count - 1) as f64;
        let mid = (self.count - 1) as f64 / 2.0;
        (0..self.count).map(|i| c + h * (i as f64 - mid)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// rad/s
    pub detuning_axis: Axis,
    /// seconds
    pub duration_axis: Axis,
    pub base_pulse: PulseSpec,
}

/// Rabi frequency of the default grid, Ω/2π = 50 kHz.
pub const DEFAULT_RABI_HZ: f64 = 50e3;

impl GridSpec {
    /// Ω/2π = 50 kHz rectangular pulses, T ∈ [2, 18] µs (81 points),
    /// Δ/2π ∈ [−60, 60] kHz (121 points).
    pub fn default_grid() -> Self {
        let two_pi = 2.0 * PI;
        GridSpec {
            detuning_axis: Axis::new(-two_pi * 60e3, two_pi * 60e3, 121),
            duration_axis: Axis::new(2e-6, 18e-6, 81),
            base_pulse: PulseSpec::rectangular(two_pi * DEFAULT_RABI_HZ, 10e-6, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.detuning_axis.validate("detuning")?;
        self.duration_axis.validate("duration")?;
        if self.duration_axis.min <= 0.0 {
            return Err(Error::domain("durations must be positive"));
        }
        self.base_pulse.validate()
    }

    pub fn pulse_at(&self, detuning: f64, duration: f64) -> PulseSpec {
        PulseSpec {
            detuning0: detuning,
            duration,
            ..self.base_pulse.clone()
        }
    }
}

/// Where a grid came from; echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine_version: String,
    pub tolerance: f64,
    /// Free-form `key=value` pairs (sequence, resolved command line, ensemble…).
    pub fields: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(tolerance: f64) -> Self {
        Provenance {
            engine_version: crate::ENGINE_VERSION.to_string(),
            tolerance,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.fields.push((key.into(), value.into()));
        self
    }
}

/// Values indexed `[duration][detuning]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub detunings: Vec<f64>,
    pub durations: Vec<f64>,
    pub values: Vec<f64>,
    pub sequence: String,
    pub provenance: Provenance,
}

impl ProfileGrid {
    pub fn get(&self, duration_idx: usize, detuning_idx: usize) -> f64 {
        self.values[duration_idx * self.detunings.len() + detuning_idx]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    /// `(detuning, duration, value)` of the largest cell (first one on ties).
    pub fn argmax(&self) -> (f64, f64, f64) {
        let nd = self.detunings.len();
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (self.detunings[i % nd], self.durations[i / nd], v)
    }

    /// The grid with its detuning axis reversed.
    pub fn mirrored(&self) -> ProfileGrid {
        let nd = self.detunings.len();
        let values = self
            .values
            .chunks(nd)
            .flat_map(|row| row.iter().rev().copied())
            .collect();
        ProfileGrid {
            values,
            ..self.clone()
        }
    }

    pub fn max_abs_diff(&self, other: &ProfileGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Divide by the global maximum.
    pub fn normalized(&self) -> ProfileGrid {
        let m = self.max();
        let values = if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            self.values.clone()
        };
        ProfileGrid {
            values,
            ..self.clone()
        }
    }

    /// Header lines start with `#`; rows are `detuning_hz,duration_s,value`.
    /// Numbers carry 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, value_column: &str) -> Result<()> {
        let mut header = format!("# seq={}", self.sequence);
        for (k, v) in &self.provenance.fields {
            header.push_str(&format!(" {k}={v}"));
        }
        writeln!(w, "{header}")?;
        writeln!(
            w,
            "# engine_version={} tolerance={:e}",
            self.provenance.engine_version, self.provenance.tolerance
        )?;
        writeln!(w, "detuning_hz,duration_s,{value_column}")?;
        for (i, &t) in self.durations.iter().enumerate() {
            for (j, &d) in self.detunings.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{}",
                    sig12(d / (2.0 * PI)),
                    sig12(t),
                    sig12(self.get(i, j))
                )?;
            }
        }
        Ok(())
    }
}

/// Round to 12 significant digits in scientific notation; exact zero prints as `0`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Map every cell of `grid` through `cell(detuning, duration)` in parallel.
pub(crate) fn map_grid<F>(grid: &GridSpec, cell: F) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    grid.validate()?;
    let detunings = grid.detuning_axis.values();
    let durations = grid.duration_axis.values();
    let nd = detunings.len();
    let values = (0..nd * durations.len())
        .into_par_iter()
        .map(|idx| {
            let (d, t) = (detunings[idx % nd], durations[idx / nd]);
            cell(d, t).map_err(|e| {
                e.with_context(format!(
                    "cell (detuning_hz={}, duration_s={})",
                    d / (2.0 * PI),
                    t
                ))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((detunings, durations, values))
}

/// Transition probability of `seq` over the detuning × duration grid.
pub fn scan_profile(
    seq: &CompositeSequence,
    grid: &GridSpec,
    propagator: &Propagator,
) -> Result<ProfileGrid> {
    let (detunings, durations, values) = map_grid(grid, |d, t| {
        let u = composite_physical_propagator(seq, &grid.pulse_at(d, t), propagator)?;
        Ok(u.transition_probability())
    })?;
    Ok(ProfileGrid {
        detunings,
        durations,
        values,
        sequence: seq.label().unwrap_or("custom").to_string(),
        provenance: Provenance::new(propagator.tolerance),
    })
}

/// Line through (Rabi error, detuning) space with `Δ = Δ0 + κ·Ω·e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPath {
    pub kappa: f64,
    /// Fractional Rabi-frequency error range.
    pub span: (f64, f64),
    pub count: usize,
}

impl CorrelationPath {
    pub fn errors(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::domain("correlation path needs at least 2 points"));
        }
        Ok(Axis::new(self.span.0, self.span.1, self.count).values())
    }
}

/// `(e, P12)` along `Ω → Ω(1+e)`, `Δ → Δ0 + κΩe`.
pub fn scan_correlated(
    seq: &CompositeSequence,
    path: &CorrelationPath,
    base: &PulseSpec,
    propagator: &Propagator,
) -> Result<Vec<(f64, f64)>> {
    base.validate()?;
    let errors = path.errors()?;
    errors
        .par_iter()
        .map(|&e| {
            let pulse = PulseSpec {
                omega_peak: base.omega_peak * (1.0 + e),
                detuning0: base.detuning0 + path.kappa * base.omega_peak * e,
                ..base.clone()
            };
            let u = composite_physical_propagator(seq, &pulse, propagator)?;
            Ok((e, u.transition_probability()))
        })
        .collect()
}

/// Fraction of cells with value `≥ threshold`.
pub fn high_fidelity_area(grid: &ProfileGrid, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain("threshold must lie in (0, 1)"));
    }
    let hits = grid.values.iter().filter(|&&v| v >= threshold).count();
    Ok(hits as f64 / grid.values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> ProfileGrid {
        ProfileGrid {
            detunings: vec![-1.0, 0.0, 1.0],
            durations: vec![1.0, 2.0],
            values: vec![v; 6],
            sequence: "x".into(),
            provenance: Provenance::new(1e-10),
        }
    }

    #[test]
    fn area_extremes() {
        assert_eq!(high_fidelity_area(&flat(1.0), 0.95).unwrap(), 1.0);
        assert_eq!(high_fidelity_area(&flat(0.0), 0.95).unwrap(), 0.0);
        assert!(high_fidelity_area(&flat(0.0), 1.0).is_err());
    }

    #[test]
    fn symmetric_axis_is_antisymmetric() {
        let v = Axis::new(-7.3, 7.3, 41).values();
        for i in 0..41 {
            assert_eq!(v[i], -v[40 - i]);
        }
        let t = Axis::new(2e-6, 18e-6, 81).values();
        assert_eq!(t[40], 10e-6);
    }

    #[test]
    fn bad_axes() {
        assert!(Axis::new(0.0, 1.0, 1).validate("x").is_err());
        assert!(Axis::new(1.0, 0.0, 3).validate("x").is_err());
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        flat(0.5).write_csv(&mut out, "p12").unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# seq=x"));
        assert_eq!(lines[2], "detuning_hz,duration_s,p12");
        assert_eq!(lines.len(), 3 + 6);
        assert_eq!(sig12(0.123456789012345), "1.23456789012e-1");
    }
}
