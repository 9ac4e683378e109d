//! Phase laws, the catalog of universal sets, and composite propagators.
//!
//! A phase law fixes the second differences `Φ_k = φ_{k+2} − 2φ_{k+1} + φ_k`
//! and the free first difference `φ2`; with `φ1 = 0` the pulse phases are
//!
//! ```text
//! φ_k = (k−1)·φ2 + Σ_{l=1}^{k−1} (k−l−1)·Φ_l
//! ```

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angle::{format_pi_list, Angle, PiRational};
use crate::dynamics::{Propagator, PulseSpec};
use crate::error::{Error, Result};
use crate::su2::{make_propagator, shift_phase, PulseParams, Unitary2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLaw {
    big_phi: Vec<Angle>,
    phi2: Angle,
}

impl PhaseLaw {
    pub fn new(big_phi: Vec<Angle>, phi2: Angle) -> Result<Self> {
        if big_phi.is_empty() {
            return Err(Error::domain("a phase law needs at least one Φ (n ≥ 3)"));
        }
        Ok(PhaseLaw { big_phi, phi2 })
    }

    pub fn from_radians(big_phi: &[f64], phi2: f64) -> Result<Self> {
        Self::new(
            big_phi.iter().map(|&x| Angle::Radians(x)).collect(),
            Angle::Radians(phi2),
        )
    }

    /// Number of pulses.
    pub fn n(&self) -> usize {
        self.big_phi.len() + 2
    }

    pub fn big_phi(&self) -> &[Angle] {
        &self.big_phi
    }

    pub fn big_phi_radians(&self) -> Vec<f64> {
        self.big_phi.iter().map(|a| a.radians()).collect()
    }

    pub fn phi2(&self) -> Angle {
        self.phi2
    }

    pub fn with_phi2(&self, phi2: Angle) -> Self {
        PhaseLaw {
            big_phi: self.big_phi.clone(),
            phi2,
        }
    }

    /// `Φ_k = Φ_{n−k−1}` for all k (mod 2π).
    pub fn is_anagram(&self) -> bool {
        let m = self.big_phi.len();
        (0..m).all(|k| {
            let (a, b) = (self.big_phi[k], self.big_phi[m - 1 - k]);
            match (a.exact(), b.exact()) {
                (Some(x), Some(y)) => (x - y).is_zero_mod_2pi(),
                _ => Angle::Radians(a.radians() - b.radians()).is_zero_mod_2pi(),
            }
        })
    }
}

/// Realized per-pulse phases with `φ1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSequence {
    phases: Vec<Angle>,
    label: Option<String>,
}

impl CompositeSequence {
    /// Re-gauges so that the first phase is zero; the flag reports whether it was not.
    pub fn from_phases(phases: Vec<Angle>) -> Result<(Self, bool)> {
        let Some(&first) = phases.first() else {
            return Err(Error::domain("a sequence needs at least one pulse"));
        };
        let regauged = !first.is_zero_mod_2pi();
        let phases = phases.into_iter().map(|p| sub(p, first).reduce()).collect();
        Ok((
            CompositeSequence {
                phases,
                label: None,
            },
            regauged,
        ))
    }

    pub fn single() -> Self {
        CompositeSequence {
            phases: vec![Angle::ZERO],
            label: Some("single".into()),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[Angle] {
        &self.phases
    }

    pub fn radians(&self) -> Vec<f64> {
        self.phases.iter().map(|a| a.radians()).collect()
    }

    /// `Φ_k`, reduced into `[0, 2π)`.
    pub fn second_differences(&self) -> Vec<Angle> {
        self.phases
            .windows(3)
            .map(|w| add(sub(w[2], scale(w[1], 2)), w[0]).reduce())
            .collect()
    }

    /// Add a constant to every phase without re-gauging.
    pub fn shifted_by(&self, c: f64) -> Vec<f64> {
        self.radians().iter().map(|p| p + c).collect()
    }
}

impl fmt::Display for CompositeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_pi_list(&self.phases))
    }
}

fn add(a: Angle, b: Angle) -> Angle {
    match (a, b) {
        (Angle::Exact(x), Angle::Exact(y)) => Angle::Exact(x + y),
        _ => Angle::Radians(a.radians() + b.radians()),
    }
}

fn sub(a: Angle, b: Angle) -> Angle {
    match (a, b) {
        (Angle::Exact(x), Angle::Exact(y)) => Angle::Exact(x - y),
        _ => Angle::Radians(a.radians() - b.radians()),
    }
}

fn scale(a: Angle, k: i64) -> Angle {
    match a {
        Angle::Exact(x) => Angle::Exact(x * k),
        Angle::Radians(x) => Angle::Radians(x * k as f64),
    }
}

pub fn phases_from_law(law: &PhaseLaw) -> CompositeSequence {
    let n = law.n();
    let phases = (1..=n)
        .map(|k| {
            let mut acc = scale(law.phi2, k as i64 - 1);
            for l in 1..k.saturating_sub(1) {
                acc = add(acc, scale(law.big_phi[l - 1], (k - l - 1) as i64));
            }
            acc.reduce()
        })
        .collect();
    CompositeSequence {
        phases,
        label: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub big_phi: Vec<PiRational>,
    /// `(label, φ2)` pairs, e.g. `("a", 5π/6)`.
    pub named_variants: Vec<(&'static str, PiRational)>,
    pub j0: usize,
}

impl CatalogEntry {
    pub fn n(&self) -> usize {
        self.big_phi.len() + 2
    }

    pub fn law(&self, phi2: Angle) -> PhaseLaw {
        PhaseLaw {
            big_phi: self.big_phi.iter().map(|&r| Angle::Exact(r)).collect(),
            phi2,
        }
    }

    pub fn big_phi_radians(&self) -> Vec<f64> {
        self.big_phi.iter().map(|r| r.radians()).collect()
    }

    pub fn variant(&self, label: &str) -> Option<PiRational> {
        self.named_variants
            .iter()
            .find(|(l, _)| *l == label)
            .map(|&(_, p)| p)
    }
}

fn over(den: i64, nums: &[i64]) -> Vec<PiRational> {
    nums.iter().map(|&k| PiRational::new(k, den)).collect()
}

/// Universal phase sets with their a/b variants and nullification orders.
pub fn catalog() -> Vec<CatalogEntry> {
    let deg = |d: f64| PiRational::from_degrees(d).expect("catalog angles are rational");
    vec![
        CatalogEntry {
            name: "U3",
            big_phi: over(1, &[1]),
            named_variants: vec![("a", deg(90.0)), ("b", deg(0.0))],
            j0: 0,
        },
        CatalogEntry {
            name: "U5",
            big_phi: over(3, &[2, 3, 2]),
            named_variants: vec![("a", deg(150.0)), ("b", deg(330.0))],
            j0: 2,
        },
        CatalogEntry {
            name: "U7",
            big_phi: over(6, &[6, 4, 5, 4, 6]),
            named_variants: vec![("a", deg(165.0)), ("b", deg(345.0))],
            j0: 2,
        },
        CatalogEntry {
            name: "U13",
            big_phi: over(12, &[12, 16, 14, 16, 16, 11, 16, 16, 14, 16, 12]),
            named_variants: vec![("a", deg(67.5)), ("b", deg(247.5))],
            j0: 4,
        },
        CatalogEntry {
            name: "U25",
            big_phi: over(
                3,
                &[
                    2, 3, 2, 2, 3, 2, 3, 2, 4, 1, 2, 3, 2, 1, 4, 2, 3, 2, 3, 2, 2, 3, 2,
                ],
            ),
            named_variants: vec![("a", deg(150.0)), ("b", deg(330.0))],
            j0: 8,
        },
    ]
}

/// Find a catalog entry by name (`U5`) or variant name (`U5a`).
pub fn catalog_entry(name: &str) -> Result<(CatalogEntry, Option<PiRational>)> {
    let cat = catalog();
    if let Some(e) = cat.iter().find(|e| e.name.eq_ignore_ascii_case(name)) {
        return Ok((e.clone(), None));
    }
    for e in cat {
        for &(label, phi2) in &e.named_variants {
            if format!("{}{}", e.name, label).eq_ignore_ascii_case(name) {
                return Ok((e.clone(), Some(phi2)));
            }
        }
    }
    Err(Error::Lookup(name.to_string()))
}

pub fn catalog_lookup(name: &str, phi2: Angle) -> Result<CompositeSequence> {
    let (entry, _) = catalog_entry(name)?;
    let label = format!("{}({}°)", entry.name, fmt_degrees(phi2.degrees()));
    Ok(phases_from_law(&entry.law(phi2)).with_label(label))
}

/// Degrees without trailing zeros, rounded to 1e-9.
pub fn fmt_degrees(d: f64) -> String {
    let r = (d * 1e9).round() / 1e9;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// `U(α, β+φ_n) ··· U(α, β+φ_1)`.
pub fn composite_propagator(seq: &CompositeSequence, p: &PulseParams) -> Unitary2 {
    compose_radians(&seq.radians(), p)
}

/// [`composite_propagator`] for raw phases in radians.
pub fn compose_radians(phases: &[f64], p: &PulseParams) -> Unitary2 {
    phases.iter().fold(Unitary2::IDENTITY, |acc, &phi| {
        make_propagator(&p.shifted(phi)) * acc
    })
}

/// Product of identical physical pulses, each rephased by its `φ_k`.
pub fn composite_physical_propagator(
    seq: &CompositeSequence,
    pulse: &PulseSpec,
    propagator: &Propagator,
) -> Result<Unitary2> {
    let u = propagator.propagate(pulse)?;
    Ok(compose_unitary(seq, &u))
}

/// Compose an already computed single-pulse propagator.
pub fn compose_unitary(seq: &CompositeSequence, u: &Unitary2) -> Unitary2 {
    seq.phases.iter().fold(Unitary2::IDENTITY, |acc, phi| {
        shift_phase(u, phi.radians()) * acc
    })
}

/// Flip the sign of every phase, then re-gauge to `φ1 = 0`.
pub fn reflect(seq: &CompositeSequence) -> CompositeSequence {
    let first = seq.phases[0];
    let phases = seq
        .phases
        .iter()
        .map(|&p| sub(scale(p, -1), scale(first, -1)).reduce())
        .collect();
    CompositeSequence {
        phases,
        label: seq.label.as_ref().map(|l| format!("reflect[{l}]")),
    }
}

/// Contents of a sequence file.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceFile {
    Law(PhaseLaw),
    Phases(CompositeSequence),
}

impl SequenceFile {
    pub fn sequence(&self) -> CompositeSequence {
        match self {
            SequenceFile::Law(l) => phases_from_law(l),
            SequenceFile::Phases(s) => s.clone(),
        }
    }

    /// Φ set; derived from second differences for explicit phase lists.
    pub fn big_phi(&self) -> Vec<Angle> {
        match self {
            SequenceFile::Law(l) => l.big_phi.clone(),
            SequenceFile::Phases(s) => s.second_differences(),
        }
    }

    /// Parse the text format; returns non-fatal warnings alongside.
    ///
    /// ```text
    /// n=5
    /// law: phi2=5π/6; Phi=2π/3,π,2π/3
    /// ```
    /// or `phases: 0,5π/6,...` in place of the law line.
    pub fn parse<R: BufRead>(reader: R) -> Result<(Self, Vec<String>)> {
        let mut n: Option<usize> = None;
        let mut body: Option<(usize, String)> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            if n.is_none() {
                let v = t
                    .strip_prefix("n=")
                    .ok_or_else(|| Error::parse(i + 1, "expected header `n=<int>`"))?;
                n = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| Error::parse(i + 1, format!("bad pulse count `{v}`")))?,
                );
            } else if body.is_none() {
                body = Some((i + 1, t.to_string()));
            } else {
                return Err(Error::parse(i + 1, "unexpected extra line"));
            }
        }
        let n = n.ok_or_else(|| Error::parse(1, "missing header `n=<int>`"))?;
        let (line_no, body) = body.ok_or_else(|| Error::parse(2, "missing law or phases line"))?;
        let list = |s: &str| -> Result<Vec<Angle>> {
            s.split(',')
                .map(|x| Angle::parse(x).map_err(|_| Error::parse(line_no, format!("bad angle `{x}`"))))
                .collect()
        };
        let mut warnings = Vec::new();
        if let Some(rest) = body.strip_prefix("law:") {
            let mut phi2 = None;
            let mut big = None;
            for part in rest.split(';') {
                let part = part.trim();
                if let Some(v) = part.strip_prefix("phi2=") {
                    phi2 = Some(Angle::parse(v).map_err(|_| Error::parse(line_no, format!("bad phi2 `{v}`")))?);
                } else if let Some(v) = part.strip_prefix("Phi=") {
                    big = Some(list(v)?);
                } else if !part.is_empty() {
                    return Err(Error::parse(line_no, format!("unknown law field `{part}`")));
                }
            }
            let phi2 = phi2.ok_or_else(|| Error::parse(line_no, "law without phi2"))?;
            let big = big.ok_or_else(|| Error::parse(line_no, "law without Phi"))?;
            if big.len() + 2 != n {
                return Err(Error::parse(
                    line_no,
                    format!("n={n} requires {} Phi values, found {}", n.saturating_sub(2), big.len()),
                ));
            }
            Ok((SequenceFile::Law(PhaseLaw::new(big, phi2)?), warnings))
        } else if let Some(rest) = body.strip_prefix("phases:") {
            let phases = list(rest)?;
            if phases.len() != n {
                return Err(Error::parse(
                    line_no,
                    format!("n={n} but {} phases given", phases.len()),
                ));
            }
            let (seq, regauged) = CompositeSequence::from_phases(phases)?;
            if regauged {
                warnings.push("first phase was nonzero; all phases shifted so that φ1 = 0".into());
            }
            Ok((SequenceFile::Phases(seq), warnings))
        } else {
            Err(Error::parse(line_no, "expected `law:` or `phases:`"))
        }
    }

    pub fn from_path(path: &Path) -> Result<(Self, Vec<String>)> {
        let f = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(f))
    }

    pub fn to_text(&self) -> String {
        let join = |xs: &[Angle]| xs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        match self {
            SequenceFile::Law(l) => format!(
                "n={}\nlaw: phi2={}; Phi={}\n",
                l.n(),
                l.phi2,
                join(&l.big_phi)
            ),
            SequenceFile::Phases(s) => format!("n={}\nphases: {}\n", s.len(), join(&s.phases)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pis(den: i64, nums: &[i64]) -> Vec<Angle> {
        nums.iter().map(|&k| Angle::Exact(PiRational::new(k, den).reduce())).collect()
    }

    #[test]
    fn law_examples() {
        let u3 = PhaseLaw::new(pis(1, &[1]), Angle::from_degrees(90.0)).unwrap();
        assert_eq!(phases_from_law(&u3).phases(), pis(2, &[0, 1, 0]).as_slice());
        let u5 = PhaseLaw::new(pis(3, &[2, 3, 2]), Angle::from_degrees(150.0)).unwrap();
        assert_eq!(phases_from_law(&u5).phases(), pis(6, &[0, 5, 2, 5, 0]).as_slice());
        let zero = PhaseLaw::new(pis(1, &[0, 0, 0, 0]), Angle::ZERO).unwrap();
        assert!(phases_from_law(&zero).phases().iter().all(|p| p.is_zero_mod_2pi()));
    }

    #[test]
    fn lookup_examples() {
        let u7 = catalog_lookup("U7", Angle::from_degrees(165.0)).unwrap();
        assert_eq!(u7.phases(), pis(12, &[0, 11, 10, 17, 10, 11, 0]).as_slice());
        assert_eq!(u7.label(), Some("U7(165°)"));
        let u5b = catalog_lookup("U5", Angle::from_degrees(330.0)).unwrap();
        assert_eq!(u5b.phases(), pis(6, &[0, 11, 2, 11, 0]).as_slice());
        let u13 = catalog_lookup("U13", Angle::from_degrees(67.5)).unwrap();
        assert_eq!(
            u13.phases(),
            pis(24, &[0, 9, 42, 11, 8, 37, 2, 37, 8, 11, 42, 9, 0]).as_slice()
        );
        assert!(matches!(catalog_lookup("U9", Angle::ZERO), Err(Error::Lookup(_))));
        let (e, v) = catalog_entry("u5a").unwrap();
        assert_eq!(e.name, "U5");
        assert_eq!(v, Some(PiRational::new(5, 6)));
    }

    #[test]
    fn anagram_flags() {
        for e in catalog() {
            assert!(e.law(Angle::ZERO).is_anagram(), "{}", e.name);
        }
        let l = PhaseLaw::new(pis(3, &[2, 3, 1]), Angle::ZERO).unwrap();
        assert!(!l.is_anagram());
    }

    #[test]
    fn second_differences_recover_law() {
        for e in catalog() {
            let seq = phases_from_law(&e.law(Angle::from_degrees(37.5)));
            let want: Vec<Angle> = e.big_phi.iter().map(|r| Angle::Exact(r.reduce())).collect();
            assert_eq!(seq.second_differences(), want, "{}", e.name);
        }
    }

    #[test]
    fn composite_edge_cases() {
        let seq = catalog_lookup("U5", Angle::from_degrees(150.0)).unwrap();
        let perfect = PulseParams::new(0.0, 0.7, 0.2).unwrap();
        assert!(composite_propagator(&seq, &perfect).u11.norm() < 1e-15);
        let off = PulseParams::new(1.0, 0.7, 0.2).unwrap();
        assert!((composite_propagator(&seq, &off).u11.norm() - 1.0).abs() < 1e-15);
        let p = PulseParams::new(0.1, 0.4, 0.0).unwrap();
        let u = composite_propagator(&seq, &p);
        assert!(u.transition_probability() >= 1.0 - 1e-5);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn reflect_examples() {
        let u3 = catalog_lookup("U3", Angle::from_degrees(45.0)).unwrap();
        assert_eq!(u3.phases(), pis(4, &[0, 1, 6]).as_slice());
        assert_eq!(reflect(&u3).phases(), pis(4, &[0, 7, 2]).as_slice());
        let u13 = catalog_lookup("U13", Angle::from_degrees(67.5)).unwrap();
        assert_eq!(reflect(&reflect(&u13)).phases(), u13.phases());
    }

    #[test]
    fn file_round_trip_and_errors() {
        let law = catalog_entry("U5").unwrap().0.law(Angle::from_degrees(150.0));
        let f = SequenceFile::Law(law.clone());
        let (back, warn) = SequenceFile::parse(f.to_text().as_bytes()).unwrap();
        assert_eq!(back, f);
        assert!(warn.is_empty());

        let (g, warn) = SequenceFile::parse("n=3\nphases: pi/2, pi, pi/2\n".as_bytes()).unwrap();
        assert_eq!(warn.len(), 1);
        assert_eq!(g.sequence().phases(), pis(2, &[0, 1, 0]).as_slice());

        let bad = [
            "law: phi2=0; Phi=pi",
            "n=4\nlaw: phi2=0; Phi=pi",
            "n=3\nlaw: Phi=pi",
            "n=3\nphases: 0,1",
            "n=3\nfoo: 1",
            "n=x\nphases: 0,0,0",
        ];
        for b in bad {
            assert!(matches!(SequenceFile::parse(b.as_bytes()), Err(Error::Parse { .. })), "{b}");
        }
    }

    #[test]
    fn single_sequence_is_the_pulse() {
        let p = PulseParams::new(0.3, 0.2, 1.1).unwrap();
        let u = composite_propagator(&CompositeSequence::single(), &p);
        assert!(u.max_abs_diff(&make_propagator(&p)) < 1e-15);
    }
}
