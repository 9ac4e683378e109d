//! Angles as exact rational multiples of π, with a floating fallback.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator tried when snapping a float to a rational multiple of π.
pub const SNAP_MAX_DEN: i64 = 720;

/// `num/den · π`, always stored reduced with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PiRational {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl PiRational {
    pub const ZERO: PiRational = PiRational { num: 0, den: 1 };
    pub const PI: PiRational = PiRational { num: 1, den: 1 };

    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        PiRational {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn integer(k: i64) -> Self {
        PiRational { num: k, den: 1 }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn radians(self) -> f64 {
        self.num as f64 * PI / self.den as f64
    }

    /// Reduce into `[0, 2π)`.
    pub fn reduce(self) -> Self {
        let period = 2 * self.den;
        PiRational::new(self.num.rem_euclid(period), self.den)
    }

    pub fn is_zero_mod_2pi(self) -> bool {
        self.reduce().num == 0
    }

    /// Exact conversion from degrees when `deg/180` is a rational with a
    /// denominator up to [`SNAP_MAX_DEN`]; e.g. 67.5° → 3π/8.
    pub fn from_degrees(deg: f64) -> Option<Self> {
        Self::snap(deg / 180.0, 1e-12)
    }

    /// Find `p/q` with `q ≤ SNAP_MAX_DEN` and `|x − p/q| ≤ tol` (x in units of π).
    pub fn snap(x: f64, tol: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        (1..=SNAP_MAX_DEN).find_map(|q| {
            let p = (x * q as f64).round();
            ((x - p / q as f64).abs() <= tol).then(|| PiRational::new(p as i64, q))
        })
    }

    pub fn degrees(self) -> f64 {
        self.num as f64 * 180.0 / self.den as f64
    }
}

impl Add for PiRational {
    type Output = PiRational;
    fn add(self, o: PiRational) -> PiRational {
        PiRational::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
}

impl Sub for PiRational {
    type Output = PiRational;
    fn sub(self, o: PiRational) -> PiRational {
        self + (-o)
    }
}

impl Neg for PiRational {
    type Output = PiRational;
    fn neg(self) -> PiRational {
        PiRational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Mul<i64> for PiRational {
    type Output = PiRational;
    fn mul(self, k: i64) -> PiRational {
        PiRational::new(self.num * k, self.den)
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (0, _) => write!(f, "0"),
            (1, 1) => write!(f, "π"),
            (-1, 1) => write!(f, "-π"),
            (n, 1) => write!(f, "{n}π"),
            (1, d) => write!(f, "π/{d}"),
            (-1, d) => write!(f, "-π/{d}"),
            (n, d) => write!(f, "{n}π/{d}"),
        }
    }
}

/// A phase: exact where it came from rational data, floating otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Exact(PiRational),
    Radians(f64),
}

impl Angle {
    pub const ZERO: Angle = Angle::Exact(PiRational::ZERO);

    pub fn radians(self) -> f64 {
        match self {
            Angle::Exact(r) => r.radians(),
            Angle::Radians(x) => x,
        }
    }

    pub fn exact(self) -> Option<PiRational> {
        match self {
            Angle::Exact(r) => Some(r),
            Angle::Radians(_) => None,
        }
    }

    /// Degrees are taken as exact whenever they are a simple rational multiple of 180°.
    pub fn from_degrees(deg: f64) -> Angle {
        PiRational::from_degrees(deg)
            .map(Angle::Exact)
            .unwrap_or(Angle::Radians(deg.to_radians()))
    }

    pub fn degrees(self) -> f64 {
        match self {
            Angle::Exact(r) => r.degrees(),
            Angle::Radians(x) => x.to_degrees(),
        }
    }

    /// Reduce into `[0, 2π)`.
    pub fn reduce(self) -> Angle {
        match self {
            Angle::Exact(r) => Angle::Exact(r.reduce()),
            Angle::Radians(x) => Angle::Radians(x.rem_euclid(2.0 * PI)),
        }
    }

    pub fn is_zero_mod_2pi(self) -> bool {
        match self {
            Angle::Exact(r) => r.is_zero_mod_2pi(),
            Angle::Radians(x) => {
                let r = x.rem_euclid(2.0 * PI);
                r.min(2.0 * PI - r) < 1e-12
            }
        }
    }

    /// Try to express a float angle as a rational multiple of π within `tol` radians.
    pub fn snapped(self, tol: f64) -> Angle {
        match self {
            Angle::Radians(x) => PiRational::snap(x / PI, tol / PI)
                .map(Angle::Exact)
                .unwrap_or(self),
            exact => exact,
        }
    }

    /// Parse `0`, `π`, `pi`, `2π/3`, `2/3π`, `-pi/2`, `5*pi/6`; plain numbers are radians.
    pub fn parse(s: &str) -> Result<Angle> {
        let t: String = s.trim().chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::parse(0, format!("cannot parse angle `{s}`"));
        if t.is_empty() {
            return Err(bad());
        }
        let t = t.replace("pi", "π").replace('*', "");
        let Some(pos) = t.find('π') else {
            if t.trim_start_matches(['-', '+']) == "0" {
                return Ok(Angle::Exact(PiRational::ZERO));
            }
            return t.parse::<f64>().map(Angle::Radians).map_err(|_| bad());
        };
        let (head, tail) = (&t[..pos], &t[pos + 'π'.len_utf8()..]);
        let int = |x: &str| x.parse::<i64>().map_err(|_| bad());
        // head may be "", "-", "2", "-2", "2/3"
        let (hnum, hden) = match head {
            "" | "+" => (1, 1),
            "-" => (-1, 1),
            h => match h.split_once('/') {
                Some((a, b)) => (int(a)?, int(b)?),
                None => (int(h)?, 1),
            },
        };
        let tden = match tail {
            "" => 1,
            t => int(t.strip_prefix('/').ok_or_else(bad)?)?,
        };
        if hden == 0 || tden == 0 {
            return Err(bad());
        }
        Ok(Angle::Exact(PiRational::new(hnum, hden * tden)))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Exact(r) => write!(f, "{r}"),
            Angle::Radians(x) => write!(f, "{x:.15}"),
        }
    }
}

/// Format a list as `(a,b,c)π/d` over a common denominator, or as decimals
/// (radians) when any element is inexact.
pub fn format_pi_list(angles: &[Angle]) -> String {
    let exact: Option<Vec<PiRational>> = angles.iter().map(|a| a.exact()).collect();
    match exact {
        Some(rs) => {
            let den = rs.iter().fold(1i64, |acc, r| acc / gcd(acc, r.den) * r.den);
            let nums: Vec<String> = rs
                .iter()
                .map(|r| (r.num * (den / r.den)).to_string())
                .collect();
            let suffix = if den == 1 {
                "π".to_string()
            } else {
                format!("π/{den}")
            };
            format!("({}){}", nums.join(","), suffix)
        }
        None => {
            let xs: Vec<String> = angles.iter().map(|a| format!("{:.12}", a.radians())).collect();
            format!("({})", xs.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let cases = [
            ("0", PiRational::ZERO),
            ("pi", PiRational::PI),
            ("π", PiRational::PI),
            ("2π/3", PiRational::new(2, 3)),
            ("2/3π", PiRational::new(2, 3)),
            ("-pi/2", PiRational::new(-1, 2)),
            ("5*pi/6", PiRational::new(5, 6)),
            ("3pi", PiRational::new(3, 1)),
        ];
        for (s, want) in cases {
            assert_eq!(Angle::parse(s).unwrap(), Angle::Exact(want), "{s}");
        }
        assert_eq!(Angle::parse("0.5").unwrap(), Angle::Radians(0.5));
        assert!(Angle::parse("2/0π").is_err());
        assert!(Angle::parse("abc").is_err());
    }

    #[test]
    fn display_round_trips() {
        for r in [
            PiRational::new(5, 6),
            PiRational::new(-1, 2),
            PiRational::PI,
            PiRational::new(7, 1),
            PiRational::ZERO,
        ] {
            let s = r.to_string();
            assert_eq!(Angle::parse(&s).unwrap(), Angle::Exact(r), "{s}");
        }
    }

    #[test]
    fn reduce_and_degrees() {
        assert_eq!(PiRational::new(13, 6).reduce(), PiRational::new(1, 6));
        assert_eq!(PiRational::new(-1, 2).reduce(), PiRational::new(3, 2));
        assert_eq!(PiRational::from_degrees(67.5), Some(PiRational::new(3, 8)));
        assert_eq!(PiRational::from_degrees(247.5), Some(PiRational::new(11, 8)));
        assert_eq!(PiRational::from_degrees(330.0), Some(PiRational::new(11, 6)));
    }

    #[test]
    fn list_format() {
        let xs: Vec<Angle> = [0, 5, 2, 5, 0]
            .iter()
            .map(|&k| Angle::Exact(PiRational::new(k, 6)))
            .collect();
        assert_eq!(format_pi_list(&xs), "(0,5,2,5,0)π/6");
        let ys = [Angle::ZERO, Angle::ZERO, Angle::Exact(PiRational::PI)];
        assert_eq!(format_pi_list(&ys), "(0,0,1)π");
    }
}
