use std::cmp::Ordering;
use std::fmt;

use dashu::integer::{IBig, UBig};
use dashu::rational::RBig;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Hp};

/// How the attenuation factor `L` is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum Attenuation {
    /// `L` given directly as a positive rational.
    Value(RBig),
    /// `L = M^beta` for a positive rational `beta`.
    PowerOfArity(RBig),
}

/// Construction parameters: dimension `n`, subdivision arity `M`, attenuation
/// `L` and whether the capped (frozen walk) variant is used.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    dim: usize,
    arity: u32,
    attenuation: Attenuation,
    capped: bool,
}

/// Serializable echo of a parameter set.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ParamsSummary {
    pub n: usize,
    #[serde(rename = "M")]
    pub arity: u32,
    #[serde(rename = "L")]
    pub attenuation: String,
    pub capped: bool,
}

impl Params {
    pub fn new(dim: usize, arity: u32, attenuation: Attenuation, capped: bool) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParams(format!(
                "dimension n = {dim} must be at least 2"
            )));
        }
        if (arity as usize) <= 2 * dim {
            return Err(Error::InvalidParams(format!(
                "arity M = {arity} must exceed 2n = {}",
                2 * dim
            )));
        }
        if arity > 1 << 16 {
            return Err(Error::InvalidParams(format!(
                "arity M = {arity} is too large"
            )));
        }
        let m = RBig::from(arity);
        match &attenuation {
            Attenuation::Value(l) => {
                if *l <= RBig::ONE {
                    return Err(Error::InvalidParams(format!("L = {l} must exceed 1")));
                }
                if capped && *l < m {
                    return Err(Error::InvalidParams(format!(
                        "the capped variant needs L >= M, got L = {l}, M = {arity}"
                    )));
                }
            }
            Attenuation::PowerOfArity(beta) => {
                if *beta <= RBig::ZERO {
                    return Err(Error::InvalidParams(format!(
                        "beta = {beta} must be positive"
                    )));
                }
                if capped && *beta < RBig::ONE {
                    return Err(Error::InvalidParams(format!(
                        "the capped variant needs L >= M, got beta = {beta}"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            arity,
            attenuation,
            capped,
        })
    }

    pub fn with_l(dim: usize, arity: u32, l: RBig, capped: bool) -> Result<Self> {
        Self::new(dim, arity, Attenuation::Value(l), capped)
    }

    pub fn with_beta(dim: usize, arity: u32, beta: RBig, capped: bool) -> Result<Self> {
        Self::new(dim, arity, Attenuation::PowerOfArity(beta), capped)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn attenuation(&self) -> &Attenuation {
        &self.attenuation
    }

    pub fn capped(&self) -> bool {
        self.capped
    }

    /// Same parameters with the capped flag replaced.
    pub fn with_capped(&self, capped: bool) -> Result<Self> {
        Self::new(self.dim, self.arity, self.attenuation.clone(), capped)
    }

    /// The buffer-ring multiplier `M - 2n + 1`.
    pub fn boost(&self) -> u64 {
        self.arity as u64 - 2 * self.dim as u64 + 1
    }

    /// Number of children of a cube, `M^n`.
    pub fn children_per_cube(&self) -> u64 {
        (self.arity as u64).pow(self.dim as u32)
    }

    /// `M^level`, the number of cubes per axis at a level.
    pub fn cells_per_axis(&self, level: u32) -> u64 {
        (self.arity as u64)
            .checked_pow(level)
            .expect("level too deep for 64-bit coordinates")
    }

    /// `L` as an exact rational when it is one.
    pub fn l_exact(&self) -> Option<RBig> {
        match &self.attenuation {
            Attenuation::Value(l) => Some(l.clone()),
            Attenuation::PowerOfArity(beta) => {
                if beta.denominator() == &UBig::ONE {
                    let e: usize = beta.numerator().try_into().ok()?;
                    Some(RBig::from(UBig::from(self.arity).pow(e)))
                } else {
                    None
                }
            }
        }
    }

    /// `R = L (M - 2n + 1)` as an exact rational when `L` is rational.
    pub fn r_exact(&self) -> Option<RBig> {
        self.l_exact().map(|l| l * RBig::from(self.boost()))
    }

    pub fn ln_l(&self) -> f64 {
        match &self.attenuation {
            Attenuation::Value(l) => exact::ln_rbig(l),
            Attenuation::PowerOfArity(beta) => beta.to_f64().value() * (self.arity as f64).ln(),
        }
    }

    pub fn l_f64(&self) -> f64 {
        match self.l_exact() {
            Some(l) => l.to_f64().value(),
            None => self.ln_l().exp(),
        }
    }

    pub fn ln_boost(&self) -> f64 {
        (self.boost() as f64).ln()
    }

    pub fn ln_r(&self) -> f64 {
        self.ln_l() + self.ln_boost()
    }

    /// High-precision `ln L`.
    pub fn hp_ln_l(&self, precision: usize) -> Hp {
        match &self.attenuation {
            Attenuation::Value(l) => exact::hp_ln_rational(l, precision),
            Attenuation::PowerOfArity(beta) => {
                exact::hp_rational(beta, precision)
                    * exact::hp_ln_rational(&RBig::from(self.arity), precision)
            }
        }
    }

    /// `L` written as `base^(p/q)`: the base and the exponent.
    pub(crate) fn l_as_power(&self) -> (RBig, RBig) {
        match &self.attenuation {
            Attenuation::Value(l) => (l.clone(), RBig::ONE),
            Attenuation::PowerOfArity(beta) => (RBig::from(self.arity), beta.clone()),
        }
    }

    /// Exact sign of `boost^a * L^b - 1`, returned as the ordering of
    /// `boost^a * L^b` against 1.
    pub fn power_cmp_one(&self, a: i64, b: i64) -> Ordering {
        let (base, beta) = self.l_as_power();
        // raise everything to the denominator of beta to clear the root
        let q: i64 = (&beta.denominator().clone())
            .try_into()
            .expect("beta denominator too large");
        let p: i64 = beta
            .numerator()
            .try_into()
            .expect("beta numerator too large");
        let lhs = RBig::from(self.boost()).pow((a * q) as isize) * base.pow((b * p) as isize);
        lhs.cmp(&RBig::ONE)
    }

    pub fn summary(&self) -> ParamsSummary {
        ParamsSummary {
            n: self.dim,
            arity: self.arity,
            attenuation: self.attenuation.to_string(),
            capped: self.capped,
        }
    }
}

impl fmt::Display for Attenuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attenuation::Value(l) => write!(f, "{l}"),
            Attenuation::PowerOfArity(beta) => write!(f, "M^{beta}"),
        }
    }
}

/// Parses a decimal or fraction literal (`"8"`, `"1.1"`, `"7/9"`) into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<RBig> {
    let text = text.trim();
    let bad = || Error::InvalidParams(format!("cannot parse `{text}` as a rational number"));
    if let Some((num, den)) = text.split_once('/') {
        let num: IBig = num.trim().parse().map_err(|_| bad())?;
        let den: UBig = den.trim().parse().map_err(|_| bad())?;
        if den == UBig::ZERO {
            return Err(bad());
        }
        return Ok(RBig::from_parts(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: IBig = if digits.is_empty() {
        IBig::ZERO
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = UBig::from(10u8).pow(frac_part.len());
    let value = RBig::from_parts(num, den);
    Ok(if negative { -value } else { value })
}

/// Converts a finite `f64` through its shortest decimal representation.
pub fn rational_from_f64(x: f64) -> Result<RBig> {
    if !x.is_finite() {
        return Err(Error::InvalidParams(format!("{x} is not finite")));
    }
    parse_rational(&format!("{x}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> RBig {
        parse_rational(s).unwrap()
    }

    #[test]
    fn validation_rules() {
        assert!(Params::with_l(2, 8, r("8"), false).is_ok());
        assert!(Params::with_l(2, 4, r("8"), false).is_err());
        assert!(Params::with_l(1, 8, r("8"), false).is_err());
        assert!(Params::with_l(2, 8, r("1"), false).is_err());
        assert!(Params::with_l(2, 16, r("8"), true).is_err());
        assert!(Params::with_l(2, 16, r("16"), true).is_ok());
        assert!(Params::with_beta(2, 16, r("0"), false).is_err());
    }

    #[test]
    fn derived_r_tracks_inputs() {
        let p = Params::with_l(2, 8, r("8"), false).unwrap();
        assert_eq!(p.boost(), 5);
        assert_eq!(p.r_exact().unwrap(), r("40"));
        let q = Params::with_beta(2, 16, r("3"), false).unwrap();
        assert_eq!(q.l_exact().unwrap(), r("4096"));
        assert_eq!(q.r_exact().unwrap(), r("53248"));
        let irr = Params::with_beta(2, 16, r("1/2"), false).unwrap();
        assert!(irr.l_exact().is_none());
        assert!((irr.l_f64() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn power_comparisons() {
        let p = Params::with_l(2, 8, r("8"), false).unwrap();
        assert_eq!(p.power_cmp_one(0, 0), Ordering::Equal);
        assert_eq!(p.power_cmp_one(1, -1), Ordering::Less); // 5/8
        assert_eq!(p.power_cmp_one(2, -1), Ordering::Greater); // 25/8
        let q = Params::with_beta(2, 16, r("1/2"), false).unwrap(); // L = 4, boost 13
        assert_eq!(q.power_cmp_one(1, -2), Ordering::Less); // 13/16
        assert_eq!(q.power_cmp_one(0, -1), Ordering::Less);
        assert_eq!(q.power_cmp_one(2, -4), Ordering::Less); // 169/256
    }

    #[test]
    fn parses_literals() {
        assert_eq!(r("1.1"), RBig::from_parts(11.into(), 10u8.into()));
        assert_eq!(r("7/9"), RBig::from_parts(7.into(), 9u8.into()));
        assert_eq!(r("-0.5"), RBig::from_parts((-1).into(), 2u8.into()));
        assert_eq!(rational_from_f64(1.1).unwrap(), r("11/10"));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }
}
