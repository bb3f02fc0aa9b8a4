//! Exact and high-precision helpers: logarithms of big rationals, products of
//! rational powers and their exact comparison against one.

use std::cmp::Ordering;

use dashu::base::{BitTest, UnsignedAbs};
use dashu::float::round::mode::HalfEven;
use dashu::float::FBig;
use dashu::integer::{IBig, UBig};
use dashu::rational::RBig;

/// Binary arbitrary-precision float used for logarithms and exponentials.
pub type Hp = FBig<HalfEven, 2>;

/// Default working precision in bits (about 77 decimal digits).
pub const HP_BITS: usize = 256;

pub fn hp_int(x: &IBig, precision: usize) -> Hp {
    Hp::from(x.clone()).with_precision(precision).value()
}

pub fn hp_rational(r: &RBig, precision: usize) -> Hp {
    let num = hp_int(r.numerator(), precision);
    let den = Hp::from(r.denominator().clone())
        .with_precision(precision)
        .value();
    num / den
}

/// Natural logarithm of a positive rational.
pub fn hp_ln_rational(r: &RBig, precision: usize) -> Hp {
    assert!(*r > RBig::ZERO, "logarithm of a non-positive rational");
    let num = Hp::from(r.numerator().clone())
        .with_precision(precision)
        .value();
    let den = Hp::from(r.denominator().clone())
        .with_precision(precision)
        .value();
    num.ln() - den.ln()
}

pub fn hp_to_f64(x: &Hp) -> f64 {
    x.to_f64().value()
}

/// Decimal rendering with `digits` significant digits.
pub fn hp_to_decimal(x: &Hp, digits: usize) -> String {
    let dec = x.to_decimal().value();
    format!("{}", dec.with_precision(digits).value())
}

/// `ln x` for a positive big integer of any size.
pub fn ln_ubig(x: &UBig) -> f64 {
    assert!(*x > UBig::ZERO, "logarithm of zero");
    let bits = x.bit_len();
    if bits <= 1000 {
        return x.to_f64().value().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().value();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln r` for a positive rational of any size.
pub fn ln_rbig(r: &RBig) -> f64 {
    assert!(*r > RBig::ZERO, "logarithm of a non-positive rational");
    let num: UBig = r.numerator().unsigned_abs();
    ln_ubig(&num) - ln_ubig(r.denominator())
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A finite product `prod base_i ^ exponent_i` of positive rationals raised to
/// rational powers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PowerProduct {
    factors: Vec<(RBig, RBig)>,
}

/// Exact comparisons give up above this many bits of intermediate size.
pub const EXACT_BIT_BUDGET: u64 = 1 << 23;

impl PowerProduct {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn times(mut self, base: RBig, exponent: RBig) -> Self {
        assert!(base > RBig::ZERO, "power product bases must be positive");
        if exponent != RBig::ZERO && !base.is_one() {
            self.factors.push((base, exponent));
        }
        self
    }

    pub fn factors(&self) -> &[(RBig, RBig)] {
        &self.factors
    }

    pub fn ln_f64(&self) -> f64 {
        self.factors
            .iter()
            .map(|(b, e)| e.to_f64().value() * ln_rbig(b))
            .sum()
    }

    pub fn ln_hp(&self, precision: usize) -> Hp {
        let mut acc = Hp::ZERO.with_precision(precision).value();
        for (b, e) in &self.factors {
            acc += hp_rational(e, precision) * hp_ln_rational(b, precision);
        }
        acc
    }

    /// Exact comparison of the product against 1, or `None` when clearing
    /// the rational exponents would produce integers larger than `bit_budget`.
    pub fn exact_cmp_one(&self, bit_budget: u64) -> Option<Ordering> {
        let mut lcm = 1u64;
        for (_, e) in &self.factors {
            let d: u64 = e.denominator().try_into().ok()?;
            lcm = lcm.checked_mul(d / gcd_u64(lcm, d))?;
        }
        let mut cost = 0u64;
        let mut integer_exponents = Vec::with_capacity(self.factors.len());
        for (b, e) in &self.factors {
            let scaled = e.clone() * RBig::from(lcm);
            debug_assert_eq!(scaled.denominator(), &UBig::ONE);
            let k: i64 = scaled.numerator().try_into().ok()?;
            let size =
                b.numerator().unsigned_abs().bit_len() as u64 + b.denominator().bit_len() as u64;
            cost = cost.checked_add(k.unsigned_abs().checked_mul(size)?)?;
            integer_exponents.push(k);
        }
        if cost > bit_budget {
            return None;
        }
        let mut num = UBig::ONE;
        let mut den = UBig::ONE;
        for ((b, _), k) in self.factors.iter().zip(integer_exponents) {
            let bn = b.numerator().unsigned_abs();
            let bd = b.denominator().clone();
            let e = k.unsigned_abs() as usize;
            if k >= 0 {
                num *= bn.pow(e);
                den *= bd.pow(e);
            } else {
                num *= bd.pow(e);
                den *= bn.pow(e);
            }
        }
        Some(num.cmp(&den))
    }

    /// Comparison against 1: exact when affordable, otherwise decided in
    /// 512-bit arithmetic.
    pub fn cmp_one(&self) -> Ordering {
        if let Some(ord) = self.exact_cmp_one(EXACT_BIT_BUDGET) {
            return ord;
        }
        let ln = self.ln_hp(512);
        ln.partial_cmp(&Hp::ZERO).unwrap_or(Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: u64) -> RBig {
        RBig::from(x)
    }

    fn frac(n: i64, d: u64) -> RBig {
        RBig::from_parts(n.into(), d.into())
    }

    #[test]
    fn ln_of_huge_integers() {
        let big = UBig::from(40u8).pow(340);
        let expected = 340.0 * 40f64.ln();
        assert!((ln_ubig(&big) - expected).abs() < 1e-9 * expected);
        let r = RBig::from_parts(
            IBig::from(UBig::from(3u8).pow(900)),
            UBig::from(2u8).pow(700),
        );
        let expected = 900.0 * 3f64.ln() - 700.0 * 2f64.ln();
        assert!((ln_rbig(&r) - expected).abs() < 1e-9);
    }

    #[test]
    fn power_product_exact_matches_float() {
        // 13^52 < 2^448, but 13^52 > 2^192 by less than half a bit
        let p = PowerProduct::new()
            .times(int(13), frac(52, 256))
            .times(int(2), frac(-448, 256));
        assert_eq!(p.exact_cmp_one(EXACT_BIT_BUDGET), Some(Ordering::Less));
        assert!(p.ln_f64() < 0.0);
        let q = PowerProduct::new()
            .times(int(13), frac(52, 256))
            .times(int(2), frac(-192, 256));
        assert_eq!(q.cmp_one(), Ordering::Greater);
        let unit = PowerProduct::new()
            .times(int(4), frac(1, 2))
            .times(int(2), frac(-1, 1));
        assert_eq!(unit.cmp_one(), Ordering::Equal);
    }

    #[test]
    fn budget_guard_falls_back() {
        let p = PowerProduct::new()
            .times(int(3), int(1 << 40))
            .times(int(2), frac(-(1i64 << 40) * 3 / 2, 1));
        assert_eq!(p.exact_cmp_one(1 << 20), None);
        assert_eq!(p.cmp_one(), Ordering::Greater); // 3 > 2^1.5
    }

    #[test]
    fn hp_values() {
        let ln2 = hp_ln_rational(&int(2), HP_BITS);
        assert!((hp_to_f64(&ln2) - std::f64::consts::LN_2).abs() < 1e-16);
        let s = hp_to_decimal(&ln2, 30);
        assert!(s.starts_with("0.69314718055994530941723212145"), "{s}");
    }
}
