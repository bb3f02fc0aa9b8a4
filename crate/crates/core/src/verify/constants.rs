use dashu::rational::RBig;
use serde::Serialize;

use crate::exact::{self, hp_to_decimal, Hp};
use crate::params::Params;

/// `C1 = 2nM(M-2n+1)R / (1 - (M-2n+1)/M)` and `C2 = (R^(2nM+2) - 1)/(R - 1)`,
/// with `R = L(M-2n+1)`.
#[derive(Clone, Debug)]
pub struct Constants {
    /// Exact values, available when `L` is rational.
    pub r: Option<RBig>,
    pub c1: Option<RBig>,
    pub c2: Option<RBig>,
    pub ln_r: f64,
    pub ln_c1: f64,
    pub ln_c2: f64,
    /// `ln C2` to 256 bits.
    pub ln_c2_hp: Hp,
}

/// Serializable digest of the constants.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConstantsSummary {
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "C1")]
    pub c1: String,
    #[serde(rename = "C1_approx")]
    pub c1_approx: f64,
    #[serde(rename = "log10_C2")]
    pub log10_c2: String,
}

pub fn constants(params: &Params) -> Constants {
    let n = params.dim() as u64;
    let m = params.arity() as u64;
    let s = params.boost();
    let exponent = (2 * n * m + 2) as usize;
    // 1 - s/M = (2n - 1)/M, so C1 = 2n M^2 s R / (2n - 1)
    let c1_factor = RBig::from(2 * n * m * m * s) / RBig::from(2 * n - 1);
    let r = params.r_exact();
    let c1 = r.as_ref().map(|r| c1_factor.clone() * r);
    let c2 = r
        .as_ref()
        .map(|r| (r.pow(exponent as isize) - RBig::ONE) / (r.clone() - RBig::ONE));
    let ln_r = params.ln_r();
    let ln_c1 = exact::ln_rbig(&c1_factor) + ln_r;

    let prec = exact::HP_BITS;
    let hp_ln_r = params.hp_ln_l(prec) + exact::hp_ln_rational(&RBig::from(s), prec);
    let ln_c2_hp = match &c2 {
        Some(c2) => exact::hp_ln_rational(c2, prec),
        None => {
            let one = Hp::ONE.with_precision(prec).value();
            let big = (hp_ln_r.clone() * Hp::from(exponent as u64)).exp();
            (big - one.clone()).ln() - (hp_ln_r.exp() - one).ln()
        }
    };
    Constants {
        r,
        c1,
        c2,
        ln_r,
        ln_c1,
        ln_c2: exact::hp_to_f64(&ln_c2_hp),
        ln_c2_hp,
    }
}

impl Constants {
    pub fn c1_f64(&self) -> f64 {
        self.ln_c1.exp()
    }

    pub fn log10_c2(&self) -> f64 {
        self.ln_c2 / std::f64::consts::LN_10
    }

    pub fn summary(&self) -> ConstantsSummary {
        let ln10 = exact::hp_ln_rational(&RBig::from(10u8), exact::HP_BITS);
        ConstantsSummary {
            r: self
                .r
                .as_ref()
                .map_or_else(|| format!("{:.12e}", self.ln_r.exp()), |r| r.to_string()),
            c1: self
                .c1
                .as_ref()
                .map_or_else(|| format!("{:.12e}", self.c1_f64()), |c| c.to_string()),
            c1_approx: self.c1_f64(),
            log10_c2: hp_to_decimal(&(self.ln_c2_hp.clone() / ln10), 20),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashu::integer::{IBig, UBig};

    #[test]
    fn reference_values() {
        let p = Params::with_l(2, 8, RBig::from(8u8), false).unwrap();
        let c = constants(&p);
        assert_eq!(c.r, Some(RBig::from(40u8)));
        assert_eq!(
            c.c1,
            Some(RBig::from_parts(IBig::from(51200), UBig::from(3u8)))
        );
        // geometric series 1 + 40 + ... + 40^33
        let series: UBig = (0..34).map(|j| UBig::from(40u8).pow(j)).sum();
        assert_eq!(c.c2, Some(RBig::from(series)));
        assert!((c.log10_c2() - 52.879).abs() < 1e-3);
        assert!((c.c1_f64() - 51200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn irrational_attenuation_matches_rational() {
        // L = 16^(1/2) = 4 given both ways
        let a = Params::with_l(2, 16, RBig::from(4u8), false).unwrap();
        let b = Params::with_beta(2, 16, RBig::from_parts(1.into(), 2u8.into()), false).unwrap();
        let (ca, cb) = (constants(&a), constants(&b));
        assert!((ca.ln_c2 - cb.ln_c2).abs() < 1e-12);
        assert!((ca.ln_c1 - cb.ln_c1).abs() < 1e-12);
        assert!(cb.c2.is_none());
    }
}
