use dashu::rational::RBig;
use serde::Serialize;

use crate::cube::zone_counts;
use crate::exact::{self, hp_to_decimal, hp_to_f64, Hp};
use crate::params::Params;

/// Law of the per-level weight multiplier: `1`, `M - 2n + 1` or `1/L` with
/// the zone frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierLaw {
    pub counts: (u64, u64, u64),
    pub total: u64,
    pub p1: RBig,
    pub p2: RBig,
    pub p3: RBig,
}

/// Law of the capped walk: up with `p`, down with `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkLaw {
    pub p: RBig,
    pub q: RBig,
}

pub fn laws(params: &Params) -> (MultiplierLaw, WalkLaw) {
    let counts = zone_counts(params);
    let total = params.children_per_cube();
    let frac = |c: u64| RBig::from_parts(c.into(), total.into());
    let law = MultiplierLaw {
        counts,
        total,
        p1: frac(counts.0),
        p2: frac(counts.1),
        p3: frac(counts.2),
    };
    let walk = WalkLaw {
        p: frac(counts.0 + counts.1),
        q: frac(counts.2),
    };
    (law, walk)
}

/// `mu = (M-2n+1)^p2 * L^-p3` with `ln mu`, to 256 bits.
#[derive(Clone, Debug)]
pub struct GeometricMean {
    pub mu: Hp,
    pub ln_mu: Hp,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GeometricMeanSummary {
    pub mu: String,
    pub ln_mu: String,
    pub mu_f64: f64,
}

impl GeometricMean {
    pub fn mu_f64(&self) -> f64 {
        hp_to_f64(&self.mu)
    }

    pub fn ln_mu_f64(&self) -> f64 {
        hp_to_f64(&self.ln_mu)
    }

    pub fn summary(&self) -> GeometricMeanSummary {
        GeometricMeanSummary {
            mu: hp_to_decimal(&self.mu, 40),
            ln_mu: hp_to_decimal(&self.ln_mu, 40),
            mu_f64: self.mu_f64(),
        }
    }
}

pub fn geometric_mean(params: &Params) -> GeometricMean {
    geometric_mean_with(params, exact::HP_BITS)
}

pub fn geometric_mean_with(params: &Params, precision: usize) -> GeometricMean {
    let (law, _) = laws(params);
    let ln_s = exact::hp_ln_rational(&RBig::from(params.boost()), precision);
    let ln_l = params.hp_ln_l(precision);
    let ln_mu = exact::hp_rational(&law.p2, precision) * ln_s
        - exact::hp_rational(&law.p3, precision) * ln_l;
    GeometricMean {
        mu: ln_mu.clone().exp(),
        ln_mu,
    }
}

/// Exact variance of `ln X` for one multiplier draw.
pub fn log_multiplier_variance(params: &Params) -> f64 {
    let prec = exact::HP_BITS;
    let (law, _) = laws(params);
    let ln_s = exact::hp_ln_rational(&RBig::from(params.boost()), prec);
    let ln_l = params.hp_ln_l(prec);
    let p2 = exact::hp_rational(&law.p2, prec);
    let p3 = exact::hp_rational(&law.p3, prec);
    let mean = p2.clone() * ln_s.clone() - p3.clone() * ln_l.clone();
    let second = p2 * ln_s.clone() * ln_s + p3 * ln_l.clone() * ln_l;
    hp_to_f64(&(second - mean.clone() * mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: i64, b: u64) -> RBig {
        RBig::from_parts(a.into(), b.into())
    }

    #[test]
    fn law_examples() {
        let p = Params::with_l(2, 8, RBig::from(8u8), false).unwrap();
        let (law, walk) = laws(&p);
        assert_eq!(
            (law.p1.clone(), law.p2.clone(), law.p3.clone()),
            (frac(28, 64), frac(20, 64), frac(16, 64))
        );
        assert_eq!(law.p1 + law.p2 + law.p3, RBig::ONE);
        assert_eq!(walk.q, frac(1, 4));
        let p = Params::with_l(2, 16, RBig::from(4096u32), false).unwrap();
        let (law, walk) = laws(&p);
        assert_eq!(
            (law.p1, law.p2, law.p3),
            (frac(60, 256), frac(52, 256), frac(144, 256))
        );
        assert_eq!(walk.q, frac(9, 16));
        assert_eq!(walk.p + walk.q, RBig::ONE);
    }

    #[test]
    fn equal_atoms_identity() {
        // L = M - 2n + 1 gives mu = s^(p2 - p3)
        let p = Params::with_l(2, 8, RBig::from(5u8), false).unwrap();
        let g = geometric_mean(&p);
        let expected = (4.0f64 / 64.0) * 5f64.ln();
        assert!((g.ln_mu_f64() - expected).abs() < 1e-15);
    }
}
