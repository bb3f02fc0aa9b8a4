use crate::error::{domain, Result};
use crate::params::Params;

use super::constants::constants;

/// The distortion envelope: `A (s/M)^max(0, -log_M(2nMt))` below
/// `t* = 1/(2nM)` and `A (2nMt)^2` above, with `A = 4 n^2 M^2 C1 C2 R` and
/// `s = M - 2n + 1`. Evaluated in log space.
#[derive(Clone, Debug)]
pub struct EtaCurve {
    ln_a: f64,
    ln_ratio: f64,
    ln_m: f64,
    two_n_m: f64,
}

impl EtaCurve {
    pub fn new(params: &Params) -> Self {
        let c = constants(params);
        let n = params.dim() as f64;
        let m = params.arity() as f64;
        let ln_a = (4.0 * n * n * m * m).ln() + c.ln_c1 + c.ln_c2 + c.ln_r;
        Self {
            ln_a,
            ln_ratio: (params.boost() as f64 / m).ln(),
            ln_m: m.ln(),
            two_n_m: 2.0 * n * m,
        }
    }

    pub fn boundary(&self) -> f64 {
        1.0 / self.two_n_m
    }

    pub fn ln_eta(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("eta needs a positive finite argument, got {t}"));
        }
        let u = (self.two_n_m * t).ln();
        Ok(if u <= 0.0 {
            self.ln_a + (-u / self.ln_m).max(0.0) * self.ln_ratio
        } else {
            self.ln_a + 2.0 * u
        })
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        self.ln_eta(t).map(f64::exp)
    }
}

pub fn eta_bound(params: &Params, t: f64) -> Result<f64> {
    EtaCurve::new(params).eta(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashu::rational::RBig;

    #[test]
    fn shape() {
        let p = Params::with_l(2, 8, RBig::from(8u8), false).unwrap();
        let e = EtaCurve::new(&p);
        let at_boundary = e.ln_eta(e.boundary()).unwrap();
        assert!((at_boundary - e.ln_a).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for j in 1..=12 {
            let v = e.ln_eta(10f64.powi(-j)).unwrap();
            assert!(v < last);
            last = v;
        }
        for t in [1e-9, 1e-4, 0.03, 0.5, 3.0] {
            assert!(e.ln_eta(2.0 * t).unwrap() >= e.ln_eta(t).unwrap());
        }
        assert!(eta_bound(&p, 0.0).is_err());
        assert!(eta_bound(&p, -1.0).is_err());
        // log-linear decay in log t below the boundary
        let slope = (e.ln_eta(1e-200).unwrap() - e.ln_eta(1e-100).unwrap()) / (-100.0 * 10f64.ln());
        let expected = -(5.0f64 / 8.0).ln() / 8f64.ln();
        assert!((slope - expected).abs() < 1e-9);
    }
}
