//! Exact weights `rho_k` as exponent pairs, face values and whole fields.

mod field;

use std::cmp::Ordering;

use dashu::integer::UBig;
use dashu::rational::RBig;
use serde::Serialize;

use crate::cube::{product, ring_index, zone_of_child, zone_of_ring, CubeAddress, Zone};
use crate::error::{domain, Result};
use crate::params::Params;

pub use field::{CellBox, WeightField};

/// A weight `(M - 2n + 1)^a * L^-b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct WeightExponents {
    pub a: u32,
    pub b: u32,
    /// Set once the capped walk has frozen the weight.
    pub frozen: bool,
}

impl WeightExponents {
    pub const ONE: Self = Self {
        a: 0,
        b: 0,
        frozen: false,
    };

    pub fn new(a: u32, b: u32) -> Self {
        Self {
            a,
            b,
            frozen: false,
        }
    }

    pub fn value_exact(&self, params: &Params) -> Option<RBig> {
        let l = params.l_exact()?;
        Some(RBig::from(UBig::from(params.boost()).pow(self.a as usize)) / l.pow(self.b as isize))
    }

    pub fn value_f64(&self, params: &Params) -> f64 {
        (params.boost() as f64).powi(self.a as i32) / params.l_f64().powi(self.b as i32)
    }

    pub fn ln(&self, params: &Params) -> f64 {
        self.a as f64 * params.ln_boost() - self.b as f64 * params.ln_l()
    }

    /// Exact comparison of the represented values.
    pub fn cmp_value(&self, other: &Self, params: &Params) -> Ordering {
        if self.a == other.a && self.b == other.b {
            return Ordering::Equal;
        }
        params.power_cmp_one(
            self.a as i64 - other.a as i64,
            other.b as i64 - self.b as i64,
        )
    }

    pub fn min_value(self, other: Self, params: &Params) -> Self {
        if other.cmp_value(&self, params) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// One refinement step into a child of the given zone.
    pub fn step(self, zone: Zone, capped: bool, walk: &mut i32) -> Self {
        if self.frozen {
            return self;
        }
        if capped {
            let next = *walk + if zone == Zone::P3 { -1 } else { 1 };
            if next == 1 {
                return Self {
                    frozen: true,
                    ..self
                };
            }
            *walk = next;
        }
        match zone {
            Zone::P1 => self,
            Zone::P2 => Self {
                a: self.a + 1,
                ..self
            },
            Zone::P3 => Self {
                b: self.b + 1,
                ..self
            },
        }
    }
}

/// Weight on the interior of the cube addressed by a chain of child offsets.
pub fn weight_exponents(params: &Params, digits: &[Vec<u32>]) -> Result<WeightExponents> {
    let mut w = WeightExponents::ONE;
    let mut walk = 0;
    for d in digits {
        let zone = zone_of_child(params, d)?;
        w = w.step(zone, params.capped(), &mut walk);
    }
    Ok(w)
}

/// Weight `r_k(I)` of a cube.
pub fn cube_weight(params: &Params, cube: &CubeAddress) -> WeightExponents {
    let mut w = WeightExponents::ONE;
    let mut walk = 0;
    for d in cube.digits(params.arity()) {
        let zone = zone_of_ring(params.dim(), ring_index(params.arity(), &d));
        w = w.step(zone, params.capped(), &mut walk);
    }
    w
}

/// A cell of the level-`k` skeleton: along axes with `spans[i]` it covers
/// `[origin_i, origin_i + 1] M^-k`, along the others it is the single
/// coordinate `origin_i M^-k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Face {
    pub level: u32,
    pub origin: Vec<u64>,
    pub spans: Vec<bool>,
}

impl Face {
    /// Level-`k` cubes whose closure contains the face.
    pub fn incident_cubes(&self, params: &Params) -> Result<Vec<CubeAddress>> {
        let n = params.dim();
        if self.origin.len() != n || self.spans.len() != n {
            return domain("face has the wrong number of coordinates");
        }
        if self.spans.iter().all(|&s| s) {
            return domain("a full cube is not a skeleton face");
        }
        let side = params.cells_per_axis(self.level);
        let mut ranges = Vec::with_capacity(n);
        for (&o, &s) in self.origin.iter().zip(&self.spans) {
            if s {
                if o >= side {
                    return domain(format!("face spans past the boundary at coordinate {o}"));
                }
                ranges.push(vec![o]);
            } else {
                if o > side {
                    return domain(format!("face coordinate {o} lies outside [0, {side}]"));
                }
                ranges.push(
                    [o.checked_sub(1), (o < side).then_some(o)]
                        .into_iter()
                        .flatten()
                        .collect(),
                );
            }
        }
        let out = product(&ranges);
        Ok(out
            .into_iter()
            .map(|index| CubeAddress {
                level: self.level,
                index,
            })
            .collect())
    }
}

/// Lower-semicontinuous value of `rho_k` on a skeleton face: the minimum over
/// incident cubes.
pub fn face_weight(params: &Params, face: &Face) -> Result<WeightExponents> {
    let cubes = face.incident_cubes(params)?;
    Ok(cubes
        .iter()
        .map(|c| cube_weight(params, c))
        .reduce(|x, y| x.min_value(y, params))
        .expect("a face has at least one incident cube"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::offsets;

    fn p(n: usize, m: u32, l: u32, capped: bool) -> Params {
        Params::with_l(n, m, RBig::from(l), capped).unwrap()
    }

    #[test]
    fn recursion_examples() {
        let q = p(2, 8, 8, false);
        let w = weight_exponents(&q, &[]).unwrap();
        assert_eq!(w, WeightExponents::ONE);
        let w = weight_exponents(&q, &[vec![3, 3], vec![1, 1]]).unwrap();
        assert_eq!((w.a, w.b), (1, 1));
        assert_eq!(
            w.value_exact(&q).unwrap(),
            RBig::from_parts(5.into(), 8u8.into())
        );
        assert_eq!(w.value_f64(&q), 0.625);
        assert!(weight_exponents(&q, &[vec![9, 0]]).is_err());
    }

    #[test]
    fn capped_freezes_on_first_up_step() {
        let q = p(2, 16, 16, true);
        let w = weight_exponents(&q, &[vec![1, 5], vec![7, 7], vec![1, 1]]).unwrap();
        assert_eq!(
            w,
            WeightExponents {
                a: 0,
                b: 0,
                frozen: true
            }
        );
        // down, up, up: freezes at s/L with the last multiplier dropped
        let w = weight_exponents(&q, &[vec![7, 7], vec![1, 1], vec![1, 1], vec![7, 7]]).unwrap();
        assert_eq!(
            w,
            WeightExponents {
                a: 1,
                b: 1,
                frozen: true
            }
        );
    }

    #[test]
    fn face_examples() {
        let q = p(2, 8, 8, false);
        // edge between a P2 cell (1,3) and a P3 cell (2,3), at x = 2/8
        let f = Face {
            level: 1,
            origin: vec![2, 3],
            spans: vec![false, true],
        };
        let w = face_weight(&q, &f).unwrap();
        assert_eq!(
            w.value_exact(&q).unwrap(),
            RBig::from_parts(1.into(), 8u8.into())
        );
        // corner (2,2) meets cells (1,1), (1,2), (2,1), (2,2)
        let f = Face {
            level: 1,
            origin: vec![2, 2],
            spans: vec![false, false],
        };
        let vals: Vec<_> = f
            .incident_cubes(&q)
            .unwrap()
            .iter()
            .map(|c| cube_weight(&q, c).value_exact(&q).unwrap())
            .collect();
        assert_eq!(vals.len(), 4);
        assert_eq!(face_weight(&q, &f).unwrap(), WeightExponents::new(0, 1));
        // boundary face has a single incident cube
        let f = Face {
            level: 1,
            origin: vec![0, 4],
            spans: vec![false, true],
        };
        assert_eq!(f.incident_cubes(&q).unwrap().len(), 1);
        assert_eq!(face_weight(&q, &f).unwrap(), WeightExponents::ONE);
        let bad = Face {
            level: 1,
            origin: vec![2, 3],
            spans: vec![true, true],
        };
        assert!(face_weight(&q, &bad).is_err());
    }

    #[test]
    fn exact_order_on_irrational_attenuation() {
        // L = 8^(3/2) = 22.6..: s = 5 against L is 5 < 22.6, s^2 = 25 > L
        let q = Params::with_beta(2, 8, RBig::from_parts(3.into(), 2u8.into()), false).unwrap();
        let one = WeightExponents::ONE;
        assert_eq!(
            WeightExponents::new(1, 1).cmp_value(&one, &q),
            Ordering::Less
        );
        assert_eq!(
            WeightExponents::new(2, 1).cmp_value(&one, &q),
            Ordering::Greater
        );
    }

    #[test]
    fn one_step_ratio_bounds() {
        let q = p(3, 8, 8, false);
        let s = q.boost() as f64;
        let l = q.l_f64();
        for o in offsets(3, 8) {
            let w = weight_exponents(&q, &[vec![2, 3, 4], o]).unwrap();
            let parent = weight_exponents(&q, &[vec![2, 3, 4]]).unwrap();
            let ratio = w.value_f64(&q) / parent.value_f64(&q);
            assert!(ratio <= s && ratio >= 1.0 / l);
        }
    }
}
