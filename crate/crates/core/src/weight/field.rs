use crate::cube::{ring_index, zone_of_ring};
use crate::error::{domain, Error, Result};
use crate::params::Params;

use super::WeightExponents;

/// An inclusive box of cell indices at one level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellBox {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl CellBox {
    pub fn full(dim: usize, side: u64) -> Self {
        Self {
            lo: vec![0; dim],
            hi: vec![side - 1; dim],
        }
    }

    pub fn extent(&self, axis: usize) -> u64 {
        self.hi[axis] - self.lo[axis] + 1
    }

    pub fn len(&self) -> u128 {
        (0..self.lo.len()).map(|i| self.extent(i) as u128).product()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, index: &[u64]) -> bool {
        index
            .iter()
            .enumerate()
            .all(|(i, &c)| self.lo[i] <= c && c <= self.hi[i])
    }

    /// The box of ancestors `factor` times coarser.
    pub fn coarsen(&self, factor: u64) -> Self {
        Self {
            lo: self.lo.iter().map(|c| c / factor).collect(),
            hi: self.hi.iter().map(|c| c / factor).collect(),
        }
    }
}

/// The level-`k` weight over a box of cubes, row-major with the last axis
/// fastest.
#[derive(Clone, Debug)]
pub struct WeightField {
    params: Params,
    level: u32,
    region: CellBox,
    cells: Vec<WeightExponents>,
}

impl WeightField {
    pub fn full(params: &Params, level: u32, budget: u64) -> Result<Self> {
        let side = params.cells_per_axis(level);
        Self::over(params, level, CellBox::full(params.dim(), side), budget)
    }

    pub fn over(params: &Params, level: u32, region: CellBox, budget: u64) -> Result<Self> {
        let n = params.dim();
        let side = params.cells_per_axis(level);
        if region.lo.len() != n
            || region.hi.len() != n
            || region.is_empty()
            || region.hi.iter().any(|&h| h >= side)
        {
            return domain(format!(
                "cell box {region:?} is not inside the level-{level} grid"
            ));
        }
        if region.len() > budget as u128 {
            return Err(Error::Resource {
                what: format!("level-{level} weight field"),
                required: region.len(),
                budget: budget as u128,
            });
        }
        let m = params.arity() as u64;
        let mut states = vec![(WeightExponents::ONE, 0i32)];
        let mut prev = CellBox::full(n, 1);
        for j in 1..=level {
            let cur = region.coarsen(m.pow(level - j));
            let mut next = Vec::with_capacity(cur.len() as usize);
            let mut index = cur.lo.clone();
            let mut offset = vec![0u32; n];
            let mut parent = vec![0u64; n];
            loop {
                for i in 0..n {
                    offset[i] = (index[i] % m) as u32;
                    parent[i] = index[i] / m;
                }
                let (w, mut walk) = states[linear(&prev, &parent)];
                let zone = zone_of_ring(n, ring_index(params.arity(), &offset));
                let w = w.step(zone, params.capped(), &mut walk);
                next.push((w, walk));
                if !advance(&mut index, &cur) {
                    break;
                }
            }
            states = next;
            prev = cur;
        }
        Ok(Self {
            params: params.clone(),
            level,
            region,
            cells: states.into_iter().map(|(w, _)| w).collect(),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn region(&self) -> &CellBox {
        &self.region
    }

    pub fn cells(&self) -> &[WeightExponents] {
        &self.cells
    }

    /// Weight of the cube with the given level index, which must lie in the
    /// region.
    pub fn get(&self, index: &[u64]) -> WeightExponents {
        assert!(
            self.region.contains(index),
            "cube {index:?} outside the weight field region"
        );
        self.cells[linear(&self.region, index)]
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|w| w.value_f64(&self.params))
            .collect()
    }
}

pub(crate) fn linear(region: &CellBox, index: &[u64]) -> usize {
    let mut acc = 0u64;
    for i in 0..index.len() {
        acc = acc * region.extent(i) + (index[i] - region.lo[i]);
    }
    acc as usize
}

/// Row-major increment inside a box; false once past the end.
pub(crate) fn advance(index: &mut [u64], region: &CellBox) -> bool {
    for i in (0..index.len()).rev() {
        if index[i] < region.hi[i] {
            index[i] += 1;
            return true;
        }
        index[i] = region.lo[i];
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::CubeAddress;
    use crate::weight::cube_weight;
    use dashu::rational::RBig;

    #[test]
    fn field_matches_per_cube_recursion() {
        for capped in [false, true] {
            let p = Params::with_l(2, 8, RBig::from(8u8), capped).unwrap();
            let f = WeightField::full(&p, 2, 1 << 20).unwrap();
            for i in 0..64 {
                for j in 0..64 {
                    let c = CubeAddress {
                        level: 2,
                        index: vec![i, j],
                    };
                    assert_eq!(f.get(&[i, j]), cube_weight(&p, &c));
                }
            }
            let region = CellBox {
                lo: vec![100, 7],
                hi: vec![130, 9],
            };
            let g = WeightField::over(&p, 3, region.clone(), 1 << 20).unwrap();
            for i in 100..=130 {
                for j in 7..=9 {
                    let c = CubeAddress {
                        level: 3,
                        index: vec![i, j],
                    };
                    assert_eq!(g.get(&[i, j]), cube_weight(&p, &c));
                }
            }
        }
    }

    #[test]
    fn level_one_counts() {
        let p = Params::with_l(2, 8, RBig::from(8u8), false).unwrap();
        let f = WeightField::full(&p, 1, 1 << 20).unwrap();
        let count = |a, b| f.cells().iter().filter(|w| (w.a, w.b) == (a, b)).count();
        assert_eq!((count(0, 0), count(1, 0), count(0, 1)), (28, 20, 16));
    }

    #[test]
    fn budget_is_enforced() {
        let p = Params::with_l(2, 8, RBig::from(8u8), false).unwrap();
        let err = WeightField::full(&p, 3, 1000).unwrap_err();
        assert!(matches!(
            err,
            Error::Resource {
                required: 262144,
                ..
            }
        ));
    }
}
