//! M-adic cube addresses, zone classification of children and grid points.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::Params;

/// Zone of a child cube inside its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Zone {
    /// Touches the parent boundary; weight unchanged.
    P1,
    /// Buffer ring next to the boundary; weight multiplied by `M - 2n + 1`.
    P2,
    /// Interior; weight divided by `L`.
    P3,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::P1, Zone::P2, Zone::P3];
}

/// Ring index of a child offset: its cell distance to the parent boundary.
pub fn ring_index(arity: u32, offset: &[u32]) -> u32 {
    offset
        .iter()
        .map(|&o| o.min(arity - 1 - o))
        .min()
        .unwrap_or(0)
}

/// Zone of a child from its ring index. Ring `r >= 1` sits at Euclidean
/// distance `(r - 1)/M` from the boundary ring (unit parent), which is below
/// `(n - 1)/M` exactly when `r <= n - 1`.
pub fn zone_of_ring(dim: usize, ring: u32) -> Zone {
    if ring == 0 {
        Zone::P1
    } else if (ring as usize) < dim {
        Zone::P2
    } else {
        Zone::P3
    }
}

fn check_offset(params: &Params, offset: &[u32]) -> Result<()> {
    if offset.len() != params.dim() {
        return domain(format!(
            "offset has {} coordinates, expected {}",
            offset.len(),
            params.dim()
        ));
    }
    if let Some(o) = offset.iter().find(|&&o| o >= params.arity()) {
        return domain(format!(
            "offset coordinate {o} is outside [0, {})",
            params.arity()
        ));
    }
    Ok(())
}

pub fn zone_of_child(params: &Params, offset: &[u32]) -> Result<Zone> {
    check_offset(params, offset)?;
    Ok(zone_of_ring(
        params.dim(),
        ring_index(params.arity(), offset),
    ))
}

/// Closed-form zone counts `(M^n - (M-2)^n, (M-2)^n - (M-2n)^n, (M-2n)^n)`.
pub fn zone_counts_closed(params: &Params) -> (u64, u64, u64) {
    let n = params.dim() as u32;
    let m = params.arity() as u64;
    let inner = m - 2 * params.dim() as u64;
    (
        m.pow(n) - (m - 2).pow(n),
        (m - 2).pow(n) - inner.pow(n),
        inner.pow(n),
    )
}

/// Zone counts by enumerating every child offset.
pub fn zone_counts_enumerated(params: &Params) -> (u64, u64, u64) {
    let mut counts = [0u64; 3];
    for offset in offsets(params.dim(), params.arity()) {
        counts[zone_of_ring(params.dim(), ring_index(params.arity(), &offset)) as usize] += 1;
    }
    (counts[0], counts[1], counts[2])
}

/// Zone counts per parent cube. The closed forms are checked against a full
/// enumeration of the `M^n` child offsets.
pub fn zone_counts(params: &Params) -> (u64, u64, u64) {
    let closed = zone_counts_closed(params);
    let enumerated = zone_counts_enumerated(params);
    assert_eq!(
        closed, enumerated,
        "zone enumeration disagrees with the closed forms"
    );
    closed
}

/// All offset vectors in `[0, arity)^dim`, last coordinate fastest.
pub fn offsets(dim: usize, arity: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (arity as u64).pow(dim as u32);
    (0..total).map(move |mut code| {
        let mut v = vec![0u32; dim];
        for slot in v.iter_mut().rev() {
            *slot = (code % arity as u64) as u32;
            code /= arity as u64;
        }
        v
    })
}

/// Cartesian product of per-axis choices.
pub(crate) fn product<T: Copy>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::with_capacity(choices.len())];
    for axis in choices {
        out = out
            .into_iter()
            .flat_map(|v| {
                axis.iter().map(move |&c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

/// A closed level-`k` cube `prod [I_i M^-k, (I_i + 1) M^-k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CubeAddress {
    pub level: u32,
    pub index: Vec<u64>,
}

impl CubeAddress {
    pub fn new(params: &Params, level: u32, index: Vec<u64>) -> Result<Self> {
        if index.len() != params.dim() {
            return domain(format!(
                "cube index has {} coordinates, expected {}",
                index.len(),
                params.dim()
            ));
        }
        let side = params.cells_per_axis(level);
        if let Some(i) = index.iter().find(|&&i| i >= side) {
            return domain(format!(
                "cube index {i} is outside [0, {side}) at level {level}"
            ));
        }
        Ok(Self { level, index })
    }

    pub fn root(dim: usize) -> Self {
        Self {
            level: 0,
            index: vec![0; dim],
        }
    }

    /// Cube reached by following a chain of child offsets from the root.
    pub fn from_digits(params: &Params, digits: &[Vec<u32>]) -> Result<Self> {
        let mut cube = Self::root(params.dim());
        for d in digits {
            check_offset(params, d)?;
            cube = cube.child(params.arity(), d);
        }
        Ok(cube)
    }

    /// Child offsets from the root down to this cube.
    pub fn digits(&self, arity: u32) -> Vec<Vec<u32>> {
        let m = arity as u64;
        let mut out = vec![vec![0u32; self.index.len()]; self.level as usize];
        let mut idx = self.index.clone();
        for digit in out.iter_mut().rev() {
            for (slot, i) in digit.iter_mut().zip(idx.iter_mut()) {
                *slot = (*i % m) as u32;
                *i /= m;
            }
        }
        out
    }

    pub fn child(&self, arity: u32, offset: &[u32]) -> Self {
        let index = self
            .index
            .iter()
            .zip(offset)
            .map(|(&i, &o)| i * arity as u64 + o as u64)
            .collect();
        Self {
            level: self.level + 1,
            index,
        }
    }

    pub fn children(&self, arity: u32) -> Vec<Self> {
        offsets(self.index.len(), arity)
            .map(|o| self.child(arity, &o))
            .collect()
    }

    pub fn parent(&self, arity: u32) -> Option<Self> {
        if self.level == 0 {
            return None;
        }
        let index = self.index.iter().map(|&i| i / arity as u64).collect();
        Some(Self {
            level: self.level - 1,
            index,
        })
    }

    /// Offset of this cube inside its parent.
    pub fn offset_in_parent(&self, arity: u32) -> Vec<u32> {
        self.index
            .iter()
            .map(|&i| (i % arity as u64) as u32)
            .collect()
    }

    /// All level-`k` cubes meeting this one, itself included.
    pub fn neighborhood(&self, arity: u32) -> Vec<Self> {
        let side = (arity as u64).pow(self.level);
        let mut out = vec![self.index.clone()];
        for (axis, &i) in self.index.iter().enumerate() {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(side - 1);
            out = out
                .into_iter()
                .flat_map(|v| {
                    (lo..=hi).map(move |j| {
                        let mut w = v.clone();
                        w[axis] = j;
                        w
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|index| Self {
                level: self.level,
                index,
            })
            .collect()
    }

    /// Whether two closed cubes of the same level intersect.
    pub fn meets(&self, other: &Self) -> bool {
        debug_assert_eq!(self.level, other.level);
        self.index
            .iter()
            .zip(&other.index)
            .all(|(&a, &b)| a.abs_diff(b) <= 1)
    }

    /// Lower corner in units of `M^-level`.
    pub fn corner(&self) -> &[u64] {
        &self.index
    }

    pub fn side(&self, arity: u32) -> f64 {
        (arity as f64).powi(-(self.level as i32))
    }
}

/// A point of `V_K`: integer coordinates over the common denominator `M^K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub level: u32,
    pub coords: Vec<u64>,
}

impl GridPoint {
    pub fn new(params: &Params, level: u32, coords: Vec<u64>) -> Result<Self> {
        if coords.len() != params.dim() {
            return domain(format!(
                "point has {} coordinates, expected {}",
                coords.len(),
                params.dim()
            ));
        }
        let side = params.cells_per_axis(level);
        if let Some(c) = coords.iter().find(|&&c| c > side) {
            return domain(format!(
                "coordinate {c} is outside [0, {side}] at level {level}"
            ));
        }
        Ok(Self { level, coords })
    }

    /// The same point written over the finer denominator `M^level`.
    pub fn refine(&self, arity: u32, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::Domain(format!(
                "cannot write a level-{} point at coarser level {level}",
                self.level
            )));
        }
        let scale = (arity as u64).pow(level - self.level);
        Ok(Self {
            level,
            coords: self.coords.iter().map(|c| c * scale).collect(),
        })
    }

    /// Nearest lattice point at a coarser (or equal) level, ties rounding up.
    pub fn nearest(&self, arity: u32, level: u32) -> Self {
        if level >= self.level {
            return self.refine(arity, level).expect("finer level");
        }
        let scale = (arity as u64).pow(self.level - level);
        Self {
            level,
            coords: self
                .coords
                .iter()
                .map(|c| (c + scale / 2) / scale)
                .collect(),
        }
    }

    /// Coarsest level at which the point is a lattice point.
    pub fn reduce(&self, arity: u32) -> Self {
        let mut p = self.clone();
        let m = arity as u64;
        while p.level > 0 && p.coords.iter().all(|c| c % m == 0) {
            p.coords.iter_mut().for_each(|c| *c /= m);
            p.level -= 1;
        }
        p
    }

    pub fn to_f64(&self, arity: u32) -> Vec<f64> {
        let side = (arity as f64).powi(self.level as i32);
        self.coords.iter().map(|&c| c as f64 / side).collect()
    }

    /// Euclidean distance, computed from exact integer differences.
    pub fn distance(&self, other: &Self, arity: u32) -> f64 {
        let level = self.level.max(other.level);
        let a = self.refine(arity, level).expect("finer level");
        let b = other.refine(arity, level).expect("finer level");
        let sq: f64 = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(&x, &y)| (x.abs_diff(y) as f64).powi(2))
            .sum();
        sq.sqrt() / (arity as f64).powi(level as i32)
    }

    /// Lexicographically smallest level-`k` cube containing the point.
    pub fn containing_cube(&self, arity: u32, k: u32) -> CubeAddress {
        let m = arity as u64;
        let (coords, scale) = if k <= self.level {
            (self.coords.clone(), m.pow(self.level - k))
        } else {
            (self.refine(arity, k).expect("finer level").coords, 1)
        };
        let side = m.pow(k);
        let index = coords
            .iter()
            .map(|&c| {
                let cell = if c % scale == 0 && c > 0 {
                    c / scale - 1
                } else {
                    c / scale
                };
                cell.min(side - 1)
            })
            .collect();
        CubeAddress { level: k, index }
    }

    /// Whether the point lies on the level-`k` skeleton `E_k`.
    pub fn on_skeleton(&self, arity: u32, k: u32) -> bool {
        if k >= self.level {
            return true;
        }
        let scale = (arity as u64).pow(self.level - k);
        self.coords.iter().any(|c| c % scale == 0)
    }
}

/// Smallest level `k` at which the chosen level-`k` cubes of `x` and `y` are
/// disjoint, or `None` when the points coincide.
pub fn separation_level(x: &GridPoint, y: &GridPoint, arity: u32) -> Option<u32> {
    if x.reduce(arity) == y.reduce(arity) {
        return None;
    }
    let level = x.level.max(y.level);
    (0..=level + 1).find(|&k| {
        !x.containing_cube(arity, k)
            .meets(&y.containing_cube(arity, k))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashu::rational::RBig;

    fn params(n: usize, m: u32) -> Params {
        Params::with_l(n, m, RBig::from(8u8), false).unwrap()
    }

    // Squared Euclidean distance, in units of (1/M)^2, from child cell `o` to
    // the union of boundary-ring cells of a unit parent.
    fn brute_distance_sq(m: u32, o: &[u32]) -> u64 {
        let mut best = u64::MAX;
        for q in offsets(o.len(), m) {
            if ring_index(m, &q) != 0 {
                continue;
            }
            let d: u64 = o
                .iter()
                .zip(&q)
                .map(|(&a, &b)| {
                    let gap = (a.abs_diff(b) as u64).saturating_sub(1);
                    gap * gap
                })
                .sum();
            best = best.min(d);
        }
        best
    }

    #[test]
    fn ring_rule_matches_euclidean_definition() {
        for (n, m) in [(2, 5), (2, 8), (2, 11), (3, 7), (3, 8)] {
            let p = params(n, m);
            let bound_sq = ((n - 1) * (n - 1)) as u64;
            for o in offsets(n, m) {
                let expected = if ring_index(m, &o) == 0 {
                    Zone::P1
                } else if brute_distance_sq(m, &o) < bound_sq {
                    Zone::P2
                } else {
                    Zone::P3
                };
                assert_eq!(
                    zone_of_child(&p, &o).unwrap(),
                    expected,
                    "n={n} M={m} o={o:?}"
                );
            }
        }
    }

    #[test]
    fn zone_examples() {
        let p = params(2, 8);
        assert_eq!(zone_of_child(&p, &[0, 3]).unwrap(), Zone::P1);
        assert_eq!(zone_of_child(&p, &[1, 4]).unwrap(), Zone::P2);
        assert_eq!(zone_of_child(&p, &[2, 2]).unwrap(), Zone::P3);
        assert!(zone_of_child(&p, &[8, 0]).is_err());
        assert!(zone_of_child(&p, &[1]).is_err());
    }

    #[test]
    fn zone_count_examples() {
        assert_eq!(zone_counts(&params(2, 8)), (28, 20, 16));
        assert_eq!(zone_counts(&params(2, 16)), (60, 52, 144));
        assert_eq!(zone_counts(&params(3, 8)), (296, 208, 8));
    }

    #[test]
    fn digits_roundtrip_and_children() {
        let p = params(2, 8);
        let digits = vec![vec![3, 3], vec![1, 7], vec![0, 2]];
        let cube = CubeAddress::from_digits(&p, &digits).unwrap();
        assert_eq!(cube.index, vec![(3 * 64 + 8), 3 * 64 + 7 * 8 + 2]);
        assert_eq!(cube.digits(8), digits);
        let kids = cube.children(8);
        assert_eq!(kids.len(), 64);
        assert!(kids.iter().all(|c| c.parent(8).as_ref() == Some(&cube)));
    }

    #[test]
    fn neighborhood_sizes() {
        let p = params(2, 8);
        let corner = CubeAddress::new(&p, 1, vec![0, 0]).unwrap();
        assert_eq!(corner.neighborhood(8).len(), 4);
        let inner = CubeAddress::new(&p, 1, vec![3, 4]).unwrap();
        assert_eq!(inner.neighborhood(8).len(), 9);
        assert_eq!(CubeAddress::root(2).neighborhood(8).len(), 1);
    }

    #[test]
    fn containing_cube_picks_smallest() {
        let p = params(2, 8);
        let x = GridPoint::new(&p, 2, vec![8, 13]).unwrap();
        assert_eq!(x.containing_cube(8, 1).index, vec![0, 1]);
        assert_eq!(x.containing_cube(8, 2).index, vec![7, 12]);
        assert_eq!(x.containing_cube(8, 3).index, vec![63, 103]);
        let origin = GridPoint::new(&p, 1, vec![0, 0]).unwrap();
        assert_eq!(origin.containing_cube(8, 3).index, vec![0, 0]);
        let far = GridPoint::new(&p, 1, vec![8, 8]).unwrap();
        assert_eq!(far.containing_cube(8, 1).index, vec![7, 7]);
    }

    #[test]
    fn separation_levels() {
        let a = GridPoint {
            level: 0,
            coords: vec![0, 0],
        };
        let b = GridPoint {
            level: 0,
            coords: vec![1, 0],
        };
        // at level 0 both lie in the unit cube; at level 1 cells 0 and 7 are apart
        assert_eq!(separation_level(&a, &b, 8), Some(1));
        let c = GridPoint {
            level: 2,
            coords: vec![1, 0],
        };
        assert_eq!(separation_level(&a, &c, 8), Some(3));
        assert_eq!(separation_level(&a, &a.refine(8, 2).unwrap(), 8), None);
    }
}
