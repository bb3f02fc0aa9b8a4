use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::Serialize;

use crate::cube::{product, CubeAddress, GridPoint};
use crate::error::{domain, Error, Result};
use crate::params::Params;
use crate::weight::{CellBox, WeightField};

use super::stencil::Stencil;

/// Weight level `k`, resolution level `K >= k` and the move stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub weight_level: u32,
    pub resolution: u32,
    pub stencil: Stencil,
}

impl GridSpec {
    pub fn new(weight_level: u32, resolution: u32, stencil: Stencil) -> Result<Self> {
        if resolution < weight_level {
            return domain(format!(
                "resolution level {resolution} is coarser than weight level {weight_level}"
            ));
        }
        Ok(Self {
            weight_level,
            resolution,
            stencil,
        })
    }
}

/// An inclusive box of lattice points `lo..=hi` over the denominator
/// `M^level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Window {
    pub level: u32,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Window {
    pub fn unit(dim: usize) -> Self {
        Self {
            level: 0,
            lo: vec![0; dim],
            hi: vec![1; dim],
        }
    }

    /// The union of level-`k` cubes meeting `cube`.
    pub fn neighborhood(cube: &CubeAddress, arity: u32) -> Self {
        let side = (arity as u64).pow(cube.level);
        Self {
            level: cube.level,
            lo: cube.index.iter().map(|&i| i.saturating_sub(1)).collect(),
            hi: cube.index.iter().map(|&i| (i + 2).min(side)).collect(),
        }
    }

    /// Bounding box of `points` grown by `margin` units of `M^-margin_level`
    /// on every side, clipped to the unit cube.
    pub fn around(points: &[GridPoint], margin_level: u32, margin: u64, arity: u32) -> Self {
        let level = points
            .iter()
            .map(|p| p.level)
            .max()
            .unwrap_or(0)
            .max(margin_level);
        let m = arity as u64;
        let grow = margin * m.pow(level - margin_level);
        let side = m.pow(level);
        let dim = points[0].coords.len();
        let mut lo = vec![u64::MAX; dim];
        let mut hi = vec![0u64; dim];
        for p in points {
            let q = p.refine(arity, level).expect("finer level");
            for i in 0..dim {
                lo[i] = lo[i].min(q.coords[i]);
                hi[i] = hi[i].max(q.coords[i]);
            }
        }
        Self {
            level,
            lo: lo.into_iter().map(|c| c.saturating_sub(grow)).collect(),
            hi: hi.into_iter().map(|c| (c + grow).min(side)).collect(),
        }
    }

    /// Lattice box at level `K`, rounded outward when `K` is coarser.
    pub fn at_level(&self, arity: u32, level: u32) -> (Vec<u64>, Vec<u64>) {
        let m = arity as u64;
        if level >= self.level {
            let f = m.pow(level - self.level);
            (
                self.lo.iter().map(|c| c * f).collect(),
                self.hi.iter().map(|c| c * f).collect(),
            )
        } else {
            let f = m.pow(self.level - level);
            (
                self.lo.iter().map(|c| c / f).collect(),
                self.hi.iter().map(|c| c.div_ceil(f)).collect(),
            )
        }
    }

    pub fn node_count(&self, arity: u32, level: u32) -> u128 {
        let (lo, hi) = self.at_level(arity, level);
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .product()
    }
}

const NO_CELL: u64 = u64::MAX;

struct AxisTable {
    /// Candidate cells (already multiplied by the cell stride) for a node
    /// coordinate held fixed by a move; equal when off the level-k lines.
    fixed: Vec<(u64, u64)>,
    /// Cell crossed by a move of `-2..=2` from each coordinate, or `NO_CELL`
    /// when the move leaves the window or crosses a level-k line.
    moving: [Vec<u64>; 5],
}

struct Move {
    step: Vec<i32>,
    delta: i64,
    length: f64,
}

/// Where a query point attaches to the graph.
enum Attach {
    Node(u32),
    Virtual {
        corners: Vec<(u32, f64)>,
        point: GridPoint,
    },
}

/// The grid graph on the lattice points of a window at level `K`, with edge
/// lengths from the level-`k` weight.
pub struct WeightedGrid {
    params: Params,
    spec: GridSpec,
    lambda: f64,
    lo: Vec<u64>,
    extent: Vec<u64>,
    stride: Vec<u64>,
    field: WeightField,
    values: Vec<f64>,
    cell_stride: Vec<u64>,
    axes: Vec<AxisTable>,
    moves: Vec<Move>,
}

impl WeightedGrid {
    pub fn build(
        params: &Params,
        spec: GridSpec,
        window: Option<&Window>,
        node_budget: u64,
    ) -> Result<Self> {
        let n = params.dim();
        if n > spec.stencil.max_dim() {
            return domain(format!(
                "stencil {:?} supports dimension at most {}",
                spec.stencil,
                spec.stencil.max_dim()
            ));
        }
        let m = params.arity() as u64;
        let unit = Window::unit(n);
        let window = window.unwrap_or(&unit);
        if window.lo.len() != n || window.hi.len() != n {
            return domain("window has the wrong number of coordinates");
        }
        let k = spec.weight_level;
        let big_k = spec.resolution;
        let side_nodes = m
            .checked_pow(big_k)
            .ok_or_else(|| Error::Domain("resolution too deep".into()))?;
        let (lo, hi) = window.at_level(params.arity(), big_k);
        let hi: Vec<u64> = hi.into_iter().map(|h| h.min(side_nodes)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return domain(format!(
                "window {window:?} has no interior at level {big_k}"
            ));
        }
        let count = window_count(&lo, &hi);
        if count > node_budget as u128 || count > u32::MAX as u128 {
            return Err(Error::Resource {
                what: format!("grid nodes at level {big_k}"),
                required: count,
                budget: node_budget as u128,
            });
        }
        let extent: Vec<u64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let mut stride = vec![1u64; n];
        for i in (0..n - 1).rev() {
            stride[i] = stride[i + 1] * extent[i + 1];
        }

        let scale = m.pow(big_k - k);
        let side_cells = m.pow(k);
        let fixed_cells = |c: u64| -> (u64, u64) {
            let hi = (c / scale).min(side_cells - 1);
            let lo = if c.is_multiple_of(scale) && c > 0 {
                c / scale - 1
            } else {
                hi
            };
            (lo, hi)
        };
        let region = CellBox {
            lo: lo.iter().map(|&c| fixed_cells(c).0).collect(),
            hi: hi.iter().map(|&c| fixed_cells(c).1).collect(),
        };
        let field = WeightField::over(params, k, region.clone(), node_budget)?;
        let values = field.values_f64();
        let mut cell_stride = vec![1u64; n];
        for i in (0..n - 1).rev() {
            cell_stride[i] = cell_stride[i + 1] * region.extent(i + 1);
        }

        let axes = (0..n)
            .map(|i| {
                let cs = cell_stride[i];
                let base = region.lo[i];
                let fixed = (lo[i]..=hi[i])
                    .map(|c| {
                        let (a, b) = fixed_cells(c);
                        ((a - base) * cs, (b - base) * cs)
                    })
                    .collect();
                let moving = std::array::from_fn(|slot| {
                    let v = slot as i64 - 2;
                    (lo[i]..=hi[i])
                        .map(|c| {
                            let to = c as i64 + v;
                            if v == 0 || to < lo[i] as i64 || to > hi[i] as i64 {
                                return NO_CELL;
                            }
                            let start = (c as i64).min(to) as u64;
                            // a length-2 move must not pass through a level-k line
                            if v.abs() == 2 && (start + 1).is_multiple_of(scale) {
                                return NO_CELL;
                            }
                            (start / scale - base) * cs
                        })
                        .collect()
                });
                AxisTable { fixed, moving }
            })
            .collect();

        let h = (m as f64).powi(-(big_k as i32));
        let moves = spec
            .stencil
            .vectors(n)
            .into_iter()
            .map(|step| {
                let delta = step
                    .iter()
                    .zip(&stride)
                    .map(|(&v, &s)| v as i64 * s as i64)
                    .sum();
                let length = step.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt() * h;
                Move {
                    step,
                    delta,
                    length,
                }
            })
            .collect();

        Ok(Self {
            params: params.clone(),
            spec,
            lambda: spec.stencil.anisotropy(n),
            lo,
            extent,
            stride,
            field,
            values,
            cell_stride,
            axes,
            moves,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn field(&self) -> &WeightField {
        &self.field
    }

    pub fn node_count(&self) -> u64 {
        self.extent.iter().product()
    }

    /// Index of a lattice point of the window, if it is one.
    pub fn node_index(&self, p: &GridPoint) -> Option<u32> {
        let q = self.at_resolution(p)?;
        let mut idx = 0u64;
        for i in 0..q.len() {
            if q[i] < self.lo[i] || q[i] - self.lo[i] >= self.extent[i] {
                return None;
            }
            idx += (q[i] - self.lo[i]) * self.stride[i];
        }
        Some(idx as u32)
    }

    pub fn node_point(&self, index: u32) -> GridPoint {
        let mut rest = index as u64;
        let coords = (0..self.extent.len())
            .map(|i| {
                let c = rest / self.stride[i];
                rest %= self.stride[i];
                self.lo[i] + c
            })
            .collect();
        GridPoint {
            level: self.spec.resolution,
            coords,
        }
    }

    fn at_resolution(&self, p: &GridPoint) -> Option<Vec<u64>> {
        let big_k = self.spec.resolution;
        let m = self.params.arity() as u64;
        if p.level <= big_k {
            let f = m.pow(big_k - p.level);
            Some(p.coords.iter().map(|c| c * f).collect())
        } else {
            let f = m.pow(p.level - big_k);
            p.coords
                .iter()
                .map(|c| (c % f == 0).then_some(c / f))
                .collect()
        }
    }

    fn inside(&self, p: &GridPoint) -> bool {
        let m = self.params.arity() as u64;
        let level = p.level.max(self.spec.resolution);
        let f = m.pow(level - self.spec.resolution);
        let g = m.pow(level - p.level);
        (0..self.extent.len()).all(|i| {
            let c = p.coords[i] * g;
            c >= self.lo[i] * f && c <= (self.lo[i] + self.extent[i] - 1) * f
        })
    }

    /// Weight of the edge leaving the node `index` along stencil move
    /// `move_id`, or `None` when the move leaves the window or crosses a
    /// level-k line.
    fn edge(&self, local: &[u64], mv: &Move) -> Option<f64> {
        let mut base = 0u64;
        let mut alts = [0u64; 16];
        let mut alt_count = 0usize;
        for (i, &v) in mv.step.iter().enumerate() {
            let c = local[i] as usize;
            if v == 0 {
                let (a, b) = self.axes[i].fixed[c];
                base += a;
                if a != b {
                    alts[alt_count] = b - a;
                    alt_count += 1;
                }
            } else {
                let cell = self.axes[i].moving[(v + 2) as usize][c];
                if cell == NO_CELL {
                    return None;
                }
                base += cell;
            }
        }
        let mut best = f64::INFINITY;
        for mask in 0..(1usize << alt_count) {
            let mut idx = base;
            for (j, alt) in alts.iter().take(alt_count).enumerate() {
                if mask >> j & 1 == 1 {
                    idx += alt;
                }
            }
            best = best.min(self.values[idx as usize]);
        }
        Some(best * mv.length)
    }

    /// Length of the edge from a lattice point along a stencil move.
    pub fn step_length(&self, from: &GridPoint, step: &[i32]) -> Option<f64> {
        let local = self.local(self.node_index(from)?);
        let mv = self.moves.iter().find(|m| m.step == step)?;
        self.edge(&local, mv)
    }

    /// Outgoing edges `(neighbour, length)` of a node.
    pub fn edges_from(&self, index: u32) -> Vec<(u32, f64)> {
        let local = self.local(index);
        self.moves
            .iter()
            .filter_map(|mv| {
                self.edge(&local, mv)
                    .map(|w| ((index as i64 + mv.delta) as u32, w))
            })
            .collect()
    }

    fn local(&self, index: u32) -> Vec<u64> {
        let mut rest = index as u64;
        self.stride
            .iter()
            .map(|&s| {
                let c = rest / s;
                rest %= s;
                c
            })
            .collect()
    }

    /// Weighted length of the straight segment between two points lying in
    /// one closed level-K cell.
    fn segment(&self, p: &GridPoint, q: &GridPoint) -> f64 {
        let m = self.params.arity() as u64;
        let level = p.level.max(q.level);
        let a = p.refine(self.params.arity(), level).expect("finer level");
        let b = q.refine(self.params.arity(), level).expect("finer level");
        let scale = m.pow(level - self.spec.weight_level);
        let side_cells = m.pow(self.spec.weight_level);
        let region = self.field.region();
        let mut choices: Vec<Vec<u64>> = Vec::with_capacity(a.coords.len());
        for i in 0..a.coords.len() {
            let (x, y) = (a.coords[i], b.coords[i]);
            let cells = if x == y {
                let hi = (x / scale).min(side_cells - 1);
                if x % scale == 0 && x > 0 {
                    vec![x / scale - 1, hi]
                } else {
                    vec![hi]
                }
            } else {
                vec![x.min(y) / scale]
            };
            let kept: Vec<u64> = cells
                .into_iter()
                .filter(|&c| c >= region.lo[i] && c <= region.hi[i])
                .map(|c| (c - region.lo[i]) * self.cell_stride[i])
                .collect();
            choices.push(kept);
        }
        let best = product(&choices)
            .iter()
            .map(|cell| self.values[cell.iter().sum::<u64>() as usize])
            .fold(f64::INFINITY, f64::min);
        best * a.distance(&b, self.params.arity())
    }

    fn attach(&self, p: &GridPoint) -> Result<Attach> {
        if p.coords.len() != self.extent.len() || !self.inside(p) {
            return domain(format!("point {p:?} is outside the grid window"));
        }
        if let Some(i) = self.node_index(p) {
            return Ok(Attach::Node(i));
        }
        let m = self.params.arity() as u64;
        let f = m.pow(p.level - self.spec.resolution);
        let mut choices = Vec::new();
        for &c in &p.coords {
            let base = c / f;
            choices.push(if c % f == 0 {
                vec![base]
            } else {
                vec![base, base + 1]
            });
        }
        let mut corners = Vec::new();
        for coords in product(&choices) {
            let q = GridPoint {
                level: self.spec.resolution,
                coords,
            };
            let idx = self
                .node_index(&q)
                .expect("corner of a window point is a window node");
            corners.push((idx, self.segment(p, &q)));
        }
        Ok(Attach::Virtual {
            corners,
            point: p.clone(),
        })
    }

    /// Graph distances from `source` to each target. Points that are not
    /// lattice nodes are joined to the corners of their level-K cell.
    pub fn distances(&self, source: &GridPoint, targets: &[GridPoint]) -> Result<Vec<f64>> {
        let src = self.attach(source)?;
        let tgts = targets
            .iter()
            .map(|t| self.attach(t))
            .collect::<Result<Vec<_>>>()?;
        let init: Vec<(u32, f64)> = match &src {
            Attach::Node(i) => vec![(*i, 0.0)],
            Attach::Virtual { corners, .. } => corners.clone(),
        };
        let mut need: HashSet<u32> = HashSet::new();
        for t in &tgts {
            match t {
                Attach::Node(i) => {
                    need.insert(*i);
                }
                Attach::Virtual { corners, .. } => need.extend(corners.iter().map(|c| c.0)),
            }
        }
        let dist = self.dijkstra(&init, need);
        let src_cell = match &src {
            Attach::Virtual { point, .. } => {
                Some(point.containing_cube(self.params.arity(), self.spec.resolution))
            }
            Attach::Node(_) => None,
        };
        Ok(tgts
            .iter()
            .zip(targets)
            .map(|(t, tp)| match t {
                Attach::Node(i) => dist.get(*i),
                Attach::Virtual { corners, point } => {
                    let mut best = corners
                        .iter()
                        .map(|&(c, w)| dist.get(c) + w)
                        .fold(f64::INFINITY, f64::min);
                    if let (Some(cell), Attach::Virtual { point: sp, .. }) = (&src_cell, &src) {
                        if *cell == point.containing_cube(self.params.arity(), self.spec.resolution)
                        {
                            best = best.min(self.segment(sp, tp));
                        }
                    }
                    best
                }
            })
            .collect())
    }

    fn dijkstra(&self, init: &[(u32, f64)], mut need: HashSet<u32>) -> Distances {
        let total = self.node_count() as usize;
        let mut dist = vec![f64::INFINITY; total];
        let mut done = vec![false; total];
        let mut heap = BinaryHeap::new();
        for &(i, d) in init {
            if d < dist[i as usize] {
                dist[i as usize] = d;
                heap.push(Reverse((d.to_bits(), i)));
            }
        }
        let n = self.extent.len();
        let mut local = vec![0u64; n];
        while let Some(Reverse((bits, u))) = heap.pop() {
            let ui = u as usize;
            if done[ui] || f64::from_bits(bits) > dist[ui] {
                continue;
            }
            done[ui] = true;
            if need.remove(&u) && need.is_empty() {
                break;
            }
            let mut rest = u as u64;
            for i in 0..n {
                local[i] = rest / self.stride[i];
                rest %= self.stride[i];
            }
            let du = dist[ui];
            for mv in &self.moves {
                if let Some(w) = self.edge(&local, mv) {
                    let v = (u as i64 + mv.delta) as usize;
                    let nd = du + w;
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Reverse((nd.to_bits(), v as u32)));
                    }
                }
            }
        }
        Distances { dist, done }
    }
}

struct Distances {
    dist: Vec<f64>,
    done: Vec<bool>,
}

impl Distances {
    fn get(&self, i: u32) -> f64 {
        debug_assert!(self.done[i as usize] || self.dist[i as usize].is_infinite());
        self.dist[i as usize]
    }
}

fn window_count(lo: &[u64], hi: &[u64]) -> u128 {
    lo.iter()
        .zip(hi)
        .map(|(l, h)| (h.saturating_sub(*l) + 1) as u128)
        .product()
}

/// Largest resolution in `weight_level..=requested` whose window fits the
/// node budget.
pub fn fit_resolution(
    params: &Params,
    weight_level: u32,
    requested: u32,
    window: &Window,
    node_budget: u64,
) -> Option<u32> {
    (weight_level..=requested.max(weight_level))
        .rev()
        .find(|&big_k| window.node_count(params.arity(), big_k) <= node_budget as u128)
}
