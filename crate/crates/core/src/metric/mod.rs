//! Graph approximations of the weighted path metrics `d_k` and of their
//! limit.

mod grid;
mod stencil;

use serde::{Deserialize, Serialize};

use crate::cube::{CubeAddress, GridPoint};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::verify::constants;
use crate::weight::cube_weight;

pub use grid::{fit_resolution, GridSpec, WeightedGrid, Window};
pub use stencil::Stencil;

/// Default cap on grid nodes per solve.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 25;

/// A graph distance with its bracket `[value / lambda, value]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub levels_used: u32,
}

impl MetricEstimate {
    fn from_value(value: f64, lambda: f64, converged: bool, levels_used: u32) -> Self {
        Self {
            value,
            lower: value / lambda,
            upper: value,
            converged,
            levels_used,
        }
    }
}

/// Solver settings shared by the distance routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    pub stencil: Stencil,
    /// Resolution `K - k` used for weight level `k`.
    pub resolution_offset: u32,
    pub node_budget: u64,
    /// Restrict the graph to this box; windowed distances are never shorter.
    #[serde(skip)]
    pub window: Option<Window>,
    /// Absolute convergence tolerance for `limit_distance`.
    pub tol: f64,
    /// Extra weight levels `limit_distance` may refine through.
    pub depth: u32,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            stencil: Stencil::AxisDiagonal,
            resolution_offset: 2,
            node_budget: DEFAULT_NODE_BUDGET,
            window: None,
            tol: 1e-6,
            depth: 4,
        }
    }
}

pub fn build_weighted_grid(
    params: &Params,
    spec: GridSpec,
    node_budget: u64,
) -> Result<WeightedGrid> {
    WeightedGrid::build(params, spec, None, node_budget)
}

pub fn shortest_distance(
    grid: &WeightedGrid,
    x: &GridPoint,
    y: &GridPoint,
) -> Result<MetricEstimate> {
    let d = grid.distances(x, std::slice::from_ref(y))?[0];
    Ok(MetricEstimate::from_value(d, grid.lambda(), true, 1))
}

/// Graph distances from `x` at weight level `k`, at the finest resolution up
/// to `k + resolution_offset` that fits the budget. Returns the resolution
/// used with the distances.
pub fn level_distances(
    params: &Params,
    k: u32,
    x: &GridPoint,
    ys: &[GridPoint],
    opts: &MetricOptions,
) -> Result<(u32, f64, Vec<f64>)> {
    let window = opts
        .window
        .clone()
        .unwrap_or_else(|| Window::unit(params.dim()));
    let big_k = fit_resolution(
        params,
        k,
        k + opts.resolution_offset,
        &window,
        opts.node_budget,
    )
    .ok_or_else(|| Error::Resource {
        what: format!("grid nodes at level {k}"),
        required: window.node_count(params.arity(), k),
        budget: opts.node_budget as u128,
    })?;
    let grid = WeightedGrid::build(
        params,
        GridSpec::new(k, big_k, opts.stencil)?,
        Some(&window),
        opts.node_budget,
    )?;
    Ok((big_k, grid.lambda(), grid.distances(x, ys)?))
}

/// Approximations of the limit distance from `x` to each of `ys`, refining
/// the weight level from `start` until successive values differ by less than
/// `tol` or the geometric tail bound `C1 r_start(x) |x-y| (s/M)^(k-start)`
/// drops below it.
pub fn limit_distances(
    params: &Params,
    x: &GridPoint,
    ys: &[GridPoint],
    start: u32,
    opts: &MetricOptions,
) -> Result<Vec<MetricEstimate>> {
    let arity = params.arity();
    let c1 = constants(params).c1_f64();
    let r = cube_weight(params, &x.containing_cube(arity, start)).value_f64(params);
    let ratio = params.boost() as f64 / arity as f64;
    let mut out: Vec<Option<MetricEstimate>> = ys
        .iter()
        .map(|y| {
            (x.distance(y, arity) == 0.0).then(|| MetricEstimate::from_value(0.0, 1.0, true, 0))
        })
        .collect();
    let mut last: Vec<Option<(f64, f64, u32)>> = vec![None; ys.len()];
    for k in start..=start + opts.depth {
        let open: Vec<usize> = (0..ys.len()).filter(|&i| out[i].is_none()).collect();
        if open.is_empty() {
            break;
        }
        let targets: Vec<GridPoint> = open.iter().map(|&i| ys[i].clone()).collect();
        let (_, lambda, d) = match level_distances(params, k, x, &targets, opts) {
            Ok(v) => v,
            Err(Error::Resource { .. }) => break,
            Err(e) => return Err(e),
        };
        for (&i, &v) in open.iter().zip(&d) {
            let used = k - start + 1;
            let tail = c1 * r * x.distance(&ys[i], arity) * ratio.powi((k - start) as i32);
            let settled =
                last[i].is_some_and(|(prev, _, _)| (v - prev).abs() < opts.tol) || tail < opts.tol;
            if settled {
                out[i] = Some(MetricEstimate::from_value(v, lambda, true, used));
            }
            last[i] = Some((v, lambda, used));
        }
    }
    Ok(out
        .into_iter()
        .zip(last)
        .map(|(done, seen)| {
            done.unwrap_or_else(|| match seen {
                Some((v, lambda, used)) => MetricEstimate::from_value(v, lambda, false, used),
                None => MetricEstimate {
                    value: f64::NAN,
                    lower: 0.0,
                    upper: f64::INFINITY,
                    converged: false,
                    levels_used: 0,
                },
            })
        })
        .collect())
}

pub fn limit_distance(
    params: &Params,
    x: &GridPoint,
    y: &GridPoint,
    opts: &MetricOptions,
) -> Result<MetricEstimate> {
    let start = x
        .reduce(params.arity())
        .level
        .max(y.reduce(params.arity()).level);
    Ok(limit_distances(params, x, std::slice::from_ref(y), start, opts)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterMethod {
    Analytic,
    Graph,
}

/// Bound `2n C1 r_k(I) M^-k` on the diameter of a cube, or the largest graph
/// distance among its corners and face centres inside `Q_k^*(I)`.
pub fn cube_diameter(
    params: &Params,
    cube: &CubeAddress,
    method: DiameterMethod,
    opts: &MetricOptions,
) -> Result<f64> {
    let arity = params.arity();
    match method {
        DiameterMethod::Analytic => {
            let r = cube_weight(params, cube).ln(params);
            let ln = (2.0 * params.dim() as f64).ln() + constants(params).ln_c1 + r
                - cube.level as f64 * (arity as f64).ln();
            Ok(ln.exp())
        }
        DiameterMethod::Graph => {
            let k = cube.level;
            let fine = k + 1;
            let m = arity as u64;
            let mut sample = Vec::new();
            let n = params.dim();
            // corners and face centres, written at level k+1 when M is odd
            for code in 0..3u64.pow(n as u32) {
                let mut c = code;
                let mut coords = Vec::with_capacity(n);
                let mut on_boundary = false;
                for i in 0..n {
                    let digit = c % 3;
                    c /= 3;
                    on_boundary |= digit != 1;
                    let base = cube.index[i] * m;
                    coords.push(base + digit * m / 2);
                }
                if on_boundary {
                    sample.push(GridPoint {
                        level: fine,
                        coords,
                    });
                }
            }
            let mut o = opts.clone();
            o.window = Some(Window::neighborhood(cube, arity));
            let mut best = 0.0f64;
            for (i, x) in sample.iter().enumerate() {
                let (_, _, d) = level_distances(params, k, x, &sample[i + 1..], &o)?;
                best = d.into_iter().fold(best, f64::max);
            }
            Ok(best)
        }
    }
}
