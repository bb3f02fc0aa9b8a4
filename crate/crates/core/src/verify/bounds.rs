use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cube::{separation_level, CubeAddress, GridPoint};
use crate::error::{domain, Error, Result};
use crate::metric::{level_distances, GridSpec, MetricOptions, Stencil, WeightedGrid, Window};
use crate::params::Params;
use crate::rng::{par_batches, stream, tags};
use crate::weight::cube_weight;

use super::constants::constants;
use super::report::{BoundsReport, Margins, ReportParts};
use super::sampling::{distinct_targets, random_node, random_node_near};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    /// Edge paths inside one cube do not get shorter at the next level.
    PathMonotone,
    /// Graph distances between skeleton nodes do not drop at the next level.
    MetricMonotone,
    /// `d_m(x, y) <= lambda C1 r_k(I) |x - y|` for `x` on a cube boundary.
    Diameter,
    /// `r_k(x)|x-y| / (2nMR) <= d_m(x, y) <= lambda C1 C2 r_k(x) |x - y|`
    /// at the separation level `k`.
    TwoSided,
}

impl BoundsMode {
    pub const ALL: [BoundsMode; 4] = [
        BoundsMode::PathMonotone,
        BoundsMode::MetricMonotone,
        BoundsMode::Diameter,
        BoundsMode::TwoSided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundsMode::PathMonotone => "path_monotone",
            BoundsMode::MetricMonotone => "metric_monotone",
            BoundsMode::Diameter => "diameter",
            BoundsMode::TwoSided => "two_sided",
        }
    }

    fn default_levels(self) -> Vec<u32> {
        match self {
            BoundsMode::TwoSided => vec![1, 2, 3],
            _ => vec![0, 1, 2],
        }
    }

    fn tag(self) -> u64 {
        match self {
            BoundsMode::PathMonotone => tags::PATH_MONOTONE,
            BoundsMode::MetricMonotone => tags::METRIC_MONOTONE,
            BoundsMode::Diameter => tags::DIAMETER,
            BoundsMode::TwoSided => tags::TWO_SIDED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsOptions {
    /// Number of sampled pairs or paths.
    pub samples: u64,
    pub targets_per_source: u64,
    /// Weight levels to sample; empty means the mode's default.
    pub levels: Vec<u32>,
    pub metric: MetricOptions,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            targets_per_source: 50,
            levels: Vec::new(),
            metric: MetricOptions::default(),
        }
    }
}

/// Per-source result: margins for the lower and upper sides, the resolution
/// used, lambda and the number of pairs that could not be evaluated.
#[derive(Default)]
struct SourceResult {
    lower: Margins,
    upper: Margins,
    resolution: Option<u32>,
    lambda: f64,
    skipped: u64,
}

pub fn bounds_report(
    params: &Params,
    mode: BoundsMode,
    opts: &BoundsOptions,
    seed: u64,
) -> Result<BoundsReport> {
    if opts.samples == 0 || opts.targets_per_source == 0 {
        return domain("bounds checks need at least one sample");
    }
    let levels = if opts.levels.is_empty() {
        mode.default_levels()
    } else {
        opts.levels.clone()
    };
    if mode == BoundsMode::TwoSided && levels.contains(&0) {
        return domain("two-sided checks need weight levels >= 1: no pair separates at level 0");
    }
    let sources = opts
        .samples
        .div_ceil(opts.targets_per_source)
        .max(levels.len() as u64);
    let per = opts.samples / sources;
    let extra = opts.samples % sources;
    let results = par_batches(sources, |b| -> Result<SourceResult> {
        let mut rng = stream(seed, mode.tag(), b);
        let count = (per + u64::from(b < extra)) as usize;
        let level = levels[(b % levels.len() as u64) as usize];
        let round = b / levels.len() as u64;
        let out = match mode {
            BoundsMode::TwoSided => {
                two_sided_source(params, level, round, count, &opts.metric, &mut rng)
            }
            BoundsMode::Diameter => {
                diameter_source(params, level, round, count, &opts.metric, &mut rng)
            }
            BoundsMode::PathMonotone => path_source(params, level, count, &opts.metric, &mut rng),
            BoundsMode::MetricMonotone => {
                metric_source(params, level, count, &opts.metric, &mut rng)
            }
        };
        match out {
            Err(Error::Resource { .. }) => Ok(SourceResult {
                skipped: count as u64,
                ..Default::default()
            }),
            other => other,
        }
    });
    let mut lower = Margins::default();
    let mut upper = Margins::default();
    let mut inconclusive = 0;
    let mut resolutions = Vec::new();
    let mut lambda = 0.0f64;
    for r in results {
        let r = r?;
        lower.merge(&r.lower);
        upper.merge(&r.upper);
        inconclusive += r.skipped;
        resolutions.extend(r.resolution);
        lambda = lambda.max(r.lambda);
    }
    let mut margins = lower;
    margins.merge(&upper);
    let two = mode == BoundsMode::TwoSided;
    Ok(BoundsReport::assemble(
        params,
        ReportParts {
            check: mode.name(),
            n: opts.samples,
            seed,
            margins,
            lower: two.then_some(lower),
            upper: two.then_some(upper),
            inconclusive,
            lambda,
            resolutions,
        },
    ))
}

fn ln_distance(x: &GridPoint, y: &GridPoint, arity: u32) -> f64 {
    x.distance(y, arity).ln()
}

fn two_sided_source(
    params: &Params,
    m: u32,
    round: u64,
    count: usize,
    metric: &MetricOptions,
    rng: &mut impl Rng,
) -> Result<SourceResult> {
    let arity = params.arity();
    let n = params.dim();
    let big_k = m + metric.resolution_offset;
    // targets for this source sit at scale M^-(j-1), j cycling through 1..=m
    let j = 1 + (round % m as u64) as u32;
    let x = random_node(rng, n, arity, big_k);
    let radius = (arity as u64).pow(big_k - (j - 1));
    let ys = distinct_targets(
        rng,
        &x,
        count,
        |r| random_node_near(r, &x, radius, arity),
        |y| separation_level(&x, y, arity).is_some_and(|k| k <= m),
    );
    let mut all = ys.clone();
    all.push(x.clone());
    let mut o = metric.clone();
    o.window = Some(Window::around(&all, j, 1, arity));
    let (used, lambda, d) = level_distances(params, m, &x, &ys, &o)?;
    let c = constants(params);
    let ln_lambda = lambda.ln();
    let ln_2nm = (2.0 * n as f64 * arity as f64).ln();
    let mut res = SourceResult {
        resolution: Some(used),
        lambda,
        skipped: (count - ys.len()) as u64,
        ..Default::default()
    };
    for (y, g) in ys.iter().zip(d) {
        let k = separation_level(&x, y, arity).expect("distinct points");
        let ln_r = cube_weight(params, &x.containing_cube(arity, k)).ln(params);
        let ln_xy = ln_distance(&x, y, arity);
        let ln_g = g.ln();
        let ln_lower = ln_r + ln_xy - ln_2nm - c.ln_r;
        let ln_upper = ln_lambda + c.ln_c1 + c.ln_c2 + ln_r + ln_xy;
        res.lower.add((ln_g - ln_lower).exp());
        res.upper.add((ln_upper - ln_g).exp());
    }
    Ok(res)
}

/// Uniform lattice point of a cube at level `level`.
fn node_in_cube(rng: &mut impl Rng, cube: &CubeAddress, arity: u32, level: u32) -> GridPoint {
    let f = (arity as u64).pow(level - cube.level);
    GridPoint {
        level,
        coords: cube
            .index
            .iter()
            .map(|&i| rng.random_range(i * f..=(i + 1) * f))
            .collect(),
    }
}

fn node_on_boundary(rng: &mut impl Rng, cube: &CubeAddress, arity: u32, level: u32) -> GridPoint {
    let f = (arity as u64).pow(level - cube.level);
    let mut p = node_in_cube(rng, cube, arity, level);
    let axis = rng.random_range(0..p.coords.len());
    p.coords[axis] = (cube.index[axis] + rng.random_range(0..=1u64)) * f;
    p
}

fn random_cube(rng: &mut impl Rng, dim: usize, arity: u32, level: u32) -> CubeAddress {
    let side = (arity as u64).pow(level);
    CubeAddress {
        level,
        index: (0..dim).map(|_| rng.random_range(0..side)).collect(),
    }
}

fn diameter_source(
    params: &Params,
    k: u32,
    round: u64,
    count: usize,
    metric: &MetricOptions,
    rng: &mut impl Rng,
) -> Result<SourceResult> {
    let arity = params.arity();
    let m = k + (round % 2) as u32;
    let big_k = m + metric.resolution_offset;
    let cube = random_cube(rng, params.dim(), arity, k);
    let x = node_on_boundary(rng, &cube, arity, big_k);
    let window = Window::neighborhood(&cube, arity);
    let (lo, hi) = window.at_level(arity, big_k);
    let ys = distinct_targets(
        rng,
        &x,
        count,
        |r| GridPoint {
            level: big_k,
            coords: lo
                .iter()
                .zip(&hi)
                .map(|(&l, &h)| r.random_range(l..=h))
                .collect(),
        },
        |_| true,
    );
    let mut o = metric.clone();
    o.window = Some(window);
    let (used, lambda, d) = level_distances(params, m, &x, &ys, &o)?;
    let c = constants(params);
    let ln_r = cube_weight(params, &cube).ln(params);
    let mut res = SourceResult {
        resolution: Some(used),
        lambda,
        skipped: (count - ys.len()) as u64,
        ..Default::default()
    };
    for (y, g) in ys.iter().zip(d) {
        let ln_bound = lambda.ln() + c.ln_c1 + ln_r + ln_distance(&x, y, arity);
        res.upper.add((ln_bound - g.ln()).exp());
    }
    Ok(res)
}

/// Axis steps of a monotone staircase from `a` to `b` in random order.
fn staircase(rng: &mut impl Rng, a: &GridPoint, b: &GridPoint) -> Vec<Vec<i32>> {
    let n = a.coords.len();
    let mut steps = Vec::new();
    for i in 0..n {
        let sign = if b.coords[i] >= a.coords[i] { 1 } else { -1 };
        for _ in 0..a.coords[i].abs_diff(b.coords[i]) {
            let mut v = vec![0; n];
            v[i] = sign;
            steps.push(v);
        }
    }
    steps.shuffle(rng);
    steps
}

fn path_source(
    params: &Params,
    k: u32,
    count: usize,
    metric: &MetricOptions,
    rng: &mut impl Rng,
) -> Result<SourceResult> {
    let arity = params.arity();
    let big_k = k + metric.resolution_offset.max(1);
    let cube = random_cube(rng, params.dim(), arity, k);
    let x = node_on_boundary(rng, &cube, arity, big_k);
    let ys = distinct_targets(
        rng,
        &x,
        count,
        |r| node_on_boundary(r, &cube, arity, big_k),
        |_| true,
    );
    let inner = Window {
        level: k,
        lo: cube.index.clone(),
        hi: cube.index.iter().map(|i| i + 1).collect(),
    };
    let budget = metric.node_budget;
    let fine = WeightedGrid::build(
        params,
        GridSpec::new(k + 1, big_k, Stencil::Axis)?,
        Some(&inner),
        budget,
    )?;
    let mut o = metric.clone();
    o.resolution_offset = big_k - k;
    o.window = Some(Window::neighborhood(&cube, arity));
    let (used, lambda, d) = level_distances(params, k, &x, &ys, &o)?;
    let mut res = SourceResult {
        resolution: Some(used),
        lambda,
        skipped: (count - ys.len()) as u64,
        ..Default::default()
    };
    for (y, g) in ys.iter().zip(d) {
        let z = node_in_cube(rng, &cube, arity, big_k);
        let mut steps = staircase(rng, &x, &z);
        steps.extend(staircase(rng, &z, y));
        let mut at = x.clone();
        let mut length = 0.0;
        for step in &steps {
            length += fine
                .step_length(&at, step)
                .expect("axis step inside the cube");
            for (c, &v) in at.coords.iter_mut().zip(step) {
                *c = (*c as i64 + v as i64) as u64;
            }
        }
        res.lower.add(length * lambda / g);
    }
    Ok(res)
}

/// Lattice point of `V_level` on the level-`k` skeleton.
fn skeleton_node(rng: &mut impl Rng, dim: usize, arity: u32, k: u32, level: u32) -> GridPoint {
    let mut p = random_node(rng, dim, arity, level);
    let axis = rng.random_range(0..dim);
    let f = (arity as u64).pow(level - k);
    p.coords[axis] = rng.random_range(0..=(arity as u64).pow(k)) * f;
    p
}

fn metric_source(
    params: &Params,
    k: u32,
    count: usize,
    metric: &MetricOptions,
    rng: &mut impl Rng,
) -> Result<SourceResult> {
    let arity = params.arity();
    let n = params.dim();
    let big_k = k + metric.resolution_offset.max(1);
    let x = skeleton_node(rng, n, arity, k, big_k);
    let ys = distinct_targets(
        rng,
        &x,
        count,
        |r| skeleton_node(r, n, arity, k, big_k),
        |_| true,
    );
    let mut o = metric.clone();
    o.resolution_offset = big_k - k;
    let (used, lambda, coarse) = level_distances(params, k, &x, &ys, &o)?;
    o.resolution_offset = big_k - (k + 1);
    let (used_fine, _, fine) = level_distances(params, k + 1, &x, &ys, &o)?;
    if used != used_fine {
        return Err(Error::Resource {
            what: "matching resolutions".into(),
            required: big_k as u128,
            budget: used as u128,
        });
    }
    let mut res = SourceResult {
        resolution: Some(used),
        lambda,
        skipped: (count - ys.len()) as u64,
        ..Default::default()
    };
    for (c, f) in coarse.iter().zip(&fine) {
        res.lower.add(f * lambda / c);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(levels: Vec<u32>, samples: u64) -> BoundsOptions {
        BoundsOptions {
            samples,
            targets_per_source: 10,
            levels,
            ..Default::default()
        }
    }

    #[test]
    fn staircase_is_monotone() {
        let mut rng = stream(3, 0, 0);
        let a = GridPoint {
            level: 2,
            coords: vec![5, 9],
        };
        let b = GridPoint {
            level: 2,
            coords: vec![1, 12],
        };
        let steps = staircase(&mut rng, &a, &b);
        assert_eq!(steps.len(), 7);
        assert_eq!(steps.iter().filter(|v| v[0] == -1).count(), 4);
        assert_eq!(steps.iter().filter(|v| v[1] == 1).count(), 3);
    }

    #[test]
    fn boundary_nodes_lie_on_the_cube_boundary() {
        let mut rng = stream(4, 0, 0);
        let cube = CubeAddress {
            level: 1,
            index: vec![3, 6],
        };
        for _ in 0..200 {
            let p = node_on_boundary(&mut rng, &cube, 8, 3);
            let on = p
                .coords
                .iter()
                .zip(&cube.index)
                .any(|(&c, &i)| c == i * 64 || c == (i + 1) * 64);
            let inside = p
                .coords
                .iter()
                .zip(&cube.index)
                .all(|(&c, &i)| (i * 64..=(i + 1) * 64).contains(&c));
            assert!(on && inside);
        }
    }

    #[test]
    fn every_mode_passes_on_a_small_sample() {
        let p = Params::with_l(2, 8, 8.into(), false).unwrap();
        for mode in BoundsMode::ALL {
            let levels = if mode == BoundsMode::TwoSided {
                vec![1, 2]
            } else {
                vec![0, 1]
            };
            let r = bounds_report(&p, mode, &small(levels, 40), 7).unwrap();
            assert!(r.pass, "{mode:?}: {r:?}");
            assert_eq!(r.violations, 0);
            assert_eq!(r.inconclusive, 0);
        }
    }

    #[test]
    fn two_sided_reports_both_sides() {
        let p = Params::with_l(2, 8, 8.into(), false).unwrap();
        let r = bounds_report(&p, BoundsMode::TwoSided, &small(vec![1], 20), 1).unwrap();
        let lower = r.lower_worst_margin.unwrap();
        let upper = r.upper_worst_margin.unwrap();
        assert!(lower >= 1.0 - MARGIN_SLACK_TEST);
        assert!(upper > 1e40, "C2 dominates the upper side: {upper}");
        assert_eq!(r.worst_margin, lower.min(upper));
    }

    const MARGIN_SLACK_TEST: f64 = 1e-9;

    #[test]
    fn reports_are_seed_deterministic() {
        let p = Params::with_l(2, 8, 8.into(), false).unwrap();
        let o = small(vec![0, 1], 30);
        let a = bounds_report(&p, BoundsMode::Diameter, &o, 5).unwrap();
        let b = bounds_report(&p, BoundsMode::Diameter, &o, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn step_length_matches_the_cell_weight() {
        // a step along the bottom edge only touches the corner cell
        let p = Params::with_l(2, 8, 8.into(), false).unwrap();
        let inner = Window {
            level: 1,
            lo: vec![0, 0],
            hi: vec![1, 1],
        };
        let at = GridPoint {
            level: 3,
            coords: vec![3, 0],
        };
        for k in [1, 2] {
            let g = WeightedGrid::build(
                &p,
                GridSpec::new(k, 3, Stencil::Axis).unwrap(),
                Some(&inner),
                1 << 20,
            )
            .unwrap();
            let w = cube_weight(
                &p,
                &CubeAddress {
                    level: k,
                    index: vec![0, 0],
                },
            )
            .value_f64(&p);
            assert_eq!(g.step_length(&at, &[1, 0]).unwrap(), w / 512.0);
        }
    }

    #[test]
    fn two_sided_rejects_level_zero() {
        let p = Params::with_l(2, 8, 8.into(), false).unwrap();
        assert!(bounds_report(&p, BoundsMode::TwoSided, &small(vec![0], 5), 1).is_err());
    }
}
