use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::metric::{level_distances, MetricOptions, Window};
use crate::params::Params;
use crate::rng::{par_batches, stream, tags};
use crate::verify::sampling::{distinct_targets, random_node, random_node_near};
use crate::verify::{BoundsReport, Margins, ReportParts};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzOptions {
    pub weight_level: u32,
    pub resolution: u32,
    pub pairs: u64,
    pub targets_per_source: u64,
    pub metric: MetricOptions,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        Self {
            weight_level: 2,
            resolution: 4,
            pairs: 1000,
            targets_per_source: 50,
            metric: MetricOptions::default(),
        }
    }
}

/// Checks `d(x, y) <= lambda (M - 2n + 1) |x - y|` for the capped weight on
/// sampled node pairs. Each source gets a scale `j` and targets within
/// `M^-j` of it; the graph is restricted to a window around them, which can
/// only lengthen distances.
pub fn lipschitz_check(
    params: &Params,
    opts: &LipschitzOptions,
    seed: u64,
) -> Result<BoundsReport> {
    if !params.capped() {
        return domain("the Lipschitz check applies to the capped construction");
    }
    if opts.resolution < opts.weight_level || opts.pairs == 0 {
        return domain("the Lipschitz check needs K >= m and at least one pair");
    }
    let arity = params.arity();
    let m = arity as u64;
    let big_k = opts.resolution;
    let sources = opts.pairs.div_ceil(opts.targets_per_source);
    let s = params.boost() as f64;
    let results = par_batches(sources, |b| -> Result<(Margins, u32, f64, u64)> {
        let mut rng = stream(seed, tags::LIPSCHITZ, b);
        let count = opts
            .targets_per_source
            .min(opts.pairs - b * opts.targets_per_source) as usize;
        let scale = rng.random_range(0..big_k);
        let x = random_node(&mut rng, params.dim(), arity, big_k);
        let radius = m.pow(big_k - scale);
        let ys = distinct_targets(
            &mut rng,
            &x,
            count,
            |r| random_node_near(r, &x, radius, arity),
            |_| true,
        );
        let mut all = ys.clone();
        all.push(x.clone());
        let mut metric = opts.metric.clone();
        metric.resolution_offset = big_k - opts.weight_level;
        metric.window = Some(Window::around(&all, scale, 1, arity));
        match level_distances(params, opts.weight_level, &x, &ys, &metric) {
            Ok((used, lambda, d)) => {
                let mut margins = Margins::default();
                for (y, g) in ys.iter().zip(d) {
                    margins.add(lambda * s * x.distance(y, arity) / g);
                }
                Ok((margins, used, lambda, (count - ys.len()) as u64))
            }
            Err(Error::Resource { .. }) => Ok((Margins::default(), 0, 0.0, count as u64)),
            Err(e) => Err(e),
        }
    });
    let mut margins = Margins::default();
    let mut inconclusive = 0;
    let mut resolutions = Vec::new();
    let mut lambda = 0.0f64;
    for r in results {
        let (mg, used, l, skipped) = r?;
        margins.merge(&mg);
        inconclusive += skipped;
        if mg.count > 0 {
            resolutions.push(used);
            lambda = lambda.max(l);
        }
    }
    Ok(BoundsReport::assemble(
        params,
        ReportParts {
            check: "lipschitz",
            n: opts.pairs,
            seed,
            margins,
            lower: None,
            upper: None,
            inconclusive,
            lambda,
            resolutions,
        },
    ))
}
