//! The random multiplier model: laws, geometric mean, law-of-large-numbers
//! runs, `k_m` selection and the capped walk.

mod laws;
mod lipschitz;

use dashu::rational::RBig;
use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::Params;
use crate::rng::{par_batches, stream, tags, RNG_ALGORITHM};

pub use laws::{
    geometric_mean, geometric_mean_with, laws, log_multiplier_variance, GeometricMean,
    GeometricMeanSummary, MultiplierLaw, WalkLaw,
};
pub use lipschitz::{lipschitz_check, LipschitzOptions};

const BATCH: u64 = 1000;

/// Draws `k` multipliers and returns how many were boosts and attenuations.
pub(crate) fn draw_exponents(
    rng: &mut impl Rng,
    k: u64,
    total: u64,
    t1: u64,
    t2: u64,
) -> (u64, u64) {
    let (mut a, mut b) = (0, 0);
    for _ in 0..k {
        let u = rng.random_range(0..total);
        if u >= t2 {
            b += 1;
        } else if u >= t1 {
            a += 1;
        }
    }
    (a, b)
}

pub(crate) fn thresholds(params: &Params) -> (u64, u64, u64) {
    let (law, _) = laws(params);
    (law.total, law.counts.0, law.counts.0 + law.counts.1)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BatchSummary {
    pub batch: u64,
    pub sum_log: f64,
    pub count: u64,
}

/// Sample statistics of `(1/k) ln Y_k` over `N` independent streams.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LlnStats {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub mean: f64,
    pub std: f64,
    pub ln_mu: f64,
    pub deviation: f64,
    /// `3 std / sqrt(N)`.
    pub bound: f64,
    pub pass: bool,
    #[serde(skip)]
    pub batches: Vec<BatchSummary>,
}

pub fn simulate_lln(params: &Params, n: u64, k: u64, seed: u64) -> Result<LlnStats> {
    if n == 0 || k == 0 {
        return domain("simulate_lln needs N >= 1 and k >= 1");
    }
    let (total, t1, t2) = thresholds(params);
    let ln_s = params.ln_boost();
    let ln_l = params.ln_l();
    let batches = n.div_ceil(BATCH);
    let values: Vec<Vec<f64>> = par_batches(batches, |b| {
        let mut rng = stream(seed, tags::LLN, b);
        let count = BATCH.min(n - b * BATCH);
        (0..count)
            .map(|_| {
                let (a, bb) = draw_exponents(&mut rng, k, total, t1, t2);
                (a as f64 * ln_s - bb as f64 * ln_l) / k as f64
            })
            .collect()
    });
    let batch_summaries = values
        .iter()
        .enumerate()
        .map(|(i, v)| BatchSummary {
            batch: i as u64,
            sum_log: v.iter().sum(),
            count: v.len() as u64,
        })
        .collect();
    let all: Vec<f64> = values.into_iter().flatten().collect();
    let mean = all.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std = var.sqrt();
    let ln_mu = geometric_mean(params).ln_mu_f64();
    let deviation = (mean - ln_mu).abs();
    let bound = 3.0 * std / (n as f64).sqrt();
    Ok(LlnStats {
        n,
        k,
        seed,
        rng: RNG_ALGORITHM,
        mean,
        std,
        ln_mu,
        deviation,
        bound,
        pass: deviation <= bound,
        batches: batch_summaries,
    })
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (phat + z * z / (2.0 * nf)) / denom;
    let half = z * (phat * (1.0 - phat) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LadderStep {
    pub k: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Outcome of the doubling scan for `k_m`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KmSelection {
    pub m: u32,
    pub k: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold: f64,
    pub status: &'static str,
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub ladder: Vec<LadderStep>,
}

/// Fraction of `N` sampled level-`k` cubes with `r_k <= ((1 + 2^-m) mu)^k`.
pub fn good_fraction(params: &Params, m: u32, k: u64, n: u64, seed: u64, batch_base: u64) -> u64 {
    let (total, t1, t2) = thresholds(params);
    let ln_s = params.ln_boost();
    let ln_l = params.ln_l();
    let limit =
        k as f64 * ((1.0 + 0.5f64.powi(m as i32)).ln() + geometric_mean(params).ln_mu_f64());
    let batches = n.div_ceil(BATCH);
    par_batches(batches, |b| {
        let mut rng = stream(seed, tags::SELECT_KM, batch_base + b);
        let count = BATCH.min(n - b * BATCH);
        (0..count)
            .filter(|_| {
                let (a, bb) = draw_exponents(&mut rng, k, total, t1, t2);
                a as f64 * ln_s - bb as f64 * ln_l <= limit
            })
            .count() as u64
    })
    .into_iter()
    .sum()
}

/// Smallest `k` in the scan `m, 2m, 4m, ...` (capped at `k_cap`) at which
/// the 95% lower confidence bound of the good fraction reaches `1 - 2^-m`.
pub fn select_km(params: &Params, m: u32, n: u64, seed: u64, k_cap: u64) -> Result<KmSelection> {
    select_km_from(params, m, m as u64, n, seed, k_cap)
}

/// As [`select_km`], scanning `start, 2 start, ...` with `start >= m`.
pub fn select_km_from(
    params: &Params,
    m: u32,
    start: u64,
    n: u64,
    seed: u64,
    k_cap: u64,
) -> Result<KmSelection> {
    if m == 0 || n == 0 {
        return domain("select_km needs m >= 1 and N >= 1");
    }
    let threshold = 1.0 - 0.5f64.powi(m as i32);
    let mut ladder = Vec::new();
    let mut k = start.max(m as u64);
    let mut step = 0u64;
    loop {
        let hits = good_fraction(params, m, k, n, seed, ((m as u64) << 28) | (step << 20));
        let (lo, hi) = wilson_interval(hits, n, Z95);
        ladder.push(LadderStep {
            k,
            fraction: hits as f64 / n as f64,
            ci_low: lo,
            ci_high: hi,
        });
        let found = lo >= threshold;
        if found || k * 2 > k_cap {
            let last = ladder.last().cloned().expect("one step");
            return Ok(KmSelection {
                m,
                k,
                fraction: last.fraction,
                ci_low: last.ci_low,
                ci_high: last.ci_high,
                threshold,
                status: if found { "found" } else { "cap_reached" },
                n,
                seed,
                ladder,
            });
        }
        k *= 2;
        step += 1;
    }
}

/// Exact law of the capped walk and, when it drifts down, its hitting
/// probability and the measure of the never-frozen set.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WalkClosedForm {
    pub p: String,
    pub q: String,
    pub transient: bool,
    pub regime: &'static str,
    /// Hitting probability `(1 - q)/q` of level +1, when `q > 1/2`.
    pub r: Option<String>,
    /// Measure `(2q - 1)/q` of the never-frozen set, when `q > 1/2`.
    pub never_frozen: Option<String>,
    pub never_frozen_f64: Option<f64>,
    /// `r = p + q r^2` holds for the reported root.
    pub fixed_point_identity: bool,
}

pub fn walk_closed_form(params: &Params) -> WalkClosedForm {
    let (_, walk) = laws(params);
    let half = RBig::from_parts(1.into(), 2u8.into());
    let transient = walk.q > half;
    let (r, never_frozen, identity) = if transient {
        let r = walk.p.clone() / walk.q.clone();
        let identity = r == walk.p.clone() + walk.q.clone() * r.clone() * r.clone();
        let f = (RBig::from(2u8) * walk.q.clone() - RBig::ONE) / walk.q.clone();
        (Some(r), Some(f), identity)
    } else {
        // r = 1 is then the relevant root of r = p + q r^2
        (None, None, walk.p.clone() + walk.q.clone() == RBig::ONE)
    };
    WalkClosedForm {
        p: walk.p.to_string(),
        q: walk.q.to_string(),
        transient,
        regime: if transient {
            "transient"
        } else {
            "recurrent/critical: r = 1"
        },
        r: r.as_ref().map(|r| r.to_string()),
        never_frozen: never_frozen.as_ref().map(|f| f.to_string()),
        never_frozen_f64: never_frozen.as_ref().map(|f| f.to_f64().value()),
        fixed_point_identity: identity,
    }
}

/// Analytic and simulated behaviour of the capped walk.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WalkReport {
    pub p: String,
    pub q: String,
    pub regime: &'static str,
    /// Hitting probability `(1 - q)/q` of level +1, when `q > 1/2`.
    pub r: Option<String>,
    pub r_f64: Option<f64>,
    /// Measure `(2q - 1)/q` of the never-frozen set, when `q > 1/2`.
    pub never_frozen: Option<String>,
    pub never_frozen_f64: Option<f64>,
    pub fixed_point_identity: bool,
    #[serde(rename = "N")]
    pub n: u64,
    pub horizon: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub hits: u64,
    pub hit_fraction: f64,
    pub standard_error: f64,
    /// `log10` of an upper bound on the probability of a first hit after
    /// the horizon; the simulated fraction is low by at most this much.
    pub truncation_bias_log10: Option<f64>,
    pub drift_samples: u64,
    pub drift_mean: f64,
    pub drift_expected: f64,
    /// `|hit_fraction - r| <= 3 standard errors`, when `r` exists.
    pub pass: Option<bool>,
}

const DRIFT_SAMPLES: u64 = 1000;

pub fn walk_analysis(params: &Params, n: u64, horizon: u64, seed: u64) -> Result<WalkReport> {
    if n == 0 || horizon == 0 {
        return domain("walk_analysis needs N >= 1 and H >= 1");
    }
    let closed = walk_closed_form(params);
    let (_, walk) = laws(params);
    let transient = closed.transient;
    let r = transient.then(|| walk.p.clone() / walk.q.clone());
    let (total, _, t2) = thresholds(params);
    let batches = n.div_ceil(BATCH);
    let hits: u64 = par_batches(batches, |b| {
        let mut rng = stream(seed, tags::WALK, b);
        let count = BATCH.min(n - b * BATCH);
        (0..count)
            .filter(|_| {
                let mut y = 0i64;
                for _ in 0..horizon {
                    y += if rng.random_range(0..total) >= t2 {
                        -1
                    } else {
                        1
                    };
                    if y == 1 {
                        return true;
                    }
                }
                false
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let drift_n = DRIFT_SAMPLES.min(n);
    let drift_sum: i64 = par_batches(drift_n.div_ceil(100), |b| {
        let mut rng = stream(seed, tags::WALK_DRIFT, b);
        let count = 100.min(drift_n - b * 100);
        (0..count)
            .map(|_| {
                (0..horizon)
                    .map(|_| {
                        if rng.random_range(0..total) >= t2 {
                            -1i64
                        } else {
                            1
                        }
                    })
                    .sum::<i64>()
            })
            .sum::<i64>()
    })
    .into_iter()
    .sum();
    let p = walk.p.to_f64().value();
    let q = walk.q.to_f64().value();
    let fraction = hits as f64 / n as f64;
    let se = (fraction * (1.0 - fraction) / n as f64)
        .sqrt()
        .max(1.0 / n as f64);
    let truncation = transient.then(|| {
        // P(Y_t >= 1 for some t > H) <= sum_{t > H} (2 sqrt(pq))^t
        let c = 2.0 * (p * q).sqrt();
        ((horizon + 1) as f64 * c.ln() - (1.0 - c).ln()) / std::f64::consts::LN_10
    });
    let r_f64 = r.as_ref().map(|r| r.to_f64().value());
    Ok(WalkReport {
        p: closed.p,
        q: closed.q,
        regime: closed.regime,
        r: closed.r,
        r_f64,
        never_frozen: closed.never_frozen,
        never_frozen_f64: closed.never_frozen_f64,
        fixed_point_identity: closed.fixed_point_identity,
        n,
        horizon,
        seed,
        rng: RNG_ALGORITHM,
        hits,
        hit_fraction: fraction,
        standard_error: se,
        truncation_bias_log10: truncation,
        drift_samples: drift_n,
        drift_mean: drift_sum as f64 / (drift_n * horizon) as f64,
        drift_expected: p - q,
        pass: r_f64.map(|r| (fraction - r).abs() <= 3.0 * se),
    })
}

#[cfg(test)]
mod tests;
