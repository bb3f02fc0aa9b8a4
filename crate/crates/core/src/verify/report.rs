use serde::Serialize;

use crate::params::{Params, ParamsSummary};
use crate::rng::RNG_ALGORITHM;

/// Relative slack allowed when comparing a margin against 1.
pub const MARGIN_SLACK: f64 = 1e-9;

/// Outcome of one sampled inequality check. A margin is `bound / observed`
/// for upper bounds and `observed / bound` for lower bounds, so every margin
/// must be at least one.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundsReport {
    pub check: String,
    pub params: ParamsSummary,
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_worst_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_worst_margin: Option<f64>,
    pub violations: u64,
    pub inconclusive: u64,
    pub lambda: f64,
    /// Grid resolutions the solves actually ran at.
    pub resolutions: Vec<u32>,
    pub pass: bool,
}

/// Running minimum of margins.
#[derive(Clone, Copy, Debug)]
pub struct Margins {
    pub worst: f64,
    pub violations: u64,
    pub count: u64,
}

impl Default for Margins {
    fn default() -> Self {
        Self {
            worst: f64::INFINITY,
            violations: 0,
            count: 0,
        }
    }
}

impl Margins {
    pub fn add(&mut self, margin: f64) {
        self.count += 1;
        if !(margin >= 1.0 - MARGIN_SLACK) {
            self.violations += 1;
        }
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
        }
    }

    pub fn merge(&mut self, other: &Margins) {
        self.count += other.count;
        self.violations += other.violations;
        if other.worst < self.worst || other.worst.is_nan() {
            self.worst = other.worst;
        }
    }
}

pub(crate) struct ReportParts {
    pub check: &'static str,
    pub n: u64,
    pub seed: u64,
    pub margins: Margins,
    pub lower: Option<Margins>,
    pub upper: Option<Margins>,
    pub inconclusive: u64,
    pub lambda: f64,
    pub resolutions: Vec<u32>,
}

impl BoundsReport {
    pub(crate) fn assemble(params: &Params, parts: ReportParts) -> Self {
        let mut resolutions = parts.resolutions;
        resolutions.sort_unstable();
        resolutions.dedup();
        let worst = parts.margins.worst;
        Self {
            check: parts.check.to_string(),
            params: params.summary(),
            n: parts.n,
            seed: parts.seed,
            rng: RNG_ALGORITHM,
            worst_margin: worst,
            lower_worst_margin: parts.lower.map(|m| m.worst),
            upper_worst_margin: parts.upper.map(|m| m.worst),
            violations: parts.margins.violations,
            inconclusive: parts.inconclusive,
            lambda: parts.lambda,
            resolutions,
            pass: parts.margins.count > 0 && worst >= 1.0 - MARGIN_SLACK && parts.inconclusive == 0,
        }
    }
}
