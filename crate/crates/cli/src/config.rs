use serde::{Deserialize, Serialize};

use qsmetric_core::heatmap::HeatmapOptions;
use qsmetric_core::params::parse_rational;
use qsmetric_core::stochastic::LipschitzOptions;
use qsmetric_core::verify::{BoundsMode, BoundsOptions, ContentOptions, QsOptions, SearchOptions};
use qsmetric_core::{Params, Result};

/// A number given either as a JSON number or as a string such as `"7/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rational {
    Number(serde_json::Number),
    Text(String),
}

impl Rational {
    fn parse(&self) -> Result<qsmetric_core::RBig> {
        match self {
            Rational::Number(n) => parse_rational(&n.to_string()),
            Rational::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: usize,
    #[serde(rename = "M")]
    pub arity: u32,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rational>,
    #[serde(default)]
    pub capped: bool,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<Params> {
        match (&self.l, &self.beta) {
            (Some(l), None) => Params::with_l(self.n, self.arity, l.parse()?, self.capped),
            (None, Some(b)) => Params::with_beta(self.n, self.arity, b.parse()?, self.capped),
            _ => Err(qsmetric_core::Error::InvalidParams(
                "params need exactly one of `L` and `beta`".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyCheck {
    PathMonotone,
    MetricMonotone,
    Diameter,
    TwoSided,
    Lipschitz,
}

impl VerifyCheck {
    pub fn bounds_mode(self) -> Option<BoundsMode> {
        match self {
            VerifyCheck::PathMonotone => Some(BoundsMode::PathMonotone),
            VerifyCheck::MetricMonotone => Some(BoundsMode::MetricMonotone),
            VerifyCheck::Diameter => Some(BoundsMode::Diameter),
            VerifyCheck::TwoSided => Some(BoundsMode::TwoSided),
            VerifyCheck::Lipschitz => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Checks to run; empty picks the four bounds checks for the plain
    /// construction and the Lipschitz check for the capped one.
    pub checks: Vec<VerifyCheck>,
    pub path_monotone: BoundsOptions,
    pub metric_monotone: BoundsOptions,
    pub diameter: BoundsOptions,
    pub two_sided: BoundsOptions,
    pub lipschitz: LipschitzOptions,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let with = |samples| BoundsOptions {
            samples,
            ..Default::default()
        };
        Self {
            checks: Vec::new(),
            path_monotone: with(200),
            metric_monotone: with(200),
            diameter: with(1000),
            two_sided: with(1000),
            lipschitz: LipschitzOptions::default(),
        }
    }
}

impl VerifyConfig {
    pub fn resolve(&mut self, capped: bool) {
        if self.checks.is_empty() {
            self.checks = if capped {
                vec![VerifyCheck::Lipschitz]
            } else {
                vec![
                    VerifyCheck::PathMonotone,
                    VerifyCheck::MetricMonotone,
                    VerifyCheck::Diameter,
                    VerifyCheck::TwoSided,
                ]
            };
        }
    }

    pub fn options(&self, mode: BoundsMode) -> &BoundsOptions {
        match mode {
            BoundsMode::PathMonotone => &self.path_monotone,
            BoundsMode::MetricMonotone => &self.metric_monotone,
            BoundsMode::Diameter => &self.diameter,
            BoundsMode::TwoSided => &self.two_sided,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionConfig {
    pub alpha: Rational,
    /// Plan parameters; when absent they come from `params` if it gives
    /// `beta`, and from the parameter search otherwise.
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub arity: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rational>,
    pub search: SearchOptions,
    pub content: ContentOptions,
    /// Extra `(n, M, L)` triples whose geometric mean is reported.
    pub mu_for: Vec<ParamsConfig>,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            alpha: Rational::Text("1.1".into()),
            arity: None,
            beta: None,
            search: SearchOptions::default(),
            content: ContentOptions::default(),
            mu_for: Vec::new(),
        }
    }
}

impl DimensionConfig {
    pub fn alpha(&self) -> Result<qsmetric_core::RBig> {
        self.alpha.parse()
    }

    pub fn beta(&self) -> Option<Result<qsmetric_core::RBig>> {
        self.beta.as_ref().map(Rational::parse)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "H")]
    pub horizon: u64,
    pub lln_n: u64,
    pub lln_k: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            n: 100_000,
            horizon: 10_000,
            lln_n: 100_000,
            lln_k: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub qs: QsOptions,
    #[serde(default)]
    pub dimension: DimensionConfig,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub heatmap: HeatmapOptions,
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse(r#"{"params": {"n": 2, "M": 8, "L": 8}}"#).unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.verify.two_sided.samples, 1000);
        let p = c.params.build().unwrap();
        assert_eq!(p.boost(), 5);
    }

    #[test]
    fn rational_strings_and_beta() {
        let c = RunConfig::parse(r#"{"params": {"n": 2, "M": 16, "beta": "3"}}"#).unwrap();
        assert_eq!(c.params.build().unwrap().l_f64(), 4096.0);
        let c = RunConfig::parse(r#"{"params": {"n": 2, "M": 8, "L": "17/2"}}"#).unwrap();
        assert_eq!(c.params.build().unwrap().l_f64(), 8.5);
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let err = RunConfig::parse(r#"{"params": {"n": 2, "L": 8}}"#).unwrap_err();
        assert!(err.contains("missing field `M`"), "{err}");
        let err =
            RunConfig::parse(r#"{"params": {"n": 2, "M": 8, "L": 8}, "sede": 3}"#).unwrap_err();
        assert!(err.contains("unknown field `sede`"), "{err}");
        let err = RunConfig::parse("{\n  \"params\": {\"n\": 2, \"M\": 8, \"L\": 8},\n  \"qs\": {\"triples\": \"many\"}\n}").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn params_need_one_attenuation() {
        let c = RunConfig::parse(r#"{"params": {"n": 2, "M": 8, "L": 8, "beta": 1}}"#).unwrap();
        assert!(c.params.build().is_err());
        let c = RunConfig::parse(r#"{"params": {"n": 2, "M": 8}}"#).unwrap();
        assert!(c.params.build().is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let mut c = RunConfig::parse(r#"{"params": {"n": 2, "M": 8, "L": 8}}"#).unwrap();
        c.verify.resolve(false);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }
}
