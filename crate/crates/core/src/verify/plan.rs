use std::cmp::Ordering;

use dashu::rational::RBig;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{hp_to_decimal, hp_to_f64, PowerProduct, EXACT_BIT_BUDGET, HP_BITS};
use crate::params::Params;
use crate::rng::{par_batches, stream, tags};
use crate::stochastic::{
    draw_exponents, geometric_mean, laws, select_km_from, thresholds, GeometricMeanSummary,
    KmSelection,
};

use super::constants::constants;

/// One of the inequalities a plan must satisfy, decided exactly when the
/// rational exponents allow it.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PlanCheck {
    pub name: &'static str,
    pub holds: bool,
    pub exact: bool,
    /// Natural log of the quantity compared against 1.
    pub ln_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionPlan {
    pub n: usize,
    #[serde(rename = "M")]
    pub arity: u32,
    pub alpha: String,
    pub beta: String,
    pub mu: GeometricMeanSummary,
    /// `M^(n-alpha) (2 mu)^alpha`.
    pub rho_star: f64,
    pub rho_star_digits: String,
    pub checks: Vec<PlanCheck>,
    pub feasible: bool,
    #[serde(skip)]
    params: Params,
    #[serde(skip)]
    alpha_exact: RBig,
    #[serde(skip)]
    ln_rho_star: f64,
}

fn check(name: &'static str, product: PowerProduct) -> PlanCheck {
    let exact = product.exact_cmp_one(EXACT_BIT_BUDGET);
    let ord = exact.unwrap_or_else(|| product.cmp_one());
    PlanCheck {
        name,
        holds: ord == Ordering::Less,
        exact: exact.is_some(),
        ln_value: product.ln_f64(),
    }
}

/// Factors of `mu^alpha` for `L = M^beta`.
fn mu_power(params: &Params, alpha: &RBig, beta: &RBig) -> PowerProduct {
    let (law, _) = laws(params);
    PowerProduct::new()
        .times(RBig::from(params.boost()), alpha.clone() * law.p2)
        .times(
            RBig::from(params.arity()),
            -(alpha.clone() * beta.clone() * law.p3),
        )
}

impl DimensionPlan {
    pub fn new(n: usize, arity: u32, beta: RBig, alpha: RBig) -> Result<Self> {
        let nr = RBig::from(n as u64);
        if alpha <= RBig::ZERO || alpha >= nr {
            return domain(format!(
                "alpha = {} must lie in (0, {n})",
                alpha
            ));
        }
        let params = Params::with_beta(n, arity, beta.clone(), false)?;
        let mu = geometric_mean(&params);
        let m = RBig::from(arity);
        let two = RBig::from(2u8);
        let (law, _) = laws(&params);
        let mu_alone = PowerProduct::new()
            .times(RBig::from(params.boost()), law.p2.clone())
            .times(m.clone(), -(beta.clone() * law.p3.clone()));
        let mut scaled = mu_power(&params, &alpha, &beta);
        scaled = scaled
            .times(m.clone(), nr.clone() - alpha.clone())
            .times(two.clone(), alpha.clone());
        // rho* = M^(n-alpha) (2 mu)^alpha is the same product as the scaled
        // condition, so both are reported but they always agree
        let rho = scaled.clone();
        let range = alpha.clone() * (RBig::ONE + beta.clone()) > nr;
        let checks = vec![
            check("mu < 1", mu_alone),
            check("M^(n-alpha) mu^alpha < 2^-alpha", scaled),
            check("rho* < 1", rho.clone()),
            PlanCheck {
                name: "alpha > n/(1+beta)",
                holds: range,
                exact: true,
                ln_value: (n as f64 / (1.0 + beta.to_f64().value())).ln()
                    - alpha.to_f64().value().ln(),
            },
        ];
        let ln_rho = rho.ln_hp(HP_BITS);
        let feasible = checks.iter().all(|c| c.holds);
        Ok(Self {
            n,
            arity,
            alpha: alpha.to_string(),
            beta: beta.to_string(),
            mu: mu.summary(),
            rho_star: hp_to_f64(&ln_rho.clone().exp()),
            rho_star_digits: hp_to_decimal(&ln_rho.clone().exp(), 30),
            checks,
            feasible,
            params,
            alpha_exact: alpha,
            ln_rho_star: hp_to_f64(&ln_rho),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_exact.to_f64().value()
    }

    pub fn ln_rho_star(&self) -> f64 {
        self.ln_rho_star
    }

    /// Errors naming the first failed inequality.
    pub fn require_feasible(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.holds) {
            Some(c) => domain(format!("plan infeasible: {} fails", c.name)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Candidate values of `beta` in increasing order.
    pub beta_ladder: Vec<String>,
    pub arity_range: (u32, u32),
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            beta_ladder: (1..=8).map(|b| b.to_string()).collect(),
            arity_range: (8, 64),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParameterChoice {
    pub status: &'static str,
    pub beta: Option<String>,
    /// Every `M` tried for the chosen `beta`, with whether it passed.
    pub scanned: Vec<(u32, bool)>,
    pub plan: Option<DimensionPlan>,
}

/// Smallest ladder `beta` with `alpha > n/(1+beta)`, then the smallest `M`
/// in range whose plan satisfies every inequality.
pub fn choose_parameters(n: usize, alpha: &RBig, opts: &SearchOptions) -> Result<ParameterChoice> {
    if *alpha <= RBig::ZERO || *alpha >= RBig::from(n as u64) {
        return domain(format!("alpha = {} must lie in (0, {n})", alpha));
    }
    let nr = RBig::from(n as u64);
    let mut chosen = None;
    for b in &opts.beta_ladder {
        let beta = crate::params::parse_rational(b)?;
        if alpha.clone() * (RBig::ONE + beta.clone()) > nr {
            chosen = Some(beta);
            break;
        }
    }
    let Some(beta) = chosen else {
        return Ok(ParameterChoice {
            status: "no_beta_in_ladder",
            beta: None,
            scanned: Vec::new(),
            plan: None,
        });
    };
    let mut scanned = Vec::new();
    let lo = opts.arity_range.0.max(2 * n as u32 + 1);
    for m in lo..=opts.arity_range.1 {
        let plan = DimensionPlan::new(n, m, beta.clone(), alpha.clone())?;
        scanned.push((m, plan.feasible));
        if plan.feasible {
            return Ok(ParameterChoice {
                status: "feasible",
                beta: Some(beta.to_string()),
                scanned,
                plan: Some(plan),
            });
        }
    }
    Ok(ParameterChoice {
        status: "infeasible_within_ladder",
        beta: Some(beta.to_string()),
        scanned,
        plan: None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ContentOptions {
    pub m_max: u32,
    /// Sampled cubes per `k_m` step and per empirical row.
    pub samples: u64,
    pub k_cap: u64,
    /// Empirical content is estimated for `m` up to this.
    pub empirical_m_max: u32,
}

impl Default for ContentOptions {
    fn default() -> Self {
        Self {
            m_max: 6,
            samples: 10_000,
            k_cap: 1 << 14,
            empirical_m_max: 3,
        }
    }
}

/// Monte Carlo estimate of the sum of `(diam f(Q))^alpha` over the level-`k_m`
/// cubes in `F_m`, with each diameter replaced by `2n C1 r_k(Q) M^-k`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EmpiricalContent {
    pub samples: u64,
    pub in_family: u64,
    pub log10_estimate: Option<f64>,
    pub relative_se: Option<f64>,
    /// The estimate minus three standard errors does not exceed the bound.
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ContentRow {
    pub m: u32,
    pub k_m: u64,
    pub selection: KmSelection,
    pub log10_epsilon: f64,
    pub analytic_bound: f64,
    pub log10_analytic_bound: f64,
    pub empirical: Option<EmpiricalContent>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContentTable {
    pub plan: DimensionPlan,
    pub seed: u64,
    pub rows: Vec<ContentRow>,
    pub decreasing: bool,
    pub km_found: bool,
    pub empirical_within_bound: bool,
    pub pass: bool,
}

impl ContentTable {
    pub const CSV_HEADER: &'static str =
        "m,k_m,fraction,ci_low,log10_epsilon,log10_analytic_bound,log10_empirical";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let emp = r
                .empirical
                .as_ref()
                .and_then(|e| e.log10_estimate)
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                r.m,
                r.k_m,
                r.selection.fraction,
                r.selection.ci_low,
                r.log10_epsilon,
                r.log10_analytic_bound,
                emp
            ));
        }
        out
    }
}

const BATCH: u64 = 1000;

fn empirical_content(
    plan: &DimensionPlan,
    m: u32,
    k: u64,
    ln_bound: f64,
    samples: u64,
    seed: u64,
) -> EmpiricalContent {
    let params = plan.params();
    let (total, t1, t2) = thresholds(params);
    let alpha = plan.alpha_f64();
    let ln_s = params.ln_boost();
    let ln_l = params.ln_l();
    let ln_m = (params.arity() as f64).ln();
    let ln_c = (2.0 * params.dim() as f64 * constants(params).c1_f64()).ln();
    let limit =
        k as f64 * ((1.0 + 0.5f64.powi(m as i32)).ln() + geometric_mean(params).ln_mu_f64());
    // every cube in F_m contributes at most exp(shift)
    let shift = alpha * (ln_c + limit - k as f64 * ln_m);
    let parts = par_batches(samples.div_ceil(BATCH), |b| {
        let mut rng = stream(seed, tags::CONTENT, ((m as u64) << 32) | b);
        let (mut hits, mut sum, mut sq) = (0u64, 0.0f64, 0.0f64);
        for _ in 0..BATCH.min(samples - b * BATCH) {
            let (a, bb) = draw_exponents(&mut rng, k, total, t1, t2);
            let ln_r = a as f64 * ln_s - bb as f64 * ln_l;
            if ln_r <= limit {
                hits += 1;
                let c = (alpha * (ln_c + ln_r - k as f64 * ln_m) - shift).exp();
                sum += c;
                sq += c * c;
            }
        }
        (hits, sum, sq)
    });
    let (hits, sum, sq) = parts.into_iter().fold((0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2)
    });
    let nf = samples as f64;
    if hits == 0 || sum == 0.0 {
        return EmpiricalContent {
            samples,
            in_family: hits,
            log10_estimate: None,
            relative_se: None,
            within_bound: true,
        };
    }
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0);
    let rel_se = (var / nf).sqrt() / mean;
    let ln_est = params.dim() as f64 * k as f64 * ln_m + shift + mean.ln();
    let low = ln_est + (1.0 - 3.0 * rel_se).max(f64::MIN_POSITIVE).ln();
    EmpiricalContent {
        samples,
        in_family: hits,
        log10_estimate: Some(ln_est / std::f64::consts::LN_10),
        relative_se: Some(rel_se),
        within_bound: low <= ln_bound,
    }
}

pub fn content_table(
    plan: &DimensionPlan,
    opts: &ContentOptions,
    seed: u64,
) -> Result<ContentTable> {
    plan.require_feasible()?;
    if opts.m_max == 0 || opts.samples == 0 {
        return Err(Error::InvalidParams(
            "content table needs m_max >= 1 and samples >= 1".into(),
        ));
    }
    let params = plan.params();
    let n = params.dim() as f64;
    let ln_c = (2.0 * n * constants(params).c1_f64()).ln();
    let ln_2mu_over_m =
        (2.0f64).ln() + geometric_mean(params).ln_mu_f64() - (params.arity() as f64).ln();
    let alpha = plan.alpha_f64();
    let mut rows = Vec::new();
    let mut prev_k = 0;
    for m in 1..=opts.m_max {
        let selection = select_km_from(params, m, prev_k, opts.samples, seed, opts.k_cap)?;
        let k = selection.k;
        prev_k = k;
        let ln_bound = alpha * ln_c + m as f64 * plan.ln_rho_star();
        let empirical = (m <= opts.empirical_m_max)
            .then(|| empirical_content(plan, m, k, ln_bound, opts.samples, seed));
        rows.push(ContentRow {
            m,
            k_m: k,
            selection,
            log10_epsilon: (ln_c + k as f64 * ln_2mu_over_m) / std::f64::consts::LN_10,
            analytic_bound: ln_bound.exp(),
            log10_analytic_bound: ln_bound / std::f64::consts::LN_10,
            empirical,
        });
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].log10_analytic_bound < w[0].log10_analytic_bound);
    let km_found = rows.iter().all(|r| r.selection.status == "found");
    let empirical_within_bound = rows
        .iter()
        .filter_map(|r| r.empirical.as_ref())
        .all(|e| e.within_bound);
    Ok(ContentTable {
        plan: plan.clone(),
        seed,
        decreasing,
        km_found,
        empirical_within_bound,
        pass: decreasing && km_found && empirical_within_bound,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::parse_rational;

    fn q(s: &str) -> RBig {
        parse_rational(s).unwrap()
    }

    // 60-digit reference values from an independent arbitrary-precision run
    const RHO_ALPHA_11: &str = "0.268281038992117552260745325702059109854869770839011843259535";
    const RHO_ALPHA_1: &str = "0.500572804261558624348045148363498032344662906871430181780481";

    #[test]
    fn rho_star_matches_reference_digits() {
        for (alpha, want) in [("1.1", RHO_ALPHA_11), ("1", RHO_ALPHA_1)] {
            let plan = DimensionPlan::new(2, 16, q("3"), q(alpha)).unwrap();
            assert_eq!(&plan.rho_star_digits[..30], &want[..30], "alpha = {alpha}");
            assert!(plan.feasible);
            assert!(plan.checks.iter().all(|c| c.exact), "{:?}", plan.checks);
        }
    }

    #[test]
    fn scaled_condition_is_sixteen_mu_below_half() {
        let plan = DimensionPlan::new(2, 16, q("3"), q("1")).unwrap();
        let c = &plan.checks[1];
        assert!(c.holds && c.exact);
        let sixteen_mu = 16.0 * plan.mu.mu_f64;
        assert!((c.ln_value - (2.0 * sixteen_mu).ln()).abs() < 1e-12);
        assert!((sixteen_mu - 0.25029).abs() < 1e-4);
    }

    /// Float scan oracle: `mu = (M-3)^p2 M^(-beta p3)` for `n = 2`.
    fn scan_oracle(alpha: f64, beta: f64) -> Option<u32> {
        (8..=64u32).find(|&m| {
            let mf = m as f64;
            let p2 = ((mf - 2.0).powi(2) - (mf - 4.0).powi(2)) / (mf * mf);
            let p3 = (mf - 4.0).powi(2) / (mf * mf);
            let mu = (mf - 3.0).powf(p2) * mf.powf(-beta * p3);
            mu < 1.0 && mf.powf(2.0 - alpha) * mu.powf(alpha) < 2f64.powf(-alpha)
        })
    }

    #[test]
    fn choose_parameters_agrees_with_scan() {
        for (alpha, beta) in [("1", 2.0), ("1.1", 1.0), ("1.9", 1.0), ("0.5", 4.0)] {
            let a = q(alpha);
            let choice = choose_parameters(2, &a, &SearchOptions::default()).unwrap();
            let expected = scan_oracle(a.to_f64().value(), beta);
            assert_eq!(
                choice.beta.as_deref(),
                Some(beta.to_string().as_str()),
                "alpha = {alpha}"
            );
            assert_eq!(
                choice.plan.as_ref().map(|p| p.arity),
                expected,
                "alpha = {alpha}"
            );
            if let Some(p) = &choice.plan {
                assert!(p.feasible && p.checks.iter().all(|c| c.holds));
            }
        }
    }

    #[test]
    fn alpha_one_picks_beta_two() {
        let choice = choose_parameters(2, &q("1"), &SearchOptions::default()).unwrap();
        assert_eq!(choice.beta.as_deref(), Some("2"));
        assert_eq!(choice.plan.unwrap().arity, 24);
        let ladder = SearchOptions {
            beta_ladder: vec!["3".into()],
            ..Default::default()
        };
        let choice = choose_parameters(2, &q("1"), &ladder).unwrap();
        let m = choice.plan.unwrap().arity;
        assert_eq!(Some(m), scan_oracle(1.0, 3.0));
        assert_eq!(m, 14);
        assert!(DimensionPlan::new(2, 16, q("3"), q("1")).unwrap().feasible);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        assert!(choose_parameters(2, &q("2"), &SearchOptions::default()).is_err());
        assert!(DimensionPlan::new(2, 16, q("3"), q("0")).is_err());
        let none = SearchOptions {
            beta_ladder: vec!["1".into()],
            ..Default::default()
        };
        assert_eq!(
            choose_parameters(2, &q("0.9"), &none).unwrap().status,
            "no_beta_in_ladder"
        );
    }

    #[test]
    fn infeasible_plan_names_the_failed_inequality() {
        let plan = DimensionPlan::new(2, 8, q("1"), q("1.9")).unwrap();
        assert!(!plan.feasible);
        let err = content_table(&plan, &ContentOptions::default(), 1)
            .unwrap_err()
            .to_string();
        assert!(err.contains("fails"), "{err}");
    }

    #[test]
    fn content_table_is_geometric_in_rho_star() {
        let plan = DimensionPlan::new(2, 16, q("3"), q("1.1")).unwrap();
        let opts = ContentOptions {
            m_max: 4,
            samples: 4000,
            ..Default::default()
        };
        let t = content_table(&plan, &opts, 1).unwrap();
        let rho: f64 = RHO_ALPHA_11[..20].parse().unwrap();
        for w in t.rows.windows(2) {
            let ratio = w[1].analytic_bound / w[0].analytic_bound;
            assert!((ratio / rho - 1.0).abs() < 1e-10, "{ratio}");
        }
        assert!(t.decreasing && t.km_found && t.empirical_within_bound && t.pass);
        let first = &t.rows[0].selection;
        assert!(first.ci_low >= 0.5);
        assert!(t.rows.windows(2).all(|w| w[1].k_m >= w[0].k_m));
        assert!(t.rows.iter().all(|r| r.k_m >= r.m as u64));
        assert_eq!(t.csv().lines().count(), 5);
    }
}
