use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use qsmetric_core::heatmap::heatmap;
use qsmetric_core::rng::RNG_ALGORITHM;
use qsmetric_core::stochastic::{geometric_mean, lipschitz_check, simulate_lln, walk_analysis};
use qsmetric_core::verify::{
    bounds_report, choose_parameters, constants, content_table, qs_scatter, BoundsReport,
    DimensionPlan,
};
use qsmetric_core::{Attenuation, Error, Params};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Verify,
    Qs,
    Dimension,
    Walk,
    Heatmap,
    All,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Qs => "qs",
            Experiment::Dimension => "dimension",
            Experiment::Walk => "walk",
            Experiment::Heatmap => "heatmap",
            Experiment::All => "all",
        }
    }

    fn parts(self) -> Vec<Experiment> {
        match self {
            Experiment::All => vec![
                Experiment::Verify,
                Experiment::Qs,
                Experiment::Dimension,
                Experiment::Walk,
                Experiment::Heatmap,
            ],
            e => vec![e],
        }
    }
}

/// Why a run stopped before producing a report.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Result of one experiment: its report section, pass flag and output files.
struct Section {
    value: Value,
    pass: bool,
    files: Vec<(String, String)>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Resource exhaustion marks a check failed and inconclusive; anything else
/// is a configuration problem.
fn resource<T>(r: qsmetric_core::Result<T>) -> Result<Result<T, String>, Failure> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::Resource { .. }) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn bounds_csv(reports: &[BoundsReport]) -> String {
    let mut out = String::from("check,N,worst_margin,violations,inconclusive,pass\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:e},{},{},{}\n",
            r.check, r.n, r.worst_margin, r.violations, r.inconclusive, r.pass
        ));
    }
    out
}

fn verify(params: &Params, cfg: &RunConfig) -> Result<Section, Failure> {
    let mut checks = BTreeMap::new();
    let mut reports = Vec::new();
    let mut pass = true;
    for &check in &cfg.verify.checks {
        let name = serde_json::to_value(check).expect("check name");
        let name = name.as_str().expect("string").to_string();
        let outcome = match check.bounds_mode() {
            Some(mode) => resource(bounds_report(
                params,
                mode,
                cfg.verify.options(mode),
                cfg.seed,
            ))?,
            None => resource(lipschitz_check(params, &cfg.verify.lipschitz, cfg.seed))?,
        };
        match outcome {
            Ok(r) => {
                pass &= r.pass;
                checks.insert(name, to_value(&r));
                reports.push(r);
            }
            Err(msg) => {
                pass = false;
                checks.insert(
                    name,
                    json!({ "error": msg, "inconclusive": true, "pass": false }),
                );
            }
        }
    }
    let value = json!({ "constants": constants(params).summary(), "checks": checks, "pass": pass });
    Ok(Section {
        value,
        pass,
        files: vec![("bounds.csv".into(), bounds_csv(&reports))],
    })
}

fn qs(params: &Params, cfg: &RunConfig) -> Result<Section, Failure> {
    match resource(qs_scatter(params, &cfg.qs, cfg.seed))? {
        Ok(r) => Ok(Section {
            value: to_value(&r),
            pass: r.pass,
            files: vec![("qs_scatter.csv".into(), r.csv())],
        }),
        Err(msg) => Ok(Section {
            value: json!({ "error": msg, "pass": false }),
            pass: false,
            files: Vec::new(),
        }),
    }
}

fn dimension(params: &Params, cfg: &RunConfig) -> Result<Section, Failure> {
    let d = &cfg.dimension;
    let alpha = d.alpha()?;
    let mut mu =
        vec![json!({ "params": params.summary(), "mu": geometric_mean(params).summary() })];
    for extra in &d.mu_for {
        let p = extra.build()?;
        mu.push(json!({ "params": p.summary(), "mu": geometric_mean(&p).summary() }));
    }
    let choice = choose_parameters(params.dim(), &alpha, &d.search)?;
    let beta = match d.beta() {
        Some(b) => Some(b?),
        None => match params.attenuation() {
            Attenuation::PowerOfArity(beta) => Some(beta.clone()),
            Attenuation::Value(_) => None,
        },
    };
    let plan = match beta {
        Some(beta) => Some(DimensionPlan::new(
            params.dim(),
            d.arity.unwrap_or(params.arity()),
            beta,
            alpha,
        )?),
        None => choice.plan.clone(),
    };
    let mut files = Vec::new();
    let (table, pass) = match &plan {
        Some(plan) if plan.feasible => {
            let t = content_table(plan, &d.content, cfg.seed)?;
            files.push(("content_table.csv".into(), t.csv()));
            let pass = t.pass;
            (to_value(&t), pass)
        }
        _ => (Value::Null, false),
    };
    let value = json!({ "geometric_mean": mu, "choice": choice, "plan": plan, "content_table": table, "pass": pass });
    Ok(Section { value, pass, files })
}

fn walk(params: &Params, cfg: &RunConfig) -> Result<Section, Failure> {
    let w = &cfg.walk;
    let walk = walk_analysis(params, w.n, w.horizon, cfg.seed)?;
    let lln = simulate_lln(params, w.lln_n, w.lln_k, cfg.seed)?;
    let pass = walk.pass.unwrap_or(true) && lln.pass;
    let mut csv = String::from("batch,sum_log,count\n");
    for b in &lln.batches {
        csv.push_str(&format!("{},{:e},{}\n", b.batch, b.sum_log, b.count));
    }
    let value = json!({ "walk": walk, "lln": lln, "pass": pass });
    Ok(Section {
        value,
        pass,
        files: vec![("lln_batches.csv".into(), csv)],
    })
}

fn heatmap_section(params: &Params, cfg: &RunConfig) -> Result<Section, Failure> {
    match resource(heatmap(params, &cfg.heatmap))? {
        Ok(h) => {
            let file = format!("heatmap_k{}.svg", h.level);
            let value = json!({ "file": file, "heatmap": h, "pass": true });
            Ok(Section {
                value,
                pass: true,
                files: vec![(file, h.svg)],
            })
        }
        Err(msg) => Ok(Section {
            value: json!({ "error": msg, "pass": false }),
            pass: false,
            files: Vec::new(),
        }),
    }
}

/// Runs the experiment, writes every output under `out` and returns the
/// overall pass flag.
pub fn run(experiment: Experiment, mut cfg: RunConfig, out: &Path) -> Result<bool, Failure> {
    let started = Instant::now();
    let params = cfg.params.build()?;
    cfg.verify.resolve(params.capped());
    let mut results = BTreeMap::new();
    let mut timing = BTreeMap::new();
    let mut files = Vec::new();
    let mut pass = true;
    for part in experiment.parts() {
        let t = Instant::now();
        let section = match part {
            Experiment::Verify => verify(&params, &cfg)?,
            Experiment::Qs => qs(&params, &cfg)?,
            Experiment::Dimension => dimension(&params, &cfg)?,
            Experiment::Walk => walk(&params, &cfg)?,
            Experiment::Heatmap => heatmap_section(&params, &cfg)?,
            Experiment::All => unreachable!("expanded above"),
        };
        timing.insert(part.name(), t.elapsed().as_secs_f64());
        pass &= section.pass;
        results.insert(part.name(), section.value);
        files.extend(section.files);
    }
    let report = json!({
        "tool": "qsmetric",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "params": params.summary(),
        "config": cfg,
        "results": results,
        "pass": pass,
        "timing": { "seconds": timing, "total_seconds": started.elapsed().as_secs_f64() },
    });
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    for (name, body) in &files {
        fs::write(out.join(name), body).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(out.join("report.json"), text).map_err(io)?;
    Ok(pass)
}
