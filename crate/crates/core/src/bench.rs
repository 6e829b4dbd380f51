//! Paired runs of the direct solve and the two sequential loops.

use crate::error::{Error, Result};
use crate::io::{csv_error, finish_csv, to_canonical_json};
use crate::learn::{solve_sequential_learned, MlpClassifier, StrategyDictionary};
use crate::problems::FamilySpec;
use crate::scenario::build_sampled_problem;
use crate::sequential::{solve_direct, solve_sequential, SeqOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Seq,
    Learned,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Seq => "seq",
            Method::Learned => "learned",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    /// Wall time of the solve call alone.
    pub wall_ms: f64,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub max_constraints_per_solve: usize,
    pub fallback_count: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub family: String,
    pub spec_hash: String,
    pub seed: u64,
    pub n: usize,
    pub rows: Vec<MethodRow>,
}

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Every method succeeded and all objectives agree within `1e-7`
    /// relative.
    pub fn objectives_agree(&self) -> bool {
        let objs: Option<Vec<f64>> = self.rows.iter().map(|r| r.objective).collect();
        let Some(objs) = objs else {
            return false;
        };
        objs.windows(2)
            .all(|w| (w[0] - w[1]).abs() <= 1e-7 * w[0].abs().max(w[1].abs()).max(1.0))
    }
}

/// SHA-256 of the canonical JSON of `spec`, in hex.
pub fn spec_hash(spec: &FamilySpec) -> Result<String> {
    let digest = Sha256::digest(to_canonical_json(spec)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub struct BenchConfig<'a> {
    pub family: &'a FamilySpec,
    pub ns: &'a [usize],
    pub methods: &'a [Method],
    pub seed: u64,
    pub seq: SeqOptions<f64>,
    pub learned: Option<(&'a MlpClassifier<f64>, &'a StrategyDictionary)>,
}

/// One report per `N`. A failing method yields a row carrying its error.
pub fn run_benchmark(cfg: &BenchConfig<'_>) -> Result<Vec<BenchReport>> {
    if cfg.methods.contains(&Method::Learned) && cfg.learned.is_none() {
        return Err(Error::InvalidModel("the learned method needs a trained model".into()));
    }
    let hash = spec_hash(cfg.family)?;
    let model = if cfg.methods.is_empty() {
        None
    } else {
        Some(cfg.family.build::<f64>()?)
    };
    let mut reports = Vec::with_capacity(cfg.ns.len());
    for &n in cfg.ns {
        let mut rows = Vec::new();
        if let Some(model) = &model {
            let problem = build_sampled_problem(model.as_ref(), n, cfg.seed)?;
            for &method in cfg.methods {
                rows.push(run_method(method, &problem, cfg));
            }
        }
        reports.push(BenchReport {
            family: cfg.family.name().to_string(),
            spec_hash: hash.clone(),
            seed: cfg.seed,
            n,
            rows,
        });
    }
    Ok(reports)
}

fn run_method(method: Method, problem: &crate::model::SampledProblem<f64>, cfg: &BenchConfig<'_>) -> MethodRow {
    let started = Instant::now();
    let outcome = match method {
        Method::Direct => solve_direct(problem, &cfg.seq.mip).and_then(|out| {
            out.objective()
                .map(|j| (j, 0, problem.n_samples(), None))
                .ok_or(Error::Subproblem("infeasible"))
        }),
        Method::Seq => solve_sequential(problem, &cfg.seq)
            .map(|(sol, _, t)| (sol.objective, t.iterations, t.max_constraints_per_solve(), None)),
        Method::Learned => {
            let (net, dict) = cfg.learned.expect("checked by run_benchmark");
            solve_sequential_learned(problem, net, dict, &cfg.seq).map(|(sol, _, t)| {
                (sol.objective, t.iterations, t.max_constraints_per_solve(), Some(t.fallback_count))
            })
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((objective, iterations, max_constraints_per_solve, fallback_count)) => MethodRow {
            method,
            wall_ms,
            objective: Some(objective),
            iterations,
            max_constraints_per_solve,
            fallback_count,
            error: None,
        },
        Err(e) => MethodRow {
            method,
            wall_ms,
            objective: None,
            iterations: 0,
            max_constraints_per_solve: 0,
            fallback_count: None,
            error: Some(e.to_string()),
        },
    }
}

/// Fails on the first report whose methods disagree or errored.
pub fn check_reports(reports: &[BenchReport]) -> Result<()> {
    for r in reports {
        if !r.objectives_agree() {
            return Err(Error::Invariant(format!(
                "objectives differ across methods at N = {}: {:?}",
                r.n,
                r.rows.iter().map(|m| (m.method, m.objective)).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

pub fn report_csv(reports: &[BenchReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "family",
        "spec_hash",
        "seed",
        "n",
        "method",
        "wall_ms",
        "objective",
        "iterations",
        "max_constraints_per_solve",
        "fallback_count",
        "error",
    ])
    .map_err(csv_error)?;
    for r in reports {
        for m in &r.rows {
            w.write_record([
                r.family.clone(),
                r.spec_hash.clone(),
                r.seed.to_string(),
                r.n.to_string(),
                m.method.to_string(),
                format!("{:.3}", m.wall_ms),
                m.objective.map(|j| format!("{j:.16e}")).unwrap_or_default(),
                m.iterations.to_string(),
                m.max_constraints_per_solve.to_string(),
                m.fallback_count.map(|f| f.to_string()).unwrap_or_default(),
                m.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
    }
    finish_csv(w)
}
