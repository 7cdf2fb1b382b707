use std::collections::BTreeMap;
use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Design, Scenario};
use super::population::{draw_informative_sample, generate_population_sim1, generate_population_sim2};
use crate::bootstrap::{percentile_interval, run_bootstrap, BootstrapConfig};
use crate::error::{Error, Result};
use crate::estimators::{check_level, fit_pmle, fit_unweighted, wald_interval};
use crate::models::{GaussianMeanModel, LikelihoodModel, ProbitRegressionModel};
use crate::resample::ResampleScheme;
use crate::rng::substream;
use crate::survey_data::SurveyDataset;

/// Share of replications a method may fail before the run is aborted.
pub const FAILURE_CEILING: f64 = 0.05;

const STAGE_POPULATION: u64 = 0;
const STAGE_SAMPLE: u64 = 1;
const STAGE_METHOD: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pmle,
    Swlb,
    WlbNaive,
    Unweighted,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pmle, Method::Swlb, Method::WlbNaive, Method::Unweighted];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pmle => "pmle",
            Method::Swlb => "swlb",
            Method::WlbNaive => "wlb-naive",
            Method::Unweighted => "unweighted",
        }
    }

    /// Resampling scheme for the bootstrap methods.
    pub fn scheme(self) -> Option<ResampleScheme> {
        match self {
            Method::Swlb => Some(ResampleScheme::SurveyAdjusted),
            Method::WlbNaive => Some(ResampleScheme::DirichletCentered),
            Method::Pmle | Method::Unweighted => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One method's result on one replication.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Estimate { estimate: f64, lower: f64, upper: f64 },
    Failed(&'static str),
}

pub fn failure_reason(err: &Error) -> &'static str {
    match err {
        Error::Separation => "separation",
        Error::NonConvergence { .. } => "non-convergence",
        Error::DegenerateVariance => "degenerate-variance",
        Error::DegenerateDraw => "degenerate-draw",
        Error::SingularInformation { .. } => "singular-information",
        Error::TooManyFailures { .. } => "too-many-bootstrap-failures",
        Error::TooFewDraws { .. } => "too-few-draws",
        Error::InvalidResponse(_) => "invalid-response",
        _ => "other",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub successful: usize,
    pub failed: usize,
    pub failures: BTreeMap<String, usize>,
    pub bias: f64,
    pub mse: f64,
    pub coverage: f64,
    pub mean_interval_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub scenario: Scenario,
    pub truth: f64,
    pub level: f64,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
}

/// Aggregates over the successful replications. Errors when more than
/// `ceiling` of them failed.
pub fn summarize_method(method: Method, outcomes: &[Outcome], truth: f64, ceiling: f64) -> Result<MethodSummary> {
    let mut failures = BTreeMap::new();
    let (mut err_sum, mut sq_sum, mut width_sum, mut covered, mut ok) = (0.0, 0.0, 0.0, 0usize, 0usize);
    for o in outcomes {
        match *o {
            Outcome::Estimate { estimate, lower, upper } => {
                let e = estimate - truth;
                err_sum += e;
                sq_sum += e * e;
                width_sum += upper - lower;
                covered += usize::from(lower <= truth && truth <= upper);
                ok += 1;
            }
            Outcome::Failed(reason) => *failures.entry(reason.to_string()).or_insert(0) += 1,
        }
    }
    let failed = outcomes.len() - ok;
    if ok == 0 || failed as f64 > ceiling * outcomes.len() as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: outcomes.len(),
            ceiling,
        });
    }
    let k = ok as f64;
    Ok(MethodSummary {
        method,
        successful: ok,
        failed,
        failures,
        bias: err_sum / k,
        mse: sq_sum / k,
        coverage: covered as f64 / k,
        mean_interval_width: width_sum / k,
    })
}

fn estimate<M: LikelihoodModel>(
    model: &M,
    data: &SurveyDataset,
    method: Method,
    level: f64,
    bootstrap_replicates: usize,
    bootstrap_seed: u64,
) -> Result<(f64, f64, f64)> {
    match method.scheme() {
        None => {
            let fit = match method {
                Method::Unweighted => fit_unweighted(model, data)?,
                _ => fit_pmle(model, data, &data.scaled_weights())?,
            };
            let ci = wald_interval(&fit, level)?;
            Ok((fit.theta_hat[0], ci.lower[0], ci.upper[0]))
        }
        Some(scheme) => {
            let cfg = BootstrapConfig::new(bootstrap_replicates, bootstrap_seed, scheme);
            let result = run_bootstrap(model, data, &data.scaled_weights(), &cfg)?;
            let ci = percentile_interval(&result, level)?;
            Ok((result.point_estimate[0], ci.lower[0], ci.upper[0]))
        }
    }
}

/// The sample a replication works on. Exposed so callers can inspect or
/// export exactly what the harness fits.
pub fn replication_sample(scenario: &Scenario, seed: u64, replication: usize) -> Result<SurveyDataset> {
    let r = replication as u64;
    let mut pop_rng = substream(seed, &[r, STAGE_POPULATION]);
    let pop = match &scenario.design {
        Design::Sim1(c) => generate_population_sim1(c, &mut pop_rng),
        Design::Sim2(c) => generate_population_sim2(c, &mut pop_rng),
    };
    draw_informative_sample(
        &pop,
        scenario.design.sample_size(),
        &mut substream(seed, &[r, STAGE_SAMPLE]),
    )
}

fn run_replication(scenario: &Scenario, methods: &[Method], level: f64, seed: u64, r: usize) -> Result<Vec<Outcome>> {
    let data = replication_sample(scenario, seed, r)?;
    let outcomes = methods
        .iter()
        .map(|&m| {
            let bootstrap_seed = substream(seed, &[r as u64, STAGE_METHOD, m as u64]).next_u64();
            let fitted = match &scenario.design {
                Design::Sim1(_) => estimate(
                    &GaussianMeanModel,
                    &data,
                    m,
                    level,
                    scenario.bootstrap_replicates,
                    bootstrap_seed,
                ),
                Design::Sim2(_) => estimate(
                    &ProbitRegressionModel::new(false),
                    &data,
                    m,
                    level,
                    scenario.bootstrap_replicates,
                    bootstrap_seed,
                ),
            };
            match fitted {
                Ok((estimate, lower, upper)) => Outcome::Estimate { estimate, lower, upper },
                Err(e) => Outcome::Failed(failure_reason(&e)),
            }
        })
        .collect();
    Ok(outcomes)
}

/// Runs every replication of `scenario` and scores each method against the
/// superpopulation truth.
///
/// Replication `r` draws its population, sample and per-method bootstrap
/// seeds from substreams of `(seed, r)`, so the report is identical for any
/// pool width.
pub fn run_monte_carlo(scenario: &Scenario, methods: &[Method], level: f64, seed: u64) -> Result<ReplicationReport> {
    scenario.validate()?;
    check_level(level)?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let mut seen = methods.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != methods.len() {
        return Err(Error::InvalidConfig("duplicate method".into()));
    }
    let per_rep: Vec<Vec<Outcome>> = (0..scenario.design.replications())
        .into_par_iter()
        .map(|r| run_replication(scenario, methods, level, seed, r))
        .collect::<Result<_>>()?;
    let truth = scenario.design.truth();
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let column: Vec<Outcome> = per_rep.iter().map(|row| row[i].clone()).collect();
            summarize_method(m, &column, truth, FAILURE_CEILING)
        })
        .collect::<Result<_>>()?;
    Ok(ReplicationReport {
        scenario: scenario.clone(),
        truth,
        level,
        seed,
        methods: summaries,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    simulation: &'static str,
    population_size: usize,
    sample_size: usize,
    b1: f64,
    rho: f64,
    replications: usize,
    bootstrap_replicates: usize,
    level: f64,
    seed: u64,
    method: &'static str,
    successful: usize,
    failed: usize,
    bias: f64,
    mse: f64,
    coverage: f64,
    mean_interval_width: f64,
}

impl ReplicationReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// One row per method, fixed column order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = &self.scenario.design;
        let simulation = match d {
            Design::Sim1(_) => "sim1",
            Design::Sim2(_) => "sim2",
        };
        for s in &self.methods {
            w.serialize(CsvRow {
                scenario: &self.scenario.name,
                simulation,
                population_size: d.population_size(),
                sample_size: d.sample_size(),
                b1: d.b1(),
                rho: d.rho(),
                replications: d.replications(),
                bootstrap_replicates: self.scenario.bootstrap_replicates,
                level: self.level,
                seed: self.seed,
                method: s.method.name(),
                successful: s.successful,
                failed: s.failed,
                bias: s.bias,
                mse: s.mse,
                coverage: s.coverage,
                mean_interval_width: s.mean_interval_width,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
