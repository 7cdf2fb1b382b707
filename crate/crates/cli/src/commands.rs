use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use swlb_core::bootstrap::{percentile_interval, run_bootstrap, summarize, BootstrapConfig, FailureTally};
use swlb_core::estimators::{fit_pmle, fit_unweighted, wald_interval, IntervalMethod, PmleFit};
use swlb_core::resample::moment_diagnostics;
use swlb_core::sim::{run_monte_carlo, Method};
use swlb_core::{
    load_csv, scale_weights, ColumnSchema, Error, GaussianMeanModel, LikelihoodModel, ProbitRegressionModel,
    ResampleScheme, Result,
};

use crate::{scenario, CheckWeightsArgs, FitArgs, ModelArg, SimulateArgs};

#[derive(Serialize)]
struct ParameterReport {
    name: String,
    estimate: f64,
    std_error: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct PmleReport {
    estimate: Vec<f64>,
    std_error: Vec<f64>,
}

#[derive(Serialize)]
struct Diagnostics {
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<ResampleScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_requested: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_effective: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failures: Option<FailureTally>,
}

#[derive(Serialize)]
struct FitReport {
    model: &'static str,
    method: Method,
    n: usize,
    level: f64,
    interval_method: IntervalMethod,
    parameters: Vec<ParameterReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pmle: Option<PmleReport>,
    diagnostics: Diagnostics,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn pmle_report(fit: &PmleFit) -> PmleReport {
    PmleReport {
        estimate: fit.theta_hat.clone(),
        std_error: fit.standard_errors(),
    }
}

pub fn fit(args: FitArgs) -> Result<()> {
    let started = Instant::now();
    let method = Method::from(args.method);
    if method.scheme().is_some() && args.b < 2 {
        return Err(Error::InvalidConfig(format!(
            "--b must be at least 2 for {method}, got {}",
            args.b
        )));
    }
    let mut schema = ColumnSchema::new(&args.weight_col).covariates(args.covariates.iter().cloned());
    if let Some(r) = &args.response_col {
        schema = schema.response(r);
    }
    let data = load_csv(&args.input, &schema)?;
    let probit = ProbitRegressionModel::new(!args.no_intercept);
    let model: &dyn LikelihoodModel = match args.model {
        ModelArg::GaussianMean => &GaussianMeanModel,
        ModelArg::Probit => &probit,
    };
    model.validate(&data)?;
    let scaled = data.scaled_weights();
    let names = model.param_names(&data);
    let pmle = if args.with_pmle || method == Method::Pmle {
        Some(fit_pmle(model, &data, &scaled)?)
    } else {
        None
    };

    let mut diagnostics = Diagnostics {
        seed: args.seed,
        scheme: None,
        b_requested: None,
        b_effective: None,
        failures: None,
    };
    let (parameters, interval_method) = match method.scheme() {
        None => {
            let fit = match (method, &pmle) {
                (Method::Pmle, Some(f)) => f.clone(),
                _ => fit_unweighted(model, &data)?,
            };
            let ci = wald_interval(&fit, args.level)?;
            let se = fit.standard_errors();
            let params = (0..names.len())
                .map(|k| ParameterReport {
                    name: names[k].clone(),
                    estimate: fit.theta_hat[k],
                    std_error: se[k],
                    lower: ci.lower[k],
                    upper: ci.upper[k],
                })
                .collect();
            (params, ci.method)
        }
        Some(scheme) => {
            let mut cfg = BootstrapConfig::new(args.b, args.seed, scheme);
            cfg.max_failures_fraction = args.max_failures;
            let result = run_bootstrap(model, &data, &scaled, &cfg)?;
            let ci = percentile_interval(&result, args.level)?;
            let (mean, sd) = summarize(&result)?;
            diagnostics.scheme = Some(scheme);
            diagnostics.b_requested = Some(args.b);
            diagnostics.b_effective = Some(result.draws.len());
            diagnostics.failures = Some(result.failures.clone());
            let params = (0..names.len())
                .map(|k| ParameterReport {
                    name: names[k].clone(),
                    estimate: mean[k],
                    std_error: sd[k],
                    lower: ci.lower[k],
                    upper: ci.upper[k],
                })
                .collect();
            (params, ci.method)
        }
    };
    let report = FitReport {
        model: model.name(),
        method,
        n: data.n(),
        level: args.level,
        interval_method,
        parameters,
        pmle: if args.with_pmle {
            pmle.as_ref().map(pmle_report)
        } else {
            None
        },
        diagnostics,
    };
    emit(&to_json(&report)?, args.output.as_deref())?;
    eprintln!(
        "fit: {} observations in {:.3}s",
        data.n(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let mut s = scenario::load(&args.scenario)?;
    if let Some(r) = args.replications_override {
        s.design.set_replications(r);
    }
    if let Some(n) = args.population_override {
        s.design.set_population_size(n);
    }
    if let Some(n) = args.sample_size_override {
        s.design.set_sample_size(n);
    }
    if let Some(b) = args.bootstrap_override {
        s.bootstrap_replicates = b;
    }
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let report = run_monte_carlo(&s, &methods, args.level, args.seed)?;
    let json = to_json(&report)?;
    emit(&json, args.output.as_deref())?;
    if let Some(path) = &args.output {
        let file = std::fs::File::create(path.with_extension("csv"))?;
        report.write_csv(std::io::BufWriter::new(file))?;
    }
    eprintln!(
        "simulate: {} replications of {} in {:.1}s",
        s.design.replications(),
        s.name,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn check_weights(args: CheckWeightsArgs) -> Result<()> {
    let n = args.n.unwrap_or(args.weights.len());
    if n < args.weights.len() {
        return Err(Error::InvalidConfig(format!(
            "--n {n} is shorter than the {} weights given",
            args.weights.len()
        )));
    }
    let raw: Vec<f64> = args.weights.iter().copied().cycle().take(n).collect();
    let scaled = scale_weights(&raw)?;
    if !(args.z_threshold.is_finite() && args.z_threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "--z-threshold must be positive, got {}",
            args.z_threshold
        )));
    }
    let diag = moment_diagnostics(args.scheme.into(), &scaled, args.draws, args.seed, args.z_threshold)?;
    emit(&to_json(&diag)?, args.output.as_deref())
}
