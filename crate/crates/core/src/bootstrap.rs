//! Weighted likelihood bootstraps: draw random weights, maximize the
//! weighted likelihood, repeat.
//!
//! Replicate `j` reads its weights from the substream `(seed, j)`, so the
//! draws do not depend on how the rayon pool schedules the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_level, IntervalEstimate, IntervalMethod};
use crate::models::LikelihoodModel;
use crate::resample::{draw_weights, ResampleScheme};
use crate::rng::substream;
use crate::survey_data::{ScaledWeights, SurveyDataset};

/// Fewest successful draws a percentile interval is computed from.
pub const MIN_PERCENTILE_DRAWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub scheme: ResampleScheme,
    pub max_failures_fraction: f64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64, scheme: ResampleScheme) -> Self {
        Self {
            replicates,
            seed,
            scheme,
            max_failures_fraction: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 bootstrap replicates are required, got {}",
                self.replicates
            )));
        }
        if !(0.0..1.0).contains(&self.max_failures_fraction) {
            return Err(Error::InvalidConfig(format!(
                "max_failures_fraction must lie in [0, 1), got {}",
                self.max_failures_fraction
            )));
        }
        Ok(())
    }
}

/// Excluded replicates by cause.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureTally {
    pub separation: usize,
    pub non_convergence: usize,
    pub degenerate_variance: usize,
    pub degenerate_draw: usize,
    pub other: usize,
    /// Indices of the failed replicates, ascending.
    pub replicates: Vec<usize>,
}

impl FailureTally {
    pub fn total(&self) -> usize {
        self.replicates.len()
    }

    fn record(&mut self, replicate: usize, err: &Error) {
        match err {
            Error::Separation => self.separation += 1,
            Error::NonConvergence { .. } => self.non_convergence += 1,
            Error::DegenerateVariance => self.degenerate_variance += 1,
            Error::DegenerateDraw => self.degenerate_draw += 1,
            _ => self.other += 1,
        }
        self.replicates.push(replicate);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub param_names: Vec<String>,
    /// One parameter vector per successful replicate, in replicate order.
    pub draws: Vec<Vec<f64>>,
    pub failures: FailureTally,
    /// Coordinatewise mean of the draws.
    pub point_estimate: Vec<f64>,
    pub config: BootstrapConfig,
}

impl BootstrapResult {
    pub fn param_dim(&self) -> usize {
        self.param_names.len()
    }

    /// The draws of coordinate `k`.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }
}

pub fn run_bootstrap<M: LikelihoodModel + ?Sized>(
    model: &M,
    data: &SurveyDataset,
    scaled: &ScaledWeights,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    model.validate(data)?;
    if scaled.len() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "scaled weights",
            expected: data.n(),
            found: scaled.len(),
        });
    }
    let outcomes: Vec<Result<Vec<f64>>> = (0..config.replicates)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(config.seed, &[j as u64]);
            let g = draw_weights(config.scheme, scaled, &mut rng)?;
            model.fit_weighted(data, g.as_slice())
        })
        .collect();

    let mut failures = FailureTally::default();
    let mut draws = Vec::with_capacity(outcomes.len());
    for (j, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(theta) => draws.push(theta),
            Err(e) => failures.record(j, &e),
        }
    }
    let failed = failures.total();
    if failed as f64 > config.max_failures_fraction * config.replicates as f64 || draws.is_empty() {
        return Err(Error::TooManyFailures {
            failed,
            total: config.replicates,
            ceiling: config.max_failures_fraction,
        });
    }
    let k = model.param_dim(data);
    let point_estimate = (0..k)
        .map(|c| draws.iter().map(|d| d[c]).sum::<f64>() / draws.len() as f64)
        .collect();
    Ok(BootstrapResult {
        param_names: model.param_names(data),
        draws,
        failures,
        point_estimate,
        config: *config,
    })
}

/// Linearly interpolated quantile of sorted data, `h = (len - 1) p`
/// (R's type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Equal-tailed percentile interval of the draws, coordinatewise.
pub fn percentile_interval(result: &BootstrapResult, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if result.draws.len() < MIN_PERCENTILE_DRAWS {
        return Err(Error::TooFewDraws {
            draws: result.draws.len(),
            required: MIN_PERCENTILE_DRAWS,
        });
    }
    let (lo_p, hi_p) = (0.5 * (1.0 - level), 0.5 * (1.0 + level));
    let mut lower = Vec::with_capacity(result.param_dim());
    let mut upper = Vec::with_capacity(result.param_dim());
    for k in 0..result.param_dim() {
        let mut xs = result.coordinate(k);
        xs.sort_by(f64::total_cmp);
        lower.push(quantile_type7(&xs, lo_p));
        upper.push(quantile_type7(&xs, hi_p));
    }
    Ok(IntervalEstimate {
        lower,
        upper,
        level,
        method: IntervalMethod::Percentile,
    })
}

/// Coordinatewise mean and standard deviation (denominator `B' - 1`).
pub fn summarize(result: &BootstrapResult) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = result.draws.len();
    if b < 2 {
        return Err(Error::TooFewDraws { draws: b, required: 2 });
    }
    let mut means = Vec::with_capacity(result.param_dim());
    let mut sds = Vec::with_capacity(result.param_dim());
    for k in 0..result.param_dim() {
        let xs = result.coordinate(k);
        let mean = xs.iter().sum::<f64>() / b as f64;
        let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        means.push(mean);
        sds.push((ss / (b - 1) as f64).sqrt());
    }
    Ok((means, sds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_pmle;
    use crate::models::{GaussianMeanModel, ProbitRegressionModel};
    use crate::normal;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn result_from(draws: Vec<Vec<f64>>) -> BootstrapResult {
        let k = draws[0].len();
        BootstrapResult {
            param_names: (0..k).map(|i| format!("t{i}")).collect(),
            point_estimate: vec![0.0; k],
            draws,
            failures: FailureTally::default(),
            config: BootstrapConfig::new(2, 0, ResampleScheme::SurveyAdjusted),
        }
    }

    fn gaussian_sample(seed: u64, n: usize) -> SurveyDataset {
        let mut rng = substream(seed, &[]);
        let x: Vec<f64> = (0..n)
            .map(|_| 5.0 + 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
        SurveyDataset::univariate(x, w).unwrap()
    }

    #[test]
    fn percentile_of_one_to_hundred() {
        let r = result_from((1..=100).map(|v| vec![v as f64]).collect());
        let ci = percentile_interval(&r, 0.90).unwrap();
        assert!((ci.lower[0] - 5.95).abs() < 1e-12);
        assert!((ci.upper[0] - 95.05).abs() < 1e-12);
        assert_eq!(ci.method, IntervalMethod::Percentile);
    }

    #[test]
    fn percentile_of_constant_draws() {
        let r = result_from(vec![vec![2.5]; 30]);
        let ci = percentile_interval(&r, 0.95).unwrap();
        assert_eq!((ci.lower[0], ci.upper[0]), (2.5, 2.5));
    }

    #[test]
    fn percentile_needs_twenty_draws() {
        let r = result_from(vec![vec![1.0]; 19]);
        assert!(matches!(
            percentile_interval(&r, 0.95),
            Err(Error::TooFewDraws {
                draws: 19,
                required: 20
            })
        ));
    }

    #[test]
    fn percentile_of_normal_draws() {
        let mut rng = substream(21, &[]);
        let r = result_from((0..100_000).map(|_| vec![rng.sample(StandardNormal)]).collect());
        let ci = percentile_interval(&r, 0.95).unwrap();
        let z = normal::quantile(0.975);
        assert!((ci.lower[0] + z).abs() < 0.02 && (ci.upper[0] - z).abs() < 0.02);
    }

    #[test]
    fn summarize_examples() {
        let (m, s) = summarize(&result_from(vec![vec![0.0], vec![2.0]])).unwrap();
        assert_eq!(m, vec![1.0]);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        let (_, s) = summarize(&result_from(vec![vec![4.0]; 5])).unwrap();
        assert_eq!(s, vec![0.0]);
        let (m, _) = summarize(&result_from(vec![vec![-3.0], vec![3.0], vec![-1.0], vec![1.0]])).unwrap();
        assert_eq!(m, vec![0.0]);
        assert!(summarize(&result_from(vec![vec![1.0]])).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let d = gaussian_sample(1, 10);
        let cfg = BootstrapConfig::new(1, 0, ResampleScheme::SurveyAdjusted);
        assert!(matches!(
            run_bootstrap(&GaussianMeanModel, &d, &d.scaled_weights(), &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let mut cfg = BootstrapConfig::new(10, 0, ResampleScheme::SurveyAdjusted);
        cfg.max_failures_fraction = 1.0;
        assert!(run_bootstrap(&GaussianMeanModel, &d, &d.scaled_weights(), &cfg).is_err());
        let other = ScaledWeights::ones(3).unwrap();
        let cfg = BootstrapConfig::new(10, 0, ResampleScheme::SurveyAdjusted);
        assert!(matches!(
            run_bootstrap(&GaussianMeanModel, &d, &other, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn draws_do_not_depend_on_pool_width() {
        let d = gaussian_sample(2, 200);
        let cfg = BootstrapConfig::new(300, 77, ResampleScheme::SurveyAdjusted);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_bootstrap(&GaussianMeanModel, &d, &d.scaled_weights(), &cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one.draws.len(), 300);
        assert_eq!(one, run(4));
        assert_eq!(one, run(8));
    }

    #[test]
    fn separated_replicates_are_tallied_reproducibly() {
        // A tiny probit sample where some reweightings separate the classes.
        let x = vec![-2.0, -1.0, -0.5, 0.3, 0.5, 1.0, 2.0, -0.2];
        let y = vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let d = SurveyDataset::new(x, 1, Some(y), vec![1.0; 8]).unwrap();
        let mut cfg = BootstrapConfig::new(400, 5, ResampleScheme::UniformDirichlet);
        cfg.max_failures_fraction = 0.99;
        let model = ProbitRegressionModel::new(true);
        let a = run_bootstrap(&model, &d, &d.scaled_weights(), &cfg).unwrap();
        let b = run_bootstrap(&model, &d, &d.scaled_weights(), &cfg).unwrap();
        assert_eq!(a.failures, b.failures);
        assert_eq!(a.draws.len() + a.failures.total(), 400);
        assert_eq!(a.failures.other, 0);
        cfg.max_failures_fraction = 0.0;
        if a.failures.total() > 0 {
            assert!(matches!(
                run_bootstrap(&model, &d, &d.scaled_weights(), &cfg),
                Err(Error::TooManyFailures { .. })
            ));
        }
    }

    #[test]
    fn equal_weight_schemes_agree_in_law() {
        let mut rng = substream(8, &[]);
        let x: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
        let d = SurveyDataset::univariate(x, vec![1.0; 100]).unwrap();
        let w = d.scaled_weights();
        let sa = run_bootstrap(
            &GaussianMeanModel,
            &d,
            &w,
            &BootstrapConfig::new(4000, 9, ResampleScheme::SurveyAdjusted),
        )
        .unwrap();
        let ud = run_bootstrap(
            &GaussianMeanModel,
            &d,
            &w,
            &BootstrapConfig::new(4000, 9, ResampleScheme::UniformDirichlet),
        )
        .unwrap();
        let (m1, s1) = summarize(&sa).unwrap();
        let (m2, s2) = summarize(&ud).unwrap();
        // Both laws are Dirichlet(1,...,1); identical streams give identical draws.
        assert_eq!(m1, m2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn survey_adjusted_spread_tracks_sandwich() {
        let d = gaussian_sample(3, 1000);
        let w = d.scaled_weights();
        let fit = fit_pmle(&GaussianMeanModel, &d, &w).unwrap();
        let r = run_bootstrap(
            &GaussianMeanModel,
            &d,
            &w,
            &BootstrapConfig::new(2000, 4, ResampleScheme::SurveyAdjusted),
        )
        .unwrap();
        let (_, sd) = summarize(&r).unwrap();
        let se = fit.standard_errors()[0];
        assert!((sd[0] - se).abs() / se < 0.1, "sd {} se {}", sd[0], se);
    }
}
