use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{Sim1Config, Sim2Config};
use crate::error::{Error, Result};
use crate::normal;
use crate::survey_data::SurveyDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct FinitePopulation {
    /// `X*`, the predictor (Sim2) or the variable of interest (Sim1).
    pub x: Vec<f64>,
    /// `Y*`, present for the binary-outcome design.
    pub y: Option<Vec<f64>>,
    /// Selection variable.
    pub z: Vec<f64>,
    pub inclusion_probs: Vec<f64>,
}

impl FinitePopulation {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `(mean_a + sd_a e1, mean_b + sd_b (rho e1 + sqrt(1 - rho^2) e2))`.
#[inline]
fn bivariate<R: Rng + ?Sized>(rng: &mut R, mean: (f64, f64), sd: (f64, f64), rho: f64) -> (f64, f64) {
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    let a = mean.0 + sd.0 * e1;
    let b = mean.1 + sd.1 * (rho * e1 + (1.0 - rho * rho).sqrt() * e2);
    (a, b)
}

pub fn inclusion_probabilities(z: &[f64], b0: f64, b1: f64) -> Vec<f64> {
    z.iter().map(|&zl| normal::cdf(b0 + b1 * zl)).collect()
}

pub fn generate_population_sim1<R: Rng + ?Sized>(config: &Sim1Config, rng: &mut R) -> FinitePopulation {
    let big_n = config.population_size;
    let mut x = Vec::with_capacity(big_n);
    let mut z = Vec::with_capacity(big_n);
    for _ in 0..big_n {
        let (a, b) = bivariate(
            rng,
            (config.mu_x, config.mu_z),
            (config.sigma_x, config.sigma_z),
            config.rho,
        );
        x.push(a);
        z.push(b);
    }
    let inclusion_probs = inclusion_probabilities(&z, config.b0, config.b1);
    FinitePopulation {
        x,
        y: None,
        z,
        inclusion_probs,
    }
}

pub fn generate_population_sim2<R: Rng + ?Sized>(config: &Sim2Config, rng: &mut R) -> FinitePopulation {
    let big_n = config.population_size;
    let sd_x = config.sigma_x2.sqrt();
    let sd = (config.sigma_v2.sqrt(), config.sigma_z2.sqrt());
    let mut x = Vec::with_capacity(big_n);
    let mut y = Vec::with_capacity(big_n);
    let mut z = Vec::with_capacity(big_n);
    for _ in 0..big_n {
        let xl = config.mu_x + sd_x * rng.sample::<f64, _>(StandardNormal);
        let (v, zl) = bivariate(rng, (xl * config.beta, config.mu_z), sd, config.rho);
        x.push(xl);
        y.push(if v > 0.0 { 1.0 } else { 0.0 });
        z.push(zl);
    }
    let inclusion_probs = inclusion_probabilities(&z, config.b0, config.b1);
    FinitePopulation {
        x,
        y: Some(y),
        z,
        inclusion_probs,
    }
}

/// Indices of `n` units drawn one at a time without replacement, each
/// draw proportional to `pi` among the units left.
///
/// Uses the equivalent one-pass form: keep the `n` largest `ln(U_l) / pi_l`.
pub fn successive_sample<R: Rng + ?Sized>(pi: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > pi.len() {
        return Err(Error::InvalidConfig(format!(
            "sample size {n} exceeds population size {}",
            pi.len()
        )));
    }
    if let Some(p) = pi.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "inclusion probability must be positive, got {p}"
        )));
    }
    let mut keyed: Vec<(f64, usize)> = pi
        .iter()
        .enumerate()
        .map(|(l, &p)| {
            let u: f64 = rng.sample(Open01);
            (u.ln() / p, l)
        })
        .collect();
    if n < keyed.len() && n > 0 {
        keyed.select_nth_unstable_by(n - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    }
    let mut chosen: Vec<usize> = keyed[..n].iter().map(|&(_, l)| l).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Selected units with raw weights `1 / pi`.
///
/// Sim1 samples carry `x` as the response; Sim2 samples carry `x` as the
/// single covariate and `y` as the response.
pub fn draw_informative_sample<R: Rng + ?Sized>(
    pop: &FinitePopulation,
    n: usize,
    rng: &mut R,
) -> Result<SurveyDataset> {
    let idx = successive_sample(&pop.inclusion_probs, n, rng)?;
    let x: Vec<f64> = idx.iter().map(|&l| pop.x[l]).collect();
    let w: Vec<f64> = idx.iter().map(|&l| 1.0 / pop.inclusion_probs[l]).collect();
    match &pop.y {
        None => Ok(SurveyDataset::univariate(x, w)?.with_names(Vec::new(), Some("x".into()))),
        Some(y) => {
            let y: Vec<f64> = idx.iter().map(|&l| y[l]).collect();
            Ok(SurveyDataset::new(x, 1, Some(y), w)?.with_names(vec!["x".into()], Some("y".into())))
        }
    }
}
