//! Parametric likelihood models and weighted maximum likelihood.
//!
//! A model is a stateless evaluator of per-observation log-densities, scores
//! and Hessians against a [`SurveyDataset`]. Weighted objectives have the form
//! `sum_i weight_i * log f_theta(X_i)`; the same code serves pseudo-likelihood
//! estimation (scaled survey weights) and every bootstrap replicate (random
//! weights).

mod gaussian;
pub mod newton;
mod probit;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::survey_data::SurveyDataset;

pub use gaussian::GaussianMeanModel;
pub use probit::ProbitRegressionModel;

/// Weighted log-likelihood with its gradient and Hessian at one point.
#[derive(Debug, Clone)]
pub struct WeightedTerms {
    pub log_likelihood: f64,
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub trait LikelihoodModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Reject datasets the model cannot describe (missing or invalid response).
    fn validate(&self, data: &SurveyDataset) -> Result<()>;

    fn param_dim(&self, data: &SurveyDataset) -> usize;

    fn param_names(&self, data: &SurveyDataset) -> Vec<String>;

    fn check_domain(&self, theta: &[f64]) -> Result<()>;

    fn log_density(&self, data: &SurveyDataset, i: usize, theta: &[f64]) -> f64;

    /// Gradient of `log_density` in `theta`, written to `out`.
    fn score(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut [f64]);

    /// Hessian of `log_density` in `theta`, written to `out`.
    fn hessian(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut DMatrix<f64>);

    /// Starting point for the generic Newton solver.
    fn start(&self, data: &SurveyDataset, weights: &[f64]) -> Vec<f64>;

    /// Weighted log-likelihood, score and Hessian in one pass. Observations
    /// with zero weight are skipped.
    fn weighted_terms(&self, data: &SurveyDataset, weights: &[f64], theta: &[f64]) -> Result<WeightedTerms> {
        self.check_domain(theta)?;
        let k = theta.len();
        let mut terms = WeightedTerms {
            log_likelihood: 0.0,
            score: DVector::zeros(k),
            hessian: DMatrix::zeros(k, k),
        };
        let mut s = vec![0.0; k];
        let mut h = DMatrix::zeros(k, k);
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            terms.log_likelihood += w * self.log_density(data, i, theta);
            self.score(data, i, theta, &mut s);
            for (acc, v) in terms.score.iter_mut().zip(&s) {
                *acc += w * v;
            }
            self.hessian(data, i, theta, &mut h);
            terms.hessian += &h * w;
        }
        Ok(terms)
    }

    /// Maximizer of the weighted log-likelihood. Weights are already
    /// validated (finite, nonnegative, positive total).
    fn fit_weighted(&self, data: &SurveyDataset, weights: &[f64]) -> Result<Vec<f64>> {
        let start = self.start(data, weights);
        let outcome = newton::maximize(self, data, weights, start, &newton::NewtonOptions::default())?;
        if !outcome.converged {
            return Err(Error::NonConvergence {
                iterations: outcome.iterations,
            });
        }
        Ok(outcome.theta)
    }
}

pub(crate) fn check_weight_vector(data: &SurveyDataset, weights: &[f64]) -> Result<()> {
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "weight vector",
            expected: data.n(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    Ok(())
}

fn check_theta<M: LikelihoodModel + ?Sized>(model: &M, data: &SurveyDataset, theta: &[f64]) -> Result<()> {
    let k = model.param_dim(data);
    if theta.len() != k {
        return Err(Error::DimensionMismatch {
            what: "parameter vector",
            expected: k,
            found: theta.len(),
        });
    }
    model.check_domain(theta)
}

/// `sum_i weights_i * log f_theta(X_i)`; may be `-inf`.
pub fn weighted_log_likelihood<M: LikelihoodModel + ?Sized>(
    model: &M,
    data: &SurveyDataset,
    weights: &[f64],
    theta: &[f64],
) -> Result<f64> {
    model.validate(data)?;
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "weight vector",
            expected: data.n(),
            found: weights.len(),
        });
    }
    check_theta(model, data, theta)?;
    Ok(weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| w * model.log_density(data, i, theta))
        .sum())
}

/// `sum_i weights_i * score_i(theta)`.
pub fn weighted_score<M: LikelihoodModel + ?Sized>(
    model: &M,
    data: &SurveyDataset,
    weights: &[f64],
    theta: &[f64],
) -> Result<Vec<f64>> {
    model.validate(data)?;
    check_weight_vector(data, weights)?;
    check_theta(model, data, theta)?;
    Ok(model.weighted_terms(data, weights, theta)?.score.as_slice().to_vec())
}

/// Maximizer of `sum_i weights_i * log f_theta(X_i)`.
pub fn weighted_mle<M: LikelihoodModel + ?Sized>(model: &M, data: &SurveyDataset, weights: &[f64]) -> Result<Vec<f64>> {
    model.validate(data)?;
    check_weight_vector(data, weights)?;
    model.fit_weighted(data, weights)
}
