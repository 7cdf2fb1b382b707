//! Damped Newton ascent on a weighted log-likelihood.

use nalgebra::DVector;

use super::{LikelihoodModel, WeightedTerms};
use crate::error::{Error, Result};
use crate::survey_data::SurveyDataset;

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Converged once `max|score| <= score_tolerance * sum(weights)` ...
    pub score_tolerance: f64,
    /// ... and the next Newton step is below `step_tolerance * (1 + max|theta|)`.
    pub step_tolerance: f64,
    pub max_halvings: usize,
    /// Stop with [`NewtonOutcome::diverged`] once any `|theta_k|` exceeds this.
    pub max_abs_param: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            score_tolerance: 1e-10,
            step_tolerance: 1e-9,
            max_halvings: 50,
            max_abs_param: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub theta: Vec<f64>,
    pub terms: WeightedTerms,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Ascent direction: the Newton step when the Hessian is negative definite
/// and it points uphill, otherwise a gradient step of relative length one.
fn direction(terms: &WeightedTerms, theta: &[f64]) -> DVector<f64> {
    let neg_h = -&terms.hessian;
    if let Some(chol) = neg_h.cholesky() {
        let d = chol.solve(&terms.score);
        if d.iter().all(|v| v.is_finite()) && d.dot(&terms.score) > 0.0 {
            return d;
        }
    }
    let g = max_abs(terms.score.iter().copied());
    if g == 0.0 {
        return DVector::zeros(theta.len());
    }
    &terms.score * ((1.0 + max_abs(theta.iter().copied())) / g)
}

pub fn maximize<M: LikelihoodModel + ?Sized>(
    model: &M,
    data: &SurveyDataset,
    weights: &[f64],
    start: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let total_weight: f64 = weights.iter().sum();
    let score_tol = opts.score_tolerance * total_weight;
    let mut theta = start;
    let mut terms = model.weighted_terms(data, weights, &theta)?;
    if !terms.log_likelihood.is_finite() {
        return Err(Error::Domain("log-likelihood not finite at the starting point".into()));
    }
    let mut iterations = 0;
    loop {
        let d = direction(&terms, &theta);
        let score_norm = max_abs(terms.score.iter().copied());
        let theta_norm = max_abs(theta.iter().copied());
        let step_norm = max_abs(d.iter().copied());
        if score_norm <= score_tol && step_norm <= opts.step_tolerance * (1.0 + theta_norm) {
            return Ok(NewtonOutcome {
                theta,
                terms,
                iterations,
                converged: true,
                diverged: false,
            });
        }
        if iterations == opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate: Vec<f64> = theta.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
            if model.check_domain(&candidate).is_ok() {
                if let Ok(next) = model.weighted_terms(data, weights, &candidate) {
                    let ll = next.log_likelihood;
                    let slack = 1e-13 * terms.log_likelihood.abs().max(1.0);
                    let improves = ll > terms.log_likelihood
                        || (ll >= terms.log_likelihood - slack && max_abs(next.score.iter().copied()) < score_norm);
                    if ll.is_finite() && improves {
                        accepted = Some((candidate, next));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((next_theta, next_terms)) = accepted else {
            // No uphill point along the direction: at the precision floor.
            let converged = score_norm <= score_tol;
            return Ok(NewtonOutcome {
                theta,
                terms,
                iterations,
                converged,
                diverged: false,
            });
        };
        theta = next_theta;
        terms = next_terms;
        if let Some(cap) = opts.max_abs_param {
            if max_abs(theta.iter().copied()) > cap {
                return Ok(NewtonOutcome {
                    theta,
                    terms,
                    iterations,
                    converged: false,
                    diverged: true,
                });
            }
        }
    }
    Ok(NewtonOutcome {
        theta,
        terms,
        iterations,
        converged: false,
        diverged: false,
    })
}
