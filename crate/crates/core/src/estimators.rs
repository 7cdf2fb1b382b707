//! Pseudo-maximum-likelihood estimation with sandwich covariance.
//!
//! With scaled weights `w`, the estimate maximizes `sum_i w_i log f(X_i)`
//! and its covariance is estimated by `J^{-1} I J^{-1} / n` where
//!
//! ```text
//! J = -(1/n) sum_i w_i   d2 log f(X_i) / d theta d theta'
//! I =  (1/n) sum_i w_i^2 psi_i psi_i'
//! ```
//!
//! both evaluated at the estimate.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, LikelihoodModel};
use crate::normal;
use crate::survey_data::{ScaledWeights, SurveyDataset};

/// Condition number of `J` above which it is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct PmleFit {
    pub param_names: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub sandwich_cov: DMatrix<f64>,
    pub j_matrix: DMatrix<f64>,
    pub i_matrix: DMatrix<f64>,
    pub n: usize,
}

impl PmleFit {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.theta_hat.len())
            .map(|k| self.sandwich_cov[(k, k)].max(0.0).sqrt())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMethod {
    Wald,
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub method: IntervalMethod,
}

impl IntervalEstimate {
    pub fn contains(&self, k: usize, value: f64) -> bool {
        self.lower[k] <= value && value <= self.upper[k]
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "interval level must lie in (0, 1), got {level}"
        )))
    }
}

/// Inverse of a symmetric positive definite matrix, refusing near-singular input.
fn checked_inverse(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(j.clone());
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition.is_finite() && condition <= MAX_CONDITION) {
        return Err(Error::SingularInformation { condition });
    }
    j.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularInformation { condition })
}

pub fn fit_pmle<M: LikelihoodModel + ?Sized>(
    model: &M,
    data: &SurveyDataset,
    scaled: &ScaledWeights,
) -> Result<PmleFit> {
    let w = scaled.as_slice();
    let theta = models::weighted_mle(model, data, w)?;
    let n = data.n();
    let nf = n as f64;
    let k = theta.len();

    let hessian = model.weighted_terms(data, w, &theta)?.hessian;
    let mut j = -hessian / nf;
    j = (&j + j.transpose()) * 0.5;

    let mut i_matrix = DMatrix::zeros(k, k);
    let mut psi = vec![0.0; k];
    for (i, &wi) in w.iter().enumerate() {
        model.score(data, i, &theta, &mut psi);
        let w2 = wi * wi;
        for a in 0..k {
            for b in 0..=a {
                i_matrix[(a, b)] += w2 * psi[a] * psi[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            i_matrix[(b, a)] = i_matrix[(a, b)];
        }
    }
    i_matrix /= nf;

    let j_inv = checked_inverse(&j)?;
    let mut sandwich = &j_inv * &i_matrix * &j_inv / nf;
    sandwich = (&sandwich + sandwich.transpose()) * 0.5;

    Ok(PmleFit {
        param_names: model.param_names(data),
        theta_hat: theta,
        sandwich_cov: sandwich,
        j_matrix: j,
        i_matrix,
        n,
    })
}

/// The same pipeline with unit weights: the ordinary MLE with its robust
/// (Huber) covariance. Ignores the survey design.
pub fn fit_unweighted<M: LikelihoodModel + ?Sized>(model: &M, data: &SurveyDataset) -> Result<PmleFit> {
    fit_pmle(model, data, &ScaledWeights::ones(data.n())?)
}

/// `theta_k -/+ z * se_k` with `z` the `(1 + level) / 2` normal quantile.
pub fn wald_interval(fit: &PmleFit, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    let z = normal::quantile(0.5 * (1.0 + level));
    let se = fit.standard_errors();
    Ok(IntervalEstimate {
        lower: fit.theta_hat.iter().zip(&se).map(|(t, s)| t - z * s).collect(),
        upper: fit.theta_hat.iter().zip(&se).map(|(t, s)| t + z * s).collect(),
        level,
        method: IntervalMethod::Wald,
    })
}
