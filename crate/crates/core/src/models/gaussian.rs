use nalgebra::DMatrix;

use super::LikelihoodModel;
use crate::error::{Error, Result};
use crate::survey_data::SurveyDataset;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative floor on the variance estimate, as a fraction of the unweighted
/// sample variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// `X ~ Normal(mu, sigma2)` with `theta = (mu, sigma2)`.
///
/// The observed variable is the response column, or the only covariate
/// column when no response is present.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianMeanModel;

impl GaussianMeanModel {
    fn values<'a>(&self, data: &'a SurveyDataset) -> Result<&'a [f64]> {
        match (data.response(), data.p()) {
            (Some(y), _) => Ok(y),
            (None, 1) => Ok(data.covariates()),
            (None, p) => Err(Error::InvalidResponse(format!(
                "gaussian mean model needs a response or exactly one variable, found {p} covariates"
            ))),
        }
    }

    #[inline]
    fn x(&self, data: &SurveyDataset, i: usize) -> f64 {
        self.values(data).expect("validated dataset")[i]
    }
}

impl LikelihoodModel for GaussianMeanModel {
    fn name(&self) -> &'static str {
        "gaussian-mean"
    }

    fn validate(&self, data: &SurveyDataset) -> Result<()> {
        self.values(data).map(|_| ())
    }

    fn param_dim(&self, _data: &SurveyDataset) -> usize {
        2
    }

    fn param_names(&self, _data: &SurveyDataset) -> Vec<String> {
        vec!["mu".into(), "sigma2".into()]
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        if theta[0].is_finite() && theta[1].is_finite() && theta[1] > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "gaussian parameters ({}, {})",
                theta[0], theta[1]
            )))
        }
    }

    fn log_density(&self, data: &SurveyDataset, i: usize, theta: &[f64]) -> f64 {
        let (mu, s2) = (theta[0], theta[1]);
        let r = self.x(data, i) - mu;
        -0.5 * (LN_2PI + s2.ln()) - r * r / (2.0 * s2)
    }

    fn score(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut [f64]) {
        let (mu, s2) = (theta[0], theta[1]);
        let r = self.x(data, i) - mu;
        out[0] = r / s2;
        out[1] = (r * r - s2) / (2.0 * s2 * s2);
    }

    fn hessian(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut DMatrix<f64>) {
        let (mu, s2) = (theta[0], theta[1]);
        let r = self.x(data, i) - mu;
        let s4 = s2 * s2;
        out[(0, 0)] = -1.0 / s2;
        out[(0, 1)] = -r / s4;
        out[(1, 0)] = -r / s4;
        out[(1, 1)] = 0.5 / s4 - r * r / (s4 * s2);
    }

    fn start(&self, data: &SurveyDataset, _weights: &[f64]) -> Vec<f64> {
        let x = self.values(data).expect("validated dataset");
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        vec![mean, if var > 0.0 { var } else { 1.0 }]
    }

    /// Closed form: weighted mean and weighted (1/sum w) variance.
    fn fit_weighted(&self, data: &SurveyDataset, weights: &[f64]) -> Result<Vec<f64>> {
        let x = self.values(data)?;
        let total: f64 = weights.iter().sum();
        let mu = x.iter().zip(weights).map(|(xi, w)| w * xi).sum::<f64>() / total;
        let s2 = x
            .iter()
            .zip(weights)
            .map(|(xi, w)| w * (xi - mu) * (xi - mu))
            .sum::<f64>()
            / total;
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sample_var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if s2.is_nan() || s2 <= VARIANCE_FLOOR * sample_var {
            return Err(Error::DegenerateVariance);
        }
        Ok(vec![mu, s2])
    }
}
