use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::newton::{self, NewtonOptions};
use super::{LikelihoodModel, WeightedTerms};
use crate::error::{Error, Result};
use crate::normal;
use crate::survey_data::SurveyDataset;

/// `|beta_k|` beyond which the fit is declared separated.
pub const SEPARATION_BOUND: f64 = 1e3;

/// Smallest eigenvalue of the column-normalized observed information below
/// which the likelihood is treated as flat along some direction, i.e. the
/// maximizer sits at infinity.
pub const FLAT_CURVATURE: f64 = 1e-8;

/// `P(Y = 1 | x) = Phi(x' beta)`, optionally with an intercept prepended to
/// the covariates.
#[derive(Debug, Clone, Copy)]
pub struct ProbitRegressionModel {
    pub intercept: bool,
}

impl ProbitRegressionModel {
    pub fn new(intercept: bool) -> Self {
        Self { intercept }
    }

    #[inline]
    fn linear_predictor(&self, row: &[f64], beta: &[f64]) -> f64 {
        if self.intercept {
            beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>()
        } else {
            row.iter().zip(beta).map(|(x, b)| x * b).sum()
        }
    }

    /// Design row including the intercept column.
    #[inline]
    fn design_value(&self, row: &[f64], k: usize) -> f64 {
        match (self.intercept, k) {
            (true, 0) => 1.0,
            (true, k) => row[k - 1],
            (false, k) => row[k],
        }
    }

    /// `(log-density, d/d eta, d2/d eta2)` for one observation.
    #[inline]
    fn eta_terms(eta: f64, y: f64) -> (f64, f64, f64) {
        let sign = if y > 0.5 { 1.0 } else { -1.0 };
        let z = sign * eta;
        let (lc, mills) = normal::log_cdf_and_mills(z);
        (lc, sign * mills, -mills * (z + mills))
    }

    fn response<'a>(&self, data: &'a SurveyDataset) -> &'a [f64] {
        data.response().expect("validated dataset")
    }

    /// Flat-likelihood test: smallest eigenvalue of `-H` after scaling each
    /// coordinate by its weighted design second moment.
    fn is_flat(&self, data: &SurveyDataset, weights: &[f64], hessian: &DMatrix<f64>) -> Result<bool> {
        let k = hessian.nrows();
        let mut scale = vec![0.0; k];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = data.row(i);
            for (j, s) in scale.iter_mut().enumerate() {
                let x = self.design_value(row, j);
                *s += w * x * x;
            }
        }
        if scale.contains(&0.0) {
            return Err(Error::SingularInformation {
                condition: f64::INFINITY,
            });
        }
        let normalized = DMatrix::from_fn(k, k, |a, b| -hessian[(a, b)] / (scale[a] * scale[b]).sqrt());
        let eig = SymmetricEigen::new(normalized);
        Ok(eig.eigenvalues.min() < FLAT_CURVATURE)
    }
}

impl LikelihoodModel for ProbitRegressionModel {
    fn name(&self) -> &'static str {
        "probit"
    }

    fn validate(&self, data: &SurveyDataset) -> Result<()> {
        let y = data
            .response()
            .ok_or_else(|| Error::InvalidResponse("probit model needs a response column".into()))?;
        if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidResponse(format!(
                "probit response must be 0 or 1, found {v}"
            )));
        }
        if self.param_dim(data) == 0 {
            return Err(Error::InvalidConfig("probit model has no parameters".into()));
        }
        Ok(())
    }

    fn param_dim(&self, data: &SurveyDataset) -> usize {
        data.p() + usize::from(self.intercept)
    }

    fn param_names(&self, data: &SurveyDataset) -> Vec<String> {
        let mut names = Vec::with_capacity(self.param_dim(data));
        if self.intercept {
            names.push("(intercept)".to_string());
        }
        names.extend(data.covariate_names().iter().cloned());
        names
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        if theta.iter().all(|b| b.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain("non-finite probit coefficient".into()))
        }
    }

    fn log_density(&self, data: &SurveyDataset, i: usize, theta: &[f64]) -> f64 {
        let eta = self.linear_predictor(data.row(i), theta);
        Self::eta_terms(eta, self.response(data)[i]).0
    }

    fn score(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut [f64]) {
        let row = data.row(i);
        let (_, d1, _) = Self::eta_terms(self.linear_predictor(row, theta), self.response(data)[i]);
        for (k, o) in out.iter_mut().enumerate() {
            *o = d1 * self.design_value(row, k);
        }
    }

    fn hessian(&self, data: &SurveyDataset, i: usize, theta: &[f64], out: &mut DMatrix<f64>) {
        let row = data.row(i);
        let (_, _, d2) = Self::eta_terms(self.linear_predictor(row, theta), self.response(data)[i]);
        let k = theta.len();
        for a in 0..k {
            for b in 0..k {
                out[(a, b)] = d2 * self.design_value(row, a) * self.design_value(row, b);
            }
        }
    }

    fn start(&self, data: &SurveyDataset, _weights: &[f64]) -> Vec<f64> {
        vec![0.0; self.param_dim(data)]
    }

    fn weighted_terms(&self, data: &SurveyDataset, weights: &[f64], theta: &[f64]) -> Result<WeightedTerms> {
        self.check_domain(theta)?;
        let k = theta.len();
        let y = self.response(data);
        let mut ll = 0.0;
        let mut score = DVector::zeros(k);
        let mut hessian = DMatrix::zeros(k, k);
        let mut x = vec![0.0; k];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = data.row(i);
            for (j, xj) in x.iter_mut().enumerate() {
                *xj = self.design_value(row, j);
            }
            let eta: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
            let (lc, d1, d2) = Self::eta_terms(eta, y[i]);
            ll += w * lc;
            for a in 0..k {
                score[a] += w * d1 * x[a];
                let wd2xa = w * d2 * x[a];
                for b in 0..=a {
                    hessian[(a, b)] += wd2xa * x[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hessian[(b, a)] = hessian[(a, b)];
            }
        }
        Ok(WeightedTerms {
            log_likelihood: ll,
            score,
            hessian,
        })
    }

    /// Newton-Raphson from zero with step halving.
    fn fit_weighted(&self, data: &SurveyDataset, weights: &[f64]) -> Result<Vec<f64>> {
        let y = self.response(data);
        let (mut w0, mut w1) = (0.0, 0.0);
        for (&yi, &w) in y.iter().zip(weights) {
            if yi > 0.5 {
                w1 += w;
            } else {
                w0 += w;
            }
        }
        if w0 == 0.0 || w1 == 0.0 {
            return Err(Error::InvalidResponse(
                "both response classes need positive total weight".into(),
            ));
        }
        let opts = NewtonOptions {
            max_abs_param: Some(SEPARATION_BOUND),
            ..NewtonOptions::default()
        };
        let outcome = newton::maximize(self, data, weights, self.start(data, weights), &opts)?;
        if outcome.diverged || self.is_flat(data, weights, &outcome.terms.hessian)? {
            // Flat already at the origin means a rank-deficient design, not separation.
            let origin = self.start(data, weights);
            let at_origin = self.weighted_terms(data, weights, &origin)?;
            if self.is_flat(data, weights, &at_origin.hessian)? {
                return Err(Error::SingularInformation {
                    condition: f64::INFINITY,
                });
            }
            return Err(Error::Separation);
        }
        if !outcome.converged {
            return Err(Error::NonConvergence {
                iterations: outcome.iterations,
            });
        }
        Ok(outcome.theta)
    }
}
