//! Random weight vectors for the likelihood bootstraps.
//!
//! Each bootstrap replicate maximizes a likelihood whose per-observation
//! exponents are drawn here. Three laws are provided:
//!
//! * [`ResampleScheme::SurveyAdjusted`]: `Y_i ~ Gamma(shape 1, scale w_i)`
//!   independently, normalized. `E Y_i = w_i` and `Var Y_i = w_i^2`, which
//!   is what makes the bootstrap spread match the sandwich covariance.
//! * [`ResampleScheme::UniformDirichlet`]: the classical weighted likelihood
//!   bootstrap, `g ~ Dirichlet(1, ..., 1)`. Ignores the survey weights.
//! * [`ResampleScheme::DirichletCentered`]: `g ~ Dirichlet(w_1, ..., w_n)`.
//!   Right mean, wrong variance; kept as a negative control.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::survey_data::{compensated_sum, ScaledWeights};

/// Attempts after the first before a degenerate draw is surfaced.
pub const DEGENERATE_RETRIES: usize = 3;

/// Fewest draws accepted by [`moment_diagnostics`].
pub const MIN_DIAGNOSTIC_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleScheme {
    SurveyAdjusted,
    UniformDirichlet,
    DirichletCentered,
}

impl ResampleScheme {
    pub const ALL: [ResampleScheme; 3] = [
        ResampleScheme::SurveyAdjusted,
        ResampleScheme::UniformDirichlet,
        ResampleScheme::DirichletCentered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResampleScheme::SurveyAdjusted => "survey-adjusted",
            ResampleScheme::UniformDirichlet => "uniform-dirichlet",
            ResampleScheme::DirichletCentered => "dirichlet-centered",
        }
    }
}

impl std::str::FromStr for ResampleScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown resampling scheme `{s}`")))
    }
}

/// Positive un-normalized weights `Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnnormalizedWeights(Vec<f64>);

impl UnnormalizedWeights {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Weights `g_i = Y_i / sum_k Y_k`, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights(Vec<f64>);

impl NormalizedWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Exponential draw with the given mean: `-mean * ln(U)`, `U` in the open
/// unit interval so the result is finite and strictly positive.
#[inline]
fn exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -mean * u.ln()
}

/// Gamma(shape, 1) draw, resampled on exact underflow to zero.
fn gamma_unit_scale<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let dist = Gamma::new(shape, 1.0).expect("positive finite shape");
    loop {
        let y: f64 = dist.sample(rng);
        if y > 0.0 {
            return y;
        }
    }
}

/// Survey-adjusted un-normalized weights: `Y_i ~ Gamma(shape 1, scale w_i)`.
pub fn draw_unnormalized<R: Rng + ?Sized>(scaled: &ScaledWeights, rng: &mut R) -> UnnormalizedWeights {
    draw_unnormalized_with(ResampleScheme::SurveyAdjusted, scaled, rng)
}

/// Un-normalized weights whose normalization gives the scheme's law.
pub fn draw_unnormalized_with<R: Rng + ?Sized>(
    scheme: ResampleScheme,
    scaled: &ScaledWeights,
    rng: &mut R,
) -> UnnormalizedWeights {
    let w = scaled.as_slice();
    let values = match scheme {
        ResampleScheme::SurveyAdjusted => w.iter().map(|&wi| exponential(wi, rng)).collect(),
        ResampleScheme::UniformDirichlet => w.iter().map(|_| exponential(1.0, rng)).collect(),
        ResampleScheme::DirichletCentered => w.iter().map(|&wi| gamma_unit_scale(wi, rng)).collect(),
    };
    UnnormalizedWeights(values)
}

pub fn normalize(y: &UnnormalizedWeights) -> Result<NormalizedWeights> {
    let total = compensated_sum(y.0.iter().copied());
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateDraw);
    }
    Ok(NormalizedWeights(y.0.iter().map(|v| v / total).collect()))
}

/// One normalized weight vector from `scheme`.
pub fn draw_weights<R: Rng + ?Sized>(
    scheme: ResampleScheme,
    scaled: &ScaledWeights,
    rng: &mut R,
) -> Result<NormalizedWeights> {
    let mut last = Error::DegenerateDraw;
    for _ in 0..=DEGENERATE_RETRIES {
        match normalize(&draw_unnormalized_with(scheme, scaled, rng)) {
            Ok(g) => return Ok(g),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Empirical moments of one weight coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateMoments {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateCheck {
    pub index: usize,
    pub scaled_weight: f64,
    pub target_mean: f64,
    pub target_variance: f64,
    pub unnormalized: CoordinateMoments,
    pub normalized: CoordinateMoments,
    pub mean_condition: bool,
    pub variance_condition: bool,
}

/// Monte Carlo check of `E Y_i = w_i` and `Var Y_i = w_i^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentDiagnostics {
    pub scheme: ResampleScheme,
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
    pub z_threshold: f64,
    pub coordinates: Vec<CoordinateCheck>,
    pub mean_condition: bool,
    pub variance_condition: bool,
    pub pass: bool,
}

/// Shifted power sums; shifting by a value near the mean keeps them stable.
#[derive(Clone)]
struct PowerSums {
    shift: f64,
    s: [f64; 4],
}

impl PowerSums {
    fn new(shift: f64) -> Self {
        Self { shift, s: [0.0; 4] }
    }

    #[inline]
    fn push(&mut self, x: f64) {
        let d = x - self.shift;
        let d2 = d * d;
        self.s[0] += d;
        self.s[1] += d2;
        self.s[2] += d2 * d;
        self.s[3] += d2 * d2;
    }

    fn moments(&self, m: usize) -> CoordinateMoments {
        let mf = m as f64;
        let [a1, a2, a3, a4] = self.s.map(|s| s / mf);
        let delta = a1;
        // central moments about the sample mean
        let m2 = a2 - delta * delta;
        let m4 = a4 - 4.0 * delta * a3 + 6.0 * delta * delta * a2 - 3.0 * delta.powi(4);
        let variance = m2 * mf / (mf - 1.0);
        CoordinateMoments {
            mean: self.shift + delta,
            mean_se: (variance / mf).sqrt(),
            variance,
            variance_se: ((m4 - m2 * m2).max(0.0) / mf).sqrt(),
        }
    }
}

/// Draw `draws` weight vectors (one substream per draw) and compare the
/// un-normalized coordinates with the survey-adjusted moment conditions.
/// A condition passes when every coordinate is within `z_threshold` Monte
/// Carlo standard errors of its target.
pub fn moment_diagnostics(
    scheme: ResampleScheme,
    scaled: &ScaledWeights,
    draws: usize,
    seed: u64,
    z_threshold: f64,
) -> Result<MomentDiagnostics> {
    if draws < MIN_DIAGNOSTIC_DRAWS {
        return Err(Error::InvalidConfig(format!(
            "moment diagnostics need at least {MIN_DIAGNOSTIC_DRAWS} draws, got {draws}"
        )));
    }
    let w = scaled.as_slice();
    let n = w.len();
    let mut raw: Vec<PowerSums> = w.iter().map(|&wi| PowerSums::new(wi)).collect();
    let mut norm: Vec<PowerSums> = w.iter().map(|&wi| PowerSums::new(wi / n as f64)).collect();
    for m in 0..draws {
        let mut rng = substream(seed, &[m as u64]);
        let y = draw_unnormalized_with(scheme, scaled, &mut rng);
        let g = normalize(&y)?;
        for i in 0..n {
            raw[i].push(y.0[i]);
            norm[i].push(g.0[i]);
        }
    }
    let coordinates: Vec<CoordinateCheck> = (0..n)
        .map(|i| {
            let unnormalized = raw[i].moments(draws);
            let normalized = norm[i].moments(draws);
            let target_mean = w[i];
            let target_variance = w[i] * w[i];
            CoordinateCheck {
                index: i,
                scaled_weight: w[i],
                target_mean,
                target_variance,
                mean_condition: (unnormalized.mean - target_mean).abs() <= z_threshold * unnormalized.mean_se,
                variance_condition: (unnormalized.variance - target_variance).abs()
                    <= z_threshold * unnormalized.variance_se,
                unnormalized,
                normalized,
            }
        })
        .collect();
    let mean_condition = coordinates.iter().all(|c| c.mean_condition);
    let variance_condition = coordinates.iter().all(|c| c.variance_condition);
    Ok(MomentDiagnostics {
        scheme,
        n,
        draws,
        seed,
        z_threshold,
        coordinates,
        mean_condition,
        variance_condition,
        pass: mean_condition && variance_condition,
    })
}
