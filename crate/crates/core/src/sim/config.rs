use serde::{Deserialize, Serialize};

use crate::bootstrap::MIN_PERCENTILE_DRAWS;
use crate::error::{Error, Result};

/// Continuous outcome: `(X*, Z)` bivariate normal, target `mu_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim1Config {
    pub population_size: usize,
    pub sample_size: usize,
    pub mu_x: f64,
    pub mu_z: f64,
    pub sigma_x: f64,
    pub sigma_z: f64,
    pub rho: f64,
    pub b0: f64,
    pub b1: f64,
    pub replications: usize,
}

/// Binary outcome: `Y* = 1(V > 0)` with `V | X* ~ N(X* beta, sigma_v2)` and
/// `(V, Z)` correlated; target `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim2Config {
    pub population_size: usize,
    pub sample_size: usize,
    pub beta: f64,
    pub mu_x: f64,
    pub mu_z: f64,
    pub sigma_x2: f64,
    pub sigma_v2: f64,
    pub sigma_z2: f64,
    pub rho: f64,
    pub b0: f64,
    pub b1: f64,
    pub replications: usize,
}

impl Default for Sim1Config {
    fn default() -> Self {
        Self {
            population_size: 20_000,
            sample_size: 500,
            mu_x: 10.0,
            mu_z: 0.0,
            sigma_x: 4.0,
            sigma_z: 3.0,
            rho: 0.2,
            b0: -1.8,
            b1: 0.0,
            replications: 100,
        }
    }
}

impl Default for Sim2Config {
    fn default() -> Self {
        Self {
            population_size: 20_000,
            sample_size: 500,
            beta: 0.1,
            mu_x: 1.0,
            mu_z: 0.0,
            sigma_x2: 0.01,
            sigma_v2: 1.0,
            sigma_z2: 1.0,
            rho: 0.2,
            b0: -1.8,
            b1: 0.0,
            replications: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "simulation", rename_all = "lowercase")]
pub enum Design {
    Sim1(Sim1Config),
    Sim2(Sim2Config),
}

/// A named simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    /// Draws per bootstrap fit.
    pub bootstrap_replicates: usize,
    #[serde(flatten)]
    pub design: Design,
}

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 2000;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")))
    }
}

fn common(population: usize, sample: usize, rho: f64, replications: usize) -> Result<()> {
    if sample < 2 {
        return Err(Error::InvalidConfig(format!(
            "sample_size must be at least 2, got {sample}"
        )));
    }
    if sample > population {
        return Err(Error::InvalidConfig(format!(
            "sample_size {sample} exceeds population_size {population}"
        )));
    }
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::InvalidConfig(format!("rho must lie in (-1, 1), got {rho}")));
    }
    if replications < 2 {
        return Err(Error::InvalidConfig(format!(
            "replications must be at least 2, got {replications}"
        )));
    }
    Ok(())
}

impl Sim1Config {
    pub fn validate(&self) -> Result<()> {
        common(self.population_size, self.sample_size, self.rho, self.replications)?;
        positive("sigma_x", self.sigma_x)?;
        positive("sigma_z", self.sigma_z)?;
        for (name, v) in [
            ("mu_x", self.mu_x),
            ("mu_z", self.mu_z),
            ("b0", self.b0),
            ("b1", self.b1),
        ] {
            finite(name, v)?;
        }
        Ok(())
    }
}

impl Sim2Config {
    pub fn validate(&self) -> Result<()> {
        common(self.population_size, self.sample_size, self.rho, self.replications)?;
        positive("sigma_x2", self.sigma_x2)?;
        positive("sigma_v2", self.sigma_v2)?;
        positive("sigma_z2", self.sigma_z2)?;
        for (name, v) in [
            ("beta", self.beta),
            ("mu_x", self.mu_x),
            ("mu_z", self.mu_z),
            ("b0", self.b0),
            ("b1", self.b1),
        ] {
            finite(name, v)?;
        }
        Ok(())
    }
}

impl Design {
    pub fn validate(&self) -> Result<()> {
        match self {
            Design::Sim1(c) => c.validate(),
            Design::Sim2(c) => c.validate(),
        }
    }

    /// The superpopulation parameter the methods are scored against.
    pub fn truth(&self) -> f64 {
        match self {
            Design::Sim1(c) => c.mu_x,
            Design::Sim2(c) => c.beta / c.sigma_v2.sqrt(),
        }
    }

    pub fn replications(&self) -> usize {
        match self {
            Design::Sim1(c) => c.replications,
            Design::Sim2(c) => c.replications,
        }
    }

    pub fn sample_size(&self) -> usize {
        match self {
            Design::Sim1(c) => c.sample_size,
            Design::Sim2(c) => c.sample_size,
        }
    }

    pub fn population_size(&self) -> usize {
        match self {
            Design::Sim1(c) => c.population_size,
            Design::Sim2(c) => c.population_size,
        }
    }

    pub fn b1(&self) -> f64 {
        match self {
            Design::Sim1(c) => c.b1,
            Design::Sim2(c) => c.b1,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            Design::Sim1(c) => c.rho,
            Design::Sim2(c) => c.rho,
        }
    }

    pub fn set_replications(&mut self, r: usize) {
        match self {
            Design::Sim1(c) => c.replications = r,
            Design::Sim2(c) => c.replications = r,
        }
    }

    pub fn set_sample_size(&mut self, n: usize) {
        match self {
            Design::Sim1(c) => c.sample_size = n,
            Design::Sim2(c) => c.sample_size = n,
        }
    }

    pub fn set_population_size(&mut self, big_n: usize) {
        match self {
            Design::Sim1(c) => c.population_size = big_n,
            Design::Sim2(c) => c.population_size = big_n,
        }
    }
}

impl Scenario {
    pub fn new(name: impl Into<String>, design: Design) -> Self {
        Self {
            name: name.into(),
            bootstrap_replicates: DEFAULT_BOOTSTRAP_REPLICATES,
            design,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_replicates < MIN_PERCENTILE_DRAWS {
            return Err(Error::InvalidConfig(format!(
                "bootstrap_replicates must be at least {MIN_PERCENTILE_DRAWS}, got {}",
                self.bootstrap_replicates
            )));
        }
        self.design.validate()
    }
}
