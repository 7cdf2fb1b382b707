//! Simulation designs with informative selection and a Monte Carlo harness
//! that scores estimation methods on them.

pub mod config;
pub mod monte_carlo;
pub mod population;

pub use config::{Design, Scenario, Sim1Config, Sim2Config, DEFAULT_BOOTSTRAP_REPLICATES};
pub use monte_carlo::{replication_sample, run_monte_carlo, Method, MethodSummary, ReplicationReport};
pub use population::{
    draw_informative_sample, generate_population_sim1, generate_population_sim2, inclusion_probabilities,
    FinitePopulation,
};
