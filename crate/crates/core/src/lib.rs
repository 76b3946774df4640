//! Passive-target localization by fusing per-station range (ToA) and
//! bearing (AoA) likelihoods into one aggregate density.
//!
//! Stations each contribute a Gaussian range likelihood and a von
//! Mises-Fisher bearing likelihood. The likelihoods are combined with a
//! log-linear (weighted geometric mean) pool whose weights are chosen to
//! maximize the generalized Chernoff information of the pool — the
//! weights that pull the aggregate density as close as possible to the
//! unknown ground-truth density. The weight solve estimates the pooled
//! integral by Monte Carlo importance sampling and minimizes it with a
//! damped Newton iteration projected back onto the weight simplex.
//!
//! Module map:
//! - [`geom`]: positions, unit directions, angles, hexagonal coverage
//! - [`obsmodel`]: noisy/biased observation generation
//! - [`likelihood`]: per-station log densities and `log I0`
//! - [`pooling`]: pools, Chernoff information, divergences
//! - [`optimizer`]: proposal construction, sampling, Newton weight solve
//! - [`estimator`]: grid argmax estimators
//! - [`harness`]: seeded Monte Carlo experiments and summaries
//!
//! With the default `parallel` feature, grid evaluation, grid argmax, and
//! Monte Carlo trials run data-parallel on rayon; all reductions that feed
//! outputs are order-fixed, so results are identical with and without it.

pub mod error;
pub mod estimator;
pub mod geom;
pub mod harness;
pub mod likelihood;
pub mod obsmodel;
pub mod optimizer;
pub mod pooling;

pub use error::{FusionError, Result};
pub use estimator::{
    build_grid_pool, estimate_p3, estimate_single_bs, estimate_subset, GridPool, Method,
    PositionEstimate, SearchRegion,
};
pub use geom::{direction_between, DirectionUnit, Hexagon, Position3};
pub use harness::{
    run_experiment, summarize, sweep_bs_count, sweep_sampling, BiasMode, CdfSummary, SamplerKind,
    Scenario, TrialRecord,
};
pub use likelihood::{log_bessel_i0, AoaLikelihood, LikelihoodColumn, ToaLikelihood};
pub use obsmodel::{observe, sample_bias, BiasModel, BsProfile, Observation};
pub use optimizer::{
    build_is_pdf, objective_grad_hess, solve_weights, DiscretizedPsi, IsConfig, SampleSet,
    WeightSolution,
};
pub use pooling::{
    discrete_kld, gci, log_pool_unnormalized, sampled_objective, verify_decomposition,
    DiscretePool, WeightVector,
};
