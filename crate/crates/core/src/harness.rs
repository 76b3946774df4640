//! Seeded Monte Carlo experiment runner: scenario generation, method
//! comparison, sampling sweeps, and CDF summaries.
//!
//! Every trial owns a random stream derived from `(master_seed, trial_id)`,
//! so trials are order-independent, parallelizable, and bit-reproducible
//! across thread counts.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand_chacha::ChaCha8Rng;

use crate::error::{FusionError, Result};
use crate::estimator::{
    build_grid_pool, estimate_p3, estimate_single_bs, GridPool, Method, PositionEstimate,
    SearchRegion,
};
use crate::geom::{Hexagon, Position3};
use crate::likelihood::build_columns;
use crate::obsmodel::{observe, sample_bias, BiasModel, BsProfile, Observation};
use crate::optimizer::{solve_weights, DiscretizedPsi, IsConfig};
use crate::pooling::WeightVector;

/// Whether range observations carry multipath bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    Unbiased,
    Biased,
}

impl BiasMode {
    pub fn label(&self) -> &'static str {
        match self {
            BiasMode::Unbiased => "unbiased",
            BiasMode::Biased => "biased",
        }
    }
}

/// Noise characterization shared by all stations of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma_d: f64,
    pub sigma_az: f64,
    pub sigma_el: f64,
    pub kappa: f64,
    /// Uniform bias support (lo, hi], used in the biased mode.
    pub bias_lo: f64,
    pub bias_hi: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_d: 1.0,
            sigma_az: 3.2f64.to_radians(),
            sigma_el: 3.2f64.to_radians(),
            kappa: 10.0,
            bias_lo: 0.0,
            bias_hi: 5.0,
        }
    }
}

/// A full experiment description: station layout, coverage, noise mode,
/// trial count, and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs_profiles: Vec<BsProfile>,
    pub hex_circumradius: f64,
    pub bs_height: f64,
    pub target_height: f64,
    pub bias_mode: BiasMode,
    /// When false, one bias value is drawn per station for the whole run.
    pub redraw_bias_per_trial: bool,
    /// Report 3-D instead of horizontal positioning error.
    pub error_3d: bool,
    pub num_trials: usize,
    pub master_seed: u64,
}

impl Scenario {
    /// Three stations at alternating hexagon vertices (azimuths 90, 210,
    /// 330 degrees), default noise, 1000 trials.
    pub fn three_station_hex(
        circumradius: f64,
        bs_height: f64,
        target_height: f64,
        noise: &NoiseParams,
        bias_mode: BiasMode,
    ) -> Result<Self> {
        let hex = Hexagon::new(circumradius)?;
        let bias = match bias_mode {
            BiasMode::Unbiased => BiasModel::None,
            BiasMode::Biased => BiasModel::Uniform {
                lo: noise.bias_lo,
                hi: noise.bias_hi,
            },
        };
        let mut bs_profiles = Vec::new();
        for (k, az_deg) in [90.0f64, 210.0, 330.0].into_iter().enumerate() {
            let profile = BsProfile {
                id: k as u32 + 1,
                position: hex.vertex_at(az_deg.to_radians(), bs_height),
                sigma_d: noise.sigma_d,
                sigma_az: noise.sigma_az,
                sigma_el: noise.sigma_el,
                kappa: noise.kappa,
                bias,
            };
            profile.validate()?;
            bs_profiles.push(profile);
        }
        Ok(Self {
            bs_profiles,
            hex_circumradius: circumradius,
            bs_height,
            target_height,
            bias_mode,
            redraw_bias_per_trial: true,
            error_3d: false,
            num_trials: 1000,
            master_seed: 1,
        })
    }

    pub fn hexagon(&self) -> Result<Hexagon> {
        Hexagon::new(self.hex_circumradius)
    }

    pub fn search_region(&self, nx: usize, ny: usize) -> Result<SearchRegion> {
        SearchRegion::from_hexagon(self.hexagon()?, self.target_height, nx, ny)
    }

    pub fn num_stations(&self) -> usize {
        self.bs_profiles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_profiles.is_empty() {
            return Err(FusionError::InvalidParameter {
                name: "bs_profiles",
                message: "at least one station required".into(),
            });
        }
        for p in &self.bs_profiles {
            p.validate()?;
        }
        if self.num_trials == 0 {
            return Err(FusionError::InvalidParameter {
                name: "num_trials",
                message: "must be at least 1".into(),
            });
        }
        if !(self.target_height >= 0.0) || !(self.bs_height >= 0.0) {
            return Err(FusionError::InvalidParameter {
                name: "height",
                message: "heights must be non-negative".into(),
            });
        }
        self.hexagon().map(|_| ())
    }

    /// Station profiles with the per-run fixed bias substituted in when
    /// `redraw_bias_per_trial` is off.
    fn effective_profiles(&self) -> Vec<BsProfile> {
        if self.redraw_bias_per_trial {
            return self.bs_profiles.clone();
        }
        let mut rng = stream_rng(self.master_seed, &[STREAM_FIXED_BIAS]);
        self.bs_profiles
            .iter()
            .map(|p| {
                let value = sample_bias(&p.bias, &mut rng);
                let mut fixed = *p;
                fixed.bias = BiasModel::Delta { value };
                fixed
            })
            .collect()
    }
}

// Purpose tags for deriving independent random streams from the master seed.
const STREAM_TRIAL: u64 = 0;
const STREAM_HYBRID_SAMPLES: u64 = 1;
const STREAM_TOA_SAMPLES: u64 = 2;
const STREAM_AOA_SAMPLES: u64 = 3;
const STREAM_SWEEP_SAMPLES: u64 = 4;
const STREAM_SUBSET_SAMPLES: u64 = 5;
const STREAM_FIXED_BIAS: u64 = 6;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha stream from the master seed and a list of
/// purpose/index words.
pub fn stream_rng(master_seed: u64, words: &[u64]) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut state = master_seed ^ 0x6A09_E667_F3BC_C908;
    for &w in words {
        state ^= w.wrapping_mul(0xA24B_AED4_963E_E407);
        let _ = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub estimate: PositionEstimate,
    pub error_m: f64,
    pub solver_iters: usize,
    pub converged: bool,
}

/// Ground truth, per-method estimates, and errors for one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub true_position: Position3,
    pub observations: Vec<Observation>,
    pub outcomes: BTreeMap<Method, MethodOutcome>,
    /// Hybrid optimal weights, when that method ran.
    pub weights_ow: Option<WeightVector>,
    /// Hybrid weight-solve iteration count.
    pub solver_iters: usize,
    /// True when any weight solve failed to converge or errored.
    pub flagged: bool,
}

impl TrialRecord {
    pub fn error(&self, method: Method) -> Option<f64> {
        self.outcomes.get(&method).map(|o| o.error_m)
    }
}

fn position_error(scn: &Scenario, truth: &Position3, est: &Position3) -> f64 {
    if scn.error_3d {
        truth.distance_to(est)
    } else {
        truth.horizontal_distance_to(est)
    }
}

/// Draws importance samples from the proposal, solves for the weights on
/// the sampled pool, and returns (weights, iterations, converged).
///
/// A non-convergent solve is reported, not fatal: the equal-weight vector
/// is used and the trial is flagged by the caller.
fn solve_on_samples(
    grid: &GridPool,
    psi: &DiscretizedPsi,
    cfg: &IsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(WeightVector, usize, bool)> {
    let samples = psi.draw_samples(cfg.num_samples, rng);
    let pool = grid.pool.gather(&samples.indices, samples.log_psi.clone())?;
    match solve_weights(&pool, cfg) {
        Ok(sol) => Ok((sol.w_star, sol.iterations, sol.converged)),
        Err(FusionError::NonConvergence { iterations, .. }) => {
            Ok((WeightVector::equal(grid.pool.num_columns()), iterations, false))
        }
        Err(e) => Err(e),
    }
}

fn run_one_trial(
    scn: &Scenario,
    profiles: &[BsProfile],
    region: &SearchRegion,
    methods: &[Method],
    cfg: &IsConfig,
    trial_id: usize,
) -> Result<TrialRecord> {
    let hex = scn.hexagon()?;
    let mut rng = stream_rng(scn.master_seed, &[STREAM_TRIAL, trial_id as u64]);
    let true_position = hex.sample_uniform(scn.target_height, &mut rng);
    let observations: Vec<Observation> = profiles
        .iter()
        .map(|bs| observe(bs, &true_position, &mut rng))
        .collect::<Result<_>>()?;

    let columns = build_columns(profiles, &observations)?;
    let grid = build_grid_pool(region, &columns)?;
    let k = profiles.len();
    let toa_cols: Vec<usize> = (0..k).map(|i| 2 * i).collect();
    let aoa_cols: Vec<usize> = (0..k).map(|i| 2 * i + 1).collect();

    let mut outcomes = BTreeMap::new();
    let mut weights_ow = None;
    let mut hybrid_iters = 0;
    let mut flagged = false;

    for &method in Method::ALL.iter().filter(|m| methods.contains(m)) {
        let (estimate, solver_iters, converged) = match method {
            Method::OwHybrid => {
                let psi = DiscretizedPsi::from_grid_pool(&grid);
                let mut srng =
                    stream_rng(scn.master_seed, &[STREAM_HYBRID_SAMPLES, trial_id as u64]);
                let (w, iters, conv) = solve_on_samples(&grid, &psi, cfg, &mut srng)?;
                let est = estimate_p3(&grid.pool, &w, Method::OwHybrid)?;
                weights_ow = Some(w);
                hybrid_iters = iters;
                (est, iters, conv)
            }
            Method::EwHybrid => {
                let w = WeightVector::equal(grid.pool.num_columns());
                (estimate_p3(&grid.pool, &w, Method::EwHybrid)?, 0, true)
            }
            Method::ToaOnly => {
                let sub = grid.select_columns(&toa_cols)?;
                let psi = DiscretizedPsi::from_grid_pool(&sub);
                let mut srng =
                    stream_rng(scn.master_seed, &[STREAM_TOA_SAMPLES, trial_id as u64]);
                let (w, iters, conv) = solve_on_samples(&sub, &psi, cfg, &mut srng)?;
                (estimate_p3(&sub.pool, &w, Method::ToaOnly)?, iters, conv)
            }
            Method::AoaOnly => {
                let sub = grid.select_columns(&aoa_cols)?;
                let psi = DiscretizedPsi::from_grid_pool(&sub);
                let mut srng =
                    stream_rng(scn.master_seed, &[STREAM_AOA_SAMPLES, trial_id as u64]);
                let (w, iters, conv) = solve_on_samples(&sub, &psi, cfg, &mut srng)?;
                (estimate_p3(&sub.pool, &w, Method::AoaOnly)?, iters, conv)
            }
            Method::SingleBs => (estimate_single_bs(&profiles[0], &observations[0]), 0, true),
        };
        flagged |= !converged;
        let error_m = position_error(scn, &true_position, &estimate.position);
        outcomes.insert(
            method,
            MethodOutcome {
                estimate,
                error_m,
                solver_iters,
                converged,
            },
        );
    }

    Ok(TrialRecord {
        trial_id,
        true_position,
        observations,
        outcomes,
        weights_ow,
        solver_iters: hybrid_iters,
        flagged,
    })
}

/// Runs `scn.num_trials` independent trials computing every requested
/// method. Fully determined by the scenario's master seed.
pub fn run_experiment(scn: &Scenario, methods: &[Method], cfg: &IsConfig) -> Result<Vec<TrialRecord>> {
    scn.validate()?;
    cfg.validate(2 * scn.num_stations())?;
    if methods.is_empty() {
        return Err(FusionError::EmptySelection);
    }
    let profiles = scn.effective_profiles();
    let region = scn.search_region(cfg.grid_nx, cfg.grid_ny)?;

    let run = |trial_id: usize| run_one_trial(scn, &profiles, &region, methods, cfg, trial_id);
    #[cfg(feature = "parallel")]
    let records: Result<Vec<TrialRecord>> = (0..scn.num_trials).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let records: Result<Vec<TrialRecord>> = (0..scn.num_trials).map(run).collect();
    records
}

/// Empirical error CDF for one method: sorted samples, mean, and the 50th,
/// 80th, and 90th percentiles as order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSummary {
    pub method: Method,
    pub errors_sorted: Vec<f64>,
    pub mean: f64,
    pub p50: f64,
    pub p80: f64,
    pub p90: f64,
}

impl CdfSummary {
    fn from_errors(method: Method, mut errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(FusionError::UnknownMethod(method.label().to_string()));
        }
        errors.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let pct = |level: f64| -> f64 { percentile_sorted(&errors, level) };
        Ok(Self {
            method,
            mean,
            p50: pct(0.5),
            p80: pct(0.8),
            p90: pct(0.9),
            errors_sorted: errors,
        })
    }

    pub fn percentile(&self, level: f64) -> f64 {
        percentile_sorted(&self.errors_sorted, level)
    }
}

/// The ceil(level * N)-th order statistic (1-indexed) of sorted samples.
fn percentile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = (level * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Summarizes one method's errors across records.
pub fn summarize(records: &[TrialRecord], method: Method) -> Result<CdfSummary> {
    let errors: Vec<f64> = records.iter().filter_map(|r| r.error(method)).collect();
    CdfSummary::from_errors(method, errors)
}

/// Proposal used for the sampling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SamplerKind {
    Importance,
    Uniform,
}

impl SamplerKind {
    pub fn label(&self) -> &'static str {
        match self {
            SamplerKind::Importance => "importance",
            SamplerKind::Uniform => "uniform",
        }
    }
}

/// One (sampler, sample count, trial) outcome of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sampler: SamplerKind,
    pub num_samples: usize,
    pub trial_id: usize,
    pub true_position: Position3,
    pub estimate: PositionEstimate,
    pub error_m: f64,
    pub solver_iters: usize,
    pub converged: bool,
}

/// Mean hybrid positioning error per sampler and sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSweep {
    pub counts: Vec<usize>,
    pub importance_mean: Vec<f64>,
    pub uniform_mean: Vec<f64>,
    pub rows: Vec<SweepPoint>,
}

/// Sweeps the drawn-sample count for both the importance proposal and a
/// uniform proposal over the coverage, reusing each trial's grid pool so
/// the only difference between curve points is the sampling itself.
pub fn sweep_sampling(scn: &Scenario, counts: &[usize], cfg: &IsConfig) -> Result<SamplingSweep> {
    scn.validate()?;
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FusionError::InvalidParameter {
            name: "counts",
            message: "sample counts must be strictly ascending and non-empty".into(),
        });
    }
    let min_count = 2 * scn.num_stations();
    if counts[0] < min_count {
        return Err(FusionError::InvalidParameter {
            name: "counts",
            message: format!("smallest count must be >= {min_count}"),
        });
    }
    let profiles = scn.effective_profiles();
    let region = scn.search_region(cfg.grid_nx, cfg.grid_ny)?;
    let samplers = [SamplerKind::Importance, SamplerKind::Uniform];

    let run_trial = |trial_id: usize| -> Result<Vec<SweepPoint>> {
        let hex = scn.hexagon()?;
        let mut rng = stream_rng(scn.master_seed, &[STREAM_TRIAL, trial_id as u64]);
        let true_position = hex.sample_uniform(scn.target_height, &mut rng);
        let observations: Vec<Observation> = profiles
            .iter()
            .map(|bs| observe(bs, &true_position, &mut rng))
            .collect::<Result<_>>()?;
        let columns = build_columns(&profiles, &observations)?;
        let grid = build_grid_pool(&region, &columns)?;
        let psi_is = DiscretizedPsi::from_grid_pool(&grid);
        let psi_us = DiscretizedPsi::uniform_over(&grid);

        let mut points = Vec::with_capacity(2 * counts.len());
        for (si, sampler) in samplers.iter().enumerate() {
            let psi = match sampler {
                SamplerKind::Importance => &psi_is,
                SamplerKind::Uniform => &psi_us,
            };
            for (ci, &count) in counts.iter().enumerate() {
                let mut srng = stream_rng(
                    scn.master_seed,
                    &[STREAM_SWEEP_SAMPLES, trial_id as u64, si as u64, ci as u64],
                );
                let sweep_cfg = IsConfig {
                    num_samples: count,
                    ..*cfg
                };
                let (w, iters, conv) = solve_on_samples(&grid, psi, &sweep_cfg, &mut srng)?;
                let estimate = estimate_p3(&grid.pool, &w, Method::OwHybrid)?;
                let error_m = position_error(scn, &true_position, &estimate.position);
                points.push(SweepPoint {
                    sampler: *sampler,
                    num_samples: count,
                    trial_id,
                    true_position,
                    estimate,
                    error_m,
                    solver_iters: iters,
                    converged: conv,
                });
            }
        }
        Ok(points)
    };

    #[cfg(feature = "parallel")]
    let nested: Result<Vec<Vec<SweepPoint>>> =
        (0..scn.num_trials).into_par_iter().map(run_trial).collect();
    #[cfg(not(feature = "parallel"))]
    let nested: Result<Vec<Vec<SweepPoint>>> = (0..scn.num_trials).map(run_trial).collect();
    let rows: Vec<SweepPoint> = nested?.into_iter().flatten().collect();

    let mean_for = |sampler: SamplerKind, count: usize| -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for p in rows.iter().filter(|p| p.sampler == sampler && p.num_samples == count) {
            sum += p.error_m;
            n += 1;
        }
        sum / n as f64
    };
    let importance_mean = counts.iter().map(|&c| mean_for(SamplerKind::Importance, c)).collect();
    let uniform_mean = counts.iter().map(|&c| mean_for(SamplerKind::Uniform, c)).collect();

    Ok(SamplingSweep {
        counts: counts.to_vec(),
        importance_mean,
        uniform_mean,
        rows,
    })
}

/// One trial of a station-subset run.
#[derive(Debug, Clone, PartialEq)]
pub struct BsSubsetTrial {
    pub trial_id: usize,
    pub true_position: Position3,
    pub estimate: PositionEstimate,
    pub error_m: f64,
    pub solver_iters: usize,
    pub converged: bool,
}

/// Range-only fusion outcome for one station subset.
#[derive(Debug, Clone, PartialEq)]
pub struct BsSubsetResult {
    /// 0-based indices into `scn.bs_profiles`.
    pub stations: Vec<usize>,
    pub rows: Vec<BsSubsetTrial>,
    pub summary: CdfSummary,
}

/// All 2-station combinations plus the full set.
pub fn default_bs_subsets(num_stations: usize) -> Vec<Vec<usize>> {
    let mut subsets = Vec::new();
    for i in 0..num_stations {
        for j in (i + 1)..num_stations {
            subsets.push(vec![i, j]);
        }
    }
    if num_stations > 2 {
        subsets.push((0..num_stations).collect());
    }
    subsets
}

/// Range-only optimally weighted fusion per station subset, sharing each
/// trial's grid evaluation across subsets.
pub fn sweep_bs_count(
    scn: &Scenario,
    subsets: &[Vec<usize>],
    cfg: &IsConfig,
) -> Result<Vec<BsSubsetResult>> {
    scn.validate()?;
    if subsets.is_empty() || subsets.iter().any(|s| s.is_empty()) {
        return Err(FusionError::EmptySelection);
    }
    for s in subsets {
        for &k in s {
            if k >= scn.num_stations() {
                return Err(FusionError::InvalidParameter {
                    name: "subsets",
                    message: format!("station index {k} out of range"),
                });
            }
        }
    }
    let profiles = scn.effective_profiles();
    let region = scn.search_region(cfg.grid_nx, cfg.grid_ny)?;

    let run_trial = |trial_id: usize| -> Result<Vec<BsSubsetTrial>> {
        let hex = scn.hexagon()?;
        let mut rng = stream_rng(scn.master_seed, &[STREAM_TRIAL, trial_id as u64]);
        let true_position = hex.sample_uniform(scn.target_height, &mut rng);
        let observations: Vec<Observation> = profiles
            .iter()
            .map(|bs| observe(bs, &true_position, &mut rng))
            .collect::<Result<_>>()?;
        let columns = build_columns(&profiles, &observations)?;
        let grid = build_grid_pool(&region, &columns)?;

        let mut out = Vec::with_capacity(subsets.len());
        for (si, subset) in subsets.iter().enumerate() {
            let toa_cols: Vec<usize> = subset.iter().map(|&k| 2 * k).collect();
            let sub = grid.select_columns(&toa_cols)?;
            let psi = DiscretizedPsi::from_grid_pool(&sub);
            let mut srng = stream_rng(
                scn.master_seed,
                &[STREAM_SUBSET_SAMPLES, trial_id as u64, si as u64],
            );
            let (w, iters, conv) = solve_on_samples(&sub, &psi, cfg, &mut srng)?;
            let estimate = estimate_p3(&sub.pool, &w, Method::ToaOnly)?;
            let error_m = position_error(scn, &true_position, &estimate.position);
            out.push(BsSubsetTrial {
                trial_id,
                true_position,
                estimate,
                error_m,
                solver_iters: iters,
                converged: conv,
            });
        }
        Ok(out)
    };

    #[cfg(feature = "parallel")]
    let nested: Result<Vec<Vec<BsSubsetTrial>>> =
        (0..scn.num_trials).into_par_iter().map(run_trial).collect();
    #[cfg(not(feature = "parallel"))]
    let nested: Result<Vec<Vec<BsSubsetTrial>>> = (0..scn.num_trials).map(run_trial).collect();
    let nested = nested?;

    let mut results = Vec::with_capacity(subsets.len());
    for (si, subset) in subsets.iter().enumerate() {
        let rows: Vec<BsSubsetTrial> = nested.iter().map(|trial| trial[si].clone()).collect();
        let errors: Vec<f64> = rows.iter().map(|r| r.error_m).collect();
        results.push(BsSubsetResult {
            stations: subset.clone(),
            summary: CdfSummary::from_errors(Method::ToaOnly, errors)?,
            rows,
        });
    }
    Ok(results)
}
