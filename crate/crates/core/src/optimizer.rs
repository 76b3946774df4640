//! Importance-sampling proposal construction and the damped Newton weight
//! solve.
//!
//! The proposal is the equal-weight log-linear pool discretized on the
//! search grid; candidate positions are drawn categorically over cells.
//! The weight solve minimizes the sampled pooled-density integral with
//! Newton steps, backtracking on the step scale, and clamp-plus-normalize
//! projection back onto the simplex after every iterate, stopping when the
//! iterate movement drops below the configured threshold.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{FusionError, Result};
use crate::estimator::{build_grid_pool, GridPool, SearchRegion};
use crate::geom::Position3;
use crate::likelihood::LikelihoodColumn;
use crate::pooling::{self, DiscretePool, WeightVector};

/// Sampling and solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsConfig {
    /// Number of importance samples drawn per solve.
    pub num_samples: usize,
    /// Grid resolution used to discretize the proposal (and the search).
    pub grid_nx: usize,
    pub grid_ny: usize,
    /// Convergence threshold on the Euclidean iterate movement.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Initial step scale in (0, 1]; halved by backtracking.
    pub damping: f64,
    /// Extra ridge added to the Hessian diagonal (the solver always adds a
    /// trace-scaled base ridge on top of this).
    pub hessian_ridge: f64,
}

impl Default for IsConfig {
    fn default() -> Self {
        // The normalize-each-iterate Newton scheme converges linearly, so
        // the iteration cap must comfortably exceed the ~100 steps the
        // epsilon threshold can require; each iteration is microseconds.
        Self {
            num_samples: 1000,
            grid_nx: 1000,
            grid_ny: 1000,
            epsilon: 1e-4,
            max_iters: 500,
            damping: 1.0,
            hessian_ridge: 0.0,
        }
    }
}

impl IsConfig {
    /// Validates bounds; `num_pdfs` is the pooled column count (2K).
    pub fn validate(&self, num_pdfs: usize) -> Result<()> {
        if self.num_samples < num_pdfs.max(2) {
            return Err(FusionError::InvalidParameter {
                name: "num_samples",
                message: format!(
                    "must be at least the pooled PDF count {num_pdfs}, got {}",
                    self.num_samples
                ),
            });
        }
        if self.grid_nx < 2 || self.grid_ny < 2 {
            return Err(FusionError::InvalidParameter {
                name: "grid_nx",
                message: format!("grid must be at least 2x2, got {}x{}", self.grid_nx, self.grid_ny),
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(FusionError::InvalidParameter {
                name: "epsilon",
                message: format!("must be > 0, got {}", self.epsilon),
            });
        }
        if self.max_iters == 0 {
            return Err(FusionError::InvalidParameter {
                name: "max_iters",
                message: "must be at least 1".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(FusionError::InvalidParameter {
                name: "damping",
                message: format!("must lie in (0, 1], got {}", self.damping),
            });
        }
        if !(self.hessian_ridge >= 0.0) {
            return Err(FusionError::InvalidParameter {
                name: "hessian_ridge",
                message: format!("must be >= 0, got {}", self.hessian_ridge),
            });
        }
        Ok(())
    }
}

/// A proposal density discretized over grid cells, normalized for
/// categorical sampling.
#[derive(Debug, Clone)]
pub struct DiscretizedPsi {
    points: Vec<Position3>,
    /// Normalized log cell masses.
    log_mass: Vec<f64>,
    /// Cumulative cell masses; last entry forced to exactly 1.
    cum: Vec<f64>,
    cell_area: f64,
}

impl DiscretizedPsi {
    /// Equal-weight pool of all grid columns: the proposal of choice, whose
    /// peak structure matches every weighted pool it will be asked to sample.
    pub fn from_grid_pool(grid: &GridPool) -> Self {
        let n = grid.pool.num_points();
        let ncols = grid.pool.num_columns() as f64;
        let log_unnorm: Vec<f64> = (0..n)
            .map(|i| grid.pool.log_q_row(i).iter().sum::<f64>() / ncols)
            .collect();
        Self::from_log_unnormalized(grid.pool.points().to_vec(), log_unnorm, grid.cell_area)
    }

    /// Uniform proposal over the covered cells.
    pub fn uniform_over(grid: &GridPool) -> Self {
        let n = grid.pool.num_points();
        let log_unnorm = vec![0.0; n];
        Self::from_log_unnormalized(grid.pool.points().to_vec(), log_unnorm, grid.cell_area)
    }

    fn from_log_unnormalized(points: Vec<Position3>, log_unnorm: Vec<f64>, cell_area: f64) -> Self {
        let m = log_unnorm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let masses: Vec<f64> = log_unnorm.iter().map(|&v| (v - m).exp()).collect();
        let total: f64 = masses.iter().sum();
        let log_total = total.ln();
        let log_mass: Vec<f64> = log_unnorm.iter().map(|&v| v - m - log_total).collect();
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &w in &masses {
            acc += w / total;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Self {
            points,
            log_mass,
            cum,
            cell_area,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.points.len()
    }

    /// Log of the continuous proposal density at cell `i` (mass over area).
    pub fn log_density(&self, i: usize) -> f64 {
        self.log_mass[i] - self.cell_area.ln()
    }

    pub fn log_mass(&self, i: usize) -> f64 {
        self.log_mass[i]
    }

    pub fn point(&self, i: usize) -> &Position3 {
        &self.points[i]
    }

    /// Index of the highest-mass cell (lowest index on ties).
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.log_mass.len() {
            if self.log_mass[i] > self.log_mass[best] {
                best = i;
            }
        }
        best
    }

    /// Draws `n` cell centers with replacement, categorical on the cell
    /// masses; each sample carries the proposal log density at its cell.
    pub fn draw_samples<R: Rng>(&self, n: usize, rng: &mut R) -> SampleSet {
        let mut indices = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n);
        let mut log_psi = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let idx = self.cum.partition_point(|&c| c <= u);
            let idx = idx.min(self.cum.len() - 1);
            indices.push(idx);
            points.push(self.points[idx]);
            log_psi.push(self.log_density(idx));
        }
        SampleSet {
            indices,
            points,
            log_psi,
        }
    }
}

/// Candidate positions drawn from a proposal, with the proposal log density
/// carried per sample.
#[derive(Debug, Clone)]
pub struct SampleSet {
    /// Grid cell index of each sample (into the proposal's cell list).
    pub indices: Vec<usize>,
    pub points: Vec<Position3>,
    pub log_psi: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the discretized proposal from scratch: evaluates the likelihood
/// columns on the region grid and pools them with equal weights.
pub fn build_is_pdf(columns: &[LikelihoodColumn], region: &SearchRegion) -> Result<DiscretizedPsi> {
    let grid = build_grid_pool(region, columns)?;
    Ok(DiscretizedPsi::from_grid_pool(&grid))
}

/// Evaluates likelihood columns at the sampled points, yielding the pool
/// the solver works on.
pub fn evaluate_samples(columns: &[LikelihoodColumn], samples: &SampleSet) -> Result<DiscretePool> {
    if samples.is_empty() {
        return Err(FusionError::EmptyRegion);
    }
    let ncols = columns.len();
    let mut log_q = Vec::with_capacity(samples.len() * ncols);
    for p in &samples.points {
        for c in columns {
            log_q.push(c.log_density(p)?);
        }
    }
    DiscretePool::new(samples.points.clone(), ncols, log_q, samples.log_psi.clone())
}

/// Value, gradient, and Hessian of the sampled objective at `w`.
///
/// With `r_i = exp(sum_j w_j log q_ij - log psi_i)`:
/// value `= sum_i r_i`, gradient_j `= sum_i r_i log q_ij`,
/// hessian_jm `= sum_i r_i log q_ij log q_im` (symmetric PSD).
/// Accumulation is in a fixed order so results are reproducible.
pub fn objective_grad_hess(
    pool: &DiscretePool,
    w: &WeightVector,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let ncols = pool.num_columns();
    if w.len() != ncols {
        return Err(FusionError::ShapeMismatch {
            expected: ncols,
            got: w.len(),
        });
    }
    let mut value = 0.0;
    let mut grad = DVector::zeros(ncols);
    let mut hess = DMatrix::zeros(ncols, ncols);
    for i in 0..pool.num_points() {
        let row = pool.log_q_row(i);
        let mut s = -pool.log_psi(i);
        for j in 0..ncols {
            s += w[j] * row[j];
        }
        let r = s.exp();
        value += r;
        for j in 0..ncols {
            grad[j] += r * row[j];
            for k in j..ncols {
                hess[(j, k)] += r * row[j] * row[k];
            }
        }
    }
    for j in 0..ncols {
        for k in 0..j {
            hess[(j, k)] = hess[(k, j)];
        }
    }
    Ok((value, grad, hess))
}

/// Per-iteration solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStat {
    pub objective: f64,
    pub step_norm: f64,
    pub alpha: f64,
}

/// Result of a weight solve.
#[derive(Debug, Clone)]
pub struct WeightSolution {
    pub w_star: WeightVector,
    pub iterations: usize,
    pub gci_at_solution: f64,
    pub converged: bool,
    /// One entry per Newton iteration, for convergence plots.
    pub trace: Vec<IterationStat>,
}

const MAX_BACKTRACKS: usize = 60;
const MAX_RIDGE_ESCALATIONS: usize = 60;

/// Minimizes the sampled objective over the weight simplex starting from
/// equal weights.
///
/// Each iteration takes a ridge-regularized Newton step, backtracks the step
/// scale until the projected candidate does not increase the objective, then
/// clamps negatives to zero and renormalizes. Stops when the iterate moves
/// less than `cfg.epsilon` or after `cfg.max_iters` iterations.
pub fn solve_weights(pool: &DiscretePool, cfg: &IsConfig) -> Result<WeightSolution> {
    cfg.validate(2)?;
    let ncols = pool.num_columns();
    let mut w = WeightVector::equal(ncols);
    let mut f = pooling::sampled_objective(pool, &w)?;
    let mut trace: Vec<IterationStat> = Vec::new();
    let mut converged = false;

    while trace.len() < cfg.max_iters {
        let (_, grad, hess) = objective_grad_hess(pool, &w)?;
        if grad.norm() == 0.0 {
            trace.push(IterationStat {
                objective: f,
                step_norm: 0.0,
                alpha: 0.0,
            });
            converged = true;
            break;
        }

        // Ridge-regularized Newton direction. The ridge escalates both on
        // factorization failure and on an unreliable solve (large residual),
        // which happens when the Hessian is near-singular along a plateau
        // direction; an unchecked direction there is dominated by rounding
        // noise.
        let base_ridge = cfg.hessian_ridge + 1e-12 * hess.trace() / ncols as f64;
        let mut ridge = base_ridge;
        let mut escalations = 0;
        let direction = loop {
            let mut regularized = hess.clone();
            for j in 0..ncols {
                regularized[(j, j)] += ridge;
            }
            if let Some(chol) = regularized.clone().cholesky() {
                let d = chol.solve(&grad);
                let residual = (&regularized * &d - &grad).norm();
                if residual <= 1e-8 * grad.norm() {
                    break d;
                }
            }
            escalations += 1;
            if escalations > MAX_RIDGE_ESCALATIONS {
                return Err(FusionError::NonConvergence {
                    iterations: trace.len(),
                    message: format!(
                        "Hessian factorization failed at ridge {ridge:e} (trace {:e})",
                        hess.trace()
                    ),
                });
            }
            ridge = if ridge > 0.0 { ridge * 10.0 } else { 1e-300 };
        };

        // Backtracking line search on the projected candidate. Only a
        // measurable decrease is accepted: a candidate that merely matches
        // the objective (flat pool, or improvement below float precision)
        // means the current iterate is already optimal, and moving to it
        // would let plateau noise walk the weights around.
        let mut alpha = cfg.damping;
        let mut accepted: Option<(WeightVector, f64, f64)> = None;
        for _ in 0..MAX_BACKTRACKS {
            let raw: Vec<f64> = (0..ncols).map(|j| w[j] - alpha * direction[j]).collect();
            if let Some(candidate) = WeightVector::project(&raw) {
                let fc = pooling::sampled_objective(pool, &candidate)?;
                if fc < f * (1.0 - 1e-12) {
                    accepted = Some((candidate, fc, alpha));
                    break;
                }
            }
            alpha *= 0.5;
        }

        match accepted {
            None => {
                // No step scale improves the objective: numerically optimal.
                trace.push(IterationStat {
                    objective: f,
                    step_norm: 0.0,
                    alpha: 0.0,
                });
                converged = true;
                break;
            }
            Some((w_next, f_next, alpha_used)) => {
                let step_norm = w
                    .as_slice()
                    .iter()
                    .zip(w_next.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                trace.push(IterationStat {
                    objective: f_next,
                    step_norm,
                    alpha: alpha_used,
                });
                w = w_next;
                f = f_next;
                if step_norm < cfg.epsilon {
                    converged = true;
                    break;
                }
            }
        }
    }

    let gci_at_solution = pooling::gci(pool, &w)?;
    Ok(WeightSolution {
        iterations: trace.len(),
        w_star: w,
        gci_at_solution,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Hexagon;
    use crate::likelihood::{AoaLikelihood, ToaLikelihood};
    use crate::pooling::{gci, sampled_objective};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_points(n: usize) -> Vec<Position3> {
        (0..n).map(|i| Position3::new(i as f64, 0.0, 0.0)).collect()
    }

    fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
        let t = (x - mu) / sigma;
        -0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln() - 0.5 * t * t
    }

    /// Quadrature pool of 1-D Gaussian experts on a uniform grid.
    fn gaussian_grid_pool(means: &[f64], lo: f64, hi: f64, n: usize) -> DiscretePool {
        let width = hi - lo;
        let h = width / n as f64;
        let mut points = Vec::with_capacity(n);
        let mut log_q = Vec::with_capacity(n * means.len());
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            points.push(Position3::new(x, 0.0, 0.0));
            for &mu in means {
                log_q.push(log_normal(x, mu, 1.0));
            }
        }
        DiscretePool::new(points, means.len(), log_q, vec![-width.ln(); n]).unwrap()
    }

    fn random_pool(rng: &mut ChaCha8Rng, n: usize, ncols: usize) -> DiscretePool {
        let log_q: Vec<f64> = (0..n * ncols).map(|_| -4.0 * rng.random::<f64>()).collect();
        let log_psi: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        DiscretePool::new(flat_points(n), ncols, log_q, log_psi).unwrap()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
        let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
        WeightVector::project(&raw).unwrap()
    }

    #[test]
    fn is_pdf_single_station_is_mean_of_logs() {
        let station = Position3::new(0.0, 0.0, 10.0);
        let columns = vec![
            LikelihoodColumn::Toa(ToaLikelihood::new(station, 20.0, 1.0).unwrap()),
            LikelihoodColumn::Aoa(
                AoaLikelihood::new(
                    station,
                    crate::geom::DirectionUnit::from_components(1.0, 0.2, -0.1).unwrap(),
                    10.0,
                )
                .unwrap(),
            ),
        ];
        let region = SearchRegion::new(-30.0, 30.0, -30.0, 30.0, 1.0, 24, 24).unwrap();
        let grid = build_grid_pool(&region, &columns).unwrap();
        let psi = DiscretizedPsi::from_grid_pool(&grid);
        // Up to a common normalization constant, log mass = mean of log columns.
        let raw =
            |i: usize| -> f64 { grid.pool.log_q_row(i).iter().sum::<f64>() / 2.0 };
        let shift = psi.log_mass(0) - raw(0);
        for i in [1, 7, 100, 500] {
            assert_relative_eq!(psi.log_mass(i) - raw(i), shift, epsilon = 1e-10);
        }
    }

    #[test]
    fn is_pdf_identical_columns_proportional_to_likelihood() {
        let station = Position3::new(0.0, 0.0, 10.0);
        let toa = ToaLikelihood::new(station, 15.0, 1.0).unwrap();
        let columns = vec![LikelihoodColumn::Toa(toa), LikelihoodColumn::Toa(toa)];
        let region = SearchRegion::new(-30.0, 30.0, -30.0, 30.0, 1.0, 32, 32).unwrap();
        let grid = build_grid_pool(&region, &columns).unwrap();
        let psi = DiscretizedPsi::from_grid_pool(&grid);
        let shift = psi.log_mass(3) - grid.pool.log_q_row(3)[0];
        for i in [10, 200, 700] {
            assert_relative_eq!(
                psi.log_mass(i) - grid.pool.log_q_row(i)[0],
                shift,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn is_pdf_mode_matches_equal_weight_estimate() {
        // Three stations, noisy-ish observations: the proposal mode and the
        // equal-weight argmax maximize the same grid function.
        let stations = [
            Position3::new(0.0, 50.0, 10.0),
            Position3::new(-43.3, -25.0, 10.0),
            Position3::new(43.3, -25.0, 10.0),
        ];
        let target = Position3::new(6.0, -9.0, 1.0);
        let mut columns = Vec::new();
        for p in &stations {
            let d = p.distance_to(&target) + 0.4;
            columns.push(LikelihoodColumn::Toa(ToaLikelihood::new(*p, d, 1.0).unwrap()));
            let u = crate::geom::direction_between(p, &target).unwrap();
            columns.push(LikelihoodColumn::Aoa(AoaLikelihood::new(*p, u, 10.0).unwrap()));
        }
        let region =
            SearchRegion::from_hexagon(Hexagon::new(50.0).unwrap(), 1.0, 96, 96).unwrap();
        let grid = build_grid_pool(&region, &columns).unwrap();
        let psi = DiscretizedPsi::from_grid_pool(&grid);
        let est = crate::estimator::estimate_p3(
            &grid.pool,
            &WeightVector::equal(6),
            crate::estimator::Method::EwHybrid,
        )
        .unwrap();
        let mode = psi.point(psi.mode_index());
        let two_cells = 2.0 * grid.cell_diagonal;
        assert!(mode.horizontal_distance_to(&est.position) <= two_cells);
    }

    #[test]
    fn draw_samples_uniform_frequencies() {
        let points = flat_points(4);
        let psi = DiscretizedPsi::from_log_unnormalized(points, vec![0.0; 4], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let samples = psi.draw_samples(n, &mut rng);
        let mut counts = [0usize; 4];
        for &i in &samples.indices {
            counts[i] += 1;
        }
        for c in counts {
            assert_relative_eq!(c as f64 / n as f64, 0.25, epsilon = 0.01);
        }
    }

    #[test]
    fn draw_samples_point_mass() {
        let points = flat_points(3);
        let psi = DiscretizedPsi::from_log_unnormalized(points, vec![-900.0, 0.0, -900.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let samples = psi.draw_samples(500, &mut rng);
        assert!(samples.indices.iter().all(|&i| i == 1));
    }

    #[test]
    fn draw_samples_categorical_frequencies() {
        let points = flat_points(4);
        let masses: Vec<f64> = [0.1f64, 0.2, 0.3, 0.4].iter().map(|m| m.ln()).collect();
        let psi = DiscretizedPsi::from_log_unnormalized(points, masses, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 100_000;
        let samples = psi.draw_samples(n, &mut rng);
        let mut counts = [0usize; 4];
        for &i in &samples.indices {
            counts[i] += 1;
        }
        for (c, expect) in counts.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert_relative_eq!(*c as f64 / n as f64, expect, epsilon = 0.01);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-6;
        for _ in 0..20 {
            let ncols = 2 + (rng.random::<f64>() * 4.0) as usize;
            let pool = random_pool(&mut rng, 40, ncols);
            let w = random_simplex(&mut rng, ncols);
            let (value, grad, _) = objective_grad_hess(&pool, &w).unwrap();
            assert!(value > 0.0);
            for j in 0..ncols {
                let mut wp = w.as_slice().to_vec();
                let mut wm = wp.clone();
                wp[j] += h;
                wm[j] -= h;
                // Finite differences probe off the simplex; evaluate raw.
                let fp = raw_objective(&pool, &wp);
                let fm = raw_objective(&pool, &wm);
                let fd = (fp - fm) / (2.0 * h);
                assert_relative_eq!(grad[j], fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = 1e-6;
        for _ in 0..20 {
            let ncols = 2 + (rng.random::<f64>() * 3.0) as usize;
            let pool = random_pool(&mut rng, 30, ncols);
            let w = random_simplex(&mut rng, ncols);
            let (_, _, hess) = objective_grad_hess(&pool, &w).unwrap();
            for m in 0..ncols {
                let mut wp = w.as_slice().to_vec();
                let mut wm = wp.clone();
                wp[m] += h;
                wm[m] -= h;
                let gp = raw_gradient(&pool, &wp);
                let gm = raw_gradient(&pool, &wm);
                for j in 0..ncols {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert_relative_eq!(hess[(j, m)], fd, max_relative = 1e-4);
                }
            }
        }
    }

    fn raw_objective(pool: &DiscretePool, w: &[f64]) -> f64 {
        (0..pool.num_points())
            .map(|i| {
                let row = pool.log_q_row(i);
                let s: f64 =
                    row.iter().zip(w).map(|(l, wj)| l * wj).sum::<f64>() - pool.log_psi(i);
                s.exp()
            })
            .sum()
    }

    fn raw_gradient(pool: &DiscretePool, w: &[f64]) -> Vec<f64> {
        let ncols = pool.num_columns();
        let mut g = vec![0.0; ncols];
        for i in 0..pool.num_points() {
            let row = pool.log_q_row(i);
            let s: f64 = row.iter().zip(w).map(|(l, wj)| l * wj).sum::<f64>() - pool.log_psi(i);
            let r = s.exp();
            for j in 0..ncols {
                g[j] += r * row[j];
            }
        }
        g
    }

    #[test]
    fn degenerate_single_sample_pool() {
        let pool = DiscretePool::new(flat_points(1), 2, vec![0.0, 0.0], vec![0.7]).unwrap();
        let w = WeightVector::equal(2);
        let (value, grad, hess) = objective_grad_hess(&pool, &w).unwrap();
        assert_relative_eq!(value, (-0.7f64).exp(), max_relative = 1e-12);
        assert_eq!(grad.as_slice(), &[0.0, 0.0]);
        assert!(hess.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_flat_pool_keeps_equal_weights() {
        // Identical columns: the objective is constant on the simplex.
        let n = 16;
        let col: Vec<f64> = (0..n).map(|i| -0.1 * i as f64).collect();
        let mut log_q = Vec::new();
        for &v in &col {
            log_q.extend_from_slice(&[v, v, v, v]);
        }
        let pool = DiscretePool::new(flat_points(n), 4, log_q, vec![0.0; n]).unwrap();
        let sol = solve_weights(&pool, &IsConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 2, "took {} iterations", sol.iterations);
        for &v in sol.w_star.as_slice() {
            assert_relative_eq!(v, 0.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn solve_two_gaussians_balances_weights() {
        let pool = gaussian_grid_pool(&[0.0, 2.0], -10.0, 12.0, 3000);
        let sol = solve_weights(&pool, &IsConfig::default()).unwrap();
        assert!(sol.converged);
        assert_relative_eq!(sol.w_star[0], 0.5, epsilon = 1e-3);
        assert_relative_eq!(sol.w_star[1], 0.5, epsilon = 1e-3);
    }

    #[test]
    fn solve_three_gaussians_symmetric_pair() {
        let pool = gaussian_grid_pool(&[0.0, 0.0, 3.0], -10.0, 13.0, 3000);
        let sol = solve_weights(&pool, &IsConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(
            (sol.w_star[0] - sol.w_star[1]).abs() <= 1e-3,
            "identical experts got {} vs {}",
            sol.w_star[0],
            sol.w_star[1]
        );
    }

    #[test]
    fn solve_monotone_objective_and_simplex_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let ncols = 2 + (rng.random::<f64>() * 4.0) as usize;
            let pool = random_pool(&mut rng, 60, ncols);
            let sol = solve_weights(&pool, &IsConfig::default()).unwrap();
            let sum: f64 = sol.w_star.as_slice().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(sol.w_star.as_slice().iter().all(|&v| v >= 0.0));
            for pair in sol.trace.windows(2) {
                assert!(pair[1].objective <= pair[0].objective * (1.0 + 1e-12));
            }
            let equal = WeightVector::equal(ncols);
            assert!(sol.gci_at_solution >= gci(&pool, &equal).unwrap() - 1e-9);
            assert_relative_eq!(
                sol.gci_at_solution,
                gci(&pool, &sol.w_star).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let pool = random_pool(&mut rng, 80, 6);
        let a = solve_weights(&pool, &IsConfig::default()).unwrap();
        let b = solve_weights(&pool, &IsConfig::default()).unwrap();
        assert_eq!(a.w_star.as_slice(), b.w_star.as_slice());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn solve_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let pool = random_pool(&mut rng, 50, 3);
        let perm = [2usize, 0, 1];
        let permuted = pool.select_columns(&perm).unwrap();
        let a = solve_weights(&pool, &IsConfig::default()).unwrap();
        let b = solve_weights(&permuted, &IsConfig::default()).unwrap();
        for (j, &pj) in perm.iter().enumerate() {
            assert_relative_eq!(b.w_star[j], a.w_star[pj], epsilon = 1e-6);
        }
    }

    #[test]
    fn solve_objective_decreases_from_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let pool = random_pool(&mut rng, 64, 4);
        let equal = WeightVector::equal(4);
        let f0 = sampled_objective(&pool, &equal).unwrap();
        let sol = solve_weights(&pool, &IsConfig::default()).unwrap();
        let f_star = sampled_objective(&pool, &sol.w_star).unwrap();
        assert!(f_star <= f0 * (1.0 + 1e-12));
    }

    #[test]
    fn config_validation() {
        let mut cfg = IsConfig::default();
        assert!(cfg.validate(6).is_ok());
        cfg.num_samples = 3;
        assert!(cfg.validate(6).is_err());
        cfg = IsConfig { epsilon: 0.0, ..IsConfig::default() };
        assert!(cfg.validate(2).is_err());
        cfg = IsConfig { damping: 1.5, ..IsConfig::default() };
        assert!(cfg.validate(2).is_err());
        cfg = IsConfig { max_iters: 0, ..IsConfig::default() };
        assert!(cfg.validate(2).is_err());
    }
}
