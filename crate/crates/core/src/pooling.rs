//! Log-linear opinion pooling, generalized Chernoff information, and
//! divergence utilities over discretized densities.
//!
//! A [`DiscretePool`] holds candidate points with one log-density column per
//! pooled expert plus the log proposal density each point was drawn from.
//! Grid pools are represented as pools whose proposal is uniform over the
//! covered cells, so the same Monte Carlo estimate
//! `integral ~= (1/N) sum exp(pooled - log_psi)` serves both quadrature and
//! importance-sampled pools.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::geom::Position3;

/// Log-density entries more than this far below their column maximum are
/// clamped, keeping every pooled density strictly positive without letting
/// -inf poison gradients.
pub const LOG_FLOOR_DROP: f64 = 700.0;

/// Pooling weights on the probability simplex, ordered
/// [w_{1,ToA}, w_{1,AoA}, ..., w_{K,ToA}, w_{K,AoA}] for hybrid pools.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates non-negativity and unit sum (1e-9 tolerance).
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(FusionError::InvalidParameter {
                name: "weights",
                message: "must be non-empty".into(),
            });
        }
        let mut sum = 0.0;
        for &v in &w {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FusionError::InvalidParameter {
                    name: "weights",
                    message: format!("entries must be finite and >= 0, got {v}"),
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FusionError::InvalidParameter {
                name: "weights",
                message: format!("entries must sum to 1, got {sum}"),
            });
        }
        Ok(Self(w))
    }

    /// Equal weights 1/n.
    pub fn equal(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n.max(1)])
    }

    /// Clamps negatives to zero and renormalizes. Returns `None` when the
    /// clamped vector has no mass left.
    pub fn project(raw: &[f64]) -> Option<Self> {
        let clamped: Vec<f64> = raw.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let sum: f64 = clamped.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return None;
        }
        Some(Self(clamped.iter().map(|&v| v / sum).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Renormalized restriction to the selected entries.
    pub fn restrict(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(FusionError::EmptySelection);
        }
        let mut sub = Vec::with_capacity(columns.len());
        for &c in columns {
            let v = *self.0.get(c).ok_or(FusionError::ShapeMismatch {
                expected: self.0.len(),
                got: c + 1,
            })?;
            sub.push(v);
        }
        let sum: f64 = sub.iter().sum();
        if sum <= 0.0 {
            return Err(FusionError::InvalidParameter {
                name: "weights",
                message: "selected weights have zero total mass".into(),
            });
        }
        Ok(Self(sub.into_iter().map(|v| v / sum).collect()))
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Candidate points with per-point log-density columns and proposal values.
#[derive(Debug, Clone)]
pub struct DiscretePool {
    points: Vec<Position3>,
    ncols: usize,
    /// Row-major `(num_points x ncols)` log densities, floored per column.
    log_q: Vec<f64>,
    /// Log proposal density each point was drawn from (uniform density over
    /// the covered region for grid pools).
    log_psi: Vec<f64>,
}

impl DiscretePool {
    /// Builds a pool, applying the per-column log floor.
    pub fn new(
        points: Vec<Position3>,
        ncols: usize,
        mut log_q: Vec<f64>,
        log_psi: Vec<f64>,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 || ncols == 0 {
            return Err(FusionError::EmptyRegion);
        }
        if log_q.len() != n * ncols {
            return Err(FusionError::ShapeMismatch {
                expected: n * ncols,
                got: log_q.len(),
            });
        }
        if log_psi.len() != n {
            return Err(FusionError::ShapeMismatch {
                expected: n,
                got: log_psi.len(),
            });
        }
        for &v in &log_psi {
            if v.is_nan() || v == f64::INFINITY {
                return Err(FusionError::InvalidParameter {
                    name: "log_psi",
                    message: "entries must be finite or -inf-free".into(),
                });
            }
        }
        // Columnwise floor at (max - LOG_FLOOR_DROP).
        for j in 0..ncols {
            let mut maxv = f64::NEG_INFINITY;
            for i in 0..n {
                let v = log_q[i * ncols + j];
                if v.is_nan() || v == f64::INFINITY {
                    return Err(FusionError::InvalidParameter {
                        name: "log_q",
                        message: "entries must not be NaN or +inf".into(),
                    });
                }
                if v > maxv {
                    maxv = v;
                }
            }
            if maxv == f64::NEG_INFINITY {
                return Err(FusionError::InvalidParameter {
                    name: "log_q",
                    message: format!("column {j} is identically -inf"),
                });
            }
            let floor = maxv - LOG_FLOOR_DROP;
            for i in 0..n {
                let v = &mut log_q[i * ncols + j];
                if *v < floor {
                    *v = floor;
                }
            }
        }
        Ok(Self {
            points,
            ncols,
            log_q,
            log_psi,
        })
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_columns(&self) -> usize {
        self.ncols
    }

    pub fn point(&self, i: usize) -> &Position3 {
        &self.points[i]
    }

    pub fn points(&self) -> &[Position3] {
        &self.points
    }

    pub fn log_q_row(&self, i: usize) -> &[f64] {
        &self.log_q[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn log_psi(&self, i: usize) -> f64 {
        self.log_psi[i]
    }

    /// Pool restricted to the given columns (same points and proposal).
    pub fn select_columns(&self, columns: &[usize]) -> Result<DiscretePool> {
        if columns.is_empty() {
            return Err(FusionError::EmptySelection);
        }
        for &c in columns {
            if c >= self.ncols {
                return Err(FusionError::ShapeMismatch {
                    expected: self.ncols,
                    got: c + 1,
                });
            }
        }
        let n = self.num_points();
        let mut log_q = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            let row = self.log_q_row(i);
            for &c in columns {
                log_q.push(row[c]);
            }
        }
        DiscretePool::new(self.points.clone(), columns.len(), log_q, self.log_psi.clone())
    }

    /// Pool made of the given rows, with replacement, under a new proposal.
    pub fn gather(&self, indices: &[usize], log_psi: Vec<f64>) -> Result<DiscretePool> {
        if indices.len() != log_psi.len() {
            return Err(FusionError::ShapeMismatch {
                expected: indices.len(),
                got: log_psi.len(),
            });
        }
        let mut points = Vec::with_capacity(indices.len());
        let mut log_q = Vec::with_capacity(indices.len() * self.ncols);
        for &i in indices {
            points.push(self.points[i]);
            log_q.extend_from_slice(self.log_q_row(i));
        }
        DiscretePool::new(points, self.ncols, log_q, log_psi)
    }
}

/// Per-point weighted sum of log columns (the unnormalized log pool).
pub fn log_pool_unnormalized(pool: &DiscretePool, w: &WeightVector) -> Result<Vec<f64>> {
    if w.len() != pool.ncols {
        return Err(FusionError::ShapeMismatch {
            expected: pool.ncols,
            got: w.len(),
        });
    }
    let ncols = pool.ncols;
    let ws = w.as_slice();
    let score = |row: &[f64]| -> f64 {
        let mut s = 0.0;
        for j in 0..ncols {
            s += ws[j] * row[j];
        }
        s
    };
    #[cfg(feature = "parallel")]
    let out = pool.log_q.par_chunks(ncols).map(score).collect();
    #[cfg(not(feature = "parallel"))]
    let out = pool.log_q.chunks(ncols).map(score).collect();
    Ok(out)
}

/// Importance-sampled estimate of the pooled-density integral, up to the
/// 1/N Monte Carlo factor: `sum_i exp(pooled_i - log_psi_i)`.
///
/// Computed with max-subtraction; strictly positive for finite pools.
pub fn sampled_objective(pool: &DiscretePool, w: &WeightVector) -> Result<f64> {
    Ok(log_sampled_objective(pool, w)?.exp())
}

/// Log of [`sampled_objective`], the numerically stable form.
pub fn log_sampled_objective(pool: &DiscretePool, w: &WeightVector) -> Result<f64> {
    let pooled = log_pool_unnormalized(pool, w)?;
    let mut m = f64::NEG_INFINITY;
    for (s, &lp) in pooled.iter().zip(&pool.log_psi) {
        let v = s - lp;
        if v > m {
            m = v;
        }
    }
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut acc = 0.0;
    for (s, &lp) in pooled.iter().zip(&pool.log_psi) {
        acc += (s - lp - m).exp();
    }
    Ok(m + acc.ln())
}

/// Generalized Chernoff information of the pool under weights `w`:
/// the negative log of the integral estimate of the weighted geometric
/// mean of the pooled densities.
pub fn gci(pool: &DiscretePool, w: &WeightVector) -> Result<f64> {
    let log_integral = log_sampled_objective(pool, w)? - (pool.num_points() as f64).ln();
    Ok(-log_integral)
}

/// `sum_i p_i ln(p_i / q_i)` over a shared finite support, in nats.
///
/// Both arguments must be normalized; `q` must be positive wherever `p`
/// has mass.
pub fn discrete_kld(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(FusionError::ShapeMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    for (name, dist) in [("p", p), ("q", q)] {
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || dist.iter().any(|&v| !(v >= 0.0)) {
            return Err(FusionError::InvalidParameter {
                name,
                message: format!("must be a normalized distribution (sum {sum})"),
            });
        }
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(FusionError::SupportViolation);
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Residual of the divergence decomposition of the normalized log-linear
/// pool: the divergence of the pooled density from `p` equals the sum of
/// the per-expert divergences of the weight-powered experts, plus
/// `(1 - num_experts) * sum p ln p`, minus the discrete Chernoff term
/// `-ln sum_i prod_j q_ji^{w_j}`. Self-test only; the residual is float
/// noise when the inputs are exact.
pub fn verify_decomposition(experts: &[Vec<f64>], w: &WeightVector, p: &[f64]) -> Result<f64> {
    if experts.is_empty() {
        return Err(FusionError::EmptySelection);
    }
    if w.len() != experts.len() {
        return Err(FusionError::ShapeMismatch {
            expected: experts.len(),
            got: w.len(),
        });
    }
    let m = p.len();
    for q in experts {
        if q.len() != m {
            return Err(FusionError::ShapeMismatch {
                expected: m,
                got: q.len(),
            });
        }
    }

    // Normalized log-linear pool over the shared support.
    let mut log_pool = vec![0.0; m];
    for (j, q) in experts.iter().enumerate() {
        for i in 0..m {
            if q[i] <= 0.0 {
                return Err(FusionError::SupportViolation);
            }
            log_pool[i] += w[j] * q[i].ln();
        }
    }
    let z: f64 = log_pool.iter().map(|&v| v.exp()).sum();
    let pooled: Vec<f64> = log_pool.iter().map(|&v| v.exp() / z).collect();

    let lhs = discrete_kld(p, &pooled)?;

    let num_experts = experts.len() as f64;
    let p_log_p: f64 = p.iter().filter(|&&pi| pi > 0.0).map(|&pi| pi * pi.ln()).sum();
    let mut per_expert = 0.0;
    for (j, q) in experts.iter().enumerate() {
        for i in 0..m {
            if p[i] > 0.0 {
                per_expert += p[i] * (p[i].ln() - w[j] * q[i].ln());
            }
        }
    }
    let chernoff = -z.ln();
    let rhs = per_expert + (1.0 - num_experts) * p_log_p - chernoff;

    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn flat_points(n: usize) -> Vec<Position3> {
        (0..n).map(|i| Position3::new(i as f64, 0.0, 0.0)).collect()
    }

    /// Uniform 1-D grid pool over [lo, hi] with the given log-density columns.
    fn grid_pool_1d(lo: f64, hi: f64, n: usize, columns: &[&dyn Fn(f64) -> f64]) -> DiscretePool {
        let width = hi - lo;
        let h = width / n as f64;
        let mut points = Vec::with_capacity(n);
        let mut log_q = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            points.push(Position3::new(x, 0.0, 0.0));
            for c in columns {
                log_q.push(c(x));
            }
        }
        let log_psi = vec![-width.ln(); n];
        DiscretePool::new(points, columns.len(), log_q, log_psi).unwrap()
    }

    fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
        let t = (x - mu) / sigma;
        -0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln() - 0.5 * t * t
    }

    #[test]
    fn pool_single_expert_weight_returns_column() {
        let n = 5;
        let log_q: Vec<f64> = (0..n * 2).map(|i| -(i as f64) * 0.3).collect();
        let pool =
            DiscretePool::new(flat_points(n), 2, log_q.clone(), vec![0.0; n]).unwrap();
        let w = WeightVector::new(vec![0.0, 1.0]).unwrap();
        let pooled = log_pool_unnormalized(&pool, &w).unwrap();
        for i in 0..n {
            assert_eq!(pooled[i], log_q[i * 2 + 1]);
        }
    }

    #[test]
    fn pool_identical_columns_any_weights() {
        let n = 4;
        let col: Vec<f64> = vec![-0.5, -1.0, -2.0, -0.1];
        let mut log_q = Vec::new();
        for &v in &col {
            log_q.extend_from_slice(&[v, v, v]);
        }
        let pool = DiscretePool::new(flat_points(n), 3, log_q, vec![0.0; n]).unwrap();
        let w = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let pooled = log_pool_unnormalized(&pool, &w).unwrap();
        for i in 0..n {
            assert_relative_eq!(pooled[i], col[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn pool_geometric_mean() {
        let n = 3;
        let a = [-1.0, -2.0, -3.0];
        let b = [-4.0, -0.5, -1.5];
        let mut log_q = Vec::new();
        for i in 0..n {
            log_q.extend_from_slice(&[a[i], b[i]]);
        }
        let pool = DiscretePool::new(flat_points(n), 2, log_q, vec![0.0; n]).unwrap();
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let pooled = log_pool_unnormalized(&pool, &w).unwrap();
        for i in 0..n {
            assert_relative_eq!(pooled[i], 0.5 * (a[i] + b[i]), max_relative = 1e-12);
        }
    }

    #[test]
    fn objective_ratio_one_per_sample() {
        // Every column equals the proposal pointwise: each ratio is 1.
        let n = 7;
        let psi: Vec<f64> = (0..n).map(|i| -0.2 * i as f64).collect();
        let mut log_q = Vec::new();
        for &v in &psi {
            log_q.extend_from_slice(&[v, v]);
        }
        let pool = DiscretePool::new(flat_points(n), 2, log_q, psi).unwrap();
        for w in [
            WeightVector::equal(2),
            WeightVector::new(vec![0.3, 0.7]).unwrap(),
        ] {
            let obj = sampled_objective(&pool, &w).unwrap();
            assert_relative_eq!(obj, n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn objective_single_point_identity() {
        let pool =
            DiscretePool::new(flat_points(1), 1, vec![-1.25], vec![-1.25]).unwrap();
        let w = WeightVector::equal(1);
        assert_relative_eq!(sampled_objective(&pool, &w).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn objective_matches_bhattacharyya_integral() {
        // integral sqrt(q1 q2) = exp(-delta^2 / 8) for unit-variance Gaussians.
        let delta = 2.0;
        let n = 4000;
        let lo = -10.0;
        let hi = 12.0;
        let h = (hi - lo) / n as f64;
        // psi proportional to 1 (log_psi = 0): objective * cellwidth approximates
        // the integral.
        let mut log_q = Vec::with_capacity(2 * n);
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            points.push(Position3::new(x, 0.0, 0.0));
            log_q.push(log_normal(x, 0.0, 1.0));
            log_q.push(log_normal(x, delta, 1.0));
        }
        let pool = DiscretePool::new(points, 2, log_q, vec![0.0; n]).unwrap();
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let obj = sampled_objective(&pool, &w).unwrap();
        assert_relative_eq!(obj * h, (-delta * delta / 8.0).exp(), max_relative = 1e-3);
        assert_relative_eq!(obj * h, 0.6065306597126334, max_relative = 1e-3);
    }

    #[test]
    fn gci_identical_gaussians_is_zero() {
        let f = |x: f64| log_normal(x, 1.0, 1.0);
        let pool = grid_pool_1d(-9.0, 11.0, 4000, &[&f, &f]);
        for w in [
            WeightVector::equal(2),
            WeightVector::new(vec![0.7, 0.3]).unwrap(),
        ] {
            assert!(gci(&pool, &w).unwrap().abs() < 1e-3);
        }
    }

    #[test]
    fn gci_two_gaussians_closed_form() {
        let delta = 2.0;
        let f = |x: f64| log_normal(x, 0.0, 1.0);
        let g = move |x: f64| log_normal(x, delta, 1.0);
        let pool = grid_pool_1d(-10.0, 12.0, 4000, &[&f, &g]);
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(gci(&pool, &w).unwrap(), delta * delta / 8.0, epsilon = 1e-2);
        // Degenerate weight on one normalized density.
        let w10 = WeightVector::new(vec![1.0, 0.0]).unwrap();
        assert!(gci(&pool, &w10).unwrap().abs() < 1e-3);
    }

    #[test]
    fn kld_examples() {
        assert_eq!(discrete_kld(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        let v = discrete_kld(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0 / 3.0f64).ln();
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert_relative_eq!(v, 0.14384103622589045, max_relative = 1e-10);
        let v = discrete_kld(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn kld_support_violation() {
        assert!(matches!(
            discrete_kld(&[0.5, 0.5], &[1.0, 0.0]),
            Err(FusionError::SupportViolation)
        ));
        assert!(discrete_kld(&[0.7, 0.7], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn decomposition_identical_experts() {
        let p = vec![0.2, 0.5, 0.3];
        let experts = vec![p.clone(), p.clone()];
        let w = WeightVector::equal(2);
        let lhs_rhs_gap = verify_decomposition(&experts, &w, &p).unwrap();
        assert!(lhs_rhs_gap < 1e-12);
        // Both sides individually zero: pool of p's is p.
        let pooled_kld = discrete_kld(&p, &p).unwrap();
        assert_eq!(pooled_kld, 0.0);
    }

    #[test]
    fn decomposition_fixed_instance() {
        let p = vec![0.1, 0.6, 0.3];
        let experts = vec![vec![0.3, 0.4, 0.3], vec![0.05, 0.15, 0.8]];
        let w = WeightVector::new(vec![0.3, 0.7]).unwrap();
        assert!(verify_decomposition(&experts, &w, &p).unwrap() <= 1e-9);
    }

    #[test]
    fn decomposition_single_expert() {
        let p = vec![0.25, 0.25, 0.5];
        let q = vec![0.4, 0.2, 0.4];
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(verify_decomposition(&[q], &w, &p).unwrap() <= 1e-9);
    }

    #[test]
    fn flooring_clamps_deep_tails() {
        // Rows: [0, -1e6], [-2, -0.5], [-900, -0.25].
        let n = 3;
        let log_q = vec![0.0, -1e6, -2.0, -0.5, -900.0, -0.25];
        let pool = DiscretePool::new(flat_points(n), 2, log_q, vec![0.0; n]).unwrap();
        // Column 0 max is 0.0, so the -900 entry clamps to -700.
        assert_eq!(pool.log_q_row(2)[0], -LOG_FLOOR_DROP);
        // Column 1 max is -0.25; -1e6 clamps to -700.25.
        assert_eq!(pool.log_q_row(0)[1], -0.25 - LOG_FLOOR_DROP);
        assert_eq!(pool.log_q_row(0)[0], 0.0);
        assert_eq!(pool.log_q_row(1)[0], -2.0);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![-0.1, 1.1]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![0.25; 4]).is_ok());
        assert!(WeightVector::project(&[-1.0, -2.0]).is_none());
        let p = WeightVector::project(&[-1.0, 3.0, 1.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.75, 0.25]);
    }

    fn arb_simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    fn arb_pool(n: usize, ncols: usize) -> impl Strategy<Value = DiscretePool> {
        (
            proptest::collection::vec(-4.0f64..0.0, n * ncols),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(log_q, log_psi)| {
                DiscretePool::new(flat_points(n), ncols, log_q, log_psi).unwrap()
            })
    }

    proptest! {
        /// Convexity of the sampled objective on the simplex.
        #[test]
        fn objective_convex_on_simplex(
            pool in arb_pool(24, 3),
            w1 in arb_simplex(3),
            w2 in arb_simplex(3),
            t in 0.05f64..0.95,
        ) {
            let wa = WeightVector::new(w1.clone()).unwrap();
            let wb = WeightVector::new(w2.clone()).unwrap();
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let wm = WeightVector::new(mix).unwrap();
            let fa = sampled_objective(&pool, &wa).unwrap();
            let fb = sampled_objective(&pool, &wb).unwrap();
            let fm = sampled_objective(&pool, &wm).unwrap();
            prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-9 * (1.0 + fa + fb));
        }

        /// Permuting columns and weights together leaves gci unchanged.
        #[test]
        fn gci_permutation_equivariant(pool in arb_pool(20, 3), w in arb_simplex(3)) {
            let perm = [2usize, 0, 1];
            let wv = WeightVector::new(w.clone()).unwrap();
            let permuted_pool = pool.select_columns(&perm).unwrap();
            let wp = WeightVector::new(perm.iter().map(|&j| w[j]).collect()).unwrap();
            let a = gci(&pool, &wv).unwrap();
            let b = gci(&permuted_pool, &wp).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        /// Shifting log_psi by a constant scales the objective by exp(-c),
        /// so argmin over weights is unchanged.
        #[test]
        fn objective_psi_shift_scales_uniformly(
            pool in arb_pool(16, 2),
            w in arb_simplex(2),
            c in -3.0f64..3.0,
        ) {
            let wv = WeightVector::new(w).unwrap();
            let shifted = DiscretePool::new(
                pool.points().to_vec(),
                pool.num_columns(),
                (0..pool.num_points())
                    .flat_map(|i| pool.log_q_row(i).to_vec())
                    .collect(),
                (0..pool.num_points()).map(|i| pool.log_psi(i) + c).collect(),
            )
            .unwrap();
            let a = sampled_objective(&pool, &wv).unwrap();
            let b = sampled_objective(&shifted, &wv).unwrap();
            prop_assert!((b - a * (-c).exp()).abs() <= 1e-9 * a.max(1.0));
        }

        /// Random small decomposition instances hold to float precision.
        #[test]
        fn decomposition_random_instances(
            raw_p in arb_simplex(4),
            raw_q1 in arb_simplex(4),
            raw_q2 in arb_simplex(4),
            raw_q3 in arb_simplex(4),
            w in arb_simplex(3),
        ) {
            let wv = WeightVector::new(w).unwrap();
            let residual = verify_decomposition(&[raw_q1, raw_q2, raw_q3], &wv, &raw_p).unwrap();
            prop_assert!(residual <= 1e-9);
        }
    }
}
