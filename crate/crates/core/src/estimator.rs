//! Grid-based position estimation from pooled log densities.
//!
//! The search space is a horizontal plane at the known target height,
//! discretized into nx-by-ny cells over a rectangle, optionally masked to
//! the hexagonal coverage. Estimates are the cell centers maximizing the
//! weighted sum of log-density columns, with ties broken by lowest linear
//! cell index so results are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::geom::{DirectionUnit, Hexagon, Position3};
use crate::likelihood::LikelihoodColumn;
use crate::obsmodel::{BsProfile, Observation};
use crate::pooling::{DiscretePool, WeightVector};

/// Rectangular search window at a fixed height, with grid resolution and an
/// optional hexagonal coverage mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_fixed: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Option<Hexagon>,
}

impl SearchRegion {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        z_fixed: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let region = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            z_fixed,
            nx,
            ny,
            mask: None,
        };
        region.validate()?;
        Ok(region)
    }

    /// Bounding rectangle of the hexagon, masked to its interior.
    pub fn from_hexagon(hex: Hexagon, z_fixed: f64, nx: usize, ny: usize) -> Result<Self> {
        let (x_min, x_max, y_min, y_max) = hex.bounding_rect();
        let mut region = Self::new(x_min, x_max, y_min, y_max, z_fixed, nx, ny)?;
        region.mask = Some(hex);
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(FusionError::InvalidParameter {
                name: "x_min",
                message: format!("requires x_min < x_max, got [{}, {}]", self.x_min, self.x_max),
            });
        }
        if !(self.y_min < self.y_max) {
            return Err(FusionError::InvalidParameter {
                name: "y_min",
                message: format!("requires y_min < y_max, got [{}, {}]", self.y_min, self.y_max),
            });
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(FusionError::InvalidParameter {
                name: "nx",
                message: format!("grid must be at least 2x2, got {}x{}", self.nx, self.ny),
            });
        }
        Ok(())
    }

    pub fn cell_dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn cell_dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_dx() * self.cell_dy()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_dx().hypot(self.cell_dy())
    }

    /// Centers of covered cells in row-major order (y outer, x inner);
    /// the position in this list is the linear cell index used for
    /// tie-breaking.
    pub fn covered_cell_centers(&self) -> Vec<Position3> {
        let dx = self.cell_dx();
        let dy = self.cell_dy();
        let mut centers = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            let y = self.y_min + (iy as f64 + 0.5) * dy;
            for ix in 0..self.nx {
                let x = self.x_min + (ix as f64 + 0.5) * dx;
                let covered = match &self.mask {
                    Some(hex) => hex.contains(x, y),
                    None => true,
                };
                if covered {
                    centers.push(Position3::new(x, y, self.z_fixed));
                }
            }
        }
        centers
    }
}

/// A discrete pool evaluated on a search grid, with the quadrature cell
/// geometry needed to treat it as an integral estimate.
#[derive(Debug, Clone)]
pub struct GridPool {
    pub pool: DiscretePool,
    pub cell_area: f64,
    pub cell_diagonal: f64,
}

impl GridPool {
    /// Restriction to a column subset; shares points and proposal.
    pub fn select_columns(&self, columns: &[usize]) -> Result<GridPool> {
        Ok(GridPool {
            pool: self.pool.select_columns(columns)?,
            cell_area: self.cell_area,
            cell_diagonal: self.cell_diagonal,
        })
    }
}

/// Evaluates every likelihood column at every covered cell center.
///
/// The resulting pool's proposal is the uniform density over the covered
/// area, so pooled integrals follow the usual Monte Carlo convention.
pub fn build_grid_pool(region: &SearchRegion, columns: &[LikelihoodColumn]) -> Result<GridPool> {
    region.validate()?;
    if columns.is_empty() {
        return Err(FusionError::EmptySelection);
    }
    let points = region.covered_cell_centers();
    if points.is_empty() {
        return Err(FusionError::EmptyRegion);
    }
    let n = points.len();
    let ncols = columns.len();
    let mut log_q = vec![0.0f64; n * ncols];

    let fill = |(row, point): (&mut [f64], &Position3)| -> Result<()> {
        for (j, c) in columns.iter().enumerate() {
            row[j] = c.log_density(point)?;
        }
        Ok(())
    };
    #[cfg(feature = "parallel")]
    log_q
        .par_chunks_mut(ncols)
        .zip(points.par_iter())
        .try_for_each(fill)?;
    #[cfg(not(feature = "parallel"))]
    log_q
        .chunks_mut(ncols)
        .zip(points.iter())
        .try_for_each(fill)?;

    let covered_area = region.cell_area() * n as f64;
    let log_psi = vec![-covered_area.ln(); n];
    Ok(GridPool {
        pool: DiscretePool::new(points, ncols, log_q, log_psi)?,
        cell_area: region.cell_area(),
        cell_diagonal: region.cell_diagonal(),
    })
}

/// Estimation method labels used throughout records and outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    OwHybrid,
    EwHybrid,
    ToaOnly,
    AoaOnly,
    SingleBs,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::OwHybrid,
        Method::EwHybrid,
        Method::ToaOnly,
        Method::AoaOnly,
        Method::SingleBs,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::OwHybrid => "OW-hybrid",
            Method::EwHybrid => "EW-hybrid",
            Method::ToaOnly => "ToA-only",
            Method::AoaOnly => "AoA-only",
            Method::SingleBs => "single-BS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = FusionError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ow-hybrid" => Ok(Method::OwHybrid),
            "ew-hybrid" => Ok(Method::EwHybrid),
            "toa-only" => Ok(Method::ToaOnly),
            "aoa-only" => Ok(Method::AoaOnly),
            "single-bs" => Ok(Method::SingleBs),
            other => Err(FusionError::UnknownMethod(other.to_string())),
        }
    }
}

/// A position estimate with its pooled log score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub position: Position3,
    pub log_score: f64,
    pub method: Method,
}

/// Argmax of `sum_j w_j log q_j` over the pool points under arbitrary
/// non-negative weights (not necessarily normalized). Ties break to the
/// lowest linear index.
pub fn estimate_with_raw_weights(
    pool: &DiscretePool,
    weights: &[f64],
    method: Method,
) -> Result<PositionEstimate> {
    if weights.len() != pool.num_columns() {
        return Err(FusionError::ShapeMismatch {
            expected: pool.num_columns(),
            got: weights.len(),
        });
    }
    let n = pool.num_points();
    if n == 0 {
        return Err(FusionError::EmptyRegion);
    }
    let score = |i: usize| -> (f64, usize) {
        let row = pool.log_q_row(i);
        let mut s = 0.0;
        for (j, &wj) in weights.iter().enumerate() {
            s += wj * row[j];
        }
        (s, i)
    };
    // Lexicographic max by (score, -index): a total order, so the parallel
    // reduction is deterministic regardless of split points.
    let better = |a: (f64, usize), b: (f64, usize)| -> (f64, usize) {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    let best = (0..n)
        .into_par_iter()
        .map(score)
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), better);
    #[cfg(not(feature = "parallel"))]
    let best = (0..n)
        .map(score)
        .fold((f64::NEG_INFINITY, usize::MAX), better);

    Ok(PositionEstimate {
        position: *pool.point(best.1),
        log_score: best.0,
        method,
    })
}

/// Fused maximum-likelihood estimate over all pool columns.
pub fn estimate_p3(pool: &DiscretePool, w: &WeightVector, method: Method) -> Result<PositionEstimate> {
    estimate_with_raw_weights(pool, w.as_slice(), method)
}

/// Estimate restricted to a column subset, with the weights renormalized
/// over that subset.
pub fn estimate_subset(
    pool: &DiscretePool,
    w: &WeightVector,
    columns: &[usize],
    method: Method,
) -> Result<PositionEstimate> {
    let sub = pool.select_columns(columns)?;
    let w_sub = w.restrict(columns)?;
    estimate_p3(&sub, &w_sub, method)
}

/// Closed-form single-station estimate: the measured range along the
/// measured bearing from the station. No pooled score exists for this
/// method, so `log_score` is 0.
pub fn estimate_single_bs(bs: &BsProfile, obs: &Observation) -> PositionEstimate {
    let dir = DirectionUnit::from_angles(obs.az_hat, obs.el_hat);
    let (ux, uy, uz) = dir.components();
    PositionEstimate {
        position: Position3::new(
            bs.position.x + obs.d_hat * ux,
            bs.position.y + obs.d_hat * uy,
            bs.position.z + obs.d_hat * uz,
        ),
        log_score: 0.0,
        method: Method::SingleBs,
    }
}
