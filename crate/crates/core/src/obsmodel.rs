//! Noisy, optionally biased range and bearing observation generation.
//!
//! Each station measures the distance to the target plus a non-negative
//! multipath bias and zero-mean Gaussian noise, and the azimuth/elevation
//! of the target plus independent zero-mean Gaussian angle noise. All draws
//! are functions of the supplied random stream only, so identically seeded
//! generators reproduce identical observation sequences.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{FusionError, Result};
use crate::geom::{direction_between, wrap_azimuth, Position3};

/// Range bias model for multipath-induced systematic error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasModel {
    /// No bias (line-of-sight only).
    None,
    /// Uniform draw in (lo, hi] meters.
    Uniform { lo: f64, hi: f64 },
    /// Exponential draw with the given mean, in meters.
    ExponentialDecay { mean: f64 },
    /// Fixed bias value in meters.
    Delta { value: f64 },
}

impl BiasModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BiasModel::None => Ok(()),
            BiasModel::Uniform { lo, hi } => {
                if !(0.0 <= lo && lo < hi) || !hi.is_finite() {
                    Err(FusionError::InvalidParameter {
                        name: "bias",
                        message: format!("uniform bias requires 0 <= lo < hi, got ({lo}, {hi})"),
                    })
                } else {
                    Ok(())
                }
            }
            BiasModel::ExponentialDecay { mean } => {
                if !(mean > 0.0) || !mean.is_finite() {
                    Err(FusionError::InvalidParameter {
                        name: "bias",
                        message: format!("exponential bias mean must be > 0, got {mean}"),
                    })
                } else {
                    Ok(())
                }
            }
            BiasModel::Delta { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    Err(FusionError::InvalidParameter {
                        name: "bias",
                        message: format!("delta bias must be >= 0, got {value}"),
                    })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Draw one bias value from the model.
///
/// The uniform model is sampled as `lo + (hi - lo) * (1 - u)` with
/// `u in [0, 1)`, so `lo` is excluded and `hi` attainable.
pub fn sample_bias<R: Rng>(model: &BiasModel, rng: &mut R) -> f64 {
    match *model {
        BiasModel::None => 0.0,
        BiasModel::Uniform { lo, hi } => lo + (hi - lo) * (1.0 - rng.random::<f64>()),
        BiasModel::ExponentialDecay { mean } => {
            let u: f64 = rng.random();
            -mean * (1.0 - u).ln()
        }
        BiasModel::Delta { value } => value,
    }
}

/// A base station's position plus its noise and bias characterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsProfile {
    pub id: u32,
    pub position: Position3,
    /// Range noise standard deviation (meters).
    pub sigma_d: f64,
    /// Azimuth noise standard deviation (radians).
    pub sigma_az: f64,
    /// Elevation noise standard deviation (radians).
    pub sigma_el: f64,
    /// Bearing likelihood concentration (dimensionless).
    pub kappa: f64,
    pub bias: BiasModel,
}

impl BsProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_d", self.sigma_d),
            ("sigma_az", self.sigma_az),
            ("sigma_el", self.sigma_el),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FusionError::InvalidParameter {
                    name,
                    message: format!("must be > 0 and finite, got {v}"),
                });
            }
        }
        if !self.position.is_finite() {
            return Err(FusionError::InvalidParameter {
                name: "position",
                message: "must be finite".into(),
            });
        }
        self.bias.validate()
    }
}

/// One station's measured (distance, azimuth, elevation) tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub bs_id: u32,
    /// Measured distance (meters), always positive.
    pub d_hat: f64,
    /// Measured azimuth (radians), in (-pi, pi].
    pub az_hat: f64,
    /// Measured elevation (radians), in [-pi/2, pi/2].
    pub el_hat: f64,
}

/// Generate one observation of `target` from station `bs`.
///
/// Draw order is fixed (bias, range noise, azimuth noise, elevation noise)
/// so a shared stream yields reproducible sequences. The measured distance
/// is clamped to stay positive.
pub fn observe<R: Rng>(bs: &BsProfile, target: &Position3, rng: &mut R) -> Result<Observation> {
    let direction = direction_between(&bs.position, target)?;
    let (az_true, el_true) = direction.to_angles();
    let d_true = bs.position.distance_to(target);

    let bias = sample_bias(&bs.bias, rng);
    let n_d = Normal::new(0.0, bs.sigma_d).expect("validated sigma").sample(rng);
    let n_az = Normal::new(0.0, bs.sigma_az).expect("validated sigma").sample(rng);
    let n_el = Normal::new(0.0, bs.sigma_el).expect("validated sigma").sample(rng);

    Ok(Observation {
        bs_id: bs.id,
        d_hat: (d_true + bias + n_d).max(f64::EPSILON),
        az_hat: wrap_azimuth(az_true + n_az),
        el_hat: (el_true + n_el).clamp(-FRAC_PI_2, FRAC_PI_2),
    })
}
