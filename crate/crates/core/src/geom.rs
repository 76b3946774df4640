//! Coordinate and direction arithmetic shared by all other modules.
//!
//! Positions live in a local Cartesian frame (meters). Azimuth is measured
//! from the +x axis counterclockwise in the xy-plane, elevation from the
//! xy-plane toward +z. At the poles (|elevation| = pi/2) the azimuth is
//! reported as 0 so that conversions stay deterministic.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{FusionError, Result};

/// A point in the local Cartesian frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance to another point.
    pub fn distance_to(&self, other: &Position3) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        let dz = other.z - self.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance ignoring the z components.
    pub fn horizontal_distance_to(&self, other: &Position3) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// A unit vector; the constructor guarantees norm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionUnit {
    ux: f64,
    uy: f64,
    uz: f64,
}

impl DirectionUnit {
    /// Normalizes the given components. Errors when the norm vanishes.
    pub fn from_components(ux: f64, uy: f64, uz: f64) -> Result<Self> {
        let norm = (ux * ux + uy * uy + uz * uz).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(FusionError::DegenerateGeometry);
        }
        Ok(Self {
            ux: ux / norm,
            uy: uy / norm,
            uz: uz / norm,
        })
    }

    /// Direction with the given azimuth and elevation.
    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Self {
            ux: ce * ca,
            uy: ce * sa,
            uz: se,
        }
    }

    /// (azimuth, elevation) of this direction, azimuth in (-pi, pi],
    /// elevation in [-pi/2, pi/2]. Azimuth is 0 at the poles.
    pub fn to_angles(&self) -> (f64, f64) {
        let horiz = (self.ux * self.ux + self.uy * self.uy).sqrt();
        let elevation = self.uz.atan2(horiz);
        if horiz == 0.0 {
            return (0.0, if self.uz >= 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 });
        }
        let mut azimuth = self.uy.atan2(self.ux);
        if azimuth <= -PI {
            azimuth += 2.0 * PI;
        }
        (azimuth, elevation)
    }

    pub fn dot(&self, other: &DirectionUnit) -> f64 {
        self.ux * other.ux + self.uy * other.uy + self.uz * other.uz
    }

    pub fn components(&self) -> (f64, f64, f64) {
        (self.ux, self.uy, self.uz)
    }
}

/// Unit vector pointing from `from` to `to`. Errors on coincident points.
pub fn direction_between(from: &Position3, to: &Position3) -> Result<DirectionUnit> {
    DirectionUnit::from_components(to.x - from.x, to.y - from.y, to.z - from.z)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_azimuth(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Regular hexagon centered at the origin with a vertex on the +y axis.
///
/// Vertices sit at azimuths 30 + 60k degrees; the sensing coverage of the
/// default three-station layout is the inside of this hexagon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hexagon {
    pub circumradius: f64,
}

impl Hexagon {
    pub fn new(circumradius: f64) -> Result<Self> {
        if !(circumradius > 0.0) || !circumradius.is_finite() {
            return Err(FusionError::InvalidParameter {
                name: "circumradius",
                message: format!("must be positive and finite, got {circumradius}"),
            });
        }
        Ok(Self { circumradius })
    }

    /// Apothem (inradius): distance from the center to an edge midpoint.
    pub fn apothem(&self) -> f64 {
        self.circumradius * 3f64.sqrt() / 2.0
    }

    /// Axis-aligned bounding rectangle (x_min, x_max, y_min, y_max).
    pub fn bounding_rect(&self) -> (f64, f64, f64, f64) {
        let a = self.apothem();
        let r = self.circumradius;
        (-a, a, -r, r)
    }

    /// Point-in-hexagon test via the three edge-normal half-plane pairs.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let a = self.apothem();
        let s = 3f64.sqrt() / 2.0;
        x.abs() <= a && (0.5 * x + s * y).abs() <= a && (-0.5 * x + s * y).abs() <= a
    }

    /// Vertex position at the given azimuth (must be one of 30 + 60k degrees
    /// for the point to lie on the hexagon boundary).
    pub fn vertex_at(&self, azimuth: f64, z: f64) -> Position3 {
        Position3::new(
            self.circumradius * azimuth.cos(),
            self.circumradius * azimuth.sin(),
            z,
        )
    }

    /// Uniform draw over the hexagon interior by rejection from the
    /// bounding rectangle (acceptance ratio ~0.75).
    pub fn sample_uniform<R: rand::Rng>(&self, z: f64, rng: &mut R) -> Position3 {
        let (x0, x1, y0, y1) = self.bounding_rect();
        loop {
            let x = x0 + (x1 - x0) * rng.random::<f64>();
            let y = y0 + (y1 - y0) * rng.random::<f64>();
            if self.contains(x, y) {
                return Position3::new(x, y, z);
            }
        }
    }

    pub fn area(&self) -> f64 {
        1.5 * 3f64.sqrt() * self.circumradius * self.circumradius
    }
}
