//! Per-station range and bearing likelihoods, evaluated in log space.
//!
//! The range likelihood is a Gaussian in the measured distance; the bearing
//! likelihood is a von Mises-Fisher density in the unit direction from the
//! station to the candidate, with the printed normalizer 1/(2 pi I0(kappa)).
//! Everything downstream pools log densities, so only log values are exposed.

use crate::error::{FusionError, Result};
use crate::geom::{direction_between, DirectionUnit, Position3};
use crate::obsmodel::{BsProfile, Observation};

const LN_2PI: f64 = 1.8378770664093453;

/// Gaussian range likelihood for one station.
#[derive(Debug, Clone, Copy)]
pub struct ToaLikelihood {
    pub bs_position: Position3,
    pub d_hat: f64,
    pub sigma_d: f64,
    log_norm: f64,
}

impl ToaLikelihood {
    pub fn new(bs_position: Position3, d_hat: f64, sigma_d: f64) -> Result<Self> {
        if !(sigma_d > 0.0) || !sigma_d.is_finite() {
            return Err(FusionError::InvalidParameter {
                name: "sigma_d",
                message: format!("must be > 0 and finite, got {sigma_d}"),
            });
        }
        if !d_hat.is_finite() {
            return Err(FusionError::InvalidParameter {
                name: "d_hat",
                message: "must be finite".into(),
            });
        }
        Ok(Self {
            bs_position,
            d_hat,
            sigma_d,
            log_norm: 0.5 * (LN_2PI + 2.0 * sigma_d.ln()),
        })
    }

    /// Log density at `candidate`; maximized on the sphere at range `d_hat`.
    pub fn log_density(&self, candidate: &Position3) -> Result<f64> {
        let r = self.bs_position.distance_to(candidate);
        if r == 0.0 {
            return Err(FusionError::DegenerateGeometry);
        }
        let t = (self.d_hat - r) / self.sigma_d;
        Ok(-self.log_norm - 0.5 * t * t)
    }
}

/// Von Mises-Fisher bearing likelihood for one station.
#[derive(Debug, Clone, Copy)]
pub struct AoaLikelihood {
    pub bs_position: Position3,
    pub u_hat: DirectionUnit,
    pub kappa: f64,
    log_norm: f64,
}

impl AoaLikelihood {
    pub fn new(bs_position: Position3, u_hat: DirectionUnit, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(FusionError::InvalidParameter {
                name: "kappa",
                message: format!("must be > 0 and finite, got {kappa}"),
            });
        }
        Ok(Self {
            bs_position,
            u_hat,
            kappa,
            log_norm: LN_2PI + log_bessel_i0(kappa)?,
        })
    }

    /// Log density at `candidate`; maximized when the direction from the
    /// station to the candidate equals the observed one.
    pub fn log_density(&self, candidate: &Position3) -> Result<f64> {
        let u = direction_between(&self.bs_position, candidate)?;
        Ok(self.kappa * self.u_hat.dot(&u) - self.log_norm)
    }
}

/// One pooled likelihood column: either a range or a bearing density.
#[derive(Debug, Clone, Copy)]
pub enum LikelihoodColumn {
    Toa(ToaLikelihood),
    Aoa(AoaLikelihood),
}

impl LikelihoodColumn {
    pub fn log_density(&self, candidate: &Position3) -> Result<f64> {
        match self {
            LikelihoodColumn::Toa(l) => l.log_density(candidate),
            LikelihoodColumn::Aoa(l) => l.log_density(candidate),
        }
    }
}

/// Builds the interleaved [ToA_1, AoA_1, ..., ToA_K, AoA_K] column vector
/// for one observation per station.
pub fn build_columns(profiles: &[BsProfile], observations: &[Observation]) -> Result<Vec<LikelihoodColumn>> {
    if profiles.len() != observations.len() {
        return Err(FusionError::ShapeMismatch {
            expected: profiles.len(),
            got: observations.len(),
        });
    }
    let mut columns = Vec::with_capacity(2 * profiles.len());
    for (bs, obs) in profiles.iter().zip(observations) {
        columns.push(LikelihoodColumn::Toa(ToaLikelihood::new(
            bs.position,
            obs.d_hat,
            bs.sigma_d,
        )?));
        let u_hat = DirectionUnit::from_angles(obs.az_hat, obs.el_hat);
        columns.push(LikelihoodColumn::Aoa(AoaLikelihood::new(
            bs.position,
            u_hat,
            bs.kappa,
        )?));
    }
    Ok(columns)
}

/// log I0(kappa): modified Bessel function of the first kind, order zero,
/// in log space so large concentrations cannot overflow.
///
/// Uses the Cephes Chebyshev expansions of exp(-x) I0(x); relative accuracy
/// is ~1e-15 over [0, 500] and the large-argument branch is valid for all
/// finite kappa.
pub fn log_bessel_i0(kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(FusionError::InvalidParameter {
            name: "kappa",
            message: format!("log_bessel_i0 requires kappa >= 0, got {kappa}"),
        });
    }
    if kappa <= 8.0 {
        Ok(kappa + chbevl(kappa / 2.0 - 2.0, &BESSI0_COEFFS_A).ln())
    } else {
        Ok(kappa + chbevl(32.0 / kappa - 2.0, &BESSI0_COEFFS_B).ln() - 0.5 * kappa.ln())
    }
}

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for c in coeffs.iter().skip(1) {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, *c) - b2;
    }
    0.5 * (b0 - b2)
}

const BESSI0_COEFFS_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const BESSI0_COEFFS_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];
