//! Scalar Gaussian primitives: the standard normal CDF, density and
//! quantile, and sampling from half-line truncated normals.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::distr::Open01;
use rand::Rng;

use crate::{Error, Result};

/// Kept tail mass below which truncated sampling switches from the inverse
/// CDF to exponential-proposal rejection.
pub const TAIL_SWITCH_MASS: f64 = 1e-6;

/// A univariate normal `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gaussian1D {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::domain("gaussian mean must be finite"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain("gaussian variance must be positive and finite"));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, variance: 1.0 }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

/// Which half-line a truncated draw lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Phi(x)`, the standard normal CDF, via the complementary error function.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("std_normal_cdf needs a finite argument"));
    }
    Ok(phi(x))
}

pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

// Wichura, Algorithm AS 241 (PPND16).
#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Inverse of the standard normal CDF on `(0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("quantile needs a probability strictly inside (0, 1)"));
    }
    Ok(quantile(p))
}

#[inline]
fn quantile(p: f64) -> f64 {
    let x = ppnd16(p);
    // One Newton step against erfc cleans up the last few ulps in the centre.
    let dens = std_normal_pdf(x);
    if dens > 1e-300 && p > 1e-300 && p < 0.5 {
        x - (phi(x) - p) / dens
    } else {
        x
    }
}

/// Upper tail mass `1 - Phi(a)` without cancellation.
#[inline]
pub(crate) fn upper_tail(a: f64) -> f64 {
    phi(-a)
}

/// Draws `z ~ N(0, 1)` conditioned on `z > a`.
pub(crate) fn sample_std_above<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let kept = upper_tail(a);
    loop {
        let z = if kept < TAIL_SWITCH_MASS {
            robert_tail(a, rng)
        } else if a < 0.0 {
            let u: f64 = rng.sample(Open01);
            let p = phi(a) + u * kept;
            if p >= 1.0 {
                continue;
            }
            quantile(p)
        } else {
            let u: f64 = rng.sample(Open01);
            -quantile(u * kept)
        };
        if z > a && z.is_finite() {
            return z;
        }
    }
}

// Robert (1995): translated-exponential proposal with the optimal rate.
fn robert_tail<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (a + libm::sqrt(a * a + 4.0));
    loop {
        let u1: f64 = rng.sample(Open01);
        let z = a - libm::log(u1) / rate;
        let u2: f64 = rng.sample(Open01);
        let d = z - rate;
        if u2 <= libm::exp(-0.5 * d * d) {
            return z;
        }
    }
}

/// Draws from `N(mean, variance)` restricted to the half-line selected by
/// `sign`. The result is always strictly on that side of zero.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    variance: f64,
    sign: Sign,
    rng: &mut R,
) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::domain("truncated normal variance must be positive and finite"));
    }
    if !mean.is_finite() {
        return Err(Error::domain("truncated normal mean must be finite"));
    }
    let sd = libm::sqrt(variance);
    let s = sign.value();
    let a = -s * mean / sd;
    loop {
        let z = sample_std_above(a, rng);
        // Distance from the boundary, sd * (z - a), stays exact near zero.
        let y = sd * (z - a);
        if y > 0.0 && y.is_finite() {
            return Ok(s * y);
        }
    }
}
