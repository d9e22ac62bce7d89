//! Tail-accurate normal distribution functions.
//!
//! Everything here is built on a single scaled complementary error function
//! `erfcx(x) = exp(x²)·erfc(x)` (W. J. Cody's rational Chebyshev
//! approximations). The lower tail of the normal distribution is always formed
//! as `φ(x)·R(-x)` so that probabilities far below `f64::EPSILON` keep full
//! relative accuracy, and the Mills ratio `R` is evaluated directly instead of
//! as a quotient of two underflowing quantities.
//!
//! The inverse normal distribution uses Wichura's AS241 (`PPND16`) rational
//! approximation, followed in the tails by one Halley step driven by the
//! Mills ratio.

use crate::error::{domain, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
#[allow(clippy::excessive_precision)]
pub const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_948_079_451_560_772_585_844_050_629_33;
#[allow(clippy::excessive_precision)]
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_868_475_858_631_16;
#[allow(clippy::excessive_precision)]
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_502_415_765_284_811_045_253_006_986_740_61;
#[allow(clippy::excessive_precision)]
pub const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_251_207_882_642_405_522_626_503_493_370_3;
/// `ln √(2π)`
#[allow(clippy::excessive_precision)]
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_617_639_861_397_473_64;

// Cody's interval boundaries.
const CODY_SMALL: f64 = 0.46875;
const CODY_MID: f64 = 4.0;
// Below this, 2·exp(x²) overflows.
const ERFCX_NEG_LIMIT: f64 = -26.628_735_713_751_4;
// Above this, erfcx(x) = 1/(x√π) to working precision.
const ERFCX_HUGE: f64 = 6.71e7;

// erf on |x| <= 0.46875
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302_02,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const ERF_B: [f64; 4] = [
    23.601_290_952_344_122,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
// erfcx on 0.46875 < x <= 4
const ERFCX_C: [f64; 9] = [
    0.564_188_496_988_670_09,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_13,
    881.952_221_241_769_09,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_5,
    1_230.339_354_797_997_3,
    2.153_115_354_744_038_5e-8,
];
const ERFCX_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_86,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_6,
    4_362.619_090_143_247_2,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
// erfcx on x > 4, in z = 1/x²
const ERFCX_P: [f64; 6] = [
    0.305_326_634_961_232_34,
    0.360_344_899_949_804_44,
    0.125_781_726_111_229_25,
    0.016_083_785_148_742_277,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_098,
];
const ERFCX_Q: [f64; 5] = [
    2.568_520_192_289_822_4,
    1.872_952_849_923_460_5,
    0.527_905_102_951_428_41,
    0.060_518_341_312_441_319,
    0.002_335_204_976_268_691_9,
];

/// `erf(x)/x` for `|x| <= 0.46875`, as a rational function of `x²`.
#[inline]
fn erf_small_ratio(z: f64) -> f64 {
    let a = &ERF_A;
    let b = &ERF_B;
    ((((a[4] * z + a[0]) * z + a[1]) * z + a[2]) * z + a[3])
        / ((((z + b[0]) * z + b[1]) * z + b[2]) * z + b[3])
}

#[inline]
fn erfcx_mid(y: f64) -> f64 {
    let c = &ERFCX_C;
    let d = &ERFCX_D;
    let mut num = c[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + c[i]) * y;
        den = (den + d[i]) * y;
    }
    (num + c[7]) / (den + d[7])
}

#[inline]
fn erfcx_large(y: f64) -> f64 {
    if y >= ERFCX_HUGE {
        return FRAC_1_SQRT_PI / y;
    }
    let z = 1.0 / (y * y);
    let p = &ERFCX_P;
    let q = &ERFCX_Q;
    let mut num = p[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + p[i]) * z;
        den = (den + q[i]) * z;
    }
    let r = z * (num + p[4]) / (den + q[4]);
    (FRAC_1_SQRT_PI - r) / y
}

/// `erfcx` for `y > 0.46875`.
#[inline]
fn erfcx_tail(y: f64) -> f64 {
    if y <= CODY_MID {
        erfcx_mid(y)
    } else {
        erfcx_large(y)
    }
}

/// `exp(sign·x²/2)` with the square split so that the rounding error of
/// `x·x` does not get amplified by the exponential.
#[inline]
fn exp_half_square(x: f64, sign: f64) -> f64 {
    let xt = (x * 16.0).trunc() / 16.0;
    let hi = xt * xt;
    let lo = (x - xt) * (x + xt);
    (sign * 0.5 * hi).exp() * (sign * 0.5 * lo).exp()
}

/// `exp(x²)`, split like [`exp_half_square`].
#[inline]
fn exp_square(x: f64) -> f64 {
    let xt = (x * 16.0).trunc() / 16.0;
    (xt * xt).exp() * ((x - xt) * (x + xt)).exp()
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Relative accuracy is close to machine precision for `x >= -1`; for more
/// negative arguments the identity `erfcx(x) = 2·exp(x²) - erfcx(-x)` is used
/// and the result overflows to `+∞` below about `-26.63`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= CODY_SMALL {
        let z = y * y;
        return z.exp() * (1.0 - x * erf_small_ratio(z));
    }
    if x > 0.0 {
        if x == f64::INFINITY {
            return 0.0;
        }
        return erfcx_tail(y);
    }
    if x < ERFCX_NEG_LIMIT {
        return f64::INFINITY;
    }
    2.0 * exp_square(x) - erfcx_tail(y)
}

/// Complementary error function, computed through [`erfcx`] in the tails.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= CODY_SMALL {
        return 1.0 - x * erf_small_ratio(y * y);
    }
    let tail = if y >= 26.6 {
        0.0
    } else {
        erfcx_tail(y) * (1.0 / exp_square(y))
    };
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// Error function, with full relative accuracy near 0.
pub fn erf(x: f64) -> f64 {
    if x.abs() <= CODY_SMALL {
        x * erf_small_ratio(x * x)
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Standard normal density `exp(-x²/2)/√(2π)`.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp_half_square(x, -1.0)
}

/// Mills ratio `R(x) = Φ(-x)/φ(x) = √(π/2)·erfcx(x/√2)`.
///
/// Strictly positive and decreasing; overflows to `+∞` below about `-37.6`.
pub fn mills_ratio(x: f64) -> f64 {
    SQRT_PI_OVER_2 * erfcx(x * FRAC_1_SQRT_2)
}

/// Standard normal distribution function.
///
/// Both tails are formed as `φ(x)·R(|x|)` so the lower tail keeps full
/// relative accuracy down to the subnormal range.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let threshold = CODY_SMALL * SQRT_2;
    if x < -threshold {
        norm_pdf(x) * mills_ratio(-x)
    } else if x > threshold {
        1.0 - norm_pdf(x) * mills_ratio(x)
    } else {
        let u = x * FRAC_1_SQRT_2;
        0.5 + 0.5 * u * erf_small_ratio(u * u)
    }
}

/// Upper tail `1 - Φ(x) = Φ(-x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

// AS241 (PPND16) coefficients.
const SPLIT1: f64 = 0.425;
const SPLIT2: f64 = 5.0;
const CONST1: f64 = 0.180625;
const CONST2: f64 = 1.6;
#[allow(clippy::excessive_precision)]
const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_608_0E0,
    1.331_416_678_917_843_774_5E2,
    1.971_590_950_306_551_442_7E3,
    1.373_169_376_550_946_112_5E4,
    4.592_195_393_154_987_145_7E4,
    6.726_577_092_700_870_085_3E4,
    3.343_057_558_358_812_810_5E4,
    2.509_080_928_730_122_672_7E3,
];
#[allow(clippy::excessive_precision)]
const PPND_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2E1,
    6.871_870_074_920_579_083_0E2,
    5.394_196_021_424_751_107_7E3,
    2.121_379_430_158_659_586_7E4,
    3.930_789_580_009_271_061_0E4,
    2.872_908_573_572_194_267_4E4,
    5.226_495_278_852_854_561_0E3,
];
#[allow(clippy::excessive_precision)]
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_577_34E0,
    4.630_337_846_156_545_295_90E0,
    5.769_497_221_460_691_405_50E0,
    3.647_848_324_763_204_605_04E0,
    1.270_458_252_452_368_382_58E0,
    2.417_807_251_774_506_117_70E-1,
    2.272_384_498_926_918_458_33E-2,
    7.745_450_142_783_414_076_40E-4,
];
#[allow(clippy::excessive_precision)]
const PPND_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87E0,
    1.676_384_830_183_803_849_40E0,
    6.897_673_349_851_000_045_50E-1,
    1.481_039_764_274_800_745_90E-1,
    1.519_866_656_361_645_719_66E-2,
    5.475_938_084_995_344_946_00E-4,
    1.050_750_071_644_416_843_24E-9,
];
#[allow(clippy::excessive_precision)]
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103_777_20E0,
    5.463_784_911_164_114_369_90E0,
    1.784_826_539_917_291_335_80E0,
    2.965_605_718_285_048_912_30E-1,
    2.653_218_952_657_612_309_30E-2,
    1.242_660_947_388_078_438_60E-3,
    2.711_555_568_743_487_578_15E-5,
    2.010_334_399_292_288_132_65E-7,
];
#[allow(clippy::excessive_precision)]
const PPND_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90E-1,
    1.369_298_809_227_358_053_10E-1,
    1.487_536_129_085_061_485_25E-2,
    7.868_691_311_456_132_591_00E-4,
    1.846_318_317_510_054_681_80E-5,
    1.421_511_758_316_445_888_70E-7,
    2.044_263_103_389_939_785_64E-15,
];

#[inline]
fn poly8(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Quantile of the lower tail, `q <= 0.5`, result `<= 0`.
fn inv_lower_tail(q: f64) -> f64 {
    let dq = q - 0.5;
    if dq.abs() <= SPLIT1 {
        let r = CONST1 - dq * dq;
        return dq * poly8(&PPND_A, r) / poly8(&PPND_B, r);
    }
    let r = (-q.ln()).sqrt();
    let x = if r <= SPLIT2 {
        let r = r - CONST2;
        -poly8(&PPND_C, r) / poly8(&PPND_D, r)
    } else {
        let r = r - SPLIT2;
        -poly8(&PPND_E, r) / poly8(&PPND_F, r)
    };
    halley_polish(x, q)
}

/// One Halley step on `Φ(x) = q` for `x < 0`, with the residual written as
/// `R(-x) - q/φ(x)` so it never subtracts two tiny probabilities.
fn halley_polish(x: f64, q: f64) -> f64 {
    let pdf = norm_pdf(x);
    if !(pdf > 0.0) || !pdf.is_finite() {
        return x;
    }
    let e = mills_ratio(-x) - q / pdf;
    if !e.is_finite() {
        return x;
    }
    x - e / (1.0 + 0.5 * x * e)
}

/// Inverse of the standard normal distribution function.
///
/// Accepts `0 < p < 1`; the lower half is evaluated directly and the upper
/// half through `-Φ⁻¹(1-p)`, where `1-p` is exact.
pub fn norm_cdf_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("norm_cdf_inv requires 0 < p < 1", p));
    }
    Ok(inv_unchecked(p))
}

#[inline]
pub(crate) fn inv_unchecked(p: f64) -> f64 {
    if p <= 0.5 {
        inv_lower_tail(p)
    } else {
        -inv_lower_tail(1.0 - p)
    }
}

/// `Φ⁻¹(½ + dq)` where `tail = ½ - |dq|` is the smaller of the two masses.
///
/// Both are supplied so that neither a probability next to ½ nor one next to
/// 0 or 1 loses relative accuracy to rounding.
pub(crate) fn quantile_centered(dq: f64, tail: f64) -> f64 {
    if dq.abs() <= SPLIT1 {
        let r = CONST1 - dq * dq;
        return dq * poly8(&PPND_A, r) / poly8(&PPND_B, r);
    }
    let x = if tail > 0.0 {
        inv_lower_tail(tail)
    } else {
        f64::NEG_INFINITY
    };
    if dq < 0.0 {
        x
    } else {
        -x
    }
}
