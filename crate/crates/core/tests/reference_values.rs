//! Values frozen from a 60-digit evaluation (`reference/gen_reference.py`)
//! and structural properties of the special functions.

use ivbounds::bounds::{lower_l1, lower_l_inv, upper_u1, upper_u3};
use ivbounds::bs::{d1_inv, delta, log_price, price, vega};
use ivbounds::specfun::{erf, erfc, erfcx, mills_ratio, norm_cdf, norm_cdf_inv, norm_pdf, norm_sf};
use ivbounds::{StandardizedOption, Vol};
use proptest::prelude::*;

fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
    let err = ((got - want) / want).abs();
    assert!(
        err <= tol,
        "{what}: got {got:e}, want {want:e}, rel err {err:e}"
    );
}

fn opt(c: f64, k: f64) -> StandardizedOption {
    StandardizedOption::new(c, k).unwrap()
}

const LN_1_5: f64 = 0.405_465_108_108_164_381_98;

#[test]
fn normal_density_and_distribution() {
    assert_rel(norm_pdf(1.0), 0.241_970_724_519_143_349_8, 2e-16, "pdf(1)");
    assert_rel(
        norm_cdf(-8.0),
        6.220_960_574_271_784_123_5e-16,
        4e-16,
        "cdf(-8)",
    );
    assert_rel(
        norm_cdf(-37.0),
        5.725_571_222_524_576_822_7e-300,
        1e-14,
        "cdf(-37)",
    );
    assert_rel(
        norm_sf(8.0),
        6.220_960_574_271_784_123_5e-16,
        4e-16,
        "sf(8)",
    );
}

#[test]
fn error_functions() {
    let erfcx_table = [
        (-1.0, 5.008_980_080_762_283_466_3),
        (-0.5, 1.952_360_489_182_557_093_3),
        (0.3, 0.734_599_334_567_655_142_29),
        (0.5, 0.615_690_344_192_925_874_87),
        (2.0, 0.255_395_676_310_505_743_87),
        (5.0, 0.110_704_637_733_068_626_37),
        (10.0, 0.056_140_992_743_822_585_858),
        (30.0, 0.018_795_888_861_416_751_497),
        (100.0, 0.005_641_613_782_989_432_903_6),
    ];
    for (x, want) in erfcx_table {
        assert_rel(erfcx(x), want, 6e-16, &format!("erfcx({x})"));
    }
    for (x, want) in [
        (0.1, 0.112_462_916_018_284_892_2),
        (0.5, 0.520_499_877_813_046_537_68),
        (2.0, 0.995_322_265_018_952_734_16),
    ] {
        assert_rel(erf(x), want, 4e-16, &format!("erf({x})"));
        assert_rel(erf(-x), -want, 4e-16, &format!("erf(-{x})"));
    }
    for (x, want) in [
        (0.5, 0.479_500_122_186_953_462_32),
        (3.0, 2.209_049_699_858_544_137_3e-5),
        (26.0, 5.663_192_408_856_142_846_5e-296),
    ] {
        assert_rel(erfc(x), want, 4e-15, &format!("erfc({x})"));
    }
}

#[test]
fn normal_quantile() {
    for (p, want) in [
        (1e-300, -37.047_096_299_361_199_237),
        (1e-10, -6.361_340_902_404_056_204_7),
        (0.02425, -1.972_961_051_311_884_850_3),
        (0.3, -0.524_400_512_708_040_784_04),
        (0.9, 1.281_551_565_544_600_467),
        (0.975, 1.959_963_984_540_054_235_5),
    ] {
        assert_rel(
            norm_cdf_inv(p).unwrap(),
            want,
            1e-15,
            &format!("quantile({p})"),
        );
    }
    assert_eq!(norm_cdf_inv(0.5).unwrap(), 0.0);
    assert!(norm_cdf_inv(0.0).is_err());
    assert!(norm_cdf_inv(1.0).is_err());
    assert!(norm_cdf_inv(-0.1).is_err());
    assert!(norm_cdf_inv(f64::NAN).is_err());
}

#[test]
fn mills_ratio_values() {
    assert_rel(
        mills_ratio(2.0),
        0.421_369_229_288_054_473_22,
        4e-16,
        "R(2)",
    );
    assert_rel(
        mills_ratio(10.0),
        0.099_028_596_471_731_921_395,
        4e-16,
        "R(10)",
    );
}

#[test]
fn black_scholes_values() {
    let s = Vol::new(0.04).unwrap();
    assert_rel(
        price(s, LN_1_5),
        9.010_020_309_242_845_732_3e-27,
        1e-14,
        "extreme case price",
    );
    assert_rel(
        log_price(s, LN_1_5).unwrap(),
        -59.971_460_185_143_520_057,
        1e-15,
        "extreme case log price",
    );
    let ln2 = std::f64::consts::LN_2;
    assert_rel(
        d1_inv(1.2, ln2).get(),
        2.881_158_636_512_298_508_2,
        4e-16,
        "d1_inv",
    );
    let s = Vol::new(0.2).unwrap();
    assert_rel(
        price(s, 0.0),
        0.079_655_674_554_057_962_931,
        4e-16,
        "atm price",
    );
    assert_rel(
        delta(s, 0.0),
        0.539_827_837_277_028_981_47,
        4e-16,
        "atm delta",
    );
    assert_rel(
        vega(Vol::new(1.0).unwrap(), ln2),
        0.391_569_816_025_208_581_4,
        4e-16,
        "vega",
    );
}

#[test]
fn closed_form_bounds() {
    let ln2 = std::f64::consts::LN_2;
    assert_rel(
        lower_l1(opt(0.2, 0.0)).get(),
        0.506_694_206_271_599_597_6,
        1e-15,
        "L1",
    );
    assert_rel(
        upper_u1(opt(0.2, ln2)).get(),
        1.245_851_446_420_175_438_6,
        1e-15,
        "U1",
    );
    assert_rel(
        lower_l_inv(opt(0.5, ln2)).get(),
        0.716_489_279_180_569_357_8,
        1e-15,
        "L_inv",
    );
    assert_rel(
        upper_u3(opt(0.2, ln2)).get(),
        1.094_968_336_708_714_004,
        1e-15,
        "U3",
    );
}

/// `(σ, k, ln C)` spanning every evaluation regime of the log price.
const LOG_PRICE_TABLE: [(f64, f64, f64); 28] = [
    (1e-11, 1e-10, -80.881_558_059_006_858_451),
    (9e-12, 1e-10, -92.920_666_621_575_182_13),
    (1e-6, 1e-9, -14.735_702_690_234_042_26),
    (3e-4, 0.001, -17.207_544_614_142_041_896),
    (7.7e-4, 0.01, -97.559_643_068_374_011_865),
    (0.004, 0.01, -11.729_004_227_344_553_42),
    (0.02, 0.05, -10.099_606_251_821_194_668),
    (0.04, LN_1_5, -59.971_460_185_143_520_057),
    (0.05, 0.5, -58.299_160_958_653_547_889),
    (0.1, 0.5, -18.798_056_703_623_704_557),
    (0.2, 3.0, -118.962_565_476_438_137_82),
    (0.3, 3.0, -55.268_134_183_544_322_559),
    (0.5, 3.0, -21.801_807_376_715_113_027),
    (1.0, 3.0, -6.477_802_217_012_767_106_4),
    (2.449_489_742_783_178, 3.0, -1.031_899_764_544_877_849),
    (5.0, 3.0, -0.049_349_279_821_660_314_516),
    (0.2, 0.0, -2.530_042_001_547_238_511_1),
    (1e-8, 0.0, -19.339_619_277_157_038_218),
    (3.0, 0.0, -0.143_425_206_861_177_099_61),
    (0.7, 0.7, -2.530_579_096_052_741_747_7),
    (1.5, 0.02, -0.612_106_188_629_357_570_72),
    (0.15, 0.02, -2.979_397_186_103_299_624),
    (0.01, 1e-4, -5.536_624_648_642_795_473_5),
    (8.0, 1.0, -1.037_058_046_584_102_050_5e-4),
    (12.0, 0.5, -2.531_516_776_044_929_573_6e-9),
    (0.0013, 0.001, -8.709_529_865_077_730_362),
    (0.6, 0.25, -1.900_339_467_921_182_114_9),
    (0.05, 0.02, -4.453_651_875_863_607_409_1),
];

#[test]
fn log_price_table() {
    for (s, k, want) in LOG_PRICE_TABLE {
        let got = log_price(Vol::new(s).unwrap(), k).unwrap();
        assert_rel(got, want, 1e-14, &format!("log C({s}, {k})"));
        if want > -700.0 {
            assert_rel(
                price(Vol::new(s).unwrap(), k),
                want.exp(),
                4e-14,
                &format!("C({s}, {k})"),
            );
        }
    }
}

proptest! {
    #[test]
    fn quantile_round_trips(p in prop_oneof![
        (-300.0f64..-1.0).prop_map(|e| 10f64.powf(e)),
        1e-3f64..0.999,
    ]) {
        let x = norm_cdf_inv(p).unwrap();
        let back = norm_cdf(x);
        // a correctly rounded quantile need not round-trip when Φ is flat
        // relative to the ulp of x, so also accept bracketing by neighbours
        let rel = ((back - p) / p).abs();
        let lo = norm_cdf(x - 4.0 * f64::EPSILON * x.abs().max(1e-300));
        let hi = norm_cdf(x + 4.0 * f64::EPSILON * x.abs().max(1e-300));
        prop_assert!(rel <= 1e-13 || (lo <= p && p <= hi), "p={p:e} x={x} back={back:e}");
    }

    #[test]
    fn quantile_is_odd(p in 1e-12f64..0.5) {
        let a = norm_cdf_inv(p).unwrap();
        let b = norm_cdf_inv(1.0 - p).unwrap();
        // 1 - p is rounded, so compare through the density
        let slack = 1e-15 / norm_pdf(a).max(1e-300) + 1e-15 * a.abs();
        prop_assert!((a + b).abs() <= slack, "p={p:e} a={a} b={b}");
    }

    #[test]
    fn mills_identity(x in -8.0f64..37.0) {
        let lhs = mills_ratio(x) * norm_pdf(x);
        let rhs = norm_cdf(-x);
        prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-14, "x={x}");
    }

    #[test]
    fn mills_decreasing_and_convex(x in -5.0f64..30.0, h in 1e-3f64..0.5) {
        let (a, b, c) = (mills_ratio(x - h), mills_ratio(x), mills_ratio(x + h));
        prop_assert!(a > b && b > c);
        prop_assert!(a + c - 2.0 * b >= -1e-15 * b, "x={x} h={h}");
    }

    #[test]
    fn mills_algebraic_bounds(x in 0.0f64..1e3) {
        // 2/(x + √(x²+4)) ≤ R(x) ≤ 4/(3x + √(x²+8))
        let r = mills_ratio(x);
        let lower = 2.0 / (x + (x * x + 4.0).sqrt());
        let upper = 4.0 / (3.0 * x + (x * x + 8.0).sqrt());
        prop_assert!(r >= lower * (1.0 - 1e-15) && r <= upper * (1.0 + 1e-15), "x={x}");
    }

    #[test]
    fn erf_erfc_complement(x in -6.0f64..6.0) {
        prop_assert!((erf(x) + erfc(x) - 1.0).abs() <= 4e-16);
    }

    #[test]
    fn erfcx_matches_erfc(x in -5.0f64..25.0) {
        let want = (x * x).exp() * erfc(x);
        prop_assert!(((erfcx(x) - want) / want).abs() <= 2e-13, "x={x}");
    }
}
