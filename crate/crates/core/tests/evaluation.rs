use anoma_core::evaluation::{full_csi_estimate, monte_carlo_mean, MonteCarloConfig};
use anoma_core::*;
use proptest::prelude::*;

fn setup() -> (ChannelDistribution, ChannelDistribution, SystemParams) {
    (
        ChannelDistribution::new(0.5).unwrap(),
        ChannelDistribution::new(1.0).unwrap(),
        SystemParams::new(10.0, 0.5).unwrap(),
    )
}

fn uniform_pair(bits: u32) -> (QuantizerCodebook, QuantizerCodebook) {
    (
        uniform_codebook(0.5, bits).unwrap(),
        uniform_codebook(1.0, bits).unwrap(),
    )
}

/// R*(H1, H2) through the public allocation API only.
fn maxmin(variant: AllocationMethod, h1: f64, h2: f64, p: &SystemParams) -> f64 {
    allocate(
        variant,
        ChannelGain::new(h1).unwrap(),
        ChannelGain::new(h2).unwrap(),
        p,
    )
    .unwrap()
    .maxmin_rate
}

#[test]
fn full_csi_matches_monte_carlo() {
    let (d1, d2, p) = setup();
    let v = AllocationMethod::NomaClosedForm;
    let quad = full_csi_estimate(&d1, &d2, &p, v, &QuadratureSpec::default()).unwrap();
    assert!(quad.error_estimate < 1e-6);
    let cfg = MonteCarloConfig::new(10_000_000, 2024);
    let (mean, se) = monte_carlo_mean(&d1, &d2, &cfg, |a, b| maxmin(v, a, b, &p));
    assert!(
        (mean - quad.value).abs() <= 3.0 * se,
        "quadrature {} vs Monte Carlo {mean} ± {se}",
        quad.value
    );
}

#[test]
fn full_csi_respects_allocation_ordering() {
    let (d1, d2, p) = setup();
    let spec = QuadratureSpec::default();
    let v: Vec<f64> = [
        AllocationMethod::NomaClosedForm,
        AllocationMethod::AnomaLowerZ05,
        AllocationMethod::AnomaExact,
        AllocationMethod::AnomaUpperZ1,
    ]
    .iter()
    .map(|&m| full_csi_rate(&d1, &d2, &p, m, &spec).unwrap())
    .collect();
    assert!(v.windows(2).all(|w| w[0] < w[1]), "{v:?}");
}

#[test]
fn quantized_rate_is_strictly_below_full_csi() {
    let (d1, d2, p) = setup();
    let spec = QuadratureSpec::default();
    for v in AllocationMethod::ALL {
        let full = full_csi_rate(&d1, &d2, &p, v, &spec).unwrap();
        for bits in [0, 1, 3, 6] {
            let (c1, c2) = uniform_pair(bits);
            let r = expected_rate(&c1, &c2, &d1, &d2, &p, v)
                .unwrap()
                .with_full_csi(full);
            assert!(r.expected_maxmin < full);
            assert!(distortion(&r).unwrap() > 0.0);
        }
        let z = QuantizerCodebook::zero();
        let r = expected_rate(&z, &z, &d1, &d2, &p, v)
            .unwrap()
            .with_full_csi(full);
        assert_eq!(distortion(&r).unwrap(), full);
    }
}

#[test]
fn distortion_shrinks_with_resolution() {
    let (d1, d2, p) = setup();
    let v = AllocationMethod::NomaClosedForm;
    let full = full_csi_rate(&d1, &d2, &p, v, &QuadratureSpec::default()).unwrap();
    let d = |bits| {
        let (c1, c2) = uniform_pair(bits);
        distortion(
            &expected_rate(&c1, &c2, &d1, &d2, &p, v)
                .unwrap()
                .with_full_csi(full),
        )
        .unwrap()
    };
    let (d3, d12) = (d(3), d(12));
    assert!(d3.is_finite() && d3 > 0.0);
    assert!(d12 < d3);
}

#[test]
fn expected_rate_respects_allocation_ordering() {
    let (d1, d2, p) = setup();
    for bits in 1..=5 {
        let (c1, c2) = uniform_pair(bits);
        let e = |m| {
            expected_rate(&c1, &c2, &d1, &d2, &p, m)
                .unwrap()
                .expected_maxmin
        };
        let noma = e(AllocationMethod::NomaClosedForm);
        let lower = e(AllocationMethod::AnomaLowerZ05);
        let exact = e(AllocationMethod::AnomaExact);
        let upper = e(AllocationMethod::AnomaUpperZ1);
        assert!(noma <= lower && lower <= exact && exact <= upper);
    }
}

#[test]
fn monte_carlo_agrees_with_closed_form_and_never_outages() {
    let (d1, d2, p) = setup();
    let (c1, c2) = uniform_pair(2);
    for v in AllocationMethod::ALL {
        let exact = expected_rate(&c1, &c2, &d1, &d2, &p, v)
            .unwrap()
            .expected_maxmin;
        let mc = monte_carlo(&c1, &c2, &d1, &d2, &p, v, 200_000, 99).unwrap();
        assert!(
            (mc.estimate - exact).abs() <= 3.0 * mc.standard_error,
            "{v}: {mc:?} vs {exact}"
        );
        assert_eq!(mc.outage_count, 0);
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let (d1, d2, p) = setup();
    let (c1, c2) = uniform_pair(3);
    let v = AllocationMethod::AnomaLowerZ05;
    let se: Vec<f64> = [10_000u64, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            monte_carlo(&c1, &c2, &d1, &d2, &p, v, n, 5)
                .unwrap()
                .standard_error
        })
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10f64.sqrt()).abs() < 0.3, "ratio {ratio}");
    }
}

#[test]
fn synchronous_offset_makes_variants_agree() {
    let (d1, d2, _) = setup();
    let p = SystemParams::new(10.0, 0.0).unwrap();
    let (c1, c2) = uniform_pair(3);
    let base = expected_rate(&c1, &c2, &d1, &d2, &p, AllocationMethod::NomaClosedForm)
        .unwrap()
        .expected_maxmin;
    for v in AllocationMethod::ALL {
        let e = expected_rate(&c1, &c2, &d1, &d2, &p, v)
            .unwrap()
            .expected_maxmin;
        assert!((e - base).abs() < 1e-9);
    }
}

fn codebook(bits: u32) -> impl Strategy<Value = QuantizerCodebook> {
    proptest::collection::vec(0.02f64..2.0, (1usize << bits) - 1).prop_map(|gaps| {
        let mut levels = vec![0.0];
        for g in gaps {
            levels.push(levels.last().unwrap() + g);
        }
        QuantizerCodebook::new(levels).unwrap()
    })
}

/// Double the level count by inserting one point inside every bin.
fn refine(c: &QuantizerCodebook, fractions: &[f64]) -> QuantizerCodebook {
    let mut levels = Vec::with_capacity(2 * c.len());
    for (i, &q) in c.levels().iter().enumerate() {
        levels.push(q);
        let upper = c.upper_edge(i);
        let width = if upper.is_finite() { upper - q } else { 2.0 };
        levels.push(q + fractions[i] * width);
    }
    QuantizerCodebook::new(levels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_never_lowers_expected_rate(
        c1 in codebook(2),
        c2 in codebook(2),
        f1 in proptest::collection::vec(0.05f64..0.95, 4),
        f2 in proptest::collection::vec(0.05f64..0.95, 4),
        tau in 0.0f64..0.9,
    ) {
        let (d1, d2, _) = setup();
        let p = SystemParams::new(10.0, tau).unwrap();
        let (r1, r2) = (refine(&c1, &f1), refine(&c2, &f2));
        for v in AllocationMethod::ALL {
            let coarse = expected_rate(&c1, &c2, &d1, &d2, &p, v).unwrap().expected_maxmin;
            let fine_one = expected_rate(&r1, &c2, &d1, &d2, &p, v).unwrap().expected_maxmin;
            let fine = expected_rate(&r1, &r2, &d1, &d2, &p, v).unwrap().expected_maxmin;
            prop_assert!(fine_one >= coarse - 1e-12);
            prop_assert!(fine >= fine_one - 1e-12);
        }
    }

    #[test]
    fn quantized_rates_never_exceed_true_rates(
        c in codebook(3),
        x in 0.0f64..30.0,
        alpha in 0.0f64..=1.0,
        tau in 0.0f64..0.99,
    ) {
        let p = SystemParams::new(10.0, tau).unwrap();
        let a = PowerCoefficient::new(alpha).unwrap();
        let h = ChannelGain::new(x).unwrap();
        let hq = ChannelGain::new(c.quantize(x)).unwrap();
        prop_assert!(rate_strong(hq, a, &p) <= rate_strong(h, a, &p));
        prop_assert!(rate_weak(hq, a, &p) <= rate_weak(h, a, &p) + 1e-15);
    }
}
