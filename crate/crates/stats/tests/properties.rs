use fermitraj_stats::*;
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-12.0..12.0f64, 0..200)
}

fn edges() -> Vec<f64> {
    uniform_edges(-10.0, 10.0, 37).unwrap()
}

proptest! {
    #[test]
    fn merge_equals_single_pass(a in samples(), b in samples()) {
        let mut h = accumulate_histogram(&a, edges()).unwrap();
        h.merge(&accumulate_histogram(&b, edges()).unwrap()).unwrap();
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(h, accumulate_histogram(&all, edges()).unwrap());
    }

    #[test]
    fn merge_is_commutative_and_associative(a in samples(), b in samples(), c in samples()) {
        let h = |x: &[f64]| accumulate_histogram(x, edges()).unwrap();
        let mut ab = h(&a);
        ab.merge(&h(&b)).unwrap();
        let mut ba = h(&b);
        ba.merge(&h(&a)).unwrap();
        prop_assert_eq!(&ab, &ba);
        let mut ab_c = ab.clone();
        ab_c.merge(&h(&c)).unwrap();
        let mut bc = h(&b);
        bc.merge(&h(&c)).unwrap();
        let mut a_bc = h(&a);
        a_bc.merge(&bc).unwrap();
        prop_assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn counts_account_for_every_sample(a in samples()) {
        let h = accumulate_histogram(&a, edges()).unwrap();
        prop_assert_eq!(h.in_range() + h.underflow() + h.overflow() + h.invalid(), h.total());
        prop_assert_eq!(h.total(), a.len() as u64);
        if h.in_range() > 0 {
            let integral: f64 = h.density().iter().zip(h.widths()).map(|(d, w)| d * w).sum();
            prop_assert!((integral - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn density_map_merge_equals_single_pass(
        a in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 0..100),
        b in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 0..100),
    ) {
        let xe = uniform_edges(0.0, 1.0, 7).unwrap();
        let ye = uniform_edges(-1.0, 1.0, 9).unwrap();
        let mut m = density_map(&a, xe.clone(), ye.clone()).unwrap();
        m.merge(&density_map(&b, xe.clone(), ye.clone()).unwrap()).unwrap();
        let all: Vec<(f64, f64)> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(&m, &density_map(&all, xe, ye).unwrap());
        for mode in [Normalization::GlobalMax, Normalization::PerColumn, Normalization::Probability] {
            prop_assert!(m.normalized(mode).iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn envelope_is_continuous_and_flat_below_half(n in 0.0..=1.0f64, dn in -1e-7..1e-7f64) {
        let e = toy_envelope(n);
        prop_assert!(e <= 0.0 && e >= -std::f64::consts::LN_2 - 1e-15);
        prop_assert!((toy_envelope((n + dn).clamp(0.0, 1.0)) - e).abs() < 1e-5);
        if n <= 0.5 {
            prop_assert_eq!(e, -std::f64::consts::LN_2);
        }
    }

    #[test]
    fn moments_merge_matches_single_pass(a in prop::collection::vec(-5.0..5.0f64, 2..60), b in prop::collection::vec(-5.0..5.0f64, 2..60)) {
        let mut m = Moments::from_samples(&a);
        m.merge(&Moments::from_samples(&b));
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        let s = Moments::from_samples(&all);
        prop_assert!((m.mean() - s.mean()).abs() < 1e-10);
        prop_assert!((m.variance() - s.variance()).abs() < 1e-9 * (1.0 + s.variance()));
    }

    #[test]
    fn ks_is_symmetric_and_bounded(a in prop::collection::vec(-3.0..3.0f64, 1..50), b in prop::collection::vec(-3.0..3.0f64, 1..50)) {
        let d = ks_statistic(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a));
        prop_assert_eq!(ks_statistic(&a, &a), 0.0);
    }

    #[test]
    fn decay_fits_recover_exact_laws(p in -4.0..-0.2f64, rate in 0.05..2.0f64) {
        let pts: Vec<(f64, f64)> = (1..=12).map(|d| (d as f64, (d as f64).powf(p))).collect();
        prop_assert!((fit_decay(&pts, DecayModel::PowerLaw).unwrap().param("exponent") - p).abs() < 1e-6);
        let pts: Vec<(f64, f64)> = (1..=12).map(|d| (d as f64, (-rate * d as f64).exp())).collect();
        prop_assert!((fit_decay(&pts, DecayModel::Exponential).unwrap().param("rate") - rate).abs() < 1e-6);
    }
}
