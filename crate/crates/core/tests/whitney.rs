mod common;

use jetcalc::expr::parse;
use jetcalc::jet::{prolong, JetFamily, MultiIndex};
use jetcalc::whitney::{
    check_taylor_condition, cone_membership, cone_samples, extend_separated, taylor_remainder, ConeGeometry,
    ConeRegion, TolRule, DEFAULT_SCALES,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separated_extension_reproduces_jets(seed in any::<u64>(), n in 1usize..=2, count in 1usize..=5, m in 0usize..=3) {
        let mut rng = common::rng(seed);
        let s = parse(&common::smooth_expr(&mut rng, n, 2), n).unwrap();
        let mut points: Vec<Vec<f64>> = Vec::new();
        while points.len() < count {
            let p = common::point(&mut rng, n);
            let far = points.iter().all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 0.01);
            if far {
                points.push(p);
            }
        }
        let family = JetFamily::sample(&s, &points, m).unwrap();
        let f = extend_separated(&family).unwrap();
        for jet in family.entries() {
            let got = prolong(&f, jet.base(), m).unwrap();
            let diff = got.max_abs_diff(jet).unwrap();
            prop_assert!(diff <= 1e-9, "{s} at {:?}: {diff}", jet.base());
        }
    }

    #[test]
    fn moduli_are_nonnegative_and_witnessed(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = parse(&common::smooth_expr(&mut rng, 1, 2), 1).unwrap();
        let points: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.gen_range(-0.5..0.5)]).collect();
        let family = JetFamily::sample(&s, &points, 4).unwrap();
        let report = check_taylor_condition(&family, 2, &DEFAULT_SCALES, TolRule::Constant { value: 1.0 }).unwrap();
        let jets = family.entries();
        for entry in &report.indices {
            for scale in &entry.scales {
                prop_assert!(scale.modulus >= 0.0);
                if let Some((x, y)) = &scale.witness {
                    let at = |p: &Vec<f64>| jets.iter().find(|j| j.base() == &p[..]).unwrap();
                    let dist = (x[0] - y[0]).abs();
                    let r = taylor_remainder(at(x), at(y), &entry.index, 2).unwrap() / dist.powi(2);
                    prop_assert_eq!(r, scale.modulus);
                }
            }
        }
    }
}

#[test]
fn single_function_passes_with_fitted_linear_tolerance() {
    // tol(δ) = C·δ with C fitted at the largest scale, doubled for slack
    for text in ["sin(x1)*cos(x2)", "exp(x1 - 0.5*x2)", "log(2 + x1*x2)"] {
        let s = parse(text, 2).unwrap();
        let coords: Vec<f64> = (0..8).map(|i| -0.2 + 0.05 * i as f64).collect();
        let points: Vec<Vec<f64>> = coords.iter().flat_map(|&a| coords.iter().map(move |&b| vec![a, b])).collect();
        for m in 1..=3 {
            let family = JetFamily::sample(&s, &points, 2 * m).unwrap();
            let probe = check_taylor_condition(&family, m, &DEFAULT_SCALES, TolRule::Constant { value: 0.0 }).unwrap();
            let slope = 2.0 * probe.max_modulus_at(0.2) / 0.2;
            let report = check_taylor_condition(&family, m, &DEFAULT_SCALES, TolRule::Linear { slope }).unwrap();
            assert!(report.holds(), "{text}, m = {m}: {:?}", report.first_failure());
        }
    }
}

#[test]
fn remainder_is_not_symmetric() {
    let s = parse("exp(x1)", 1).unwrap();
    let (tx, ty) = (prolong(&s, &[0.0], 3).unwrap(), prolong(&s, &[0.5], 3).unwrap());
    let index = MultiIndex::new(vec![0]);
    let forward = taylor_remainder(&tx, &ty, &index, 2).unwrap();
    let backward = taylor_remainder(&ty, &tx, &index, 2).unwrap();
    let want_forward = 0.5f64.exp() - (1.0 + 0.5 + 0.125);
    let want_backward = 1.0 - 0.5f64.exp() * (1.0 - 0.5 + 0.125);
    assert!((forward - want_forward).abs() < 1e-15);
    assert!((backward - want_backward.abs()).abs() < 1e-15);
    assert!((forward - backward).abs() > 1e-3);
}

#[test]
fn cone_samples_land_in_their_nappe() {
    for n in 2..=3 {
        let geom = ConeGeometry::new(n);
        for region in [ConeRegion::K1, ConeRegion::K2] {
            for p in cone_samples(geom, region, 100, 1e-3, 5) {
                assert_eq!(cone_membership(&p, geom), region, "{p:?}");
                assert!(p.iter().map(|v| v * v).sum::<f64>().sqrt() >= 1e-3);
            }
        }
        assert_eq!(cone_membership(&vec![0.0; n], geom), ConeRegion::Apex);
    }
}
