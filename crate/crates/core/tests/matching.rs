mod common;

use common::{law, radial_law};
use mixspread::matcher::{match_e, match_mv, match_v};
use mixspread::moments::{proxy_moments_e, proxy_moments_mv, proxy_moments_v};
use mixspread::{MatchOptions, MgfKind, ProxyParamsE, ProxyParamsMV, ProxyParamsV};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = MgfKind> {
    prop_oneof![Just(MgfKind::Exact), Just(MgfKind::Truncated)]
}

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mean_variance_round_trip(
        l in law(), k in kind(),
        a in 0.05f64..0.6, b in -0.4f64..0.2, c in -1.0f64..1.0, d in -2.0f64..0.5,
    ) {
        let bound = l.mgf_domain_bound();
        prop_assume!(8.0 * a * a + 4.0 * b < 0.9 * bound && 0.5 * a * a + b > -0.9 * bound);
        let p = ProxyParamsMV::new(a, b, c, d);
        let target = proxy_moments_mv(&p, &l, k).unwrap();
        let rep = match_mv(&target, &l, k, &MatchOptions::default()).unwrap();
        prop_assert!(rep.residual_norm < 1e-10);
        let again = proxy_moments_mv(&rep.params, &l, k).unwrap();
        prop_assert!((norm(&again.m, &target.m) - rep.residual_norm).abs() <= 1e-14);
        prop_assert!(rep.params.a >= 0.0);
        for s in rep.params.mgf_arguments() {
            prop_assert!(s < bound);
        }
    }

    #[test]
    fn variance_round_trip(l in law(), k in kind(), a in 0.05f64..0.6, c in -1.0f64..1.0, d in -2.0f64..0.5) {
        prop_assume!(4.5 * a * a < 0.9 * l.mgf_domain_bound());
        let p = ProxyParamsV::new(a, c, d);
        let target = proxy_moments_v(&p, &l, k).unwrap();
        let rep = match_v(&target, &l, k, &MatchOptions::default()).unwrap();
        prop_assert!(rep.residual_norm < 1e-10);
        let again = proxy_moments_v(&rep.params, &l, k).unwrap();
        prop_assert!((norm(&again.m, &target.m) - rep.residual_norm).abs() <= 1e-14);
    }

    #[test]
    fn elliptical_round_trip(l in radial_law(), a in 0.05f64..0.6, c in -1.0f64..1.0, d in -2.0f64..0.5) {
        let opts = MatchOptions::default();
        let p = ProxyParamsE::new(a, c, d);
        let target = proxy_moments_e(&p, &l, opts.series).unwrap();
        let rep = match_e(&target, &l, &opts).unwrap();
        prop_assert!(rep.residual_norm < 1e-10);
        let again = proxy_moments_e(&rep.params, &l, opts.series).unwrap();
        prop_assert!((norm(&again.m, &target.m) - rep.residual_norm).abs() <= 1e-14);
    }
}

#[test]
fn matching_is_deterministic_across_thread_settings() {
    let l = common::table_laws()[1].clone();
    let target = proxy_moments_mv(&ProxyParamsMV::new(0.3, -0.1, 0.2, -0.5), &l, MgfKind::Truncated).unwrap();
    let par = MatchOptions::default();
    let ser = MatchOptions {
        parallel: false,
        ..par
    };
    let a = match_mv(&target, &l, MgfKind::Truncated, &par).unwrap();
    let b = match_mv(&target, &l, MgfKind::Truncated, &par).unwrap();
    let c = match_mv(&target, &l, MgfKind::Truncated, &ser).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
