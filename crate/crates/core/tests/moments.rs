mod common;

use common::{law, loading, radial_law, rel_diff};
use mixspread::moments::{exact_moments_elliptical, exact_moments_mv, exact_moments_v};
use mixspread::quadrature::QuadOptions;
use mixspread::series::circle_even_moment;
use mixspread::{build_effective, MgfKind, ModelSpec, SeriesOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigma2(a: &[[f64; 2]; 2], i: usize) -> f64 {
    a[i][0] * a[i][0] + a[i][1] * a[i][1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_normalizes_each_asset(
        l in law(),
        a in loading(0.3),
        beta in (-0.2f64..0.2, -0.2f64..0.2),
        s0 in (0.5f64..5.0, 0.5f64..5.0),
        r in 0.0f64..0.1,
    ) {
        let beta = [beta.0, beta.1];
        let d = l.mgf_domain_bound();
        for i in 0..2 {
            prop_assume!(beta[i] + 0.5 * sigma2(&a, i) < 0.8 * d);
        }
        let spec = ModelSpec::mixture(s0.0, s0.1, r, beta, a, l.clone());
        let m = build_effective(&spec).unwrap();
        for (i, s) in [s0.0, s0.1].iter().enumerate() {
            let arg = beta[i] + 0.5 * sigma2(&a, i);
            let phi = l.expect(|y| (arg * y).exp(), QuadOptions::with_rel_tol(1e-12)).unwrap().value;
            prop_assert!(rel_diff(m.mu[i].exp() * phi, r.exp() * s) < 1e-10);
        }
    }

    #[test]
    fn scaling_an_initial_price_shifts_its_location(l in law(), lambda in 0.1f64..10.0) {
        let base = ModelSpec::mixture(2.0, 1.0, 0.0, [0.05, -0.05], common::A, l.clone());
        let scaled = ModelSpec::mixture(2.0 * lambda, 1.0, 0.0, [0.05, -0.05], common::A, l);
        let (m0, m1) = (build_effective(&base).unwrap(), build_effective(&scaled).unwrap());
        prop_assert!((m1.mu[0] - m0.mu[0] - lambda.ln()).abs() < 1e-12);
        prop_assert_eq!(m1.mu[1], m0.mu[1]);
    }

    #[test]
    fn first_moment_is_the_forward_spread(
        l in law(),
        rl in radial_law(),
        a in loading(0.25),
        beta in (-0.1f64..0.1, -0.1f64..0.1),
        s0 in (0.5f64..5.0, 0.5f64..5.0),
        r in 0.0f64..0.1,
    ) {
        let forward = r.exp() * (s0.0 - s0.1);
        let tol = 1e-10 * s0.0.max(s0.1);
        let d = l.mgf_domain_bound();
        let beta = [beta.0, beta.1];
        // Mean-variance moments need arguments up to order four.
        let max_arg = (0..=4).map(|j| {
            let u = [(4 - j) as f64, j as f64];
            let mut s = u[0] * beta[0] + u[1] * beta[1];
            for k in 0..2 {
                let v = u[0] * a[0][k] + u[1] * a[1][k];
                s += 0.5 * v * v;
            }
            s
        }).fold(f64::MIN, f64::max);
        prop_assume!(max_arg < 0.9 * d);
        let mv = build_effective(&ModelSpec::mixture(s0.0, s0.1, r, beta, a, l.clone())).unwrap();
        prop_assert!((exact_moments_mv(&mv, MgfKind::Exact).unwrap().m[0] - forward).abs() < tol);
        let v = build_effective(&ModelSpec::mixture(s0.0, s0.1, r, [0.0; 2], a, l)).unwrap();
        prop_assert!((exact_moments_v(&v, MgfKind::Exact).unwrap().m[0] - forward).abs() < tol);
        let e = build_effective(&ModelSpec::elliptical(s0.0, s0.1, r, a, rl)).unwrap();
        let m1 = exact_moments_elliptical(&e, SeriesOptions::default()).unwrap().m[0];
        prop_assert!((m1 - forward).abs() < tol, "{} vs {}", m1, forward);
    }

    #[test]
    fn zero_skew_loading_reduces_exactly(l in law(), a in loading(0.2), s0 in (0.5f64..5.0, 0.5f64..5.0)) {
        let m = build_effective(&ModelSpec::mixture(s0.0, s0.1, 0.0, [0.0; 2], a, l)).unwrap();
        for kind in [MgfKind::Exact, MgfKind::Truncated] {
            let (mv, v) = (exact_moments_mv(&m, kind), exact_moments_v(&m, kind));
            if let (Ok(mv), Ok(v)) = (mv, v) {
                prop_assert_eq!(&mv.m[..3], &v.m[..]);
            }
        }
    }

    #[test]
    fn quartic_moments_stay_within_the_remainder_bound(
        l in law(),
        a in loading(0.08),
        beta in (-0.02f64..0.02, -0.02f64..0.02),
        s0 in (0.5f64..2.0, 0.5f64..2.0),
    ) {
        prop_assume!(l.mgf_domain_bound() >= 1.0);
        let beta = [beta.0, beta.1];
        let m = build_effective(&ModelSpec::mixture(s0.0, s0.1, 0.0, beta, a, l.clone())).unwrap();
        let exact = exact_moments_mv(&m, MgfKind::Exact).unwrap();
        let trunc = exact_moments_mv(&m, MgfKind::Truncated).unwrap();
        let m5 = l.raw_moment(5).unwrap();
        for n in 1..=4usize {
            let mut bound = 0.0;
            for j in 0..=n {
                let u = [(n - j) as f64, j as f64];
                let mut s = u[0] * beta[0] + u[1] * beta[1];
                for k in 0..2 {
                    let v = u[0] * a[0][k] + u[1] * a[1][k];
                    s += 0.5 * v * v;
                }
                prop_assume!(s.abs() <= 0.1);
                let binom = (1..=j).fold(1.0, |acc, k| acc * (n - k + 1) as f64 / k as f64);
                let pref = (u[0] * m.mu[0] + u[1] * m.mu[1]).exp();
                bound += binom * pref * 2.0 * s.abs().powi(5) * m5 / 120.0;
            }
            let gap = (exact.m[n - 1] - trunc.m[n - 1]).abs();
            prop_assert!(gap <= bound * (1.0 + 1e-9) + 1e-14, "n={} gap {} bound {}", n, gap, bound);
        }
    }
}

#[test]
fn elliptical_drift_with_chi_squared_radius_is_gaussian() {
    for a in [[[0.15, 0.05], [0.05, 0.15]], [[0.3, 0.0], [0.1, 0.2]]] {
        let m = build_effective(&ModelSpec::elliptical(1.0, 1.0, 0.0, a, mixspread::MixingLaw::chi_squared_2())).unwrap();
        for i in 0..2 {
            assert!((m.omega[i] + 0.5 * sigma2(&a, i)).abs() < 1e-10);
        }
    }
}

#[test]
fn circle_moments_match_sampled_angles() {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let us: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let t = std::f64::consts::TAU * rng.random::<f64>();
            (t.cos(), t.sin())
        })
        .collect();
    let mean_se = |f: &dyn Fn(f64, f64) -> f64| {
        let xs: Vec<f64> = us.iter().map(|(c, s)| f(*c, *s)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    };
    for k in 1..=4 {
        let (m, se) = mean_se(&|c, _| c.powi(2 * k as i32));
        let want = circle_even_moment(k);
        let closed = (1..=2 * k).product::<usize>() as f64 / (4f64.powi(k as i32) * ((1..=k).product::<usize>() as f64).powi(2));
        assert!((want - closed).abs() < 1e-15);
        assert!((m - want).abs() < 4.0 * se, "k={k}: {m} vs {want}");
    }
    for (p, q) in [(1, 0), (1, 1), (3, 1), (2, 1), (1, 2)] {
        let (m, se) = mean_se(&|c, s| c.powi(p) * s.powi(q));
        assert!(m.abs() < 4.0 * se, "E[U1^{p} U2^{q}] = {m}");
    }
}
