use dexfdr_core::exact::*;
use dexfdr_core::rng::{Stream, StreamRole};
use dexfdr_core::stepup::{lsu, PValueSample};
use proptest::prelude::*;

#[test]
fn three_uniforms_against_brute_force() {
    let alpha = 0.3;
    let (b2, b3) = (2.0 * alpha / 3.0, alpha);
    let spec = BoundarySpec { m: 3, lower_bounds: vec![b2, b3] };
    let exact = boundary_noncrossing_prob(&spec, &|t| t).unwrap();
    let reps = 10_000_000u64;
    let mut st = Stream::new(77, 0, StreamRole::Nulls);
    let mut hits = 0u64;
    for _ in 0..reps {
        let mut x = [st.uniform(), st.uniform(), st.uniform()];
        x.sort_by(f64::total_cmp);
        if x[1] > b2 && x[2] > b3 {
            hits += 1;
        }
    }
    let p = hits as f64 / reps as f64;
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    assert!((p - exact).abs() < 3.0 * se, "{exact} vs {p} (se {se})");
}

#[test]
fn boundary_examples() {
    for m in [1, 5, 40] {
        let one = BoundarySpec { m, lower_bounds: vec![0.37] };
        let p = boundary_noncrossing_prob(&one, &|t| t).unwrap();
        assert!((p - (1.0 - 0.37f64.powi(m as i32))).abs() < 1e-14);
        let zero = BoundarySpec { m, lower_bounds: vec![0.0; m] };
        assert_eq!(boundary_noncrossing_prob(&zero, &|t| t).unwrap(), 1.0);
    }
    let bad = BoundarySpec { m: 3, lower_bounds: vec![0.5, 0.2] };
    assert!(boundary_noncrossing_prob(&bad, &|t| t).is_err());
    let big = BoundarySpec { m: EXACT_MAX_M + 1, lower_bounds: vec![0.1] };
    assert!(boundary_noncrossing_prob(&big, &|t| t).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn raising_a_bound_lowers_the_probability(
        mut b in prop::collection::vec(0.0..1.0f64, 1..12),
        extra in 1usize..5,
        k in any::<prop::sample::Index>(),
        bump in 0.0..0.3f64,
    ) {
        b.sort_by(f64::total_cmp);
        let m = b.len() + extra - 1;
        let spec = BoundarySpec { m, lower_bounds: b.clone() };
        let p = boundary_noncrossing_prob(&spec, &|t| t * t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        let i = k.index(b.len());
        let mut up = b.clone();
        up[i] = (up[i] + bump).min(if i + 1 < b.len() { b[i + 1] } else { 1.0 });
        let q = boundary_noncrossing_prob(&BoundarySpec { m, lower_bounds: up }, &|t| t * t).unwrap();
        prop_assert!(q <= p + 1e-12, "{} > {}", q, p);
    }
}

#[test]
fn linear_identity_examples() {
    let s = LinearNullSpec { gamma: 1.0, n0: 20, n: 20, t_star: 0.1 };
    assert!((exact_fdr_linear(&s, 0.1).unwrap() - 0.1).abs() < 1e-15);
    let s = LinearNullSpec { gamma: 1.0, n0: 0, n: 20, t_star: 0.1 };
    assert_eq!(exact_fdr_linear(&s, 0.1).unwrap(), 0.0);
    let s = LinearNullSpec { gamma: 11.0, n0: 5, n: 20, t_star: 0.1 };
    assert!(exact_fdr_linear(&s, 0.1).is_err());
    let s = LinearNullSpec { gamma: 1.0, n0: 5, n: 20, t_star: 0.05 };
    assert!(exact_fdr_linear(&s, 0.1).is_err());
}

/// Plain simulation of the step-up FDR with `n0` nulls drawn by inverse cdf.
fn simulated_fdr(quantile: impl Fn(f64) -> f64, n0: usize, n: usize, alpha: f64, reps: u64) -> (f64, f64) {
    let (mut s, mut sq) = (0.0, 0.0);
    for rep in 0..reps {
        let mut st = Stream::new(5, rep, StreamRole::Nulls);
        let mut p = vec![0.0; n];
        let mut labels = vec![false; n];
        for i in 0..n0 {
            p[i] = quantile(st.uniform());
            labels[i] = true;
        }
        let f = lsu(&PValueSample::new(p, labels).unwrap(), alpha).unwrap().fdp;
        s += f;
        sq += f * f;
    }
    let mean = s / reps as f64;
    (mean, ((sq / reps as f64 - mean * mean) / reps as f64).sqrt())
}

#[test]
fn iid_formula_matches_simulation_for_nonlinear_cdf() {
    // concave cdf sqrt(t): quantile u^2
    for (n0, n) in [(6, 10), (10, 10), (15, 30)] {
        let exact = exact_fdr_iid(&|t: f64| t.sqrt(), n0, n, 0.1).unwrap();
        let (m, se) = simulated_fdr(|u| u * u, n0, n, 0.1, 400_000);
        assert!((exact - m).abs() < 3.0 * se, "n0={n0} n={n}: {exact} vs {m} (se {se})");
    }
    // convex cdf t^2: quantile sqrt(u)
    let exact = exact_fdr_iid(&|t: f64| t * t, 8, 10, 0.2).unwrap();
    let (m, se) = simulated_fdr(f64::sqrt, 8, 10, 0.2, 400_000);
    assert!((exact - m).abs() < 3.0 * se.max(1e-6), "{exact} vs {m} (se {se})");
    assert_eq!(exact_fdr_iid(&|t| t, 0, 10, 0.1).unwrap(), 0.0);
    // uniform nulls reproduce the linear identity
    let e = exact_fdr_iid(&|t| t, 7, 12, 0.15).unwrap();
    assert!((e - 7.0 / 12.0 * 0.15).abs() < 1e-13);
}

#[test]
fn restricted_check_examples() {
    // reduces to the full-range identity at t* = alpha
    let s = LinearNullSpec { gamma: 1.5, n0: 8, n: 10, t_star: 0.2 };
    let c = restricted_fdr_check(&s, 0.2, 200_000, 3).unwrap();
    let full = exact_fdr_linear(&s, 0.2).unwrap();
    assert!((c.rhs - full).abs() < 1e-14);
    assert_eq!(c.r, 10);
    assert!((c.lhs - full).abs() < 3.0 * c.lhs_se, "{} vs {full}", c.lhs);

    let s = LinearNullSpec { gamma: 1.0, n0: 0, n: 10, t_star: 0.1 };
    let c = restricted_fdr_check(&s, 0.2, 1000, 3).unwrap();
    assert_eq!((c.lhs, c.rhs), (0.0, 0.0));

    let s = LinearNullSpec { gamma: 2.0, n0: 10, n: 12, t_star: 0.07 };
    let c = restricted_fdr_check(&s, 0.2, 300_000, 9).unwrap();
    assert_eq!(c.r, 4);
    assert!(c.rhs > 0.0);
    assert!((c.lhs - c.rhs).abs() < 3.0 * c.lhs_se, "{c:?}");
    assert!(c.rhs < exact_fdr_linear(&LinearNullSpec { t_star: 0.2, ..s }, 0.2).unwrap());

    let big = LinearNullSpec { gamma: 1.0, n0: 60, n: 60, t_star: 0.1 };
    assert!(restricted_fdr_check(&big, 0.2, 10, 0).is_err());
}
