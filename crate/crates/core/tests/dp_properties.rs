use gauss_polytope_core::kernel::std_normal_cdf;
use gauss_polytope_core::{
    error_bound, normalize_last_column, quadrature_estimate, solve, solve_with, PolytopeProblem,
    SolveOptions,
};
use proptest::prelude::*;

fn figure2() -> PolytopeProblem {
    PolytopeProblem::from_rows(&[[0.5, 0.7, 1.0, 0.9], [0.2, 0.7, 0.5, 1.0]], &[2.0, 0.5]).unwrap()
}

#[test]
fn repeated_solves_are_bit_identical() {
    let p = figure2();
    let a = solve_with(&p, &SolveOptions::from_n(36.0)).unwrap();
    let b = solve_with(&p, &SolveOptions::from_n(36.0)).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.escaped_mass_max.to_bits(), b.escaped_mass_max.to_bits());
}

#[test]
fn orthant_error_shrinks_along_the_protocol() {
    let p = PolytopeProblem::from_rows(&[[1.0], [1.0]], &[0.0, 0.0]).unwrap();
    let errs: Vec<f64> = [25.0, 100.0, 400.0]
        .iter()
        .map(|&n| {
            let r = solve_with(&p, &SolveOptions::from_n(n)).unwrap();
            let err = (r.estimate - 0.5).abs();
            assert!(err <= r.bound.total);
            err
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn rotated_identity_against_closed_form() {
    // Rows e_1, e_2 leave the last column with a zero; after the rotation
    // the probability must still be Phi(b_1) Phi(b_2).
    let raw = PolytopeProblem::from_rows(&[[1.0, 0.0], [0.0, 1.0]], &[0.3, -0.2]).unwrap();
    let want = std_normal_cdf(0.3) * std_normal_cdf(-0.2);
    let p = normalize_last_column(&raw).unwrap().problem;
    assert!((quadrature_estimate(&p, 1e-12).unwrap() - want).abs() < 1e-9);
    let r = solve(&p, 20.0, 1.0 / 400.0).unwrap();
    assert!((r.estimate - want).abs() <= r.bound.total);
    assert!((r.estimate - want).abs() < 0.05, "{} vs {want}", r.estimate);
}

#[test]
fn three_step_instance_against_quadrature() {
    let p = PolytopeProblem::from_rows(&[[0.8, -0.4, 1.0], [0.3, 0.9, -0.7]], &[0.6, 0.4]).unwrap();
    let q = quadrature_estimate(&p, 1e-10).unwrap();
    let r = solve_with(&p, &SolveOptions::from_n(100.0)).unwrap();
    assert!((r.estimate - q).abs() <= r.bound.total);
    assert!((r.estimate - q).abs() < 0.1, "{} vs {q}", r.estimate);
}

#[test]
fn bound_matches_the_solver_report() {
    let p = figure2();
    let r = solve_with(&p, &SolveOptions::from_n(25.0)).unwrap();
    assert_eq!(r.bound, error_bound(&p, 5.0, 0.04).unwrap());
}

fn small_problem() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<f64>)> {
    (1usize..=2).prop_flat_map(|m| {
        (
            proptest::collection::vec(
                (-2.0f64..2.0, prop_oneof![-2.0f64..-0.2, 0.2f64..2.0]).prop_map(|(a, b)| [a, b]),
                m,
            ),
            proptest::collection::vec(-1.0f64..1.5, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_is_a_probability((rows, b) in small_problem()) {
        let p = PolytopeProblem::from_rows(&rows, &b).unwrap();
        let r = solve_with(&p, &SolveOptions::from_n(16.0)).unwrap();
        prop_assert!(r.estimate.is_finite());
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r.estimate), "{}", r.estimate);
    }

    #[test]
    fn estimate_is_monotone_in_b((rows, b) in small_problem(), bump in 0.0f64..0.5) {
        let p = PolytopeProblem::from_rows(&rows, &b).unwrap();
        let looser: Vec<f64> = b.iter().map(|v| v + bump).collect();
        let q = PolytopeProblem::from_rows(&rows, &looser).unwrap();
        let opts = SolveOptions::from_n(16.0);
        let lo = solve_with(&p, &opts).unwrap().estimate;
        let hi = solve_with(&q, &opts).unwrap().estimate;
        prop_assert!(hi >= lo, "{hi} < {lo}");
    }
}
