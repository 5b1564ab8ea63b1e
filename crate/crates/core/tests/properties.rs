mod common;

use common::{naive_kron, random_stable};
use peakgain_core::linalg::{
    cholesky, eigenvalues, expm, kron, kron_power, kron_sum, solve_spd, Complex, Matrix,
};
use peakgain_core::model::{lift, lift_state, sprocedure_structure, verify_lift};
use peakgain_core::sdp::{check_feasibility, solve, LmiBlock, SdpProblem, SdpSettings, SdpStatus};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..4, 1usize..4)
}

/// Matrices with shapes (m×n, n×k) so the product exists.
fn product_pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(m, n, k)| (matrix(m, n), matrix(n, k)))
}

fn spd(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n).prop_map(move |m| &(&m * &m.transpose()) + &Matrix::identity(n).scale(0.5))
}

fn stable_system() -> impl Strategy<Value = peakgain_core::LtiSystem> {
    (any::<u64>(), 2usize..4).prop_map(|(seed, n)| random_stable(&mut StdRng::seed_from_u64(seed), n))
}

/// Matches each expected eigenvalue to a distinct computed one and
/// returns the worst distance.
fn match_spectra(expected: &[Complex], computed: &[Complex]) -> f64 {
    let mut used = vec![false; computed.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let (k, d) = computed
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, c)| (k, (c.re - e.re).hypot(c.im - e.im)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_matches_index_formula(a in dims().prop_flat_map(|(r, c)| matrix(r, c)),
                                  b in dims().prop_flat_map(|(r, c)| matrix(r, c))) {
        prop_assert!(kron(&a, &b).max_abs_diff(&naive_kron(&a, &b)) <= 1e-12);
    }

    #[test]
    fn kron_distributes_over_sums((a, b, c) in dims().prop_flat_map(|(r, c)| (matrix(2, 3), matrix(r, c), matrix(r, c)))) {
        let lhs = kron(&a, &(&b + &c));
        let rhs = &kron(&a, &b) + &kron(&a, &c);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn kron_mixed_product((a, c) in product_pair(), (b, d) in product_pair()) {
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn kron_power_of_product((a, b) in product_pair(), d in 1usize..4) {
        let lhs = kron_power(&(&a * &b), d);
        let rhs = &kron_power(&a, d) * &kron_power(&b, d);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn kron_generalized_mixed_product((a1, b1) in product_pair(), (a2, b2) in product_pair(), (a3, b3) in product_pair()) {
        let lhs = kron(&kron(&(&a1 * &b1), &(&a2 * &b2)), &(&a3 * &b3));
        let rhs = &kron(&kron(&a1, &a2), &a3) * &kron(&kron(&b1, &b2), &b3);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn kron_sum_matches_definition(a in (1usize..4).prop_flat_map(|n| matrix(n, n))) {
        let n = a.rows();
        let i = Matrix::identity(n);
        let two = &naive_kron(&a, &i) + &naive_kron(&i, &a);
        prop_assert!(kron_sum(&a, 2).max_abs_diff(&two) <= 1e-12);
        let three = &(&naive_kron(&naive_kron(&a, &i), &i) + &naive_kron(&naive_kron(&i, &a), &i))
            + &naive_kron(&naive_kron(&i, &i), &a);
        prop_assert!(kron_sum(&a, 3).max_abs_diff(&three) <= 1e-12);
    }

    #[test]
    fn expm_group_property(a in (1usize..5).prop_flat_map(|n| matrix(n, n)), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let lhs = expm(&a.scale(s + t));
        let rhs = &expm(&a.scale(s)) * &expm(&a.scale(t));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-11 * (1.0 + lhs.max_abs()));
        let inv = &expm(&a) * &expm(&a.scale(-1.0));
        prop_assert!(inv.max_abs_diff(&Matrix::identity(a.rows())) <= 1e-10 * (1.0 + expm(&a).max_abs()).powi(2));
    }

    #[test]
    fn expm_matches_taylor_series(a in (1usize..5).prop_flat_map(|n| matrix(n, n))) {
        let a = a.scale(0.25);
        let n = a.rows();
        let mut term = Matrix::identity(n);
        let mut sum = Matrix::identity(n);
        for k in 1..40 {
            term = (&term * &a).scale(1.0 / k as f64);
            sum = &sum + &term;
        }
        prop_assert!(expm(&a).max_abs_diff(&sum) <= 1e-13);
    }

    #[test]
    fn cholesky_round_trip(p in (1usize..6).prop_flat_map(spd)) {
        let l = cholesky(&p).unwrap();
        prop_assert!((&l * &l.transpose()).max_abs_diff(&p) <= 1e-12 * (1.0 + p.max_abs()));
        for i in 0..l.rows() {
            for j in i + 1..l.cols() {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn spd_solve_residual(p in (1usize..6).prop_flat_map(spd), seed in any::<u64>()) {
        let rhs = common::random_matrix(&mut StdRng::seed_from_u64(seed), p.rows(), 2);
        let x = solve_spd(&p, &rhs).unwrap();
        prop_assert!((&p * &x).max_abs_diff(&rhs) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lifted_dynamics_follow_chain_rule(sys in stable_system(),
                                         x in prop::collection::vec(-1.0..1.0f64, 3),
                                         u in -1.0..1.0f64) {
        let lifted = lift(&sys).unwrap();
        let x = &x[..sys.n()];
        prop_assert!(verify_lift(&sys, &lifted, x, u) <= 1e-10);
    }

    #[test]
    fn lifted_spectrum_is_pairwise_sums(sys in stable_system()) {
        let lam = sys.spectrum().eigenvalues.clone();
        let mut sums = Vec::new();
        for a in &lam {
            for b in &lam {
                sums.push(Complex::new(a.re + b.re, a.im + b.im));
            }
        }
        let lifted = eigenvalues(&kron_sum(sys.a(), 2)).unwrap();
        prop_assert!(match_spectra(&sums, &lifted.eigenvalues) <= 1e-8);
        let kappa = lift(&sys).unwrap().kappa().unwrap();
        prop_assert!((kappa - 2.0 * sys.kappa()).abs() <= 1e-8);
    }

    #[test]
    fn sprocedure_constraints_hold_on_lifted_states(n in 2usize..5,
                                                    x in prop::collection::vec(-2.0..2.0f64, 4),
                                                    u in -1.0..1.0f64) {
        let x = &x[..n];
        let s = sprocedure_structure(n).unwrap();
        let zeta = Matrix::column(&lift_state(x));
        let w = Matrix::column(&x.iter().map(|v| u * v).collect::<Vec<_>>());
        for e in &s.equality_matrices {
            let v = (&zeta.transpose() * &(e * &w))[(0, 0)];
            prop_assert!(v.abs() <= 1e-12);
        }
        for (i, &idx) in s.inequality_indices.iter().enumerate() {
            prop_assert!(w[(i, 0)] * w[(i, 0)] <= zeta[(idx - 1, 0)] + 1e-15);
            prop_assert!((zeta[(idx - 1, 0)] - x[i] * x[i]).abs() <= 1e-15);
        }
    }
}

/// minimize t s.t. [[t, cᵀ], [c, Q]] ⪰ 0, whose optimum is cᵀQ⁻¹c.
fn schur_problem(q: &Matrix, c: &[f64]) -> SdpProblem {
    let n = q.rows();
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    let mut block = LmiBlock::new(n + 1);
    let mut k = Matrix::zeros(n + 1, n + 1);
    k.set_block(1, 1, q);
    for (i, ci) in c.iter().enumerate() {
        k[(0, i + 1)] = *ci;
        k[(i + 1, 0)] = *ci;
    }
    block.constant = k;
    let mut e = Matrix::zeros(n + 1, n + 1);
    e[(0, 0)] = 1.0;
    block.add_term(0, e);
    p.blocks.push(block);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schur_family_matches_closed_form(q in spd(2), c in prop::collection::vec(-3.0..3.0f64, 2)) {
        prop_assume!(c[0].abs() + c[1].abs() > 0.1);
        let det = q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)];
        // cᵀ adj(Q) c / det
        let exact = (q[(1, 1)] * c[0] * c[0] - 2.0 * q[(0, 1)] * c[0] * c[1] + q[(0, 0)] * c[1] * c[1]) / det;
        let sol = solve(&schur_problem(&q, &c), &SdpSettings::default()).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!((sol.objective_value - exact).abs() <= 1e-6 * (1.0 + exact), "{} vs {}", sol.objective_value, exact);
    }

    #[test]
    fn weak_duality_and_feasible_optimum(q in spd(3), c in prop::collection::vec(-3.0..3.0f64, 3), cap in 0.5..5.0f64) {
        // second block: t <= cap + trace term keeps the problem bounded and
        // possibly infeasible
        let mut p = schur_problem(&q, &c);
        let mut upper = LmiBlock::new(1);
        upper.constant = Matrix::from_rows(&[[cap]]).unwrap();
        upper.add_term(0, Matrix::from_rows(&[[-1.0]]).unwrap());
        p.blocks.push(upper);
        let sol = solve(&p, &SdpSettings::default()).unwrap();
        match sol.status {
            SdpStatus::Optimal => {
                prop_assert!(sol.dual_bound <= sol.objective_value + 1e-7 * (1.0 + sol.objective_value.abs()));
                prop_assert!(check_feasibility(&p, &sol.y).unwrap().worst_eigenvalue() >= -1e-7);
                prop_assert!(sol.duality_gap <= 1e-8);
            }
            SdpStatus::Infeasible => {
                let x = solve_spd(&q, &Matrix::column(&c)).unwrap();
                let needed: f64 = c.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
                prop_assert!(needed > cap - 1e-6);
            }
            other => prop_assert!(false, "unexpected status {}", other),
        }
    }
}
