use std::sync::Arc;

use proptest::collection::vec;
use proptest::prelude::*;

use qflow_core::grid::{eta_cross_term, translate_field};
use qflow_core::oracle::{brute_force_step, exhaustive_matching_cost, implicit_euler_chain};
use qflow_core::qspace::{eta, metric_g_sq, rho_pav, translate, xi_inverse, xi_sorted};
use qflow_core::{
    dirichlet_energy, metric_g, minimize_step, GridDomain, QGridFunction, QPoint, SolverOptions,
};

fn scalars(q: usize) -> impl Strategy<Value = QPoint> {
    vec(-5.0..5.0f64, q).prop_map(|v| QPoint::scalars(&v).unwrap())
}

fn pair(n: usize, q: usize) -> impl Strategy<Value = (QPoint, QPoint)> {
    let pt = move || vec(vec(-5.0..5.0f64, n), q).prop_map(|p| QPoint::new(&p).unwrap());
    (pt(), pt())
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_ignores_input_order(mut v in vec(-5.0..5.0f64, 1..7), seed in any::<u64>()) {
        let a = QPoint::scalars(&v).unwrap();
        let shift = (seed as usize) % v.len();
        v.rotate_left(shift);
        v.reverse();
        prop_assert_eq!(a, QPoint::scalars(&v).unwrap());
    }

    #[test]
    fn sorted_pairing_is_optimal((a, b) in (1usize..7).prop_flat_map(|q| (scalars(q), scalars(q)))) {
        prop_assert_eq!(exhaustive_matching_cost(&a, &b).unwrap(), metric_g_sq(&a, &b).unwrap());
    }

    #[test]
    fn planar_metric_matches_enumeration((a, b) in (1usize..6).prop_flat_map(|q| pair(2, q))) {
        let fast = metric_g_sq(&a, &b).unwrap();
        let slow = exhaustive_matching_cost(&a, &b).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
    }

    #[test]
    fn xi_round_trips_and_is_isometric((a, b) in (1usize..7).prop_flat_map(|q| pair(1, q))) {
        let (xa, xb) = (xi_sorted(&a).unwrap(), xi_sorted(&b).unwrap());
        prop_assert_eq!(&xi_inverse(&xa).unwrap(), &a);
        let d: f64 = xa.iter().zip(&xb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((d - metric_g(&a, &b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn pav_output_is_sorted_and_mean_preserving(x in vec(-5.0..5.0f64, 1..12)) {
        let r = rho_pav(&x);
        prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
        let (sx, sr): (f64, f64) = (x.iter().sum(), r.iter().sum());
        prop_assert!((sx - sr).abs() <= 1e-12 * x.len() as f64 * 5.0);
        prop_assert_eq!(rho_pav(&r), r);
    }

    #[test]
    fn translation_shifts_the_mean(s in scalars(4), v in -5.0..5.0f64) {
        let moved = translate(&s, &[v]).unwrap();
        prop_assert!((eta(&moved)[0] - eta(&s)[0] - v).abs() <= 1e-14 * 10.0);
        prop_assert!((metric_g(&moved, &s).unwrap() - 2.0 * v.abs()).abs() <= 1e-12);
    }

    #[test]
    fn energy_expansion_on_a_disk(vals in vec(-2.0..2.0f64, 3 * 13), phi in vec(-2.0..2.0f64, 13)) {
        let dom = Arc::new(GridDomain::new(2, 5).unwrap());
        prop_assert_eq!(dom.node_count(), 13);
        let f = QGridFunction::new(dom.clone(), vals.chunks(3).map(|c| QPoint::scalars(c).unwrap()).collect()).unwrap();
        let p = QGridFunction::from_scalars(dom, &phi).unwrap();
        let lhs = dirichlet_energy(&translate_field(&f, &p).unwrap());
        let rhs = dirichlet_energy(&f) + 6.0 * eta_cross_term(&f, &p).unwrap() + 3.0 * dirichlet_energy(&p);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn scalar_step_matches_tridiagonal_solve(u in vec(-3.0..3.0f64, 15), tau in 1e-4..1.0f64) {
        let dom = Arc::new(GridDomain::new(1, 15).unwrap());
        let f = QGridFunction::from_scalars(dom.clone(), &u).unwrap();
        let (g, report) = minimize_step(&f, tau, &SolverOptions::default()).unwrap();
        prop_assert!(report.converged);
        let chain = implicit_euler_chain(&dom, &u, &[tau]).unwrap();
        for (x, c) in chain.iter().enumerate() {
            prop_assert!((g.value(x).coords()[0] - c).abs() <= 1e-9 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn tiny_pair_steps_reach_the_global_minimum(b0 in vec(-2.0..2.0f64, 5), b1 in vec(-2.0..2.0f64, 5), tau in 0.01..1.0f64) {
        let dom = Arc::new(GridDomain::new(1, 5).unwrap());
        let f = QGridFunction::from_branches(dom, &[b0, b1]).unwrap();
        let (_, global) = brute_force_step(&f, tau).unwrap();
        let (_, report) = minimize_step(&f, tau, &SolverOptions::default()).unwrap();
        prop_assert!(global <= report.objective + 1e-10);
        prop_assert!((report.objective - global).abs() <= 1e-8 * global.max(1.0));
    }
}
