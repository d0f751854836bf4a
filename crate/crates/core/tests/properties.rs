use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use hill_orbits::averaging::{lie_first_order, lie_parameter, LieDirection, TruncationSpec};
use hill_orbits::elements::{
    cartesian_from_poincare, cartesian_to_orbital, orbital_to_cartesian, poincare_from_cartesian, poincare_from_orbital,
    solve_kepler, wrap_pi,
};
use hill_orbits::hansen::{hansen, HansenQuery};
use hill_orbits::integrator::{propagate, IntegratorOptions};
use hill_orbits::model::{eval_hc, eval_hc_split, reflect_r1, reflect_r2};
use hill_orbits::{CartesianState, HillParams, OrbitalElements, PoincareDelaunay};

fn elements() -> impl Strategy<Value = OrbitalElements> {
    (0.5..2.0f64, 0.0..0.8f64, 0.05..PI - 0.05, 0.0..TAU, 0.0..TAU, 0.0..TAU).prop_map(
        |(a, e, inc, node, peri, mean_anomaly)| OrbitalElements { a, e, inc, node, peri, mean_anomaly },
    )
}

fn max_abs_diff(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    (0..6).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cartesian_round_trip(el in elements()) {
        let s = orbital_to_cartesian(&el).unwrap();
        let back = orbital_to_cartesian(&cartesian_to_orbital(&s).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&s.to_array(), &back.to_array()) < 1e-11);
    }

    #[test]
    fn poincare_round_trip(el in elements()) {
        let p = poincare_from_orbital(&el).unwrap();
        let q = poincare_from_cartesian(&cartesian_from_poincare(&p).unwrap()).unwrap();
        for (i, (a, b)) in p.to_array().iter().zip(q.to_array()).enumerate() {
            let d = if i == 0 || i == 2 { wrap_pi(a - b) } else { a - b };
            prop_assert!(d.abs() < 1e-11, "component {i}: {a} vs {b}");
        }
    }

    #[test]
    fn kepler_residual(m in -20.0..20.0f64, e in 0.0..0.99f64) {
        let ea = solve_kepler(m, e).unwrap();
        prop_assert!((ea - e * ea.sin() - m).abs() < 1e-13 * m.abs().max(1.0));
    }

    #[test]
    fn kepler_winding(m in -PI..PI, e in 0.0..0.9f64, n in -3i32..3) {
        let shift = TAU * n as f64;
        let d = solve_kepler(m + shift, e).unwrap() - solve_kepler(m, e).unwrap() - shift;
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn hansen_reflection_symmetry(k in -6i32..6, e in 0.0..0.5f64, pair in 0usize..4) {
        let (n, m) = [(2, 0), (2, 2), (-3, 0), (-3, 2)][pair];
        let a = hansen(HansenQuery { n, m, k, e }).unwrap();
        let b = hansen(HansenQuery { n, m: -m, k: -k, e }).unwrap();
        prop_assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn split_reassembles_hamiltonian(el in elements(), et in 0.0..0.05f64, j2 in -0.05..0.05f64) {
        let mut params = HillParams { epsilon_tilde: et, ..HillParams::default() };
        params.set_j2(j2);
        let s = orbital_to_cartesian(&el).unwrap();
        let h = eval_hc(&s, &params).unwrap();
        let split = eval_hc_split(&s, &params).unwrap();
        prop_assert!((split.reassemble(&params) + h).abs() < 1e-12 * h.abs().max(1.0));
    }

    #[test]
    fn hamiltonian_invariant_under_reflections(el in elements()) {
        let params = HillParams { epsilon_tilde: 0.02, ..HillParams::default() };
        let z = orbital_to_cartesian(&el).unwrap().to_array();
        let h = eval_hc(&CartesianState::from_array(&z), &params).unwrap();
        for r in [reflect_r1(&z), reflect_r2(&z)] {
            let hr = eval_hc(&CartesianState::from_array(&r), &params).unwrap();
            prop_assert!((h - hr).abs() < 1e-13 * h.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flow_reversed_by_reflection(el in elements(), t in 0.1..2.0f64) {
        // R phi_t = phi_-t R for both anti-symplectic reflections
        let params = HillParams { epsilon_tilde: 0.01, ..HillParams::default() };
        let opts = IntegratorOptions::with_tol(1e-12);
        let z = orbital_to_cartesian(&OrbitalElements { e: el.e.min(0.5), ..el }).unwrap().to_array();
        let fwd = propagate(&z, t, &params, &opts).unwrap().last();
        for reflect in [reflect_r1 as fn(&[f64; 6]) -> [f64; 6], reflect_r2] {
            let back = propagate(&reflect(&z), -t, &params, &opts).unwrap().last();
            prop_assert!(max_abs_diff(&reflect(&fwd), &back) < 1e-9);
        }
    }
}

fn lie_point() -> PoincareDelaunay {
    let el = OrbitalElements { a: 1.1, e: 0.15, inc: 0.6, node: 0.4, peri: 1.3, mean_anomaly: 2.2 };
    poincare_from_orbital(&el).unwrap()
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn lie_inverse_is_second_order() {
    let p = lie_point();
    let trunc = TruncationSpec::default();
    let mut lambdas = Vec::new();
    let mut errs = Vec::new();
    for et in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let params = HillParams { epsilon_tilde: et, ..HillParams::default() };
        let fwd = lie_first_order(&p, &params, &trunc, LieDirection::Forward).unwrap();
        let back = lie_first_order(&fwd, &params, &trunc, LieDirection::Inverse).unwrap();
        lambdas.push(lie_parameter(&params));
        errs.push(max_abs_diff(&p.to_array(), &back.to_array()));
    }
    let slope = fit_slope(&lambdas, &errs);
    assert!((slope - 2.0).abs() < 0.15, "slope {slope}, errors {errs:?}");
}

#[test]
fn lie_map_symplectic_defect_is_second_order() {
    let p = lie_point();
    let trunc = TruncationSpec::default();
    let h = 1e-5;
    let mut lambdas = Vec::new();
    let mut defects = Vec::new();
    for et in [1e-2, 5e-3, 2.5e-3] {
        let params = HillParams { epsilon_tilde: et, ..HillParams::default() };
        let z = p.to_array();
        let mut jac = [[0.0; 6]; 6];
        for col in 0..6 {
            let (mut zp, mut zm) = (z, z);
            zp[col] += h;
            zm[col] -= h;
            let fp = lie_first_order(&PoincareDelaunay::from_array(&zp), &params, &trunc, LieDirection::Forward).unwrap();
            let fm = lie_first_order(&PoincareDelaunay::from_array(&zm), &params, &trunc, LieDirection::Forward).unwrap();
            let (fp, fm) = (fp.to_array(), fm.to_array());
            for row in 0..6 {
                jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        // D^T J D - J with J = [[0, I], [-I, 0]]
        let omega = |a: usize, b: usize| -> f64 {
            (0..3).map(|i| jac[i][a] * jac[i + 3][b] - jac[i + 3][a] * jac[i][b]).sum()
        };
        let mut worst: f64 = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                let target = if b == a + 3 { 1.0 } else if a == b + 3 { -1.0 } else { 0.0 };
                worst = worst.max((omega(a, b) - target).abs());
            }
        }
        lambdas.push(lie_parameter(&params));
        defects.push(worst);
    }
    let slope = fit_slope(&lambdas, &defects);
    assert!(slope > 1.7, "slope {slope}, defects {defects:?}");
}
