//! Averages the perturbation over both fast angles and checks the
//! generating functions against the homological equation.

use hill_orbits::averaging::{
    doubly_averaged_hamiltonian, f1_bar, f1_doublebar, f1_elements, lie_first_order, mean_over_angle, w2_eval,
    FastAngle, LieDirection, TruncationSpec,
};
use hill_orbits::elements::poincare_from_orbital;
use hill_orbits::{HillParams, OrbitalElements};

fn main() -> hill_orbits::Result<()> {
    let params = HillParams::default();
    let trunc = TruncationSpec::default();
    let el = OrbitalElements { a: 1.0, e: 0.08, inc: 0.9, node: 0.3, peri: 1.7, mean_anomaly: 0.5 };
    let p = poincare_from_orbital(&el)?;

    let f1 = f1_elements(&p, &params, &trunc)?;
    let bar = f1_bar(&p, &params, &trunc)?;
    let quad = mean_over_angle(&p, FastAngle::Q1, 64, |q| f1_elements(q, &params, &trunc))?;
    let dbar = f1_doublebar(&p, &params)?;
    println!("F1 = {f1:.12}");
    println!("F1 averaged over Q1: closed form {bar:.12}, quadrature {quad:.12}");
    println!("F1 averaged over Q1 and Q3: {dbar:.12}");
    println!("averaged Hamiltonian {:.12}", doubly_averaged_hamiltonian(&p, &params)?);

    let w = w2_eval(&p, &params, &trunc)?;
    let lhs = dbar - f1;
    let rhs = (w.dw1_dq1 + w.dw2_dq3) / p.big_l().powi(3);
    println!("homological residual {:.2e}", lhs - rhs);

    let mean = lie_first_order(&p, &params, &trunc, LieDirection::Forward)?;
    println!("mean elements {mean:?}");
    Ok(())
}
