//! Shows the restricted three-body Hamiltonian approaching the Hill
//! Hamiltonian as the mass ratio goes to zero.

use hill_orbits::model::{eval_ha_hill_scaled, eval_hb};
use nalgebra::Vector3;

fn main() -> hill_orbits::Result<()> {
    let (a_e, c2n) = (0.1, [2e-3]);
    let reference = (Vector3::new(0.5, 0.0, 0.0), Vector3::new(0.0, 0.5, 0.0));
    let probe = (Vector3::new(0.3, -0.4, 0.2), Vector3::new(0.1, 0.7, -0.2));
    println!("{:>8} {:>14}", "mu", "difference");
    for k in 2..=9 {
        let mu = 10f64.powi(-k);
        let offset = eval_ha_hill_scaled(&reference.0, &reference.1, mu, a_e, &c2n)?
            - eval_hb(&reference.0, &reference.1, a_e, &c2n)?;
        let ha = eval_ha_hill_scaled(&probe.0, &probe.1, mu, a_e, &c2n)? - offset;
        let hb = eval_hb(&probe.0, &probe.1, a_e, &c2n)?;
        println!("{mu:>8.0e} {:>14.4e}", (ha - hb).abs());
    }
    Ok(())
}
