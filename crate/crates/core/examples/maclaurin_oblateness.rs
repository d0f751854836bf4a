//! Zonal coefficients and rotation rate of a Maclaurin spheroid.

use hill_orbits::model::{maclaurin_j2n, omega_e_squared};
use hill_orbits::HillParams;

fn main() -> hill_orbits::Result<()> {
    let (a_e, b_e) = (1.0, 0.8);
    for n in 1..=4 {
        println!("J{} = {:+.6e}", 2 * n, maclaurin_j2n(a_e, b_e, n)?);
    }
    println!("Omega_e^2 at r = 2: {:.10}", omega_e_squared(1.0, 2.0, a_e, b_e, 4)?);
    let params = HillParams::default().with_maclaurin_shape(0.5, 0.45, 3)?;
    println!("scaled zonal coefficients {:?}", params.j_tilde);
    Ok(())
}
