//! Continues the orbit family from the classical Hill problem to J2 = 0.1.

use hill_orbits::shooting::{continue_family, FamilyParameter, NewtonOptions, ShootingProblem};

fn main() -> hill_orbits::Result<()> {
    let problem = ShootingProblem::default();
    let values: Vec<f64> = (0..6).map(|i| 0.02 * i as f64).collect();
    let family = continue_family(&problem, FamilyParameter::J2, &values, &NewtonOptions::default())?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "J2", "dT", "dP2", "dL", "closure");
    for rec in &family {
        println!(
            "{:>6.3} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.2e}",
            rec.params.j2(),
            rec.x.d_t,
            rec.x.d_p2,
            rec.x.d_l,
            rec.closure_norm.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
