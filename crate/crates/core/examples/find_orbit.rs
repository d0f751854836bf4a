//! Solves for one doubly-symmetric periodic orbit with the default setup.

use hill_orbits::shooting::{solve_orbit, NewtonOptions, ShootingProblem};

fn main() -> hill_orbits::Result<()> {
    let problem = ShootingProblem::default();
    let rec = solve_orbit(&problem, &NewtonOptions::default())?;
    println!("converged in {} iterations, |psi| = {:.2e}", rec.iterations, rec.residual_norm);
    println!("X = {:?}", rec.x);
    println!("period {:.12}", rec.period);
    println!("closure {:.2e}", rec.closure_norm.unwrap_or(f64::NAN));
    println!("{}", serde_json::to_string_pretty(&rec).expect("record serializes"));
    Ok(())
}
