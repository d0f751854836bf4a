//! Re-integrates a solved orbit and measures its reflection symmetries.

use hill_orbits::shooting::{solve_orbit, verify_double_symmetry, NewtonOptions, ShootingProblem, SymmetryConfig};

fn main() -> hill_orbits::Result<()> {
    for config in [SymmetryConfig { i: 0, j: 0, k: 0, m: 1 }, SymmetryConfig { i: 0, j: 0, k: 0, m: 2 }] {
        let problem = ShootingProblem { config, ..ShootingProblem::default() };
        let rec = solve_orbit(&problem, &NewtonOptions::default())?;
        let report = verify_double_symmetry(&rec, 1e-12)?;
        println!("m = {}: period {:.6}", config.m, rec.period);
        println!("  closure          {:.2e}", report.closure);
        println!("  plane a / b      {:.2e} / {:.2e}", report.plane_a_residual, report.plane_b_residual);
        println!("  mirror, half     {:.2e} / {:.2e}", report.mirror_residual, report.half_period_residual);
        println!("  energy drift     {:.2e}", report.energy_drift);
    }
    Ok(())
}
