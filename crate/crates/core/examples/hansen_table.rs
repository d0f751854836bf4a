//! Tabulates the Hansen coefficients used by the perturbation series.

use hill_orbits::hansen::{choose_kmax, hansen_closed_form, HansenTable, SERIES_PAIRS};

fn main() -> hill_orbits::Result<()> {
    let e = 0.1;
    let k_max = choose_kmax(e, 1e-12)?;
    let table = HansenTable::new(e, k_max, &SERIES_PAIRS)?;
    println!("e = {e}, k_max = {k_max}, {} coefficients", table.len());
    for &(n, m) in &SERIES_PAIRS {
        print!("X^({n},{m}):");
        for k in -3..=5 {
            print!(" {:+.3e}", table.x(n, m, k));
        }
        println!();
        if let Some(exact) = hansen_closed_form(n, m, 0, e) {
            println!("  k = 0 closed form {exact:.15}, table {:.15}", table.x(n, m, 0));
        }
    }
    Ok(())
}
