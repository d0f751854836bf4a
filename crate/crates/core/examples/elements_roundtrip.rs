//! Converts one state through every element set and back.

use hill_orbits::elements::{
    cartesian_to_orbital, delaunay_from_orbital, orbital_to_cartesian, poincare_from_cartesian, cartesian_from_poincare,
};
use hill_orbits::OrbitalElements;

fn main() -> hill_orbits::Result<()> {
    let el = OrbitalElements { a: 1.2, e: 0.3, inc: 0.7, node: 1.0, peri: 2.5, mean_anomaly: 0.4 };
    let state = orbital_to_cartesian(&el)?;
    let delaunay = delaunay_from_orbital(&el)?;
    let poincare = poincare_from_cartesian(&state)?;
    println!("orbital   {el:?}");
    println!("cartesian {state:?}");
    println!("delaunay  {delaunay:?}");
    println!("poincare  {poincare:?}");

    let back = cartesian_from_poincare(&poincare)?;
    let err = (back.xi - state.xi).norm().max((back.eta - state.eta).norm());
    println!("round-trip error {err:.2e}");
    println!("recovered {:?}", cartesian_to_orbital(&back)?);

    // the Poincare set stays regular on a circular orbit
    let circular = OrbitalElements { e: 0.0, ..el };
    println!("circular  {:?}", poincare_from_cartesian(&orbital_to_cartesian(&circular)?)?);
    Ok(())
}
