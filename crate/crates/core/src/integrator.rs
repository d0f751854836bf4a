//! Adaptive propagation of the Cartesian equations of motion.
//!
//! The stepping is delegated to the 8(5,3) Dormand-Prince pair of the
//! `ode_solvers` crate. On top of it this module tracks the fast angles
//! `Q1`, `Q3` across accepted steps so that they come back unwrapped.

use std::cell::Cell;

use ode_solvers::dop853::Dop853;
use ode_solvers::{OutputType, System, Vector6};

use crate::elements::{cartesian_from_poincare, poincare_from_cartesian, wrap_pi, PoincareDelaunay};
use crate::error::{HillError, Result};
use crate::model::{generator_k, vector_field_packed, zonal_weights, HillParams};
use crate::CartesianState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Step cap; `None` lets the propagator choose one that keeps angle unwrapping safe.
    pub h_max: Option<f64>,
    pub max_steps: u32,
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max: None,
            max_steps: 2_000_000,
        }
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::with_tol(1e-12)
    }
}

struct Field<'a> {
    params: &'a HillParams,
    weights: Vec<f64>,
    failed: &'a Cell<bool>,
}

impl System<f64, Vector6<f64>> for Field<'_> {
    fn system(&self, _t: f64, y: &Vector6<f64>, dy: &mut Vector6<f64>) {
        let z = [y[0], y[1], y[2], y[3], y[4], y[5]];
        match vector_field_packed(&z, self.params, &self.weights) {
            Ok(d) => dy.copy_from_slice(&d),
            Err(_) => {
                self.failed.set(true);
                dy.fill(f64::NAN);
            }
        }
    }
}

/// Accepted steps of one propagation (endpoints included).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 6]>,
}

impl Trajectory {
    pub fn last(&self) -> [f64; 6] {
        *self.states.last().expect("trajectory is never empty")
    }
}

/// Largest step such that `Q1` and `Q3` advance well under `pi` per step.
fn default_h_max(params: &HillParams, z0: &[f64; 6]) -> f64 {
    let r = (z0[0] * z0[0] + z0[1] * z0[1] + z0[2] * z0[2]).sqrt();
    let v2 = z0[3] * z0[3] + z0[4] * z0[4] + z0[5] * z0[5];
    let energy = 0.5 * v2 - 1.0 / r;
    // mean motion nu / L^3 with L^2 = -1/(2 energy); fall back to the local rate when unbound
    let rate = if energy < 0.0 {
        params.nu() * (-2.0 * energy).powf(1.5)
    } else {
        params.nu() * v2.sqrt() / r
    };
    0.5 / (rate + 1.0)
}

/// Integrates the Cartesian flow from `z0` over the signed time `t`.
pub fn propagate(z0: &[f64; 6], t: f64, params: &HillParams, opts: &IntegratorOptions) -> Result<Trajectory> {
    if !t.is_finite() {
        return Err(HillError::domain("integration time must be finite"));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(HillError::domain("integration tolerances must be positive"));
    }
    if t == 0.0 {
        return Ok(Trajectory { times: vec![0.0], states: vec![*z0] });
    }
    let failed = Cell::new(false);
    let field = Field {
        params,
        weights: zonal_weights(params),
        failed: &failed,
    };
    let h_max = opts.h_max.unwrap_or_else(|| default_h_max(params, z0)).min(t.abs());
    let mut solver = Dop853::from_param(
        field,
        0.0,
        t,
        t,
        Vector6::from_column_slice(z0),
        opts.rtol,
        opts.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        h_max,
        0.0,
        opts.max_steps,
        1000,
        OutputType::Sparse,
    );
    let outcome = solver.integrate();
    if failed.get() {
        return Err(HillError::Singularity("trajectory reached r = 0".into()));
    }
    outcome.map_err(|e| HillError::Integration(e.to_string()))?;
    let times = solver.x_out().clone();
    let states: Vec<[f64; 6]> = solver
        .y_out()
        .iter()
        .map(|y| [y[0], y[1], y[2], y[3], y[4], y[5]])
        .collect();
    if states.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HillError::Integration("non-finite state".into()));
    }
    let end = *times.last().unwrap_or(&0.0);
    if (end - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(HillError::Integration(format!("stopped at t = {end} before {t}")));
    }
    Ok(Trajectory { times, states })
}

/// Endpoint of a propagation in Poincare-Delaunay variables with `Q1` and
/// `Q3` continued from the initial values along every accepted step.
#[derive(Debug, Clone)]
pub struct PoincarePropagation {
    pub end: PoincareDelaunay,
    /// Unwrapped Poincare-Delaunay state at every accepted step.
    pub states: Vec<PoincareDelaunay>,
    pub trajectory: Trajectory,
}

pub fn propagate_poincare(
    p0: &PoincareDelaunay,
    t: f64,
    params: &HillParams,
    opts: &IntegratorOptions,
) -> Result<PoincarePropagation> {
    let z0 = cartesian_from_poincare(p0)?.to_array();
    propagate_unwrapped(&z0, p0, t, params, opts)
}

/// Propagates the Cartesian state `z0`, reporting Poincare-Delaunay states whose
/// fast angles are continued from those of `reference` (the same point as `z0`,
/// possibly with unwrapped angles).
pub fn propagate_unwrapped(
    z0: &[f64; 6],
    reference: &PoincareDelaunay,
    t: f64,
    params: &HillParams,
    opts: &IntegratorOptions,
) -> Result<PoincarePropagation> {
    let trajectory = propagate(z0, t, params, opts)?;
    let mut q1 = reference.q1;
    let mut q3 = reference.q3;
    let mut states = Vec::with_capacity(trajectory.states.len());
    for z in trajectory.states.iter() {
        let p = poincare_from_cartesian(&CartesianState::from_array(z)).map_err(|e| {
            HillError::Integration(format!("trajectory left the elliptic domain: {e}"))
        })?;
        q1 += wrap_pi(p.q1 - q1);
        q3 += wrap_pi(p.q3 - q3);
        states.push(PoincareDelaunay { q1, q3, ..p });
    }
    let end = *states.last().expect("trajectory is never empty");
    Ok(PoincarePropagation { end, states, trajectory })
}

/// Largest relative change of the generator `K = -H_c` along a trajectory.
pub fn energy_drift(traj: &Trajectory, params: &HillParams) -> Result<f64> {
    let k0 = generator_k(&CartesianState::from_array(&traj.states[0]), params)?;
    let mut worst: f64 = 0.0;
    for z in &traj.states {
        let k = generator_k(&CartesianState::from_array(z), params)?;
        worst = worst.max((k - k0).abs());
    }
    Ok(worst / k0.abs().max(f64::MIN_POSITIVE))
}
