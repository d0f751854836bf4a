//! Doubly-symmetric periodic orbits by shooting between two Lagrangian planes.
//!
//! The flow is reversible under
//!
//! ```text
//! R1: (x1, x2, x3, y1, y2, y3, t) -> (x1, -x2, -x3, -y1, y2, y3, -t)
//! R2: (x1, x2, x3, y1, y2, y3, t) -> (x1, -x2, x3, -y1, y2, -y3, -t)
//! ```
//!
//! whose fixed sets are `L1 = {x2 = x3 = y1 = 0}` and `L2 = {x2 = y1 = y3 = 0}`.
//! An orbit leaving `L1` at `t = 0` and hitting `L2` at `t = T` is periodic with
//! period `4T`. In Poincare-Delaunay variables the two planes contain
//!
//! ```text
//! a: Q1 = i pi,        Q2 = 0, Q3 = j pi
//! b: Q1 = (i + k) pi,  Q2 = 0, Q3 = (j + m) pi + pi/2
//! ```
//!
//! The integrable approximation (Kepler plus rotation) carries the circular
//! point `(i pi, 0, j pi, P1*, 0, P3*)` from `a` to `b` in `T0* = (m + 1/2 - k) pi`
//! when `nu / L*^3 = (m + 1/2)/(m + 1/2 - k)`. The full problem is solved by
//! Newton iteration on three unknowns `(dT, dP2, dL)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::elements::{cartesian_from_poincare, e_cosi_from_poincare, CartesianState, PoincareDelaunay};
use crate::error::{HillError, Result};
use crate::integrator::{energy_drift, propagate, propagate_unwrapped, IntegratorOptions, PoincarePropagation};
use crate::model::{reflect_r1, reflect_r2, HillParams};

/// Integers selecting the two plane hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryConfig {
    pub i: i32,
    pub j: i32,
    pub k: i32,
    pub m: i32,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        Self { i: 0, j: 0, k: 0, m: 1 }
    }
}

impl SymmetryConfig {
    /// `T0* = (m + 1/2 - k) pi`.
    pub fn t0_star(&self) -> f64 {
        (self.m as f64 + 0.5 - self.k as f64) * PI
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0_star() > 0.0) {
            return Err(HillError::domain(format!(
                "quarter period (m + 1/2 - k) pi must be positive (k = {}, m = {})",
                self.k, self.m
            )));
        }
        if !(self.m as f64 + 0.5 > 0.0) {
            return Err(HillError::domain("m + 1/2 must be positive"));
        }
        Ok(())
    }

    /// Sign `(-1)^(m - k)` of the `dP2` entry of the leading Jacobian.
    pub fn parity(&self) -> f64 {
        if (self.m - self.k).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Corrections to the approximate solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Unknowns {
    #[serde(rename = "dT")]
    pub d_t: f64,
    #[serde(rename = "dP2")]
    pub d_p2: f64,
    #[serde(rename = "dL")]
    pub d_l: f64,
}

impl Unknowns {
    pub fn new(d_t: f64, d_p2: f64, d_l: f64) -> Self {
        Self { d_t, d_p2, d_l }
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.d_t, self.d_p2, self.d_l)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().amax()
    }
}

/// How `dL = dP1 + dP3` is distributed between the two momenta.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaLSplit {
    /// `dP3 = 0`, keeping `G - H` at its target value.
    #[default]
    P1,
    /// `dP1 = 0`.
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneTag {
    A,
    B,
}

/// One of the two Lagrangian planes, with membership tests in both variable sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianPlane {
    pub tag: PlaneTag,
    pub config: SymmetryConfig,
}

impl LagrangianPlane {
    pub fn a(config: SymmetryConfig) -> Self {
        Self { tag: PlaneTag::A, config }
    }

    pub fn b(config: SymmetryConfig) -> Self {
        Self { tag: PlaneTag::B, config }
    }

    /// Prescribed `(Q1, Q3)`.
    pub fn angles(&self) -> (f64, f64) {
        let c = &self.config;
        match self.tag {
            PlaneTag::A => (c.i as f64 * PI, c.j as f64 * PI),
            PlaneTag::B => ((c.i + c.k) as f64 * PI, (c.j + c.m) as f64 * PI + 0.5 * PI),
        }
    }

    /// Largest deviation from `Q1`, `Q2 = 0`, `Q3` (angles compared unwrapped).
    pub fn poincare_residual(&self, p: &PoincareDelaunay) -> f64 {
        let (q1, q3) = self.angles();
        (p.q1 - q1).abs().max(p.q2.abs()).max((p.q3 - q3).abs())
    }

    /// Largest of the Cartesian components that vanish on the plane:
    /// `(x2, x3, y1)` on `a`, `(x2, y1, y3)` on `b`.
    pub fn cartesian_residual(&self, z: &[f64; 6]) -> f64 {
        match self.tag {
            PlaneTag::A => z[1].abs().max(z[2].abs()).max(z[3].abs()),
            PlaneTag::B => z[1].abs().max(z[3].abs()).max(z[5].abs()),
        }
    }

    /// Fixed set of the matching reflection, zeroing the constrained components.
    pub fn project(&self, z: &[f64; 6]) -> [f64; 6] {
        let mut out = *z;
        match self.tag {
            PlaneTag::A => {
                out[1] = 0.0;
                out[2] = 0.0;
                out[3] = 0.0;
            }
            PlaneTag::B => {
                out[1] = 0.0;
                out[3] = 0.0;
                out[5] = 0.0;
            }
        }
        out
    }

    pub fn reflect(&self, z: &[f64; 6]) -> [f64; 6] {
        match self.tag {
            PlaneTag::A => reflect_r1(z),
            PlaneTag::B => reflect_r2(z),
        }
    }
}

/// `epsilon` from `epsilon^-3 = ((m + 1/2)/(m + 1/2 - k)) L*^3`.
pub fn epsilon_from_resonance(l_star: f64, k: i32, m: i32) -> Result<f64> {
    let num = m as f64 + 0.5;
    let den = num - k as f64;
    if !(l_star > 0.0) {
        return Err(HillError::domain("L* must be positive"));
    }
    if !(den > 0.0 && num > 0.0) {
        return Err(HillError::domain(format!(
            "resonance ratio (m + 1/2)/(m + 1/2 - k) must be positive (k = {k}, m = {m})"
        )));
    }
    Ok((den / num / l_star.powi(3)).cbrt())
}

/// Circular starting point on plane `a` and the quarter period of the approximation.
pub fn approx_initial(l_star: f64, p3_star: f64, config: &SymmetryConfig) -> Result<(PoincareDelaunay, f64)> {
    config.validate()?;
    if !(l_star > 0.0) {
        return Err(HillError::domain("L* must be positive"));
    }
    if !(p3_star > 0.0 && p3_star <= l_star) {
        return Err(HillError::domain(format!("P3* must lie in (0, L*], got {p3_star}")));
    }
    let (q1, q3) = LagrangianPlane::a(*config).angles();
    Ok((
        PoincareDelaunay::new([q1, 0.0, q3], [l_star - p3_star, 0.0, p3_star]),
        config.t0_star(),
    ))
}

/// Exact flow of the approximate system `nu F01 + F02` over time `t`:
/// `Q1 += (nu/L^3 - 1) t`, `Q3 += (nu/L^3) t`, and `(Q2, P2)` rotate at unit rate.
pub fn approx_flow(p: &PoincareDelaunay, t: f64, nu: f64) -> PoincareDelaunay {
    let rate = nu / p.big_l().powi(3);
    let (s, c) = t.sin_cos();
    PoincareDelaunay {
        q1: p.q1 + (rate - 1.0) * t,
        q2: p.q2 * c + p.p2 * s,
        q3: p.q3 + rate * t,
        p1: p.p1,
        p2: p.p2 * c - p.q2 * s,
        p3: p.p3,
    }
}

/// Everything that defines the shooting problem apart from the unknowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    pub config: SymmetryConfig,
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub p3_star: f64,
    #[serde(default)]
    pub split: DeltaLSplit,
    pub params: HillParams,
    pub tol_integrate: f64,
}

impl Default for ShootingProblem {
    fn default() -> Self {
        Self {
            config: SymmetryConfig::default(),
            l_star: 1.0,
            p3_star: 0.2,
            split: DeltaLSplit::P1,
            params: HillParams::default(),
            tol_integrate: 1e-12,
        }
    }
}

impl ShootingProblem {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.params.validate()?;
        if !(self.tol_integrate > 0.0) {
            return Err(HillError::domain("integration tolerance must be positive"));
        }
        approx_initial(self.l_star, self.p3_star, &self.config).map(|_| ())
    }

    fn options(&self) -> IntegratorOptions {
        IntegratorOptions::with_tol(self.tol_integrate)
    }

    /// `Z0 = Z0* + (0, 0, 0, dP1, dP2, dP3)`.
    pub fn initial_poincare(&self, x: &Unknowns) -> Result<PoincareDelaunay> {
        let (mut z, _) = approx_initial(self.l_star, self.p3_star, &self.config)?;
        match self.split {
            DeltaLSplit::P1 => z.p1 += x.d_l,
            DeltaLSplit::P3 => z.p3 += x.d_l,
        }
        z.p2 += x.d_p2;
        e_cosi_from_poincare(&z)?;
        Ok(z)
    }

    /// Cartesian image of `Z0`, projected exactly onto `L1`.
    pub fn initial_cartesian(&self, x: &Unknowns) -> Result<[f64; 6]> {
        let z = cartesian_from_poincare(&self.initial_poincare(x)?)?.to_array();
        Ok(LagrangianPlane::a(self.config).project(&z))
    }

    pub fn quarter_period(&self, x: &Unknowns) -> f64 {
        self.config.t0_star() + x.d_t
    }

    /// Full-flow trajectory from `Z0(X)` over the quarter period `T0* + dT`.
    pub fn quarter_arc(&self, x: &Unknowns) -> Result<PoincarePropagation> {
        let t = self.quarter_period(x);
        if !(t > 0.0) {
            return Err(HillError::domain(format!("quarter period T = {t} must be positive")));
        }
        let p0 = self.initial_poincare(x)?;
        let z0 = self.initial_cartesian(x)?;
        propagate_unwrapped(&z0, &p0, t, &self.params, &self.options())
    }
}

/// Integrates the full system from a Poincare-Delaunay point, returning the
/// endpoint with unwrapped fast angles.
pub fn integrate_full(z0: &PoincareDelaunay, t: f64, params: &HillParams, tol: f64) -> Result<PoincareDelaunay> {
    if t == 0.0 {
        return Ok(*z0);
    }
    let cart = cartesian_from_poincare(z0)?.to_array();
    Ok(propagate_unwrapped(&cart, z0, t, params, &IntegratorOptions::with_tol(tol))?.end)
}

/// Plane-`b` conditions at the end of the quarter arc:
///
/// ```text
/// psi1 = Q3(T) - Q1(T) - (j - i + m + 1/2 - k) pi
/// psi2 = Q2(T)
/// psi3 = (Q3(T) - j pi) / ((m + 1/2) pi) - 1
/// ```
pub fn residual_psi(x: &Unknowns, problem: &ShootingProblem) -> Result<Vector3<f64>> {
    let end = problem.quarter_arc(x)?.end;
    Ok(psi_from_endpoint(&end, &problem.config))
}

fn psi_from_endpoint(end: &PoincareDelaunay, c: &SymmetryConfig) -> Vector3<f64> {
    let half = c.m as f64 + 0.5;
    Vector3::new(
        end.q3 - end.q1 - (c.j as f64 - c.i as f64 + half - c.k as f64) * PI,
        end.q2,
        (end.q3 - c.j as f64 * PI) / (half * PI) - 1.0,
    )
}

/// Central-difference Jacobian of `psi` with per-column step `step`.
pub fn psi_jacobian(x: &Unknowns, problem: &ShootingProblem, step: f64) -> Result<Matrix3<f64>> {
    let base = x.to_vector();
    let mut jac = Matrix3::zeros();
    for col in 0..3 {
        let mut xp = base;
        let mut xm = base;
        xp[col] += step;
        xm[col] -= step;
        let fp = residual_psi(&Unknowns::from_vector(&xp), problem)?;
        let fm = residual_psi(&Unknowns::from_vector(&xm), problem)?;
        jac.set_column(col, &((fp - fm) / (2.0 * step)));
    }
    Ok(jac)
}

/// Leading Jacobian at `X = 0` with the perturbation switched off:
/// `[[1, 0, 0], [0, (-1)^(m-k), 0], [1/T0*, 0, -3/L*]]`.
pub fn jacobian_closed_form(config: &SymmetryConfig, l_star: f64) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0,
        0.0, config.parity(), 0.0,
        1.0 / config.t0_star(), 0.0, -3.0 / l_star,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Target for `max |psi_i|`.
    pub tol: f64,
    pub max_iter: usize,
    pub initial: Unknowns,
    /// Armijo sufficient-decrease constant on `|psi|^2`.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Reciprocal condition number below which the Jacobian is declared singular.
    pub min_rcond: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 25,
            initial: Unknowns::default(),
            armijo: 1e-4,
            max_backtracks: 12,
            min_rcond: 1e-8,
        }
    }
}

/// Finite-difference step for the Newton Jacobian.
pub fn newton_fd_step(x: &Unknowns) -> f64 {
    1e-7_f64.max(1e-4 * x.to_vector().norm())
}

/// Converged (or last) iterate with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub config: SymmetryConfig,
    pub params: HillParams,
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub p3_star: f64,
    pub split: DeltaLSplit,
    #[serde(rename = "X")]
    pub x: Unknowns,
    pub quarter_period: f64,
    pub period: f64,
    pub psi: [f64; 3],
    pub residual_norm: f64,
    /// Largest Cartesian component of `z(4T) - z(0)`; absent on failed solves.
    pub closure_norm: Option<f64>,
    pub energy_drift: Option<f64>,
    /// Cartesian distance from `L2` at `t = T`.
    pub plane_residual: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tol_integrate: f64,
    pub tol_newton: f64,
    pub initial_poincare: PoincareDelaunay,
    pub initial_cartesian: CartesianState,
}

impl OrbitRecord {
    pub fn problem(&self) -> ShootingProblem {
        ShootingProblem {
            config: self.config,
            l_star: self.l_star,
            p3_star: self.p3_star,
            split: self.split,
            params: self.params.clone(),
            tol_integrate: self.tol_integrate,
        }
    }
}

fn build_record(
    problem: &ShootingProblem,
    x: &Unknowns,
    psi: &Vector3<f64>,
    iterations: usize,
    converged: bool,
    tol_newton: f64,
    with_diagnostics: bool,
) -> Result<OrbitRecord> {
    let t = problem.quarter_period(x);
    let z0 = problem.initial_cartesian(x)?;
    let (closure, drift, plane) = if with_diagnostics {
        let opts = problem.options();
        let quarter = propagate(&z0, t, &problem.params, &opts)?;
        let plane = LagrangianPlane::b(problem.config).cartesian_residual(&quarter.last());
        let full = propagate(&z0, 4.0 * t, &problem.params, &opts)?;
        let end = full.last();
        let closure = (0..6).map(|i| (end[i] - z0[i]).abs()).fold(0.0, f64::max);
        (Some(closure), Some(energy_drift(&full, &problem.params)?), Some(plane))
    } else {
        (None, None, None)
    };
    Ok(OrbitRecord {
        config: problem.config,
        params: problem.params.clone(),
        l_star: problem.l_star,
        p3_star: problem.p3_star,
        split: problem.split,
        x: *x,
        quarter_period: t,
        period: 4.0 * t,
        psi: [psi[0], psi[1], psi[2]],
        residual_norm: psi.amax(),
        closure_norm: closure,
        energy_drift: drift,
        plane_residual: plane,
        iterations,
        converged,
        tol_integrate: problem.tol_integrate,
        tol_newton,
        initial_poincare: problem.initial_poincare(x)?,
        initial_cartesian: CartesianState::from_array(&z0),
    })
}

fn no_convergence(
    problem: &ShootingProblem,
    x: &Unknowns,
    psi: &Vector3<f64>,
    iterations: usize,
    tol: f64,
    reason: String,
) -> HillError {
    match build_record(problem, x, psi, iterations, false, tol, false) {
        Ok(rec) => HillError::NoConvergence {
            iterations,
            residual: psi.amax(),
            reason,
            last: Box::new(rec),
        },
        Err(e) => e,
    }
}

/// Damped Newton iteration on `psi(X) = 0` from `opts.initial`.
pub fn solve_orbit(problem: &ShootingProblem, opts: &NewtonOptions) -> Result<OrbitRecord> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(HillError::domain("Newton tolerance must be positive"));
    }
    let mut x = opts.initial;
    let mut psi = residual_psi(&x, problem)?;
    let mut iterations = 0;
    loop {
        if psi.amax() <= opts.tol {
            return build_record(problem, &x, &psi, iterations, true, opts.tol, true);
        }
        if iterations >= opts.max_iter {
            return Err(no_convergence(
                problem,
                &x,
                &psi,
                iterations,
                opts.tol,
                format!("iteration cap {} reached", opts.max_iter),
            ));
        }
        let jac = psi_jacobian(&x, problem, newton_fd_step(&x))?;
        let sv = jac.singular_values();
        let rcond = sv.min() / sv.max();
        if !(rcond >= opts.min_rcond) {
            return Err(no_convergence(
                problem,
                &x,
                &psi,
                iterations,
                opts.tol,
                format!("singular Jacobian (reciprocal condition {rcond:.2e})"),
            ));
        }
        let step = jac
            .lu()
            .solve(&(-psi))
            .ok_or_else(|| no_convergence(problem, &x, &psi, iterations, opts.tol, "singular Jacobian".into()))?;
        iterations += 1;

        let f0 = psi.norm_squared();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = Unknowns::from_vector(&(x.to_vector() + step * lambda));
            if let Ok(p) = residual_psi(&trial, problem) {
                if p.norm_squared() <= (1.0 - 2.0 * opts.armijo * lambda) * f0 {
                    accepted = Some((trial, p));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xn, pn)) => {
                x = xn;
                psi = pn;
            }
            None => {
                return Err(no_convergence(
                    problem,
                    &x,
                    &psi,
                    iterations,
                    opts.tol,
                    "line search found no residual decrease".into(),
                ))
            }
        }
    }
}

/// Residuals of the reflection structure of a solved orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Largest Cartesian component of `z(4T) - z(0)`.
    pub closure: f64,
    /// Distance from `L1` at `t = 0`.
    pub plane_a_residual: f64,
    /// Distance from `L2` at `t = T`.
    pub plane_b_residual: f64,
    /// `|R1 z(T) - z(-T)|`: the backward flow mirrors the forward quarter.
    pub mirror_residual: f64,
    /// `|z(2T) - R2 z(0)|`.
    pub half_period_residual: f64,
    pub energy_drift: f64,
}

impl SymmetryReport {
    pub fn worst(&self) -> f64 {
        [
            self.closure,
            self.plane_a_residual,
            self.plane_b_residual,
            self.mirror_residual,
            self.half_period_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_diff(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    (0..6).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Re-integrates a record from its Cartesian initial state and measures every
/// symmetry the orbit is supposed to have.
pub fn verify_double_symmetry(rec: &OrbitRecord, tol_integrate: f64) -> Result<SymmetryReport> {
    let opts = IntegratorOptions::with_tol(tol_integrate);
    let z0 = rec.initial_cartesian.to_array();
    let t = rec.quarter_period;
    let params = &rec.params;
    let plane_a = LagrangianPlane::a(rec.config);
    let plane_b = LagrangianPlane::b(rec.config);

    let quarter = propagate(&z0, t, params, &opts)?.last();
    let back = propagate(&z0, -t, params, &opts)?.last();
    let half = propagate(&z0, 2.0 * t, params, &opts)?.last();
    let full = propagate(&z0, 4.0 * t, params, &opts)?;
    Ok(SymmetryReport {
        closure: max_diff(&full.last(), &z0),
        plane_a_residual: plane_a.cartesian_residual(&z0),
        plane_b_residual: plane_b.cartesian_residual(&quarter),
        mirror_residual: max_diff(&reflect_r1(&quarter), &back),
        half_period_residual: max_diff(&half, &reflect_r2(&z0)),
        energy_drift: energy_drift(&full, params)?,
    })
}

/// Parameter varied along a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyParameter {
    EpsilonTilde,
    /// `Jt_2`; higher zonal terms follow the Maclaurin chain.
    J2,
}

impl FamilyParameter {
    pub fn apply(&self, params: &mut HillParams, value: f64) {
        match self {
            FamilyParameter::EpsilonTilde => params.epsilon_tilde = value,
            FamilyParameter::J2 => params.set_j2(value),
        }
    }

    pub fn read(&self, params: &HillParams) -> f64 {
        match self {
            FamilyParameter::EpsilonTilde => params.epsilon_tilde,
            FamilyParameter::J2 => params.j2(),
        }
    }
}

/// Natural-parameter continuation: each solve starts from the previous `X`.
pub fn continue_family(
    problem: &ShootingProblem,
    parameter: FamilyParameter,
    values: &[f64],
    opts: &NewtonOptions,
) -> Result<Vec<OrbitRecord>> {
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(HillError::domain("family parameter values must be strictly monotone"));
    }
    let mut out: Vec<OrbitRecord> = Vec::with_capacity(values.len());
    let mut guess = opts.initial;
    for (index, &v) in values.iter().enumerate() {
        let mut step_problem = problem.clone();
        parameter.apply(&mut step_problem.params, v);
        let step_opts = NewtonOptions { initial: guess, ..*opts };
        match solve_orbit(&step_problem, &step_opts) {
            Ok(rec) => {
                guess = rec.x;
                out.push(rec);
            }
            Err(source) => {
                return Err(HillError::PartialFamily {
                    index,
                    completed: out,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(out)
}

/// Largest deviation of the full quarter arc from the approximate flow, in
/// Poincare-Delaunay variables; the first-order correction magnitude is this
/// value divided by `epsilon_tilde`.
pub fn deviation_from_approximate(problem: &ShootingProblem, x: &Unknowns) -> Result<f64> {
    let arc = problem.quarter_arc(x)?;
    let p0 = problem.initial_poincare(x)?;
    let nu = problem.params.nu();
    let mut worst: f64 = 0.0;
    for (t, p) in arc.trajectory.times.iter().zip(&arc.states) {
        let a = approx_flow(&p0, *t, nu).to_array();
        let b = p.to_array();
        for i in 0..6 {
            worst = worst.max((a[i] - b[i]).abs());
        }
    }
    Ok(worst)
}

/// Constants of the contraction argument, estimated by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionConstants {
    /// `|psi_X(0, 0)^-1|`.
    pub c1: f64,
    /// `max |psi(0, et)| / et`.
    pub c2: f64,
    /// `max |psi_X(X, et) - psi_X(0, 0)| / (|X| + et)`.
    pub c3: f64,
}

/// Samples `X` on the vertices and axes of a cube of half-width `radius`
/// and the given perturbation strengths; all norms are max-norms.
pub fn contraction_constants(
    problem: &ShootingProblem,
    radius: f64,
    epsilon_tildes: &[f64],
    fd_step: f64,
) -> Result<ContractionConstants> {
    let base = problem.params.unperturbed();
    let p0 = ShootingProblem { params: base.clone(), ..problem.clone() };
    let j0 = psi_jacobian(&Unknowns::default(), &p0, fd_step)?;
    let inv = j0
        .try_inverse()
        .ok_or_else(|| HillError::Numerical("leading Jacobian is singular".into()))?;
    let c1 = inv.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);

    let mut dirs: Vec<Vector3<f64>> = Vec::new();
    for a in 0..3 {
        let mut v = Vector3::zeros();
        v[a] = 1.0;
        dirs.push(v);
        dirs.push(-v);
    }
    for s in 0..8 {
        dirs.push(Vector3::new(
            if s & 1 == 0 { 1.0 } else { -1.0 },
            if s & 2 == 0 { 1.0 } else { -1.0 },
            if s & 4 == 0 { 1.0 } else { -1.0 },
        ));
    }
    let opnorm = |m: &Matrix3<f64>| m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);

    let mut c2: f64 = 0.0;
    let mut c3: f64 = 0.0;
    for &et in epsilon_tildes {
        let mut pe = problem.clone();
        pe.params.epsilon_tilde = et;
        if et > 0.0 {
            c2 = c2.max(residual_psi(&Unknowns::default(), &pe)?.amax() / et);
        }
        for d in &dirs {
            let x = Unknowns::from_vector(&(d * radius));
            let j = psi_jacobian(&x, &pe, fd_step)?;
            c3 = c3.max(opnorm(&(j - j0)) / (x.norm() + et));
        }
    }
    Ok(ContractionConstants { c1, c2, c3 })
}
