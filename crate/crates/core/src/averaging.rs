//! Element form of the first-order perturbation `F1`, its averages over the
//! fast angles `Q1` and `Q3`, and the first-order generating functions.
//!
//! With `u = f + omega`, `varpi = g + h`, `C = cos i = H/G` and `S = sin^2 i`:
//!
//! ```text
//! P2(xi1/r) = I1 + I2 cos 2(u - Omega) + I3 cos 2(u + Omega) + I4 (cos 2u + cos 2 Omega)
//! P2(xi3/r) = I5 - (3/4) S cos 2u
//! ```
//!
//! and every `(r/a)^n cos(m f + phi)` is expanded with Hansen coefficients,
//! `sum_k X_k^{n,m} cos(k M + phi)`. Lengths carry `a^2 = L^4` and `a^-3 = L^-6`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::elements::{e_cosi_from_poincare, PoincareDelaunay};
use crate::error::{HillError, Result};
use crate::hansen::{nodes_for, HansenTable, SERIES_PAIRS};
use crate::model::HillParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclinationCoeffs {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    /// `sin^2 i = 1 - H^2/G^2`.
    pub sin2i: f64,
}

pub fn inclination_coeffs(big_g: f64, big_h: f64) -> Result<InclinationCoeffs> {
    if !(big_g > 0.0) {
        return Err(HillError::domain(format!("G must be positive, got {big_g}")));
    }
    if big_h.abs() > big_g * (1.0 + 1e-14) {
        return Err(HillError::domain(format!("|H| = {} exceeds G = {big_g}", big_h.abs())));
    }
    let c = (big_h / big_g).clamp(-1.0, 1.0);
    let c2 = c * c;
    Ok(InclinationCoeffs {
        i1: 0.375 * c2 - 0.125,
        i2: 0.1875 * (1.0 - c).powi(2),
        i3: 0.1875 * (1.0 + c).powi(2),
        i4: 0.375 * (1.0 - c2),
        i5: 0.25 - 0.75 * c2,
        sin2i: 1.0 - c2,
    })
}

/// Truncation of the Hansen series: terms with `|k - m| <= k_max` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub k_max: usize,
    /// Eccentricity order the truncation has to resolve.
    pub e_order: usize,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { k_max: 8, e_order: 3 }
    }
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < self.e_order + 2 {
            return Err(HillError::domain(format!(
                "k_max = {} must be at least e_order + 2 = {}",
                self.k_max,
                self.e_order + 2
            )));
        }
        Ok(())
    }
}

/// Quantities of a Poincare-Delaunay point used by every series.
#[derive(Debug, Clone, Copy)]
struct Point {
    big_l: f64,
    e: f64,
    varpi: f64,
    q1: f64,
    q3: f64,
    incl: InclinationCoeffs,
}

impl Point {
    fn new(p: &PoincareDelaunay) -> Result<Self> {
        let (e, _) = e_cosi_from_poincare(p)?;
        let big_l = p.big_l();
        let big_g = big_l - p.l_minus_g();
        let big_h = big_g - p.p3;
        Ok(Self {
            big_l,
            e,
            varpi: p.varpi(),
            q1: p.q1,
            q3: p.q3,
            incl: inclination_coeffs(big_g, big_h)?,
        })
    }

    fn table(&self, k_max: usize) -> Result<HansenTable> {
        HansenTable::with_nodes(self.e, k_max, &SERIES_PAIRS, nodes_for(self.e, k_max))
    }

    /// `Jt_2 a_e^2 a^-3`, the weight of the zonal series.
    fn zonal_scale(&self, params: &HillParams) -> f64 {
        params.j2() * params.a_e * params.a_e * self.big_l.powi(-6)
    }
}

/// `F1` evaluated from its Hansen series truncated at `|k - m| <= k_max`.
pub fn f1_elements(p: &PoincareDelaunay, params: &HillParams, trunc: &TruncationSpec) -> Result<f64> {
    trunc.validate()?;
    let pt = Point::new(p)?;
    let t = pt.table(trunc.k_max)?;
    let km = trunc.k_max as i32;
    let (q1, q3, w) = (pt.q1, pt.q3, pt.varpi);
    let c = &pt.incl;
    let cos2node = (2.0 * (q1 - q3)).cos();

    let mut hill = 0.0;
    for k in -km..=km {
        let kf = k as f64;
        let x20 = t.x(2, 0, k);
        hill += (c.i1 + c.i4 * cos2node) * x20 * (kf * q1 - kf * w).cos();
    }
    for k in (2 - km)..=(2 + km) {
        let kf = k as f64;
        let x22 = t.x(2, 2, k);
        hill += x22
            * (c.i2 * ((kf - 4.0) * q1 + 4.0 * q3 + (2.0 - kf) * w).cos()
                + c.i3 * (kf * q1 + (2.0 - kf) * w).cos()
                + c.i4 * ((kf - 2.0) * q1 + 2.0 * q3 + (2.0 - kf) * w).cos());
    }

    let mut zonal = 0.0;
    if params.j2() != 0.0 {
        for k in (2 - km)..=(2 + km) {
            let kf = k as f64;
            zonal += -0.75 * c.sin2i * t.x(-3, 2, k) * ((kf - 2.0) * q1 + 2.0 * q3 + (2.0 - kf) * w).cos();
        }
        for k in -km..=km {
            let kf = k as f64;
            zonal += c.i5 * t.x(-3, 0, k) * (kf * q1 - kf * w).cos();
        }
    }
    Ok(pt.big_l.powi(4) * hill + pt.zonal_scale(params) * zonal)
}

/// Average of `F1` over `Q1` with `Q3`, `Q2` and the momenta held fixed.
pub fn f1_bar(p: &PoincareDelaunay, params: &HillParams, trunc: &TruncationSpec) -> Result<f64> {
    trunc.validate()?;
    let pt = Point::new(p)?;
    let t = pt.table(trunc.k_max.max(2))?;
    let (q3, w) = (pt.q3, pt.varpi);
    let c = &pt.incl;
    let hill = c.i1 * t.x(2, 0, 0)
        + c.i2 * t.x(2, 2, 4) * (4.0 * q3 - 2.0 * w).cos()
        + c.i3 * t.x(2, 2, 0) * (2.0 * w).cos()
        + c.i4 * t.x(2, 2, 2) * (2.0 * q3).cos()
        + 0.5 * c.i4 * (t.x(2, 0, -2) + t.x(2, 0, 2)) * (2.0 * q3 - 2.0 * w).cos();
    let zonal = -0.75 * c.sin2i * t.x(-3, 2, 2) * (2.0 * q3).cos() + c.i5 * t.x(-3, 0, 0);
    Ok(pt.big_l.powi(4) * hill + pt.zonal_scale(params) * zonal)
}

/// Average of [`f1_bar`] over `Q3` with `g + h` held fixed; closed form.
pub fn f1_doublebar(p: &PoincareDelaunay, params: &HillParams) -> Result<f64> {
    let pt = Point::new(p)?;
    let e2 = pt.e * pt.e;
    let c = &pt.incl;
    let hill = (1.0 + 1.5 * e2) * c.i1 + 2.5 * e2 * c.i3 * (2.0 * pt.varpi).cos();
    let zonal = (1.0 - e2).powf(-1.5) * c.i5;
    Ok(pt.big_l.powi(4) * hill + pt.zonal_scale(params) * zonal)
}

/// `F01 = 1/(2 (P1 + P3)^2)`.
pub fn f01_elements(p: &PoincareDelaunay) -> f64 {
    0.5 / p.big_l().powi(2)
}

/// `F02 = H = P1 - (P2^2 + Q2^2)/2`.
pub fn f02_elements(p: &PoincareDelaunay) -> f64 {
    p.big_h()
}

/// Doubly averaged Hamiltonian in Kepler-scaled time,
/// `F01 + kappa F02 + kappa et F1_doublebar` with `kappa = epsilon^3`.
///
/// Under the physical coupling `et = epsilon^3` this is
/// `F01 + et F02 + et^2 F1_doublebar`, i.e. `-et H_d`.
pub fn doubly_averaged_hamiltonian(p: &PoincareDelaunay, params: &HillParams) -> Result<f64> {
    let kappa = params.epsilon.powi(3);
    Ok(f01_elements(p) + kappa * f02_elements(p) + kappa * params.epsilon_tilde * f1_doublebar(p, params)?)
}

/// Small parameter of the first-order Lie transform, `epsilon^3 et` (`et^2` when coupled).
pub fn lie_parameter(params: &HillParams) -> f64 {
    params.epsilon.powi(3) * params.epsilon_tilde
}

/// Values of the two generating functions and their fast-angle derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2Values {
    pub w1: f64,
    pub w2: f64,
    pub dw1_dq1: f64,
    pub dw1_dq3: f64,
    pub dw2_dq3: f64,
}

impl W2Values {
    pub fn total(&self) -> f64 {
        self.w1 + self.w2
    }
}

/// Accumulates `a sin(phi)` together with the `Q1`, `Q3` derivatives of `phi`.
#[derive(Default)]
struct SineSum {
    value: f64,
    d_q1: f64,
    d_q3: f64,
}

impl SineSum {
    fn add(&mut self, amp: f64, c1: f64, c3: f64, phase: f64) {
        let (s, c) = phase.sin_cos();
        self.value += amp * s;
        self.d_q1 += amp * c1 * c;
        self.d_q3 += amp * c3 * c;
    }
}

/// Generating functions removing `Q1` and then `Q3` from `F1`:
/// `W1 = L^3 int (F1_bar - F1) dQ1` and `W2 = L^3 int (F1_doublebar - F1_bar) dQ3`,
/// each with zero mean in its integration angle.
pub fn w2_eval(p: &PoincareDelaunay, params: &HillParams, trunc: &TruncationSpec) -> Result<W2Values> {
    trunc.validate()?;
    let pt = Point::new(p)?;
    let t = pt.table(trunc.k_max.max(2))?;
    let km = trunc.k_max as i32;
    let (q1, q3, w) = (pt.q1, pt.q3, pt.varpi);
    let c = &pt.incl;

    // int (F1 - F1_bar) dQ1, Hill and zonal parts separately
    let mut hill = SineSum::default();
    for k in -km..=km {
        if k == 0 {
            continue;
        }
        let kf = k as f64;
        hill.add(c.i1 * t.x(2, 0, k) / kf, kf, 0.0, kf * q1 - kf * w);
    }
    for k in (2 - km)..=(2 + km) {
        let kf = k as f64;
        let x22 = t.x(2, 2, k);
        if k != 4 {
            hill.add(c.i2 * x22 / (kf - 4.0), kf - 4.0, 4.0, (kf - 4.0) * q1 + 4.0 * q3 + (2.0 - kf) * w);
        }
        if k != 0 {
            hill.add(c.i3 * x22 / kf, kf, 0.0, kf * q1 + (2.0 - kf) * w);
        }
        if k != 2 {
            hill.add(c.i4 * x22 / (kf - 2.0), kf - 2.0, 2.0, (kf - 2.0) * q1 + 2.0 * q3 + (2.0 - kf) * w);
        }
    }
    for k in -km..=km {
        let kf = k as f64;
        let x20 = t.x(2, 0, k);
        if k != -2 {
            hill.add(0.5 * c.i4 * x20 / (kf + 2.0), kf + 2.0, -2.0, (kf + 2.0) * q1 - kf * w - 2.0 * q3);
        }
        if k != 2 {
            hill.add(0.5 * c.i4 * x20 / (kf - 2.0), kf - 2.0, 2.0, (kf - 2.0) * q1 - kf * w + 2.0 * q3);
        }
    }
    let mut zonal = SineSum::default();
    if params.j2() != 0.0 {
        for k in (2 - km)..=(2 + km) {
            if k == 2 {
                continue;
            }
            let kf = k as f64;
            zonal.add(
                -0.75 * c.sin2i * t.x(-3, 2, k) / (kf - 2.0),
                kf - 2.0,
                2.0,
                (kf - 2.0) * q1 + 2.0 * q3 + (2.0 - kf) * w,
            );
        }
        for k in -km..=km {
            if k == 0 {
                continue;
            }
            let kf = k as f64;
            zonal.add(c.i5 * t.x(-3, 0, k) / kf, kf, 0.0, kf * q1 - kf * w);
        }
    }

    // int (F1_bar - F1_doublebar) dQ3
    let mut hill2 = SineSum::default();
    hill2.add(0.25 * c.i2 * t.x(2, 2, 4), 0.0, 4.0, 4.0 * q3 - 2.0 * w);
    hill2.add(0.5 * c.i4 * t.x(2, 2, 2), 0.0, 2.0, 2.0 * q3);
    hill2.add(0.25 * c.i4 * (t.x(2, 0, -2) + t.x(2, 0, 2)), 0.0, 2.0, 2.0 * q3 - 2.0 * w);
    let mut zonal2 = SineSum::default();
    zonal2.add(-0.375 * c.sin2i * t.x(-3, 2, 2), 0.0, 2.0, 2.0 * q3);

    let l3 = pt.big_l.powi(3);
    let a2 = pt.big_l.powi(4);
    let zs = pt.zonal_scale(params);
    let combine = |h: &SineSum, z: &SineSum| {
        (
            -l3 * (a2 * h.value + zs * z.value),
            -l3 * (a2 * h.d_q1 + zs * z.d_q1),
            -l3 * (a2 * h.d_q3 + zs * z.d_q3),
        )
    };
    let (w1, dw1_dq1, dw1_dq3) = combine(&hill, &zonal);
    let (w2, _, dw2_dq3) = combine(&hill2, &zonal2);
    Ok(W2Values { w1, w2, dw1_dq1, dw1_dq3, dw2_dq3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LieDirection {
    Forward,
    Inverse,
}

/// Relative step for momentum-like finite differences of `W`.
const FD_REL_STEP: f64 = 1e-6;

/// Gradient of `W = W1 + W2` in the order `(dQ1, dQ2, dQ3, dP1, dP2, dP3)`.
///
/// The fast-angle derivatives are exact term by term; the rest use central differences.
pub fn w2_gradient(p: &PoincareDelaunay, params: &HillParams, trunc: &TruncationSpec) -> Result<[f64; 6]> {
    let base = w2_eval(p, params, trunc)?;
    let z = p.to_array();
    let scale = z[3..].iter().map(|v| v.abs()).fold(1.0, f64::max);
    let h = FD_REL_STEP * scale;
    let mut grad = [0.0; 6];
    grad[0] = base.dw1_dq1;
    grad[2] = base.dw1_dq3 + base.dw2_dq3;
    for i in [1usize, 3, 4, 5] {
        let mut zp = z;
        let mut zm = z;
        zp[i] += h;
        zm[i] -= h;
        let wp = w2_eval(&PoincareDelaunay::from_array(&zp), params, trunc)?.total();
        let wm = w2_eval(&PoincareDelaunay::from_array(&zm), params, trunc)?.total();
        grad[i] = (wp - wm) / (2.0 * h);
    }
    Ok(grad)
}

/// First-order near-identity canonical change `z -> z +/- lambda {z, W}`
/// with `lambda = epsilon^3 et` and `{Q_i, W} = dW/dP_i`, `{P_i, W} = -dW/dQ_i`.
pub fn lie_first_order(
    p: &PoincareDelaunay,
    params: &HillParams,
    trunc: &TruncationSpec,
    direction: LieDirection,
) -> Result<PoincareDelaunay> {
    let lambda = lie_parameter(params);
    if lambda == 0.0 {
        return Ok(*p);
    }
    let sign = match direction {
        LieDirection::Forward => 1.0,
        LieDirection::Inverse => -1.0,
    };
    let g = w2_gradient(p, params, trunc)?;
    let z = p.to_array();
    let mut out = z;
    for i in 0..3 {
        out[i] += sign * lambda * g[i + 3];
        out[i + 3] -= sign * lambda * g[i];
    }
    let mapped = PoincareDelaunay::from_array(&out);
    e_cosi_from_poincare(&mapped).map_err(|_| {
        HillError::domain("first-order Lie map left the elliptic domain; reduce epsilon_tilde")
    })?;
    Ok(mapped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastAngle {
    Q1,
    Q3,
}

/// `(1/2pi) int_0^{2pi} f(p) dQ` over one fast angle by the periodic trapezoid rule.
pub fn mean_over_angle<F>(p: &PoincareDelaunay, angle: FastAngle, nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&PoincareDelaunay) -> Result<f64>,
{
    if nodes == 0 {
        return Err(HillError::domain("need at least one node"));
    }
    let mut acc = 0.0;
    for j in 0..nodes {
        let theta = TAU * j as f64 / nodes as f64;
        let mut q = *p;
        match angle {
            FastAngle::Q1 => q.q1 = theta,
            FastAngle::Q3 => q.q3 = theta,
        }
        acc += f(&q)?;
    }
    Ok(acc / nodes as f64)
}
