//! Hamiltonians of the Hill problem with an oblate secondary and the Cartesian
//! equations of motion.
//!
//! In scaled variables `(xi, eta)` the Hamiltonian reads
//!
//! ```text
//! H_c = nu (|eta|^2/2 - 1/r) - (xi1 eta2 - xi2 eta1) - et r^2 P2(xi1/r)
//!       - sum_n et^(2n-1) Jt_2n a_e^2n / r^(2n+1) P_2n(xi3/r)
//! ```
//!
//! with `nu = epsilon^-3` and `et = epsilon_tilde`. Grouping by powers gives
//! `-H_c = nu F01 + F02 + et F1 + et^3 FR`, where `F01 = 1/r - |eta|^2/2`,
//! `F02 = xi1 eta2 - xi2 eta1`, `F1 = r^2 P2(xi1/r) + Jt_2 a_e^2/r^3 P2(xi3/r)`
//! and `FR` holds the zonal terms `n >= 2`. The physical scaling ties
//! `et = epsilon^3`; the two are kept as separate fields so that the
//! perturbation can be dialed independently of the Kepler frequency.
//!
//! The flow is Hamilton's equations of `H_c`; the generator `K = -H_c` is
//! conserved along it.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::elements::CartesianState;
use crate::error::{HillError, Result};

/// Scaling and oblateness parameters of the scaled Hill problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    /// Kepler scaling; the Kepler term carries `epsilon^-3`.
    pub epsilon: f64,
    /// Perturbation scale multiplying `F1` (and `epsilon_tilde^3` multiplying `FR`).
    pub epsilon_tilde: f64,
    /// Scaled equatorial radius of the secondary.
    pub a_e: f64,
    /// Scaled polar radius, when the zonal coefficients come from a Maclaurin shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_e: Option<f64>,
    /// Scaled zonal coefficients `Jt_2, Jt_4, ...`; `N_zonal = j_tilde.len()`.
    pub j_tilde: Vec<f64>,
    /// Mass ratio, used only when comparing against the restricted problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl Default for HillParams {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            epsilon_tilde: 1e-3,
            a_e: 0.5,
            b_e: None,
            j_tilde: maclaurin_chain(0.01, 2),
            mu: None,
        }
    }
}

impl HillParams {
    /// Physical coupling `epsilon_tilde = epsilon^3`.
    pub fn coupled(epsilon: f64, a_e: f64, j_tilde: Vec<f64>) -> Self {
        Self {
            epsilon,
            epsilon_tilde: epsilon.powi(3),
            a_e,
            b_e: None,
            j_tilde,
            mu: None,
        }
    }

    /// Zonal coefficients of a homogeneous Maclaurin spheroid with radii
    /// `a_e >= b_e`, mapped through `C_2n = -J_2n` and `C_2n = epsilon^6n Jt_2n`.
    pub fn with_maclaurin_shape(mut self, a_e: f64, b_e: f64, n_zonal: usize) -> Result<Self> {
        let mut j = Vec::with_capacity(n_zonal);
        for n in 1..=n_zonal {
            let j2n = maclaurin_j2n(a_e, b_e, n)?;
            j.push(-j2n * self.epsilon.powi(-6 * n as i32));
        }
        self.a_e = a_e;
        self.b_e = Some(b_e);
        self.j_tilde = j;
        Ok(self)
    }

    /// Replaces `Jt_2` and rebuilds the higher terms with the Maclaurin chain.
    pub fn set_j2(&mut self, j2: f64) {
        let n = self.j_tilde.len().max(1);
        self.j_tilde = maclaurin_chain(j2, n);
    }

    pub fn j2(&self) -> f64 {
        self.j_tilde.first().copied().unwrap_or(0.0)
    }

    pub fn n_zonal(&self) -> usize {
        self.j_tilde.len()
    }

    /// `nu = epsilon^-3`.
    pub fn nu(&self) -> f64 {
        self.epsilon.powi(-3)
    }

    pub fn is_coupled(&self) -> bool {
        (self.epsilon_tilde - self.epsilon.powi(3)).abs() <= 1e-15 * self.epsilon_tilde.abs()
    }

    /// Switches every perturbation off, leaving the integrable approximate system.
    pub fn unperturbed(&self) -> Self {
        Self {
            epsilon_tilde: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(HillError::domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.epsilon_tilde >= 0.0) || !self.epsilon_tilde.is_finite() {
            return Err(HillError::domain(format!(
                "epsilon_tilde must be non-negative, got {}",
                self.epsilon_tilde
            )));
        }
        if !(self.a_e >= 0.0) || !self.a_e.is_finite() {
            return Err(HillError::domain(format!("a_e must be non-negative, got {}", self.a_e)));
        }
        if let Some(b) = self.b_e {
            if !(b > 0.0 && b <= self.a_e) {
                return Err(HillError::domain(format!("b_e must lie in (0, a_e], got {b}")));
            }
        }
        if !self.j_tilde.iter().all(|j| j.is_finite()) {
            return Err(HillError::domain("zonal coefficients must be finite"));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(HillError::domain(format!("mu must lie in (0, 1), got {mu}")));
            }
        }
        Ok(())
    }

    /// Multiplier of `a_e^2n / r^(2n+1) P_2n(xi3/r)` in `-H_c`.
    fn zonal_weight(&self, n: usize) -> f64 {
        self.epsilon_tilde.powi(2 * n as i32 - 1) * self.j_tilde[n - 1]
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Zonal harmonic `J_2n` of a homogeneous Maclaurin spheroid,
/// `(-1)^(n-1) (1 - b^2/a^2)^n prod_{k=1..n} (2k-1)/(2k+3)`.
pub fn maclaurin_j2n(a_e: f64, b_e: f64, n: usize) -> Result<f64> {
    if !(a_e > 0.0 && b_e > 0.0) {
        return Err(HillError::domain("spheroid radii must be positive"));
    }
    if b_e > a_e {
        return Err(HillError::domain(format!(
            "prolate body (b_e = {b_e} > a_e = {a_e}) is not modeled"
        )));
    }
    if n == 0 {
        return Err(HillError::domain("zonal degree index n must be >= 1"));
    }
    let s = 1.0 - (b_e / a_e).powi(2);
    let prod: f64 = (1..=n).map(|k| (2 * k - 1) as f64 / (2 * k + 3) as f64).product();
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * s.powi(n as i32) * prod)
}

/// Scaled zonal chain generated by `Jt_2` under the Maclaurin law:
/// `Jt_2n = (5 Jt_2)^n prod_{k=1..n} (2k-1)/(2k+3)`, so `Jt_4 = 15/7 Jt_2^2`.
pub fn maclaurin_chain(j2: f64, n_zonal: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_zonal);
    let mut acc = 1.0;
    for k in 1..=n_zonal {
        acc *= 5.0 * j2 * (2 * k - 1) as f64 / (2 * k + 3) as f64;
        out.push(acc);
    }
    out
}

/// Squared angular velocity of the primaries' circular motion when the
/// secondary carries the zonal field of a Maclaurin spheroid (gravitational constant 1).
pub fn omega_e_squared(m_total: f64, r: f64, a_e: f64, b_e: f64, n_terms: usize) -> Result<f64> {
    if !(r > a_e) {
        return Err(HillError::domain(format!(
            "separation r = {r} must exceed a_e = {a_e}"
        )));
    }
    if n_terms == 0 {
        return Err(HillError::domain("need at least one zonal term"));
    }
    let mut sum = 0.0;
    for n in 1..=n_terms {
        let j = maclaurin_j2n(a_e, b_e, n)?;
        let (p0, _) = legendre(2 * n, 0.0);
        sum += (2 * n + 1) as f64 * a_e.powi(2 * n as i32) / r.powi(2 * n as i32 + 2) * j * p0;
    }
    Ok(m_total * (1.0 - sum))
}

fn radius_checked(x: &Vector3<f64>) -> Result<f64> {
    let r = x.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(HillError::Singularity(format!("position {x:?} has r = {r}")));
    }
    Ok(r)
}

/// `sum_n w_n a^2n / r^(2n+1) P_2n(x3/r)` and its gradient, `n = 1..=weights.len()`.
fn zonal_sum(x: &Vector3<f64>, r: f64, a_e: f64, weights: &[f64]) -> (f64, Vector3<f64>) {
    let rho = 1.0 / r;
    let z = x[2] * rho;
    let mut value = 0.0;
    let mut grad = Vector3::zeros();
    let mut scale = rho; // a^2n rho^(2n+1)
    for (idx, &w) in weights.iter().enumerate() {
        let n = idx + 1;
        scale *= a_e * a_e * rho * rho;
        if w == 0.0 {
            continue;
        }
        let (p, dp) = legendre(2 * n, z);
        value += w * scale * p;
        let radial = -((2 * n + 1) as f64) * rho * rho * p;
        let mut g = x * (radial - dp * x[2] * rho * rho * rho);
        g[2] += dp * rho;
        grad += g * (w * scale);
    }
    (value, grad)
}

/// Hill problem with an oblate secondary in unscaled variables:
/// `|y|^2/2 - (x1 y2 - x2 y1) - 1/r - r^2 P2(x1/r) - Ut`,
/// `Ut = (1/r) sum_n (a_e/r)^2n C_2n P_2n(x3/r)`.
pub fn eval_hb(x: &Vector3<f64>, y: &Vector3<f64>, a_e: f64, c2n: &[f64]) -> Result<f64> {
    let r = radius_checked(x)?;
    let (p2, _) = legendre(2, x[0] / r);
    let (ut, _) = zonal_sum(x, r, a_e, c2n);
    Ok(0.5 * y.norm_squared() - (x[0] * y[1] - x[1] * y[0]) - 1.0 / r - r * r * p2 - ut)
}

/// Restricted three-body Hamiltonian near the secondary (origin at the
/// secondary, `x1` axis toward the primary), with zonal field
/// `-(mu/r) sum_n (a_e/r)^2n J_2n P_2n(x3/r)` on the secondary.
pub fn eval_ha(x: &Vector3<f64>, y: &Vector3<f64>, mu: f64, a_e: f64, j2n: &[f64]) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(HillError::domain(format!("mu must lie in (0, 1), got {mu}")));
    }
    let r = radius_checked(x)?;
    let d2 = 1.0 + r * r - 2.0 * x[0];
    if !(d2 > 0.0) {
        return Err(HillError::Singularity("collision with the primary".into()));
    }
    let c = 1.0 - mu;
    let kinetic = 0.5 * (y[0] * y[0] + (y[1] - c).powi(2) + y[2] * y[2]);
    let coriolis = (x[0] - c) * (y[1] - c) - x[1] * y[0];
    let u1 = c / d2.sqrt();
    let (zon, _) = zonal_sum(x, r, a_e, j2n);
    let u2 = mu / r - mu * zon;
    Ok(kinetic - coriolis - u1 - u2)
}

/// `mu^(-2/3) H_a` at the Hill-scaled state `x = mu^(1/3) X`, `y = mu^(1/3) Y`
/// with `a_e = mu^(1/3) A_e` and `J_2n = -C_2n`.
///
/// As `mu -> 0` this tends to `eval_hb(X, Y, A_e, C_2n)` up to an additive
/// constant that diverges like `mu^(-2/3)`; the remainder is `O(mu^(1/3))`.
pub fn eval_ha_hill_scaled(x: &Vector3<f64>, y: &Vector3<f64>, mu: f64, a_e: f64, c2n: &[f64]) -> Result<f64> {
    let s = mu.cbrt();
    let j2n: Vec<f64> = c2n.iter().map(|c| -c).collect();
    Ok(eval_ha(&(x * s), &(y * s), mu, a_e * s, &j2n)? * s.powi(-2))
}

/// `(1-mu) sum_{n<=degree} P_n(x1/r) r^n`, the Legendre expansion of the primary's potential.
pub fn primary_potential_series(x: &Vector3<f64>, mu: f64, degree: usize) -> f64 {
    let r = x.norm();
    let c = if r > 0.0 { x[0] / r } else { 0.0 };
    (0..=degree).map(|n| legendre(n, c).0 * r.powi(n as i32)).sum::<f64>() * (1.0 - mu)
}

/// Components of `-H_c = nu F01 + F02 + et F1 + et^3 FR` at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitValues {
    #[serde(rename = "F01")]
    pub f01: f64,
    #[serde(rename = "F02")]
    pub f02: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "FR")]
    pub fr: f64,
}

impl SplitValues {
    /// `nu F01 + F02 + et F1 + et^3 FR`, i.e. `-H_c`.
    pub fn reassemble(&self, params: &HillParams) -> f64 {
        let et = params.epsilon_tilde;
        params.nu() * self.f01 + self.f02 + et * self.f1 + et.powi(3) * self.fr
    }
}

/// `r^2 P2(xi1/r) + Jt_2 a_e^2 / r^3 P2(xi3/r)`.
pub fn f1_cartesian(xi: &Vector3<f64>, params: &HillParams) -> Result<f64> {
    let r = radius_checked(xi)?;
    let hill = 1.5 * xi[0] * xi[0] - 0.5 * r * r;
    let (zon, _) = zonal_sum(xi, r, params.a_e, &params.j_tilde[..params.n_zonal().min(1)]);
    Ok(hill + zon)
}

/// Zonal terms of degree `2n >= 4`, with their relative powers of `et` (`et^(2n-4)`).
pub fn fr_cartesian(xi: &Vector3<f64>, params: &HillParams) -> Result<f64> {
    let r = radius_checked(xi)?;
    if params.n_zonal() < 2 {
        return Ok(0.0);
    }
    let et = params.epsilon_tilde;
    let weights: Vec<f64> = params
        .j_tilde
        .iter()
        .enumerate()
        .map(|(i, j)| if i == 0 { 0.0 } else { et.powi(2 * i as i32 - 2) * j })
        .collect();
    Ok(zonal_sum(xi, r, params.a_e, &weights).0)
}

pub fn eval_hc_split(s: &CartesianState, params: &HillParams) -> Result<SplitValues> {
    let r = radius_checked(&s.xi)?;
    Ok(SplitValues {
        f01: 1.0 / r - 0.5 * s.eta.norm_squared(),
        f02: s.xi[0] * s.eta[1] - s.xi[1] * s.eta[0],
        f1: f1_cartesian(&s.xi, params)?,
        fr: fr_cartesian(&s.xi, params)?,
    })
}

/// `H_c` evaluated term by term in its unsplit form.
pub fn eval_hc(s: &CartesianState, params: &HillParams) -> Result<f64> {
    let r = radius_checked(&s.xi)?;
    let (xi, eta) = (&s.xi, &s.eta);
    let kepler = params.nu() * (0.5 * eta.norm_squared() - 1.0 / r);
    let rot = xi[0] * eta[1] - xi[1] * eta[0];
    let (p2, _) = legendre(2, xi[0] / r);
    let weights: Vec<f64> = (1..=params.n_zonal()).map(|n| params.zonal_weight(n)).collect();
    let (zon, _) = zonal_sum(xi, r, params.a_e, &weights);
    Ok(kepler - rot - params.epsilon_tilde * r * r * p2 - zon)
}

/// The conserved generator `K = -H_c`.
pub fn generator_k(s: &CartesianState, params: &HillParams) -> Result<f64> {
    Ok(-eval_hc(s, params)?)
}

/// Right-hand side on a packed state `(xi, eta)`, Hamilton's equations of `H_c`:
///
/// ```text
/// xi'  = nu eta + (xi2, -xi1, 0)
/// eta' = -nu xi/r^3 + (eta2, -eta1, 0) + et (2 xi1, -xi2, -xi3) + grad(zonal terms)
/// ```
pub fn vector_field_packed(z: &[f64; 6], params: &HillParams, weights: &[f64]) -> Result<[f64; 6]> {
    let xi = Vector3::new(z[0], z[1], z[2]);
    let r = radius_checked(&xi)?;
    let nu = params.nu();
    let et = params.epsilon_tilde;
    let (_, gz) = zonal_sum(&xi, r, params.a_e, weights);
    let k = nu / (r * r * r);
    Ok([
        nu * z[3] + z[1],
        nu * z[4] - z[0],
        nu * z[5],
        -k * z[0] + z[4] + et * 2.0 * z[0] + gz[0],
        -k * z[1] - z[3] - et * z[1] + gz[1],
        -k * z[2] - et * z[2] + gz[2],
    ])
}

/// Zonal weights `et^(2n-1) Jt_2n` consumed by [`vector_field_packed`].
pub fn zonal_weights(params: &HillParams) -> Vec<f64> {
    (1..=params.n_zonal()).map(|n| params.zonal_weight(n)).collect()
}

pub fn vector_field(s: &CartesianState, params: &HillParams) -> Result<CartesianState> {
    let d = vector_field_packed(&s.to_array(), params, &zonal_weights(params))?;
    Ok(CartesianState::from_array(&d))
}

/// `R1: (x1, -x2, -x3, -y1, y2, y3)`, paired with `t -> -t`.
pub fn reflect_r1(z: &[f64; 6]) -> [f64; 6] {
    [z[0], -z[1], -z[2], -z[3], z[4], z[5]]
}

/// `R2: (x1, -x2, x3, -y1, y2, -y3)`, paired with `t -> -t`.
pub fn reflect_r2(z: &[f64; 6]) -> [f64; 6] {
    [z[0], -z[1], z[2], -z[3], z[4], -z[5]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> HillParams {
        HillParams {
            epsilon: 0.8,
            epsilon_tilde: 0.3,
            a_e: 0.5,
            b_e: None,
            j_tilde: vec![0.05, -0.02, 0.01],
            mu: None,
        }
    }

    fn random_state(rng: &mut ChaCha8Rng) -> [f64; 6] {
        let mut z = [0.0; 6];
        for v in z.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        z[0] += 1.5;
        z
    }

    #[test]
    fn legendre_known_values() {
        assert_eq!(legendre(2, 1.0).0, 1.0);
        assert_eq!(legendre(2, 0.0).0, -0.5);
        assert!((legendre(4, 0.0).0 - 0.375).abs() < 1e-15);
        let x: f64 = 0.3;
        let p4 = (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0;
        let d4 = (140.0 * x.powi(3) - 60.0 * x) / 8.0;
        let (p, d) = legendre(4, x);
        assert!((p - p4).abs() < 1e-15 && (d - d4).abs() < 1e-14);
    }

    #[test]
    fn maclaurin_values() {
        assert_eq!(maclaurin_j2n(1.0, 1.0, 3).unwrap(), 0.0);
        assert!((maclaurin_j2n(1.0, 0.8, 1).unwrap() - 0.072).abs() < 1e-15);
        let j4 = -(0.36f64.powi(2)) * 0.2 * 3.0 / 7.0;
        assert!((maclaurin_j2n(1.0, 0.8, 2).unwrap() - j4).abs() < 1e-15);
        assert!((j4 + 0.0111086).abs() < 1e-7);
        for n in 1..6 {
            let a = maclaurin_j2n(1.0, 0.7, n).unwrap();
            let b = maclaurin_j2n(1.0, 0.7, n + 1).unwrap();
            assert!(a * b < 0.0);
        }
        assert!(maclaurin_j2n(0.8, 1.0, 1).is_err());
    }

    #[test]
    fn chain_matches_shape_law() {
        // the chain from Jt_2 = -J_2 reproduces -J_2n of the same spheroid
        let j2 = maclaurin_j2n(1.0, 0.6, 1).unwrap();
        let chain = maclaurin_chain(-j2, 4);
        for n in 1..=4 {
            let jn = maclaurin_j2n(1.0, 0.6, n).unwrap();
            assert!((chain[n - 1] + jn).abs() < 1e-15, "n={n}");
        }
        assert!((maclaurin_chain(0.01, 2)[1] - 15.0 / 7.0 * 1e-4).abs() < 1e-18);
    }

    #[test]
    fn omega_e_squared_values() {
        assert_eq!(omega_e_squared(1.0, 3.0, 0.5, 0.5, 4).unwrap(), 1.0);
        let v = omega_e_squared(1.0, 2.0, 0.5, 0.4, 1).unwrap();
        assert!((v - 1.0016875).abs() < 1e-15);
        let mut prev = omega_e_squared(1.0, 2.0, 0.5, 0.4, 1).unwrap();
        for n in 2..8 {
            let next = omega_e_squared(1.0, 2.0, 0.5, 0.4, n).unwrap();
            assert!((next - prev).abs() < 0.25f64.powi(2 * (n as i32 - 1)));
            prev = next;
        }
        assert!(omega_e_squared(1.0, 0.4, 0.5, 0.4, 1).is_err());
    }

    #[test]
    fn hb_values() {
        let x = Vector3::new(1.0, 0.0, 0.0);
        let y = Vector3::new(0.0, 1.0, 0.0);
        assert!((eval_hb(&x, &y, 0.0, &[]).unwrap() + 2.5).abs() < 1e-15);
        let on_axis = eval_hb(&Vector3::new(0.0, 0.0, 1.0), &Vector3::zeros(), 0.0, &[]).unwrap();
        assert!((on_axis - (-1.0 + 0.5)).abs() < 1e-15);
        assert!(matches!(eval_hb(&Vector3::zeros(), &y, 0.0, &[]), Err(HillError::Singularity(_))));
    }

    #[test]
    fn f1_values() {
        let p = HillParams { j_tilde: vec![0.2], a_e: 0.5, ..HillParams::default() };
        let j = 0.2 * 0.25;
        assert!((f1_cartesian(&Vector3::new(1.0, 0.0, 0.0), &p).unwrap() - (1.0 - j / 2.0)).abs() < 1e-15);
        assert!((f1_cartesian(&Vector3::new(0.0, 0.0, 1.0), &p).unwrap() - (-0.5 + j)).abs() < 1e-15);
    }

    #[test]
    fn split_identity_and_single_zonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = params();
        for _ in 0..100 {
            let s = CartesianState::from_array(&random_state(&mut rng));
            let split = eval_hc_split(&s, &p).unwrap();
            let hc = eval_hc(&s, &p).unwrap();
            assert!((split.reassemble(&p) + hc).abs() <= 1e-12 * hc.abs().max(1.0));
        }
        let one = HillParams { j_tilde: vec![0.05], ..params() };
        let s = CartesianState::new([0.3, 0.4, 0.5], [0.1, 0.2, 0.3]);
        assert_eq!(eval_hc_split(&s, &one).unwrap().fr, 0.0);
    }

    #[test]
    fn hc_is_scaled_hb_when_coupled() {
        let eps: f64 = 0.7;
        let p = HillParams::coupled(eps, 0.4, vec![0.03, 0.002]);
        let c2n: Vec<f64> = p.j_tilde.iter().enumerate().map(|(i, j)| eps.powi(6 * (i as i32 + 1)) * j).collect();
        let s = CartesianState::new([0.8, -0.3, 0.45], [0.2, 1.1, -0.4]);
        let x = s.xi * eps * eps;
        let y = s.eta / eps;
        let hb = eval_hb(&x, &y, p.a_e * eps * eps, &c2n).unwrap();
        let hc = eval_hc(&s, &p).unwrap();
        assert!((hc - hb / eps).abs() < 1e-13 * hc.abs().max(1.0));
    }

    #[test]
    fn field_matches_finite_difference_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params();
        let w = zonal_weights(&p);
        for _ in 0..100 {
            let z = random_state(&mut rng);
            let f = vector_field_packed(&z, &p, &w).unwrap();
            let hc = |z: &[f64; 6]| eval_hc(&CartesianState::from_array(z), &p).unwrap();
            for i in 0..6 {
                let h = 1e-6 * z[i].abs().max(1.0);
                let mut zp = z;
                let mut zm = z;
                zp[i] += h;
                zm[i] -= h;
                let d = (hc(&zp) - hc(&zm)) / (2.0 * h);
                // xi' = dH/deta, eta' = -dH/dxi
                let expect = if i < 3 { -f[i + 3] } else { f[i - 3] };
                let scale = f.iter().map(|v| v.abs()).fold(1.0, f64::max);
                assert!((d - expect).abs() <= 1e-8 * scale, "i={i} fd={d} field={expect}");
            }
        }
    }

    #[test]
    fn reflection_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = params();
        let w = zonal_weights(&p);
        for _ in 0..50 {
            let z = random_state(&mut rng);
            for refl in [reflect_r1 as fn(&[f64; 6]) -> [f64; 6], reflect_r2] {
                let lhs = vector_field_packed(&refl(&z), &p, &w).unwrap();
                let rhs = refl(&vector_field_packed(&z, &p, &w).unwrap());
                for i in 0..6 {
                    assert!((lhs[i] + rhs[i]).abs() < 1e-14 * (1.0 + rhs[i].abs()));
                }
                let k0 = eval_hc(&CartesianState::from_array(&z), &p).unwrap();
                let k1 = eval_hc(&CartesianState::from_array(&refl(&z)), &p).unwrap();
                assert!((k0 - k1).abs() < 1e-14 * k0.abs().max(1.0));
            }
        }
    }

    #[test]
    fn primary_series_converges_to_closed_form() {
        let x: Vector3<f64> = Vector3::new(0.2, -0.1, 0.15);
        let mu = 0.01;
        let exact = (1.0 - mu) / (1.0 + x.norm_squared() - 2.0 * x[0]).sqrt();
        let r = x.norm();
        for deg in [4, 8, 16] {
            let approx = primary_potential_series(&x, mu, deg);
            // |P_n| <= 1, so the tail is bounded by a geometric series
            let bound = r.powi(deg as i32 + 1) / (1.0 - r);
            assert!((approx - exact).abs() <= bound);
        }
    }

    #[test]
    fn ha_spherical_secondary_potential() {
        let x = Vector3::new(0.01, 0.02, 0.0);
        let y = Vector3::new(0.1, 0.2, 0.3);
        let mu = 1e-3;
        let with = eval_ha(&x, &y, mu, 0.005, &[0.0, 0.0]).unwrap();
        let without = eval_ha(&x, &y, mu, 0.005, &[]).unwrap();
        assert_eq!(with, without);
    }
}
