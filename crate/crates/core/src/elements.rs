//! Kepler-problem element sets and the exact maps between them.
//!
//! Four representations of a bound two-body state with unit gravitational
//! parameter are supported:
//!
//! * [`CartesianState`]: position `xi` and conjugate momentum `eta`;
//! * [`OrbitalElements`]: `a, e, i, Omega, omega, M`;
//! * [`Delaunay`]: actions `L, G, H` with angles `ell, g, h`;
//! * [`PoincareDelaunay`]: the mixed set `Q1..Q3, P1..P3`, regular at `e = 0`.
//!
//! The Kepler energy in these units is `|eta|^2/2 - 1/|xi| = -1/(2 L^2)`.
//! Any scaling of the Kepler term (the `epsilon^-3` factor of the Hill
//! Hamiltonian) lives in the equations of motion, never here.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};

/// Below this eccentricity the pericenter argument is undefined and set to 0.
const CIRCULAR_EPS: f64 = 1e-15;
/// Below this ratio |node| / |h| the node longitude is undefined and set to 0.
const EQUATORIAL_EPS: f64 = 1e-15;

/// Wraps an angle to `[0, 2pi)`.
pub fn wrap_two_pi(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let w = wrap_two_pi(x);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub xi: Vector3<f64>,
    pub eta: Vector3<f64>,
}

impl CartesianState {
    pub fn new(xi: [f64; 3], eta: [f64; 3]) -> Self {
        Self {
            xi: Vector3::from(xi),
            eta: Vector3::from(eta),
        }
    }

    pub fn radius(&self) -> f64 {
        self.xi.norm()
    }

    /// `|eta|^2/2 - 1/|xi|`, the two-body energy with unit gravitational parameter.
    pub fn kepler_energy(&self) -> f64 {
        0.5 * self.eta.norm_squared() - 1.0 / self.xi.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.xi.cross(&self.eta)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.xi[0], self.xi[1], self.xi[2], self.eta[0], self.eta[1], self.eta[2],
        ]
    }

    pub fn from_array(z: &[f64; 6]) -> Self {
        Self::new([z[0], z[1], z[2]], [z[3], z[4], z[5]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub inc: f64,
    #[serde(rename = "Omega")]
    pub node: f64,
    #[serde(rename = "omega")]
    pub peri: f64,
    #[serde(rename = "M")]
    pub mean_anomaly: f64,
}

/// Which individual angles were undefined when the elements were produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    /// `e = 0`: `omega` set to 0, `M` carries the argument of latitude.
    pub circular: bool,
    /// `sin i = 0`: `Omega` set to 0, the node line is taken along `+x`.
    pub equatorial: bool,
}

impl OrbitalElements {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(HillError::domain(format!("semi-major axis must be positive, got {}", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(HillError::domain(format!("eccentricity must lie in [0, 1), got {}", self.e)));
        }
        if !(0.0..=PI).contains(&self.inc) {
            return Err(HillError::domain(format!("inclination must lie in [0, pi], got {}", self.inc)));
        }
        if ![self.node, self.peri, self.mean_anomaly].iter().all(|x| x.is_finite()) {
            return Err(HillError::domain("angles must be finite"));
        }
        Ok(())
    }

    pub fn degeneracy(&self) -> Degeneracy {
        Degeneracy {
            circular: self.e <= CIRCULAR_EPS,
            equatorial: self.inc.sin().abs() <= EQUATORIAL_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delaunay {
    #[serde(rename = "L")]
    pub big_l: f64,
    #[serde(rename = "G")]
    pub big_g: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub ell: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareDelaunay {
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q2")]
    pub q2: f64,
    #[serde(rename = "Q3")]
    pub q3: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    #[serde(rename = "P3")]
    pub p3: f64,
}

impl PoincareDelaunay {
    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        Self {
            q1: q[0],
            q2: q[1],
            q3: q[2],
            p1: p[0],
            p2: p[1],
            p3: p[2],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.q1, self.q2, self.q3, self.p1, self.p2, self.p3]
    }

    pub fn from_array(z: &[f64; 6]) -> Self {
        Self::new([z[0], z[1], z[2]], [z[3], z[4], z[5]])
    }

    /// `L = P1 + P3`.
    pub fn big_l(&self) -> f64 {
        self.p1 + self.p3
    }

    /// `L - G = (P2^2 + Q2^2)/2`.
    pub fn l_minus_g(&self) -> f64 {
        0.5 * (self.p2 * self.p2 + self.q2 * self.q2)
    }

    /// `G = L - (P2^2 + Q2^2)/2`.
    pub fn big_g(&self) -> f64 {
        self.big_l() - self.l_minus_g()
    }

    /// `H = P1 - (P2^2 + Q2^2)/2`.
    pub fn big_h(&self) -> f64 {
        self.p1 - self.l_minus_g()
    }

    /// Longitude of pericenter `g + h`, recovered as `atan2(-Q2, P2)`; 0 when circular.
    pub fn varpi(&self) -> f64 {
        if self.q2 == 0.0 && self.p2 == 0.0 {
            0.0
        } else {
            (-self.q2).atan2(self.p2)
        }
    }
}

/// Solves Kepler's equation `E - e sin E = M` for the eccentric anomaly.
///
/// The solution is continuous on the real line: `E(M + 2pi) = E(M) + 2pi`.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !mean_anomaly.is_finite() {
        return Err(HillError::domain("mean anomaly must be finite"));
    }
    if !(0.0..1.0).contains(&e) {
        return Err(HillError::Numerical(format!(
            "Kepler solver requires 0 <= e < 1, got e = {e}"
        )));
    }
    // Reduce to [-pi, pi) and restore the winding afterwards.
    let turns = ((mean_anomaly + PI) / TAU).floor();
    let m = mean_anomaly - turns * TAU;
    let residual = |ea: f64| ea - e * ea.sin() - m;

    let mut ea = m + e * m.sin();
    let mut converged = false;
    for _ in 0..50 {
        let f = residual(ea);
        let fp = 1.0 - e * ea.cos();
        let step = f / fp;
        ea -= step;
        if step.abs() <= 4.0 * f64::EPSILON * ea.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !ea.is_finite() || residual(ea).abs() > 1e-14 {
        // Bisection on the bracket [m - e, m + e], which always contains the root.
        let (mut lo, mut hi) = (m - e - 1e-15, m + e + 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        ea = 0.5 * (lo + hi);
        if residual(ea).abs() > 1e-14 {
            return Err(HillError::Numerical(format!(
                "Kepler solver did not converge for M = {mean_anomaly}, e = {e}"
            )));
        }
    }
    Ok(ea + turns * TAU)
}

/// True anomaly from eccentric anomaly, continuous in `E`.
pub fn true_from_eccentric(ea: f64, e: f64) -> f64 {
    let beta = (1.0 - e * e).sqrt();
    let f = (beta * ea.sin()).atan2(ea.cos() - e);
    // keep the same winding as E
    ea + wrap_pi(f - ea)
}

/// Mean anomaly from true anomaly, continuous in `f`.
pub fn mean_from_true(f: f64, e: f64) -> f64 {
    let beta = (1.0 - e * e).sqrt();
    let ea = (beta * f.sin()).atan2(e + f.cos());
    let ea = f + wrap_pi(ea - f);
    ea - e * ea.sin()
}

/// Rotation `R3(Omega) R1(i) R3(omega)` taking perifocal axes to the reference frame.
fn perifocal_basis(node: f64, inc: f64, peri: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (so, co) = node.sin_cos();
    let (si, ci) = inc.sin_cos();
    let (sw, cw) = peri.sin_cos();
    let p = Vector3::new(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
    let q = Vector3::new(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);
    (p, q)
}

pub fn orbital_to_cartesian(el: &OrbitalElements) -> Result<CartesianState> {
    el.validate()?;
    let ea = solve_kepler(el.mean_anomaly, el.e)?;
    let (se, ce) = ea.sin_cos();
    let beta = (1.0 - el.e * el.e).sqrt();
    let a = el.a;
    let x = a * (ce - el.e);
    let y = a * beta * se;
    let speed = 1.0 / (a.sqrt() * (1.0 - el.e * ce));
    let vx = -speed * se;
    let vy = speed * beta * ce;
    let (p, q) = perifocal_basis(el.node, el.inc, el.peri);
    Ok(CartesianState {
        xi: p * x + q * y,
        eta: p * vx + q * vy,
    })
}

pub fn cartesian_to_orbital(s: &CartesianState) -> Result<OrbitalElements> {
    let r = s.xi.norm();
    if !(r > 0.0) || !r.is_finite() || !s.eta.iter().all(|v| v.is_finite()) {
        return Err(HillError::domain("state must have a finite nonzero position"));
    }
    let energy = s.kepler_energy();
    if !(energy < 0.0) {
        return Err(HillError::domain(format!(
            "state is not bound (Kepler energy {energy} >= 0)"
        )));
    }
    let hvec = s.angular_momentum();
    let hn = hvec.norm();
    if hn <= 1e-14 * r * s.eta.norm().max(1e-300) {
        return Err(HillError::domain("rectilinear state (zero angular momentum)"));
    }
    let a = -0.5 / energy;
    let inc = hvec.xy().norm().atan2(hvec.z);

    let hhat = hvec / hn;
    let nvec = Vector3::new(-hvec.y, hvec.x, 0.0);
    let nn = nvec.norm();
    let (node, nhat) = if nn <= EQUATORIAL_EPS * hn {
        (0.0, Vector3::x())
    } else {
        (nvec.y.atan2(nvec.x), nvec / nn)
    };
    let mhat = hhat.cross(&nhat);
    let arg_lat = s.xi.dot(&mhat).atan2(s.xi.dot(&nhat));

    // e cos f and e sin f stay smooth as e -> 0.
    let ecosf = hn * hn / r - 1.0;
    let esinf = hn * s.xi.dot(&s.eta) / r;
    let e = ecosf.hypot(esinf);
    let (f, peri) = if e <= CIRCULAR_EPS {
        (arg_lat, 0.0)
    } else {
        let f = esinf.atan2(ecosf);
        (f, arg_lat - f)
    };
    if e >= 1.0 {
        return Err(HillError::domain(format!("eccentricity {e} >= 1")));
    }
    let mean = if e <= CIRCULAR_EPS { f } else { mean_from_true(f, e) };
    Ok(OrbitalElements {
        a,
        e,
        inc,
        node: wrap_two_pi(node),
        peri: wrap_two_pi(peri),
        mean_anomaly: wrap_two_pi(mean),
    })
}

pub fn delaunay_from_orbital(el: &OrbitalElements) -> Result<Delaunay> {
    el.validate()?;
    let big_l = el.a.sqrt();
    let big_g = big_l * (1.0 - el.e * el.e).sqrt();
    Ok(Delaunay {
        big_l,
        big_g,
        big_h: big_g * el.inc.cos(),
        ell: el.mean_anomaly,
        g: el.peri,
        h: el.node,
    })
}

pub fn orbital_from_delaunay(d: &Delaunay) -> Result<OrbitalElements> {
    if !(d.big_l > 0.0) || !(d.big_g > 0.0) {
        return Err(HillError::domain("Delaunay actions L and G must be positive"));
    }
    let tol = 1e-14 * d.big_l;
    if d.big_g > d.big_l + tol || d.big_h.abs() > d.big_g + tol {
        return Err(HillError::domain(format!(
            "Delaunay actions violate L >= G >= |H|: L={}, G={}, H={}",
            d.big_l, d.big_g, d.big_h
        )));
    }
    let ratio = (d.big_g / d.big_l).min(1.0);
    let e = ((1.0 - ratio) * (1.0 + ratio)).sqrt();
    let cos_i = (d.big_h / d.big_g).clamp(-1.0, 1.0);
    Ok(OrbitalElements {
        a: d.big_l * d.big_l,
        e,
        inc: cos_i.acos(),
        node: d.h,
        peri: d.g,
        mean_anomaly: d.ell,
    })
}

pub fn poincare_from_delaunay(d: &Delaunay) -> Result<PoincareDelaunay> {
    let mut rho = d.big_l - d.big_g;
    if rho < 0.0 {
        if rho >= -1e-14 * d.big_l.abs().max(1.0) {
            rho = 0.0;
        } else {
            return Err(HillError::domain(format!(
                "L - G = {rho} is negative; Poincare variables undefined"
            )));
        }
    }
    let s = (2.0 * rho).sqrt();
    let varpi = d.g + d.h;
    Ok(PoincareDelaunay {
        q1: d.ell + d.g + d.h,
        q2: -s * varpi.sin(),
        q3: d.ell + d.g,
        p1: rho + d.big_h,
        p2: s * varpi.cos(),
        p3: d.big_g - d.big_h,
    })
}

/// Inverse of [`poincare_from_delaunay`]. At `e = 0` the pericenter argument
/// `g` is set to 0 and `ell` carries `Q3`.
pub fn delaunay_from_poincare(p: &PoincareDelaunay) -> Result<Delaunay> {
    let big_l = p.big_l();
    let rho = p.l_minus_g();
    if !(big_l > 0.0) || !(rho < big_l) {
        return Err(HillError::domain(format!(
            "Poincare-Delaunay point outside the elliptic domain (L = {big_l}, L - G = {rho})"
        )));
    }
    let big_g = big_l - rho;
    let big_h = big_g - p.p3;
    let h = p.q1 - p.q3;
    let (g, ell) = if rho == 0.0 {
        (0.0, p.q3)
    } else {
        // g + h lies within pi of Q1 - Q3 + g, so keep g in (-pi, pi]
        let g = wrap_pi(p.varpi() - h);
        (g, p.q3 - g)
    };
    Ok(Delaunay {
        big_l,
        big_g,
        big_h,
        ell,
        g,
        h,
    })
}

/// Eccentricity and `cos i = H/G` straight from Poincare-Delaunay variables.
pub fn e_cosi_from_poincare(p: &PoincareDelaunay) -> Result<(f64, f64)> {
    let big_l = p.big_l();
    let rho = p.l_minus_g();
    if !(big_l > 0.0) {
        return Err(HillError::domain("P1 + P3 must be positive"));
    }
    if !(rho < big_l) {
        return Err(HillError::domain(format!(
            "(P2^2 + Q2^2)/2 = {rho} must be below P1 + P3 = {big_l}"
        )));
    }
    let w = rho / big_l;
    let e2 = w * (2.0 - w);
    if e2 < -1e-15 {
        return Err(HillError::domain("negative e^2"));
    }
    let e = e2.max(0.0).sqrt();
    let cos_i = 1.0 - p.p3 / (big_l - rho);
    Ok((e, cos_i))
}

/// Same map as going through [`Delaunay`], but `L - G` and `G - H` are formed
/// without cancellation, so nearly circular or equatorial orbits keep full
/// precision in `(Q2, P2)` and `P3`.
pub fn poincare_from_orbital(el: &OrbitalElements) -> Result<PoincareDelaunay> {
    el.validate()?;
    let big_l = el.a.sqrt();
    let root = ((1.0 - el.e) * (1.0 + el.e)).sqrt();
    let big_g = big_l * root;
    let rho = big_l * el.e * el.e / (1.0 + root);
    let half = (0.5 * el.inc).sin();
    let s = (2.0 * rho).sqrt();
    let varpi = el.peri + el.node;
    Ok(PoincareDelaunay {
        q1: el.mean_anomaly + el.peri + el.node,
        q2: -s * varpi.sin(),
        q3: el.mean_anomaly + el.peri,
        p1: rho + big_g * el.inc.cos(),
        p2: s * varpi.cos(),
        p3: 2.0 * big_g * half * half,
    })
}

/// Inverse of [`poincare_from_orbital`].
pub fn orbital_from_poincare(p: &PoincareDelaunay) -> Result<OrbitalElements> {
    let d = delaunay_from_poincare(p)?;
    let (e, _) = e_cosi_from_poincare(p)?;
    let sin_half2 = p.p3 / (2.0 * d.big_g);
    if !(-1e-14..=1.0 + 1e-14).contains(&sin_half2) {
        return Err(HillError::domain(format!(
            "P3 = {} outside [0, 2G] with G = {}",
            p.p3, d.big_g
        )));
    }
    Ok(OrbitalElements {
        a: d.big_l * d.big_l,
        e,
        inc: 2.0 * sin_half2.clamp(0.0, 1.0).sqrt().asin(),
        node: d.h,
        peri: d.g,
        mean_anomaly: d.ell,
    })
}

pub fn poincare_from_cartesian(s: &CartesianState) -> Result<PoincareDelaunay> {
    poincare_from_orbital(&cartesian_to_orbital(s)?)
}

pub fn cartesian_from_poincare(p: &PoincareDelaunay) -> Result<CartesianState> {
    orbital_to_cartesian(&orbital_from_poincare(p)?)
}
