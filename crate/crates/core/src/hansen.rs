//! Hansen coefficients `X_k^{n,m}(e)`, defined by
//!
//! ```text
//! (r/a)^n exp(i m f) = sum_k X_k^{n,m}(e) exp(i k M)
//! ```
//!
//! Values come from the periodic trapezoid rule in the mean anomaly, which is
//! spectrally accurate for this smooth periodic integrand. A handful of
//! zero-frequency coefficients have exact closed forms and are used as checks.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Mutex;

use crate::elements::{solve_kepler, true_from_eccentric};
use crate::error::{HillError, Result};

/// The `(n, m)` pairs that occur in the element series of the perturbation.
pub const SERIES_PAIRS: [(i32, i32); 4] = [(2, 0), (2, 2), (-3, 0), (-3, 2)];

pub const DEFAULT_NODES: usize = 256;
pub const MAX_NODES: usize = 4096;
/// Node doubling stops once two successive tables agree to this (relative) level.
pub const CAUCHY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HansenQuery {
    pub n: i32,
    pub m: i32,
    pub k: i32,
    pub e: f64,
}

fn check_e(e: f64) -> Result<()> {
    if !(0.0..1.0).contains(&e) {
        return Err(HillError::domain(format!(
            "Hansen coefficients need 0 <= e < 1, got {e}"
        )));
    }
    Ok(())
}

/// Ellipse sampled at equally spaced mean anomalies.
struct KeplerGrid {
    mean: Vec<f64>,
    r_over_a: Vec<f64>,
    true_anom: Vec<f64>,
}

impl KeplerGrid {
    fn new(e: f64, nodes: usize) -> Result<Self> {
        let mut mean = Vec::with_capacity(nodes);
        let mut r_over_a = Vec::with_capacity(nodes);
        let mut true_anom = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let m = TAU * j as f64 / nodes as f64;
            let ea = solve_kepler(m, e)?;
            mean.push(m);
            r_over_a.push(1.0 - e * ea.cos());
            true_anom.push(true_from_eccentric(ea, e));
        }
        Ok(Self { mean, r_over_a, true_anom })
    }

    /// Fourier coefficients of `(r/a)^n exp(i m f)` for every `k` in `ks`.
    fn coefficients(&self, n: i32, m: i32, ks: impl Iterator<Item = i32>) -> Vec<(i32, f64)> {
        let len = self.mean.len();
        let mut re = Vec::with_capacity(len);
        let mut im = Vec::with_capacity(len);
        for j in 0..len {
            let w = self.r_over_a[j].powi(n);
            let (s, c) = (m as f64 * self.true_anom[j]).sin_cos();
            re.push(w * c);
            im.push(w * s);
        }
        ks.map(|k| {
            let mut acc = 0.0;
            for j in 0..len {
                let (s, c) = (k as f64 * self.mean[j]).sin_cos();
                acc += re[j] * c + im[j] * s;
            }
            (k, acc / len as f64)
        })
        .collect()
    }
}

/// `(1/2pi) int_0^{2pi} (r/a)^n cos(m f - k M) dM` with a fixed number of nodes.
pub fn hansen_quadrature(q: HansenQuery, nodes: usize) -> Result<f64> {
    check_e(q.e)?;
    if nodes < 64 || !nodes.is_multiple_of(2) {
        return Err(HillError::domain(format!(
            "quadrature needs an even node count >= 64, got {nodes}"
        )));
    }
    let grid = KeplerGrid::new(q.e, nodes)?;
    Ok(grid.coefficients(q.n, q.m, std::iter::once(q.k))[0].1)
}

/// Quadrature with node doubling from [`DEFAULT_NODES`] until the Cauchy
/// difference drops below [`CAUCHY_TOL`] or [`MAX_NODES`] is reached.
pub fn hansen(q: HansenQuery) -> Result<f64> {
    check_e(q.e)?;
    if q.e == 0.0 {
        return Ok(if q.k == q.m { 1.0 } else { 0.0 });
    }
    let mut nodes = DEFAULT_NODES.max(4 * (q.k.unsigned_abs() as usize + 4));
    nodes += nodes % 2;
    let mut prev = hansen_quadrature(q, nodes)?;
    while nodes < MAX_NODES {
        nodes *= 2;
        let next = hansen_quadrature(q, nodes)?;
        let converged = (next - prev).abs() <= CAUCHY_TOL * next.abs().max(1.0);
        prev = next;
        if converged {
            break;
        }
    }
    Ok(prev)
}

/// Exact values for the coefficients that survive double averaging.
///
/// Certified set: `X_0^{2,0} = 1 + 3e^2/2`, `X_0^{-3,0} = (1-e^2)^{-3/2}`,
/// `X_0^{2,2} = 5e^2/2` and `X_0^{-3,2} = 0`.
pub fn hansen_closed_form(n: i32, m: i32, k: i32, e: f64) -> Option<f64> {
    if k != 0 || !(0.0..1.0).contains(&e) {
        return None;
    }
    match (n, m) {
        (2, 0) => Some(1.0 + 1.5 * e * e),
        (-3, 0) => Some((1.0 - e * e).powf(-1.5)),
        (2, 2) => Some(2.5 * e * e),
        (-3, 2) => Some(0.0),
        _ => None,
    }
}

/// Fixed node count used by series evaluations, chosen from `e` alone so that
/// finite differences in the eccentricity see one quadrature rule.
pub fn nodes_for(e: f64, k_max: usize) -> usize {
    let base = if e <= 0.5 {
        DEFAULT_NODES
    } else if e <= 0.85 {
        1024
    } else {
        MAX_NODES
    };
    let need = 8 * (k_max + 4);
    base.max(need + need % 2)
}

/// All coefficients `X_k^{n,m}(e)` with `|k - m| <= k_max` for a set of `(n, m)` pairs.
#[derive(Debug, Clone)]
pub struct HansenTable {
    pub e: f64,
    pub k_max: usize,
    pub nodes: usize,
    values: HashMap<(i32, i32, i32), f64>,
}

impl HansenTable {
    /// Builds the table with node doubling (see [`hansen`]).
    pub fn new(e: f64, k_max: usize, pairs: &[(i32, i32)]) -> Result<Self> {
        check_e(e)?;
        let mut nodes = DEFAULT_NODES.max(4 * (k_max + 4));
        nodes += nodes % 2;
        let mut table = Self::with_nodes(e, k_max, pairs, nodes)?;
        if e == 0.0 {
            return Ok(table);
        }
        while nodes < MAX_NODES {
            nodes *= 2;
            let finer = Self::with_nodes(e, k_max, pairs, nodes)?;
            let diff = finer
                .values
                .iter()
                .map(|(key, v)| (v - table.values[key]).abs() / v.abs().max(1.0))
                .fold(0.0, f64::max);
            table = finer;
            if diff <= CAUCHY_TOL {
                break;
            }
        }
        Ok(table)
    }

    /// Builds the table with a fixed node count, so that nearby eccentricities
    /// are evaluated by exactly the same rule (needed for finite differences).
    pub fn with_nodes(e: f64, k_max: usize, pairs: &[(i32, i32)], nodes: usize) -> Result<Self> {
        check_e(e)?;
        let km = k_max as i32;
        let mut values = HashMap::new();
        if e == 0.0 {
            for &(n, m) in pairs {
                for k in (m - km)..=(m + km) {
                    values.insert((n, m, k), if k == m { 1.0 } else { 0.0 });
                }
            }
        } else {
            let grid = KeplerGrid::new(e, nodes)?;
            for &(n, m) in pairs {
                for (k, v) in grid.coefficients(n, m, (m - km)..=(m + km)) {
                    values.insert((n, m, k), v);
                }
            }
        }
        Ok(Self { e, k_max, nodes, values })
    }

    /// Stored coefficient; `None` outside the table.
    pub fn get(&self, n: i32, m: i32, k: i32) -> Option<f64> {
        self.values.get(&(n, m, k)).copied()
    }

    /// Stored coefficient, treating entries outside the table as truncated (zero).
    pub fn x(&self, n: i32, m: i32, k: i32) -> f64 {
        self.get(n, m, k).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Smallest half-width `K` such that `|X_k^{n,m}(e)| < tol` whenever `|k - m| > K`,
/// over [`SERIES_PAIRS`].
///
/// Coefficients decay like `e^{|k-m|}`, so the scan widens its window until the
/// outer quarter is far below `tol` and then reads off the last index above it.
pub fn choose_kmax(e: f64, tol: f64) -> Result<usize> {
    check_e(e)?;
    if !(tol > 0.0) {
        return Err(HillError::domain("tolerance must be positive"));
    }
    if e == 0.0 {
        return Ok(0);
    }
    for width in [16usize, 32, 64, 128] {
        let table = HansenTable::new(e, width, &SERIES_PAIRS)?;
        let mut k_needed = 0usize;
        let mut tail_ok = true;
        for &(n, m) in &SERIES_PAIRS {
            for d in 1..=width {
                for k in [m - d as i32, m + d as i32] {
                    let v = table.x(n, m, k).abs();
                    if v >= tol {
                        k_needed = k_needed.max(d);
                    }
                    if 4 * d > 3 * width && v >= 1e-2 * tol {
                        tail_ok = false;
                    }
                }
            }
        }
        if tail_ok {
            return Ok(k_needed);
        }
    }
    Err(HillError::Numerical(format!(
        "cannot certify |X| < {tol:e} within |k - m| <= 128 at e = {e}"
    )))
}

/// Per-run memo of individual coefficients, safe to share between threads.
#[derive(Debug, Default)]
pub struct HansenCache {
    map: Mutex<HashMap<(i32, i32, i32, u64), f64>>,
}

impl HansenCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, q: HansenQuery) -> Result<f64> {
        let key = (q.n, q.m, q.k, q.e.to_bits());
        if let Some(v) = self.map.lock().expect("cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = hansen(q)?;
        self.map.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i32, m: i32, k: i32, e: f64) -> HansenQuery {
        HansenQuery { n, m, k, e }
    }

    #[test]
    fn delta_property_at_zero_eccentricity() {
        for &(n, m) in &SERIES_PAIRS {
            for k in -8..=8 {
                let v = hansen_quadrature(q(n, m, k, 0.0), 64).unwrap();
                let want = if k == m { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-13, "n={n} m={m} k={k} v={v}");
            }
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        assert!((hansen(q(2, 0, 0, 0.2)).unwrap() - 1.06).abs() < 1e-12);
        assert!((hansen(q(-3, 0, 0, 0.2)).unwrap() - 0.96f64.powf(-1.5)).abs() < 1e-12);
        assert!((0.96f64.powf(-1.5) - 1.063_146_590).abs() < 1e-9);
        for e in [0.05, 0.1, 0.3, 0.5] {
            for &(n, m) in &SERIES_PAIRS {
                let exact = hansen_closed_form(n, m, 0, e).unwrap();
                let num = hansen(q(n, m, 0, e)).unwrap();
                assert!((exact - num).abs() < 1e-12, "n={n} m={m} e={e}");
            }
        }
    }

    #[test]
    fn closed_form_set() {
        assert_eq!(hansen_closed_form(2, 0, 0, 0.0), Some(1.0));
        assert!((hansen_closed_form(-3, 0, 0, 0.5).unwrap() - 1.539601).abs() < 1e-6);
        assert_eq!(hansen_closed_form(2, 2, 4, 0.1), None);
    }

    #[test]
    fn x0_22_is_five_halves_e_squared() {
        let v = hansen(q(2, 2, 0, 0.1)).unwrap();
        assert!((v - 0.025).abs() < 1e-12);
    }

    #[test]
    fn reality_symmetry() {
        for &(n, m) in &SERIES_PAIRS {
            for k in -5..=5 {
                let a = hansen(q(n, m, k, 0.3)).unwrap();
                let b = hansen(q(n, -m, -k, 0.3)).unwrap();
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn first_order_in_eccentricity() {
        // X_1^{2,0} = -e and X_3^{-3,2} = 7e/2 to leading order
        let e = 1e-4;
        assert!((hansen(q(2, 0, 1, e)).unwrap() + e).abs() < 1e-7);
        assert!((hansen(q(-3, 2, 3, e)).unwrap() - 3.5 * e).abs() < 1e-7);
    }

    #[test]
    fn table_matches_pointwise() {
        let t = HansenTable::new(0.15, 6, &SERIES_PAIRS).unwrap();
        assert_eq!(t.len(), 4 * 13);
        for &(n, m) in &SERIES_PAIRS {
            for k in (m - 6)..=(m + 6) {
                let v = hansen(q(n, m, k, 0.15)).unwrap();
                assert!((t.get(n, m, k).unwrap() - v).abs() < 1e-13);
            }
        }
        assert_eq!(t.get(2, 0, 7), None);
        assert_eq!(t.x(2, 0, 7), 0.0);
    }

    #[test]
    fn node_doubling_is_converged() {
        for e in [0.1, 0.3, 0.5] {
            for &(n, m) in &SERIES_PAIRS {
                let a = hansen_quadrature(q(n, m, 3, e), 512).unwrap();
                let b = hansen_quadrature(q(n, m, 3, e), 1024).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kmax_scan() {
        assert_eq!(choose_kmax(0.0, 1e-10).unwrap(), 0);
        let k1 = choose_kmax(0.1, 1e-10).unwrap();
        assert_eq!(k1, 13);
        let k3 = choose_kmax(0.3, 1e-8).unwrap();
        assert!(k3 >= k1, "k3={k3}");
        assert!(choose_kmax(0.1, 1e-30).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(hansen(q(2, 0, 0, 1.0)).is_err());
        assert!(hansen_quadrature(q(2, 0, 0, 0.1), 63).is_err());
    }

    #[test]
    fn cache_reuses_values() {
        let c = HansenCache::new();
        let a = c.get(q(2, 2, 3, 0.2)).unwrap();
        let b = c.get(q(2, 2, 3, 0.2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(c.len(), 1);
    }
}
