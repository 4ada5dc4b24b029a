//! Node-wise minimizers for the `q` and `p` subproblems.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX: usize = 50;

/// Number of sub-intervals of `[−π, π]` scanned for roots of the angle
/// equation.
const ROOT_SCAN: usize = 64;
const FALLBACK_ANGLES: usize = 64;
const FALLBACK_RADII: usize = 64;

/// Soft thresholding: the minimizer of `t|q| + ½(q − q*)²`.
pub fn shrink(q_star: f64, t: f64) -> f64 {
    if q_star == 0.0 {
        return 0.0;
    }
    (1.0 - t / q_star.abs()).max(0.0) * q_star
}

/// Coefficients of `E(p) = ω|p| + (μ/2)|p − a|² − ν·p|p|` at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointwiseP {
    pub omega: f64,
    pub mu: f64,
    pub a: [f64; 2],
    pub nu: [f64; 2],
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn norm(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

fn rotate(u: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * u[0] - s * u[1], s * u[0] + c * u[1]]
}

impl PointwiseP {
    pub fn objective(&self, p: [f64; 2]) -> f64 {
        let r = norm(p);
        let d = [p[0] - self.a[0], p[1] - self.a[1]];
        self.omega * r + 0.5 * self.mu * dot(d, d) - dot(self.nu, p) * r
    }

    /// Optimal length of `p` along the unit direction `b`.
    pub fn length_along(&self, b: [f64; 2]) -> f64 {
        (self.mu * dot(b, self.a) - self.omega).max(0.0) / (self.mu - 2.0 * dot(self.nu, b))
    }

    pub fn along(&self, b: [f64; 2]) -> [f64; 2] {
        let t = self.length_along(b);
        [t * b[0], t * b[1]]
    }

    fn check(&self) -> Result<()> {
        let ok = self.mu.is_finite()
            && self.omega.is_finite()
            && self.a.iter().chain(&self.nu).all(|v| v.is_finite())
            && self.mu > 2.0 * norm(self.nu);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "pointwise p problem needs finite data and mu > 2|nu|: {self:?}"
            )))
        }
    }
}

/// Left-hand side of the angle equation
/// `μ²|a|sinθ + μ|ν||a|sinθcos(θ−α) + ω|ν|sin(θ−α) + μ|a||ν|sinα`.
pub fn theta_residual(pw: &PointwiseP, alpha: f64, theta: f64) -> f64 {
    let (a, v, m) = (norm(pw.a), norm(pw.nu), pw.mu);
    m * m * a * theta.sin()
        + m * v * a * theta.sin() * (theta - alpha).cos()
        + pw.omega * v * (theta - alpha).sin()
        + m * a * v * alpha.sin()
}

fn theta_residual_deriv(pw: &PointwiseP, alpha: f64, theta: f64) -> f64 {
    let (a, v, m) = (norm(pw.a), norm(pw.nu), pw.mu);
    m * m * a * theta.cos()
        + m * v * a * (2.0 * theta - alpha).cos()
        + pw.omega * v * (theta - alpha).cos()
}

/// Root of the angle equation with the default tolerance and iteration cap.
pub fn solve_theta(pw: &PointwiseP, alpha: f64) -> Result<f64> {
    solve_theta_with(pw, alpha, DEFAULT_NEWTON_TOL, DEFAULT_NEWTON_MAX)
}

/// Newton from `θ = 0`; if that fails to reach `|F| ≤ tol` inside
/// `[−π, π]`, bisection on the first sign change found by a scan.
pub fn solve_theta_with(pw: &PointwiseP, alpha: f64, tol: f64, max_iter: usize) -> Result<f64> {
    if let Some(t) = newton(pw, alpha, 0.0, tol, max_iter) {
        return Ok(t);
    }
    let f = |t: f64| theta_residual(pw, alpha, t);
    let h = 2.0 * PI / ROOT_SCAN as f64;
    for k in 0..ROOT_SCAN {
        let lo = -PI + k as f64 * h;
        let hi = lo + h;
        if f(lo) * f(hi) <= 0.0 {
            return bisect(pw, alpha, lo, hi, tol, max_iter);
        }
    }
    Err(Error::NoBracket)
}

fn newton(pw: &PointwiseP, alpha: f64, start: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let mut t = start;
    for _ in 0..max_iter {
        let f = theta_residual(pw, alpha, t);
        if f.abs() <= tol {
            return (-PI..=PI).contains(&t).then_some(t);
        }
        let df = theta_residual_deriv(pw, alpha, t);
        if df == 0.0 || !df.is_finite() {
            return None;
        }
        t -= f / df;
        if !t.is_finite() {
            return None;
        }
    }
    None
}

/// Newton's method safeguarded by the bracket `[lo, hi]`: any step that
/// leaves the bracket is replaced by bisection.
fn bisect(
    pw: &PointwiseP,
    alpha: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let f = |t: f64| theta_residual(pw, alpha, t);
    let mut flo = f(lo);
    if flo.abs() <= tol {
        return Ok(lo);
    }
    if f(hi).abs() <= tol {
        return Ok(hi);
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..max_iter.max(100) {
        let ft = f(t);
        if ft.abs() <= tol {
            return Ok(t);
        }
        if flo * ft <= 0.0 {
            hi = t;
        } else {
            lo = t;
            flo = ft;
        }
        let df = theta_residual_deriv(pw, alpha, t);
        let newton = t - ft / df;
        t = if df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 {
            break;
        }
    }
    let ft = f(t);
    if ft.abs() <= tol {
        Ok(t)
    } else {
        Err(Error::NoBracket)
    }
}

/// `(θ, sin θ, cos θ)` at the `ROOT_SCAN + 1` scan points of `[−π, π]`.
fn scan_table() -> &'static [(f64, f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=ROOT_SCAN)
            .map(|k| {
                let t = -PI + 2.0 * PI * k as f64 / ROOT_SCAN as f64;
                (t, t.sin(), t.cos())
            })
            .collect()
    })
}

/// Every root of the angle equation in `[−π, π]` found by bracketing.
fn theta_roots(pw: &PointwiseP, alpha: f64, tol: f64, max_iter: usize) -> Vec<f64> {
    let (a, v, m) = (norm(pw.a), norm(pw.nu), pw.mu);
    let (sa, ca) = alpha.sin_cos();
    let constant = m * a * v * sa;
    // F(θ) with cos(θ − α) and sin(θ − α) expanded
    let f = |s: f64, c: f64| {
        let cd = c * ca + s * sa;
        let sd = s * ca - c * sa;
        m * m * a * s + m * v * a * s * cd + pw.omega * v * sd + constant
    };
    let table = scan_table();
    let mut roots = Vec::new();
    let mut flo = f(table[0].1, table[0].2);
    for w in table.windows(2) {
        let fhi = f(w[1].1, w[1].2);
        if flo * fhi <= 0.0 {
            if let Ok(t) = bisect(pw, alpha, w[0].0, w[1].0, tol, max_iter) {
                roots.push(t);
            }
        }
        flo = fhi;
    }
    roots
}

/// Global minimizer of the node-wise `p` objective.
///
/// The direction `b` of the minimizer is `a` rotated by a root `θ` of the
/// angle equation, written for `ν' = −ν` with `α` the signed angle from `a`
/// to `ν'`. Its length is `max(0, μ b·a − ω)/(μ − 2ν·b)`. All roots are
/// compared, and a coarse-to-fine search takes over if none beats the scan.
pub fn minimize_p(pw: &PointwiseP, tol: f64, max_iter: usize) -> Result<[f64; 2]> {
    pw.check()?;
    let a_len = norm(pw.a);
    let nu_len = norm(pw.nu);
    if pw.omega >= pw.mu * a_len {
        return Ok([0.0, 0.0]);
    }
    match (a_len == 0.0, nu_len == 0.0) {
        // ω < 0 here: any vector of length −ω/μ
        (true, true) => return Ok([-pw.omega / pw.mu, 0.0]),
        (false, true) => {
            let s = 1.0 - pw.omega / (pw.mu * a_len);
            return Ok([s * pw.a[0], s * pw.a[1]]);
        }
        (true, false) => {
            let t = pw.omega.abs() / (pw.mu - 2.0 * nu_len);
            return Ok([t * pw.nu[0] / nu_len, t * pw.nu[1] / nu_len]);
        }
        (false, false) => {}
    }

    let nu_thm = [-pw.nu[0], -pw.nu[1]];
    let alpha = (pw.a[0] * nu_thm[1] - pw.a[1] * nu_thm[0]).atan2(dot(pw.a, nu_thm));
    let a_hat = [pw.a[0] / a_len, pw.a[1] / a_len];

    let mut best = [0.0, 0.0];
    let mut best_val = pw.objective(best);
    let mut consider = |p: [f64; 2]| {
        let v = pw.objective(p);
        if v < best_val {
            best_val = v;
            best = p;
        }
    };
    for t in theta_roots(pw, alpha, tol, max_iter) {
        consider(pw.along(rotate(a_hat, t)));
    }

    let scan_best = scan_table()
        .iter()
        .map(|&(_, s, c)| pw.objective(pw.along([c, s])))
        .fold(f64::INFINITY, f64::min);
    if best_val <= scan_best + 1e-12 {
        Ok(best)
    } else {
        Ok(brute_force_p(pw))
    }
}

/// Grid search over 64 directions and 64 lengths followed by golden-section
/// refinement of the best direction.
pub fn brute_force_p(pw: &PointwiseP) -> [f64; 2] {
    let a_len = norm(pw.a);
    let reach = (2.0 * a_len + 2.0 * pw.omega.abs() / pw.mu)
        .max((pw.mu * a_len + pw.omega.abs()) / (pw.mu - 2.0 * norm(pw.nu)));
    let mut best = [0.0, 0.0];
    let mut best_val = pw.objective(best);
    let mut best_angle = 0.0;
    for i in 0..FALLBACK_ANGLES {
        let ang = -PI + 2.0 * PI * i as f64 / FALLBACK_ANGLES as f64;
        let b = unit(ang);
        for j in 1..=FALLBACK_RADII {
            let r = reach * j as f64 / FALLBACK_RADII as f64;
            let p = [r * b[0], r * b[1]];
            let v = pw.objective(p);
            if v < best_val {
                best_val = v;
                best = p;
                best_angle = ang;
            }
        }
    }
    let h = 2.0 * PI / FALLBACK_ANGLES as f64;
    let g = |ang: f64| pw.objective(pw.along(unit(ang)));
    let (mut lo, mut hi) = (best_angle - h, best_angle + h);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        }
    }
    let refined = pw.along(unit(0.5 * (lo + hi)));
    if pw.objective(refined) < best_val {
        refined
    } else {
        best
    }
}
