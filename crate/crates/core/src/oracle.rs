//! Closed-form energy of circles around a circular data set, and its local
//! minimizer found by scanning.
//!
//! For a circle of radius `r` and data on a concentric circle of radius
//! `r₀`, `d = |r − r₀|` and `κ = 1/r` along the curve, so
//! `E_s = (2π)^{1/s} (|r − r₀| r^{1/s} + η r^{1/s − 1})`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleFamily {
    pub r0: f64,
    pub eta: f64,
    pub s: u32,
}

impl CircleFamily {
    pub fn new(r0: f64, eta: f64, s: u32) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidParameter(format!("r0 must be > 0, got {r0}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be >= 0, got {eta}"
            )));
        }
        if s != 1 && s != 2 {
            return Err(Error::InvalidParameter(format!(
                "s must be 1 or 2, got {s}"
            )));
        }
        Ok(Self { r0, eta, s })
    }
}

pub fn circle_energy(fam: &CircleFamily, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be > 0, got {r}"
        )));
    }
    Ok(energy_unchecked(fam, r))
}

fn energy_unchecked(fam: &CircleFamily, r: f64) -> f64 {
    let inv_s = 1.0 / fam.s as f64;
    (2.0 * PI).powf(inv_s) * ((r - fam.r0).abs() * r.powf(inv_s) + fam.eta * r.powf(inv_s - 1.0))
}

/// Local minimizer of [`circle_energy`] nearest `r₀`: a scan over
/// `(0.05 r₀, 3 r₀)` with step `10⁻⁴ r₀`, refined by golden-section search.
/// Falls back to the scan's global minimum if there is no interior local
/// minimum.
pub fn circle_local_minimizer(fam: &CircleFamily) -> f64 {
    let lo = 0.05 * fam.r0;
    let h = 1e-4 * fam.r0;
    let count = ((3.0 * fam.r0 - lo) / h).floor() as usize;
    let rs: Vec<f64> = (1..count).map(|k| lo + k as f64 * h).collect();
    let es: Vec<f64> = rs.iter().map(|&r| energy_unchecked(fam, r)).collect();

    let nearest = (1..rs.len() - 1)
        .filter(|&i| es[i] <= es[i - 1] && es[i] <= es[i + 1])
        .min_by(|&i, &j| (rs[i] - fam.r0).abs().total_cmp(&(rs[j] - fam.r0).abs()));
    let Some(i) = nearest else {
        let i = (0..es.len())
            .min_by(|&i, &j| es[i].total_cmp(&es[j]))
            .unwrap_or(0);
        return rs[i];
    };
    golden_section(|r| energy_unchecked(fam, r), rs[i - 1], rs[i + 1])
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 * hi.abs().max(1.0) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_at_data_radius() {
        for s in [1, 2] {
            let fam = CircleFamily::new(20.0, 1.5, s).unwrap();
            let want = (2.0 * PI).powf(1.0 / s as f64) * 1.5 * 20f64.powf(1.0 / s as f64 - 1.0);
            assert!((circle_energy(&fam, 20.0).unwrap() - want).abs() < 1e-12);
            let bare = CircleFamily::new(20.0, 0.0, s).unwrap();
            assert_eq!(circle_energy(&bare, 20.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let fam = CircleFamily::new(20.0, 1.0, 2).unwrap();
        assert!(circle_energy(&fam, 0.0).is_err());
        assert!(circle_energy(&fam, -1.0).is_err());
        assert!(CircleFamily::new(0.0, 1.0, 2).is_err());
        assert!(CircleFamily::new(1.0, 1.0, 3).is_err());
    }
}
