//! Smooth dyadic partition of unity on `(0,∞)`.
//!
//! `h(s) = e^{-1/s}` for `s > 0`, `ρ(t) = h(2−t)/(h(2−t) + h(t−1))` (1 on
//! `(0,1]`, 0 on `[2,∞)`), and `w(t) = ρ(t) − ρ(2t)`.  The sum
//! `Σ_m w(t/2^m)` telescopes, so the partition of unity holds up to rounding.

use crate::error::{Error, Result};

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `(0,1]`, 0 on `[2,∞)`.
pub fn rho(t: f64) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    if t >= 2.0 {
        return 0.0;
    }
    let a = h(2.0 - t);
    a / (a + h(t - 1.0))
}

/// Base window `w(t) = ρ(t) − ρ(2t)`, supported in `[1/2, 2]`.
pub fn w(t: f64) -> f64 {
    if t <= 0.5 || t >= 2.0 {
        return 0.0;
    }
    rho(t) - rho(2.0 * t)
}

/// The dyadic window; a unit struct so the construction can be named in APIs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DyadicWindow;

impl DyadicWindow {
    /// `w_m(t) = w(t/2^m)`.
    pub fn eval(&self, m: i32, t: f64) -> Result<f64> {
        window_eval(m, t)
    }

    /// `w_m(t)` without the domain check; zero for `t ≤ 0`.
    pub fn value(&self, m: i32, t: f64) -> f64 {
        if t > 0.0 {
            w(t * 2f64.powi(-m))
        } else {
            0.0
        }
    }
}

/// `w_m(t) = w(t/2^m)`; zero outside `[2^{m−1}, 2^{m+1}]`.
pub fn window_eval(m: i32, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("window evaluated at t = {t} ≤ 0")));
    }
    Ok(w(t * 2f64.powi(-m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        assert_eq!(window_eval(0, 1.0).unwrap(), 1.0);
        assert_eq!(window_eval(3, 1.0).unwrap(), 0.0);
        let s: f64 = (-40..=40).map(|m| window_eval(m, 3.7).unwrap()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        assert!(window_eval(0, 0.0).is_err());
        assert!(window_eval(0, -2.0).is_err());
    }

    #[test]
    fn support_and_range() {
        assert_eq!(w(0.5), 0.0);
        assert_eq!(w(2.0), 0.0);
        assert_eq!(w(0.3), 0.0);
        for i in 1..200 {
            let t = 0.5 + 1.5 * i as f64 / 200.0;
            let v = w(t);
            assert!((0.0..=1.0).contains(&v), "w({t}) = {v}");
        }
    }

    #[test]
    fn partition_of_unity_log_grid() {
        for i in 0..100 {
            let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 99.0);
            let s: f64 = (-40..=40).map(|m| window_eval(m, t).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "t = {t}, sum = {s}");
        }
    }

    #[test]
    fn smooth_by_finite_differences() {
        // Eighth differences at step 1/64 stay bounded.
        let step = 1.0 / 64.0;
        let binom = [1.0, 8.0, 28.0, 56.0, 70.0, 56.0, 28.0, 8.0, 1.0];
        for i in 0..200 {
            let t0 = 0.4 + i as f64 * 0.01;
            let d: f64 = binom
                .iter()
                .enumerate()
                .map(|(k, b)| if k % 2 == 0 { 1.0 } else { -1.0 } * b * w(t0 + k as f64 * step))
                .sum();
            assert!(d.abs() / step.powi(8) < 1e12, "t = {t0}");
        }
    }
}
