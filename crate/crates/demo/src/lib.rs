//! WebAssembly bindings for the browser page in `www/`.
//!
//! Each export wraps a plain function that is also tested natively, since
//! `JsError` only exists inside a JS host.

use wasm_bindgen::prelude::*;

use hankel_core::kernel::{counterexample_kernel, KernelFunction};
use hankel_core::laguerre::{schatten_via_galerkin_with, Dilation};
use hankel_core::linalg::{hankel_matrix, hankel_schatten, schatten_norm, singular_values, SchattenP, SingularSpectrum};
use hankel_core::restriction::pointwise_restrict;
use hankel_core::{Error, Result};

/// Keeps the page responsive.
const MAX_SIZE: usize = 400;

#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone)]
pub struct RestrictionReport {
    /// `‖H(R a)‖_{S_p}` for the `N×N` section.
    pub restricted: f64,
    /// `‖H(a)‖_{S_p}`.
    pub operator: f64,
    /// `(1 + 1/λ)‖H(a)‖_p / γ`.
    pub bound: f64,
    pub ratio: f64,
    pub method: String,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone)]
pub struct CounterexampleCurve {
    pub sizes: Vec<f64>,
    /// `‖H(a^(N))‖₂²`.
    pub hs_squared: Vec<f64>,
    /// `‖H(R a^(N))‖_p`, identically one.
    pub restricted: Vec<f64>,
    pub slope: f64,
}

fn schatten(p: f64) -> Result<SchattenP> {
    if p.is_infinite() {
        Ok(SchattenP::Infinity)
    } else {
        SchattenP::finite(p)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SIZE {
        return Err(Error::Domain(format!("N must be between 1 and {MAX_SIZE}, got {n}")));
    }
    Ok(())
}

fn operator_schatten(a: &KernelFunction, p: SchattenP, n: usize) -> Result<(f64, String)> {
    if p == SchattenP::Infinity {
        if let Some(v) = a.closed_form_operator_norm() {
            return Ok((v, "closed form".into()));
        }
    }
    if let Some(s) = a.closed_form_spectrum() {
        return Ok((schatten_norm(&SingularSpectrum::new(s, usize::MAX)?, p)?, "closed form".into()));
    }
    if let Some(s) = a.laplace_spectrum(64, 16) {
        return Ok((schatten_norm(&SingularSpectrum::new(s?, usize::MAX)?, p)?, "Laplace representation".into()));
    }
    let g = schatten_via_galerkin_with(a, p, n, Dilation::Auto)?;
    Ok((g.value, format!("Laguerre-Galerkin, N = {n}")))
}

pub fn restriction_report(kernel: &str, lambda: f64, gamma: f64, n: usize, p: f64) -> Result<RestrictionReport> {
    check_size(n)?;
    let a = KernelFunction::parse(kernel)?;
    let p = schatten(p)?;
    let alpha = pointwise_restrict(&a, lambda, gamma, 2 * n - 1)?;
    let restricted = hankel_schatten(&alpha, n, p)?;
    let (operator, method) = operator_schatten(&a, p, 128)?;
    let bound = (1.0 + 1.0 / lambda) * operator / gamma;
    Ok(RestrictionReport { restricted, operator, bound, ratio: restricted / bound, method })
}

pub fn restricted_singular_values(kernel: &str, lambda: f64, gamma: f64, n: usize) -> Result<Vec<f64>> {
    check_size(n)?;
    let a = KernelFunction::parse(kernel)?;
    let alpha = pointwise_restrict(&a, lambda, gamma, 2 * n - 1)?;
    Ok(singular_values(&hankel_matrix(&alpha, n)?)?.values)
}

pub fn counterexample_curve(max_log2: u32, p: f64) -> Result<CounterexampleCurve> {
    if !(1..=8).contains(&max_log2) {
        return Err(Error::Domain(format!("max_log2 must be in 1..=8, got {max_log2}")));
    }
    let p = schatten(p)?;
    let mut c = CounterexampleCurve { sizes: Vec::new(), hs_squared: Vec::new(), restricted: Vec::new(), slope: f64::NAN };
    for k in 1..=max_log2 {
        let n = 1u32 << k;
        let a = counterexample_kernel(n)?;
        let hs = a.hilbert_schmidt_norm()?;
        c.sizes.push(n as f64);
        c.hs_squared.push(hs * hs);
        c.restricted.push(hankel_schatten(&pointwise_restrict(&a, 1.0, 1.0, 31)?, 16, p)?);
    }
    let x: Vec<f64> = c.sizes.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = c.hs_squared.iter().map(|v| v.ln()).collect();
    if x.len() >= 2 {
        let m = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        c.slope = sxy / sxx;
    }
    Ok(c)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `‖H(R a)‖_p` against `(1+1/λ)‖H(a)‖_p`; `p = Infinity` for the operator norm.
#[wasm_bindgen(js_name = restrictionReport)]
pub fn restriction_report_js(kernel: &str, lambda: f64, gamma: f64, n: usize, p: f64) -> std::result::Result<RestrictionReport, JsError> {
    restriction_report(kernel, lambda, gamma, n, p).map_err(js)
}

/// Singular values of the `N×N` Hankel matrix of the restricted sequence, descending.
#[wasm_bindgen(js_name = singularValues)]
pub fn singular_values_js(kernel: &str, lambda: f64, gamma: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    restricted_singular_values(kernel, lambda, gamma, n).map_err(js)
}

/// `N = 2, 4, …, 2^max_log2`.
#[wasm_bindgen(js_name = counterexampleCurve)]
pub fn counterexample_curve_js(max_log2: u32, p: f64) -> std::result::Result<CounterexampleCurve, JsError> {
    counterexample_curve(max_log2, p).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_report() {
        let r = restriction_report("exp", 1.0, 1.0, 32, 1.0).unwrap();
        let exact = (-1f64).exp() / (1.0 - (-2f64).exp());
        assert!((r.restricted - exact).abs() < 1e-12);
        assert!((r.operator - 0.5).abs() < 1e-12);
        assert!((r.ratio - exact).abs() < 1e-12);
        assert_eq!(r.method, "closed form");
        let inf = restriction_report("carleman", 1.0, 1.0, 64, f64::INFINITY).unwrap();
        assert!(inf.restricted < std::f64::consts::PI && inf.operator == std::f64::consts::PI);
    }

    #[test]
    fn singular_values_descend() {
        let s = restricted_singular_values("texp", 0.5, 1.0, 20).unwrap();
        assert_eq!(s.len(), 20);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn counterexample_slope() {
        let c = counterexample_curve(6, 1.0).unwrap();
        assert_eq!(c.sizes, vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
        assert!(c.restricted.iter().all(|&v| v == 1.0));
        assert!((c.slope + 1.0).abs() < 0.1);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(restriction_report("nope", 1.0, 1.0, 8, 1.0).is_err());
        assert!(restriction_report("exp", 1.0, 1.0, 0, 1.0).is_err());
        assert!(restriction_report("exp", 1.0, 1.0, 10_000, 1.0).is_err());
        assert!(restricted_singular_values("exp", -1.0, 1.0, 8).is_err());
        assert!(counterexample_curve(0, 1.0).is_err());
    }
}
