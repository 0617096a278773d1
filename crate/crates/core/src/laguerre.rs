//! Laguerre polynomials, the Laguerre functions
//! `u_n(t) = −2i√π L_n(4πt)e^{-2πt}`, and the Galerkin matrices of integral
//! Hankel operators in that basis.
//!
//! With the real profiles `e_n(t) = 2√π L_n(4πt)e^{-2πt}` the Gram matrix
//! `G[j][k] = ⟨H(a)u_j, u_k⟩ = ∬ a(t+s) e_j(t) e_k(s) dt ds` is Hankel with
//!
//! `β(n) = ∫₀^∞ a(x) e^{-2πx} (L_n(4πx) − L_{n+1}(4πx)) dx`,
//!
//! which follows from `∫₀^x L_j(y−z)L_k(z)dz = L_{j+k}(y) − L_{j+k+1}(y)`.
//! The bilinear pairing `∬ a(t+s)u_j(t)u_k(s)` is `−β(j+k)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{scale_kernel, DecayHint, KernelFunction};
use crate::linalg::{schatten_norm, singular_values, DenseMatrix, HankelCoefficients, SchattenP};
use crate::quad::{composite_gauss_legendre, integrate, CompensatedSum, Tolerance, UniformGrid};
use crate::restriction::{iterate_family, ConvolutionMeasure, Factor};

/// Highest polynomial degree the basis evaluates.
pub const MAX_DEGREE: usize = 512;
/// Largest Galerkin size: the coefficients need degrees up to `2N − 1`.
pub const MAX_GALERKIN: usize = MAX_DEGREE / 2;
const RESCALE: f64 = 1e150;
const POINTS_PER_PANEL: usize = 16;
const CHECK_POINTS_PER_PANEL: usize = 24;

/// `L_n(x)` by the three-term recurrence.
pub fn laguerre_poly(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Evaluator for degrees `0..=max_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaguerreBasis {
    max_degree: usize,
}

impl LaguerreBasis {
    pub fn new(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_DEGREE {
            return Err(Error::Domain(format!("degree {max_degree} above the cap {MAX_DEGREE}")));
        }
        Ok(Self { max_degree })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `[L_0(x), …, L_{max}(x)]`.
    pub fn polys(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.max_degree + 1);
        out.push(1.0);
        if self.max_degree >= 1 {
            out.push(1.0 - x);
        }
        for k in 1..self.max_degree {
            let kf = k as f64;
            out.push(((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0));
        }
        out
    }

    /// `[ℓ_0(x), …, ℓ_max(x)]` with `ℓ_n(x) = L_n(x)e^{-x/2}`, computed with a
    /// running log-scale so that neither factor overflows.
    pub fn scaled(&self, x: f64) -> Result<Vec<f64>> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("Laguerre function at x = {x}")));
        }
        let n = self.max_degree;
        let mut raw = Vec::with_capacity(n + 1);
        let mut log_scale = vec![0.0f64; n + 1];
        let mut ls = 0.0;
        let (mut prev, mut cur) = (1.0f64, 1.0 - x);
        raw.push(prev);
        if n >= 1 {
            raw.push(cur);
        }
        for k in 1..n {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                prev /= RESCALE;
                cur /= RESCALE;
                ls += RESCALE.ln();
            }
            raw.push(cur);
            log_scale[k + 1] = ls;
        }
        let mut out = Vec::with_capacity(n + 1);
        for (v, s) in raw.into_iter().zip(log_scale) {
            let e = s - 0.5 * x;
            let r = v * e.exp();
            if !r.is_finite() {
                return Err(Error::Numeric(format!("Laguerre recurrence overflow at x = {x}")));
            }
            out.push(r);
        }
        Ok(out)
    }
}

/// `u_n(t) = −2i√π L_n(4πt) e^{-2πt}`.
pub fn laguerre_fn(n: usize, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("Laguerre function at t = {t}")));
    }
    let l = LaguerreBasis::new(n)?.scaled(4.0 * PI * t)?[n];
    Ok(Complex64::new(0.0, -2.0 * PI.sqrt() * l))
}

/// How the basis is dilated before discretising.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dilation {
    /// The Laguerre functions themselves.
    #[default]
    Natural,
    /// Compactly supported kernels are stretched so their support spans a
    /// fixed fraction of the basis' reach; otherwise natural.
    Auto,
    /// Discretise `γ·H(a_γ)`, unitarily equivalent to `H(a)`.
    Fixed(f64),
}

impl Dilation {
    /// The factor `γ` used for `a` at size `n`.
    pub fn factor(&self, a: &KernelFunction, n: usize) -> Result<f64> {
        match *self {
            Dilation::Natural => Ok(1.0),
            Dilation::Fixed(g) if g > 0.0 && g.is_finite() => Ok(g),
            Dilation::Fixed(g) => Err(Error::Domain(format!("dilation {g} must be positive"))),
            Dilation::Auto => {
                let s = a.support();
                if s.is_bounded() {
                    Ok((1.5 * PI * s.hi / n as f64).min(1.0))
                } else {
                    Ok(1.0)
                }
            }
        }
    }
}

/// Galerkin coefficients `β(0..2N−1)`; `G[j][k] = β(j+k)` up to the dilation.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinHankel {
    pub beta: Vec<f64>,
    pub size: usize,
    pub source: String,
    pub dilation: f64,
    /// `max |β − β'|` between the 16- and 24-point panel rules.
    pub quadrature_error: f64,
    pub nodes: usize,
}

impl GalerkinHankel {
    pub fn coefficients(&self) -> Result<HankelCoefficients> {
        HankelCoefficients::from_real(&self.beta, format!("galerkin({})", self.source))
    }

    /// The `N × N` Gram matrix `G[j][k] = β(j+k)`.
    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.size, self.size, |j, k| Complex64::new(self.beta[j + k], 0.0))
    }

    /// Bilinear coefficients `α(n) = ∬ a(t+s)u_j(t)u_k(s)`, `j + k = n`.
    pub fn bilinear(&self) -> Vec<f64> {
        self.beta.iter().map(|b| -b).collect()
    }
}

/// Quadrature nodes in `x` for `∫₀^∞ f(x) ℓ_n(4πx) dx`, `n ≤ n_max`:
/// composite Gauss–Legendre in `u = √x`, panels no wider than a fraction of
/// the local oscillation of `ℓ_n` and of the kernel's feature scale.
fn galerkin_nodes(a: &KernelFunction, n_max: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n_max as f64;
    let x_max = (4.0 * nf + 60.0 * nf.sqrt() + 100.0) / (4.0 * PI);
    let s = a.support();
    let lo = s.lo.max(0.0).min(x_max);
    let hi = s.hi.min(x_max);
    let du_osc = PI / (4.0 * PI * (nf + 0.5)).sqrt();
    let dx_feat = a.feature_scale().map(|f| 0.5 * f);
    let mut edges = vec![lo.sqrt()];
    let end = hi.sqrt();
    while *edges.last().expect("non-empty") < end {
        let u = *edges.last().expect("non-empty");
        let mut du = du_osc;
        if let Some(dx) = dx_feat {
            du = du.min(dx / (2.0 * u + du_osc));
        }
        edges.push((u + du).min(end));
    }
    let (u, wu) = composite_gauss_legendre(&edges, per_panel);
    u.iter().zip(&wu).map(|(&u, &w)| (u * u, 2.0 * u * w)).unzip()
}

fn beta_with_rule(a: &KernelFunction, count: usize, per_panel: usize) -> Result<(Vec<f64>, usize)> {
    let basis = LaguerreBasis::new(count)?;
    let (x, w) = galerkin_nodes(a, count, per_panel);
    let mut acc = vec![CompensatedSum::default(); count];
    for (&x, &w) in x.iter().zip(&w) {
        let av = a.value(x);
        if !av.is_finite() {
            return Err(Error::Numeric(format!("a({x}) = {av}")));
        }
        if av == 0.0 {
            continue;
        }
        let l = basis.scaled(4.0 * PI * x)?;
        for (n, s) in acc.iter_mut().enumerate() {
            s.add(w * av * (l[n] - l[n + 1]));
        }
    }
    Ok((acc.iter().map(|s| s.value()).collect(), x.len()))
}

/// `β(n)`, `n = 0..2N−1`, in the natural basis.
pub fn galerkin_coefficients(a: &KernelFunction, n: usize) -> Result<GalerkinHankel> {
    galerkin_with(a, n, Dilation::Natural)
}

/// `β(n)` for `γ·H(a_γ)` with `γ` from `dilation`.
pub fn galerkin_with(a: &KernelFunction, n: usize, dilation: Dilation) -> Result<GalerkinHankel> {
    if n == 0 || n > MAX_GALERKIN {
        return Err(Error::Domain(format!("Galerkin size {n} outside 1..={MAX_GALERKIN}")));
    }
    let gamma = dilation.factor(a, n)?;
    let k = scale_kernel(a, gamma)?;
    if let DecayHint::Polynomial { order } = k.decay_hint() {
        if order <= 0.0 {
            return Err(Error::Domain(format!("{} does not decay", k.label())));
        }
    }
    let count = 2 * n - 1;
    let (fine, nodes) = beta_with_rule(&k, count, POINTS_PER_PANEL)?;
    let (check, _) = beta_with_rule(&k, count, CHECK_POINTS_PER_PANEL)?;
    let quadrature_error = fine.iter().zip(&check).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = fine.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    if quadrature_error > 1e-6 * scale.max(1e-300) {
        return Err(Error::Numeric(format!(
            "Galerkin quadrature for {} unresolved: rules differ by {quadrature_error:.2e}",
            a.label()
        )));
    }
    Ok(GalerkinHankel {
        beta: fine.into_iter().map(|b| b * gamma).collect(),
        size: n,
        source: a.label(),
        dilation: gamma,
        quadrature_error: quadrature_error * gamma,
        nodes,
    })
}

/// `G[j][k] = ∬ a(t+s)e_j(t)e_k(s) dt ds` for `N ≤ 8`, without the Laguerre
/// convolution identity: the inner integral over `s ∈ [0, x]` of
/// `e_j(x−s)e_k(s)` is a polynomial of degree `< 16` times `e^{-2πx}` and is
/// integrated exactly by 16-point Gauss–Legendre; the outer one adaptively.
pub fn gram_double_integral(a: &KernelFunction, n: usize) -> Result<DenseMatrix> {
    if n == 0 || n > 8 {
        return Err(Error::Domain(format!("double-integral oracle supports 1 ≤ N ≤ 8, got {n}")));
    }
    let (sx, sw) = composite_gauss_legendre(&[0.0, 1.0], 16);
    let s = a.support();
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let inner = |x: f64| {
                let mut q = 0.0;
                for (r, w) in sx.iter().zip(&sw) {
                    let s = r * x;
                    q += w * laguerre_poly(j, 4.0 * PI * (x - s)) * laguerre_poly(k, 4.0 * PI * s);
                }
                4.0 * PI * x * q
            };
            let f = |x: f64| a.value(x) * (-2.0 * PI * x).exp() * inner(x);
            let tol = Tolerance::new(1e-15, 1e-12);
            let mut v = 0.0;
            if s.is_bounded() {
                v += integrate(f, s.lo, s.hi, tol)?.value;
            } else {
                let mut lo = s.lo;
                for hi in [0.25, 1.0, 4.0, 16.0] {
                    if hi > lo {
                        v += integrate(f, lo, hi, tol)?.value;
                        lo = hi;
                    }
                }
                v += integrate(f, lo, f64::INFINITY, tol)?.value;
            }
            g.set(j, k, Complex64::new(v, 0.0));
            g.set(k, j, Complex64::new(v, 0.0));
        }
    }
    Ok(g)
}

/// Schatten norm of the Galerkin matrix with convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSchatten {
    pub value: f64,
    /// The same norm at `N/2`.
    pub half_value: f64,
    pub converged: bool,
    pub dilation: f64,
}

/// `‖G_N‖_{S_p}` in the natural basis; converged when the change from `N/2`
/// is below the truncation threshold.
pub fn schatten_via_galerkin(a: &KernelFunction, p: SchattenP, n: usize) -> Result<GalerkinSchatten> {
    schatten_via_galerkin_with(a, p, n, Dilation::Natural)
}

pub fn schatten_via_galerkin_with(a: &KernelFunction, p: SchattenP, n: usize, dilation: Dilation) -> Result<GalerkinSchatten> {
    let full = galerkin_with(a, n, dilation)?;
    let value = schatten_norm(&singular_values(&full.matrix())?.numerical(), p)?;
    let half_value = if n >= 2 {
        let h = n / 2;
        let half = if matches!(dilation, Dilation::Auto) {
            galerkin_with(a, h, dilation)?
        } else {
            GalerkinHankel { beta: full.beta[..2 * h - 1].to_vec(), size: h, ..full.clone() }
        };
        schatten_norm(&singular_values(&half.matrix())?.numerical(), p)?
    } else {
        0.0
    };
    let converged = (value - half_value).abs() <= crate::linalg::TRUNCATION_CONVERGED * value.max(f64::MIN_POSITIVE);
    Ok(GalerkinSchatten { value, half_value, converged, dilation: full.dilation })
}

/// `max_{j ≤ j_max, t} |T_ν^j ψ(t) − u_j(t)|` for the Laguerre measure.
pub fn verify_laguerre_convolution_family(j_max: usize, grid: UniformGrid) -> Result<f64> {
    if j_max > 24 {
        return Err(Error::Domain(format!("j_max = {j_max} above 24")));
    }
    let psi = Factor::laguerre_psi();
    let family = iterate_family(|t| (psi.eval)(t), &ConvolutionMeasure::laguerre(), grid, j_max)?;
    let basis = LaguerreBasis::new(j_max)?;
    let mut worst: f64 = 0.0;
    for i in 0..grid.len {
        let t = grid.t(i);
        let l = basis.scaled(4.0 * PI * t)?;
        for (j, col) in family.iter().enumerate() {
            let u = Complex64::new(0.0, -2.0 * PI.sqrt() * l[j]);
            worst = worst.max((col.values[i] - u).norm());
        }
    }
    Ok(worst)
}
