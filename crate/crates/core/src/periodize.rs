//! Periodization `𝒫f(θ) = Σ_j f(θ − j)`, its supremum, and the symbol identity
//! relating `Σ_m a(m+1) z^m` to the lattice sum of `ǎ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelFunction;
use crate::quad::{gregory_corrections, integrate, Tolerance};

/// Decay bound for a function on ℝ, used to bound lattice-sum tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineDecay {
    /// `f = 0` outside `[lo, hi]`.
    Compact { lo: f64, hi: f64 },
    /// `|f(t)| ≤ c e^{-rate|t|}`.
    Exponential { c: f64, rate: f64 },
    /// `|f(t)| ≤ c e^{-s t²}`.
    Gaussian { c: f64, s: f64 },
    /// `|f(t)| ≤ c |t|^{-order}` for `|t| ≥ 1`.
    Power { c: f64, order: f64 },
}

impl LineDecay {
    /// Bound on `Σ_{|θ−j| > J−1}|f(θ−j)|`, uniformly in `θ ∈ [0,1)`.
    fn tail(&self, j: usize) -> Result<f64> {
        let x = j as f64 - 1.0;
        Ok(match *self {
            LineDecay::Compact { lo, hi } => {
                if x >= lo.abs().max(hi.abs()) + 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            // Σ_{k≥x} c e^{-rk} ≤ c e^{-rx}/(1 − e^{-r}), both sides.
            LineDecay::Exponential { c, rate } => 2.0 * c * (-rate * x).exp() / (1.0 - (-rate).exp()),
            LineDecay::Gaussian { c, s } => 2.0 * c * (-s * x * x).exp() / (1.0 - (-s * (2.0 * x + 1.0)).exp()),
            LineDecay::Power { c, order } => {
                if order <= 1.0 {
                    return Err(Error::Divergence(format!(
                        "decay |t|^-{order} is not summable over the lattice"
                    )));
                }
                // Σ_{k>x} k^{-q} ≤ ∫_{x−1}^∞ t^{-q} dt.
                let y = (x - 1.0).max(1.0);
                2.0 * c * y.powf(1.0 - order) / (order - 1.0)
            }
        })
    }
}

/// A function on ℝ with a decay bound.
#[derive(Clone)]
pub struct LineFunction {
    pub f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub decay: LineDecay,
}

impl LineFunction {
    pub fn new(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static, decay: LineDecay) -> Self {
        Self { f: Arc::new(f), decay }
    }

    pub fn real(f: impl Fn(f64) -> f64 + Send + Sync + 'static, decay: LineDecay) -> Self {
        Self::new(move |t| Complex64::new(f(t), 0.0), decay)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    fn truncation(&self, tol: f64) -> Result<(usize, f64)> {
        const MAX_J: usize = 1_000_000;
        let mut j = 1usize;
        loop {
            let t = self.decay.tail(j)?;
            if t < tol {
                return Ok((j, t));
            }
            if j >= MAX_J {
                return Err(Error::Decay(format!("lattice tail {t:e} still above {tol:e} at J = {MAX_J}")));
            }
            j = (j * 2).min(MAX_J);
        }
    }

    /// `Σ_{|j| ≤ J} f(θ − j)`.
    fn lattice_sum(&self, theta: f64, j_max: usize) -> Complex64 {
        let mut s = self.eval(theta);
        for j in 1..=j_max as i64 {
            s += self.eval(theta - j as f64) + self.eval(theta + j as f64);
        }
        s
    }
}

/// Samples of `𝒫f` on `θ_k = k/n`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodizedFunction {
    pub samples: Vec<Complex64>,
    pub tail_bound: f64,
}

impl PeriodizedFunction {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `∫₀¹ 𝒫f(θ) e^{-2πijθ} dθ` by the trapezoid rule.
    pub fn fourier_coefficient(&self, j: i64) -> Complex64 {
        let n = self.samples.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * j as f64 * k as f64 / n))
            .sum::<Complex64>()
            / n
    }

    /// `‖𝒫f‖^p_{L^p(𝕋)}` by the trapezoid rule.
    pub fn lp_power(&self, p: f64) -> f64 {
        self.samples.iter().map(|v| v.norm().powf(p)).sum::<f64>() / self.samples.len() as f64
    }
}

/// Samples of the periodization on a grid of `grid_size` points of `[0,1)`.
pub fn periodize(f: &LineFunction, grid_size: usize, tail_tolerance: f64) -> Result<PeriodizedFunction> {
    if grid_size < 16 {
        return Err(Error::Domain(format!("periodization needs at least 16 samples, got {grid_size}")));
    }
    let (j_max, tail_bound) = f.truncation(tail_tolerance)?;
    let samples = (0..grid_size).map(|k| f.lattice_sum(k as f64 / grid_size as f64, j_max)).collect();
    Ok(PeriodizedFunction { samples, tail_bound })
}

/// Upper estimate of `sup_θ Σ_j g(θ − j)` for non-negative `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    /// Maximum found plus `tail_bound`.
    pub value: f64,
    pub argmax: f64,
    pub tail_bound: f64,
}

/// `‖𝒫g‖_{L^∞(𝕋)}` for non-negative `g`: truncated lattice sums maximised
/// on a 1024-point grid, refined by golden-section search, plus the tail bound.
pub fn periodization_sup(g: &LineFunction) -> Result<SupEstimate> {
    let (j_max, tail_bound) = match g.decay {
        LineDecay::Power { .. } => {
            let j = 2000;
            (j, g.decay.tail(j)?)
        }
        _ => g.truncation(1e-14)?,
    };
    let sum = |x: f64| g.lattice_sum(x, j_max).re;
    let n = 1024;
    let (mut best, mut best_x) = (f64::NEG_INFINITY, 0.0);
    for k in 0..n {
        let x = k as f64 / n as f64;
        let v = sum(x);
        if v < -1e-12 {
            return Err(Error::Domain("periodization_sup needs a non-negative function".into()));
        }
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // Golden-section refinement on the bracketing cells.
    let (mut lo, mut hi) = (best_x - 1.0 / n as f64, best_x + 1.0 / n as f64);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut f1, mut f2) = (sum(x1), sum(x2));
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = sum(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = sum(x2);
        }
    }
    let (fx, x) = if f1 > f2 { (f1, x1) } else { (f2, x2) };
    if fx > best {
        best = fx;
        best_x = x;
    }
    Ok(SupEstimate { value: best + tail_bound, argmax: best_x.rem_euclid(1.0), tail_bound })
}

/// Outcome of the symbol-identity check at one `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolCheck {
    /// `Σ_{m≥0} a(m+1) e^{2πiξm}`.
    pub lhs: Complex64,
    /// `e^{-2πiξ} Σ_j ǎ(ξ − j)`, symmetric summation, tail included.
    pub lattice: Complex64,
    /// `a(0+) e^{-2πiξ}/2`, the half-weight Poisson summation assigns to the
    /// jump of `a·1_{(0,∞)}` at `t = 0`.
    pub boundary: Complex64,
    /// `|lhs − (lattice − boundary)|`.
    pub residual: f64,
    /// `|lhs − lattice|`, the identity read without the boundary term.
    pub raw_residual: f64,
}

/// Compare `Σ_m α(m) z^m`, `α(m) = a(m+1)`, `z = e^{2πiξ}`, with the lattice
/// sum of the symbol.  Poisson summation applied to `a(t)e^{2πiξt}1_{t>0}`
/// gives `Σ_j ǎ(ξ−j) = a(0+)/2 + z Σ_m a(m+1) z^m` (symmetric summation),
/// so the boundary term is reported and subtracted.
pub fn check_symbol_periodization(a: &KernelFunction, xi: Complex64, j_max: usize) -> Result<SymbolCheck> {
    if !(xi.im > 0.0) {
        return Err(Error::Domain(format!("symbol identity needs Im ξ > 0, got {xi}")));
    }
    if j_max == 0 {
        return Err(Error::Domain("lattice truncation J must be positive".into()));
    }
    let a0 = a
        .value_at_zero()
        .ok_or_else(|| Error::Decay(format!("{} has no finite value at 0+", a.label())))?;
    let z = Complex64::from_polar((-2.0 * PI * xi.im).exp(), 2.0 * PI * xi.re);

    let mut lhs = Complex64::new(0.0, 0.0);
    let mut zm = Complex64::new(1.0, 0.0);
    let sup = a.support();
    let mut m = 0usize;
    loop {
        let t = (m + 1) as f64;
        let term = zm * a.value(t);
        lhs += term;
        zm *= z;
        m += 1;
        if (t > sup.hi) || (zm.norm() * a.value(t + 1.0).abs().max(1e-300) < 1e-18 && t > sup.lo) || m > 100_000 {
            break;
        }
    }

    let sym = |s: f64| -> Result<Complex64> { Ok(a.fourier(xi - s)? + a.fourier(xi + s)?) };
    let mut lattice = a.fourier(xi)?;
    for j in 1..=j_max {
        lattice += sym(j as f64)?;
    }
    // Σ_{j>J} h(j) = ∫_{J+1}^∞ h − Σ_i c_i h(J+1+i) (Gregory end corrections).
    let start = (j_max + 1) as f64;
    let integral = integrate(|s| sym(s).unwrap_or(Complex64::new(f64::NAN, 0.0)), start, f64::INFINITY, Tolerance::new(1e-15, 1e-13))?;
    let mut tail = integral.value;
    for (i, c) in gregory_corrections(8).iter().enumerate() {
        tail -= sym(start + i as f64)? * *c;
    }
    lattice += tail;
    let zinv = 1.0 / z;
    let lattice = zinv * lattice;
    let boundary = 0.5 * a0 * zinv;
    Ok(SymbolCheck {
        lhs,
        lattice,
        boundary,
        residual: (lhs - (lattice - boundary)).norm(),
        raw_residual: (lhs - lattice).norm(),
    })
}
