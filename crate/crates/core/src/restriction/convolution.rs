//! Iterated convolution families `φ_j = T_ν^j φ` on a uniform grid and the
//! restriction `α(j) = ∫ a φ_j`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::weight::{ConvolutionMeasure, WeightFunction};
use crate::error::{Error, Result};
use crate::kernel::KernelFunction;
use crate::linalg::HankelCoefficients;
use crate::quad::{composite_gauss_legendre, gregory_corrections, gregory_weights, UniformGrid};

/// End-correction order of the Gregory rules used on the grid.
pub(crate) const GREGORY_ORDER: usize = 8;
const MAX_FAMILY: usize = 128;
/// Largest allowed `h·max|Δd|/max|d|` for a density on the grid.
const RESOLUTION_LIMIT: f64 = 0.05;
/// Columns may keep at most this fraction of their L² norm in the last
/// sixteenth of the grid.
pub(crate) const TAIL_LIMIT: f64 = 1e-6;

/// Samples of a function on `grid`, identically zero before index `start`
/// and smooth from `start` on.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: UniformGrid,
    pub start: usize,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// Samples `f(t_i)` for `i ≥ start`.
    pub fn sample(grid: UniformGrid, start: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len)
            .map(|i| if i < start { Complex64::default() } else { f(grid.t(i)) })
            .collect();
        Self { grid, start, values }
    }

    /// Gregory weights for `∫ f dt` over `[t_start, t_end]`, indexed like `values`.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let n = self.grid.len - self.start;
        if n < 2 * GREGORY_ORDER {
            return Err(Error::Range(format!("only {n} grid points after the support start")));
        }
        let mut w = vec![0.0; self.start];
        w.extend(gregory_weights(n, GREGORY_ORDER)?.into_iter().map(|x| x * self.grid.step));
        Ok(w)
    }

    /// `Σ w_i f_i g_i`, the quadrature of `∫ f g dt`.
    pub fn integrate_against(&self, g: &[Complex64]) -> Result<Complex64> {
        let w = self.weights()?;
        Ok(w.iter().zip(&self.values).zip(g).skip(self.start).map(|((w, f), g)| f * g * *w).sum())
    }

    /// Fraction of the L² norm held by the last sixteenth of the grid.
    pub fn tail_fraction(&self) -> f64 {
        let n = self.values.len();
        let cut = n - n / 16;
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let tail: f64 = self.values[cut..].iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }
}

/// Convolution with a sampled density, reusing the transformed density.
struct DensityConvolver {
    step: f64,
    density: Vec<f64>,
    density_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    size: usize,
    corrections: Vec<f64>,
    exact: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl DensityConvolver {
    fn new(grid: UniformGrid, d: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        let n = grid.len;
        let density: Vec<f64> = (0..n).map(|i| d(grid.t(i))).collect();
        let peak = density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            let jump = density.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
            if jump / peak > RESOLUTION_LIMIT {
                return Err(Error::Resolution(format!(
                    "density changes by {:.3} of its peak per grid step {}",
                    jump / peak,
                    grid.step
                )));
            }
        }
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut density_hat: Vec<Complex64> = density.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        density_hat.resize(size, Complex64::default());
        forward.process(&mut density_hat);
        Ok(Self { step: grid.step, density, density_hat, forward, inverse, size, corrections: gregory_corrections(GREGORY_ORDER), exact: d })
    }

    /// `c_i = ∫_0^{t_i} g(s) d(t_i − s) ds` for samples `g` starting at `t = 0`.
    fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = g.len();
        let k = GREGORY_ORDER;
        if m < 2 * k {
            return Err(Error::Range(format!("{m} samples are too few for the convolution rule")));
        }
        let mut buf: Vec<Complex64> = g.to_vec();
        buf.resize(self.size, Complex64::default());
        self.forward.process(&mut buf);
        for (b, d) in buf.iter_mut().zip(&self.density_hat) {
            *b *= d;
        }
        self.inverse.process(&mut buf);
        let scale = self.step / self.size as f64;
        let h = self.step;
        let mut out = vec![Complex64::default(); m];
        for i in (2 * k - 1)..m {
            let mut v = buf[i] * scale;
            for (q, c) in self.corrections.iter().enumerate() {
                v += (g[q] * self.density[i - q] + g[i - q] * self.density[q]) * (c * h);
            }
            out[i] = v;
        }
        // Near the origin the window is too short for end corrections:
        // interpolate g through its first 2k samples and use Gauss–Legendre.
        let nodes: Vec<f64> = (0..2 * k).map(|q| q as f64).collect();
        let bary = barycentric_weights(2 * k);
        for (i, slot) in out.iter_mut().enumerate().take(2 * k - 1).skip(1) {
            let tau = i as f64 * h;
            let (x, w) = composite_gauss_legendre(&[0.0, tau], 20);
            let mut v = Complex64::default();
            for (s, ws) in x.iter().zip(&w) {
                v += interpolate(&nodes, &bary, &g[..2 * k], s / h) * ((self.exact)(tau - s) * ws);
            }
            *slot = v;
        }
        Ok(out)
    }
}

fn barycentric_weights(n: usize) -> Vec<f64> {
    // Equispaced nodes: w_q = (−1)^q C(n−1, q).
    let mut w = Vec::with_capacity(n);
    let mut c = 1.0;
    for q in 0..n {
        w.push(if q % 2 == 0 { c } else { -c });
        c = c * (n - 1 - q) as f64 / (q + 1) as f64;
    }
    w
}

fn interpolate(nodes: &[f64], w: &[f64], f: &[Complex64], x: f64) -> Complex64 {
    let mut num = Complex64::default();
    let mut den = 0.0;
    for ((xq, wq), fq) in nodes.iter().zip(w).zip(f) {
        let d = x - xq;
        if d == 0.0 {
            return *fq;
        }
        num += fq * (wq / d);
        den += wq / d;
    }
    num / den
}

/// Applies `T_ν` to grid samples.
pub fn convolve_samples(f: &GridFunction, nu: &ConvolutionMeasure) -> Result<GridFunction> {
    let conv = match &nu.density {
        Some(d) => Some(DensityConvolver::new(f.grid, d.clone())?),
        None => None,
    };
    step(f, nu, conv.as_ref())
}

fn step(f: &GridFunction, nu: &ConvolutionMeasure, conv: Option<&DensityConvolver>) -> Result<GridFunction> {
    let grid = f.grid;
    let n = grid.len;
    let mut out = vec![Complex64::default(); n];
    let mut start = n;
    if let Some((loc, c)) = nu.atom {
        let s = grid.index_of(loc).ok_or_else(|| {
            Error::Resolution(format!("atom at {loc} is not a multiple of the grid step {}", grid.step))
        })?;
        if s > 0 && conv.is_some() {
            return Err(Error::Resolution("an atom off the origin combined with a density is not supported".into()));
        }
        for i in (f.start + s)..n {
            out[i] += f.values[i - s] * c;
        }
        start = (f.start + s).min(n);
    }
    if let Some(conv) = conv {
        let c = conv.apply(&f.values[f.start..])?;
        for (i, v) in c.into_iter().enumerate() {
            out[f.start + i] += v;
        }
        start = start.min(f.start);
    }
    if start >= n {
        return Err(Error::Range("the convolved function left the grid".into()));
    }
    Ok(GridFunction { grid, start, values: out })
}

/// `(T_ν f)(t) = c·f(t−a)[t ≥ a] + ∫_0^t f(s) density(t−s) ds` on `grid`.
pub fn convolve_measure(
    f: impl Fn(f64) -> Complex64,
    nu: &ConvolutionMeasure,
    grid: UniformGrid,
) -> Result<GridFunction> {
    convolve_samples(&GridFunction::sample(grid, 0, f), nu)
}

/// `[φ, T_νφ, …, T_ν^{j_max}φ]` on `grid`, computed level by level.
pub fn iterate_family(
    phi: impl Fn(f64) -> Complex64,
    nu: &ConvolutionMeasure,
    grid: UniformGrid,
    j_max: usize,
) -> Result<Vec<GridFunction>> {
    let conv = match &nu.density {
        Some(d) => Some(DensityConvolver::new(grid, d.clone())?),
        None => None,
    };
    let mut family = vec![GridFunction::sample(grid, 0, phi)];
    for _ in 0..j_max {
        let next = step(family.last().expect("non-empty"), nu, conv.as_ref())?;
        family.push(next);
    }
    Ok(family)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionOptions {
    pub step: f64,
    /// Grid range; by default 64 plus the distance the atoms shift the family.
    pub range: Option<f64>,
    /// Run even if the decay hypothesis on `φ̌` fails.
    pub force: bool,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        Self { step: 1.0 / 512.0, range: None, force: false }
    }
}

impl ConvolutionOptions {
    pub fn grid(&self, nu: &ConvolutionMeasure, count: usize) -> Result<UniformGrid> {
        let range = self.range.unwrap_or_else(|| {
            let shift = nu.atom.map_or(0.0, |(loc, _)| loc);
            64.0 + (shift * count as f64).ceil()
        });
        UniformGrid::new(self.step, range)
    }
}

/// Which hypotheses on `(φ, ν)` were met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    /// `|φ̌(ξ)| ≤ C/(1+ξ²)`.
    pub decay: bool,
    /// `ν` positive with total mass at most one.
    pub positive_measure: bool,
    /// `max |ν̌|` on an upper half-plane grid.
    pub hinf_bound: f64,
}

impl HypothesisReport {
    pub fn new(phi: &WeightFunction, nu: &ConvolutionMeasure) -> Self {
        Self {
            decay: phi.fourier_decay.order >= 2.0,
            positive_measure: nu.positive_hypothesis(),
            hinf_bound: nu.hinf_on_grid(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvolutionRestriction {
    pub coefficients: HankelCoefficients,
    pub hypotheses: HypothesisReport,
}

/// Kernel samples on the grid; `a(0)` is the right limit.
pub(crate) fn sample_kernel(a: &KernelFunction, grid: UniformGrid, len: usize) -> Result<Vec<Complex64>> {
    let a0 = a
        .value_at_zero()
        .ok_or_else(|| Error::Domain(format!("kernel {} has no finite value at 0+", a.label())))?;
    let mut out = Vec::with_capacity(len);
    out.push(Complex64::new(a0, 0.0));
    for i in 1..len {
        let v = a.value(grid.t(i));
        if !v.is_finite() {
            return Err(Error::Numeric(format!("a({}) = {v}", grid.t(i))));
        }
        out.push(Complex64::new(v, 0.0));
    }
    Ok(out)
}

/// `α(j) = ∫_0^∞ a(t)φ_j(t)dt`, `φ_j = T_ν^j φ`, `j < count ≤ 128`.
pub fn convolution_restrict(
    a: &KernelFunction,
    phi: &WeightFunction,
    nu: &ConvolutionMeasure,
    count: usize,
    opts: &ConvolutionOptions,
) -> Result<ConvolutionRestriction> {
    if count == 0 || count > MAX_FAMILY {
        return Err(Error::Domain(format!("family size {count} outside 1..={MAX_FAMILY}")));
    }
    let hypotheses = HypothesisReport::new(phi, nu);
    if !hypotheses.decay && !opts.force {
        return Err(Error::Hypothesis(format!(
            "|φ̌| decays with order {} < 2 for weight {}",
            phi.fourier_decay.order, phi.label
        )));
    }
    let grid = opts.grid(nu, count)?;
    let family = iterate_family(|t| phi.eval(t), nu, grid, count - 1)?;
    let samples = sample_kernel(a, grid, grid.len)?;
    let mut entries = Vec::with_capacity(count);
    for (j, col) in family.iter().enumerate() {
        let tail = col.tail_fraction();
        if tail > TAIL_LIMIT {
            return Err(Error::Range(format!("φ_{j} keeps {tail:.2e} of its norm at the end of the grid")));
        }
        entries.push(col.integrate_against(&samples)?);
    }
    let coefficients = HankelCoefficients::new(entries, format!("{} | conv:phi={},nu={}", a.label(), phi.label, nu.label))?;
    Ok(ConvolutionRestriction { coefficients, hypotheses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::averaging_restrict;
    use std::f64::consts::PI;

    fn grid() -> UniformGrid {
        UniformGrid::default()
    }

    #[test]
    fn unit_shift_is_translation() {
        let phi = WeightFunction::texp();
        let out = convolve_measure(|t| phi.eval(t), &ConvolutionMeasure::unit_shift(), grid()).unwrap();
        assert_eq!(out.start, 512);
        for i in (0..grid().len).step_by(97) {
            let t = grid().t(i);
            assert!((out.values[i] - phi.eval(t - 1.0)).norm() < 1e-15, "t = {t}");
        }
    }

    #[test]
    fn laguerre_measure_on_exponential() {
        let f = |t: f64| Complex64::new((-2.0 * PI * t).exp(), 0.0);
        let out = convolve_measure(f, &ConvolutionMeasure::laguerre(), grid()).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..grid().len {
            let t = grid().t(i);
            let exact = (1.0 - 4.0 * PI * t) * (-2.0 * PI * t).exp();
            err = err.max((out.values[i].re - exact).abs());
        }
        assert!(err < 1e-11, "err = {err:e}");
    }

    #[test]
    fn probability_density_keeps_constants_below_one() {
        let g = UniformGrid::new(1.0 / 512.0, 16.0).unwrap();
        let out = convolve_measure(|_| Complex64::new(1.0, 0.0), &ConvolutionMeasure::exp_density(), g).unwrap();
        for (i, v) in out.values.iter().enumerate() {
            let exact = 1.0 - (-2.0 * PI * g.t(i)).exp();
            assert!(v.re <= 1.0 + 1e-12);
            assert!((v.re - exact).abs() < 1e-11, "t = {}", g.t(i));
        }
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let g = UniformGrid::new(0.25, 16.0).unwrap();
        let r = convolve_measure(|t| Complex64::new((-t).exp(), 0.0), &ConvolutionMeasure::laguerre(), g);
        assert!(matches!(r, Err(Error::Resolution(_))));
        let g = UniformGrid::new(0.3, 15.0).unwrap();
        let r = convolve_measure(|_| Complex64::new(1.0, 0.0), &ConvolutionMeasure::unit_shift(), g);
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn shift_family_matches_averaging() {
        let a = KernelFunction::exp(1.0).unwrap();
        let phi = WeightFunction::texp();
        let c = convolution_restrict(&a, &phi, &ConvolutionMeasure::unit_shift(), 12, &ConvolutionOptions::default()).unwrap();
        let r = averaging_restrict(&a, &phi, 12).unwrap();
        for j in 0..12 {
            assert!((c.coefficients.get(j) - r.get(j)).norm() < 1e-12, "j = {j}");
        }
        assert!(c.hypotheses.decay && c.hypotheses.positive_measure);
    }

    #[test]
    fn zero_kernel_and_hypotheses() {
        let z = convolution_restrict(
            &KernelFunction::zero(),
            &WeightFunction::laguerre(),
            &ConvolutionMeasure::laguerre(),
            8,
            &ConvolutionOptions::default(),
        )
        .unwrap();
        assert!(z.coefficients.entries().iter().all(|v| v.norm() == 0.0));
        assert!(!z.hypotheses.positive_measure);
        assert!((z.hypotheses.hinf_bound - 1.0).abs() < 1e-12);
        let a = KernelFunction::exp(1.0).unwrap();
        let r = convolution_restrict(&a, &WeightFunction::exp(), &ConvolutionMeasure::unit_shift(), 4, &ConvolutionOptions::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
        let forced = ConvolutionOptions { force: true, ..Default::default() };
        let r = convolution_restrict(&a, &WeightFunction::exp(), &ConvolutionMeasure::unit_shift(), 4, &forced).unwrap();
        assert!(!r.hypotheses.decay);
        assert!(convolution_restrict(&a, &WeightFunction::texp(), &ConvolutionMeasure::unit_shift(), 129, &forced).is_err());
    }
}
