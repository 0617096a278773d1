//! Dyadic Besov functionals for Hankel symbols.
//!
//! Discrete: `|α(0)|^p + Σ_{m≥0} 2^m ‖Σ_j α(j) w_m(j) e^{2πijθ}‖^p_{L^p(𝕋)}`.
//! Continuous: `Σ_{m∈ℤ} 2^m ‖∫ a(t) w_m(t) e^{2πiξt} dt‖^p_{L^p(ℝ)}`.
//! Both are returned together with their `p`-th root.
//!
//! For the continuous blocks the substitution `t = 2^m s` gives
//! `2^m ‖ℱ^{-1}(a w_m)‖_p^p = 2^{mp} ‖G_m‖_p^p`, `G_m(η) = ∫ a(2^m s) w(s) e^{2πiηs} ds`,
//! an integral over `s ∈ [1/2, 2]` with a smooth compactly supported
//! integrand, evaluated for all `η` at once by FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernel::KernelFunction;
use crate::linalg::HankelCoefficients;
use crate::window::{w, DyadicWindow};

/// Relative size below which FFT output is treated as roundoff.
const NOISE_FLOOR: f64 = 256.0 * f64::EPSILON;

/// Discretisation of the Besov sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovParams {
    /// Explicit block range; `None` chooses it from the data and extends it
    /// until the geometric tail estimate is below `tail_tolerance`.
    pub m_range: Option<(i32, i32)>,
    /// Minimum number of points on the circle.
    pub circle_grid_size: usize,
    /// Sample spacing in `s` for the continuous blocks; the line grid covers
    /// `|η| < 1/(2·sample_step)`.
    pub sample_step: f64,
    /// Spacing of the `η` grid.
    pub line_grid_step: f64,
    /// Relative tolerance for omitted blocks and for mass at the edge of the line grid.
    pub tail_tolerance: f64,
}

impl Default for BesovParams {
    fn default() -> Self {
        Self { m_range: None, circle_grid_size: 4096, sample_step: 1.0 / 256.0, line_grid_step: 1.0 / 64.0, tail_tolerance: 1e-6 }
    }
}

impl BesovParams {
    /// Twice the resolution in every grid parameter.
    pub fn refined(&self) -> Self {
        Self {
            circle_grid_size: self.circle_grid_size * 2,
            sample_step: self.sample_step / 2.0,
            line_grid_step: self.line_grid_step / 2.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesovValue {
    /// `functional^{1/p}`.
    pub value: f64,
    /// The sum itself (`p`-th power of `value`).
    pub functional: f64,
    /// `(m, block term)` in increasing `m`.
    pub blocks: Vec<(i32, f64)>,
    /// Geometric estimate of omitted blocks, included in `functional`.
    pub tail_estimate: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Besov exponent must be positive and finite, got {p}")))
    }
}

/// Discrete functional `|α(0)|^p + Σ_m 2^m ‖ℱ^{-1}(α w_m)‖_p^p`.
/// With `m_range = None` the sequence is treated as finitely supported and
/// the blocks `0..=⌈log₂ M⌉` are summed.
pub fn besov_norm_discrete(alpha: &HankelCoefficients, p: f64, params: &BesovParams) -> Result<BesovValue> {
    check_p(p)?;
    let len = alpha.len();
    let (m_lo, m_hi) = match params.m_range {
        Some((lo, hi)) => {
            let needed = 1usize << (hi.max(0) + 1) as u32;
            if len < needed {
                return Err(Error::Length { needed, have: len });
            }
            (lo.max(0), hi)
        }
        None => (0, (len as f64).log2().ceil().max(0.0) as i32),
    };
    let top = 1usize << (m_hi + 1) as u32;
    let k = params.circle_grid_size.max(4 * top).next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(k);
    let win = DyadicWindow;
    let mut blocks = Vec::new();
    let mut total = alpha.get(0).norm().powf(p);
    let mut buf = vec![Complex64::default(); k];
    for m in m_lo..=m_hi {
        buf.iter_mut().for_each(|z| *z = Complex64::default());
        let lo = (1usize << m as u32) / 2;
        let hi = (1usize << (m + 1) as u32).min(len);
        let mut any = false;
        for j in lo.max(1)..hi {
            let c = alpha.get(j) * win.value(m, j as f64);
            if c.norm() > 0.0 {
                any = true;
            }
            buf[j] = c;
        }
        let term = if any {
            fft.process(&mut buf);
            let lp: f64 = buf.iter().map(|z| z.norm().powf(p)).sum::<f64>() / k as f64;
            2f64.powi(m) * lp
        } else {
            0.0
        };
        total += term;
        blocks.push((m, term));
    }
    Ok(BesovValue { value: total.powf(1.0 / p), functional: total, blocks, tail_estimate: 0.0 })
}

struct LineBlocks {
    fft: Arc<dyn Fft<f64>>,
    k: usize,
    h: f64,
    samples: usize,
}

impl LineBlocks {
    fn new(params: &BesovParams) -> Result<Self> {
        if !(params.sample_step > 0.0 && params.line_grid_step > 0.0) {
            return Err(Error::Domain("grid steps must be positive".into()));
        }
        let samples = (1.5 / params.sample_step).round() as usize + 1;
        let k = ((1.0 / (params.sample_step * params.line_grid_step)).round() as usize).next_power_of_two().max(2 * samples);
        Ok(Self { fft: FftPlanner::<f64>::new().plan_fft_inverse(k), k, h: params.sample_step, samples })
    }

    /// `(‖G_m‖_p^p, edge fraction)` for one block, or `None` when the
    /// integrand vanishes.
    fn block(&self, a: &KernelFunction, m: i32, p: f64) -> Result<Option<(f64, f64)>> {
        let scale = 2f64.powi(m);
        let mut buf = vec![Complex64::default(); self.k];
        let mut any = false;
        for (n, z) in buf.iter_mut().enumerate().take(self.samples) {
            let s = 0.5 + n as f64 * self.h;
            let v = a.value(scale * s) * w(s);
            if !v.is_finite() {
                return Err(Error::Numeric(format!("kernel not finite at t = {}", scale * s)));
            }
            if v != 0.0 {
                any = true;
            }
            *z = Complex64::new(v, 0.0);
        }
        if !any {
            return Ok(None);
        }
        self.fft.process(&mut buf);
        let d_eta = 1.0 / (self.k as f64 * self.h);
        let edge = self.k / 2 - self.k / 20;
        // Values at the FFT roundoff floor are dropped; for p < 1 their
        // p-th powers would otherwise add up to a visible amount.
        let floor = NOISE_FLOOR * buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let (mut sum, mut edge_sum) = (0.0, 0.0);
        for (i, z) in buf.iter().enumerate() {
            if z.norm() <= floor {
                continue;
            }
            // |G| does not depend on the unimodular phase e^{πiη}.
            let v = (z.norm() * self.h).powf(p);
            sum += v;
            let dist = i.min(self.k - i);
            if dist >= edge {
                edge_sum += v;
            }
        }
        Ok(Some((sum * d_eta, if sum > 0.0 { edge_sum / sum } else { 0.0 })))
    }
}

/// Continuous functional `Σ_m 2^m ‖ℱ^{-1}(a w_m)‖^p_{L^p(ℝ)}`.
pub fn besov_norm_continuous(a: &KernelFunction, p: f64, params: &BesovParams) -> Result<BesovValue> {
    check_p(p)?;
    let lines = LineBlocks::new(params)?;
    let sup = a.support();
    let relevant = |m: i32| {
        let scale = 2f64.powi(m);
        0.5 * scale < sup.hi && 2.0 * scale > sup.lo
    };
    // (m, term × edge fraction), checked against the total at the end.
    let edges = std::cell::RefCell::new(Vec::<(i32, f64)>::new());
    let term_at = |m: i32| -> Result<f64> {
        if !relevant(m) {
            return Ok(0.0);
        }
        match lines.block(a, m, p)? {
            None => Ok(0.0),
            Some((lp, edge)) => {
                let term = 2f64.powf(m as f64 * p) * lp;
                edges.borrow_mut().push((m, term * edge));
                Ok(term)
            }
        }
    };
    let tol = params.tail_tolerance;
    let mut blocks: Vec<(i32, f64)> = Vec::new();
    let (lo, hi) = match params.m_range {
        Some(r) => r,
        None => {
            let centre = if sup.is_bounded() {
                (0.5 * (sup.lo.max(1e-300).log2() + sup.hi.log2())).round() as i32
            } else {
                a.feature_scale().map_or(0, |s| s.log2().round() as i32)
            };
            (centre - 20, centre + 20)
        }
    };
    for m in lo..=hi {
        blocks.push((m, term_at(m)?));
    }
    const LIMIT: i32 = 400;
    let tail = |first: f64, second: f64| -> Option<f64> {
        if first == 0.0 {
            return Some(0.0);
        }
        let r = first / second;
        (r < 0.95).then(|| first * r / (1.0 - r))
    };
    let sum = |b: &[(i32, f64)]| b.iter().map(|x| x.1).sum::<f64>();
    loop {
        let total = sum(&blocks);
        let n = blocks.len();
        let low = tail(blocks[0].1, blocks[1].1);
        let high = tail(blocks[n - 1].1, blocks[n - 2].1);
        let low_ok = low.is_some_and(|t| t <= tol * total);
        let high_ok = high.is_some_and(|t| t <= tol * total);
        if low_ok && high_ok {
            let est = low.unwrap() + high.unwrap();
            let functional = total + est;
            let edges = edges.borrow();
            let edge_mass: f64 = edges.iter().map(|e| e.1).sum();
            if edge_mass > tol * functional {
                let worst = edges.iter().fold((0, 0.0), |w, e| if e.1 > w.1 { *e } else { w });
                return Err(Error::Range(format!(
                    "{:.2e} of the L^p mass sits at the edge of the line grid (mostly block m = {}); refine sample_step",
                    edge_mass / functional,
                    worst.0
                )));
            }
            return Ok(BesovValue { value: functional.powf(1.0 / p), functional, blocks, tail_estimate: est });
        }
        if params.m_range.is_some() {
            return Err(Error::Range(format!(
                "omitted Besov blocks outside [{lo}, {hi}] exceed tolerance {tol:e}; widen m_range"
            )));
        }
        if !low_ok {
            let m = blocks[0].0 - 1;
            if m < -LIMIT {
                return Err(Error::Range("Besov blocks do not decay as m → −∞".into()));
            }
            blocks.insert(0, (m, term_at(m)?));
        }
        if !high_ok {
            let m = blocks[blocks.len() - 1].0 + 1;
            if m > LIMIT {
                return Err(Error::Range("Besov blocks do not decay as m → ∞".into()));
            }
            blocks.push((m, term_at(m)?));
        }
    }
}
