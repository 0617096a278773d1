//! Quadrature building blocks: adaptive Gauss–Kronrod, composite
//! Gauss–Legendre, Gregory end corrections for uniform grids, and
//! compensated summation.

use std::ops::{Add, Mul, Sub};

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Scalar types the adaptive integrator can accumulate.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron = kron + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Adaptive Gauss–Kronrod (7/15) integration over `[a, b]`; `b` may be
/// `+∞`, in which case the map `t = a + u/(1−u)` is applied.
pub fn integrate<T: Scalar, F: Fn(f64) -> T>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>> {
    if !(a.is_finite()) || b.is_nan() || b < a {
        return Err(Error::Domain(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate { value: T::zero(), error: 0.0 });
    }
    if b.is_infinite() {
        let g = |u: f64| {
            let d = 1.0 - u;
            f(a + u / d) * (1.0 / (d * d))
        };
        return adapt(&g, 0.0, 1.0, tol);
    }
    adapt(&f, a, b, tol)
}

fn adapt<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>> {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in parts.iter().enumerate() {
            total = total + p.2;
            err += p.3;
            if p.3 > parts[worst].3 {
                worst = i;
            }
        }
        if !total.magnitude().is_finite() || !err.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= tol.abs.max(tol.rel * total.magnitude()) {
            return Ok(Estimate { value: total, error: err });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence after {MAX_INTERVALS} subintervals (error estimate {err:e})"
            )));
        }
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature("interval cannot be bisected further".into()));
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Nodes and weights of a composite Gauss–Legendre rule with `order` points
/// on each panel `[edges[i], edges[i+1]]`.
pub fn composite_gauss_legendre(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(order.max(2)).expect("order at least 2");
    let pairs = rule.as_node_weight_pairs();
    let mut nodes = Vec::with_capacity(pairs.len() * edges.len());
    let mut weights = Vec::with_capacity(pairs.len() * edges.len());
    for w in edges.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let h = 0.5 * (w[1] - w[0]);
        if h <= 0.0 {
            continue;
        }
        for &(x, wt) in pairs {
            nodes.push(c + h * x);
            weights.push(h * wt);
        }
    }
    (nodes, weights)
}

/// End corrections `c_i`, `i < k`, such that for unit spacing
/// `∫₀^∞ g ≈ Σ_{i≥0} g(i) + Σ_{i<k} c_i g(i)` is exact on polynomials of
/// degree `< k` in the Euler–Maclaurin sense (Gregory's rule).
pub fn gregory_corrections(k: usize) -> Vec<f64> {
    // B_{m+1}/(m+1) for odd m, from B_2, B_4, ...
    const BERN: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let k = k.clamp(1, 16);
    let mut m = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for row in 0..k {
        for i in 0..k {
            m[(row, i)] = if row == 0 { 1.0 } else { (i as f64).powi(row as i32) };
        }
        rhs[row] = if row == 0 {
            -0.5
        } else if row % 2 == 1 {
            BERN[(row - 1) / 2] / (row as f64 + 1.0)
        } else {
            0.0
        };
    }
    let sol = m.lu().solve(&rhs).expect("Vandermonde system is regular");
    sol.iter().copied().collect()
}

/// Unit-step weights on `n` equispaced points with Gregory corrections of
/// order `k` at both ends.
pub fn gregory_weights(n: usize, k: usize) -> Result<Vec<f64>> {
    if n < 2 * k {
        return Err(Error::Length { needed: 2 * k, have: n });
    }
    let c = gregory_corrections(k);
    let mut w = vec![1.0; n];
    for (i, ci) in c.iter().enumerate() {
        w[i] += ci;
        w[n - 1 - i] += ci;
    }
    Ok(w)
}

/// Equispaced grid `t_i = i·step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// Grid on `[0, range]` with the given step; `range/step` must be an integer.
    pub fn new(step: f64, range: f64) -> Result<Self> {
        if !(step > 0.0) || !(range > 0.0) {
            return Err(Error::Domain(format!("grid step {step} and range {range} must be positive")));
        }
        let cells = (range / step).round();
        if (cells * step - range).abs() > 1e-9 * range {
            return Err(Error::Domain(format!("range {range} is not a multiple of step {step}")));
        }
        Ok(Self { step, len: cells as usize + 1 })
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn range(&self) -> f64 {
        (self.len - 1) as f64 * self.step
    }

    /// Index of `t` if it lies on the grid (to 1e-9 relative to the step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = (t / self.step).round();
        ((i * self.step - t).abs() <= 1e-9 * self.step && i >= 0.0).then_some(i as usize)
    }
}

impl Default for UniformGrid {
    fn default() -> Self {
        Self { step: 1.0 / 512.0, len: 64 * 512 + 1 }
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
