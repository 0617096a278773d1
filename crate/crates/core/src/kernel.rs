//! Kernel functions `a` on `(0,∞)` generating integral Hankel operators
//! `(H(a)f)(t) = ∫ a(t+s) f(s) ds`.
//!
//! Kernels are addressed by string labels of the form
//! `name[:key=value,key=value]`:
//!
//! | label | kernel |
//! |---|---|
//! | `zero` | `a = 0` |
//! | `exp[:rate=c]` | `e^{-ct}` |
//! | `texp[:rate=c]` | `t e^{-ct}` |
//! | `carleman` | `1/t` |
//! | `bump` | the fixed smooth bump on `[1/2, 2]` with `a(1) = 1` |
//! | `counterexample:N=n` | `bump(1 + n(t−1))` |
//! | `measure:atoms=(η,m)(η,m),density=const(c,lo,hi)` | Laplace transform of a positive measure |
//!
//! Every label accepts `gamma=γ`, which replaces `a(t)` by `a(γt)`.
//! Densities are `const(c,lo,hi)` (`c` on `(lo,hi)`) or `power(k,lo,hi)`
//! (`η^k` on `(lo,hi)`); `inf` is accepted as an upper limit.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{composite_gauss_legendre, integrate, Tolerance};

/// Per-evaluation tolerance for density integrals.
pub const DENSITY_TOL: f64 = 1e-10;

/// Qualitative decay of `a(t)` as `t → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayHint {
    Exponential { rate: f64 },
    Polynomial { order: f64 },
    CompactSupport,
}

/// Closed interval containing the support; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }
}

/// Density of the absolutely continuous part of a positive measure on `(0,∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// `c` on `(lo, hi)`.
    Const { c: f64, lo: f64, hi: f64 },
    /// `η^k` on `(lo, hi)`.
    Power { k: f64, lo: f64, hi: f64 },
}

impl Density {
    pub fn eval(&self, eta: f64) -> f64 {
        match *self {
            Density::Const { c, lo, hi } => {
                if eta > lo && eta < hi {
                    c
                } else {
                    0.0
                }
            }
            Density::Power { k, lo, hi } => {
                if eta > lo && eta < hi {
                    eta.powf(k)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Density::Const { lo, hi, .. } | Density::Power { lo, hi, .. } => (lo, hi),
        }
    }

    /// `∫_{(0,η)} density`, in closed form.
    pub fn mass_below(&self, eta: f64) -> f64 {
        let (lo, hi) = self.interval();
        let x = eta.min(hi);
        if x <= lo {
            return 0.0;
        }
        match *self {
            Density::Const { c, .. } => c * (x - lo),
            Density::Power { k, .. } => {
                if (k + 1.0).abs() < 1e-14 {
                    if lo > 0.0 {
                        (x / lo).ln()
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (x.powf(k + 1.0) - lo.powf(k + 1.0)) / (k + 1.0)
                }
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            Density::Const { c, lo, hi } => format!("const({},{},{})", fmt_num(c), fmt_num(lo), fmt_num(hi)),
            Density::Power { k, lo, hi } => format!("power({},{},{})", fmt_num(k), fmt_num(lo), fmt_num(hi)),
        }
    }
}

/// A positive measure `μ` on `(0,∞)`: finitely many atoms plus an optional density.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMeasureSpec {
    /// `(location η, mass)` pairs.
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Density>,
    /// `C` with `μ((0,η)) ≤ Cη` for all `η > 0`.
    pub growth_constant: f64,
}

impl PositiveMeasureSpec {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        for &(eta, m) in &atoms {
            if !(eta > 0.0 && eta.is_finite() && m > 0.0 && m.is_finite()) {
                return Err(Error::Construction(format!("atom ({eta}, {m}) must have positive finite location and mass")));
            }
        }
        if let Some(d) = density {
            let (lo, hi) = d.interval();
            let ok = match d {
                Density::Const { c, .. } => c > 0.0,
                Density::Power { k, .. } => k.is_finite(),
            };
            if !(ok && lo >= 0.0 && hi > lo) {
                return Err(Error::Construction(format!("invalid density {}", d.label())));
            }
        }
        if atoms.is_empty() && density.is_none() {
            return Err(Error::Construction("measure has neither atoms nor density".into()));
        }
        let mut spec = Self { atoms, density, growth_constant: 0.0 };
        spec.atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        spec.growth_constant = spec.compute_growth_constant()?;
        Ok(spec)
    }

    /// `μ((0,η))`.
    pub fn mass_below(&self, eta: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 < eta).map(|a| a.1).sum();
        atoms + self.density.map_or(0.0, |d| d.mass_below(eta))
    }

    fn compute_growth_constant(&self) -> Result<f64> {
        let mut c: f64 = 0.0;
        // Just above each atom the ratio μ((0,η))/η is locally maximal.
        for &(eta, _) in &self.atoms {
            let up = eta * (1.0 + 1e-12);
            c = c.max(self.mass_below(up) / eta);
        }
        let grid: Vec<f64> = (0..=320).map(|i| 10f64.powf(-16.0 + 0.1 * i as f64)).collect();
        let ratios: Vec<f64> = grid.iter().map(|&e| self.mass_below(e) / e).collect();
        if ratios.iter().any(|r| !r.is_finite()) {
            return Err(Error::Construction("measure of (0,η) is infinite".into()));
        }
        // A ratio that still grows at the bottom of the grid is unbounded.
        if ratios[0] > 0.0 && ratios[0] > ratios[10] * (1.0 + 1e-6) {
            return Err(Error::Construction("growth bound μ((0,η)) ≤ Cη fails as η → 0".into()));
        }
        let last = ratios.len() - 1;
        if ratios[last] > ratios[last - 10] * (1.0 + 1e-6) && ratios[last] > 0.0 {
            return Err(Error::Construction("growth bound μ((0,η)) ≤ Cη fails as η → ∞".into()));
        }
        Ok(ratios.into_iter().fold(c, f64::max))
    }

    fn laplace(&self, t: f64) -> Result<f64> {
        let mut s: f64 = self.atoms.iter().map(|&(eta, m)| m * (-t * eta).exp()).sum();
        if let Some(d) = self.density {
            let (lo, hi) = d.interval();
            let r = integrate(|eta: f64| d.eval(eta) * (-t * eta).exp(), lo, hi, Tolerance::new(DENSITY_TOL, 1e-13))?;
            s += r.value;
        }
        Ok(s)
    }

    /// `∫ dμ(η)/(η − 2πiξ)`; the density part by quadrature in `η`.
    fn laplace_fourier(&self, xi: Complex64) -> Result<Complex64> {
        let tpi = Complex64::new(0.0, 2.0 * PI) * xi;
        let mut s: Complex64 = self.atoms.iter().map(|&(eta, m)| m / (eta - tpi)).sum();
        if let Some(d) = self.density {
            let (lo, hi) = d.interval();
            let r = integrate(|eta: f64| d.eval(eta) / (eta - tpi), lo, hi, Tolerance::new(1e-12, 1e-13))?;
            s += r.value;
        }
        Ok(s)
    }

    fn total_mass(&self) -> Option<f64> {
        let m: f64 = self.atoms.iter().map(|a| a.1).sum();
        match self.density {
            None => Some(m),
            Some(d) => {
                let v = d.mass_below(f64::INFINITY);
                v.is_finite().then_some(m + v)
            }
        }
    }

    /// Whether `H(a)` is compact: `μ((0,η)) = o(η)` at both ends.
    pub fn is_compact(&self) -> bool {
        match self.density {
            None => true,
            Some(d) => {
                let (lo, hi) = d.interval();
                let at_zero = lo > 0.0 || matches!(d, Density::Power { k, .. } if k > 0.0);
                hi.is_finite() && at_zero
            }
        }
    }

    /// Atoms approximating the measure: the atoms themselves plus a
    /// Gauss–Legendre discretisation of the density, geometrically graded
    /// towards `η = 0`.
    pub fn discretize(&self, panels: usize, order: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = self.atoms.clone();
        if let Some(d) = self.density {
            let (lo, hi) = d.interval();
            if !hi.is_finite() {
                return Err(Error::Range("cannot discretize a density with unbounded support".into()));
            }
            let mut edges = Vec::new();
            if lo > 0.0 {
                let n = panels.max(1);
                edges.extend((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
            } else {
                edges.push(0.0);
                let levels = panels.max(2);
                for i in (0..levels).rev() {
                    edges.push(hi * 0.5f64.powi(i as i32));
                }
            }
            let (x, w) = composite_gauss_legendre(&edges, order);
            for (eta, wt) in x.into_iter().zip(w) {
                let m = wt * d.eval(eta);
                if m > 0.0 {
                    out.push((eta, m));
                }
            }
        }
        Ok(out)
    }

    fn label(&self) -> String {
        let mut parts = Vec::new();
        if !self.atoms.is_empty() {
            let a: String = self.atoms.iter().map(|(e, m)| format!("({},{})", fmt_num(*e), fmt_num(*m))).collect();
            parts.push(format!("atoms={a}"));
        }
        if let Some(d) = self.density {
            parts.push(format!("density={}", d.label()));
        }
        parts.join(",")
    }
}

/// Eigenvalues of `M^{1/2} G M^{1/2}`, `G_ik = 1/(η_i+η_k)`: the spectrum of
/// `H(a)` for `a(t) = Σ m_i e^{-η_i t}`, sorted descending.
pub fn atoms_spectrum(atoms: &[(f64, f64)]) -> Vec<f64> {
    let n = atoms.len();
    let m = DMatrix::from_fn(n, n, |i, k| (atoms[i].1 * atoms[k].1).sqrt() / (atoms[i].0 + atoms[k].0));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Zero,
    Exp { rate: f64 },
    TExp { rate: f64 },
    Carleman,
    Bump,
    Counterexample { n: u32 },
    Measure(Arc<PositiveMeasureSpec>),
}

/// Smooth bump on `(0,1)` normalised to 1 at `x = 1/3`.
fn bump_unit(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (4.5 - 1.0 / (x * (1.0 - x))).exp()
    }
}

/// The catalog bump: `exp(9/2 − 1/(x(1−x)))`, `x = (t − 1/2)/(3/2)`;
/// support `[1/2, 2]`, value 1 at `t = 1`, maximum `e^{1/2}` at `t = 5/4`.
pub fn bump_base(t: f64) -> f64 {
    bump_unit((t - 0.5) / 1.5)
}

/// An evaluable kernel `a(t) = base(γt)` with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    shape: Shape,
    gamma: f64,
}

impl KernelFunction {
    pub fn zero() -> Self {
        Self { shape: Shape::Zero, gamma: 1.0 }
    }

    pub fn exp(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self { shape: Shape::Exp { rate }, gamma: 1.0 })
    }

    pub fn texp(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self { shape: Shape::TExp { rate }, gamma: 1.0 })
    }

    pub fn carleman() -> Self {
        Self { shape: Shape::Carleman, gamma: 1.0 }
    }

    pub fn bump() -> Self {
        Self { shape: Shape::Bump, gamma: 1.0 }
    }

    pub fn label(&self) -> String {
        let (name, mut opts) = match &self.shape {
            Shape::Zero => ("zero", vec![]),
            Shape::Exp { rate } => ("exp", rate_opt(*rate)),
            Shape::TExp { rate } => ("texp", rate_opt(*rate)),
            Shape::Carleman => ("carleman", vec![]),
            Shape::Bump => ("bump", vec![]),
            Shape::Counterexample { n } => ("counterexample", vec![format!("N={n}")]),
            Shape::Measure(m) => ("measure", vec![m.label()]),
        };
        if self.gamma != 1.0 {
            opts.push(format!("gamma={}", fmt_num(self.gamma)));
        }
        if opts.is_empty() {
            name.to_string()
        } else {
            format!("{name}:{}", opts.join(","))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn measure(&self) -> Option<&PositiveMeasureSpec> {
        match &self.shape {
            Shape::Measure(m) => Some(m),
            _ => None,
        }
    }

    fn base_support(&self) -> Support {
        match &self.shape {
            Shape::Bump => Support { lo: 0.5, hi: 2.0 },
            Shape::Counterexample { n } => {
                let n = *n as f64;
                Support { lo: 1.0 - 0.5 / n, hi: 1.0 + 1.0 / n }
            }
            _ => Support { lo: 0.0, hi: f64::INFINITY },
        }
    }

    pub fn support(&self) -> Support {
        let s = self.base_support();
        Support { lo: s.lo / self.gamma, hi: s.hi / self.gamma }
    }

    fn base_value(&self, s: f64) -> Result<f64> {
        Ok(match &self.shape {
            Shape::Zero => 0.0,
            Shape::Exp { rate } => (-rate * s).exp(),
            Shape::TExp { rate } => s * (-rate * s).exp(),
            Shape::Carleman => 1.0 / s,
            Shape::Bump => bump_base(s),
            Shape::Counterexample { n } => bump_base(1.0 + *n as f64 * (s - 1.0)),
            Shape::Measure(m) => m.laplace(s)?,
        })
    }

    /// `a(t)`; errors for `t ≤ 0` or `t` outside the support.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("kernel {} evaluated at t = {t} ≤ 0", self.label())));
        }
        if !self.support().contains(t) {
            return Err(Error::Domain(format!("t = {t} outside the support of {}", self.label())));
        }
        self.base_value(self.gamma * t)
    }

    /// `a(t)` extended by zero outside the support and to `t ≤ 0`.
    /// Density integrals that fail to converge yield NaN.
    pub fn value(&self, t: f64) -> f64 {
        if !(t > 0.0) || !self.support().contains(t) {
            return 0.0;
        }
        self.base_value(self.gamma * t).unwrap_or(f64::NAN)
    }

    /// `a(0+)` when finite.
    pub fn value_at_zero(&self) -> Option<f64> {
        match &self.shape {
            Shape::Zero | Shape::TExp { .. } | Shape::Bump | Shape::Counterexample { .. } => Some(0.0),
            Shape::Exp { .. } => Some(1.0),
            Shape::Carleman => None,
            Shape::Measure(m) => m.total_mass(),
        }
    }

    pub fn decay_hint(&self) -> DecayHint {
        let g = self.gamma;
        match &self.shape {
            Shape::Zero | Shape::Bump | Shape::Counterexample { .. } => DecayHint::CompactSupport,
            Shape::Exp { rate } | Shape::TExp { rate } => DecayHint::Exponential { rate: rate * g },
            Shape::Carleman => DecayHint::Polynomial { order: 1.0 },
            Shape::Measure(m) => {
                let atom_rate = m.atoms.first().map(|a| a.0);
                match m.density {
                    None => DecayHint::Exponential { rate: atom_rate.unwrap_or(1.0) * g },
                    Some(d) => {
                        let (lo, _) = d.interval();
                        if lo > 0.0 {
                            DecayHint::Exponential { rate: atom_rate.map_or(lo, |r| r.min(lo)) * g }
                        } else {
                            let k = match d {
                                Density::Const { .. } => 0.0,
                                Density::Power { k, .. } => k,
                            };
                            DecayHint::Polynomial { order: k + 1.0 }
                        }
                    }
                }
            }
        }
    }

    /// True iff `H(a) ≥ 0` is known.
    pub fn positive_flag(&self) -> bool {
        matches!(self.shape, Shape::Exp { .. } | Shape::Carleman | Shape::Measure(_))
    }

    /// Whether `H(a)` is compact (Carleman-type kernels are bounded only).
    pub fn is_compact(&self) -> bool {
        match &self.shape {
            Shape::Carleman => false,
            Shape::Measure(m) => m.is_compact(),
            _ => true,
        }
    }

    /// Length scale on which `a` varies, used to size quadrature panels.
    pub fn feature_scale(&self) -> Option<f64> {
        let s = match &self.shape {
            Shape::Zero | Shape::Carleman => return None,
            Shape::Exp { rate } | Shape::TExp { rate } => 1.0 / rate,
            Shape::Bump => 0.2,
            Shape::Counterexample { n } => 0.2 / *n as f64,
            Shape::Measure(m) => {
                let top = m.atoms.iter().map(|a| a.0).fold(0.0, f64::max);
                let top = m.density.map_or(top, |d| top.max(d.interval().1));
                if top.is_finite() && top > 0.0 {
                    1.0 / top
                } else {
                    return None;
                }
            }
        };
        Some(s / self.gamma)
    }

    fn base_fourier(&self, xi: Complex64) -> Option<Complex64> {
        let z = Complex64::new(0.0, 2.0 * PI) * xi;
        match &self.shape {
            Shape::Zero => Some(Complex64::new(0.0, 0.0)),
            Shape::Exp { rate } => Some(1.0 / (rate - z)),
            Shape::TExp { rate } => Some(1.0 / ((rate - z) * (rate - z))),
            Shape::Measure(m) if m.density.is_none() => m.laplace_fourier(xi).ok(),
            _ => None,
        }
    }

    /// Closed-form `ǎ(ξ) = ∫ a(t) e^{2πiξt} dt`, when the catalog has one.
    pub fn closed_form_fourier(&self, xi: Complex64) -> Option<Complex64> {
        self.base_fourier(xi / self.gamma).map(|v| v / self.gamma)
    }

    /// `ǎ(ξ)` for a measure kernel through `∫ dμ(η)/(η − 2πiξ)`, an
    /// independent route to the Fourier transform.
    pub fn laplace_side_fourier(&self, xi: Complex64) -> Option<Result<Complex64>> {
        match &self.shape {
            Shape::Measure(m) => Some(m.laplace_fourier(xi / self.gamma).map(|v| v / self.gamma)),
            _ => None,
        }
    }

    /// `ǎ(ξ)` by adaptive quadrature over the support (`Im ξ ≥ 0`).
    pub fn fourier_numeric(&self, xi: Complex64) -> Result<Complex64> {
        if xi.im < 0.0 {
            return Err(Error::Domain("Fourier transform needs Im ξ ≥ 0".into()));
        }
        if let DecayHint::Polynomial { order } = self.decay_hint() {
            if order <= 1.0 && xi.im == 0.0 {
                return Err(Error::Decay(format!("{} is not integrable on (0,∞)", self.label())));
            }
        }
        let sup = self.support();
        let f = |t: f64| self.value(t) * (Complex64::new(0.0, 2.0 * PI) * xi * t).exp();
        let tol = Tolerance::new(1e-13, 1e-12);
        let chunk = 1.0 / (1.0 + xi.re.abs());
        let end = match self.decay_hint() {
            DecayHint::CompactSupport => sup.hi,
            DecayHint::Exponential { rate } => sup.lo + 45.0 / rate,
            DecayHint::Polynomial { .. } => sup.lo + 64.0,
        };
        let mut total = Complex64::new(0.0, 0.0);
        let pieces = (((end - sup.lo) / (8.0 * chunk)).ceil() as usize).clamp(1, 4000);
        let width = (end - sup.lo) / pieces as f64;
        for i in 0..pieces {
            let a = sup.lo + i as f64 * width;
            total += integrate(f, a, a + width, tol)?.value;
        }
        if sup.hi > end {
            total += integrate(f, end, f64::INFINITY, tol)?.value;
        }
        Ok(total)
    }

    /// `ǎ(ξ)`, closed form when available, otherwise by quadrature.
    pub fn fourier(&self, xi: Complex64) -> Result<Complex64> {
        match self.closed_form_fourier(xi) {
            Some(v) => Ok(v),
            None => self.fourier_numeric(xi),
        }
    }

    /// Exact nonzero singular values of `H(a)` where known in closed form.
    pub fn closed_form_spectrum(&self) -> Option<Vec<f64>> {
        let v = match &self.shape {
            Shape::Zero => vec![],
            Shape::Exp { rate } => vec![0.5 / rate],
            Shape::TExp { rate } => {
                let r = 0.125f64.sqrt();
                vec![(0.25 + r) / (rate * rate), (r - 0.25) / (rate * rate)]
            }
            Shape::Measure(m) if m.density.is_none() => atoms_spectrum(&m.atoms),
            _ => return None,
        };
        Some(v.into_iter().map(|s| s / self.gamma).collect())
    }

    /// Exact operator norm for bounded non-compact kernels.
    pub fn closed_form_operator_norm(&self) -> Option<f64> {
        match &self.shape {
            Shape::Carleman => Some(PI / self.gamma),
            _ => self.closed_form_spectrum().map(|s| s.first().copied().unwrap_or(0.0)),
        }
    }

    /// `‖H(a)‖_{S₂} = (∫ t|a(t)|² dt)^{1/2}` by adaptive quadrature.
    pub fn hilbert_schmidt_norm(&self) -> Result<f64> {
        let s = self.support();
        let f = |t: f64| t * self.value(t).powi(2);
        let tol = Tolerance::new(1e-16, 1e-13);
        let v = if s.is_bounded() {
            integrate(f, s.lo, s.hi, tol)?.value
        } else {
            let mid = s.lo.max(0.0) + 1.0;
            integrate(f, s.lo, mid, tol)?.value + integrate(f, mid, f64::INFINITY, tol)?.value
        };
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("∫ t|a|² diverges for {}", self.label())));
        }
        Ok(v.sqrt())
    }

    /// Spectrum of `H(a)` through the Laplace representation: the measure is
    /// discretised into atoms and [`atoms_spectrum`] applied.  Exact for
    /// atomic measures, a Nyström approximation for densities.
    pub fn laplace_spectrum(&self, panels: usize, order: usize) -> Option<Result<Vec<f64>>> {
        let atoms = match &self.shape {
            Shape::Exp { rate } => Ok(vec![(*rate, 1.0)]),
            Shape::Measure(m) => m.discretize(panels, order),
            _ => return None,
        };
        Some(atoms.map(|a| {
            let scaled: Vec<(f64, f64)> = a.into_iter().map(|(e, m)| (e * self.gamma, m)).collect();
            atoms_spectrum(&scaled)
        }))
    }

    /// Parse a catalog label.
    pub fn parse(label: &str) -> Result<Self> {
        let (name, opts) = split_label(label)?;
        let mut gamma = 1.0;
        let mut rate = 1.0;
        let mut n = None;
        let mut atoms = Vec::new();
        let mut density = None;
        for (k, v) in &opts {
            match k.as_str() {
                "gamma" => gamma = parse_num(v)?,
                "rate" => rate = parse_num(v)?,
                "N" | "n" => {
                    n = Some(v.parse::<u32>().map_err(|_| Error::Parse(format!("N must be a positive integer, got {v}")))?)
                }
                "atoms" => atoms = parse_atoms(v)?,
                "density" => density = Some(parse_density(v)?),
                _ => return Err(Error::Parse(format!("unknown option {k} in {label}"))),
            }
        }
        let k = match name.as_str() {
            "zero" => Self::zero(),
            "exp" => Self::exp(rate)?,
            "texp" => Self::texp(rate)?,
            "carleman" => Self::carleman(),
            "bump" => Self::bump(),
            "counterexample" => counterexample_kernel(n.ok_or_else(|| Error::Parse("counterexample needs N".into()))?)?,
            "measure" => kernel_from_measure(PositiveMeasureSpec::new(atoms, density)?)?,
            other => return Err(Error::Parse(format!("unknown kernel {other}"))),
        };
        scale_kernel(&k, gamma)
    }
}

impl fmt::Display for KernelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn rate_opt(rate: f64) -> Vec<String> {
    if rate == 1.0 {
        vec![]
    } else {
        vec![format!("rate={}", fmt_num(rate))]
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

pub(crate) fn parse_num(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (parse_num(a)?, parse_num(b)?);
        return Ok(a / b);
    }
    s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s}")))
}

/// Split `name:k=v,k=v` at top-level commas (parentheses nest).
pub(crate) fn split_label(label: &str) -> Result<(String, Vec<(String, String)>)> {
    let label = label.trim();
    let (name, rest) = match label.split_once(':') {
        Some((n, r)) => (n, r),
        None => (label, ""),
    };
    let mut opts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut flush = |cur: &mut String| -> Result<()> {
        let item = cur.trim();
        if !item.is_empty() {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {item}")))?;
            opts.push((k.trim().to_string(), v.trim().to_string()));
        }
        cur.clear();
        Ok(())
    };
    for ch in rest.chars() {
        match ch {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            _ => {}
        }
        if (ch == ',' || ch == ';') && depth == 0 {
            flush(&mut cur)?;
        } else {
            cur.push(ch);
        }
    }
    flush(&mut cur)?;
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in {label}")));
    }
    Ok((name.trim().to_string(), opts))
}

fn parse_tuple(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_num).collect()
}

fn parse_atoms(v: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for chunk in v.split(')') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let body = chunk.strip_prefix('(').ok_or_else(|| Error::Parse(format!("atom must look like (η,m): {chunk}")))?;
        let t = parse_tuple(body)?;
        if t.len() != 2 {
            return Err(Error::Parse(format!("atom must have two entries: {chunk})")));
        }
        out.push((t[0], t[1]));
    }
    Ok(out)
}

fn parse_density(v: &str) -> Result<Density> {
    let (name, body) = v.split_once('(').ok_or_else(|| Error::Parse(format!("bad density {v}")))?;
    let body = body.strip_suffix(')').ok_or_else(|| Error::Parse(format!("bad density {v}")))?;
    let t = parse_tuple(body)?;
    if t.len() != 3 {
        return Err(Error::Parse(format!("density {v} needs three parameters")));
    }
    match name.trim() {
        "const" => Ok(Density::Const { c: t[0], lo: t[1], hi: t[2] }),
        "power" => Ok(Density::Power { k: t[0], lo: t[1], hi: t[2] }),
        other => Err(Error::Parse(format!("unknown density {other}"))),
    }
}

/// `a(t) = Σ m e^{-tη} + ∫ e^{-tη} density(η) dη`, flagged positive.
pub fn kernel_from_measure(mu: PositiveMeasureSpec) -> Result<KernelFunction> {
    let k = KernelFunction { shape: Shape::Measure(Arc::new(mu)), gamma: 1.0 };
    for t in [1e-3, 1.0, 1e3] {
        match k.base_value(t) {
            Ok(v) if v.is_finite() => {}
            Ok(_) | Err(_) => {
                return Err(Error::Construction(format!("Laplace transform of the measure diverges at t = {t}")))
            }
        }
    }
    Ok(k)
}

/// `a_γ(t) = a(γt)`.
pub fn scale_kernel(k: &KernelFunction, gamma: f64) -> Result<KernelFunction> {
    positive("gamma", gamma)?;
    let mut out = k.clone();
    out.gamma = k.gamma * gamma;
    if (out.gamma - 1.0).abs() < 1e-15 {
        out.gamma = 1.0;
    }
    Ok(out)
}

/// `a^{(N)}(t) = bump(1 + N(t − 1))`, supported in `[1 − 1/(2N), 1 + 1/N]`.
pub fn counterexample_kernel(n: u32) -> Result<KernelFunction> {
    if n == 0 {
        return Err(Error::Domain("counterexample needs N ≥ 1".into()));
    }
    if n == 1 {
        return Ok(KernelFunction::bump());
    }
    Ok(KernelFunction { shape: Shape::Counterexample { n }, gamma: 1.0 })
}

/// `a(t)` for a kernel; the plain-function form of [`KernelFunction::eval`].
pub fn eval_kernel(k: &KernelFunction, t: f64) -> Result<f64> {
    k.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        let e = KernelFunction::parse("exp").unwrap();
        assert_abs_diff_eq!(e.eval(1.0).unwrap(), (-1f64).exp(), epsilon = 1e-16);
        assert_eq!(KernelFunction::carleman().eval(2.0).unwrap(), 0.5);
        assert_eq!(KernelFunction::bump().eval(1.0).unwrap(), 1.0);
        assert!(matches!(e.eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(e.eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(KernelFunction::bump().eval(3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hilbert_schmidt_norms() {
        // ∫ t e^{-2t} = 1/4, ∫ t³ e^{-2t} = 3/8.
        assert_abs_diff_eq!(KernelFunction::exp(1.0).unwrap().hilbert_schmidt_norm().unwrap(), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(KernelFunction::texp(1.0).unwrap().hilbert_schmidt_norm().unwrap(), 0.375f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(KernelFunction::bump().hilbert_schmidt_norm().unwrap(), 1.2138967956031628, epsilon = 1e-12);
        assert!(KernelFunction::carleman().hilbert_schmidt_norm().is_err());
    }

    #[test]
    fn bump_shape() {
        let b = KernelFunction::bump();
        assert_eq!(b.support(), Support { lo: 0.5, hi: 2.0 });
        assert_eq!(b.value(0.5), 0.0);
        assert_eq!(b.value(2.0), 0.0);
        assert_abs_diff_eq!(b.value(1.25), 0.5f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn measure_examples() {
        let k = kernel_from_measure(PositiveMeasureSpec::new(vec![(1.0, 1.0)], None).unwrap()).unwrap();
        for t in [0.1, 1.0, 7.0] {
            assert_abs_diff_eq!(k.eval(t).unwrap(), (-t).exp(), epsilon = 1e-15);
        }
        let k = KernelFunction::parse("measure:atoms=(1,1)(2,1)").unwrap();
        assert_abs_diff_eq!(k.eval(1.0).unwrap(), (-1f64).exp() + (-2f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.eval(1.0).unwrap(), 0.503215, epsilon = 1e-6);
        let c = KernelFunction::parse("measure:density=const(1,0,inf)").unwrap();
        for t in [0.01, 0.5, 2.0, 30.0] {
            assert!((c.eval(t).unwrap() - 1.0 / t).abs() < 1e-10 * (1.0 + 1.0 / t));
        }
        assert!(c.positive_flag());
        assert_eq!(c.measure().unwrap().growth_constant, 1.0);
    }

    #[test]
    fn measure_errors() {
        assert!(PositiveMeasureSpec::new(vec![(-1.0, 1.0)], None).is_err());
        assert!(PositiveMeasureSpec::new(vec![(1.0, 0.0)], None).is_err());
        // μ((0,η)) = 2√η is not O(η).
        assert!(matches!(
            PositiveMeasureSpec::new(vec![], Some(Density::Power { k: -0.5, lo: 0.0, hi: 1.0 })),
            Err(Error::Construction(_))
        ));
        // Infinite mass near zero.
        assert!(matches!(
            PositiveMeasureSpec::new(vec![], Some(Density::Power { k: -1.5, lo: 0.0, hi: 1.0 })),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn density_closed_forms() {
        // ∫₀¹ η e^{-tη} dη = (1 − e^{-t}(1+t))/t².
        let k = KernelFunction::parse("measure:density=power(1,0,1)").unwrap();
        for t in [0.3, 1.0, 4.0, 50.0] {
            let exact = (1.0 - (-t as f64).exp() * (1.0 + t)) / (t * t);
            assert_abs_diff_eq!(k.eval(t).unwrap(), exact, epsilon = 1e-11);
        }
        assert!(k.is_compact());
        assert!(!KernelFunction::parse("measure:density=const(1,0,1)").unwrap().is_compact());
        assert_eq!(k.decay_hint(), DecayHint::Polynomial { order: 2.0 });
    }

    #[test]
    fn scaling() {
        let e2 = scale_kernel(&KernelFunction::exp(1.0).unwrap(), 2.0).unwrap();
        assert_abs_diff_eq!(e2.eval(1.0).unwrap(), (-2f64).exp(), epsilon = 1e-16);
        let c = scale_kernel(&KernelFunction::carleman(), 3.0).unwrap();
        assert_abs_diff_eq!(c.eval(2.0).unwrap(), 1.0 / 6.0, epsilon = 1e-16);
        let b = KernelFunction::bump();
        assert_eq!(scale_kernel(&b, 1.0).unwrap(), b);
        assert!(scale_kernel(&b, 0.0).is_err());
        assert!(scale_kernel(&b, -1.0).is_err());
        assert_eq!(scale_kernel(&b, 0.5).unwrap().support(), Support { lo: 1.0, hi: 4.0 });
        assert_eq!(scale_kernel(&e2, 0.5).unwrap(), KernelFunction::exp(1.0).unwrap());
    }

    #[test]
    fn counterexample_family() {
        assert_eq!(counterexample_kernel(1).unwrap(), KernelFunction::bump());
        assert!(counterexample_kernel(0).is_err());
        for n in [1u32, 2, 4, 8, 64] {
            let k = counterexample_kernel(n).unwrap();
            assert_eq!(k.eval(1.0).unwrap(), 1.0);
            for j in 1..5 {
                assert_eq!(k.value(1.0 + j as f64), 0.0);
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        for l in [
            "exp",
            "exp:rate=2",
            "texp",
            "carleman",
            "bump",
            "counterexample:N=8",
            "measure:atoms=(1,1)(2,1)",
            "measure:density=const(1,0,inf)",
            "measure:atoms=(0.5,2),density=power(1,0,1)",
            "exp:gamma=0.5",
        ] {
            let k = KernelFunction::parse(l).unwrap();
            assert_eq!(KernelFunction::parse(&k.label()).unwrap(), k, "{l}");
        }
        assert_eq!(KernelFunction::parse("exp:gamma=0.5").unwrap().label(), "exp:gamma=0.5");
        assert!(KernelFunction::parse("nope").is_err());
        assert!(KernelFunction::parse("exp:rate").is_err());
        assert!(KernelFunction::parse("counterexample").is_err());
    }

    #[test]
    fn closed_spectra() {
        let t = KernelFunction::texp(1.0).unwrap().closed_form_spectrum().unwrap();
        assert_abs_diff_eq!(t[0], 0.603_553_390_593_273_7, epsilon = 1e-15);
        assert_abs_diff_eq!(t[1], 0.103_553_390_593_273_8, epsilon = 1e-15);
        let a = KernelFunction::parse("measure:atoms=(1,1)").unwrap().closed_form_spectrum().unwrap();
        assert_abs_diff_eq!(a[0], 0.5, epsilon = 1e-15);
        let s = KernelFunction::parse("exp:gamma=2").unwrap().closed_form_spectrum().unwrap();
        assert_abs_diff_eq!(s[0], 0.25, epsilon = 1e-15);
    }
}
