//! Averaging weights `φ` with explicit factorizations, and the measures `ν`
//! generating convolution families `φ_j = T_ν^j φ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::periodize::{periodization_sup, LineDecay, LineFunction, SupEstimate};
use crate::quad::{integrate, Tolerance};

pub type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type SymbolFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn i2pi(xi: Complex64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI) * xi
}

/// `|f̌(ξ)| ≤ c·|ξ|^{-order}` for `|ξ| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierDecay {
    pub c: f64,
    pub order: f64,
}

/// One factor `φᵢ` of a weight: a function on `[0,∞)` and its Fourier transform.
#[derive(Clone)]
pub struct Factor {
    pub label: String,
    pub eval: ComplexFn,
    pub fourier: SymbolFn,
    pub fourier_decay: FourierDecay,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Factor").field("label", &self.label).finish_non_exhaustive()
    }
}

impl Factor {
    /// `|ψ̌|²` as a function on the line with its decay bound.
    pub fn abs_sq_symbol(&self) -> LineFunction {
        let f = self.fourier.clone();
        let d = self.fourier_decay;
        LineFunction::real(
            move |x| f(Complex64::new(x, 0.0)).norm_sqr(),
            LineDecay::Power { c: d.c * d.c, order: 2.0 * d.order },
        )
    }

    fn exp_rate(label: &str, rate: f64, scale: Complex64) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(move |t| if t >= 0.0 { scale * (-rate * t).exp() } else { Complex64::default() }),
            fourier: Arc::new(move |xi| scale / (rate - i2pi(xi))),
            fourier_decay: FourierDecay { c: scale.norm() / (2.0 * PI), order: 1.0 },
        }
    }

    /// `e^{-t}`.
    pub fn exp() -> Self {
        Self::exp_rate("e^{-t}", 1.0, Complex64::new(1.0, 0.0))
    }

    /// `ψ(t) = −2i√π e^{-2πt}`, the first Laguerre function.
    pub fn laguerre_psi() -> Self {
        Self::exp_rate("laguerre-psi", 2.0 * PI, Complex64::new(0.0, -2.0 * PI.sqrt()))
    }

    /// `conj ψ = 2i√π e^{-2πt}`.
    pub fn laguerre_psi_conj() -> Self {
        Self::exp_rate("laguerre-psi-conj", 2.0 * PI, Complex64::new(0.0, 2.0 * PI.sqrt()))
    }
}

/// Averaging weight `φ` supported in `[0,∞)`.
#[derive(Clone)]
pub struct WeightFunction {
    pub label: String,
    pub eval: ComplexFn,
    pub fourier: SymbolFn,
    /// `|φ̌(ξ)| ≤ c/(1 + |ξ|^order)`.
    pub fourier_decay: FourierDecay,
    /// `(φ₁, φ₂)` with `φ = φ₁ ∗ conj(φ₂)`.
    pub factorization: Option<(Factor, Factor)>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction").field("label", &self.label).finish_non_exhaustive()
    }
}

/// Residuals of the factorization invariants on a test grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    /// `max |φ̌(ξ) − φ̌₁(ξ)·conj(φ̌₂(−ξ))|`.
    pub symbol: f64,
    /// `max ||φ̌₁(ξ)| − |φ̌₂(−ξ)||`.
    pub modulus: f64,
    /// `max |(φ₁ ∗ conj φ₂)(t) − φ(t)|`.
    pub convolution: f64,
}

impl WeightFunction {
    pub fn catalog_labels() -> &'static [&'static str] {
        &["texp", "laguerre", "exp"]
    }

    /// `te^{-t}` (alias `texp`), `laguerre` (`−4πt e^{-2πt}`) or `exp` (`e^{-t}`).
    pub fn parse(label: &str) -> Result<Self> {
        match label.trim() {
            "texp" | "te^{-t}" => Ok(Self::texp()),
            "laguerre" => Ok(Self::laguerre()),
            "exp" | "e^{-t}" => Ok(Self::exp()),
            other => Err(Error::Parse(format!("unknown weight {other}"))),
        }
    }

    /// `φ(t) = te^{-t} = (e^{-·} ∗ e^{-·})(t)`.
    pub fn texp() -> Self {
        Self {
            label: "texp".into(),
            eval: Arc::new(|t| Complex64::new(if t >= 0.0 { t * (-t).exp() } else { 0.0 }, 0.0)),
            fourier: Arc::new(|xi| {
                let d = 1.0 - i2pi(xi);
                1.0 / (d * d)
            }),
            fourier_decay: FourierDecay { c: 1.0, order: 2.0 },
            factorization: Some((Factor::exp(), Factor::exp())),
        }
    }

    /// `φ(t) = −4πt e^{-2πt} = (ψ ∗ ψ)(t) = (ψ ∗ conj(conj ψ))(t)`.
    pub fn laguerre() -> Self {
        Self {
            label: "laguerre".into(),
            eval: Arc::new(|t| Complex64::new(if t >= 0.0 { -4.0 * PI * t * (-2.0 * PI * t).exp() } else { 0.0 }, 0.0)),
            fourier: Arc::new(|xi| {
                let d = Complex64::new(1.0, 0.0) - Complex64::i() * xi;
                -1.0 / (PI * d * d)
            }),
            fourier_decay: FourierDecay { c: 1.0 / PI, order: 2.0 },
            factorization: Some((Factor::laguerre_psi(), Factor::laguerre_psi_conj())),
        }
    }

    /// `φ(t) = e^{-t}`: `|φ̌|` decays only like `1/|ξ|`, so it fails the
    /// convolution-family hypothesis and its periodization diverges.
    pub fn exp() -> Self {
        let f = Factor::exp();
        Self { label: "exp".into(), eval: f.eval, fourier: f.fourier, fourier_decay: FourierDecay { c: 1.1, order: 1.0 }, factorization: None }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    /// `|φ̌|` as a line function with its decay bound.
    pub fn abs_symbol(&self) -> LineFunction {
        let f = self.fourier.clone();
        let d = self.fourier_decay;
        LineFunction::real(move |x| f(Complex64::new(x, 0.0)).norm(), LineDecay::Power { c: d.c, order: d.order })
    }

    /// `A = ‖𝒫(|φ̌|)‖_{L^∞(𝕋)}`.
    pub fn constant_a(&self) -> Result<SupEstimate> {
        periodization_sup(&self.abs_symbol())
    }

    pub fn check_factorization(&self) -> Result<FactorizationReport> {
        let (f1, f2) = self
            .factorization
            .as_ref()
            .ok_or_else(|| Error::Hypothesis(format!("weight {} carries no factorization", self.label)))?;
        let (mut symbol, mut modulus): (f64, f64) = (0.0, 0.0);
        for k in -200..=200 {
            let x = k as f64 / 20.0;
            let xi = Complex64::new(x, 0.0);
            let a = (f1.fourier)(xi);
            let b = (f2.fourier)(-xi);
            symbol = symbol.max(((self.fourier)(xi) - a * b.conj()).norm());
            modulus = modulus.max((a.norm() - b.norm()).abs());
        }
        let mut convolution: f64 = 0.0;
        for k in 1..=40 {
            let t = k as f64 / 4.0;
            let r = integrate(|s| (f1.eval)(s) * (f2.eval)(t - s).conj(), 0.0, t, Tolerance::absolute(1e-13))?;
            convolution = convolution.max((r.value - self.eval(t)).norm());
        }
        Ok(FactorizationReport { symbol, modulus, convolution })
    }
}

/// Measure `ν = c·δ_a + density(t) dt` on `[0,∞)`.
#[derive(Clone)]
pub struct ConvolutionMeasure {
    pub label: String,
    /// `(location a ≥ 0, weight c)`.
    pub atom: Option<(f64, f64)>,
    pub density: Option<RealFn>,
    pub fourier: SymbolFn,
    pub total_variation: f64,
    pub positivity_flag: bool,
}

impl fmt::Debug for ConvolutionMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvolutionMeasure")
            .field("label", &self.label)
            .field("atom", &self.atom)
            .field("total_variation", &self.total_variation)
            .field("positivity_flag", &self.positivity_flag)
            .finish_non_exhaustive()
    }
}

impl ConvolutionMeasure {
    pub fn catalog_labels() -> &'static [&'static str] {
        &["unit-shift", "laguerre", "exp-density"]
    }

    pub fn parse(label: &str) -> Result<Self> {
        match label.trim() {
            "unit-shift" | "shift" => Ok(Self::unit_shift()),
            "laguerre" => Ok(Self::laguerre()),
            "exp-density" => Ok(Self::exp_density()),
            other => Err(Error::Parse(format!("unknown measure {other}"))),
        }
    }

    /// `δ₁`: `T_ν` is translation by one.
    pub fn unit_shift() -> Self {
        Self {
            label: "unit-shift".into(),
            atom: Some((1.0, 1.0)),
            density: None,
            fourier: Arc::new(|xi| i2pi(xi).exp()),
            total_variation: 1.0,
            positivity_flag: true,
        }
    }

    /// `ν = δ₀ − 4πe^{-2πt}dt`, `ν̌(ξ) = (ξ − i)/(ξ + i)`.  Signed.
    pub fn laguerre() -> Self {
        Self {
            label: "laguerre".into(),
            atom: Some((0.0, 1.0)),
            density: Some(Arc::new(|t| if t >= 0.0 { -4.0 * PI * (-2.0 * PI * t).exp() } else { 0.0 })),
            fourier: Arc::new(|xi| (xi - Complex64::i()) / (xi + Complex64::i())),
            total_variation: 3.0,
            positivity_flag: false,
        }
    }

    /// `ν = 2πe^{-2πt}dt`, a probability density.
    pub fn exp_density() -> Self {
        Self {
            label: "exp-density".into(),
            atom: None,
            density: Some(Arc::new(|t| if t >= 0.0 { 2.0 * PI * (-2.0 * PI * t).exp() } else { 0.0 })),
            fourier: Arc::new(|xi| 1.0 / (Complex64::new(1.0, 0.0) - Complex64::i() * xi)),
            total_variation: 1.0,
            positivity_flag: true,
        }
    }

    pub fn is_pure_shift(&self) -> bool {
        self.density.is_none()
    }

    /// Total mass `ν([0,∞))`, `ν̌(0)`.
    pub fn total_mass(&self) -> f64 {
        (self.fourier)(Complex64::new(0.0, 0.0)).re
    }

    /// `max |ν̌|` over a grid of the closed upper half-plane.
    pub fn hinf_on_grid(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in -80..=80 {
            for k in 0..=40 {
                let xi = Complex64::new(i as f64 / 8.0, k as f64 / 8.0);
                m = m.max((self.fourier)(xi).norm());
            }
        }
        m
    }

    /// Hypothesis: positive with total mass at most one.
    pub fn positive_hypothesis(&self) -> bool {
        self.positivity_flag && self.total_mass() <= 1.0 + 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn factorizations_hold() {
        for w in [WeightFunction::texp(), WeightFunction::laguerre()] {
            let r = w.check_factorization().unwrap();
            assert!(r.symbol < 1e-12, "{}: {r:?}", w.label);
            assert!(r.modulus < 1e-10, "{}: {r:?}", w.label);
            assert!(r.convolution < 1e-8, "{}: {r:?}", w.label);
        }
        assert!(WeightFunction::exp().check_factorization().is_err());
    }

    #[test]
    fn fourier_transforms_match_quadrature() {
        for w in [WeightFunction::texp(), WeightFunction::laguerre(), WeightFunction::exp()] {
            for x in [-3.0, -0.5, 0.0, 0.7, 2.0] {
                let q = integrate(
                    |t: f64| w.eval(t) * Complex64::from_polar(1.0, 2.0 * PI * x * t),
                    0.0,
                    f64::INFINITY,
                    Tolerance::absolute(1e-12),
                )
                .unwrap();
                let exact = (w.fourier)(Complex64::new(x, 0.0));
                assert!((q.value - exact).norm() < 1e-9, "{} at {x}", w.label);
            }
        }
    }

    #[test]
    fn decay_bounds_hold() {
        for w in [WeightFunction::texp(), WeightFunction::laguerre(), WeightFunction::exp()] {
            let d = w.fourier_decay;
            for k in 0..400 {
                let x = k as f64 * 0.25;
                let v = (w.fourier)(Complex64::new(x, 0.0)).norm();
                assert!(v <= d.c / (1.0 + x.powf(d.order)) + 1e-15, "{} at {x}", w.label);
            }
        }
    }

    #[test]
    fn constant_a_for_texp() {
        let a = WeightFunction::texp().constant_a().unwrap();
        let exact = 0.5 / 0.5f64.tanh();
        // The generic bound |φ̌| ≤ 1/(1+ξ²) makes the tail term loose.
        assert!(a.value >= exact - 1e-12 && a.value - a.tail_bound < exact + 1e-12);
        assert!(a.tail_bound < 2e-3);
        assert!(matches!(WeightFunction::exp().constant_a(), Err(Error::Divergence(_))));
    }

    #[test]
    fn measures() {
        let l = ConvolutionMeasure::laguerre();
        assert!(!l.positive_hypothesis());
        assert_abs_diff_eq!(l.hinf_on_grid(), 1.0, epsilon = 1e-12);
        // ν̌ from the atom and the density: 1 − 2/(1 − iξ).
        let xi = Complex64::new(0.3, 0.4);
        let direct = 1.0 - 2.0 / (1.0 - Complex64::i() * xi);
        assert!(((l.fourier)(xi) - direct).norm() < 1e-14);
        assert_abs_diff_eq!(l.total_mass(), -1.0, epsilon = 1e-15);
        let e = ConvolutionMeasure::exp_density();
        assert!(e.positive_hypothesis());
        assert!(e.hinf_on_grid() <= 1.0 + 1e-15);
        let s = ConvolutionMeasure::unit_shift();
        assert!(s.is_pure_shift() && s.positive_hypothesis());
        assert!(ConvolutionMeasure::parse("nope").is_err());
    }
}
