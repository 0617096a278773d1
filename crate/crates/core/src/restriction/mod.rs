//! Restriction maps from kernels `a` on `(0,∞)` to Hankel coefficient
//! sequences: pointwise on a shifted and scaled lattice, averaging against a
//! weight, and averaging against an iterated-convolution family.

mod convolution;
mod factorization;
mod weight;

pub use convolution::{
    convolution_restrict, convolve_measure, convolve_samples, iterate_family, ConvolutionOptions,
    ConvolutionRestriction, GridFunction, HypothesisReport,
};
pub use factorization::{
    build_phi_matrix, phi_operator_norm, phi_operator_norm_from_symbol, verify_factorization_identity, FactorizationCheck,
    FactorizationInput, PhiFamily, PhiMatrix,
};
pub use weight::{
    ComplexFn, ConvolutionMeasure, Factor, FactorizationReport, FourierDecay, RealFn, SymbolFn, WeightFunction,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{fmt_num, parse_num, split_label, KernelFunction};
use crate::linalg::HankelCoefficients;
use crate::quad::{integrate, Tolerance};

/// Absolute tolerance per averaged entry; tighter than the 1e-10 contract so
/// that downstream residual checks at 1e-7 are dominated by other errors.
pub const AVERAGING_TOL: f64 = 1e-12;

/// How a kernel is turned into a coefficient sequence.
#[derive(Debug, Clone)]
pub enum RestrictionSpec {
    Pointwise { lambda: f64, gamma: f64 },
    Averaging(WeightFunction),
    Convolution(WeightFunction, ConvolutionMeasure),
}

impl RestrictionSpec {
    /// `pointwise:lambda=1,gamma=1`, `avg:phi=te^{-t}`, `conv:phi=laguerre,nu=laguerre`.
    pub fn parse(label: &str) -> Result<Self> {
        let (name, opts) = split_label(label)?;
        let get = |key: &str| opts.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        for (k, _) in &opts {
            let known: &[&str] = match name.as_str() {
                "pointwise" => &["lambda", "gamma"],
                "avg" => &["phi"],
                "conv" => &["phi", "nu"],
                _ => &[],
            };
            if !known.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown key {k} in restriction {label}")));
            }
        }
        let spec = match name.as_str() {
            "pointwise" => Self::Pointwise {
                lambda: get("lambda").map(parse_num).transpose()?.unwrap_or(1.0),
                gamma: get("gamma").map(parse_num).transpose()?.unwrap_or(1.0),
            },
            "avg" => Self::Averaging(WeightFunction::parse(get("phi").unwrap_or("texp"))?),
            "conv" => Self::Convolution(
                WeightFunction::parse(get("phi").unwrap_or("laguerre"))?,
                ConvolutionMeasure::parse(get("nu").unwrap_or("laguerre"))?,
            ),
            other => return Err(Error::Parse(format!("unknown restriction {other}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Pointwise { lambda, gamma } = self {
            if !(*lambda > 0.0 && lambda.is_finite() && *gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Domain(format!("pointwise restriction needs λ, γ > 0, got {lambda}, {gamma}")));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Self::Pointwise { lambda, gamma } => format!("pointwise:lambda={},gamma={}", fmt_num(*lambda), fmt_num(*gamma)),
            Self::Averaging(phi) => format!("avg:phi={}", phi.label),
            Self::Convolution(phi, nu) => format!("conv:phi={},nu={}", phi.label, nu.label),
        }
    }

    pub fn apply(&self, a: &KernelFunction, count: usize) -> Result<HankelCoefficients> {
        match self {
            Self::Pointwise { lambda, gamma } => pointwise_restrict(a, *lambda, *gamma, count),
            Self::Averaging(phi) => averaging_restrict(a, phi, count),
            Self::Convolution(phi, nu) => {
                convolution_restrict(a, phi, nu, count, &ConvolutionOptions::default()).map(|r| r.coefficients)
            }
        }
    }
}

/// `α(j) = a(γ(j+λ))`, `j = 0..count`.  Lattice points outside the support of
/// `a` give zeros; their number is noted in the origin string.
pub fn pointwise_restrict(a: &KernelFunction, lambda: f64, gamma: f64, count: usize) -> Result<HankelCoefficients> {
    RestrictionSpec::Pointwise { lambda, gamma }.validate()?;
    let support = a.support();
    let mut clipped = 0usize;
    let mut entries = Vec::with_capacity(count);
    for j in 0..count {
        let t = gamma * (j as f64 + lambda);
        if support.contains(t) {
            let v = a.eval(t)?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!("a({t}) = {v}")));
            }
            entries.push(Complex64::new(v, 0.0));
        } else {
            clipped += 1;
            entries.push(Complex64::new(0.0, 0.0));
        }
    }
    let mut origin = format!("{} | pointwise:lambda={},gamma={}", a.label(), fmt_num(lambda), fmt_num(gamma));
    if clipped > 0 {
        origin.push_str(&format!(" ({clipped} entries outside support set to 0)"));
    }
    HankelCoefficients::new(entries, origin)
}

/// `α(j) = ∫_j^∞ a(t)φ(t−j)dt` by adaptive quadrature.
pub fn averaging_restrict(a: &KernelFunction, phi: &WeightFunction, count: usize) -> Result<HankelCoefficients> {
    let support = a.support();
    let mut entries = Vec::with_capacity(count);
    for j in 0..count {
        let shift = j as f64;
        let lo = shift.max(support.lo);
        let hi = support.hi;
        if hi <= lo {
            entries.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let f = |t: f64| phi.eval(t - shift) * a.value(t);
        let tol = Tolerance::absolute(AVERAGING_TOL);
        // Split off a unit panel so that kinks of φ at 0 and the support edges
        // of `a` sit at panel ends.
        let mid = if hi.is_finite() { hi } else { lo + 1.0 };
        let mut v = integrate(f, lo, mid, tol)?.value;
        if hi.is_infinite() {
            v += integrate(f, mid, f64::INFINITY, tol)?.value;
        }
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("averaged entry {j} is not finite")));
        }
        entries.push(v);
    }
    HankelCoefficients::new(entries, format!("{} | avg:phi={}", a.label(), phi.label))
}
