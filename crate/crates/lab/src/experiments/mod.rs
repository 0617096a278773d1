//! The experiment registry.  Each experiment expands its configuration into
//! parameter tuples, evaluates them on the rayon pool and returns records in
//! tuple order, followed by any summary records computed from them.

mod factorization;
mod fourier;
mod restriction;

use rayon::prelude::*;

use hankel_core::kernel::KernelFunction;
use hankel_core::laguerre::{schatten_via_galerkin_with, Dilation};
use hankel_core::linalg::{schatten_norm, SchattenP, SingularSpectrum};

use crate::config::{ConfigError, ExperimentConfig, SchattenLabel};
use crate::record::ExperimentRecord;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// Default parameters; `quick` gives the small smoke-test sizes.
    pub defaults: fn(quick: bool) -> ExperimentConfig,
    run: fn(&ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError>,
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "restrict-p-le-1",
        summary: "‖H(R a)‖_p against (1+1/λ)‖H(a)‖_p for p ≤ 1; empirical constant envelopes",
        defaults: restriction::restrict_defaults,
        run: restriction::restrict_p_le_1,
    },
    Experiment {
        name: "counterexample",
        summary: "kernels whose restrictions have norm one while ‖H(a)‖₂² decays like 1/N",
        defaults: restriction::counterexample_defaults,
        run: restriction::counterexample,
    },
    Experiment {
        name: "converse-sup",
        summary: "γ‖H(R a_γ)‖_p as γ → 0 compared with ‖H(a)‖_p",
        defaults: restriction::converse_defaults,
        run: restriction::converse_sup,
    },
    Experiment {
        name: "positive-kernel-bound",
        summary: "‖H(R_λ a)‖_p ≤ ‖H(a)‖_p for positive kernels and λ ≥ 2 (pinned)",
        defaults: restriction::positive_defaults,
        run: restriction::positive_kernel_bound,
    },
    Experiment {
        name: "kernel-decay",
        summary: "λ a(λ) ≤ 2‖H(a)‖ for positive kernels (pinned)",
        defaults: restriction::decay_defaults,
        run: restriction::kernel_decay,
    },
    Experiment {
        name: "averaging-factorization",
        summary: "averaging restriction equals Φ₂* H(a) Φ₁ entrywise (pinned)",
        defaults: factorization::averaging_defaults,
        run: factorization::averaging,
    },
    Experiment {
        name: "convolution-factorization",
        summary: "convolution-family restriction equals Φ₂* H(a) Φ₁ entrywise (pinned)",
        defaults: factorization::convolution_defaults,
        run: factorization::convolution,
    },
    Experiment {
        name: "laguerre-equivalence",
        summary: "Laguerre functions as a convolution family; Galerkin matrices are Hankel (pinned)",
        defaults: factorization::laguerre_defaults,
        run: factorization::laguerre,
    },
    Experiment {
        name: "besov-equivalence",
        summary: "Besov functional over Schatten norm, and the periodization L^p estimate (pinned)",
        defaults: fourier::besov_defaults,
        run: fourier::besov,
    },
    Experiment {
        name: "scaling-identity",
        summary: "γ‖H(a_γ)‖_p = ‖H(a)‖_p through the Galerkin estimator (pinned)",
        defaults: restriction::scaling_defaults,
        run: restriction::scaling_identity,
    },
    Experiment {
        name: "symbol-identity",
        summary: "Σ a(m+1)e^{2πiξm} against the lattice sum of ǎ (pinned)",
        defaults: fourier::symbol_defaults,
        run: fourier::symbol_identity,
    },
    Experiment {
        name: "hilbert-schmidt",
        summary: "continuous and discrete Hilbert-Schmidt identities against SVD (pinned)",
        defaults: restriction::hs_defaults,
        run: restriction::hilbert_schmidt,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Runs the experiment named in `config`.  Numeric failures are recorded per
/// tuple; only configuration problems are errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    config.validate()?;
    let exp = find(&config.experiment).ok_or_else(|| ConfigError::Invalid(format!("unknown experiment {}", config.experiment)))?;
    let mut records = (exp.run)(config)?;
    let hash = config.hash();
    for (i, r) in records.iter_mut().enumerate() {
        r.experiment = config.experiment.clone();
        r.config_hash = hash.clone();
        r.index = i;
    }
    Ok(records)
}

pub(crate) const COMPACT_CATALOG: &[&str] = &["exp", "texp", "bump", "counterexample:N=2", "measure:atoms=(1,1)(2,0.5)"];

pub(crate) const POSITIVE_CATALOG: &[&str] = &[
    "measure:atoms=(1,1)",
    "measure:atoms=(1,1)(2,0.5)",
    "measure:atoms=(0.5,1),density=const(1,1,3)",
    "measure:density=power(1,0,1)",
];

pub(crate) fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub(crate) fn ps(v: &[f64]) -> Vec<SchattenLabel> {
    v.iter().copied().map(SchattenLabel).collect()
}

/// Evaluates the tuples on the rayon pool; `collect` keeps their order.
pub(crate) fn par<T: Sync>(tuples: &[T], f: impl Fn(&T) -> ExperimentRecord + Sync + Send) -> Vec<ExperimentRecord> {
    tuples.par_iter().map(f).collect()
}

pub(crate) fn require<T>(v: &[T], what: &str) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError::Invalid(format!("this experiment needs a non-empty {what} list")))
    } else {
        Ok(())
    }
}

pub(crate) fn cartesian3<A: Clone, B: Clone, C: Clone>(a: &[A], b: &[B], c: &[C]) -> Vec<(A, B, C)> {
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for x in a {
        for y in b {
            for z in c {
                out.push((x.clone(), y.clone(), z.clone()));
            }
        }
    }
    out
}

/// `‖H(a)‖_{S_p}` and how it was obtained: closed-form spectrum, Laplace
/// representation for positive kernels, otherwise Laguerre–Galerkin at size
/// `n` (dilated when `a` has compact support).
pub(crate) fn operator_schatten(a: &KernelFunction, p: SchattenP, n: usize) -> hankel_core::Result<(f64, String)> {
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
    Ok((g.value, format!("Galerkin N={n} γ={:.4} converged={}", g.dilation, g.converged)))
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
