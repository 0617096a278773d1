use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hankel_core::kernel::{counterexample_kernel, scale_kernel, KernelFunction};
use hankel_core::laguerre::{schatten_via_galerkin_with, Dilation};
use hankel_core::linalg::{hankel_schatten, hilbert_schmidt_antidiagonal, SchattenP};
use hankel_core::restriction::pointwise_restrict;

use super::{cartesian3, operator_schatten, par, ps, require, slope, strings, COMPACT_CATALOG, POSITIVE_CATALOG};
use crate::config::{ConfigError, ExperimentConfig, SchattenLabel};
use crate::record::{timed, ExperimentRecord};

/// Lattice points `γ(j+λ)` for `j < 2N−1`.
fn restricted_norm(a: &KernelFunction, lambda: f64, gamma: f64, n: usize, p: SchattenP) -> hankel_core::Result<f64> {
    hankel_schatten(&pointwise_restrict(a, lambda, gamma, 2 * n - 1)?, n, p)
}

pub fn restrict_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("restrict-p-le-1");
    c.kernels = strings(if quick { &COMPACT_CATALOG[..3] } else { COMPACT_CATALOG });
    c.p = ps(&[0.5, 1.0]);
    c.lambda = vec![0.5, 1.0, 2.0];
    c.gamma = vec![1.0];
    c.sizes = if quick { vec![32] } else { vec![64, 128] };
    c
}

pub fn restrict_p_le_1(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.p, "p")?;
    require(&c.lambda, "lambda")?;
    require(&c.gamma, "gamma")?;
    require(&c.sizes, "N")?;
    let mut tuples = Vec::new();
    for a in &kernels {
        for &p in &c.p {
            for &n in &c.sizes {
                for &lambda in &c.lambda {
                    for &gamma in &c.gamma {
                        tuples.push((a, p, n, lambda, gamma));
                    }
                }
            }
        }
    }
    let mut records = par(&tuples, |&(a, p, n, lambda, gamma)| {
        let t = ExperimentRecord::new("restricted_norm").kernel(a.label()).p(p).n(n).lambda(lambda).gamma(gamma).restriction(format!("pointwise:lambda={lambda},gamma={gamma}"));
        timed(t, false, |r| {
            let v = restricted_norm(a, lambda, gamma, n, p.schatten())?;
            let (norm, how) = operator_schatten(a, p.schatten(), 2 * n)?;
            // α(j) = a_γ(j+λ) and ‖H(a_γ)‖ = ‖H(a)‖/γ.
            let mut r = r.with_bound(v, (1.0 + 1.0 / lambda) * norm / gamma);
            r.reference = Some(norm);
            r.convergence = how;
            Ok(r)
        })
    });
    // Envelope change between the two largest N, per p.
    if c.sizes.len() >= 2 {
        let mut sizes = c.sizes.clone();
        sizes.sort_unstable();
        let (n1, n2) = (sizes[sizes.len() - 2], sizes[sizes.len() - 1]);
        for &p in &c.p {
            let env = |n: usize| {
                records
                    .iter()
                    .filter(|r| r.n == Some(n) && r.p.as_deref() == Some(p.label().as_str()))
                    .filter_map(|r| r.ratio)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let (e1, e2) = (env(n1), env(n2));
            let mut r = ExperimentRecord::new("envelope_change").p(p).n(n2).detail("envelope_small_n", e1).detail("envelope_large_n", e2).detail("small_n", n1 as f64);
            r.value = Some((e2 - e1).abs() / e1);
            records.push(r);
        }
    }
    Ok(records)
}

pub fn counterexample_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("counterexample");
    c.sizes = if quick { vec![2, 4, 8, 16] } else { vec![2, 4, 8, 16, 32, 64] };
    c.p = ps(if quick { &[0.5, 1.0, 2.0] } else { &[0.5, 1.0, 2.0, f64::INFINITY] });
    c
}

/// Largest `N'` for which the Galerkin cross-check resolves the kernel.
const COUNTEREXAMPLE_GALERKIN_MAX: usize = 4;

pub fn counterexample(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    require(&c.sizes, "N")?;
    require(&c.p, "p")?;
    let mut tuples: Vec<(usize, Option<SchattenLabel>)> = Vec::new();
    for &n in &c.sizes {
        for &p in &c.p {
            tuples.push((n, Some(p)));
        }
        tuples.push((n, None));
    }
    let mut records = par(&tuples, |&(n, p)| {
        let label = format!("counterexample:N={n}");
        match p {
            // Only a(1) = 1 survives on the lattice, so every norm is exactly one.
            Some(p) => {
                let t = ExperimentRecord::new("restricted_norm").kernel(&label).restriction("pointwise:lambda=1,gamma=1").p(p).n(n).lambda(1.0);
                timed(t, true, |r| {
                    let a = counterexample_kernel(n as u32)?;
                    let v = restricted_norm(&a, 1.0, 1.0, 16, p.schatten())?;
                    let mut r = r.detail("size", 16.0);
                    r.value = Some(v);
                    r.reference = Some(1.0);
                    Ok(r.pin_relative(0.0))
                })
            }
            None => {
                let t = ExperimentRecord::new("hs_squared").kernel(&label).p(SchattenLabel(2.0)).n(n);
                timed(t, false, |mut r| {
                    let a = counterexample_kernel(n as u32)?;
                    let hs = a.hilbert_schmidt_norm()?;
                    r.value = Some(hs * hs);
                    r.convergence = "∫ t|a|² by adaptive quadrature".into();
                    if n <= COUNTEREXAMPLE_GALERKIN_MAX {
                        let g = schatten_via_galerkin_with(&a, SchattenP::Finite(2.0), 128, Dilation::Auto)?;
                        r = r.detail("galerkin_s2", g.value).detail("galerkin_rel_diff", (g.value - hs).abs() / hs);
                    }
                    Ok(r)
                })
            }
        }
    });
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.quantity == "hs_squared")
        .filter_map(|r| Some(((r.n? as f64).ln(), r.value?.ln())))
        .collect();
    let mut s = ExperimentRecord::new("slope").kernel("counterexample").p(SchattenLabel(2.0));
    if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        s.value = Some(slope(&x, &y));
        s.reference = Some(-1.0);
        s.convergence = format!("least squares over {} sizes", x.len());
        s = s.pin_relative(c.tolerance.unwrap_or(0.1));
    } else {
        s = s.failed(true, "slope needs at least two sizes");
    }
    records.push(s);
    Ok(records)
}

pub fn converse_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("converse-sup");
    c.kernels = strings(&["exp"]);
    c.p = ps(&[1.0]);
    c.lambda = vec![1.0];
    let k = if quick { 4 } else { 6 };
    c.gamma = (0..=k).map(|k| 2f64.powi(-k)).collect();
    c.sizes = vec![20];
    c
}

/// Cap on the matrix size as γ shrinks.
const CONVERSE_MAX_SIZE: usize = 1280;

pub fn converse_sup(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.p, "p")?;
    require(&c.gamma, "gamma")?;
    require(&c.sizes, "N")?;
    let lambda = c.lambda.first().copied().unwrap_or(1.0);
    let base = c.sizes[0];
    let mut gammas = c.gamma.clone();
    gammas.sort_by(|a, b| b.total_cmp(a));
    let tuples = cartesian3(&(0..kernels.len()).collect::<Vec<_>>(), &c.p, &gammas);
    let mut records = par(&tuples, |&(ki, p, gamma)| {
        let a = &kernels[ki];
        let n = ((base as f64 / gamma).ceil() as usize).min(CONVERSE_MAX_SIZE);
        let t = ExperimentRecord::new("scaled_restricted_norm").kernel(a.label()).p(p).lambda(lambda).gamma(gamma).n(n);
        timed(t, false, |mut r| {
            let v = gamma * restricted_norm(&scale_kernel(a, gamma)?, lambda, 1.0, n, p.schatten())?;
            let (norm, how) = operator_schatten(a, p.schatten(), 128)?;
            r.value = Some(v);
            r.reference = Some(norm);
            r.convergence = how;
            Ok(r)
        })
    });
    for (ki, a) in kernels.iter().enumerate() {
        for &p in &c.p {
            let seq: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.quantity == "scaled_restricted_norm" && r.kernel == a.label() && r.p.as_deref() == Some(p.label().as_str()))
                .collect();
            let vals: Vec<f64> = seq.iter().filter_map(|r| r.value).collect();
            let mut r = ExperimentRecord::new("trend").kernel(a.label()).p(p).lambda(lambda);
            if vals.len() != seq.len() || vals.is_empty() {
                r = r.failed(false, "missing values in the γ sequence");
            } else {
                let drop = vals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
                let last = *vals.last().unwrap();
                let reference = seq[0].reference.unwrap_or(f64::NAN);
                r = r.detail("max_decrease", drop).detail("final", last).detail("kernel_index", ki as f64);
                r.value = Some(last / reference);
                r.reference = Some(reference);
                r.convergence = format!("γ from {} to {}", gammas[0], gammas[gammas.len() - 1]);
            }
            records.push(r);
        }
    }
    Ok(records)
}

pub fn positive_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("positive-kernel-bound");
    c.kernels = strings(if quick { &POSITIVE_CATALOG[..2] } else { POSITIVE_CATALOG });
    c.lambda = vec![2.0, 3.0, 5.0];
    c.p = ps(&[2.0, 4.0, f64::INFINITY]);
    c.sizes = vec![if quick { 64 } else { 128 }];
    c
}

pub fn positive_kernel_bound(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.lambda, "lambda")?;
    require(&c.p, "p")?;
    require(&c.sizes, "N")?;
    if let Some(a) = kernels.iter().find(|a| a.laplace_spectrum(4, 4).is_none()) {
        return Err(ConfigError::Invalid(format!("{} is not a positive-measure kernel", a.label())));
    }
    let tol = c.tolerance.unwrap_or(1e-4);
    let mut tuples = Vec::new();
    for a in &kernels {
        for &p in &c.p {
            for &n in &c.sizes {
                for &lambda in &c.lambda {
                    tuples.push((a, p, n, lambda));
                }
            }
        }
    }
    Ok(par(&tuples, |&(a, p, n, lambda)| {
        // The constant is one only for λ ≥ 2.
        let pinned = lambda >= 2.0;
        let t = ExperimentRecord::new("restricted_norm").kernel(a.label()).restriction(format!("pointwise:lambda={lambda},gamma=1")).p(p).n(n).lambda(lambda);
        timed(t, pinned, |r| {
            let v = restricted_norm(a, lambda, 1.0, n, p.schatten())?;
            let (norm, how) = operator_schatten(a, p.schatten(), n)?;
            let mut r = r.with_bound(v, norm);
            r.reference = Some(norm);
            r.convergence = how;
            Ok(if pinned { r.pin_upper(tol) } else { r })
        })
    }))
}

pub fn decay_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("kernel-decay");
    let mut k = strings(&["exp", "carleman"]);
    k.extend(strings(if quick { &POSITIVE_CATALOG[..2] } else { POSITIVE_CATALOG }));
    c.kernels = k;
    let count = if quick { 41 } else { 201 };
    c.lambda = (0..count).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (count - 1) as f64)).collect();
    c
}

pub fn kernel_decay(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.lambda, "lambda")?;
    let tol = c.tolerance.unwrap_or(1e-6);
    let mut lambdas = c.lambda.clone();
    if c.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        for l in &mut lambdas {
            *l *= 1.0 + c.jitter * rng.gen_range(-1.0..1.0);
        }
    }
    // One norm per kernel, computed before the tuples so records stay
    // independent of evaluation order.
    let norms: BTreeMap<usize, hankel_core::Result<(f64, String)>> =
        kernels.iter().enumerate().map(|(i, a)| (i, operator_schatten(a, SchattenP::Infinity, 128))).collect();
    let tuples: Vec<(usize, f64)> = (0..kernels.len()).flat_map(|i| lambdas.iter().map(move |&l| (i, l))).collect();
    Ok(par(&tuples, |&(ki, lambda)| {
        let a = &kernels[ki];
        let t = ExperimentRecord::new("lambda_a_lambda").kernel(a.label()).lambda(lambda).p(SchattenLabel(f64::INFINITY));
        timed(t, true, |r| {
            let (norm, how) = match &norms[&ki] {
                Ok(v) => v.clone(),
                Err(e) => return Err(e.clone()),
            };
            let mut r = r.with_bound(lambda * a.eval(lambda)?, 2.0 * norm);
            r.reference = Some(norm);
            r.convergence = how;
            Ok(r.pin_upper(tol))
        })
    }))
}

pub fn scaling_defaults(_quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("scaling-identity");
    c.kernels = strings(&["exp", "texp", "measure:atoms=(1,1)(2,0.5)", "bump"]);
    c.gamma = vec![0.5, 2.0];
    c.p = ps(&[1.0, 2.0]);
    c.sizes = vec![128];
    c
}

pub fn scaling_identity(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.gamma, "gamma")?;
    require(&c.p, "p")?;
    require(&c.sizes, "N")?;
    let tol = c.tolerance.unwrap_or(1e-5);
    let mut tuples = Vec::new();
    for a in &kernels {
        for &p in &c.p {
            for &n in &c.sizes {
                for &gamma in &c.gamma {
                    tuples.push((a, p, n, gamma));
                }
            }
        }
    }
    Ok(par(&tuples, |&(a, p, n, gamma)| {
        let t = ExperimentRecord::new("scaled_norm").kernel(a.label()).p(p).n(n).gamma(gamma);
        timed(t, true, |mut r| {
            // The same basis for a and a_γ, so the comparison tests the identity
            // rather than two discretisations; it is fitted to the wider support.
            let a_gamma = scale_kernel(a, gamma)?;
            let dil = Dilation::Fixed(Dilation::Auto.factor(a, n)?.max(Dilation::Auto.factor(&a_gamma, n)?));
            let base = schatten_via_galerkin_with(a, p.schatten(), n, dil)?;
            let scaled = schatten_via_galerkin_with(&a_gamma, p.schatten(), n, dil)?;
            r.value = Some(gamma * scaled.value);
            r.reference = Some(base.value);
            r.convergence = format!("Galerkin N={n} basis γ={:.4} converged={}/{}", base.dilation, base.converged, scaled.converged);
            Ok(r.pin_relative(tol))
        })
    }))
}

pub fn hs_defaults(_quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("hilbert-schmidt");
    c.kernels = strings(COMPACT_CATALOG);
    c.lambda = vec![0.5, 1.0];
    c.sizes = vec![128];
    c
}

pub fn hilbert_schmidt(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.sizes, "N")?;
    let tol = c.tolerance.unwrap_or(1e-6);
    let mut tuples: Vec<(&KernelFunction, usize, Option<f64>)> = Vec::new();
    for a in &kernels {
        for &n in &c.sizes {
            tuples.push((a, n, None));
            for &l in &c.lambda {
                tuples.push((a, n, Some(l)));
            }
        }
    }
    Ok(par(&tuples, |&(a, n, lambda)| match lambda {
        None => {
            let t = ExperimentRecord::new("continuous_s2").kernel(a.label()).n(n).p(SchattenLabel(2.0));
            timed(t, true, |mut r| {
                let g = schatten_via_galerkin_with(a, SchattenP::Finite(2.0), n, Dilation::Auto)?;
                r.value = Some(g.value);
                r.reference = Some(a.hilbert_schmidt_norm()?);
                r.convergence = format!("Galerkin N={n} γ={:.4} converged={}", g.dilation, g.converged);
                Ok(r.pin_relative(tol))
            })
        }
        Some(l) => {
            let t = ExperimentRecord::new("discrete_s2_squared").kernel(a.label()).n(n).lambda(l).p(SchattenLabel(2.0)).restriction(format!("pointwise:lambda={l},gamma=1"));
            timed(t, true, |mut r| {
                let alpha = pointwise_restrict(a, l, 1.0, 2 * n - 1)?;
                let svd = hankel_schatten(&alpha, n, SchattenP::Finite(2.0))?;
                r.value = Some(svd * svd);
                r.reference = Some(hilbert_schmidt_antidiagonal(&alpha, n)?);
                r.convergence = "SVD against anti-diagonal count".into();
                Ok(r.pin_relative(tol))
            })
        }
    }))
}
