use hankel_core::laguerre::{galerkin_coefficients, gram_double_integral, verify_laguerre_convolution_family};
use hankel_core::quad::UniformGrid;
use hankel_core::restriction::{
    build_phi_matrix, verify_factorization_identity, ConvolutionMeasure, Factor, FactorizationInput, PhiFamily,
    RestrictionSpec,
};

use super::{par, require, strings};
use crate::config::{ConfigError, ExperimentConfig};
use crate::record::{timed, ExperimentRecord};

const FACTORIZATION_KERNELS: &[&str] = &["exp", "texp", "bump", "measure:atoms=(1,1)(2,0.5)"];

pub fn averaging_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("averaging-factorization");
    c.kernels = strings(if quick { &FACTORIZATION_KERNELS[..2] } else { FACTORIZATION_KERNELS });
    c.restrictions = strings(&["avg:phi=texp"]);
    c.sizes = vec![if quick { 8 } else { 16 }];
    c
}

pub fn convolution_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("convolution-factorization");
    c.kernels = strings(if quick { &FACTORIZATION_KERNELS[..2] } else { FACTORIZATION_KERNELS });
    c.restrictions = strings(&["conv:phi=laguerre,nu=laguerre"]);
    c.sizes = vec![if quick { 8 } else { 16 }];
    c
}

pub fn averaging(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    factorization(c, false)
}

pub fn convolution(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    factorization(c, true)
}

fn factorization(c: &ExperimentConfig, convolution: bool) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    let specs = c.restriction_specs()?;
    require(&kernels, "kernel")?;
    require(&specs, "restriction")?;
    require(&c.sizes, "N")?;
    let mut inputs = Vec::new();
    for s in &specs {
        let input = match (s, convolution) {
            (RestrictionSpec::Averaging(w), false) => FactorizationInput::Averaging(w.clone()),
            (RestrictionSpec::Convolution(w, nu), true) => FactorizationInput::Convolution(w.clone(), nu.clone()),
            _ => {
                let want = if convolution { "conv:" } else { "avg:" };
                return Err(ConfigError::Invalid(format!("{} is not a {want} restriction", s.label())));
            }
        };
        inputs.push((s.label(), input));
    }
    let tol = c.tolerance.unwrap_or(1e-6);
    let mut tuples = Vec::new();
    for a in &kernels {
        for (label, input) in &inputs {
            for &n in &c.sizes {
                tuples.push((a, label, input, n));
            }
        }
    }
    Ok(par(&tuples, |&(a, label, input, n)| {
        let t = ExperimentRecord::new("factorization_residual").kernel(a.label()).restriction(label.as_str()).n(n);
        timed(t, true, |mut r| {
            let check = verify_factorization_identity(a, input, n, UniformGrid::default())?;
            r.value = Some(check.residual);
            r.reference = Some(check.reference.max_abs());
            r.convergence = "max entrywise |Φ₂* H(a) Φ₁ − R a|".into();
            let (FactorizationInput::Averaging(w) | FactorizationInput::Convolution(w, _)) = input;
            if let Ok(sup) = w.constant_a() {
                r = r.detail("constant_a", sup.value).detail("constant_a_tail", sup.tail_bound);
            }
            if let Some(h) = &check.hypotheses {
                r = r
                    .detail("phi_decay", f64::from(u8::from(h.decay)))
                    .detail("nu_positive", f64::from(u8::from(h.positive_measure)))
                    .detail("nu_hinf", h.hinf_bound);
            }
            Ok(r.pin_below(tol))
        })
    }))
}

pub fn laguerre_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("laguerre-equivalence");
    c.kernels = strings(&["exp", "texp", "bump", "counterexample:N=2", "measure:atoms=(1,1)(2,0.5)"]);
    // Gram size, family length, Galerkin size.
    c.sizes = if quick { vec![12, 10, 6] } else { vec![24, 20, 8] };
    c
}

/// The Gram matrix needs a finer grid than the default to reach 1e-8.
fn gram_grid() -> UniformGrid {
    UniformGrid::new(1.0 / 2048.0, 32.0).expect("valid grid")
}

pub fn laguerre(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    if c.sizes.len() != 3 {
        return Err(ConfigError::Invalid("laguerre-equivalence takes N = gram size, family length, Galerkin size".into()));
    }
    let (gram_n, family_n, galerkin_n) = (c.sizes[0], c.sizes[1], c.sizes[2]);
    let tol = c.tolerance.unwrap_or(1e-8);
    let family_tol = c.tolerance.map_or(1e-6, |t| t.max(1e-6));
    let mut records = par(&[0usize, 1], |&which| {
        if which == 0 {
            let t = ExperimentRecord::new("gram_error").restriction("conv:phi=laguerre,nu=laguerre").n(gram_n);
            timed(t, true, |mut r| {
                let psi = Factor::laguerre_psi();
                let grid = gram_grid();
                let phi = build_phi_matrix(|t| (psi.eval)(t), &PhiFamily::Convolution(ConvolutionMeasure::laguerre()), gram_n, grid)?;
                let g = phi.gram()?;
                let mut err: f64 = 0.0;
                for j in 0..gram_n {
                    for k in 0..gram_n {
                        let want = if j == k { 1.0 } else { 0.0 };
                        err = err.max((g.get(j, k) - want).norm());
                    }
                }
                r.value = Some(err);
                r.convergence = format!("grid step {} on [0, {}]", grid.step, grid.range());
                Ok(r.pin_below(tol))
            })
        } else {
            let t = ExperimentRecord::new("family_residual").restriction("conv:phi=laguerre,nu=laguerre").n(family_n);
            timed(t, true, |mut r| {
                r.value = Some(verify_laguerre_convolution_family(family_n, UniformGrid::default())?);
                r.convergence = "max |T^j ψ − u_j| on the default grid".into();
                Ok(r.pin_below(family_tol))
            })
        }
    });
    records.extend(par(&kernels, |a| {
        let t = ExperimentRecord::new("galerkin_hankel_defect").kernel(a.label()).n(galerkin_n);
        timed(t, true, |mut r| {
            let oracle = gram_double_integral(a, galerkin_n)?;
            let scale = oracle.max_abs();
            let g = galerkin_coefficients(a, galerkin_n)?.matrix();
            let agreement = g.sub(&oracle).max_abs() / scale;
            r.value = Some((oracle.hankel_defect() / scale).max(agreement));
            r = r.detail("hankel_defect", oracle.hankel_defect() / scale).detail("galerkin_vs_double_integral", agreement);
            r.convergence = "double integral against the Galerkin coefficients".into();
            Ok(r.pin_below(tol))
        })
    }));
    Ok(records)
}
