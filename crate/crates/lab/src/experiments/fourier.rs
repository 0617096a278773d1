use std::f64::consts::PI;

use hankel_core::besov::{besov_norm_continuous, BesovParams};
use hankel_core::periodize::{check_symbol_periodization, periodize, LineDecay, LineFunction};
use hankel_core::quad::{integrate, Tolerance};
use hankel_core::Complex64;

use super::{operator_schatten, par, ps, require, strings, COMPACT_CATALOG};
use crate::config::{ConfigError, ExperimentConfig, SchattenLabel};
use crate::record::{timed, ExperimentRecord};

pub fn besov_defaults(quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("besov-equivalence");
    c.kernels = strings(if quick { &["exp", "bump"] } else { COMPACT_CATALOG });
    c.p = ps(if quick { &[1.0, 2.0] } else { &[0.5, 1.0, 2.0] });
    c.sizes = vec![128];
    c
}

/// Test functions for the periodization estimate.
fn line_functions() -> Vec<(&'static str, LineFunction)> {
    vec![
        ("gaussian", LineFunction::real(|t| (-PI * t * t).exp(), LineDecay::Gaussian { c: 1.0, s: PI })),
        ("sech", LineFunction::real(|t| 1.0 / (PI * t).cosh(), LineDecay::Exponential { c: 2.0, rate: PI })),
        ("two-sided-exp", LineFunction::real(|t| (-t.abs()).exp(), LineDecay::Exponential { c: 1.0, rate: 1.0 })),
        (
            "modulated-gaussian",
            LineFunction::new(|t| Complex64::from_polar((-PI * t * t).exp(), 2.0 * PI * 0.3 * t), LineDecay::Gaussian { c: 1.0, s: PI }),
        ),
        ("inverse-quartic", LineFunction::real(|t| 1.0 / (1.0 + t * t).powi(2), LineDecay::Power { c: 1.0, order: 4.0 })),
    ]
}

fn line_lp_power(f: &LineFunction, p: f64) -> hankel_core::Result<f64> {
    let g = |t: f64| f.eval(t).norm().powf(p);
    let tol = Tolerance::new(1e-15, 1e-13);
    Ok(integrate(g, -1.0, 0.0, tol)?.value
        + integrate(g, 0.0, 1.0, tol)?.value
        + integrate(g, 1.0, f64::INFINITY, tol)?.value
        + integrate(|t| g(-t), 1.0, f64::INFINITY, tol)?.value)
}

pub fn besov(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.p, "p")?;
    let n = c.sizes.first().copied().unwrap_or(128);
    // The default sample step leaves too much p = 1/2 mass at the edge of the
    // line grid, so the base discretisation is one refinement up.
    let base = BesovParams::default().refined();
    let mut tuples = Vec::new();
    for a in &kernels {
        for &p in &c.p {
            tuples.push((a, p));
        }
    }
    let mut records = par(&tuples, |&(a, p)| {
        let t = ExperimentRecord::new("besov_ratio").kernel(a.label()).p(p).n(n);
        timed(t, false, |r| {
            let (norm, how) = operator_schatten(a, p.schatten(), n)?;
            let coarse = besov_norm_continuous(a, p.0, &base)?;
            let fine = besov_norm_continuous(a, p.0, &base.refined())?;
            let mut r = r
                .with_bound(coarse.value, norm)
                .detail("refined_value", fine.value)
                .detail("refined_ratio", fine.value / norm)
                .detail("refinement_change", (fine.value - coarse.value).abs() / coarse.value)
                .detail("tail_estimate", coarse.tail_estimate);
            r.reference = Some(norm);
            r.convergence = how;
            Ok(r)
        })
    });
    for &p in &c.p {
        let rs: Vec<_> = records.iter().filter(|r| r.quantity == "besov_ratio" && r.p.as_deref() == Some(p.label().as_str())).collect();
        let ratios: Vec<f64> = rs.iter().filter_map(|r| r.ratio).collect();
        let refined: Vec<f64> = rs.iter().filter_map(|r| r.details.get("refined_ratio").copied()).collect();
        if ratios.is_empty() || refined.len() != ratios.len() {
            continue;
        }
        let env = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max));
        let ((lo, hi), (lo2, hi2)) = (env(&ratios), env(&refined));
        let mut r = ExperimentRecord::new("besov_envelope")
            .p(p)
            .detail("min", lo)
            .detail("max", hi)
            .detail("refined_min", lo2)
            .detail("refined_max", hi2)
            .detail("change", ((lo2 - lo) / lo).abs().max(((hi2 - hi) / hi).abs()));
        r.value = Some(hi / lo);
        r.convergence = "C/c over the kernels".into();
        records.push(r);
    }
    let tol = c.tolerance.unwrap_or(1e-8);
    let mut line_tuples = Vec::new();
    for (name, f) in line_functions() {
        for p in [0.5, 1.0] {
            line_tuples.push((name, f.clone(), p));
        }
    }
    records.extend(par(&line_tuples, |(name, f, p)| {
        let t = ExperimentRecord::new("periodization_lp").kernel(*name).p(SchattenLabel(*p));
        timed(t, true, |r| {
            let per = periodize(f, 1 << 14, 1e-12)?;
            let mut r = r.with_bound(per.lp_power(*p), line_lp_power(f, *p)?).detail("tail_bound", per.tail_bound);
            r.convergence = "‖𝒫f‖_p^p on 2^14 points against ∫|f|^p".into();
            // Pinned with an absolute slack.
            let (v, b) = (r.value.unwrap(), r.bound.unwrap());
            r.pinned = true;
            r.tolerance = Some(tol);
            r.pass = Some(v <= b + tol);
            Ok(r)
        })
    }));
    Ok(records)
}

pub fn symbol_defaults(_quick: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::empty("symbol-identity");
    c.kernels = strings(&["exp", "texp"]);
    c.xi = vec![(0.3, 0.2), (0.0, 1.0)];
    c.sizes = vec![50];
    c
}

pub fn symbol_identity(c: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ConfigError> {
    let kernels = c.kernel_functions()?;
    require(&kernels, "kernel")?;
    require(&c.xi, "xi")?;
    require(&c.sizes, "N")?;
    if let Some(&(re, im)) = c.xi.iter().find(|x| !(x.1 > 0.0)) {
        return Err(ConfigError::Invalid(format!("ξ = {re}{im:+}i must lie in the upper half-plane")));
    }
    let tol = c.tolerance.unwrap_or(1e-8);
    let xis = c.xi_points();
    let mut tuples = Vec::new();
    for a in &kernels {
        for &xi in &xis {
            for &j in &c.sizes {
                tuples.push((a, xi, j));
            }
        }
    }
    Ok(par(&tuples, |&(a, xi, j)| {
        let t = ExperimentRecord::new("symbol_residual").kernel(a.label()).n(j).detail("xi_re", xi.re).detail("xi_im", xi.im);
        timed(t, true, |mut r| {
            let s = check_symbol_periodization(a, xi, j)?;
            r.value = Some(s.residual);
            r.reference = Some(s.lhs.norm());
            r = r.detail("raw_residual", s.raw_residual).detail("boundary", s.boundary.norm());
            r.convergence = format!("lattice sum |j| ≤ {j} with tail");
            Ok(r.pin_below(tol))
        })
    }))
}
