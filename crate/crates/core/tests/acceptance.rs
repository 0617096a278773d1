//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p hankel-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use hankel_core::besov::{besov_norm_continuous, BesovParams};
use hankel_core::kernel::{counterexample_kernel, scale_kernel, KernelFunction};
use hankel_core::laguerre::{
    galerkin_coefficients, gram_double_integral, schatten_via_galerkin, schatten_via_galerkin_with,
    verify_laguerre_convolution_family, Dilation,
};
use hankel_core::linalg::{hankel_schatten, hilbert_schmidt_antidiagonal, schatten_norm, SchattenP, SingularSpectrum};
use hankel_core::periodize::{check_symbol_periodization, periodize, LineDecay, LineFunction};
use hankel_core::quad::{integrate, Tolerance, UniformGrid};
use hankel_core::restriction::{
    build_phi_matrix, pointwise_restrict, verify_factorization_identity, ConvolutionMeasure, Factor,
    FactorizationInput, PhiFamily, WeightFunction,
};
use hankel_core::{Complex64, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn sp(p: f64) -> SchattenP {
    if p.is_infinite() {
        SchattenP::Infinity
    } else {
        SchattenP::Finite(p)
    }
}

fn kernel(label: &str) -> KernelFunction {
    KernelFunction::parse(label).expect("catalog label")
}

/// Kernels with compact `H(a)` used throughout, with the discretisation that
/// resolves each one.
fn compact_catalog() -> Vec<(KernelFunction, Dilation)> {
    vec![
        (kernel("exp"), Dilation::Natural),
        (kernel("texp"), Dilation::Natural),
        (kernel("bump"), Dilation::Auto),
        (kernel("counterexample:N=2"), Dilation::Auto),
        (kernel("measure:atoms=(1,1)(2,0.5)"), Dilation::Natural),
    ]
}

fn positive_catalog() -> Vec<KernelFunction> {
    vec![
        kernel("measure:atoms=(1,1)"),
        kernel("measure:atoms=(1,1)(2,0.5)"),
        kernel("measure:atoms=(0.5,1),density=const(1,1,3)"),
        kernel("measure:density=power(1,0,1)"),
    ]
}

/// `‖H(a)‖_{S_p}`: closed-form spectrum when the catalog has one, otherwise
/// the Laguerre–Galerkin estimate at size `n`.
fn operator_schatten(a: &KernelFunction, p: f64, dilation: Dilation, n: usize) -> Result<f64> {
    if let Some(s) = a.closed_form_spectrum() {
        return schatten_norm(&SingularSpectrum::new(s, usize::MAX)?, sp(p));
    }
    Ok(schatten_via_galerkin_with(a, sp(p), n, dilation)?.value)
}

/// `‖H(a)‖_{S_p}` of a positive kernel from its Laplace representation.
fn laplace_schatten(a: &KernelFunction, p: f64) -> Result<f64> {
    let s = a.laplace_spectrum(64, 16).expect("positive kernel")?;
    schatten_norm(&SingularSpectrum::new(s, usize::MAX)?, sp(p))
}

/// `(∫ t|a(t)|² dt)^{1/2}`.
fn hs_integral(a: &KernelFunction) -> Result<f64> {
    let s = a.support();
    let f = |t: f64| t * a.value(t).powi(2);
    let tol = Tolerance::new(1e-16, 1e-13);
    let v = if s.is_bounded() {
        integrate(f, s.lo, s.hi, tol)?.value
    } else {
        integrate(f, s.lo, 1.0, tol)?.value + integrate(f, 1.0, f64::INFINITY, tol)?.value
    };
    Ok(v.sqrt())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rank_one_oracle() -> Result<Outcome> {
    let a = kernel("exp");
    let mut worst: f64 = 0.0;
    for p in [1.0, 2.0, f64::INFINITY] {
        worst = worst.max((schatten_via_galerkin(&a, sp(p), 64)?.value - 0.5).abs());
    }
    let alpha = pointwise_restrict(&a, 1.0, 1.0, 127)?;
    let norm = hankel_schatten(&alpha, 64, SchattenP::Infinity)?;
    let exact = (-1f64).exp() / (1.0 - (-2f64).exp());
    let d = (norm - exact).abs();
    outcome(
        worst <= 1e-6 && d <= 1e-8,
        format!("max |S_p − 1/2| = {worst:.2e}; ‖H(R a)‖ = {norm:.12} vs e^-1/(1−e^-2) = {exact:.12} ({d:.1e})"),
    )
}

fn hilbert_schmidt_identities() -> Result<Outcome> {
    let mut cont: f64 = 0.0;
    let mut disc: f64 = 0.0;
    for (a, dil) in compact_catalog() {
        let n = if matches!(dil, Dilation::Auto) { 128 } else { 64 };
        let g = schatten_via_galerkin_with(&a, SchattenP::Finite(2.0), n, dil)?.value;
        cont = cont.max(rel(g, hs_integral(&a)?));
        for lambda in [0.5, 1.0] {
            let alpha = pointwise_restrict(&a, lambda, 1.0, 127)?;
            let svd = hankel_schatten(&alpha, 64, SchattenP::Finite(2.0))?;
            let count = hilbert_schmidt_antidiagonal(&alpha, 64)?;
            if count > 0.0 {
                disc = disc.max(rel(svd * svd, count));
            }
        }
    }
    outcome(cont <= 1e-6 && disc <= 1e-6, format!("continuous rel {cont:.2e}, discrete rel {disc:.2e}"))
}

fn counterexample_sharpness() -> Result<Outcome> {
    let sizes = [2u32, 4, 8, 16, 32, 64];
    let mut exact_one = true;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut cross: f64 = 0.0;
    for &n in &sizes {
        let a = counterexample_kernel(n)?;
        let alpha = pointwise_restrict(&a, 1.0, 1.0, 31)?;
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            exact_one &= hankel_schatten(&alpha, 16, sp(p))? == 1.0;
        }
        let hs = hs_integral(&a)?;
        if n <= 4 {
            let g = schatten_via_galerkin_with(&a, SchattenP::Finite(2.0), 128, Dilation::Auto)?.value;
            cross = cross.max(rel(g, hs));
        }
        xs.push((n as f64).ln());
        ys.push((hs * hs).ln());
    }
    let slope = least_squares_slope(&xs, &ys);
    outcome(
        exact_one && (slope + 1.0).abs() <= 0.1,
        format!("‖H(R a^(N))‖_p = 1 exactly: {exact_one}; slope of ‖H(a^(N))‖₂² = {slope:.4}; Galerkin cross-check rel {cross:.1e}"),
    )
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn restriction_envelope(n: usize) -> Result<(f64, bool)> {
    let mut env: f64 = 0.0;
    let mut finite = true;
    for (a, dil) in compact_catalog() {
        for p in [0.5, 1.0] {
            let reference = operator_schatten(&a, p, dil, n)?;
            for lambda in [0.5, 1.0, 2.0] {
                let alpha = pointwise_restrict(&a, lambda, 1.0, 2 * n - 1)?;
                let r = hankel_schatten(&alpha, n, sp(p))? / ((1.0 + 1.0 / lambda) * reference);
                finite &= r.is_finite();
                env = env.max(r);
            }
        }
    }
    Ok((env, finite))
}

fn restriction_bound_suite() -> Result<Outcome> {
    let (e64, f64_) = restriction_envelope(64)?;
    let (e128, f128) = restriction_envelope(128)?;
    let change = rel(e128, e64);
    outcome(
        f64_ && f128 && change < 0.1,
        format!("envelope C_p: N=64 {e64:.6}, N=128 {e128:.6}, change {change:.2e}"),
    )
}

fn positive_constant_one() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for a in positive_catalog() {
        for p in [2.0, 4.0, f64::INFINITY] {
            let norm = laplace_schatten(&a, p)?;
            let g = schatten_via_galerkin(&a, sp(p), 128)?.value;
            cross = cross.max(rel(g, norm));
            for lambda in [2.0, 3.0, 5.0] {
                let alpha = pointwise_restrict(&a, lambda, 1.0, 255)?;
                worst = worst.max(hankel_schatten(&alpha, 128, sp(p))? / norm);
            }
        }
    }
    outcome(
        worst <= 1.0 + 1e-4,
        format!("max ‖H(R_λ a)‖_p/‖H(a)‖_p = {worst:.6}; Laplace vs Galerkin norm rel {cross:.1e}"),
    )
}

fn kernel_decay_bound() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut kernels: Vec<(KernelFunction, f64)> = vec![(kernel("exp"), 0.5), (KernelFunction::carleman(), PI)];
    for a in positive_catalog() {
        let n = laplace_schatten(&a, f64::INFINITY)?;
        kernels.push((a, n));
    }
    for (a, norm) in &kernels {
        for i in 0..=400 {
            let lambda = 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0);
            worst = worst.max(lambda * a.eval(lambda)? / (2.0 * norm));
        }
    }
    outcome(worst <= 1.0 + 1e-6, format!("max λ a(λ)/(2‖H(a)‖) = {worst:.6}"))
}

fn scaling_identity() -> Result<Outcome> {
    let cases = [
        (kernel("exp"), Dilation::Natural, 64),
        (kernel("texp"), Dilation::Natural, 64),
        (kernel("measure:atoms=(1,1)(2,0.5)"), Dilation::Natural, 64),
        (kernel("bump"), Dilation::Fixed(0.1), 128),
    ];
    let mut worst: f64 = 0.0;
    for (a, dil, n) in &cases {
        for p in [1.0, 2.0] {
            let base = schatten_via_galerkin_with(a, sp(p), *n, *dil)?.value;
            for gamma in [0.5, 2.0] {
                let scaled = scale_kernel(a, gamma)?;
                let v = gamma * schatten_via_galerkin_with(&scaled, sp(p), *n, *dil)?.value;
                worst = worst.max(rel(v, base));
            }
        }
    }
    outcome(worst <= 1e-5, format!("max rel |γ‖a_γ‖ − ‖a‖| = {worst:.2e}"))
}

fn factorization_identities() -> Result<Outcome> {
    let a = kernel("exp");
    let grid = UniformGrid::default();
    let avg = verify_factorization_identity(&a, &FactorizationInput::Averaging(WeightFunction::texp()), 16, grid)?;
    let conv = verify_factorization_identity(
        &a,
        &FactorizationInput::Convolution(WeightFunction::laguerre(), ConvolutionMeasure::laguerre()),
        16,
        grid,
    )?;
    outcome(
        avg.residual < 1e-6 && conv.residual < 1e-6,
        format!("averaging residual {:.2e}, Laguerre pair residual {:.2e}", avg.residual, conv.residual),
    )
}

fn laguerre_equivalence() -> Result<Outcome> {
    let fine = UniformGrid::new(1.0 / 2048.0, 32.0)?;
    let psi = Factor::laguerre_psi();
    let phi = build_phi_matrix(|t| (psi.eval)(t), &PhiFamily::Convolution(ConvolutionMeasure::laguerre()), 24, fine)?;
    let gram = phi.gram()?;
    let mut gram_err: f64 = 0.0;
    for j in 0..24 {
        for k in 0..24 {
            let want = if j == k { 1.0 } else { 0.0 };
            gram_err = gram_err.max((gram.get(j, k) - want).norm());
        }
    }
    let family = verify_laguerre_convolution_family(20, UniformGrid::default())?;
    let mut hankel: f64 = 0.0;
    let mut agree: f64 = 0.0;
    for (a, _) in compact_catalog() {
        let oracle = gram_double_integral(&a, 8)?;
        hankel = hankel.max(oracle.hankel_defect() / oracle.max_abs());
        let g = galerkin_coefficients(&a, 8)?.matrix();
        agree = agree.max(g.sub(&oracle).max_abs() / oracle.max_abs());
    }
    outcome(
        gram_err <= 1e-8 && family < 1e-6 && hankel < 1e-8 && agree < 1e-8,
        format!(
            "Gram error {gram_err:.2e}; max |T^j ψ − u_j| {family:.2e}; Hankel defect {hankel:.2e}; Galerkin vs double integral {agree:.2e}"
        ),
    )
}

/// `[min, max]` of Besov norm over Schatten norm across the compact catalog, for one `p`.
fn besov_envelope(params: &BesovParams, p: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, dil) in compact_catalog() {
        let r = besov_norm_continuous(&a, p, params)?.value / operator_schatten(&a, p, dil, 128)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

fn periodization_slack() -> Result<f64> {
    let fs = vec![
        LineFunction::real(|t| (-PI * t * t).exp(), LineDecay::Gaussian { c: 1.0, s: PI }),
        LineFunction::real(|t| 1.0 / (PI * t).cosh(), LineDecay::Exponential { c: 2.0, rate: PI }),
        LineFunction::real(|t| (-t.abs()).exp(), LineDecay::Exponential { c: 1.0, rate: 1.0 }),
        LineFunction::new(
            |t| Complex64::from_polar((-PI * t * t).exp(), 2.0 * PI * 0.3 * t),
            LineDecay::Gaussian { c: 1.0, s: PI },
        ),
        LineFunction::real(|t| 1.0 / (1.0 + t * t).powi(2), LineDecay::Power { c: 1.0, order: 4.0 }),
    ];
    let mut worst = f64::NEG_INFINITY;
    for f in &fs {
        let per = periodize(f, 1 << 14, 1e-12)?;
        for p in [0.5, 1.0] {
            let g = |t: f64| f.eval(t).norm().powf(p);
            let tol = Tolerance::new(1e-15, 1e-13);
            let mut line = 0.0;
            for (a, b) in [(-1.0, 0.0), (0.0, 1.0)] {
                line += integrate(g, a, b, tol)?.value;
            }
            line += integrate(g, 1.0, f64::INFINITY, tol)?.value + integrate(|t| g(-t), 1.0, f64::INFINITY, tol)?.value;
            worst = worst.max(per.lp_power(p) - line);
        }
    }
    Ok(worst)
}

fn besov_equivalence() -> Result<Outcome> {
    // The default sample step leaves 1e-6 of the p = 1/2 mass at the edge
    // of the line grid, so the comparison starts one refinement up.
    let base = BesovParams::default().refined();
    let mut stable = true;
    let mut parts = Vec::new();
    for p in [0.5, 1.0, 2.0] {
        let (lo, hi) = besov_envelope(&base, p)?;
        let (lo2, hi2) = besov_envelope(&base.refined(), p)?;
        stable &= rel(lo2, lo) < 0.1 && rel(hi2, hi) < 0.1;
        stable &= lo > 0.0 && hi.is_finite();
        parts.push(format!("p={p}: [{lo:.4}, {hi:.4}] → [{lo2:.4}, {hi2:.4}], C/c {:.2}", hi / lo));
    }
    // The constants are reported, not asserted.
    let slack = periodization_slack()?;
    outcome(
        stable && slack <= 1e-8,
        format!("{}; max ‖𝒫f‖_p^p − ‖f‖_p^p = {slack:.2e}", parts.join("; ")),
    )
}

fn converse_trend() -> Result<Outcome> {
    let a = kernel("exp");
    let mut values = Vec::new();
    for k in 0..=6 {
        let gamma = 2f64.powi(-k);
        let n = ((20.0 / gamma).ceil() as usize).min(1280);
        let alpha = pointwise_restrict(&scale_kernel(&a, gamma)?, 1.0, 1.0, 2 * n - 1)?;
        values.push(gamma * hankel_schatten(&alpha, n, SchattenP::Finite(1.0))?);
    }
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let last = *values.last().expect("seven values");
    let norm = 0.5;
    outcome(
        monotone && last <= 3.0 * norm && last >= norm / 3.0,
        format!(
            "γ‖H(R a_γ)‖₁ = [{}], ‖H(a)‖₁ = {norm}",
            values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn symbol_identity() -> Result<Outcome> {
    let a = kernel("exp");
    let mut worst: f64 = 0.0;
    let mut raw: f64 = 0.0;
    for xi in [Complex64::new(0.3, 0.2), Complex64::new(0.0, 1.0)] {
        let c = check_symbol_periodization(&a, xi, 50)?;
        worst = worst.max(c.residual);
        raw = raw.max(c.raw_residual);
    }
    outcome(
        worst < 1e-8,
        format!("residual {worst:.2e} (without the a(0+)/2 boundary term: {raw:.2e})"),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 12] = [
        ("rank-one oracle", rank_one_oracle),
        ("Hilbert-Schmidt identities", hilbert_schmidt_identities),
        ("counterexample sharpness", counterexample_sharpness),
        ("restriction bound envelope", restriction_bound_suite),
        ("positive kernels, constant one", positive_constant_one),
        ("kernel decay bound", kernel_decay_bound),
        ("scaling identity", scaling_identity),
        ("factorization identities", factorization_identities),
        ("Laguerre unitary equivalence", laguerre_equivalence),
        ("Besov-Schatten equivalence", besov_equivalence),
        ("converse trend", converse_trend),
        ("symbol identity", symbol_identity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {id:>2} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
