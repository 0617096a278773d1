//! The same coefficient sequences reached by independent routes.

use hankel_core::kernel::KernelFunction;
use hankel_core::laguerre::galerkin_coefficients;
use hankel_core::restriction::{
    convolution_restrict, ConvolutionMeasure, ConvolutionOptions, RestrictionSpec, WeightFunction,
};

#[test]
fn laguerre_pair_restriction_is_galerkin_bilinear_form() {
    for label in ["exp", "texp", "bump", "measure:atoms=(1,1)(2,0.5)"] {
        let a = KernelFunction::parse(label).unwrap();
        let conv = convolution_restrict(
            &a,
            &WeightFunction::laguerre(),
            &ConvolutionMeasure::laguerre(),
            16,
            &ConvolutionOptions::default(),
        )
        .unwrap();
        let bilinear = galerkin_coefficients(&a, 8).unwrap().bilinear();
        let scale = bilinear.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (j, b) in bilinear.iter().enumerate().take(15) {
            let c = conv.coefficients.get(j);
            assert!((c.re - b).abs() <= 1e-9 * scale && c.im.abs() <= 1e-9 * scale, "{label} j={j}: {c} vs {b}");
        }
    }
}

#[test]
fn averaging_with_texp_matches_closed_form() {
    // ∫_j^∞ e^{-t}(t−j)e^{-(t−j)} dt = e^{-j}/4.
    let spec = RestrictionSpec::parse("avg:phi=te^{-t}").unwrap();
    let alpha = spec.apply(&KernelFunction::parse("exp").unwrap(), 20).unwrap();
    for j in 0..20 {
        assert!((alpha.get(j).re - (-(j as f64)).exp() / 4.0).abs() < 1e-12);
    }
}

#[test]
fn unit_shift_family_is_pointwise_averaging() {
    // T^j φ = φ(· − j), so convolution restriction with the unit shift equals averaging.
    let a = KernelFunction::parse("texp").unwrap();
    let phi = WeightFunction::texp();
    let conv = convolution_restrict(&a, &phi, &ConvolutionMeasure::unit_shift(), 12, &ConvolutionOptions::default())
        .unwrap()
        .coefficients;
    let avg = RestrictionSpec::Averaging(phi).apply(&a, 12).unwrap();
    for j in 0..12 {
        assert!((conv.get(j) - avg.get(j)).norm() < 1e-8, "j={j}");
    }
}
