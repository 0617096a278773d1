//! The operators `Φᵢ: x ↦ Σ_j x(j)φᵢ,ⱼ` and the identity `Φ₂* H(a) Φ₁ = H(α)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::convolution::{
    convolution_restrict, iterate_family, sample_kernel, ConvolutionOptions, GridFunction, HypothesisReport, TAIL_LIMIT,
};
use super::weight::{ConvolutionMeasure, Factor, WeightFunction};
use super::averaging_restrict;
use crate::error::{Error, Result};
use crate::kernel::KernelFunction;
use crate::linalg::{hankel_matrix, DenseMatrix};
use crate::periodize::{periodization_sup, LineFunction};
use crate::quad::UniformGrid;

const MAX_FACTORIZATION_SIZE: usize = 64;

/// How the columns of `Φ` are generated from the first one.
#[derive(Debug, Clone)]
pub enum PhiFamily {
    /// Integer translates `φ(· − j)`.
    Shift,
    /// `T_ν^j φ`.
    Convolution(ConvolutionMeasure),
}

impl PhiFamily {
    fn measure(&self) -> ConvolutionMeasure {
        match self {
            Self::Shift => ConvolutionMeasure::unit_shift(),
            Self::Convolution(nu) => nu.clone(),
        }
    }
}

/// Grid samples of the columns of `Φ`.
#[derive(Debug, Clone)]
pub struct PhiMatrix {
    pub grid: UniformGrid,
    pub columns: Vec<GridFunction>,
}

impl PhiMatrix {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `∫ f conj(g)` for two columns, with the quadrature started where both
    /// are non-zero.
    pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
        let later = if f.start >= g.start { f } else { g };
        let w = later.weights()?;
        Ok((later.start..f.values.len()).map(|i| f.values[i] * g.values[i].conj() * w[i]).sum())
    }

    /// `G[j][k] = ⟨φ_k, φ_j⟩`.
    pub fn gram(&self) -> Result<DenseMatrix> {
        let n = self.len();
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                g.set(j, k, Self::pairing(&self.columns[k], &self.columns[j])?);
            }
        }
        Ok(g)
    }

    /// Samples times quadrature weights, grid points by columns, so that
    /// `Mᵀ g ≈ (∫ φ_j g)_j`.
    pub fn weighted(&self) -> Result<DenseMatrix> {
        let rows = self.grid.len;
        let mut m = DenseMatrix::zeros(rows, self.len());
        for (j, col) in self.columns.iter().enumerate() {
            let w = col.weights()?;
            for i in col.start..rows {
                m.set(i, j, col.values[i] * w[i]);
            }
        }
        Ok(m)
    }
}

/// Columns `φᵢ, Tφᵢ, …, T^{J−1}φᵢ` of `Φᵢ` on `grid`.
pub fn build_phi_matrix(
    phi: impl Fn(f64) -> Complex64,
    family: &PhiFamily,
    columns: usize,
    grid: UniformGrid,
) -> Result<PhiMatrix> {
    if columns == 0 {
        return Err(Error::Domain("Φ needs at least one column".into()));
    }
    let cols = iterate_family(phi, &family.measure(), grid, columns - 1)?;
    for (j, c) in cols.iter().enumerate() {
        let tail = c.tail_fraction();
        if tail > TAIL_LIMIT {
            return Err(Error::Range(format!(
                "column {j} keeps {tail:.2e} of its norm in the last sixteenth of [0, {}]",
                grid.range()
            )));
        }
    }
    Ok(PhiMatrix { grid, columns: cols })
}

/// The weight whose factorization is tested.
#[derive(Debug, Clone)]
pub enum FactorizationInput {
    Averaging(WeightFunction),
    Convolution(WeightFunction, ConvolutionMeasure),
}

impl FactorizationInput {
    fn weight(&self) -> &WeightFunction {
        match self {
            Self::Averaging(w) | Self::Convolution(w, _) => w,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorizationCheck {
    /// `max |Φ₂*H(a)Φ₁ − H(α)|` entrywise.
    pub residual: f64,
    /// `[⟨H(a)Φ₁e_j, Φ₂e_k⟩]`.
    pub pairing: DenseMatrix,
    pub reference: DenseMatrix,
    pub hypotheses: Option<HypothesisReport>,
}

/// Applies `y(s) = ∫ a(t+s) x(t) dt` on the grid by one FFT correlation.
struct HankelApplier {
    len: usize,
    size: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl HankelApplier {
    fn new(a: &KernelFunction, grid: UniformGrid) -> Result<Self> {
        let len = grid.len;
        let mut samples = sample_kernel(a, grid, 2 * len - 1)?;
        let size = (3 * len).next_power_of_two();
        samples.resize(size, Complex64::default());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        forward.process(&mut samples);
        Ok(Self { len, size, kernel_hat: samples, forward, inverse })
    }

    /// `x` already carries the quadrature weights.
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len;
        let mut buf = vec![Complex64::default(); self.size];
        for (i, v) in x.iter().enumerate() {
            buf[n - 1 - i] = *v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        (0..n).map(|l| buf[l + n - 1] * scale).collect()
    }
}

/// Entrywise residual of `Φ₂* H(a) Φ₁ = H(α)` at size `n ≤ 64`.  The pairing
/// is computed from the sampled kernel `a(t+s)`; `α` comes from the
/// restriction map, by adaptive quadrature in the averaging case.
pub fn verify_factorization_identity(
    a: &KernelFunction,
    input: &FactorizationInput,
    n: usize,
    grid: UniformGrid,
) -> Result<FactorizationCheck> {
    if n == 0 || n > MAX_FACTORIZATION_SIZE {
        return Err(Error::Domain(format!("factorization size {n} outside 1..={MAX_FACTORIZATION_SIZE}")));
    }
    let w = input.weight();
    let (f1, f2) = w
        .factorization
        .as_ref()
        .ok_or_else(|| Error::Hypothesis(format!("weight {} carries no factorization", w.label)))?;
    let (family, alpha, hypotheses) = match input {
        FactorizationInput::Averaging(w) => (PhiFamily::Shift, averaging_restrict(a, w, 2 * n - 1)?, None),
        FactorizationInput::Convolution(w, nu) => {
            let opts = ConvolutionOptions { step: grid.step, range: Some(grid.range()), force: true };
            let r = convolution_restrict(a, w, nu, 2 * n - 1, &opts)?;
            (PhiFamily::Convolution(nu.clone()), r.coefficients, Some(r.hypotheses))
        }
    };
    let reference = hankel_matrix(&alpha, n)?;
    let phi1 = build_phi_matrix(|t| factor_eval(f1, t), &family, n, grid)?;
    let phi2 = build_phi_matrix(|t| factor_eval(f2, t), &family, n, grid)?;
    let applier = HankelApplier::new(a, grid)?;
    let mut pairing = DenseMatrix::zeros(n, n);
    for (j, c1) in phi1.columns.iter().enumerate() {
        let w1 = c1.weights()?;
        let x: Vec<Complex64> = c1.values.iter().zip(&w1).map(|(v, w)| v * w).collect();
        let y = applier.apply(&x);
        let ycol = GridFunction { grid, start: 0, values: y };
        for (k, c2) in phi2.columns.iter().enumerate() {
            pairing.set(j, k, PhiMatrix::pairing(&ycol, c2)?);
        }
    }
    let residual = pairing.sub(&reference).max_abs();
    if !residual.is_finite() {
        return Err(Error::Numeric("factorization residual is not finite".into()));
    }
    Ok(FactorizationCheck { residual, pairing, reference, hypotheses })
}

fn factor_eval(f: &Factor, t: f64) -> Complex64 {
    (f.eval)(t)
}

/// `‖Φ‖ = ‖𝒫(|ψ̌|²)‖_{L^∞(𝕋)}^{1/2}` for the translation family of `ψ`.
pub fn phi_operator_norm(psi: &Factor) -> Result<f64> {
    phi_operator_norm_from_symbol(&psi.abs_sq_symbol())
}

/// As [`phi_operator_norm`], from `|ψ̌|²` directly.
pub fn phi_operator_norm_from_symbol(abs_sq: &LineFunction) -> Result<f64> {
    Ok(periodization_sup(abs_sq)?.value.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodize::LineDecay;
    use std::f64::consts::PI;

    #[test]
    fn shift_columns() {
        let g = UniformGrid::new(1.0 / 512.0, 32.0).unwrap();
        let m = build_phi_matrix(|t| Complex64::new((-t).exp(), 0.0), &PhiFamily::Shift, 2, g).unwrap();
        assert_eq!(m.columns[1].start, 512);
        for i in (0..g.len).step_by(101) {
            let t = g.t(i);
            let want = if t >= 1.0 { (-(t - 1.0)).exp() } else { 0.0 };
            assert!((m.columns[1].values[i].re - want).abs() < 1e-15);
        }
        let gram = m.gram().unwrap();
        assert!((gram.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((gram.get(0, 1).re - 0.5 * (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn short_grid_is_a_range_error() {
        let g = UniformGrid::new(1.0 / 64.0, 4.0).unwrap();
        let r = build_phi_matrix(|t| Complex64::new((-t).exp(), 0.0), &PhiFamily::Shift, 2, g);
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn texp_factorization_identity() {
        let a = KernelFunction::exp(1.0).unwrap();
        let c = verify_factorization_identity(&a, &FactorizationInput::Averaging(WeightFunction::texp()), 8, UniformGrid::default())
            .unwrap();
        assert!(c.residual < 1e-7, "residual {:e}", c.residual);
        for j in 0..8 {
            for k in 0..8 {
                let exact = (-((j + k) as f64)).exp() / 4.0;
                assert!((c.pairing.get(j, k).re - exact).abs() < 1e-7);
            }
        }
        let z = verify_factorization_identity(
            &KernelFunction::zero(),
            &FactorizationInput::Averaging(WeightFunction::texp()),
            4,
            UniformGrid::default(),
        )
        .unwrap();
        assert_eq!(z.residual, 0.0);
    }

    #[test]
    fn unfactored_weight_is_rejected() {
        let a = KernelFunction::exp(1.0).unwrap();
        let r = verify_factorization_identity(&a, &FactorizationInput::Averaging(WeightFunction::exp()), 4, UniformGrid::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn phi_norms() {
        let e = phi_operator_norm(&Factor::exp()).unwrap();
        let exact = 0.5 / 0.5f64.tanh();
        assert!(e * e >= exact - 1e-12 && e * e < exact + 3e-5, "{e}");
        assert!((1.0..=1.1).contains(&(e * e)));
        let ind = LineFunction::real(|x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 }, LineDecay::Compact { lo: 0.0, hi: 1.0 });
        assert!((phi_operator_norm_from_symbol(&ind).unwrap() - 1.0).abs() < 1e-15);
        // Translates of the Laguerre ψ: ‖Φ‖² = coth π, plus the power-tail bound.
        let l = phi_operator_norm(&Factor::laguerre_psi()).unwrap();
        let coth = 1.0 / PI.tanh();
        assert!(l * l >= coth - 1e-12 && l * l < coth + 5e-4, "{}", l * l);
    }
}
