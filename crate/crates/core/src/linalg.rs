//! Finite Hankel matrices `{α(j+k)}`, their singular values and Schatten norms.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Finite coefficient sequence `α(0..M)` with a provenance note.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelCoefficients {
    entries: Vec<Complex64>,
    pub origin: String,
}

impl HankelCoefficients {
    pub fn new(entries: Vec<Complex64>, origin: impl Into<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Length { needed: 1, have: 0 });
        }
        if let Some(i) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numeric(format!("coefficient {i} is not finite")));
        }
        Ok(Self { entries, origin: origin.into() })
    }

    pub fn from_real(entries: &[f64], origin: impl Into<String>) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(), origin)
    }

    pub fn from_fn(len: usize, origin: impl Into<String>, f: impl Fn(usize) -> Complex64) -> Result<Self> {
        Self::new((0..len).map(f).collect(), origin)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.entries.get(j).copied().unwrap_or_default()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::default(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..rows {
            for k in 0..cols {
                data.push(f(j, k));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.cols + k]
    }

    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        self.data[j * self.cols + k] = v;
    }

    pub fn dimension(&self) -> usize {
        self.rows
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise difference; panics on shape mismatch.
    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Largest `|M[j][k] − M[j'][k']|` over pairs on a common anti-diagonal.
    pub fn hankel_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for d in 0..(self.rows + self.cols).saturating_sub(1) {
            let mut first = None;
            for j in 0..self.rows {
                if d < j || d - j >= self.cols {
                    continue;
                }
                let v = self.get(j, d - j);
                match first {
                    None => first = Some(v),
                    Some(f) => worst = worst.max((v - f).norm()),
                }
            }
        }
        worst
    }

    fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|j| (0..j).all(|k| self.get(j, k) == self.get(k, j)))
    }
}

/// `N×N` matrix `(α(j+k))`, `0 ≤ j,k < N`.
pub fn hankel_matrix(alpha: &HankelCoefficients, n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::Domain("matrix dimension must be positive".into()));
    }
    let needed = 2 * n - 1;
    if alpha.len() < needed {
        return Err(Error::Length { needed, have: alpha.len() });
    }
    Ok(DenseMatrix::from_fn(n, n, |j, k| alpha.entries[j + k]))
}

/// Non-increasing singular values of an `N×N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub dimension: usize,
}

impl SingularSpectrum {
    pub fn new(mut values: Vec<f64>, dimension: usize) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Numeric("singular values must be finite and non-negative".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values, dimension })
    }

    pub fn top(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Drop values below the numerical-rank floor `N·ε·s₁`.  Quadrature and
    /// rounding noise at that level otherwise dominates `S_p` for `p < 1`.
    pub fn numerical(&self) -> SingularSpectrum {
        let floor = self.dimension.max(1) as f64 * f64::EPSILON * self.top();
        SingularSpectrum {
            values: self.values.iter().copied().filter(|&v| v > floor).collect(),
            dimension: self.dimension,
        }
    }
}

/// Schatten exponent; `Infinity` is the operator norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchattenP {
    Finite(f64),
    Infinity,
}

impl SchattenP {
    pub fn finite(p: f64) -> Result<Self> {
        if p > 0.0 && p.is_finite() {
            Ok(SchattenP::Finite(p))
        } else {
            Err(Error::Domain(format!("Schatten exponent must be positive, got {p}")))
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(SchattenP::Infinity),
            t => SchattenP::finite(crate::kernel::parse_num(t)?),
        }
    }

    /// The exponent as a float for reporting; `None` for the operator norm.
    pub fn value(&self) -> Option<f64> {
        match self {
            SchattenP::Finite(p) => Some(*p),
            SchattenP::Infinity => None,
        }
    }
}

impl fmt::Display for SchattenP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchattenP::Finite(p) => write!(f, "{p}"),
            SchattenP::Infinity => f.write_str("inf"),
        }
    }
}

/// Singular values.  Real symmetric input (every real Hankel matrix) goes
/// through the symmetric eigensolver, `s = |λ|`; general input through SVD.
pub fn singular_values(m: &DenseMatrix) -> Result<SingularSpectrum> {
    if m.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let n = m.rows.min(m.cols);
    if m.is_real() {
        let r = DMatrix::from_fn(m.rows, m.cols, |j, k| m.get(j, k).re);
        let vals: Vec<f64> = if m.is_symmetric() {
            r.symmetric_eigenvalues().iter().map(|v| v.abs()).collect()
        } else {
            r.singular_values().iter().copied().collect()
        };
        return SingularSpectrum::new(vals, n);
    }
    let c = DMatrix::from_fn(m.rows, m.cols, |j, k| m.get(j, k));
    SingularSpectrum::new(c.singular_values().iter().copied().collect(), n)
}

/// `(Σ s_n^p)^{1/p}`, or `s₁` for `p = ∞`.
pub fn schatten_norm(s: &SingularSpectrum, p: SchattenP) -> Result<f64> {
    match p {
        SchattenP::Infinity => Ok(s.top()),
        SchattenP::Finite(p) => {
            if !(p > 0.0) {
                return Err(Error::Domain(format!("Schatten exponent must be positive, got {p}")));
            }
            let top = s.top();
            if top == 0.0 {
                return Ok(0.0);
            }
            // Scale by the top value to avoid under/overflow for small p.
            let sum: f64 = s.values.iter().map(|v| (v / top).powf(p)).sum();
            Ok(top * sum.powf(1.0 / p))
        }
    }
}

/// Schatten norm of the `N×N` Hankel truncation after the numerical-rank floor.
pub fn hankel_schatten(alpha: &HankelCoefficients, n: usize, p: SchattenP) -> Result<f64> {
    let s = singular_values(&hankel_matrix(alpha, n)?)?;
    schatten_norm(&s.numerical(), p)
}

/// `Σ_{n=0}^{2N−2} min(n+1, 2N−1−n)|α(n)|²`, the squared Frobenius norm of
/// the `N×N` Hankel truncation counted by anti-diagonals.
pub fn hilbert_schmidt_antidiagonal(alpha: &HankelCoefficients, n: usize) -> Result<f64> {
    let needed = 2 * n - 1;
    if alpha.len() < needed {
        return Err(Error::Length { needed, have: alpha.len() });
    }
    Ok((0..needed).map(|k| (k + 1).min(2 * n - 1 - k) as f64 * alpha.entries[k].norm_sqr()).sum())
}

/// Schatten norms of successive truncations.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationStudy {
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    /// Relative change from the previous size.
    pub changes: Vec<f64>,
    /// Last relative change below [`TRUNCATION_CONVERGED`].
    pub converged: bool,
}

pub const TRUNCATION_CONVERGED: f64 = 1e-6;

/// Schatten-`p` norms of the `N×N` truncations for each `N` in `sizes`.
pub fn truncation_study(source: impl Fn(usize) -> Complex64, sizes: &[usize], p: SchattenP) -> Result<TruncationStudy> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("truncation sizes must be non-empty and increasing".into()));
    }
    let largest = *sizes.last().unwrap();
    let alpha = HankelCoefficients::from_fn(2 * largest - 1, "truncation study", &source)?;
    let mut values = Vec::with_capacity(sizes.len());
    for &n in sizes {
        values.push(hankel_schatten(&alpha, n, p)?);
    }
    let changes: Vec<f64> = values
        .windows(2)
        .map(|w| if w[1] == 0.0 { 0.0 } else { (w[1] - w[0]).abs() / w[1].abs() })
        .collect();
    let converged = changes.last().is_some_and(|&c| c < TRUNCATION_CONVERGED) || (sizes.len() == 1 && values[0] == 0.0);
    Ok(TruncationStudy { sizes: sizes.to_vec(), values, changes, converged })
}

/// Operator norm reported from truncations of a non-compact operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNormEstimate {
    /// Largest truncation norm: a rigorous lower bound.
    pub lower_bound: f64,
    /// Richardson extrapolation under the model `L − c/ln²N`.
    pub estimate: f64,
    pub extrapolated: bool,
}

/// Lower bound and extrapolated limit of `‖H_N‖` from the two largest sizes.
pub fn operator_norm_estimate(source: impl Fn(usize) -> Complex64, sizes: &[usize]) -> Result<OperatorNormEstimate> {
    let study = truncation_study(source, sizes, SchattenP::Infinity)?;
    let k = study.values.len();
    let lower = study.values[k - 1];
    if k < 2 {
        return Ok(OperatorNormEstimate { lower_bound: lower, estimate: lower, extrapolated: false });
    }
    let (n1, n2) = (sizes[k - 2] as f64, sizes[k - 1] as f64);
    let (v1, v2) = (study.values[k - 2], study.values[k - 1]);
    let (l1, l2) = (n1.ln().powi(2), n2.ln().powi(2));
    let est = (v2 * l2 - v1 * l1) / (l2 - l1);
    Ok(OperatorNormEstimate { lower_bound: lower, estimate: est.max(lower), extrapolated: true })
}
