use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// One parameter tuple and what was measured for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub config_hash: String,
    /// Position in the deterministic tuple order.
    pub index: usize,
    pub kernel: String,
    pub restriction: String,
    /// Schatten exponent, `inf` for the operator norm.
    pub p: Option<String>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<usize>,
    pub quantity: String,
    pub value: Option<f64>,
    /// Independent value the measurement is compared with.
    pub reference: Option<f64>,
    /// The inequality's right-hand side for this tuple, without unknown constants.
    pub bound: Option<f64>,
    /// `value / bound`.
    pub ratio: Option<f64>,
    pub tolerance: Option<f64>,
    /// Pass/fail is meaningful only when the constant is known.
    pub pinned: bool,
    pub pass: Option<bool>,
    pub convergence: String,
    pub details: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub wall_ms: f64,
}

impl ExperimentRecord {
    pub fn new(quantity: &str) -> Self {
        Self {
            experiment: String::new(),
            config_hash: String::new(),
            index: 0,
            kernel: String::new(),
            restriction: String::new(),
            p: None,
            lambda: None,
            gamma: None,
            n: None,
            quantity: quantity.to_string(),
            value: None,
            reference: None,
            bound: None,
            ratio: None,
            tolerance: None,
            pinned: false,
            pass: None,
            convergence: String::new(),
            details: BTreeMap::new(),
            error: None,
            wall_ms: 0.0,
        }
    }

    pub fn kernel(mut self, k: impl Into<String>) -> Self {
        self.kernel = k.into();
        self
    }

    pub fn restriction(mut self, r: impl Into<String>) -> Self {
        self.restriction = r.into();
        self
    }

    pub fn p(mut self, p: crate::config::SchattenLabel) -> Self {
        self.p = Some(p.label());
        self
    }

    pub fn lambda(mut self, l: f64) -> Self {
        self.lambda = Some(l);
        self
    }

    pub fn gamma(mut self, g: f64) -> Self {
        self.gamma = Some(g);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn detail(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.to_string(), v);
        self
    }

    /// Marks the record as a pinned check `value ≤ bound·(1 + tol)`.
    pub fn pin_upper(mut self, tol: f64) -> Self {
        self.pinned = true;
        self.tolerance = Some(tol);
        self.pass = Some(matches!((self.value, self.bound), (Some(v), Some(b)) if v <= b * (1.0 + tol)));
        self
    }

    /// Marks the record as a pinned check `|value − reference| ≤ tol·|reference|`.
    pub fn pin_relative(mut self, tol: f64) -> Self {
        self.pinned = true;
        self.tolerance = Some(tol);
        self.pass = Some(matches!((self.value, self.reference), (Some(v), Some(r)) if (v - r).abs() <= tol * r.abs()));
        self
    }

    /// Marks the record as a pinned check `value ≤ tol`.
    pub fn pin_below(mut self, tol: f64) -> Self {
        self.pinned = true;
        self.tolerance = Some(tol);
        self.pass = Some(matches!(self.value, Some(v) if v <= tol));
        self
    }

    pub fn with_bound(mut self, value: f64, bound: f64) -> Self {
        self.value = Some(value);
        self.bound = Some(bound);
        self.ratio = Some(value / bound);
        self
    }

    pub fn failed(mut self, pinned: bool, err: impl std::fmt::Display) -> Self {
        self.error = Some(err.to_string());
        self.pinned = pinned;
        self.pass = pinned.then_some(false);
        self
    }
}

/// Runs `f` and stamps the wall-clock time; an error becomes a failed record
/// built from `template`.
pub fn timed(
    template: ExperimentRecord,
    pinned: bool,
    f: impl FnOnce(ExperimentRecord) -> hankel_core::Result<ExperimentRecord>,
) -> ExperimentRecord {
    let start = Instant::now();
    let mut r = match f(template.clone()) {
        Ok(r) => r,
        Err(e) => template.failed(pinned, e),
    };
    r.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    r
}
