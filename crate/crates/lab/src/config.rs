//! Experiment configuration files.
//!
//! The format is line based, see `FORMATS.md` at the crate root for the
//! grammar.  A file only overrides the defaults of the experiment it names.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hankel_core::kernel::KernelFunction;
use hankel_core::linalg::SchattenP;
use hankel_core::restriction::RestrictionSpec;
use hankel_core::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Parameters of one experiment run.  Lists that an experiment does not use
/// are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub kernels: Vec<String>,
    pub restrictions: Vec<String>,
    /// Schatten exponents; `inf` for the operator norm.
    pub p: Vec<SchattenLabel>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Points of the upper half-plane, `(re, im)`.
    pub xi: Vec<(f64, f64)>,
    /// Tolerance of the pinned checks; `None` keeps the experiment default.
    pub tolerance: Option<f64>,
    /// Relative jitter applied to generated λ grids.
    pub jitter: f64,
    pub seed: u64,
    /// Not part of the hash.
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchattenLabel(pub f64);

impl SchattenLabel {
    pub fn schatten(self) -> SchattenP {
        if self.0.is_infinite() {
            SchattenP::Infinity
        } else {
            SchattenP::Finite(self.0)
        }
    }

    pub fn label(self) -> String {
        if self.0.is_infinite() {
            "inf".into()
        } else {
            format!("{}", self.0)
        }
    }
}

impl ExperimentConfig {
    pub fn empty(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            kernels: Vec::new(),
            restrictions: Vec::new(),
            p: Vec::new(),
            lambda: Vec::new(),
            gamma: Vec::new(),
            sizes: Vec::new(),
            xi: Vec::new(),
            tolerance: None,
            jitter: 0.0,
            seed: 0,
            output_dir: None,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        let mut s = String::with_capacity(64);
        for b in digest {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }

    pub fn kernel_functions(&self) -> Result<Vec<KernelFunction>, ConfigError> {
        self.kernels
            .iter()
            .map(|l| KernelFunction::parse(l).map_err(|e| ConfigError::Invalid(format!("kernel {l}: {e}"))))
            .collect()
    }

    pub fn restriction_specs(&self) -> Result<Vec<RestrictionSpec>, ConfigError> {
        self.restrictions
            .iter()
            .map(|l| RestrictionSpec::parse(l).map_err(|e| ConfigError::Invalid(format!("restriction {l}: {e}"))))
            .collect()
    }

    pub fn xi_points(&self) -> Vec<Complex64> {
        self.xi.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
    }

    /// Checks that every label resolves and every numeric entry is in range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kernel_functions()?;
        self.restriction_specs()?;
        let bad = |what: &str, v: &dyn std::fmt::Display| Err(ConfigError::Invalid(format!("{what} {v} out of range")));
        for p in &self.p {
            if !(p.0 > 0.0) {
                return bad("p", &p.0);
            }
        }
        for &l in self.lambda.iter().chain(&self.gamma) {
            if !(l > 0.0 && l.is_finite()) {
                return bad("λ/γ", &l);
            }
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n == 0) {
            return bad("N", &n);
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return bad("tolerance", &t);
            }
        }
        if !(self.jitter >= 0.0 && self.jitter < 1.0) {
            return bad("jitter", &self.jitter);
        }
        Ok(())
    }

    pub fn load(path: &Path, defaults: Self) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_text(&text, &path.display().to_string(), defaults)
    }

    /// Applies the entries of `text` on top of `defaults`.
    pub fn from_text(text: &str, origin: &str, defaults: Self) -> Result<Self, ConfigError> {
        let mut cfg = defaults;
        let mut section = String::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| ConfigError::Syntax { path: origin.to_string(), line: i + 1, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(err("entry before the first section header".into()));
            }
            let keys = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !keys.contains(&key) {
                return Err(err(format!("unknown key {key} in [{section}]")));
            }
            if !seen.insert(format!("{section}.{key}")) {
                return Err(err(format!("duplicate key {key} in [{section}]")));
            }
            cfg.apply(&section, key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        match (section, key) {
            ("experiment", "name") => {
                if value != self.experiment {
                    return Err(format!("file is for experiment {value}, running {}", self.experiment));
                }
            }
            ("experiment", "seed") => self.seed = value.parse().map_err(|_| format!("bad seed {value}"))?,
            ("experiment", "jitter") => self.jitter = parse_number(value)?,
            ("kernels", "labels") => self.kernels = labels(value),
            ("restrictions", "specs") => self.restrictions = labels(value),
            ("grid", "p") => self.p = numbers(value)?.into_iter().map(SchattenLabel).collect(),
            ("grid", "lambda") => self.lambda = numbers(value)?,
            ("grid", "gamma") => self.gamma = numbers(value)?,
            ("grid", "N") => {
                self.sizes = numbers(value)?
                    .into_iter()
                    .map(|v| if v.fract() == 0.0 && v >= 0.0 { Ok(v as usize) } else { Err(format!("N must be an integer, got {v}")) })
                    .collect::<Result<_, _>>()?
            }
            ("grid", "xi") => self.xi = value.split(';').map(|s| parse_complex(s.trim())).collect::<Result<_, _>>()?,
            ("tolerances", "pinned") => self.tolerance = Some(parse_number(value)?),
            ("output", "dir") => self.output_dir = Some(PathBuf::from(value)),
            _ => unreachable!("keys are checked against SECTIONS"),
        }
        Ok(())
    }

    /// The configuration written back in file form.
    pub fn to_text(&self) -> String {
        let num = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        let mut s = format!("[experiment]\nname = {}\nseed = {}\njitter = {}\n", self.experiment, self.seed, self.jitter);
        if !self.kernels.is_empty() {
            s += &format!("\n[kernels]\nlabels = {}\n", self.kernels.join("; "));
        }
        if !self.restrictions.is_empty() {
            s += &format!("\n[restrictions]\nspecs = {}\n", self.restrictions.join("; "));
        }
        s += "\n[grid]\n";
        if !self.p.is_empty() {
            s += &format!("p = {}\n", self.p.iter().map(|p| p.label()).collect::<Vec<_>>().join(", "));
        }
        if !self.lambda.is_empty() {
            s += &format!("lambda = {}\n", num(&self.lambda));
        }
        if !self.gamma.is_empty() {
            s += &format!("gamma = {}\n", num(&self.gamma));
        }
        if !self.sizes.is_empty() {
            s += &format!("N = {}\n", self.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "));
        }
        if !self.xi.is_empty() {
            s += &format!("xi = {}\n", self.xi.iter().map(|(r, i)| format!("{r}{i:+}i")).collect::<Vec<_>>().join("; "));
        }
        if let Some(t) = self.tolerance {
            s += &format!("\n[tolerances]\npinned = {t:e}\n");
        }
        if let Some(d) = &self.output_dir {
            s += &format!("\n[output]\ndir = {}\n", d.display());
        }
        s
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("experiment", &["name", "seed", "jitter"]),
    ("kernels", &["labels"]),
    ("restrictions", &["specs"]),
    ("grid", &["p", "lambda", "gamma", "N", "xi"]),
    ("tolerances", &["pinned"]),
    ("output", &["dir"]),
];

fn labels(value: &str) -> Vec<String> {
    value.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn numbers(value: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = value.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()).map(parse_number).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

/// Decimal, `inf`, a fraction `a/b` or a power `2^-k`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s == "inf" || s == "∞" {
        return Ok(f64::INFINITY);
    }
    if let Some((a, b)) = s.split_once('/') {
        return Ok(parse_number(a)? / parse_number(b)?);
    }
    if let Some((a, b)) = s.split_once('^') {
        return Ok(parse_number(a)?.powf(parse_number(b)?));
    }
    s.parse::<f64>().map_err(|_| format!("not a number: {s}"))
}

/// `0.3+0.2i`, `i`, `-0.5+2i`, `1i`.
pub fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return Ok((parse_number(&t)?, 0.0));
    };
    let split = body.char_indices().skip(1).filter(|&(_, c)| c == '+' || c == '-').map(|(i, _)| i).last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => parse_number(v.trim_start_matches('+'))?,
    };
    Ok((parse_number(re)?, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_complex() {
        assert_eq!(parse_number("1/2").unwrap(), 0.5);
        assert_eq!(parse_number("2^-3").unwrap(), 0.125);
        assert_eq!(parse_number("inf").unwrap(), f64::INFINITY);
        assert!(parse_number("x").is_err());
        assert_eq!(parse_complex("0.3+0.2i").unwrap(), (0.3, 0.2));
        assert_eq!(parse_complex("i").unwrap(), (0.0, 1.0));
        assert_eq!(parse_complex("-1-i").unwrap(), (-1.0, -1.0));
        assert_eq!(parse_complex("2.5").unwrap(), (2.5, 0.0));
    }

    #[test]
    fn overrides_and_errors() {
        let text = "# demo\n[experiment]\nname = demo\n[kernels]\nlabels = exp; measure:atoms=(1,1)(2,0.5)\n[grid]\np = 1/2, 1, inf\nN = 16, 32\n";
        let cfg = ExperimentConfig::from_text(text, "t", ExperimentConfig::empty("demo")).unwrap();
        assert_eq!(cfg.kernels.len(), 2);
        assert_eq!(cfg.p[2].schatten(), SchattenP::Infinity);
        assert_eq!(cfg.sizes, vec![16, 32]);
        let round = ExperimentConfig::from_text(&cfg.to_text(), "r", ExperimentConfig::empty("demo")).unwrap();
        assert_eq!(round, cfg);
        assert_eq!(round.hash(), cfg.hash());

        for bad in [
            "labels = exp",
            "[grid]\nq = 1",
            "[nowhere]",
            "[grid]\nN = 1.5",
            "[kernels]\nlabels = nonsense",
            "[experiment]\nname = other",
            "[grid]\np = 1\np = 2",
            "[grid]\nlambda = -1",
        ] {
            assert!(ExperimentConfig::from_text(bad, "t", ExperimentConfig::empty("demo")).is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = ExperimentConfig::empty("x");
        let h = a.hash();
        a.output_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
    }
}
