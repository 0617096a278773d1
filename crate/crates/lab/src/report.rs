//! CSV, JSON and gnuplot output.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::record::ExperimentRecord;

pub const SCHEMA: &str = "hankel-lab/1";

/// Column order of the CSV files.
pub const CSV_COLUMNS: &[&str] = &[
    "experiment",
    "config_hash",
    "index",
    "kernel",
    "restriction",
    "p",
    "lambda",
    "gamma",
    "n",
    "quantity",
    "value",
    "reference",
    "bound",
    "ratio",
    "tolerance",
    "pinned",
    "pass",
    "convergence",
    "details",
    "error",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Plot,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            "plot" | "plot-script" | "gnuplot" => Some(Self::Plot),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no records to report")]
    Empty,
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("writing {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// `[min, max]` of an empirical ratio over a group of records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub quantity: String,
    pub p: Option<String>,
    pub n: Option<usize>,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary<'a> {
    pub schema: &'static str,
    pub experiment: &'a str,
    pub config_hash: String,
    pub config: &'a ExperimentConfig,
    pub record_count: usize,
    pub pinned_checks: usize,
    pub pinned_failures: usize,
    pub errors: usize,
    pub pass: bool,
    pub envelopes: Vec<Envelope>,
    pub records: &'a [ExperimentRecord],
}

/// Pinned checks that did not pass.
pub fn pinned_failures(records: &[ExperimentRecord]) -> usize {
    records.iter().filter(|r| r.pinned && r.pass != Some(true)).count()
}

/// Envelopes of `ratio` over unpinned records, grouped by quantity, `p` and `N`.
pub fn envelopes(records: &[ExperimentRecord]) -> Vec<Envelope> {
    let mut groups: BTreeMap<(String, Option<String>, Option<usize>), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.pinned) {
        if let Some(x) = r.ratio.filter(|x| x.is_finite()) {
            groups.entry((r.quantity.clone(), r.p.clone(), r.n)).or_default().push(x);
        }
    }
    groups
        .into_iter()
        .map(|((quantity, p, n), v)| Envelope {
            quantity,
            p,
            n,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: v.len(),
        })
        .collect()
}

pub fn summary<'a>(config: &'a ExperimentConfig, records: &'a [ExperimentRecord]) -> Summary<'a> {
    let failures = pinned_failures(records);
    Summary {
        schema: SCHEMA,
        experiment: &config.experiment,
        config_hash: config.hash(),
        config,
        record_count: records.len(),
        pinned_checks: records.iter().filter(|r| r.pinned).count(),
        pinned_failures: failures,
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        pass: failures == 0,
        envelopes: envelopes(records),
        records,
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_csv(records: &[ExperimentRecord], w: impl io::Write) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        let details = r.details.iter().map(|(k, v)| format!("{k}={v:e}")).collect::<Vec<_>>().join(";");
        out.write_record([
            r.experiment.clone(),
            r.config_hash.clone(),
            r.index.to_string(),
            r.kernel.clone(),
            r.restriction.clone(),
            opt(&r.p),
            opt(&r.lambda),
            opt(&r.gamma),
            opt(&r.n),
            r.quantity.clone(),
            num(r.value),
            num(r.reference),
            num(r.bound),
            num(r.ratio),
            num(r.tolerance),
            r.pinned.to_string(),
            opt(&r.pass),
            r.convergence.clone(),
            details,
            opt(&r.error),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Which parameter goes on the x axis of the plot, and whether the axes are
/// logarithmic.
fn plot_axes(experiment: &str) -> (&'static str, bool, bool) {
    match experiment {
        "counterexample" => ("n", true, true),
        "converse-sup" => ("gamma", true, false),
        "kernel-decay" => ("lambda", true, true),
        "restrict-p-le-1" | "positive-kernel-bound" => ("lambda", false, false),
        _ => ("index", false, true),
    }
}

fn x_of(r: &ExperimentRecord, axis: &str) -> Option<f64> {
    match axis {
        "n" => r.n.map(|n| n as f64),
        "gamma" => r.gamma,
        "lambda" => r.lambda,
        _ => Some(r.index as f64),
    }
}

/// Gnuplot data and script: one data block per (quantity, kernel, p, N)
/// group.  Fitted slopes are drawn as annotations.
pub fn plot_script(records: &[ExperimentRecord], stem: &str) -> (String, String) {
    let experiment = records.first().map(|r| r.experiment.as_str()).unwrap_or("");
    let (axis, logx, logy) = plot_axes(experiment);
    let mut groups: Vec<((String, String, Option<String>, Option<usize>), Vec<(f64, f64)>)> = Vec::new();
    let mut notes = Vec::new();
    for r in records {
        if r.quantity == "slope" {
            if let Some(v) = r.value {
                notes.push(format!("{} slope {v:.4}", r.kernel));
            }
            continue;
        }
        let y = if axis == "lambda" && r.ratio.is_some() { r.ratio } else { r.value };
        let (Some(x), Some(y)) = (x_of(r, axis), y) else { continue };
        if !(y.is_finite() && (!logy || y > 0.0)) {
            continue;
        }
        // With N on the x axis the kernel label carries N too, so it cannot
        // separate the series.
        let (kernel, n) = if axis == "n" { (String::new(), None) } else { (r.kernel.clone(), r.n) };
        let key = (r.quantity.clone(), kernel, r.p.clone(), n);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push((x, y)),
            None => groups.push((key, vec![(x, y)])),
        }
    }
    let mut data = String::new();
    let mut plots = Vec::new();
    for (i, ((q, k, p, n), pts)) in groups.iter().enumerate() {
        let mut title = if k.is_empty() { q.clone() } else { format!("{q} {k}") };
        if let Some(p) = p {
            title += &format!(" p={p}");
        }
        if let Some(n) = n {
            title += &format!(" N={n}");
        }
        data += &format!("# {title}\n");
        for (x, y) in pts {
            data += &format!("{x:e} {y:e}\n");
        }
        data += "\n\n";
        plots.push(format!("'{stem}.dat' index {i} using 1:2 with linespoints title '{}'", title.replace('\'', "")));
    }
    let mut script = format!("set terminal pngcairo size 900,600\nset output '{stem}.png'\nset key outside\nset xlabel '{axis}'\n");
    if logx {
        script += "set logscale x\n";
    }
    if logy {
        script += "set logscale y\n";
    }
    for (i, note) in notes.iter().enumerate() {
        script += &format!("set label {} '{}' at graph 0.05, graph {:.2}\n", i + 1, note.replace('\'', ""), 0.95 - 0.05 * i as f64);
    }
    if plots.is_empty() {
        script += "set label 99 'no plottable records' at graph 0.5, graph 0.5\nplot 0 notitle\n";
    } else {
        script += &format!("plot {}\n", plots.join(", \\\n     "));
    }
    (data, script)
}

/// Writes `<dir>/<experiment>.{csv,json,dat,gp}` and returns the paths.
pub fn emit_report(
    config: &ExperimentConfig,
    records: &[ExperimentRecord],
    formats: &[Format],
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let stem = &config.experiment;
    let mut written = Vec::new();
    let write = |path: PathBuf, body: &[u8], written: &mut Vec<PathBuf>| {
        fs::write(&path, body).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        written.push(path);
        Ok::<_, ReportError>(())
    };
    for f in formats {
        match f {
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                let file = fs::File::create(&path).map_err(|source| ReportError::Io { path: path.clone(), source })?;
                write_csv(records, io::BufWriter::new(file)).map_err(|source| ReportError::Csv { path: path.clone(), source })?;
                written.push(path);
            }
            Format::Json => {
                let body = serde_json::to_vec_pretty(&summary(config, records)).expect("summary serialises");
                write(dir.join(format!("{stem}.json")), &body, &mut written)?;
            }
            Format::Plot => {
                let (data, script) = plot_script(records, stem);
                write(dir.join(format!("{stem}.dat")), data.as_bytes(), &mut written)?;
                write(dir.join(format!("{stem}.gp")), script.as_bytes(), &mut written)?;
            }
        }
    }
    Ok(written)
}
