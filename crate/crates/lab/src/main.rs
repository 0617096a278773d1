use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use hankel_lab::report::pinned_failures;
use hankel_lab::{emit_report, find, run_experiment, ExperimentConfig, Format, EXPERIMENTS, OUT_ENV};

#[derive(Parser)]
#[command(name = "lab", version, about = "Restriction-map and Schatten-norm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its reports.
    Run {
        experiment: String,
        /// Overrides for the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        /// Report formats: csv, json, plot.
        #[arg(long, value_delimiter = ',', default_value = "csv,json,plot")]
        format: Vec<String>,
        /// Use the small smoke-test defaults.
        #[arg(long)]
        quick: bool,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiments.
    List,
    /// Run every experiment with its default parameters and report the pinned checks.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Also write reports here.
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the default configuration of an experiment in file form.
    Defaults {
        experiment: String,
        #[arg(long)]
        quick: bool,
    },
}

fn set_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn formats(names: &[String]) -> anyhow::Result<Vec<Format>> {
    let mut v = names
        .iter()
        .map(|s| Format::parse(s.trim()).with_context(|| format!("unknown format {s}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    v.sort();
    v.dedup();
    Ok(v)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::List => {
            for e in EXPERIMENTS {
                println!("{:<28} {}", e.name, e.summary);
            }
            Ok(true)
        }
        Command::Defaults { experiment, quick } => {
            let e = find(&experiment).with_context(|| format!("unknown experiment {experiment}; see `lab list`"))?;
            print!("{}", (e.defaults)(quick).to_text());
            Ok(true)
        }
        Command::Run { experiment, config, out, format, quick, threads } => {
            set_threads(threads)?;
            let e = find(&experiment).with_context(|| format!("unknown experiment {experiment}; see `lab list`"))?;
            let defaults = (e.defaults)(quick);
            let cfg = match &config {
                Some(path) => ExperimentConfig::load(path, defaults)?,
                None => defaults,
            };
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("lab-out"));
            let formats = formats(&format)?;
            let start = Instant::now();
            let records = run_experiment(&cfg)?;
            let failures = pinned_failures(&records);
            let pinned = records.iter().filter(|r| r.pinned).count();
            let errors = records.iter().filter(|r| r.error.is_some()).count();
            for path in emit_report(&cfg, &records, &formats, &dir)? {
                println!("wrote {}", path.display());
            }
            println!(
                "{}: {} records, {pinned} pinned checks, {failures} failed, {errors} numeric errors, config {} ({:.1}s)",
                cfg.experiment,
                records.len(),
                &cfg.hash()[..12],
                start.elapsed().as_secs_f64()
            );
            Ok(failures == 0)
        }
        Command::Verify { quick, out, threads } => {
            set_threads(threads)?;
            let mut ok = true;
            for e in EXPERIMENTS {
                let cfg = (e.defaults)(quick);
                let start = Instant::now();
                let records = run_experiment(&cfg)?;
                let failures = pinned_failures(&records);
                let pinned = records.iter().filter(|r| r.pinned).count();
                if let Some(dir) = &out {
                    emit_report(&cfg, &records, &[Format::Csv, Format::Json, Format::Plot], dir)?;
                }
                let status = if failures == 0 { "ok  " } else { "FAIL" };
                println!("{status} {:<28} {pinned:>5} pinned, {failures} failed ({:.1}s)", e.name, start.elapsed().as_secs_f64());
                for r in records.iter().filter(|r| r.pinned && r.pass != Some(true)).take(5) {
                    println!(
                        "       {} {} p={} λ={} N={}: value {:?} reference {:?} bound {:?} {}",
                        r.quantity,
                        r.kernel,
                        r.p.as_deref().unwrap_or("-"),
                        r.lambda.map_or("-".into(), |l| l.to_string()),
                        r.n.map_or("-".into(), |n| n.to_string()),
                        r.value,
                        r.reference,
                        r.bound,
                        r.error.as_deref().unwrap_or("")
                    );
                }
                ok &= failures == 0;
            }
            if !ok {
                bail!("pinned checks failed");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
