//! `mess`: generate data, supersample, estimate local intrinsic
//! dimensionality, sweep k1, compare against SMOTE and run named recipes.

mod args;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use mess::data::{self, DatasetSpec};
use mess::estimate::{estimate_set, Exclusion};
use mess::harness::{self, recipes, HtmlReport, Series};
use mess::neighbors::NeighborIndex;
use mess::pipeline;
use mess::{MessError, PointSet};

use args::{Cli, Command, DataSource};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(anyhow::Error::new(MessError::InvalidParameter {
            param: "threads",
            reason: "must be at least 1".into(),
        })),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building worker pool")
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<MessError>()) {
        Some(MessError::InvalidParameter { .. } | MessError::InsufficientPoints { .. }) => EXIT_USAGE,
        Some(MessError::DegenerateNeighborhood(_) | MessError::Numerical(_)) => EXIT_NUMERICAL,
        Some(_) => EXIT_DATA,
        None if e.chain().any(|c| c.is::<io::Error>()) => EXIT_DATA,
        None => EXIT_USAGE,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => {
            let set = data::generate(&a.spec())?;
            write_output(a.out.as_deref(), |w| Ok(data::write_points_csv(w, &set.points, a.header)?))
        }
        Command::Supersample(a) => {
            let x = a.input.load()?;
            let params = a.mess.params()?;
            let s = pipeline::supersample(&x, &params)?;
            if let Some(raw) = &a.raw_out {
                data::save_points_csv(raw, &s.raw, a.input.header)
                    .with_context(|| format!("writing {}", raw.display()))?;
            }
            write_output(a.out.as_deref(), |w| Ok(data::write_points_csv(w, &s.corrected, a.input.header)?))
        }
        Command::Estimate(a) => {
            let x = a.input.load()?;
            let params = a.mess.params()?;
            let estimates = if a.no_mess {
                let index = NeighborIndex::build(&x)?;
                let k = a.k.unwrap_or(params.k1);
                estimate_set(&x, &index, k, params.estimator, Exclusion::SameIndex)?
            } else {
                pipeline::run_mess(&x, &params)?.report.estimates
            };
            write_output(a.out.as_deref(), |w| Ok(data::write_estimates_csv(w, &estimates)?))
        }
        Command::Sweep(a) => {
            let x = a.input.load()?;
            let params = a.mess.params()?;
            let estimators = a.estimators();
            let result = harness::k1_sweep(&x, &a.grid, &params, &estimators)?;
            for e in &estimators {
                if let Some(b) = result.best(*e) {
                    let r = &result.rows[b];
                    eprintln!(
                        "{e}: lowest mean local deviation {:.4} at k1 = {} (median {:.3})",
                        r.mean_local_deviation, r.k1, r.median
                    );
                }
            }
            if let Some(path) = &a.report {
                sweep_report(&result, &a.grid, &estimators).save(path)?;
            }
            write_output(a.out.as_deref(), |w| Ok(result.write_csv(w, !a.no_timings)?))
        }
        Command::Compare(a) => {
            let (x, oracle, title) = match &a.source {
                DataSource { input: Some(path), .. } => {
                    (data::load_csv(path, a.source.header)?, None, format!("{}", path.display()))
                }
                DataSource { dataset: Some(g), .. } => {
                    let spec = DatasetSpec::new(*g, a.source.n, a.mess.seed)
                        .noise(a.source.noise, a.source.uniform_noise);
                    let spec = match (a.source.d, a.source.delta) {
                        (Some(d), Some(delta)) => spec.dims(d, delta),
                        _ => spec,
                    };
                    let set = data::generate(&spec)?;
                    (set.points, set.residual, g.to_string())
                }
                _ => anyhow::bail!(MessError::InvalidParameter {
                    param: "input",
                    reason: "pass --input or --dataset".into(),
                }),
            };
            let params = a.mess.params()?;
            let cmp = harness::compare(&x, &params, oracle.as_ref())?;
            if let Some(csv) = &a.csv {
                fs::write(csv, cmp.summary_csv())?;
            }
            print!("{}", cmp.summary_csv());
            let out = a.out.unwrap_or_else(|| PathBuf::from("compare.html"));
            cmp.to_html(&format!("MESS vs SMOTE vs baseline: {title}"), &x).save(&out)?;
            eprintln!("report written to {}", out.display());
            Ok(())
        }
        Command::Repro(a) => {
            let opts = recipes::RecipeOptions {
                seed: a.seed,
                scale: a.scale,
                timings: !a.no_timings,
            };
            let out = recipes::run(a.recipe, &opts)?;
            let dir = a.out.unwrap_or_else(|| PathBuf::from(format!("repro-{}", a.recipe)));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, body) in &out.tables {
                fs::write(dir.join(name), body)?;
            }
            out.report.save(dir.join(format!("{}.html", a.recipe)))?;
            for line in &out.lines {
                println!("{line}");
            }
            eprintln!("outputs written to {}", dir.display());
            Ok(())
        }
    }
}

const SWEEP_COLORS: [&str; 2] = ["#1f77b4", "#2ca02c"];

fn sweep_series<'a>(values: &'a [Vec<f64>], names: &'a [String]) -> Vec<Series<'a>> {
    values
        .iter()
        .zip(names)
        .zip(SWEEP_COLORS.iter().cycle())
        .map(|((v, n), c)| Series { label: n, color: c, values: v })
        .collect()
}

fn sweep_report(
    result: &harness::SweepResult,
    grid: &[usize],
    estimators: &[mess::estimate::Estimator],
) -> HtmlReport {
    let column = |f: fn(&harness::SweepRow) -> f64| -> Vec<Vec<f64>> {
        estimators
            .iter()
            .map(|e| result.rows.iter().filter(|r| r.estimator == *e).map(f).collect())
            .collect()
    };
    let medians = column(|r| r.median);
    let devs = column(|r| r.mean_local_deviation);
    let names: Vec<String> = estimators.iter().map(|e| e.to_string()).collect();
    let xs: Vec<f64> = grid.iter().map(|&k| k as f64).collect();
    let mut html = HtmlReport::new("k1 sweep");
    html.line_chart("median vs k1", &xs, &sweep_series(&medians, &names), None);
    html.line_chart("mean local deviation vs k1", &xs, &sweep_series(&devs, &names), None);
    html
}

/// Writes to `path`, or to stdout when no path is given.
fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            );
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

impl args::Input {
    fn load(&self) -> Result<PointSet> {
        data::load_csv(&self.input, self.header)
            .with_context(|| format!("reading {}", self.input.display()))
    }
}
