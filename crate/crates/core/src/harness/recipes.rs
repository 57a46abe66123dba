//! Named experiment recipes. Each one pins its parameters below; where a
//! value is not given by the experiment it reproduces, the comment next to
//! it says which default was chosen.

use std::fmt;
use std::str::FromStr;

use crate::correct::{CandidateMap, CorrectionRule, Weighting};
use crate::data::{self, smote_supersample, DatasetSpec, Generator};
use crate::error::{MessError, Result};
use crate::estimate::{estimate_set, Estimator, Exclusion, IdEstimate};
use crate::generate::GenerationRule;
use crate::neighbors::NeighborIndex;
use crate::pipeline::{run_mess, supersample, MessParams};
use crate::points::PointSet;

use super::{k1_sweep, HtmlReport, IdReport, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    /// Swiss roll with feature noise: raw vs corrected supersamples.
    Fig1,
    /// Möbius strip: ABID without and with supersampling.
    Fig3,
    /// m4 analogue: k1 sweep with MESS and SMOTE histograms.
    Fig4,
    /// 24-cube in 25 dimensions: Hill without and with supersampling.
    M10c,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::Fig1, Recipe::Fig3, Recipe::Fig4, Recipe::M10c];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig1 => "fig1",
            Recipe::Fig3 => "fig3",
            Recipe::Fig4 => "fig4",
            Recipe::M10c => "m10c",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = MessError;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MessError::invalid("recipe", format!("unknown recipe `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipeOptions {
    pub seed: u64,
    /// Multiplies every data set size (with a floor that keeps all
    /// neighborhood sizes valid); 1.0 is the full experiment.
    pub scale: f64,
    /// Write measured runtimes into sweep tables instead of zeros.
    pub timings: bool,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: 1.0,
            timings: true,
        }
    }
}

impl RecipeOptions {
    fn n(&self, full: usize, floor: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(floor)
    }
}

#[derive(Debug, Clone)]
pub struct RecipeOutput {
    pub recipe: Recipe,
    pub report: HtmlReport,
    /// `(file name, CSV content)`.
    pub tables: Vec<(String, String)>,
    /// Short human-readable findings.
    pub lines: Vec<String>,
}

pub fn run(recipe: Recipe, opts: &RecipeOptions) -> Result<RecipeOutput> {
    match recipe {
        Recipe::Fig1 => fig1(opts),
        Recipe::Fig3 => fig3(opts),
        Recipe::Fig4 => fig4(opts),
        Recipe::M10c => m10c(opts),
    }
}

fn estimates_csv(estimates: &[IdEstimate]) -> Result<String> {
    let mut buf = Vec::new();
    data::write_estimates_csv(&mut buf, estimates)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn summary_row(label: &str, r: &IdReport) -> Vec<String> {
    let s = &r.summary;
    vec![
        label.to_string(),
        format!("{:.3}", s.median),
        format!("{:.3}", s.q1),
        format!("{:.3}", s.q3),
        s.degenerate.to_string(),
        format!("{:.4}", r.deviation.mean),
    ]
}

const SUMMARY_HEADERS: [&str; 6] = ["arm", "median", "q1", "q3", "degenerate", "mean local deviation"];

fn baseline(points: &PointSet, k: usize, estimator: Estimator) -> Result<IdReport> {
    let index = NeighborIndex::build(points)?;
    let est = estimate_set(points, &index, k, estimator, Exclusion::SameIndex)?;
    IdReport::new(est, &index, k)
}

/// ABID of (a strided subset of) `set` within `set`, for coloring plots.
fn color_by_abid(set: &PointSet, k: usize, max_points: usize) -> Result<(PointSet, Vec<f64>)> {
    let step = set.len().div_ceil(max_points.max(1)).max(1);
    let mut sub = PointSet::empty(set.dim());
    for i in (0..set.len()).step_by(step) {
        sub.push(set.row(i))?;
    }
    let index = NeighborIndex::build(set)?;
    let k = k.min(set.len() - 1);
    let values = estimate_set(&sub, &index, k, Estimator::Abid, Exclusion::Identical)?
        .into_iter()
        .map(|e| e.value)
        .collect();
    Ok((sub, values))
}

fn fig1(opts: &RecipeOptions) -> Result<RecipeOutput> {
    let n = opts.n(3000, 200);
    // the experiment only says "added uniform noise points": 5% of n
    let spec = DatasetSpec::new(Generator::SwissRoll, n, opts.seed).noise(0.15, n / 20);
    let set = data::generate(&spec)?;
    let oracle = set.residual.clone().expect("swiss roll has an oracle");
    let x = &set.points;
    // ABID with 10 neighbors on the data, 500 on the supersamples
    let base = MessParams {
        generation: GenerationRule::Covariance,
        seed: opts.seed,
        ..MessParams::new(10, 50)
    };
    let c2w3 = supersample(x, &base)?;
    let c1w3 = supersample(
        x,
        &MessParams {
            correction: Some(CorrectionRule::new(CandidateMap::Covariance, Weighting::MahalanobisAtSample)),
            ..base.clone()
        },
    )?;
    let res = [
        ("original", oracle.mean_distance(x)),
        ("raw", oracle.mean_distance(&c2w3.raw)),
        ("corrected C2+W3", oracle.mean_distance(&c2w3.corrected)),
        ("corrected C1+W3", oracle.mean_distance(&c1w3.corrected)),
    ];
    let mut table = String::from("set,mean_residual\n");
    for (name, v) in &res {
        table.push_str(&format!("{name},{v}\n"));
    }

    let mut html = HtmlReport::new("Swiss roll supersampling");
    html.paragraph(&format!(
        "n = {n} plus {} uniform noise points, sigma = 0.15, k1 = 10, ext = 50, covariance generation",
        n / 20
    ));
    html.table(
        &["set", "mean distance to surface"],
        &res.iter().map(|(a, b)| vec![a.to_string(), format!("{b:.4}")]).collect::<Vec<_>>(),
    );
    let orig_colors = baseline(x, 10, Estimator::Abid)?.values();
    html.scatter("original (ABID, k = 10)", x, (0, 2), Some(&orig_colors), 4000);
    let (raw_sub, raw_c) = color_by_abid(&c2w3.raw, 500, 3000)?;
    html.scatter("raw supersamples (ABID, k = 500)", &raw_sub, (0, 2), Some(&raw_c), 3000);
    let (cor_sub, cor_c) = color_by_abid(&c2w3.corrected, 500, 3000)?;
    html.scatter("corrected C2+W3 (ABID, k = 500)", &cor_sub, (0, 2), Some(&cor_c), 3000);

    let lines = res.iter().map(|(a, b)| format!("mean residual {a}: {b:.4}")).collect();
    Ok(RecipeOutput {
        recipe: Recipe::Fig1,
        report: html,
        tables: vec![("fig1_residuals.csv".into(), table)],
        lines,
    })
}

fn fig3(opts: &RecipeOptions) -> Result<RecipeOutput> {
    let n = opts.n(3000, 200);
    let set = data::generate(&DatasetSpec::new(Generator::Moebius, n, opts.seed))?;
    let x = &set.points;
    let params = MessParams {
        k2: Some(50),
        k3: Some(5000),
        generation: GenerationRule::Covariance,
        estimator: Estimator::Abid,
        seed: opts.seed,
        ..MessParams::new(50, 100)
    };
    let without = baseline(x, 50, Estimator::Abid)?;
    let with = run_mess(x, &params)?.report;

    let mut html = HtmlReport::new("Möbius strip, ABID without and with supersampling");
    html.paragraph(&format!(
        "n = {n}, k1 = k2 = 50, k3 = 5000, ext = 100, covariance generation, C2+W3; ground truth 2"
    ));
    html.table(&SUMMARY_HEADERS, &[summary_row("without", &without), summary_row("with MESS", &with)]);
    let (a, b) = (without.values(), with.values());
    html.histogram("without", &[Series { label: "without", color: "#1f77b4", values: &a }], 40);
    html.histogram("with MESS", &[Series { label: "MESS", color: "#2ca02c", values: &b }], 40);
    html.scatter("data colored by MESS ABID", x, (0, 1), Some(&b), 4000);

    let lines = vec![
        format!(
            "without: median {:.3}, mean local deviation {:.4}",
            without.summary.median, without.deviation.mean
        ),
        format!(
            "with MESS: median {:.3}, mean local deviation {:.4}",
            with.summary.median, with.deviation.mean
        ),
    ];
    Ok(RecipeOutput {
        recipe: Recipe::Fig3,
        report: html,
        tables: vec![
            ("fig3_without.csv".into(), estimates_csv(&without.estimates)?),
            ("fig3_with.csv".into(), estimates_csv(&with.estimates)?),
        ],
        lines,
    })
}

fn fig4(opts: &RecipeOptions) -> Result<RecipeOutput> {
    let n = opts.n(5000, 200);
    let set = data::generate(&DatasetSpec::new(Generator::NonlinearM4, n, opts.seed))?;
    let x = &set.points;
    let grid = [10, 20, 30, 40, 60, 80];
    let ext = 75;
    let base = MessParams {
        generation: GenerationRule::Covariance,
        seed: opts.seed,
        ..MessParams::new(grid[0], ext)
    };
    let estimators = [Estimator::Abid, Estimator::Hill];
    let sweep = k1_sweep(x, &grid, &base, &estimators)?;
    let mut sweep_csv = Vec::new();
    sweep.write_csv(&mut sweep_csv, opts.timings)?;

    let mut html = HtmlReport::new("m4 analogue: k1 sweep");
    html.paragraph(&format!("n = {n}, d = 8, ground truth 4, ext = {ext}, k1 in {grid:?}"));
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let best = sweep.best(r.estimator) == Some(i);
            vec![
                r.k1.to_string(),
                r.estimator.to_string(),
                format!("{:.3}", r.median),
                format!("{:.3}", r.q1),
                format!("{:.3}", r.q3),
                format!("{:.4}", r.mean_local_deviation),
                if best { "best".into() } else { String::new() },
            ]
        })
        .collect();
    html.table(&["k1", "estimator", "median", "q1", "q3", "mean local deviation", ""], &rows);
    let xs: Vec<f64> = grid.iter().map(|&k| k as f64).collect();
    let column = |e: Estimator, f: fn(&super::SweepRow) -> f64| -> Vec<f64> {
        sweep.rows.iter().filter(|r| r.estimator == e).map(f).collect()
    };
    let (am, hm) = (column(Estimator::Abid, |r| r.median), column(Estimator::Hill, |r| r.median));
    html.line_chart(
        "median vs k1",
        &xs,
        &[
            Series { label: "ABID", color: "#1f77b4", values: &am },
            Series { label: "Hill", color: "#2ca02c", values: &hm },
        ],
        Some(4.0),
    );
    let (ad, hd) = (
        column(Estimator::Abid, |r| r.mean_local_deviation),
        column(Estimator::Hill, |r| r.mean_local_deviation),
    );
    html.line_chart(
        "mean local deviation vs k1",
        &xs,
        &[
            Series { label: "ABID", color: "#1f77b4", values: &ad },
            Series { label: "Hill", color: "#2ca02c", values: &hd },
        ],
        None,
    );

    let mut lines = Vec::new();
    for e in estimators {
        let Some(b) = sweep.best(e) else { continue };
        let k1 = sweep.rows[b].k1;
        let raw = baseline(x, k1, e)?.values();
        let mess = sweep.reports[b].values();
        let smote_set = smote_supersample(x, ext, k1, opts.seed)?;
        let reference = NeighborIndex::build(&smote_set)?;
        let smote: Vec<f64> = estimate_set(x, &reference, k1 * ext, e, Exclusion::None)?
            .into_iter()
            .map(|v| v.value)
            .collect();
        html.histogram(
            &format!("{e} at k1 = {k1}"),
            &[
                Series { label: "raw", color: "#1f77b4", values: &raw },
                Series { label: "MESS", color: "#2ca02c", values: &mess },
                Series { label: "SMOTE", color: "#e377c2", values: &smote },
            ],
            40,
        );
        lines.push(format!(
            "{e}: best k1 = {k1}, MESS median {:.3}, SMOTE median {:.3}",
            sweep.rows[b].median,
            super::Summary::of(&smote).median
        ));
    }
    Ok(RecipeOutput {
        recipe: Recipe::Fig4,
        report: html,
        tables: vec![(
            "fig4_sweep.csv".into(),
            String::from_utf8(sweep_csv).expect("csv output is utf-8"),
        )],
        lines,
    })
}

fn m10c(opts: &RecipeOptions) -> Result<RecipeOutput> {
    let n = opts.n(10_000, 200);
    let set = data::generate(&DatasetSpec::new(Generator::Hypercube, n, opts.seed))?;
    let x = &set.points;
    let params = MessParams {
        generation: GenerationRule::Covariance,
        estimator: Estimator::Hill,
        seed: opts.seed,
        ..MessParams::new(40, 50)
    };
    let without = baseline(x, 40, Estimator::Hill)?;
    let with = run_mess(x, &params)?.report;
    let mut html = HtmlReport::new("24-cube in 25 dimensions, Hill without and with supersampling");
    html.paragraph(&format!("n = {n}, k1 = 40, ext = 50, k3 = 2000, C2+W3; ground truth 24"));
    html.table(&SUMMARY_HEADERS, &[summary_row("without", &without), summary_row("with MESS", &with)]);
    let (a, b) = (without.values(), with.values());
    html.histogram(
        "Hill estimates",
        &[
            Series { label: "without", color: "#1f77b4", values: &a },
            Series { label: "MESS", color: "#2ca02c", values: &b },
        ],
        40,
    );
    let lines = vec![
        format!("Hill median without: {:.3}", without.summary.median),
        format!("Hill median with MESS: {:.3}", with.summary.median),
    ];
    Ok(RecipeOutput {
        recipe: Recipe::M10c,
        report: html,
        tables: vec![
            ("m10c_without.csv".into(), estimates_csv(&without.estimates)?),
            ("m10c_with.csv".into(), estimates_csv(&with.estimates)?),
        ],
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for r in Recipe::ALL {
            assert_eq!(r.name().parse::<Recipe>().unwrap(), r);
        }
        assert!("fig2".parse::<Recipe>().is_err());
    }

    #[test]
    fn small_fig1_runs() {
        let out = run(Recipe::Fig1, &RecipeOptions { scale: 0.0, ..Default::default() }).unwrap();
        assert_eq!(out.tables[0].0, "fig1_residuals.csv");
        assert_eq!(out.tables[0].1.lines().count(), 5);
        assert!(out.report.render().contains("<svg"));
    }
}
