use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mess::correct::{CandidateMap, CorrectionRule, WeightPower, Weighting};
use mess::data::{DatasetSpec, Generator};
use mess::estimate::Estimator;
use mess::generate::{DeltaBall, DeltaSource, GenerationRule};
use mess::harness::recipes::Recipe;
use mess::localmodel::Jitter;
use mess::pipeline::{InitialId, MessParams};
use mess::MessError;

#[derive(Parser)]
#[command(name = "mess", version, about = "Supersampling for local intrinsic dimensionality estimation")]
pub struct Cli {
    /// Worker threads for the parallel stages [default: all cores]
    #[arg(long, global = true, env = "MESS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Draw a synthetic data set and write it as CSV
    Generate(GenerateArgs),
    /// Supersample a CSV point set and write the corrected samples
    Supersample(SupersampleArgs),
    /// Estimate local ID of every point, with or without supersampling
    Estimate(EstimateArgs),
    /// Run the pipeline over a grid of k1 values
    Sweep(SweepArgs),
    /// MESS vs SMOTE vs no supersampling on one data set, as an HTML report
    Compare(CompareArgs),
    /// Run a named experiment recipe (fig1, fig3, fig4, m10c)
    Repro(ReproArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// swiss-roll, hypercube, ball, sphere, moebius or m4
    #[arg(long)]
    pub dataset: Generator,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Ambient dimension (generators with fixed dimensions ignore the default)
    #[arg(long)]
    pub d: Option<usize>,
    /// Intrinsic dimension
    #[arg(long)]
    pub delta: Option<usize>,
    /// Gaussian feature noise sigma
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Extra points uniform in the bounding box
    #[arg(long, default_value_t = 0)]
    pub uniform_noise: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a header row
    #[arg(long)]
    pub header: bool,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn spec(&self) -> DatasetSpec {
        let base = DatasetSpec::new(self.dataset, self.n, self.seed).noise(self.noise, self.uniform_noise);
        let d = self.d.unwrap_or(base.d);
        let delta = self.delta.unwrap_or(base.delta.min(d));
        base.dims(d, delta)
    }
}

#[derive(Args)]
pub struct Input {
    /// Input CSV, one point per row
    pub input: PathBuf,
    /// The input has a header row (also written to CSV point outputs)
    #[arg(long)]
    pub header: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GenArg {
    Cov,
    Chol,
    Ball,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CorrArg {
    C1,
    C2,
    /// Skip correction (estimate against the raw samples)
    None,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum WeightArg {
    W1,
    W2,
    W3,
}

#[derive(Args)]
pub struct MessArgs {
    /// Neighbors for the local models of the data points
    #[arg(long, default_value_t = 20)]
    pub k1: usize,
    /// Neighbors for sample models and correction [default: k1]
    #[arg(long)]
    pub k2: Option<usize>,
    /// Neighbors among the supersamples for estimation [default: k1 * ext]
    #[arg(long)]
    pub k3: Option<usize>,
    /// Supersamples per data point
    #[arg(long, default_value_t = 25)]
    pub ext: usize,
    #[arg(long = "gen", value_enum, default_value = "cov")]
    pub generation: GenArg,
    /// Fixed δ for `--gen ball` [default: per-point initial ID estimate]
    #[arg(long)]
    pub ball_delta: Option<f64>,
    #[arg(long = "corr", value_enum, default_value = "c2")]
    pub correction: CorrArg,
    #[arg(long, value_enum, default_value = "w3")]
    pub weight: WeightArg,
    /// Weight exponent (>= 1), or `id` for the neighbor's initial ID estimate
    #[arg(long, default_value = "1")]
    pub power: String,
    #[arg(long, default_value = "abid")]
    pub estimator: Estimator,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Diagonal regularization before factorizing, or `auto`
    #[arg(long, default_value = "auto")]
    pub jitter: String,
    /// Use this constant instead of ABID initial ID estimates
    #[arg(long)]
    pub initial_id: Option<f64>,
    /// Keep each point's own supersamples out of its estimation neighborhood
    #[arg(long)]
    pub exclude_own_samples: bool,
}

fn invalid(param: &'static str, reason: String) -> anyhow::Error {
    MessError::InvalidParameter { param, reason }.into()
}

impl MessArgs {
    pub fn params(&self) -> Result<MessParams> {
        let generation = match self.generation {
            GenArg::Cov => GenerationRule::Covariance,
            GenArg::Chol => GenerationRule::CholeskyBall,
            GenArg::Ball => GenerationRule::DeltaBall(DeltaBall {
                delta: self.ball_delta.map_or(DeltaSource::PerPoint, DeltaSource::Fixed),
                ..DeltaBall::default()
            }),
        };
        let power = if self.power.eq_ignore_ascii_case("id") {
            WeightPower::InitialId
        } else {
            WeightPower::Fixed(
                self.power
                    .parse()
                    .map_err(|_| invalid("power", format!("expected a number or `id`, got `{}`", self.power)))?,
            )
        };
        let weighting = match self.weight {
            WeightArg::W1 => Weighting::Euclidean,
            WeightArg::W2 => Weighting::MahalanobisAtNeighbor,
            WeightArg::W3 => Weighting::MahalanobisAtSample,
        };
        let correction = match self.correction {
            CorrArg::C1 => Some(CandidateMap::Covariance),
            CorrArg::C2 => Some(CandidateMap::Cholesky),
            CorrArg::None => None,
        }
        .map(|candidate| CorrectionRule {
            candidate,
            weighting,
            power,
        });
        let jitter = if self.jitter.eq_ignore_ascii_case("auto") {
            Jitter::Auto
        } else {
            Jitter::Fixed(
                self.jitter
                    .parse()
                    .map_err(|_| invalid("jitter", format!("expected a number or `auto`, got `{}`", self.jitter)))?,
            )
        };
        Ok(MessParams {
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            ext: self.ext,
            generation,
            correction,
            jitter,
            estimator: self.estimator,
            initial_id: self.initial_id.map_or(InitialId::Abid, InitialId::Constant),
            seed: self.seed,
            exclude_own_samples: self.exclude_own_samples,
        })
    }
}

#[derive(Args)]
pub struct SupersampleArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub mess: MessArgs,
    /// Also write the uncorrected samples here
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub mess: MessArgs,
    /// Estimate on the data alone, without supersampling
    #[arg(long)]
    pub no_mess: bool,
    /// Neighborhood size with --no-mess [default: k1]
    #[arg(long)]
    pub k: Option<usize>,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub mess: MessArgs,
    /// Comma-separated k1 values
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    /// Estimators to sweep (repeatable) [default: abid and hill]
    #[arg(long = "sweep-estimator")]
    pub sweep_estimators: Vec<Estimator>,
    /// Write 0 in the runtime_ms column so output depends only on the inputs
    #[arg(long)]
    pub no_timings: bool,
    /// Also write an HTML report here
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn estimators(&self) -> Vec<Estimator> {
        if self.sweep_estimators.is_empty() {
            vec![Estimator::Abid, Estimator::Hill]
        } else {
            self.sweep_estimators.clone()
        }
    }
}

#[derive(Args)]
pub struct DataSource {
    /// Input CSV
    #[arg(long, conflicts_with = "dataset")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Synthetic data set instead of a CSV
    #[arg(long)]
    pub dataset: Option<Generator>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, requires = "delta")]
    pub d: Option<usize>,
    #[arg(long, requires = "d")]
    pub delta: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub uniform_noise: usize,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub mess: MessArgs,
    /// Also write the per-arm summary CSV here
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// HTML report path [default: compare.html]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReproArgs {
    pub recipe: Recipe,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Data set size multiplier; 1 runs the full experiment
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Write 0 in runtime columns so output depends only on the inputs
    #[arg(long)]
    pub no_timings: bool,
    /// Output directory [default: repro-<recipe>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
