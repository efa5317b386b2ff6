use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatcont_core::{Predictor, QuadratureSpec};

#[derive(Debug, Parser)]
#[command(
    name = "heatcont",
    version,
    about = "Heat-kernel smoothing and minimizer continuation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print P_t f and its derivatives at one point as JSON.
    Eval(EvalArgs),
    /// Trace a minimizer branch across scales.
    Trace(TraceArgs),
    /// Global minimizers over a grid of scales, with branch switches.
    Sweep(SweepArgs),
    /// Power-law fit of a scaling law against its predicted exponent.
    Scaling(ScalingArgs),
    /// Rerun the pipeline behind a figure and its acceptance checks.
    Reproduce(ReproduceArgs),
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("t must be positive, got {s}"))
    }
}

fn param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("parameter {k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Clone, Args)]
pub struct ObjectiveArgs {
    /// Catalog key, or a path to a JSON objective config.
    #[arg(long)]
    pub objective: String,
    /// Catalog parameter; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    /// Integration half-width in kernel units.
    #[arg(long, default_value_t = QuadratureSpec::default().truncation)]
    pub truncation: f64,
    #[arg(long, default_value_t = QuadratureSpec::default().panel_order)]
    pub panel_order: usize,
    #[arg(long, default_value_t = QuadratureSpec::default().max_panels)]
    pub max_panels: usize,
    #[arg(long, default_value_t = QuadratureSpec::default().rel_tol)]
    pub rel_tol: f64,
}

impl QuadArgs {
    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            truncation: self.truncation,
            panel_order: self.panel_order,
            max_panels: self.max_panels,
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// CSV output; a `.manifest.json` sidecar is written next to it.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON output with the run manifest embedded.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// SVG plot with the run manifest in its metadata.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, value_parser = positive)]
    pub t: f64,
    /// Point, comma separated for several coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=3))]
    pub order: u8,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Constant,
    Secant,
    Ode,
}

impl From<PredictorArg> for Predictor {
    fn from(p: PredictorArg) -> Self {
        match p {
            PredictorArg::Constant => Predictor::Constant,
            PredictorArg::Secant => Predictor::Secant,
            PredictorArg::Ode => Predictor::Ode,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NewtonArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub newton_max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub lambda_floor: f64,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub seed: Vec<f64>,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub t_start: f64,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    pub t_end: f64,
    /// Geometric step between scales; defaults to 0.9 or 1/0.9 towards t_end.
    #[arg(long)]
    pub step_ratio: Option<f64>,
    #[arg(long, value_enum, default_value_t = PredictorArg::Secant)]
    pub predictor: PredictorArg,
    /// Stop once |x| exceeds this radius.
    #[arg(long, default_value_t = 100.0)]
    pub domain: f64,
    #[command(flatten)]
    pub newton: NewtonArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, default_value_t = 6.0, value_parser = positive)]
    pub t_from: f64,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub t_to: f64,
    /// Number of geometric scales.
    #[arg(long, default_value_t = 120)]
    pub n: usize,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub x_lo: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub x_hi: f64,
    /// Scan points per coordinate.
    #[arg(long, default_value_t = 4001)]
    pub points: usize,
    #[command(flatten)]
    pub newton: NewtonArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingKind {
    /// P_t f(0) against t^(a/2).
    Value,
    /// lambda_min along the branch through the seed against t^((a-2)/2).
    Hessian,
    /// |x_t| of the global minimizers against t^(1/2).
    Localization,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, value_enum)]
    pub kind: ScalingKind,
    #[arg(long, default_value_t = 5e-2, value_parser = positive)]
    pub t_from: f64,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    pub t_to: f64,
    #[arg(long, default_value_t = 12)]
    pub per_decade: usize,
    /// Branch seed for the Hessian fit; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub seed: Option<Vec<f64>>,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// JSON output with the run manifest embedded.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub fn key(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
