use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::mixture::InitMethod;

#[derive(Debug, Parser)]
#[command(name = "ggmm-sr", version, about = "Patch-based super-resolution with joint generalized Gaussian mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Block-average and subsample an HR image to synthesize an LR observation.
    Degrade(DegradeArgs),
    /// Learn a joint HR/LR patch mixture from a reference pair.
    Train(TrainArgs),
    /// Super-resolve an LR image with a trained model.
    Sr(SrArgs),
    /// Degrade, train (GGMM and GMM), reconstruct and report PSNR.
    Eval(EvalArgs),
    /// PSNR between two images.
    Psnr(PsnrArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Flags that override [`RunConfig`](super::RunConfig) values.
#[derive(Debug, Args, Default, Clone)]
pub struct ConfigFlags {
    /// TOML run configuration; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub stride_train: Option<usize>,
    #[arg(long)]
    pub stride_recon: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of mixture components K.
    #[arg(long, short = 'k')]
    pub components: Option<usize>,
    #[arg(long)]
    pub max_outer_iters: Option<usize>,
    #[arg(long)]
    pub fp_inner_iters: Option<usize>,
    #[arg(long)]
    pub newton_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub cov_reg: Option<f64>,
    #[arg(long)]
    pub delta_floor: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Hold every shape parameter fixed (1 = Gaussian mixture).
    #[arg(long)]
    pub fix_beta: Option<f64>,
    #[arg(long)]
    pub init: Option<InitMethod>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Covariance fixed point without the leading shape factor.
    #[arg(long)]
    pub paper_literal_cov: bool,
    /// Train on the whole image pair instead of the upper-left quarter.
    #[arg(long)]
    pub full_image: bool,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Worker threads for data-parallel loops.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub hr: PathBuf,
    #[arg(long)]
    pub lr: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct SrArgs {
    #[arg(long)]
    pub lr: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub hr: PathBuf,
    /// Directory for the LR input and the three reconstructions.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct PsnrArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
}
