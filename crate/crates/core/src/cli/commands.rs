use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::args::{Cli, Command};
use super::config::RunConfig;
use super::REPORT_VERSION;
use crate::error::{Error, Result};
use crate::imaging::{crop, degrade, load_image, psnr, save_image, upsample_nearest, GrayImage, Psnr};
use crate::mixture::FitReport;
use crate::pipeline::{super_resolve, train, JointModel};

pub(super) fn dispatch(cli: Cli) -> Result<String> {
    let json = match cli.command {
        Command::Degrade(a) => to_json(&cmd_degrade(&a.input, a.q, a.noise_sigma, a.seed, &a.output)?)?,
        Command::Train(a) => {
            let cfg = RunConfig::resolve(&a.flags)?;
            to_json(&cmd_train(&a.hr, &a.lr, &cfg, &a.model_out)?)?
        }
        Command::Sr(a) => to_json(&cmd_sr(&a.lr, &a.model, &a.output, a.workers.unwrap_or(1))?)?,
        Command::Eval(a) => {
            let cfg = RunConfig::resolve(&a.flags)?;
            to_json(&cmd_eval(&a.hr, &cfg, a.output_dir.as_deref())?)?
        }
        Command::Psnr(a) => to_json(&cmd_psnr(&a.a, &a.b, a.peak)?)?,
    };
    Ok(json)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    pool.install(f)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegradeReport {
    pub format_version: u32,
    pub command: String,
    pub input: PathBuf,
    pub output: PathBuf,
    pub q: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
}

pub fn cmd_degrade(
    input: &Path,
    q: usize,
    noise_sigma: f64,
    seed: u64,
    output: &Path,
) -> Result<DegradeReport> {
    let hr = load_image(input)?;
    let lr = degrade(&hr, q, noise_sigma, seed)?;
    save_image(&lr, output)?;
    Ok(DegradeReport {
        format_version: REPORT_VERSION,
        command: "degrade".into(),
        input: input.to_owned(),
        output: output.to_owned(),
        q,
        noise_sigma,
        seed,
        width: lr.width(),
        height: lr.height(),
    })
}

/// Summary of one mixture fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub nll_trace: Vec<f64>,
    pub final_nll: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub resets: usize,
    pub monotonicity_violations: Vec<usize>,
    pub cov_reg: f64,
    /// Which covariance fixed point was active.
    pub covariance_update: String,
    pub betas: Vec<f64>,
    pub training_samples: usize,
}

impl FitSummary {
    fn new(report: &FitReport, model: &JointModel, training_samples: usize) -> Self {
        Self {
            nll_trace: report.nll_trace.clone(),
            final_nll: report.final_nll(),
            outer_iterations: report.outer_iterations,
            converged: report.converged,
            resets: report.resets.len(),
            monotonicity_violations: report.monotonicity_violations.clone(),
            cov_reg: report.cov_reg,
            covariance_update: if report.paper_literal_cov {
                "literal".into()
            } else {
                "stationary".into()
            },
            betas: model.ggmm().components().iter().map(|c| c.beta()).collect(),
            training_samples,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub format_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub model: PathBuf,
    pub fit: FitSummary,
}

/// Upper-left quarter of an HR/LR pair (or the full pair).
fn training_pair(hr: &GrayImage, lr: &GrayImage, q: usize, full: bool) -> Result<(GrayImage, GrayImage)> {
    if hr.width() != q * lr.width() || hr.height() != q * lr.height() {
        return Err(Error::Image(format!(
            "HR image {}x{} is not {q}x the LR image {}x{}",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height()
        )));
    }
    if full {
        return Ok((hr.clone(), lr.clone()));
    }
    let (lh, lw) = (lr.height() / 2, lr.width() / 2);
    Ok((crop(hr, 0, 0, q * lh, q * lw)?, crop(lr, 0, 0, lh, lw)?))
}

fn train_pair(hr: &GrayImage, lr: &GrayImage, cfg: &RunConfig) -> Result<(JointModel, FitReport, usize)> {
    let (hr_t, lr_t) = training_pair(hr, lr, cfg.geometry.q, cfg.full_image)?;
    let g = &cfg.geometry;
    if lr_t.width() < g.tau || lr_t.height() < g.tau {
        return Err(Error::Image(format!(
            "training region {}x{} is smaller than the {}x{} LR patch",
            lr_t.width(),
            lr_t.height(),
            g.tau,
            g.tau
        )));
    }
    let samples = crate::pipeline::grid_positions(lr_t.height(), g.tau, g.stride_train).len()
        * crate::pipeline::grid_positions(lr_t.width(), g.tau, g.stride_train).len();
    if samples <= cfg.em.components {
        return Err(Error::InsufficientData(format!(
            "{samples} training patches for {} components",
            cfg.em.components
        )));
    }
    let (model, report) = with_workers(cfg.workers, || train(&hr_t, &lr_t, g, &cfg.em))?;
    Ok((model, report, samples))
}

pub fn cmd_train(hr_path: &Path, lr_path: &Path, cfg: &RunConfig, model_out: &Path) -> Result<TrainReport> {
    cfg.validate()?;
    let hr = load_image(hr_path)?;
    let lr = load_image(lr_path)?;
    let (model, report, samples) = train_pair(&hr, &lr, cfg)?;
    model.save(model_out)?;
    Ok(TrainReport {
        format_version: REPORT_VERSION,
        command: "train".into(),
        config: cfg.clone(),
        model: model_out.to_owned(),
        fit: FitSummary::new(&report, &model, samples),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrReport {
    pub format_version: u32,
    pub command: String,
    pub input: PathBuf,
    pub model: PathBuf,
    pub output: PathBuf,
    pub width: usize,
    pub height: usize,
}

pub fn cmd_sr(lr_path: &Path, model_path: &Path, output: &Path, workers: usize) -> Result<SrReport> {
    let model = JointModel::load(model_path)?;
    let lr = load_image(lr_path)?;
    let out = with_workers(workers, || super_resolve(&lr, &model))?;
    save_image(&out, output)?;
    Ok(SrReport {
        format_version: REPORT_VERSION,
        command: "sr".into(),
        input: lr_path.to_owned(),
        model: model_path.to_owned(),
        output: output.to_owned(),
        width: out.width(),
        height: out.height(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub input: PathBuf,
    /// PSNR in dB against the ground truth, keyed by method.
    pub psnr: BTreeMap<String, Psnr>,
    pub fits: BTreeMap<String, FitSummary>,
}

pub const METHOD_GGMM: &str = "mmse-ggmm";
pub const METHOD_GMM: &str = "mmse-gmm";
pub const METHOD_NEAREST: &str = "nearest";

/// Degrade, train on the upper-left quarter with free and with unit shape,
/// reconstruct the whole image, compare against nearest-neighbour upsampling.
///
/// The LR input and every reconstruction are quantized to 8 bits first, so the
/// report matches running `degrade`, `sr` and `psnr` on the written files.
pub fn cmd_eval(hr_path: &Path, cfg: &RunConfig, output_dir: Option<&Path>) -> Result<EvalReport> {
    cfg.validate()?;
    let hr = load_image(hr_path)?;
    let q = cfg.geometry.q;
    let lr = quantize(&degrade(&hr, q, cfg.noise_sigma, cfg.em.seed)?)?;

    let mut gmm_cfg = cfg.clone();
    gmm_cfg.em.fix_beta = Some(1.0);
    let mut ggmm_cfg = cfg.clone();
    if ggmm_cfg.em.fix_beta == Some(1.0) {
        ggmm_cfg.em.fix_beta = None;
    }

    let mut psnrs = BTreeMap::new();
    let mut fits = BTreeMap::new();
    let mut outputs = vec![("lr".to_string(), lr.clone())];
    for (name, run) in [(METHOD_GGMM, &ggmm_cfg), (METHOD_GMM, &gmm_cfg)] {
        let (model, report, samples) = train_pair(&hr, &lr, run)?;
        let sr = quantize(&with_workers(run.workers, || super_resolve(&lr, &model))?)?;
        psnrs.insert(name.to_string(), psnr(&hr, &sr, 1.0)?);
        fits.insert(name.to_string(), FitSummary::new(&report, &model, samples));
        outputs.push((name.to_string(), sr));
    }
    let nn = quantize(&upsample_nearest(&lr, q)?)?;
    psnrs.insert(METHOD_NEAREST.to_string(), psnr(&hr, &nn, 1.0)?);
    outputs.push((METHOD_NEAREST.to_string(), nn));

    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?;
        for (name, img) in &outputs {
            save_image(img, dir.join(format!("{name}.pgm")))?;
        }
    }
    Ok(EvalReport {
        format_version: REPORT_VERSION,
        command: "eval".into(),
        config: cfg.clone(),
        input: hr_path.to_owned(),
        psnr: psnrs,
        fits,
    })
}

fn quantize(img: &GrayImage) -> Result<GrayImage> {
    GrayImage::from_u8(img.width(), img.height(), &img.to_u8())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsnrReport {
    pub format_version: u32,
    pub command: String,
    pub psnr: Psnr,
}

pub fn cmd_psnr(a: &Path, b: &Path, peak: f64) -> Result<PsnrReport> {
    let value = psnr(&load_image(a)?, &load_image(b)?, peak)?;
    Ok(PsnrReport {
        format_version: REPORT_VERSION,
        command: "psnr".into(),
        psnr: value,
    })
}
