//! Seeded campaigns: every selected normalization method is trained and
//! backtested once per seed, and the runs are summarised per method.

mod config;
mod report;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::market::{split_periods, MarketError, PeriodSplit, PortfolioManifest};
use crate::metrics::{MetricReport, MetricsError};
use crate::normalization::{fit_data_max, NormalizationError, NormalizationKind, NormalizationScheme};
use crate::policy::{PolicyConfig, PolicyError, PolicyParams};
use crate::trainer::{RunLog, TrainError, Trainer, Trajectory};

pub use config::ExperimentConfig;
pub use report::{
    emit_report, load_report, read_fapv_samples, regenerate_report, render_table, CI_CONVENTION, SHARPE_CONVENTION,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed report {path}: {reason}")]
    Report { path: PathBuf, reason: String },
    #[error("campaign has no successful runs")]
    EmptyCampaign,
    #[error("all {0} runs failed")]
    AllRunsFailed(usize),
    #[error("metrics of seed {seed} are not finite")]
    NonFiniteMetrics { seed: u64 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Outcome of one seeded train/backtest run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: NormalizationKind,
    pub seed: u64,
    pub metrics: MetricReport,
    /// Path of the backtest trajectory, relative to the campaign directory.
    pub trajectory_file: String,
    pub wall_time_secs: f64,
    /// Per-asset scales fitted on the training period (data_max only).
    pub scales: Option<Vec<f64>>,
}

/// A run that errored; excluded from aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub method: NormalizationKind,
    pub seed: u64,
    pub error: String,
}

/// Mean with the half-width of its 95% normal confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    /// Set when `n == 1`, where the half-width is reported as 0.
    pub single_sample: bool,
}

/// `mean ± 1.96 * s / sqrt(n)` with the sample standard deviation `s`.
/// `None` for an empty slice.
pub fn aggregate(values: &[f64]) -> Option<Aggregate> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some(Aggregate { mean, half_width: 0.0, n, single_sample: true });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(Aggregate { mean, half_width: 1.96 * var.sqrt() / (n as f64).sqrt(), n, single_sample: false })
}

/// Per-method aggregates. Sharpe aggregates cover only runs where it is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub fapv: Aggregate,
    pub mdd: Aggregate,
    pub sharpe: Option<Aggregate>,
    pub sharpe_excess: Option<Aggregate>,
    pub max_fapv: f64,
}

impl MethodSummary {
    /// `None` when `runs` is empty.
    pub fn from_runs(runs: &[RunResult]) -> Option<Self> {
        let collect = |f: &dyn Fn(&MetricReport) -> Option<f64>| -> Vec<f64> {
            runs.iter().filter_map(|r| f(&r.metrics)).collect()
        };
        let fapvs = collect(&|m| Some(m.fapv));
        Some(MethodSummary {
            fapv: aggregate(&fapvs)?,
            mdd: aggregate(&collect(&|m| Some(m.mdd)))?,
            sharpe: aggregate(&collect(&|m| m.sharpe)),
            sharpe_excess: aggregate(&collect(&|m| m.sharpe_excess)),
            max_fapv: fapvs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: NormalizationKind,
    /// Successful runs in seed order.
    pub runs: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
    /// `None` if every run of this method failed.
    pub summary: Option<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub ci_convention: String,
    pub sharpe_convention: String,
    /// The configuration as resolved, including CLI overrides.
    pub config: String,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodReport>,
    pub warnings: usize,
}

impl CampaignReport {
    /// Assembles a report from run outcomes, recomputing every aggregate.
    pub fn assemble(config: &ExperimentConfig, mut runs: Vec<RunResult>, mut failures: Vec<RunFailure>) -> Self {
        runs.sort_by_key(|r| (r.method, r.seed));
        failures.sort_by_key(|f| (f.method, f.seed));
        let methods = config
            .methods
            .iter()
            .map(|&method| {
                let runs: Vec<RunResult> = runs.iter().filter(|r| r.method == method).cloned().collect();
                MethodReport {
                    method,
                    summary: MethodSummary::from_runs(&runs),
                    failures: failures.iter().filter(|f| f.method == method).cloned().collect(),
                    runs,
                }
            })
            .collect();
        CampaignReport {
            ci_convention: CI_CONVENTION.to_string(),
            sharpe_convention: SHARPE_CONVENTION.to_string(),
            config: config.to_text(),
            seeds: (0..config.runs).map(|k| config.seed(k)).collect(),
            methods,
            warnings: failures.len(),
        }
    }

    pub fn successful_runs(&self) -> usize {
        self.methods.iter().map(|m| m.runs.len()).sum()
    }

    pub fn method(&self, kind: NormalizationKind) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == kind)
    }

    /// Copy with wall times zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for m in &mut out.methods {
            for r in &mut m.runs {
                r.wall_time_secs = 0.0;
            }
        }
        out
    }
}

/// Market data shared read-only by every run of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignData {
    pub split: PeriodSplit,
    pub train: Arc<crate::market::MarketFrame>,
    pub test: Arc<crate::market::MarketFrame>,
}

impl CampaignData {
    pub fn load(config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let frame = PortfolioManifest::load(&config.manifest)?.load_frame()?;
        Self::from_frame(config, &frame)
    }

    pub fn from_frame(config: &ExperimentConfig, frame: &crate::market::MarketFrame) -> Result<Self, ExperimentError> {
        let split = split_periods(frame, config.train_range, config.test_range, config.time_window)?;
        Ok(CampaignData { train: Arc::new(split.train.clone()), test: Arc::new(split.test.clone()), split })
    }

    /// Training and test environments for `method`. Data-max scales are fitted
    /// on the training frame only.
    pub fn environments(
        &self,
        config: &ExperimentConfig,
        method: NormalizationKind,
    ) -> Result<(Environment, Environment), ExperimentError> {
        let scheme = match method {
            NormalizationKind::LastClose => NormalizationScheme::LastClose,
            NormalizationKind::LastPrice => NormalizationScheme::LastPrice,
            NormalizationKind::DataMax => fit_data_max(&self.train)?,
        };
        let env = |frame: &Arc<crate::market::MarketFrame>| {
            Environment::new(
                Arc::clone(frame),
                config.time_window,
                scheme.clone(),
                config.initial_value,
                config.commission_rate,
            )
        };
        Ok((env(&self.train)?, env(&self.test)?))
    }
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub result: RunResult,
    pub trajectory: Trajectory,
    pub log: RunLog,
}

pub fn trajectory_file(method: NormalizationKind, seed: u64) -> String {
    format!("trajectories/{method}_seed{seed}.csv")
}

pub fn log_file(method: NormalizationKind, seed: u64) -> String {
    format!("logs/{method}_seed{seed}.csv")
}

/// Initialises a policy from `seed`, trains it on the training period and
/// backtests it on the test period with online updates.
pub fn run_single(
    config: &ExperimentConfig,
    data: &CampaignData,
    method: NormalizationKind,
    seed: u64,
) -> Result<RunOutput, ExperimentError> {
    let clock = Instant::now();
    let (train_env, test_env) = data.environments(config, method)?;
    let policy = PolicyParams::init(PolicyConfig::new(train_env.n_assets(), config.time_window), seed)?;
    let mut trainer = Trainer::new(&train_env, policy, config.trainer, seed)?;
    let validation = (config.validate_every > 0).then_some((&test_env, config.validate_every));
    trainer.train(config.trainer.steps, validation)?;
    let trajectory = trainer.backtest(&test_env, config.trainer.online_steps)?;
    let metrics = MetricReport::from_trajectory(&trajectory)?;
    let finite = [Some(metrics.fapv), Some(metrics.mdd), metrics.sharpe, metrics.sharpe_excess]
        .into_iter()
        .flatten()
        .all(f64::is_finite);
    if !finite {
        return Err(ExperimentError::NonFiniteMetrics { seed });
    }
    let scales = match train_env.scheme() {
        NormalizationScheme::DataMax { scales, .. } => Some(scales.clone()),
        _ => None,
    };
    Ok(RunOutput {
        result: RunResult {
            method,
            seed,
            metrics,
            trajectory_file: trajectory_file(method, seed),
            wall_time_secs: clock.elapsed().as_secs_f64(),
            scales,
        },
        trajectory,
        log: trainer.log().clone(),
    })
}

/// A finished campaign: the report plus the per-run artifacts it references.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub report: CampaignReport,
    /// Successful runs, in the same order as the report.
    pub outputs: Vec<RunOutput>,
}

/// Runs `config.runs` seeds for every method. Runs execute on up to
/// `config.workers` threads (0 = one per core); results are ordered by
/// method then seed regardless of scheduling.
pub fn run_campaign(config: &ExperimentConfig) -> Result<Campaign, ExperimentError> {
    config.validate()?;
    let data = CampaignData::load(config)?;
    run_campaign_on(config, &data)
}

/// As [`run_campaign`], with the market data already loaded.
pub fn run_campaign_on(config: &ExperimentConfig, data: &CampaignData) -> Result<Campaign, ExperimentError> {
    use rayon::prelude::*;

    let jobs: Vec<(NormalizationKind, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| (0..config.runs).map(move |k| (m, config.seed(k))))
        .collect();
    let run = |&(method, seed): &(NormalizationKind, u64)| {
        log::info!("run {method} seed {seed}");
        run_single(config, data, method, seed)
    };
    let outcomes: Vec<Result<RunOutput, ExperimentError>> = if config.workers == 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| ExperimentError::Config { line: 0, reason: format!("worker pool: {e}") })?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };

    let mut outputs = Vec::new();
    let mut failures = Vec::new();
    for (&(method, seed), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(out) => outputs.push(out),
            Err(e) => {
                log::warn!("run {method} seed {seed} failed: {e}");
                failures.push(RunFailure { method, seed, error: e.to_string() });
            }
        }
    }
    if outputs.is_empty() {
        return Err(ExperimentError::AllRunsFailed(jobs.len()));
    }
    outputs.sort_by_key(|o| (o.result.method, o.result.seed));
    let report = CampaignReport::assemble(config, outputs.iter().map(|o| o.result.clone()).collect(), failures);
    Ok(Campaign { report, outputs })
}

/// Data and configuration facts checked without training.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub tickers: Vec<String>,
    pub frame_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_decisions: usize,
    pub test_decisions: usize,
}

/// Loads and splits the data, builds every environment and checks that the
/// batch fits the training episode.
pub fn validate(config: &ExperimentConfig) -> Result<ValidationSummary, ExperimentError> {
    config.validate()?;
    let frame = PortfolioManifest::load(&config.manifest)?.load_frame()?;
    let data = CampaignData::from_frame(config, &frame)?;
    let mut decisions = (0, 0);
    for &method in &config.methods {
        let (train, test) = data.environments(config, method)?;
        decisions = (train.decidable_steps(), test.decidable_steps());
    }
    if config.trainer.batch_size > decisions.0 {
        return Err(TrainError::BatchTooLarge { batch: config.trainer.batch_size, len: decisions.0 }.into());
    }
    Ok(ValidationSummary {
        tickers: frame.tickers().to_vec(),
        frame_rows: frame.len(),
        train_rows: data.train.len(),
        test_rows: data.test.len(),
        train_decisions: decisions.0,
        test_decisions: decisions.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[1.0, 1.2]).unwrap();
        assert!((a.mean - 1.1).abs() < 1e-15);
        assert!((a.half_width - 0.196).abs() < 1e-12, "{}", a.half_width);
        let same = aggregate(&[1.25; 5]).unwrap();
        assert_eq!(same.half_width, 0.0);
        let one = aggregate(&[2.0]).unwrap();
        assert!(one.single_sample && one.half_width == 0.0);
        assert_eq!(aggregate(&[]), None);
    }
}
