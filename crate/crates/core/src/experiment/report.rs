use std::path::{Path, PathBuf};

use crate::normalization::NormalizationKind;

use super::{log_file, Campaign, CampaignReport, ExperimentConfig, ExperimentError, RunResult};

pub const CI_CONVENTION: &str = "mean ± 1.96 * sample_std / sqrt(n) (95% normal CI of the mean); n = 1 reports 0";
pub const SHARPE_CONVENTION: &str =
    "population std; `sharpe` uses rho_f = 0 on rho_t = V_t / V_(t-1), `sharpe_excess` uses rho_f = 1";

const SUMMARY: &str = "summary.json";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io { path: path.to_path_buf(), source: e.into() }
}

/// Writes a campaign to `out_dir`:
///
/// - `summary.json`: the full [`CampaignReport`]
/// - `runs.csv`: one metrics row per successful run
/// - `aggregates.csv`: mean and half-width per method and metric, plus max FAPV
/// - `fapv_<method>.txt`: FAPV samples, one per line
/// - `failures.csv`: runs excluded from the aggregates
/// - `config.resolved.txt`: the resolved configuration and its seeds
/// - `trajectories/` and `logs/`: per-run backtest paths and training curves
///
/// Nothing is written if the campaign has no successful runs.
pub fn emit_report(campaign: &Campaign, out_dir: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let report = &campaign.report;
    if report.successful_runs() == 0 {
        return Err(ExperimentError::EmptyCampaign);
    }
    let dir = out_dir.as_ref();
    for sub in ["trajectories", "logs"] {
        std::fs::create_dir_all(dir.join(sub)).map_err(io(dir))?;
    }
    write_tables(report, dir)?;
    for out in &campaign.outputs {
        let path = dir.join(&out.result.trajectory_file);
        out.trajectory.write_csv(&path).map_err(io(&path))?;
        let path = dir.join(log_file(out.result.method, out.result.seed));
        out.log.write_csv(&path).map_err(io(&path))?;
    }
    Ok(())
}

fn write_tables(report: &CampaignReport, dir: &Path) -> Result<(), ExperimentError> {
    let path = dir.join(SUMMARY);
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, json + "\n").map_err(io(&path))?;

    let path = dir.join("config.resolved.txt");
    let seeds: Vec<String> = report.seeds.iter().map(|s| s.to_string()).collect();
    std::fs::write(&path, format!("{}# seeds: {}\n", report.config, seeds.join(" "))).map_err(io(&path))?;

    let path = dir.join("runs.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["method", "seed", "fapv", "mdd", "sharpe", "sharpe_excess", "n_steps", "wall_time_secs", "trajectory_file"])
        .map_err(csv_err(&path))?;
    for r in report.methods.iter().flat_map(|m| &m.runs) {
        let m = &r.metrics;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        w.write_record([
            r.method.to_string(),
            r.seed.to_string(),
            m.fapv.to_string(),
            m.mdd.to_string(),
            opt(m.sharpe),
            opt(m.sharpe_excess),
            m.n_steps.to_string(),
            r.wall_time_secs.to_string(),
            r.trajectory_file.clone(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join("aggregates.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["method", "metric", "mean", "half_width", "n", "single_sample"]).map_err(csv_err(&path))?;
    for m in &report.methods {
        let Some(s) = &m.summary else { continue };
        let rows = [("fapv", Some(s.fapv)), ("mdd", Some(s.mdd)), ("sharpe", s.sharpe), ("sharpe_excess", s.sharpe_excess)];
        for (name, agg) in rows {
            let Some(a) = agg else { continue };
            w.write_record([
                m.method.to_string(),
                name.to_string(),
                a.mean.to_string(),
                a.half_width.to_string(),
                a.n.to_string(),
                a.single_sample.to_string(),
            ])
            .map_err(csv_err(&path))?;
        }
        w.write_record([m.method.to_string(), "max_fapv".into(), s.max_fapv.to_string(), String::new(), s.fapv.n.to_string(), String::new()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io(&path))?;

    for m in &report.methods {
        let path = dir.join(format!("fapv_{}.txt", m.method));
        let lines: String = m.runs.iter().map(|r| format!("{}\n", r.metrics.fapv)).collect();
        std::fs::write(&path, lines).map_err(io(&path))?;
    }

    let path = dir.join("failures.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["method", "seed", "error"]).map_err(csv_err(&path))?;
    for f in report.methods.iter().flat_map(|m| &m.failures) {
        w.write_record([f.method.to_string(), f.seed.to_string(), f.error.clone()]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io(&path))?;
    Ok(())
}

/// Reads `summary.json` from a campaign directory.
pub fn load_report(dir: impl AsRef<Path>) -> Result<CampaignReport, ExperimentError> {
    let path = dir.as_ref().join(SUMMARY);
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Report { path, reason: e.to_string() })
}

/// Recomputes every aggregate of a campaign directory from its per-run
/// results and rewrites the summary tables. Trajectories are left alone.
pub fn regenerate_report(dir: impl AsRef<Path>) -> Result<CampaignReport, ExperimentError> {
    let dir = dir.as_ref();
    let stored = load_report(dir)?;
    let config = ExperimentConfig::parse(&stored.config, Path::new(""))
        .map_err(|e| ExperimentError::Report { path: dir.join(SUMMARY), reason: e.to_string() })?;
    let runs: Vec<RunResult> = stored.methods.iter().flat_map(|m| m.runs.clone()).collect();
    let failures = stored.methods.iter().flat_map(|m| m.failures.clone()).collect();
    let mut report = CampaignReport::assemble(&config, runs, failures);
    report.seeds = stored.seeds;
    if report.successful_runs() == 0 {
        return Err(ExperimentError::EmptyCampaign);
    }
    write_tables(&report, dir)?;
    Ok(report)
}

/// Human-readable table of per-method aggregates.
pub fn render_table(report: &CampaignReport) -> String {
    let mut s = format!("{:<12} {:>22} {:>22} {:>22} {:>22} {:>9}\n", "method", "FAPV", "MDD", "SR", "SR(excess)", "max FAPV");
    let cell = |a: Option<super::Aggregate>| {
        a.map_or("n/a".to_string(), |a| format!("{:.4} ± {:.4}", a.mean, a.half_width))
    };
    for m in &report.methods {
        match &m.summary {
            Some(sum) => s.push_str(&format!(
                "{:<12} {:>22} {:>22} {:>22} {:>22} {:>9.4}\n",
                m.method.as_str(),
                cell(Some(sum.fapv)),
                cell(Some(sum.mdd)),
                cell(sum.sharpe),
                cell(sum.sharpe_excess),
                sum.max_fapv
            )),
            None => s.push_str(&format!("{:<12} all runs failed\n", m.method.as_str())),
        }
    }
    if report.warnings > 0 {
        s.push_str(&format!("{} run(s) failed and were excluded\n", report.warnings));
    }
    s
}

/// FAPV samples of `method` as stored in a campaign directory.
pub fn read_fapv_samples(dir: impl AsRef<Path>, method: NormalizationKind) -> Result<Vec<f64>, ExperimentError> {
    let path: PathBuf = dir.as_ref().join(format!("fapv_{method}.txt"));
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    text.lines()
        .map(|l| l.trim().parse().map_err(|_| ExperimentError::Report { path: path.clone(), reason: format!("bad sample `{l}`") }))
        .collect()
}
