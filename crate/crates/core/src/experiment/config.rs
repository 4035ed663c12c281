use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::market::DateRange;
use crate::normalization::NormalizationKind;
use crate::trainer::TrainerConfig;

use super::ExperimentError;

/// A campaign description, read from flat `key = value` text.
///
/// ```text
/// manifest = data/crypto/manifest.txt
/// train_range = 2018-01-01..2022-12-31
/// test_range = 2023-01-01..2023-12-31
/// normalization = last_close, last_price, data_max
/// learning_rate = 0.00005
/// batch_size = 200
/// sample_bias = 0.002
/// steps = 300000
/// online_steps = 30
/// time_window = 50
/// commission_rate = 0.0025
/// initial_value = 100000
/// runs = 50
/// base_seed = 0
/// ```
///
/// `manifest`, `train_range` and `test_range` are required; everything else
/// falls back to the values above. Optional extras: `weight_decay` (0.01),
/// `workers` (0 = one per core), `validate_every` (0 = off) and
/// `log_every` (100).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub train_range: DateRange,
    pub test_range: DateRange,
    pub methods: Vec<NormalizationKind>,
    pub trainer: TrainerConfig,
    pub time_window: usize,
    pub commission_rate: f64,
    pub initial_value: f64,
    pub runs: usize,
    pub base_seed: u64,
    pub workers: usize,
    pub validate_every: u64,
}

const KEYS: &[&str] = &[
    "manifest",
    "train_range",
    "test_range",
    "normalization",
    "learning_rate",
    "batch_size",
    "sample_bias",
    "steps",
    "online_steps",
    "time_window",
    "commission_rate",
    "initial_value",
    "runs",
    "base_seed",
    "weight_decay",
    "workers",
    "validate_every",
    "log_every",
];

impl ExperimentConfig {
    /// Table I settings around the given data; all three methods, 50 runs.
    pub fn new(manifest: impl Into<PathBuf>, train_range: DateRange, test_range: DateRange) -> Self {
        ExperimentConfig {
            manifest: manifest.into(),
            train_range,
            test_range,
            methods: NormalizationKind::ALL.to_vec(),
            trainer: TrainerConfig::default(),
            time_window: 50,
            commission_rate: 0.0025,
            initial_value: 100_000.0,
            runs: 50,
            base_seed: 0,
            workers: 0,
            validate_every: 0,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io { path: path.to_path_buf(), source: e })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Relative manifest paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ExperimentError> {
        let mut seen: Vec<(&str, &str, usize)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ExperimentError::Config { line: k + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if seen.iter().any(|(s, _, _)| *s == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push((key, value, k + 1));
        }
        let lookup = |key: &str| seen.iter().find(|(s, _, _)| *s == key).map(|(_, v, l)| (*v, *l));
        let required = |key: &str| {
            lookup(key).ok_or_else(|| ExperimentError::Config { line: 0, reason: format!("missing required key `{key}`") })
        };

        let (manifest, _) = required("manifest")?;
        let manifest = Path::new(manifest);
        let manifest = if manifest.is_absolute() { manifest.to_path_buf() } else { base.join(manifest) };
        let range = |key: &str| -> Result<DateRange, ExperimentError> {
            let (v, line) = required(key)?;
            v.parse().map_err(|e: String| ExperimentError::Config { line, reason: format!("{key}: {e}") })
        };
        let mut cfg = ExperimentConfig::new(manifest, range("train_range")?, range("test_range")?);

        fn number<T: std::str::FromStr>(slot: &mut T, entry: Option<(&str, usize)>, key: &str) -> Result<(), ExperimentError> {
            if let Some((v, line)) = entry {
                *slot = v
                    .parse()
                    .map_err(|_| ExperimentError::Config { line, reason: format!("{key}: cannot parse `{v}`") })?;
            }
            Ok(())
        }
        number(&mut cfg.trainer.learning_rate, lookup("learning_rate"), "learning_rate")?;
        number(&mut cfg.trainer.batch_size, lookup("batch_size"), "batch_size")?;
        number(&mut cfg.trainer.sample_bias, lookup("sample_bias"), "sample_bias")?;
        number(&mut cfg.trainer.steps, lookup("steps"), "steps")?;
        number(&mut cfg.trainer.online_steps, lookup("online_steps"), "online_steps")?;
        number(&mut cfg.trainer.weight_decay, lookup("weight_decay"), "weight_decay")?;
        number(&mut cfg.trainer.log_every, lookup("log_every"), "log_every")?;
        number(&mut cfg.time_window, lookup("time_window"), "time_window")?;
        number(&mut cfg.commission_rate, lookup("commission_rate"), "commission_rate")?;
        number(&mut cfg.initial_value, lookup("initial_value"), "initial_value")?;
        number(&mut cfg.runs, lookup("runs"), "runs")?;
        number(&mut cfg.base_seed, lookup("base_seed"), "base_seed")?;
        number(&mut cfg.workers, lookup("workers"), "workers")?;
        number(&mut cfg.validate_every, lookup("validate_every"), "validate_every")?;

        if let Some((v, line)) = lookup("normalization") {
            let mut methods = Vec::new();
            for name in v.split(',') {
                let kind: NormalizationKind =
                    name.parse().map_err(|e: String| ExperimentError::Config { line, reason: e })?;
                if methods.contains(&kind) {
                    return Err(ExperimentError::Config { line, reason: format!("`{kind}` listed twice") });
                }
                methods.push(kind);
            }
            cfg.methods = methods;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks value ranges. Step counts and the learning rate may be zero;
    /// every other Table I setting must be positive.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |reason: &str| Err(ExperimentError::Config { line: 0, reason: reason.to_string() });
        self.trainer.validate().map_err(|e| ExperimentError::Config { line: 0, reason: e.to_string() })?;
        if self.methods.is_empty() {
            return bad("no normalization method selected");
        }
        if self.time_window < 2 {
            return bad("time_window must be at least 2");
        }
        if !(self.commission_rate > 0.0 && self.commission_rate < 1.0) {
            return bad("commission_rate must be in (0, 1)");
        }
        if !(self.initial_value > 0.0 && self.initial_value.is_finite()) {
            return bad("initial_value must be positive");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.train_range.end >= self.test_range.start {
            return bad("train_range must end before test_range starts");
        }
        Ok(())
    }

    /// Seed of run `k` (0-based).
    pub fn seed(&self, k: usize) -> u64 {
        self.base_seed + k as u64
    }

    /// Every key with its resolved value, in a form [`parse`](Self::parse) reads back.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let methods: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "manifest = {}", self.manifest.display());
        let _ = writeln!(s, "train_range = {}", self.train_range);
        let _ = writeln!(s, "test_range = {}", self.test_range);
        let _ = writeln!(s, "normalization = {}", methods.join(", "));
        let _ = writeln!(s, "learning_rate = {}", t.learning_rate);
        let _ = writeln!(s, "batch_size = {}", t.batch_size);
        let _ = writeln!(s, "sample_bias = {}", t.sample_bias);
        let _ = writeln!(s, "steps = {}", t.steps);
        let _ = writeln!(s, "online_steps = {}", t.online_steps);
        let _ = writeln!(s, "time_window = {}", self.time_window);
        let _ = writeln!(s, "commission_rate = {}", self.commission_rate);
        let _ = writeln!(s, "initial_value = {}", self.initial_value);
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let _ = writeln!(s, "weight_decay = {}", t.weight_decay);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "validate_every = {}", self.validate_every);
        let _ = writeln!(s, "log_every = {}", t.log_every);
        s
    }
}
