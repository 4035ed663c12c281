use std::path::{Path, PathBuf};

use super::{align_assets, load_ohlc_csv, AlignmentPolicy, MarketError, MarketFrame};

/// One `TICKER = path` line of a manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub ticker: String,
    pub path: PathBuf,
}

/// Portfolio composition: which CSV file backs each ticker, and how to align them.
///
/// ```text
/// # crypto portfolio
/// alignment = forward_fill
/// BTC = data/btc.csv
/// ETH = data/eth.csv
/// ```
///
/// Relative paths resolve against the manifest's directory. `alignment`
/// defaults to `intersect`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortfolioManifest {
    pub alignment: AlignmentPolicy,
    pub assets: Vec<ManifestEntry>,
}

impl PortfolioManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MarketError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    pub fn parse(text: &str, base: &Path, source: &str) -> Result<Self, MarketError> {
        let mut alignment = AlignmentPolicy::Intersect;
        let mut assets: Vec<ManifestEntry> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| MarketError::Manifest { path: source.to_string(), line: k + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "alignment" {
                alignment = value.parse().map_err(err)?;
                continue;
            }
            if key.is_empty() || value.is_empty() {
                return Err(err("empty ticker or path".into()));
            }
            if assets.iter().any(|a| a.ticker == key) {
                return Err(err(format!("duplicate ticker `{key}`")));
            }
            let p = Path::new(value);
            let path = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            assets.push(ManifestEntry { ticker: key.to_string(), path });
        }
        if assets.is_empty() {
            return Err(MarketError::Manifest { path: source.to_string(), line: 0, reason: "no assets listed".into() });
        }
        Ok(PortfolioManifest { alignment, assets })
    }

    /// Loads every listed CSV and aligns them in manifest order.
    pub fn load_frame(&self) -> Result<MarketFrame, MarketError> {
        let series = self
            .assets
            .iter()
            .map(|a| load_ohlc_csv(&a.path, &a.ticker))
            .collect::<Result<Vec<_>, _>>()?;
        align_assets(&series, self.alignment)
    }

    /// Renders the manifest back to its text form with absolute paths.
    pub fn to_text(&self) -> String {
        let mut out = format!("alignment = {}\n", self.alignment);
        for a in &self.assets {
            out.push_str(&format!("{} = {}\n", a.ticker, a.path.display()));
        }
        out
    }
}
