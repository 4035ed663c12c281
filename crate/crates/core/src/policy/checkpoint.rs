//! Plain-text checkpoint format.
//!
//! ```text
//! eiie-pg checkpoint v1
//! seed 42
//! n_assets 9
//! window 50
//! k1 3
//! c1 2
//! c2 20
//! block conv1.kernel 2 3 3
//! 0.0123 -0.51 ...
//! block conv1.bias 2
//! 0 0
//! ...
//! ```
//!
//! Every block is a `block NAME DIMS...` header followed by one line of
//! whitespace-separated values in row-major order. Values are written with
//! Rust's shortest round-trip formatting, so loading restores the exact bits.

use std::io::Write;
use std::path::Path;

use super::{PolicyConfig, PolicyError, PolicyParams, BLOCKS};
use crate::autodiff::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "eiie-pg checkpoint";

impl PolicyParams {
    pub fn to_checkpoint(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "{MAGIC} v{CHECKPOINT_VERSION}\nseed {}\nn_assets {}\nwindow {}\nk1 {}\nc1 {}\nc2 {}\n",
            self.seed, c.n_assets, c.window, c.k1, c.c1, c.c2
        );
        for (name, t) in self.blocks() {
            let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("block {name} {}\n", dims.join(" ")));
            let values: Vec<String> = t.data().iter().map(|v| v.to_string()).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, PolicyError> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| PolicyError::Checkpoint { line: 0, reason: format!("missing {what}") })
        };
        let bad = |line: usize, reason: String| PolicyError::Checkpoint { line, reason };

        let (line, header) = next("header")?;
        let expected = format!("{MAGIC} v{CHECKPOINT_VERSION}");
        if header != expected {
            return Err(bad(line, format!("expected `{expected}`, found `{header}`")));
        }
        let mut field = |name: &str| -> Result<u64, PolicyError> {
            let (line, l) = next(name)?;
            let value = l
                .strip_prefix(name)
                .map(str::trim)
                .ok_or_else(|| bad(line, format!("expected `{name}`")))?;
            value.parse().map_err(|_| bad(line, format!("`{value}` is not an integer")))
        };
        let seed = field("seed")?;
        let mut dims = [0usize; 5];
        for (slot, name) in dims.iter_mut().zip(["n_assets", "window", "k1", "c1", "c2"]) {
            *slot = field(name)? as usize;
        }
        let config = PolicyConfig { n_assets: dims[0], window: dims[1], k1: dims[2], c1: dims[3], c2: dims[4] };
        let mut params = PolicyParams::init(config, seed)?;

        let names: Vec<&'static str> = params.blocks().iter().map(|(n, _)| *n).collect();
        let mut loaded: Vec<Tensor> = Vec::with_capacity(BLOCKS);
        for (name, want) in names.iter().zip(params.blocks().map(|(_, t)| t.shape().to_vec())) {
            let (line, head) = next("block header")?;
            let mut parts = head.split_whitespace();
            if parts.next() != Some("block") || parts.next() != Some(*name) {
                return Err(bad(line, format!("expected block `{name}`")));
            }
            let shape: Vec<usize> = parts
                .map(|d| d.parse().map_err(|_| bad(line, format!("bad dimension `{d}`"))))
                .collect::<Result<_, _>>()?;
            if shape != want {
                return Err(bad(line, format!("block `{name}` has shape {shape:?}, config implies {want:?}")));
            }
            let (line, body) = next("block values")?;
            let data: Vec<f64> = body
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| bad(line, format!("bad value `{v}`"))))
                .collect::<Result<_, _>>()?;
            loaded.push(Tensor::new(shape, data).map_err(|e| bad(line, e.to_string()))?);
        }
        for (slot, t) in params.blocks_mut().into_iter().zip(loaded) {
            *slot = t;
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PolicyError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_checkpoint().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}
