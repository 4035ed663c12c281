use super::EnvError;
use crate::market::MarketFrame;
use crate::normalization::{NormalizationScheme, RawWindow};

/// Number of feature planes: close, high, low.
pub const FEATURES: usize = 3;

/// Observation tensor of shape `(3, n, window)`, planes ordered close, high, low.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTensor {
    values: Vec<f64>,
    n_assets: usize,
    window: usize,
    step: usize,
}

impl StateTensor {
    pub fn new(values: Vec<f64>, n_assets: usize, window: usize, step: usize) -> Self {
        assert_eq!(values.len(), FEATURES * n_assets * window, "state buffer size");
        StateTensor { values, n_assets, window, step }
    }

    /// Row-major `(feature, asset, time)` buffer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Frame index of the last column.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn shape(&self) -> [usize; 3] {
        [FEATURES, self.n_assets, self.window]
    }

    pub fn get(&self, feature: usize, asset: usize, time: usize) -> f64 {
        self.values[(feature * self.n_assets + asset) * self.window + time]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Same state with asset rows `a` and `b` exchanged.
    pub fn swap_assets(&self, a: usize, b: usize) -> StateTensor {
        let mut out = self.clone();
        let t = self.window;
        for f in 0..FEATURES {
            for j in 0..t {
                let ia = (f * self.n_assets + a) * t + j;
                let ib = (f * self.n_assets + b) * t + j;
                out.values.swap(ia, ib);
            }
        }
        out
    }
}

/// Builds the observation at decision step `step` from the last `window`
/// columns. For data normalization `frame` must already be scaled.
pub fn build_state(
    frame: &MarketFrame,
    step: usize,
    window: usize,
    scheme: &NormalizationScheme,
) -> Result<StateTensor, EnvError> {
    let raw = RawWindow::from_frame(frame, step, window).ok_or(EnvError::WindowOutOfRange {
        step,
        window,
        len: frame.len(),
    })?;
    Ok(scheme.normalize_window(&raw))
}
