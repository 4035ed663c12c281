//! Minimal dense tensors with reverse-mode differentiation.
//!
//! A [`Tape`] owns every value produced during a forward pass; [`Var`]
//! handles index into it. Shapes are never broadcast implicitly: scalar
//! expansion goes through [`Tape::expand`].

mod tape;
mod tensor;

use thiserror::Error;

pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("shape {shape:?} does not hold {len} values")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("axis {axis} out of range for shape {shape:?}")]
    InvalidAxis { axis: usize, shape: Vec<usize> },
    #[error("slice {start}..{} on axis {axis} exceeds shape {shape:?}", start + len)]
    SliceOutOfRange { axis: usize, start: usize, len: usize, shape: Vec<usize> },
    #[error("concat of zero tensors")]
    EmptyConcat,
    #[error("loss must hold one value, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
}

/// Largest relative disagreement between the tape gradient of `f` at `x`
/// and central differences with step `eps`, using
/// `max(|analytic|, |numeric|, 1e-8)` as the denominator.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let xv = tape.param(x.clone());
    let loss = f(&mut tape, xv)?;
    tape.backward(loss)?;
    let analytic = tape.grad(xv).unwrap_or_else(|| Tensor::zeros(x.shape()));

    let eval = |probe: Tensor| -> Result<f64, AutodiffError> {
        let mut t = Tape::new();
        let v = t.constant(probe);
        let out = f(&mut t, v)?;
        Ok(t.value(out).item())
    };
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[k] += eps;
        let mut minus = x.clone();
        minus.data_mut()[k] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        let a = analytic.data()[k];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
