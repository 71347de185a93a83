//! Photometric loss, analytic gradients of the reference renderer, and a
//! plain gradient-descent fitting loop.

mod backward;
mod fit;
mod loss;
pub mod scenario;

pub use backward::{render_with_gradients, SplatGrad, SplatGradients};
pub use fit::{fit_splats, loss_history_csv, FitConfig, FitResult, LearningRates};
pub use loss::photometric_loss;

use crate::image::ImageError;

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("target is {found:?} but camera expects {expected:?} with 3 channels")]
    Target {
        expected: (u32, u32),
        found: (u32, u32, u8),
    },
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error("non-finite loss at iteration {iteration}")]
    NonFinite { iteration: usize },
}
