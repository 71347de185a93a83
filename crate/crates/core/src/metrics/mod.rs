//! Image-quality and throughput metrics.

mod fps;
mod psnr;
mod report;
mod ssim;

pub use fps::{fps_meter, measure_fps};
pub use psnr::{psnr, psnr_values};
pub use report::MetricReport;
pub use ssim::{ssim, ssim_components, SsimComponents, SsimParams};

use crate::image::ImageError;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("length mismatch: {0} vs {1} values")]
    Length(usize, usize),
    #[error("max pixel value must be positive, got {0}")]
    MaxValue(f64),
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall { width: u32, height: u32, window: usize },
    #[error("invalid SSIM parameters: {0}")]
    Params(String),
    #[error("elapsed time must be positive, got {0} s")]
    Elapsed(f64),
}
