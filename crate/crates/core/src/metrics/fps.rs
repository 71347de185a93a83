use std::time::Instant;

use super::MetricsError;

/// Frames per second over a measured interval.
pub fn fps_meter(frame_count: u64, elapsed_secs: f64) -> Result<f64, MetricsError> {
    if !(elapsed_secs > 0.0) || !elapsed_secs.is_finite() {
        return Err(MetricsError::Elapsed(elapsed_secs));
    }
    Ok(frame_count as f64 / elapsed_secs)
}

/// Runs `frame` `n` times and reports the achieved rate along with the
/// elapsed wall time.
pub fn measure_fps(n: u64, mut frame: impl FnMut()) -> Result<(f64, f64), MetricsError> {
    let start = Instant::now();
    for _ in 0..n {
        frame();
    }
    let elapsed = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok((fps_meter(n, elapsed)?, elapsed))
}
