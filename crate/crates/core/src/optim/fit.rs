use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_with_gradients, OptimError, SplatGradients};
use crate::image::ImageBuffer;
use crate::splat::{logit, sigmoid, PinholeCamera, SplatSet};

/// Step sizes per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    pub position: f64,
    pub log_scale: f64,
    pub orientation: f64,
    pub opacity_logit: f64,
    pub sh: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            position: 1.0,
            log_scale: 150.0,
            orientation: 30.0,
            opacity_logit: 600.0,
            sh: 600.0,
        }
    }
}

impl LearningRates {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            position: self.position * k,
            log_scale: self.log_scale * k,
            orientation: self.orientation * k,
            opacity_logit: self.opacity_logit * k,
            sh: self.sh * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub iterations: usize,
    #[serde(default)]
    pub learning_rates: LearningRates,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rates: LearningRates::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.iterations == 0 {
            return Err(OptimError::Config("iterations must be at least 1".into()));
        }
        let lr = &self.learning_rates;
        let all = [lr.position, lr.log_scale, lr.orientation, lr.opacity_logit, lr.sh];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(OptimError::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub set: SplatSet,
    /// Mean loss across views before each update, one entry per iteration.
    pub history: Vec<f64>,
    /// Mean loss of the returned set.
    pub final_loss: f64,
}

/// Mean loss and summed gradients over all views. Views are evaluated in
/// parallel and reduced in view order.
fn evaluate(
    set: &SplatSet,
    views: &[(PinholeCamera, ImageBuffer)],
) -> Result<(f64, SplatGradients), OptimError> {
    let per_view: Vec<(f64, SplatGradients)> = views
        .par_iter()
        .map(|(cam, target)| render_with_gradients(cam, set, target))
        .collect::<Result<_, _>>()?;
    let k = 1.0 / views.len() as f64;
    let mut total = SplatGradients::zeros(set);
    let mut loss = 0.0;
    for (l, g) in &per_view {
        loss += l;
        total.accumulate(g, k);
    }
    Ok((loss * k, total))
}

fn step(set: &mut SplatSet, grads: &SplatGradients, lr: &LearningRates) {
    for (g, d) in set.splats_mut().iter_mut().zip(&grads.splats) {
        g.position -= d.position * lr.position;
        for a in 0..3 {
            g.scale[a] = (g.scale[a].ln() - lr.log_scale * d.log_scale[a]).exp();
        }
        let q = g.orientation - d.orientation * lr.orientation;
        let n = q.norm();
        if n > 0.0 && n.is_finite() {
            g.orientation = q / n;
        }
        let l = logit(g.opacity) - lr.opacity_logit * d.opacity_logit;
        g.opacity = sigmoid(l).clamp(1e-9, 1.0 - 1e-9);
        for (c, dc) in g.sh.iter_mut().zip(&d.sh) {
            *c -= lr.sh * dc;
        }
    }
}

/// Gradient descent on the mean L2 loss across `views`.
pub fn fit_splats(
    init: &SplatSet,
    views: &[(PinholeCamera, ImageBuffer)],
    cfg: &FitConfig,
) -> Result<FitResult, OptimError> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(OptimError::Config("at least one view is required".into()));
    }
    if init.is_empty() {
        return Err(OptimError::Config("initial splat set is empty".into()));
    }
    let mut set = init.clone();
    let mut history = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (loss, grads) = evaluate(&set, views)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(OptimError::NonFinite { iteration });
        }
        history.push(loss);
        step(&mut set, &grads, &cfg.learning_rates);
        log::debug!("iteration {iteration}: loss {loss:.6e}");
    }
    let (final_loss, _) = evaluate(&set, views)?;
    if !final_loss.is_finite() {
        return Err(OptimError::NonFinite {
            iteration: cfg.iterations,
        });
    }
    Ok(FitResult {
        set,
        history,
        final_loss,
    })
}

/// `iteration,loss` rows with a header line.
pub fn loss_history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{i},{l:.9e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::{render_reference, RigidTransform, SplatGaussian};
    use nalgebra::Vector3;

    fn views(set: &SplatSet) -> Vec<(PinholeCamera, ImageBuffer)> {
        let cam = PinholeCamera::centered(40.0, 40.0, 16, 16, RigidTransform::identity()).unwrap();
        let img = render_reference(&cam, set);
        vec![(cam, img)]
    }

    fn scene() -> SplatSet {
        SplatSet::from_splats(
            0,
            vec![SplatGaussian::isotropic(Vector3::new(0.0, 0.0, 1.0), 0.06, 0.6, [0.7, 0.3, 0.2])],
        )
        .unwrap()
    }

    #[test]
    fn optimal_init_keeps_zero_loss() {
        let set = scene();
        let cfg = FitConfig {
            iterations: 5,
            ..FitConfig::default()
        };
        let r = fit_splats(&set, &views(&set), &cfg).unwrap();
        assert!(r.history.iter().all(|&l| l == 0.0));
        assert_eq!(r.final_loss, 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        let set = scene();
        let mut cfg = FitConfig {
            iterations: 0,
            ..FitConfig::default()
        };
        assert!(fit_splats(&set, &views(&set), &cfg).is_err());
        cfg.iterations = 1;
        cfg.learning_rates.sh = 0.0;
        assert!(fit_splats(&set, &views(&set), &cfg).is_err());
        cfg.learning_rates.sh = 1.0;
        assert!(fit_splats(&set, &[], &cfg).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = loss_history_csv(&[0.5, 0.25]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,loss");
        assert!(lines[2].starts_with("1,"));
    }
}
