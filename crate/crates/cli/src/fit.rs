use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use twinsim_core::optim::{fit_splats, loss_history_csv, FitConfig, LearningRates};
use twinsim_core::splat::{load_splats, save_splats, CameraSpec};
use twinsim_core::{ImageBuffer, PinholeCamera};

use crate::exit::{usage, CmdResult, Classify};
use crate::render::write_json;

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Initial splat PLY
    pub init: PathBuf,
    /// View list: one "camera.json image.png" pair per line, relative to the list
    pub views: PathBuf,
    /// Fitted splat PLY
    #[arg(short, long)]
    pub output: PathBuf,
    /// Loss history CSV
    #[arg(long)]
    pub loss: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Multiplies every default learning rate
    #[arg(long, default_value_t = 1.0)]
    pub lr_scale: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct FitReport {
    views: usize,
    splats: usize,
    iterations: usize,
    initial_loss: f64,
    final_loss: f64,
    reduction: f64,
}

pub fn read_views(list: &Path) -> CmdResult<Vec<(PinholeCamera, ImageBuffer)>> {
    let text = std::fs::read_to_string(list)
        .map_err(|e| anyhow::anyhow!("{}: {e}", list.display()))
        .data()?;
    let base = list.parent().unwrap_or(Path::new("."));
    let mut views = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let &[cam, img] = parts.as_slice() else {
            return Err(anyhow::anyhow!("{}:{}: expected \"camera.json image.png\"", list.display(), n + 1)).data();
        };
        let cam_path = base.join(cam);
        let spec: CameraSpec = std::fs::read_to_string(&cam_path)
            .map_err(anyhow::Error::from)
            .and_then(|t| Ok(serde_json::from_str(&t)?))
            .map_err(|e| anyhow::anyhow!("{}: {e}", cam_path.display()))
            .data()?;
        let cam = spec.to_camera().data()?;
        let image = ImageBuffer::load_png(&base.join(img)).data()?;
        if (image.width(), image.height()) != (cam.width, cam.height) {
            return Err(anyhow::anyhow!(
                "{}:{}: image is {}x{} but the camera is {}x{}",
                list.display(),
                n + 1,
                image.width(),
                image.height(),
                cam.width,
                cam.height
            ))
            .data();
        }
        views.push((cam, image));
    }
    if views.is_empty() {
        return Err(anyhow::anyhow!("{}: no views listed", list.display())).data();
    }
    Ok(views)
}

pub fn fit(a: FitArgs) -> CmdResult {
    if !(a.lr_scale > 0.0 && a.lr_scale.is_finite()) {
        return Err(usage("--lr-scale must be positive"));
    }
    let cfg = FitConfig {
        iterations: a.iterations,
        learning_rates: LearningRates::default().scaled(a.lr_scale),
    };
    cfg.validate().usage()?;
    let init = load_splats(&a.init).data()?;
    let views = read_views(&a.views)?;
    let r = fit_splats(&init, &views, &cfg).data()?;
    save_splats(&a.output, &r.set).data()?;
    if let Some(p) = &a.loss {
        std::fs::write(p, loss_history_csv(&r.history))
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
            .data()?;
    }
    let initial = r.history[0];
    let report = FitReport {
        views: views.len(),
        splats: r.set.len(),
        iterations: a.iterations,
        initial_loss: initial,
        final_loss: r.final_loss,
        reduction: if initial > 0.0 { 1.0 - r.final_loss / initial } else { 0.0 },
    };
    println!(
        "iterations {} | loss {:.2e} -> {:.2e} | reduction {:.2} %",
        report.iterations,
        report.initial_loss,
        report.final_loss,
        100.0 * report.reduction
    );
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(())
}
