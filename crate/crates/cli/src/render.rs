use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use twinsim_core::metrics::measure_fps;
use twinsim_core::scene::{default_camera, render_scene, AssetStore, RenderOptions, SceneGraph};
use twinsim_core::splat::{
    load_splats, render_reference, render_tiled, save_splats, transform_set_scaled, CameraSpec, DEFAULT_TILE,
};
use twinsim_core::{ImageBuffer, PinholeCamera, RigidTransform};

use crate::exit::{usage, CmdResult, Classify};
use crate::parse;

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Splat PLY, or a scene JSON document
    pub input: PathBuf,
    /// Camera spec JSON (intrinsics + pose); scenes fall back to an overview camera
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Number of frames to time
    #[arg(long, default_value_t = 1)]
    pub repeat: u64,
    #[arg(long, default_value_t = DEFAULT_TILE)]
    pub tile: u32,
    /// Use the untiled reference renderer
    #[arg(long)]
    pub reference: bool,
    /// Overview camera size for scenes without --camera
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 360)]
    pub height: u32,
    /// Scene time in seconds (behaviors, particles)
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
    /// Write the timing report as JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct RenderReport {
    frames: u64,
    elapsed_s: f64,
    fps: f64,
    width: u32,
    height: u32,
    renderer: &'static str,
}

fn load_camera(path: &Path) -> CmdResult<PinholeCamera> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .data()?;
    let spec: CameraSpec = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .data()?;
    spec.to_camera().data()
}

fn is_scene(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).data()?;
    std::fs::write(path, text + "\n")
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .data()
}

pub fn render(a: RenderArgs) -> CmdResult {
    if a.repeat == 0 {
        return Err(usage("--repeat must be at least 1"));
    }
    if a.tile == 0 {
        return Err(usage("--tile must be at least 1"));
    }
    let mut frame: Box<dyn FnMut() -> CmdResult<ImageBuffer>>;
    let cam;
    let renderer;
    if is_scene(&a.input) {
        let scene = SceneGraph::load(&a.input).data()?;
        cam = match &a.camera {
            Some(p) => load_camera(p)?,
            None => default_camera(&scene, a.width, a.height).data()?,
        };
        let store = AssetStore::new();
        let opts = RenderOptions {
            time: a.time,
            tile: a.tile,
            ..RenderOptions::default()
        };
        let c = cam.clone();
        frame = Box::new(move || render_scene(&scene, &store, &c, &opts).data());
        renderer = "scene";
    } else {
        let Some(cp) = &a.camera else {
            return Err(usage("rendering a splat PLY needs --camera"));
        };
        cam = load_camera(cp)?;
        let set = load_splats(&a.input).data()?;
        let (c, tile) = (cam.clone(), a.tile);
        if a.reference {
            frame = Box::new(move || Ok(render_reference(&c, &set)));
            renderer = "reference";
        } else {
            frame = Box::new(move || Ok(render_tiled(&c, &set, tile)));
            renderer = "tiled";
        }
    }
    // A failing frame fails the same way every time; keep the first error.
    let mut last = None;
    let (fps, elapsed) = measure_fps(a.repeat, || {
        if !matches!(last, Some(Err(_))) {
            last = Some(frame());
        }
    })
    .data()?;
    let img = last.expect("at least one frame")?;
    if let Some(out) = &a.output {
        img.save_png(out).data()?;
    }
    println!("frames {} | elapsed {elapsed:.2} s | FPS {fps:.2}", a.repeat);
    if let Some(p) = &a.report {
        write_json(
            p,
            &RenderReport {
                frames: a.repeat,
                elapsed_s: elapsed,
                fps,
                width: cam.width,
                height: cam.height,
                renderer,
            },
        )?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Translation x,y,z in meters
    #[arg(long, allow_hyphen_values = true)]
    pub translate: Option<String>,
    /// Rotation quaternion w,x,y,z
    #[arg(long, allow_hyphen_values = true, conflicts_with = "yaw_deg")]
    pub rotate: Option<String>,
    /// Rotation about +z, degrees
    #[arg(long, allow_hyphen_values = true)]
    pub yaw_deg: Option<f64>,
    /// Uniform scale applied before the rigid motion
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// RigidTransform JSON file instead of the flags above
    #[arg(long, conflicts_with_all = ["translate", "rotate", "yaw_deg"])]
    pub transform: Option<PathBuf>,
}

pub fn transform(a: TransformArgs) -> CmdResult {
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(usage("--scale must be positive"));
    }
    let t = match &a.transform {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
                .data()?;
            serde_json::from_str::<RigidTransform>(&text).data()?
        }
        None => {
            let tr = a.translate.as_deref().map(parse::vec3).transpose().map_err(usage)?.unwrap_or_default();
            match (&a.rotate, a.yaw_deg) {
                (Some(q), _) => RigidTransform::from_quaternion(parse::quat(q).map_err(usage)?, tr),
                (None, Some(y)) => RigidTransform::from_yaw(y.to_radians(), tr),
                (None, None) => RigidTransform::from_translation(tr),
            }
        }
    };
    let set = load_splats(&a.input).data()?;
    let out = transform_set_scaled(&t, a.scale, &set);
    save_splats(&a.output, &out).data()?;
    println!("transformed {} splats", out.len());
    Ok(())
}
