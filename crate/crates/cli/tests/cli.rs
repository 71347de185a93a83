use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use twinsim_core::optim::scenario::toy_scenario;
use twinsim_core::recon::io::load_mesh;
use twinsim_core::scene::demo::demo_scene;
use twinsim_core::scene::{SceneGraph, Weather};
use twinsim_core::splat::{load_splats, save_splats};
use twinsim_core::{ImageBuffer, SplatGaussian, SplatSet};

fn twinsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinsim"))
        .args(args)
        .env_remove("DTWIN_BACKEND")
        .env_remove("DTWIN_BACKEND_URL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_camera(path: &Path, eye: [f64; 3], f: f64, size: u32) {
    let spec = json!({
        "intrinsics": {"fx": f, "fy": f, "width": size, "height": size},
        "pose": {"eye": eye, "target": [0.0, 0.0, 0.0]}
    });
    std::fs::write(path, spec.to_string()).unwrap();
}

fn splat_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let splats = (0..200)
        .map(|_| {
            let pos = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5));
            let rgb = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            SplatGaussian::isotropic(pos, rng.random_range(0.03..0.15), rng.random_range(0.3..0.9), rgb)
        })
        .collect();
    let set = SplatSet::from_splats(0, splats).unwrap();
    let ply = dir.join("scene.ply");
    save_splats(&ply, &set).unwrap();
    let cam = dir.join("cam.json");
    write_camera(&cam, [4.0, -3.0, 2.0], 80.0, 64);
    (ply, cam)
}

#[test]
fn render_reports_fps_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (ply, cam) = splat_fixture(dir.path());
    let (a, b, report) = (dir.path().join("a.png"), dir.path().join("b.png"), dir.path().join("r.json"));
    let o = twinsim(&["render", p(&ply), "--camera", p(&cam), "-o", p(&a), "--repeat", "12", "--report", p(&report)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let line = stdout(&o);
    assert!(line.starts_with("frames 12 | elapsed "), "{line}");
    let fps_text = line.trim().rsplit(' ').next().unwrap();
    assert_eq!(fps_text.split('.').nth(1).map(str::len), Some(2), "two decimals: {line}");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let (frames, elapsed, fps) = (r["frames"].as_f64().unwrap(), r["elapsed_s"].as_f64().unwrap(), r["fps"].as_f64().unwrap());
    assert!((fps - frames / elapsed).abs() <= 1e-9 * fps);

    assert_eq!(code(&twinsim(&["render", p(&ply), "--camera", p(&cam), "-o", p(&b), "--reference"])), 0);
    let (ia, ib) = (ImageBuffer::load_png(&a).unwrap(), ImageBuffer::load_png(&b).unwrap());
    assert!(ia.data().iter().zip(ib.data()).all(|(x, y)| (x - y).abs() <= 1.0 / 255.0));
    assert!(ia.data().iter().any(|&v| v > 0.1));
    twinsim(&["render", p(&ply), "--camera", p(&cam), "-o", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn render_scene_json_with_overview_camera() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    demo_scene().save(&scene).unwrap();
    let out = dir.path().join("s.png");
    let o = twinsim(&["render", p(&scene), "-o", p(&out), "--width", "80", "--height", "48"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let img = ImageBuffer::load_png(&out).unwrap();
    assert_eq!((img.width(), img.height()), (80, 48));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (ply, cam) = splat_fixture(dir.path());
    assert_eq!(code(&twinsim(&[])), 1);
    assert_eq!(code(&twinsim(&["render", p(&ply)])), 1, "missing camera");
    assert_eq!(code(&twinsim(&["render", p(&ply), "--camera", p(&cam), "--repeat", "0"])), 1);
    assert_eq!(code(&twinsim(&["render", "missing.ply", "--camera", p(&cam)])), 2);
    let junk = dir.path().join("junk.ply");
    std::fs::write(&junk, "ply\nformat ascii 1.0\nend_header\n").unwrap();
    let o = twinsim(&["render", p(&junk), "--camera", p(&cam)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim().lines().count(), 1, "single-line diagnostic: {err}");
    assert!(err.starts_with("error: "));
    assert_eq!(code(&twinsim(&["transform", p(&ply), "x.ply", "--translate", "1,2"])), 1);
    assert_eq!(code(&twinsim(&["recon", p(&ply), "-o", "m.obj", "--res", "a"])), 1);
    assert_eq!(code(&twinsim(&["--help"])), 0);
}

#[test]
fn transform_moves_splats() {
    let dir = tempfile::tempdir().unwrap();
    let (ply, _) = splat_fixture(dir.path());
    let out = dir.path().join("moved.ply");
    let o = twinsim(&["transform", p(&ply), p(&out), "--translate", "1,-2,3", "--yaw-deg", "90"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let (a, b) = (load_splats(&ply).unwrap(), load_splats(&out).unwrap());
    for (g, h) in a.iter().zip(b.iter()) {
        // Yaw 90°: (x, y) -> (-y, x).
        let want = Vector3::new(-g.position.y + 1.0, g.position.x - 2.0, g.position.z + 3.0);
        assert!((h.position - want).norm() < 1e-5);
        assert!((h.opacity - g.opacity).abs() < 1e-6);
    }
}

#[test]
fn recon_sphere_from_points_with_normals() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut text = String::new();
    for _ in 0..2000 {
        let v = loop {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() > 0.1 && v.norm() <= 1.0 {
                break v.normalize();
            }
        };
        text += &format!("{} {} {} {} {} {}\n", v.x, v.y, v.z, v.x, v.y, v.z);
    }
    let xyz = dir.path().join("sphere.xyz");
    std::fs::write(&xyz, text).unwrap();
    let (mesh, report) = (dir.path().join("sphere.obj"), dir.path().join("recon.json"));
    let o = twinsim(&["recon", p(&xyz), "-o", p(&mesh), "--res", "64", "--tol", "1e-7", "--k", "12", "--report", p(&report)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let m = load_mesh(&mesh).unwrap();
    assert!(m.edge_report().is_watertight());
    let err: f64 = m.vertices().iter().map(|v| (v.norm() - 1.0).abs()).sum::<f64>() / m.vertices().len() as f64;
    assert!(err < 0.05, "mean radial error {err}");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["watertight"], true);
    assert_eq!(r["estimated_normals"], false);
}

#[test]
fn metrics_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let base: Vec<f64> = (0..32 * 32 * 3).map(|i| ((i * 37) % 200) as f64 / 255.0).collect();
    let shifted: Vec<f64> = base.iter().map(|v| v + 16.0 / 255.0).collect();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    ImageBuffer::from_raw(32, 32, 3, base).unwrap().save_png(&a).unwrap();
    ImageBuffer::from_raw(32, 32, 3, shifted).unwrap().save_png(&b).unwrap();
    let o = twinsim(&["metrics", p(&a), p(&b)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["psnr"].as_f64().unwrap() - 24.05).abs() < 0.01);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PSNR 24.05 dB"));
    let o = twinsim(&["metrics", p(&a), p(&a), "--fps", "30"]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["psnr"], "inf");
    assert_eq!(r["ssim"], 1.0);
    assert_eq!(r["fps"], 30.0);
    let small = dir.path().join("c.png");
    ImageBuffer::black(8, 8, 3).save_png(&small).unwrap();
    assert_eq!(code(&twinsim(&["metrics", p(&a), p(&small)])), 2);
}

#[test]
fn fit_reduces_loss_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let s = toy_scenario(5);
    let init = dir.path().join("init.ply");
    save_splats(&init, &s.init).unwrap();
    let mut list = String::from("# camera image\n");
    for (i, (cam, img)) in s.train.iter().enumerate() {
        let c = cam.center();
        write_camera(&dir.path().join(format!("cam{i}.json")), [c.x, c.y, c.z], cam.fx, cam.width);
        img.save_png(&dir.path().join(format!("view{i}.png"))).unwrap();
        list += &format!("cam{i}.json view{i}.png\n");
    }
    let views = dir.path().join("views.txt");
    std::fs::write(&views, list).unwrap();
    let run = |out: &str| {
        let (out, loss) = (dir.path().join(out), dir.path().join(format!("{out}.csv")));
        let o = twinsim(&["fit", p(&init), p(&views), "-o", p(&out), "--loss", p(&loss), "--iterations", "40"]);
        assert_eq!(code(&o), 0, "{o:?}");
        (std::fs::read(out).unwrap(), std::fs::read_to_string(loss).unwrap())
    };
    let (a, csv) = run("a.ply");
    let (b, _) = run("b.ply");
    assert_eq!(a, b, "fit output is byte-identical across runs");
    let losses: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 40);
    assert!(losses[39] < 0.8 * losses[0], "{} -> {}", losses[0], losses[39]);

    std::fs::write(&views, "cam0.json\n").unwrap();
    assert_eq!(code(&twinsim(&["fit", p(&init), p(&views), "-o", "x.ply"])), 2);
}

#[test]
fn prompt_prints_diff_and_applies() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    demo_scene().save(&scene).unwrap();
    let (out, trace) = (dir.path().join("after.json"), dir.path().join("trace.json"));
    let o = twinsim(&["prompt", p(&scene), "Make it rain.", "--apply", p(&out), "--trace", p(&trace)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let diff: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(diff["edits"][0]["op"], "set_environment");
    assert_eq!(SceneGraph::load(&out).unwrap().environment().weather(), Weather::Rain);
    assert_eq!(SceneGraph::load(&scene).unwrap().to_json(), demo_scene().to_json(), "input untouched");
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["stages"][0]["name"], "level1");

    let again = twinsim(&["prompt", p(&scene), "Make it rain."]);
    assert_eq!(again.stdout, o.stdout, "deterministic diff");

    assert_eq!(code(&twinsim(&["prompt", p(&scene), "   "])), 1);
    let cones = twinsim(&["prompt", p(&scene), "Add traffic cones to mark the maintenance."]);
    assert_eq!(code(&cones), 2, "validation failure is a data error");

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[backend]\nretries = 0\ntimeout_s = 2.0\n").unwrap();
    let live = twinsim(&["prompt", p(&scene), "Make it rain.", "--backend", "live", "--endpoint", &url, "--config", p(&cfg)]);
    assert_eq!(code(&live), 3, "{live:?}");
    assert_eq!(code(&twinsim(&["prompt", p(&scene), "x", "--backend", "psychic"])), 1);
}

#[test]
fn bench_agents_mock_is_fully_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = twinsim(&["bench-agents", "--backend", "mock", "--trials", "100", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("Gen. (%) / Rep. (%) / Time (s)"));
    assert!(text.lines().any(|l| l.starts_with("100.00 / 100.00 / ")), "{text}");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["repeatability"], 100.0);
    assert_eq!(r["generalizability"], 100.0);
    assert_eq!(r["trials"], 100);
    assert_eq!(r["scene_mutations"], 0);
    let matrix = std::fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 8);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"cases\": 1}").unwrap();
    assert_eq!(code(&twinsim(&["bench-agents", p(&bad), "--trials", "1"])), 2);
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_answers_health() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_twinsim"))
        .args(["serve", "--listen", &format!("127.0.0.1:{port}")])
        .env_remove("DTWIN_BACKEND")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let t0 = Instant::now();
    let reply = loop {
        if let Some(r) = http_get(port, "/health") {
            break r;
        }
        assert!(t0.elapsed() < Duration::from_secs(20), "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
}
