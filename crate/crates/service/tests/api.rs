use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;
use twinsim_core::orchestrator::{BackendConfig, BackendKind, MockBackend, PipelineConfig};
use twinsim_core::scene::demo::demo_scene;
use twinsim_service::{router, AppState, ServiceConfig, REVISION_HEADER};

const CAM: &str = "eye=-12,-14,8&target=3,0,0&width=96&height=64";

fn state_with(backend: MockBackend, ttl: Duration) -> Arc<AppState> {
    Arc::new(AppState::new(demo_scene(), Arc::new(backend), PipelineConfig::default(), ttl))
}

fn app() -> Router {
    router(state_with(MockBackend::builtin(), Duration::from_secs(3600)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, HeaderMap, Bytes) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    (status, headers, to_bytes(resp.into_body(), usize::MAX).await.unwrap())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, _, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn new_session(app: &Router) -> String {
    let (s, v) = json_call(app, "POST", "/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["revision"], 0);
    v["session_id"].as_str().unwrap().to_string()
}

async fn prompt_accept(app: &Router, id: &str, text: &str) -> Value {
    let (s, v) = json_call(app, "POST", &format!("/sessions/{id}/prompt"), Some(json!({ "text": text }))).await;
    assert_eq!(s, StatusCode::OK, "{text}: {v}");
    assert!(v["trace"]["stages"].as_array().unwrap().len() >= 3);
    let (s, v) = json_call(app, "POST", &format!("/sessions/{id}/accept"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, scene) = json_call(app, "GET", &format!("/sessions/{id}/scene"), None).await;
    assert_eq!(scene["revision"], v["revision"]);
    scene
}

fn assets_of<'a>(scene: &'a Value, class: &str) -> Vec<&'a Value> {
    scene["scene"]["assets"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["class_name"] == class)
        .collect()
}

fn position(a: &Value) -> Vector3<f64> {
    let t = &a["pose"]["translation"];
    Vector3::new(t[0].as_f64().unwrap(), t[1].as_f64().unwrap(), t[2].as_f64().unwrap())
}

#[tokio::test]
async fn appearance_prompts_end_to_end() {
    let app = app();
    let id = new_session(&app).await;
    // (prompt, time, weather, intensity)
    let steps = [
        ("It's daytime!", 12.0, "clear", 0.0),
        ("Make it look like night time.", 22.0, "clear", 0.0),
        ("Change weather to be foggy.", 22.0, "fog", 0.6),
        ("Make it rain.", 22.0, "rain", 0.7),
        ("Let it snow.", 22.0, "snow", 0.7),
        ("It's a clear day.", 12.0, "clear", 0.0),
    ];
    let mut assets_before = None;
    for (i, (p, time, weather, intensity)) in steps.into_iter().enumerate() {
        let scene = prompt_accept(&app, &id, p).await;
        let env = &scene["scene"]["environment"];
        assert_eq!(env["weather"], weather, "{p}");
        assert!((env["time_of_day"].as_f64().unwrap() - time).abs() < 1e-9, "{p}");
        assert!((env["intensity"].as_f64().unwrap() - intensity).abs() < 1e-9, "{p}");
        assert_eq!(scene["revision"], i as u64 + 1);
        let assets = scene["scene"]["assets"].clone();
        if let Some(b) = &assets_before {
            assert_eq!(&assets, b, "appearance edits leave assets alone");
        }
        assets_before = Some(assets);
    }
}

#[tokio::test]
async fn maintenance_sequence_end_to_end() {
    let app = app();
    let id = new_session(&app).await;
    let s1 = prompt_accept(&app, &id, "Create cement rubble at the center of the scene.").await;
    let rubble = assets_of(&s1, "cement_rubble");
    assert_eq!(rubble.len(), 1);
    // Demo asset translations span x ∈ [0, 6], y ∈ [-4, 4].
    let c = Vector3::new(3.0, 0.0, 0.0);
    assert!((position(rubble[0]) - c).norm() < 1e-9);
    assert_eq!(rubble[0]["created_by"], "agent");

    let s2 = prompt_accept(&app, &id, "Add traffic cones to mark the maintenance.").await;
    let cones = assets_of(&s2, "traffic_cone");
    assert_eq!(cones.len(), 4);
    let r = 4.0 * 2.0 / TAU;
    for (k, a) in cones.iter().enumerate() {
        let th = TAU * k as f64 / 4.0;
        let want = c + Vector3::new(r * th.cos(), r * th.sin(), 0.0);
        assert!((position(a) - want).norm() < 1e-9, "cone {k}");
    }

    let s3 = prompt_accept(&app, &id, "Also add road barriers around there.").await;
    let barriers = assets_of(&s3, "road_barrier");
    assert_eq!(barriers.len(), 3);
    let r = 3.0 * 5.0 / TAU;
    for (k, a) in barriers.iter().enumerate() {
        let th = TAU * k as f64 / 3.0;
        let want = c + Vector3::new(r * th.cos(), r * th.sin(), 0.0);
        assert!((position(a) - want).norm() < 1e-9, "barrier {k}");
    }
    assert_eq!(assets_of(&s3, "traffic_cone").len(), 4);
    assert_eq!(s3["scene"]["assets"].as_array().unwrap().len(), 3 + 1 + 4 + 3);
    assert_eq!(s3["revision"], 3);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/maintenance_scene.json");
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        std::fs::write(path, serde_json::to_string_pretty(&s3["scene"]).unwrap()).unwrap();
    }
    let fixture: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(s3["scene"], fixture);
}

#[tokio::test]
async fn landmark_and_behavior_prompts() {
    let app = app();
    let id = new_session(&app).await;
    let s = prompt_accept(&app, &id, "Add a parked car at the JTEKT building entrance.").await;
    let cars = assets_of(&s, "passenger_car");
    assert_eq!(cars.len(), 2);
    let parked = cars.iter().find(|a| a["properties"]["state"] == "parked").unwrap();
    assert!((position(parked) - Vector3::new(18.0, 12.0, 0.0)).norm() < 1e-9);

    let s = prompt_accept(&app, &id, "Add a mid-scale Ackermann-steered robot performing skidpad maneuver.").await;
    let robot = assets_of(&s, "mobile_robot");
    assert_eq!(robot[0]["properties"]["behavior"], "skidpad");

    let s = prompt_accept(&app, &id, "Make a jaywalking pedestrian cut across the ego vehicle’s path.").await;
    let ped = assets_of(&s, "pedestrian");
    assert_eq!(ped[0]["properties"]["behavior"], "jaywalking");
    assert!((position(ped[0]) - Vector3::new(8.0, -8.0, 0.0)).norm() < 1e-9);
}

#[tokio::test]
async fn reject_leaves_render_and_revision_unchanged() {
    let app = app();
    let id = new_session(&app).await;
    let (s, h0, png0) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h0["content-type"], "image/png");
    assert_eq!(h0[REVISION_HEADER], "0");
    assert_eq!(&png0[1..4], b"PNG");

    let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/prompt"), Some(json!({"text": "Make it rain."}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["pending"]["diff"]["edits"][0]["op"], "set_environment");
    let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/reject"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], 0);

    let (_, h1, png1) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
    assert_eq!(h1[REVISION_HEADER], "0");
    assert!(png0 == png1, "render changed after reject");
    let (_, scene) = json_call(&app, "GET", &format!("/sessions/{id}/scene"), None).await;
    assert_eq!(scene["scene"]["environment"]["weather"], "clear");
    assert!(scene["pending"].is_null());
}

#[tokio::test]
async fn render_reflects_accepted_environment() {
    let app = app();
    let id = new_session(&app).await;
    let (_, _, day) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
    prompt_accept(&app, &id, "Make it look like night time.").await;
    let (_, h, night) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
    assert_eq!(h[REVISION_HEADER], "1");
    let mean = |png: &Bytes| {
        let img = twinsim_core::ImageBuffer::decode_png(png).unwrap();
        img.data().iter().sum::<f64>() / img.data().len() as f64
    };
    assert!(mean(&night) < 0.5 * mean(&day));
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    assert_eq!(json_call(&app, "GET", "/sessions/nope/scene", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(json_call(&app, "GET", "/sessions/nope/render", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(
        json_call(&app, "POST", "/sessions/nope/prompt", Some(json!({"text": "x"}))).await.0,
        StatusCode::NOT_FOUND
    );
    let id = new_session(&app).await;
    let prompt = format!("/sessions/{id}/prompt");

    let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/accept"), None).await;
    assert_eq!((s, v["revision"].clone()), (StatusCode::CONFLICT, json!(0)));

    assert_eq!(json_call(&app, "POST", &prompt, Some(json!({"text": "  "}))).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_call(&app, "POST", &prompt, Some(json!({"txt": "a"}))).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    assert_eq!(json_call(&app, "POST", &prompt, Some(json!({"text": "Make it rain."}))).await.0, StatusCode::OK);
    let (s, v) = json_call(&app, "POST", &prompt, Some(json!({"text": "Let it snow."}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    assert!(v["error"].as_str().unwrap().contains("pending"));
    json_call(&app, "POST", &format!("/sessions/{id}/reject"), None).await;

    // Validation failure: cones around rubble that does not exist.
    let (s, v) = json_call(&app, "POST", &prompt, Some(json!({"text": "Add traffic cones to mark the maintenance."}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["violations"][0]["code"], "empty_selection");
    assert_eq!(v["trace"]["stages"].as_array().unwrap().len(), 3);

    let edit = format!("/sessions/{id}/edit");
    let (s, v) = json_call(&app, "POST", &edit, Some(json!({"op": "add", "class_name": "dragon", "position": [0, 0, 0]}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].as_str().unwrap().contains("dragon"));
    assert_eq!(v["revision"], 0);
    let (s, _) = json_call(&app, "POST", &edit, Some(json!({"op": "teleport"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = json_call(&app, "POST", &edit, Some(json!({"op": "remove", "id": "ghost_1"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = json_call(&app, "POST", &edit, Some(json!({"op": "undo"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = json_call(&app, "GET", &format!("/sessions/{id}/render?width=0"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = json_call(&app, "GET", &format!("/sessions/{id}/render?eye=1,2"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn backend_transport_failure_is_502_with_trace() {
    // A port nothing listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = ServiceConfig {
        backend: BackendConfig {
            kind: BackendKind::Live,
            endpoint: format!("http://127.0.0.1:{port}/v1"),
            retries: 0,
            timeout_s: 2.0,
            ..BackendConfig::default()
        },
        ..ServiceConfig::default()
    };
    let app = router(Arc::new(AppState::from_config(&cfg).unwrap()));
    let id = new_session(&app).await;
    let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/prompt"), Some(json!({"text": "Make it rain."}))).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY, "{v}");
    assert!(v["error"].as_str().unwrap().starts_with("level1"));
    assert_eq!(v["trace"]["stages"][0]["status"], "failed");
    assert_eq!(v["revision"], 0);
}

/// Fake chat-completions upstream answering by stage marker.
async fn fake_upstream() -> String {
    use axum::routing::post;
    async fn complete(axum::Json(body): axum::Json<Value>) -> axum::Json<Value> {
        assert_eq!(body["temperature"], 0.0);
        let system = body["messages"][0]["content"].as_str().unwrap_or_default();
        let content = if system.contains("stage: level1") {
            json!({"requirements": [{"intent": "appearance", "detail": "Set the weather to rain."}]})
        } else {
            json!({"tasks": [{"task": "appearance", "weather": "rain", "intensity": 0.4}]})
        };
        axum::Json(json!({"choices": [{"message": {"role": "assistant", "content": format!("```json\n{content}\n```")}}]}))
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = Router::new().route("/v1/chat/completions", post(complete));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/v1")
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn live_backend_through_service() {
    let url = fake_upstream().await;
    let mut cfg = ServiceConfig::default();
    cfg.apply_env(|k| match k {
        "DTWIN_BACKEND" => Some("live".into()),
        "DTWIN_BACKEND_URL" => Some(url.clone()),
        _ => None,
    })
    .unwrap();
    let app = router(Arc::new(AppState::from_config(&cfg).unwrap()));
    let id = new_session(&app).await;
    let scene = prompt_accept(&app, &id, "please, some drizzle").await;
    assert_eq!(scene["scene"]["environment"]["weather"], "rain");
    assert!((scene["scene"]["environment"]["intensity"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn renders_stay_live_while_backend_stalls() {
    let app = router(state_with(
        MockBackend::builtin().with_delay(Duration::from_secs(1)),
        Duration::from_secs(3600),
    ));
    let id = new_session(&app).await;
    let t0 = Instant::now();
    let a2 = app.clone();
    let id2 = id.clone();
    // Two stalled completions: level 1 then level 2.
    let prompt = tokio::spawn(async move {
        json_call(&a2, "POST", &format!("/sessions/{id2}/prompt"), Some(json!({"text": "Make it rain."}))).await
    });
    tokio::time::sleep(Duration::from_millis(100)).await;
    let mut frames = 0;
    while t0.elapsed() < Duration::from_millis(1500) {
        let t = Instant::now();
        let (s, _, _) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
        assert_eq!(s, StatusCode::OK);
        assert!(t.elapsed() < Duration::from_millis(800), "render blocked for {:?}", t.elapsed());
        let (s, _) = json_call(&app, "GET", &format!("/sessions/{id}/scene"), None).await;
        assert_eq!(s, StatusCode::OK);
        frames += 1;
    }
    assert!(!prompt.is_finished(), "prompt finished before the stall ended");
    // A second prompt while one runs is refused.
    let (s, _) = json_call(&app, "POST", &format!("/sessions/{id}/prompt"), Some(json!({"text": "Let it snow."}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = prompt.await.unwrap();
    assert_eq!(s, StatusCode::OK, "{v}");
    assert!(t0.elapsed() >= Duration::from_secs(2));
    assert!(frames >= 3, "{frames} frames");
}

fn random_edit(rng: &mut ChaCha8Rng, ids: &[String]) -> Value {
    let p = |rng: &mut ChaCha8Rng| json!([rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), 0.0]);
    match rng.random_range(0..5) {
        0 => {
            let classes = ["traffic_cone", "road_barrier", "pedestrian", "cement_rubble"];
            json!({"op": "add", "class_name": classes[rng.random_range(0..4)], "position": p(rng), "yaw_deg": rng.random_range(0.0..360.0)})
        }
        1 if !ids.is_empty() => json!({"op": "set_pose", "id": ids[rng.random_range(0..ids.len())], "position": p(rng)}),
        2 if !ids.is_empty() => {
            json!({"op": "set_property", "id": ids[rng.random_range(0..ids.len())], "key": "note", "value": rng.random_range(0..100)})
        }
        3 => json!({"op": "set_environment", "time_of_day": rng.random_range(0.0..24.0)}),
        _ => {
            let w = ["clear", "fog", "rain", "snow"][rng.random_range(0..4)];
            json!({"op": "set_environment", "weather": w, "intensity": if w == "clear" { 0.0 } else { rng.random_range(0.1..1.0) }})
        }
    }
}

#[tokio::test]
async fn revision_strictly_increases_over_random_edits() {
    let app = app();
    let id = new_session(&app).await;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rev = 0u64;
    let mut ids = Vec::new();
    let mut accepted = 0;
    while accepted < 50 {
        let e = random_edit(&mut rng, &ids);
        let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/edit"), Some(e.clone())).await;
        assert_eq!(s, StatusCode::OK, "{e} -> {v}");
        let r = v["revision"].as_u64().unwrap();
        assert!(r > rev, "revision {r} after {rev}");
        rev = r;
        accepted += 1;
        if e["op"] == "add" {
            ids.push(v["diff"]["edits"][0]["asset"]["id"].as_str().unwrap().to_string());
        }
        // An invalid edit in between must not move the counter.
        let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/edit"), Some(json!({"op": "remove", "id": "none_9"}))).await;
        assert_eq!((s, v["revision"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(rev)));
    }
    let (s, v) = json_call(&app, "POST", &format!("/sessions/{id}/edit"), Some(json!({"op": "undo"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["revision"].as_u64().unwrap() > rev);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_frames_match_some_accepted_revision() {
    let app = app();
    let id = new_session(&app).await;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let edits: Vec<Value> = (0..8).map(|_| random_edit(&mut rng, &[])).collect();

    // Reference frames, one per revision, from a second session.
    let reference = new_session(&app).await;
    let mut frames = vec![call(&app, "GET", &format!("/sessions/{reference}/render?{CAM}"), None).await.2];
    for e in &edits {
        json_call(&app, "POST", &format!("/sessions/{reference}/edit"), Some(e.clone())).await;
        frames.push(call(&app, "GET", &format!("/sessions/{reference}/render?{CAM}"), None).await.2);
    }

    let (a2, id2, e2) = (app.clone(), id.clone(), edits.clone());
    let writer = tokio::spawn(async move {
        for e in e2 {
            json_call(&a2, "POST", &format!("/sessions/{id2}/edit"), Some(e)).await;
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    });
    let mut seen = 0;
    while !writer.is_finished() || seen < 4 {
        let (s, h, png) = call(&app, "GET", &format!("/sessions/{id}/render?{CAM}"), None).await;
        assert_eq!(s, StatusCode::OK);
        let rev: usize = h[REVISION_HEADER].to_str().unwrap().parse().unwrap();
        assert!(png == frames[rev], "frame at revision {rev} differs from the reference");
        seen += 1;
    }
    writer.await.unwrap();
}

#[tokio::test]
async fn idle_sessions_expire() {
    let state = state_with(MockBackend::builtin(), Duration::from_millis(50));
    let app = router(state.clone());
    let a = new_session(&app).await;
    let b = new_session(&app).await;
    assert_eq!(json_call(&app, "GET", &format!("/sessions/{a}/scene"), None).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(120)).await;
    assert_eq!(json_call(&app, "GET", &format!("/sessions/{a}/scene"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(state.evict_expired(), 1);
    assert_eq!(state.session_count(), 0);
    let _ = b;
}

#[tokio::test]
async fn session_from_scene_document() {
    let app = app();
    let mut doc = demo_scene().to_value();
    doc["environment"]["weather"] = json!("fog");
    doc["environment"]["intensity"] = json!(0.3);
    let (s, v) = json_call(&app, "POST", "/sessions", Some(json!({ "scene": doc }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let id = v["session_id"].as_str().unwrap();
    let (_, scene) = json_call(&app, "GET", &format!("/sessions/{id}/scene"), None).await;
    assert_eq!(scene["scene"]["environment"]["weather"], "fog");
    let (s, _) = json_call(&app, "POST", "/sessions", Some(json!({"scene": {"assets": 3}}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn config_file_and_env() {
    let mut c = ServiceConfig::parse(
        "listen = \"0.0.0.0:9000\"\nsession_ttl_s = 60\n[backend]\nkind = \"live\"\nmodel = \"mistral\"\nendpoint = \"http://llm:8000/v1\"\n",
    )
    .unwrap();
    assert_eq!(c.listen, "0.0.0.0:9000");
    assert_eq!(c.backend.kind, BackendKind::Live);
    assert_eq!(c.backend.temperature, 0.0);
    c.apply_env(|k| match k {
        "DTWIN_LISTEN" => Some("127.0.0.1:1".into()),
        "DTWIN_MODEL" => Some("llama3.1".into()),
        "DTWIN_SESSION_TTL" => Some("5".into()),
        _ => None,
    })
    .unwrap();
    assert_eq!((c.listen.as_str(), c.backend.model.as_str(), c.session_ttl_s), ("127.0.0.1:1", "llama3.1", 5));
    assert!(ServiceConfig::parse("bogus = 1").is_err());
    assert!(c.apply_env(|k| (k == "DTWIN_SESSION_TTL").then(|| "soon".into())).is_err());
    assert_eq!(ServiceConfig::default().session_ttl_s, 3600);
}
