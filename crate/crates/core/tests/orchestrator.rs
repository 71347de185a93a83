use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use proptest::prelude::*;
use serde_json::{json, Value};
use twinsim_core::orchestrator::bench::{benchmark, Gradation, Suite};
use twinsim_core::orchestrator::{
    engineer_prompt, run_pipeline, validate_tasks, BackendConfig, BackendError, BackendKind, ChatBackend,
    ChatMessage, ExchangeStatus, Intent, LiveBackend, MockBackend, MockReply, MockRule, OrchestratorError,
    PipelineConfig, PromptStage, SessionContext, Stage, StageStatus, Task, ViolationCode,
};
use twinsim_core::scene::demo::demo_scene;
use twinsim_core::scene::{AssetCatalog, Edit, SceneGraph, Weather};

const ADVERSARIAL: &str = include_str!("../data/adversarial.json");

fn session() -> SessionContext {
    SessionContext::new("s", demo_scene())
}

fn cfg() -> PipelineConfig {
    PipelineConfig::default()
}

fn rule(stage: Stage, key: &str, replies: Vec<MockReply>) -> MockRule {
    MockRule {
        stage,
        exact: Some(key.into()),
        all: Vec::new(),
        replies,
    }
}

/// Mock whose level-1 agent maps `prompt` to one requirement of `intent`
/// and whose level-2 agent answers with `tasks`.
fn scripted(prompt: &str, intent: Intent, tasks: Value) -> MockBackend {
    MockBackend::builtin().with_rules_first(vec![
        rule(
            Stage::Level1,
            prompt,
            vec![MockReply::json(json!({"requirements": [{"intent": intent.as_str(), "detail": prompt}]}))],
        ),
        rule(
            Stage::Level2,
            &format!("[{}] {prompt}", intent.as_str()),
            vec![MockReply::json(json!({ "tasks": tasks }))],
        ),
    ])
}

#[test]
fn make_it_rain_stages_weather_change() {
    let mut s = session();
    let before = s.scene().to_json();
    let (diff, trace) = s.prompt("Make it rain.", &MockBackend::builtin(), &cfg()).unwrap();
    assert_eq!(diff.len(), 1);
    let Edit::SetEnvironment { after, .. } = &diff.edits[0] else {
        panic!("expected an environment edit, got {:?}", diff.edits);
    };
    assert_eq!(after.weather(), Weather::Rain);
    assert!((after.intensity() - 0.7).abs() < 1e-12);
    assert_eq!(s.scene().to_json(), before);
    assert!(s.pending().is_some());
    assert_eq!(trace.stages.len(), 3);
    assert_eq!(diff.provenance, trace.prompt_id);
}

#[test]
fn rubble_goes_to_scene_center() {
    let s = session();
    let (diff, trace) = run_pipeline(
        "Create cement rubble at the center of the scene.",
        &s,
        &MockBackend::builtin(),
        &cfg(),
    )
    .unwrap();
    assert!(matches!(
        &trace.tasks[..],
        [Task::Add { class_name, count: 1, placement: twinsim_core::orchestrator::Placement::Anchor(a), .. }]
            if class_name == "cement_rubble" && a == "scene_center"
    ));
    let Edit::Add { asset } = &diff.edits[0] else { panic!() };
    let c = s.scene().scene_center();
    assert!((asset.position() - c).norm() < 1e-12);
}

#[test]
fn empty_prompt_is_rejected() {
    let s = session();
    assert!(matches!(
        run_pipeline("   ", &s, &MockBackend::builtin(), &cfg()),
        Err(OrchestratorError::EmptyPrompt)
    ));
}

#[test]
fn hundred_trials_give_identical_diffs() {
    let suite = Suite::builtin();
    let scene = suite.scene().unwrap();
    let backend = MockBackend::builtin();
    for case in suite.cases.iter().filter(|c| c.gradation == Gradation::Direct) {
        let ctx = SessionContext::new("d", scene.clone());
        let (first, _) = run_pipeline(&case.prompt, &ctx, &backend, &cfg()).unwrap();
        for _ in 0..99 {
            let (d, _) = run_pipeline(&case.prompt, &ctx, &backend, &cfg()).unwrap();
            assert_eq!(serde_json::to_value(&d).unwrap(), serde_json::to_value(&first).unwrap());
        }
    }
}

#[test]
fn engineered_prompts_are_byte_identical() {
    let s = session();
    let a = engineer_prompt("Make it rain", &s, &PromptStage::Level1).unwrap();
    let b = engineer_prompt("Make it rain", &s, &PromptStage::Level1).unwrap();
    assert_eq!(a.render(), b.render());
    assert_eq!(a, b);
    assert!(a.history_block().is_none());
    let text = a.render();
    assert!(!text.contains("Conversation so far"));
    assert!(text.ends_with("Make it rain"));
    assert!(text.contains("\"requirements\""));
    let l2 = engineer_prompt(
        "[appearance] rain",
        &s,
        &PromptStage::Level2 {
            intent: Some(Intent::Appearance),
            original: "Make it rain".into(),
        },
    )
    .unwrap();
    assert!(l2.render().contains("\"tasks\""));
    assert!(l2.render().contains("must be a \"appearance\" task"));
}

#[test]
fn maintenance_sequence_keeps_context() {
    let mut s = session();
    let b = MockBackend::builtin();
    let prompts = [
        "Create cement rubble at the center of the scene.",
        "Add traffic cones to mark the maintenance.",
        "Also add road barriers around there.",
    ];
    for p in &prompts[..2] {
        s.prompt(p, &b, &cfg()).unwrap();
        s.accept().unwrap();
    }
    let third = engineer_prompt(prompts[2], &s, &PromptStage::Level1).unwrap();
    let h = third.history_block().unwrap();
    assert_eq!(third.history.len(), 2);
    assert!(h.contains(prompts[0]) && h.contains(prompts[1]));
    assert!(h.contains("add cement_rubble_1"), "{h}");
    assert!(h.contains("add traffic_cone_4"), "{h}");
    assert!(third.history.iter().all(|e| e.status == ExchangeStatus::Accepted));

    s.prompt(prompts[2], &b, &cfg()).unwrap();
    s.accept().unwrap();
    let g = s.scene();
    let count = |c: &str| g.assets().filter(|a| a.class_name == c).count();
    assert_eq!((count("cement_rubble"), count("traffic_cone"), count("road_barrier")), (1, 4, 3));
    let rubble = g.asset("cement_rubble_1").unwrap().position();
    for a in g.assets().filter(|a| a.class_name == "traffic_cone") {
        assert!(((a.position() - rubble).norm() - 4.0 * 2.0 / std::f64::consts::TAU).abs() < 1e-9);
    }
    for a in g.assets().filter(|a| a.class_name == "road_barrier") {
        assert!(((a.position() - rubble).norm() - 3.0 * 5.0 / std::f64::consts::TAU).abs() < 1e-9);
    }
}

#[test]
fn history_is_capped() {
    let mut s = session();
    let b = MockBackend::builtin();
    for _ in 0..12 {
        s.prompt("Make it rain.", &b, &cfg()).unwrap();
        s.reject().unwrap();
    }
    let p = engineer_prompt("Let it snow.", &s, &PromptStage::Level1).unwrap();
    assert_eq!(p.history.len(), 10);
    assert_eq!(p.history[0].prompt_id, "s-p3");
    assert!(p.history.iter().all(|e| e.status == ExchangeStatus::Rejected));
}

#[test]
fn accept_reject_undo() {
    let b = MockBackend::builtin();
    let mut s = session();
    let snapshot = s.scene().clone();
    let json0 = s.scene().to_json();

    s.prompt("Make it rain.", &b, &cfg()).unwrap();
    assert!(matches!(s.prompt("Let it snow.", &b, &cfg()), Err(OrchestratorError::PendingExists)));
    assert!(matches!(s.undo(), Err(OrchestratorError::PendingExists)));
    s.reject().unwrap();
    assert_eq!(s.scene().to_json(), json0);
    assert_eq!(s.revision(), 0);
    assert!(matches!(s.reject(), Err(OrchestratorError::NoPending)));

    s.prompt("Create cement rubble at the center of the scene.", &b, &cfg()).unwrap();
    s.accept().unwrap();
    assert!(matches!(s.accept(), Err(OrchestratorError::NoPending)));
    assert_eq!(s.revision(), 1);
    assert_ne!(s.scene(), &snapshot);
    s.undo().unwrap();
    assert_eq!(s.scene(), &snapshot);
    // Id counters keep advancing so ids are never reissued.
    let strip = |g: &SceneGraph| {
        let mut v = g.to_value();
        v.as_object_mut().unwrap().remove("id_counters");
        v
    };
    assert_eq!(strip(s.scene()), strip(&snapshot));
    assert_eq!(s.scene().id_counters()["cement_rubble"], 1);
    assert_eq!(s.revision(), 2);
    assert!(matches!(s.undo(), Err(OrchestratorError::NothingToUndo)));
}

#[test]
fn adversarial_completions_are_rejected_by_name() {
    let cases: Vec<Value> = serde_json::from_str(ADVERSARIAL).unwrap();
    assert_eq!(cases.len(), 50);
    for c in cases {
        let prompt = c["prompt"].as_str().unwrap();
        let intent: Intent = serde_json::from_value(c["intent"].clone()).unwrap();
        let backend = scripted(prompt, intent, c["tasks"].clone());
        let mut s = session();
        let before = s.scene().to_json();
        let err = s.prompt(prompt, &backend, &cfg()).unwrap_err();
        let OrchestratorError::Validation { violations, trace } = &err else {
            panic!("{prompt}: expected violations, got {err}");
        };
        let codes: Vec<ViolationCode> = violations.iter().map(|v| v.code).collect();
        for want in c["expect"].as_array().unwrap() {
            let want: ViolationCode = serde_json::from_value(want.clone()).unwrap();
            assert!(codes.contains(&want), "{prompt}: {want:?} missing from {codes:?}");
            assert!(err.to_string().contains(want.as_str()), "{err}");
        }
        assert_eq!(trace.stages.len(), 3);
        assert_eq!(trace.stages[2].status, StageStatus::Failed);
        assert_eq!(s.scene().to_json(), before, "{prompt}");
        assert!(s.pending().is_none());
    }
}

#[test]
fn validation_reports_every_violation() {
    let s = demo_scene();
    let tasks: Vec<Task> = serde_json::from_value(json!([
        {"task": "add", "class_name": "dragon", "count": 1, "placement": {"anchor": "scene_center"}},
        {"task": "add", "class_name": "traffic_cone", "count": 1000000, "placement": {"anchor": "scene_center"}},
        {"task": "add", "class_name": "traffic_cone", "count": 5, "placement": {"anchor": "scene_center"}, "pattern": "line", "spacing": 1.0}
    ]))
    .unwrap();
    let v = validate_tasks(&tasks, &s, s.catalog());
    let codes: Vec<(usize, ViolationCode)> = v.iter().map(|v| (v.task_index, v.code)).collect();
    assert_eq!(codes, vec![(0, ViolationCode::UnknownClass), (1, ViolationCode::CountBound)]);
    assert!(v[0].to_string().contains("unknown class"));
    assert!(validate_tasks(&tasks[2..], &s, s.catalog()).is_empty());
}

#[test]
fn pattern_that_leaves_bounds_is_caught_by_dry_run() {
    let s = demo_scene();
    let tasks: Vec<Task> = serde_json::from_value(json!([
        {"task": "add", "class_name": "traffic_cone", "count": 100, "placement": {"anchor": "scene_center"}, "pattern": "line", "spacing": 5.0}
    ]))
    .unwrap();
    let v = validate_tasks(&tasks, &s, s.catalog());
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].code, ViolationCode::OutOfBounds);
}

#[test]
fn parse_retries_then_succeeds() {
    let p = "Make it rain.";
    let b = MockBackend::builtin().with_rules_first(vec![rule(
        Stage::Level1,
        p,
        vec![
            MockReply::text("sure thing!"),
            MockReply::text("```json\n{\"requirements\": []}\n```"),
            MockReply::json(json!({"requirements": [{"intent": "appearance", "detail": "Set the weather to rain with intensity 0.7."}]})),
        ],
    )]);
    let (diff, trace) = run_pipeline(p, &session(), &b, &cfg()).unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(trace.stages[0].responses.len(), 3);
}

#[test]
fn unparseable_after_three_retries_carries_trace() {
    let p = "Make it rain.";
    let b = MockBackend::builtin().with_rules_first(vec![rule(Stage::Level1, p, vec![MockReply::text("no")])]);
    let err = run_pipeline(p, &session(), &b, &cfg()).unwrap_err();
    let OrchestratorError::Parse { stage, attempts, trace, .. } = &err else { panic!("{err}") };
    assert_eq!((stage.as_str(), *attempts), ("level1", 4));
    assert_eq!(trace.stages.len(), 2);
    assert_eq!(trace.stages[0].responses.len(), 4);
    assert_eq!(trace.stages[1].status, StageStatus::Skipped);
    assert!(trace.engineered_prompt.is_some());
    assert!(trace.error.is_some());
}

#[test]
fn trace_shape_when_second_requirement_fails() {
    let p = "two things";
    let b = MockBackend::builtin().with_rules_first(vec![
        rule(
            Stage::Level1,
            p,
            vec![MockReply::json(json!({"requirements": [
                {"intent": "appearance", "detail": "Set the weather to rain with intensity 0.7."},
                {"intent": "remove", "detail": "??"},
                {"intent": "add", "detail": "Add one cement_rubble at anchor scene_center."}
            ]}))],
        ),
        // level-2 answer of the wrong kind is unusable
        rule(
            Stage::Level2,
            "[remove] ??",
            vec![MockReply::json(json!({"tasks": [{"task": "appearance", "weather": "snow"}]}))],
        ),
    ]);
    let err = run_pipeline(p, &session(), &b, &cfg()).unwrap_err();
    let trace = err.trace().unwrap();
    let names: Vec<&str> = trace.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["level1", "level2[1]", "level2[2]", "level2[3]", "workers"]);
    let st: Vec<StageStatus> = trace.stages.iter().map(|s| s.status).collect();
    use StageStatus::*;
    assert_eq!(st, [Ok, Ok, Failed, Skipped, Skipped]);
    assert!(matches!(err, OrchestratorError::Parse { ref stage, .. } if stage == "level2[2]"));
}

#[test]
fn worker_failure_names_task() {
    // Cones around rubble that is not there.
    let err = run_pipeline("Add traffic cones to mark the maintenance.", &session(), &MockBackend::builtin(), &cfg())
        .unwrap_err();
    let OrchestratorError::Validation { violations, .. } = &err else { panic!("{err}") };
    assert_eq!(violations[0].code, ViolationCode::EmptySelection);
    assert_eq!(err.trace().unwrap().stages.len(), 3);
}

#[test]
fn bypass_uses_one_agent_level() {
    let p = "Make it rain.";
    let b = MockBackend::builtin().with_rules_first(vec![rule(
        Stage::Level2,
        p,
        vec![MockReply::json(json!({"tasks": [{"task": "appearance", "weather": "rain", "intensity": 0.7}]}))],
    )]);
    let cfg = PipelineConfig {
        two_level: false,
        ..PipelineConfig::default()
    };
    let (diff, trace) = run_pipeline(p, &session(), &b, &cfg).unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(trace.requirements.len(), 1);
    assert_eq!(trace.stages.len(), 3);
    assert_eq!(trace.stages[1].status, StageStatus::Bypassed);
}

struct Down;

impl ChatBackend for Down {
    fn complete(&self, _: &[ChatMessage]) -> Result<String, BackendError> {
        Err(BackendError::Transport {
            attempts: 3,
            message: "connection refused".into(),
        })
    }

    fn name(&self) -> String {
        "down".into()
    }
}

#[test]
fn transport_failure_names_stage() {
    let mut s = session();
    let before = s.scene().to_json();
    let err = s.prompt("Make it rain.", &Down, &cfg()).unwrap_err();
    assert!(matches!(&err, OrchestratorError::Backend { stage, .. } if stage == "level1"));
    assert!(err.to_string().contains("connection refused"));
    assert_eq!(err.trace().unwrap().stages.len(), 2);
    assert_eq!(s.scene().to_json(), before);
    assert!(s.history().is_empty());
}

#[test]
fn builtin_suite_benchmark() {
    let suite = Suite::builtin();
    assert_eq!(suite.cases.len(), 28);
    let r = benchmark(&suite, &MockBackend::builtin(), 5, &cfg()).unwrap();
    assert_eq!(r.runs, 140);
    assert_eq!(r.repeatability, 100.0);
    assert_eq!(r.generalizability, 100.0, "{:#?}", r.cases.iter().filter(|c| c.satisfied < c.trials).collect::<Vec<_>>());
    assert_eq!(r.scene_mutations, 0);
    assert_eq!(r.matrix.len(), 7);
    assert!(r.matrix.values().all(|row| row.iter().all(|c| *c == Some(100.0))));
    let row = r.summary_row();
    let parts: Vec<&str> = row.split(" / ").collect();
    assert_eq!(&parts[..2], &["100.00", "100.00"]);
    assert!(parts[2].split('.').nth(1).is_some_and(|d| d.len() == 2));
    assert_eq!(r.matrix_csv().lines().count(), 8);
    assert!(r.render_text().contains("Gen. (%) / Rep. (%) / Time (s)"));
}

#[test]
fn checkers_reject_wrong_outcomes() {
    let suite = Suite::builtin();
    // Swap every answer for a harmless but wrong one.
    let wrong = MockBackend::builtin().with_rules_first(
        suite
            .cases
            .iter()
            .map(|c| {
                rule(
                    Stage::Level1,
                    &c.prompt,
                    vec![MockReply::json(json!({"requirements": [{"intent": "appearance", "detail": "Set the time of day to 12:00."}]}))],
                )
            })
            .collect(),
    );
    let r = benchmark(&suite, &wrong, 1, &cfg()).unwrap();
    assert_eq!(r.repeatability, 100.0);
    assert_eq!(r.generalizability, 0.0);
}

#[test]
fn suite_parse_errors() {
    assert!(matches!(Suite::parse("{"), Err(OrchestratorError::Suite(_))));
    assert!(matches!(Suite::parse(r#"{"cases": []}"#), Err(OrchestratorError::Suite(_))));
}

#[test]
fn config_env_overrides() {
    let mut c = BackendConfig::default();
    assert_eq!(c.temperature, 0.0);
    c.apply_env(|k| match k {
        "DTWIN_BACKEND" => Some("live".into()),
        "DTWIN_BACKEND_URL" => Some("http://example.invalid/v1".into()),
        "DTWIN_MODEL" => Some("llama3.1".into()),
        _ => None,
    })
    .unwrap();
    assert_eq!(c.kind, BackendKind::Live);
    assert_eq!(c.model, "llama3.1");
    assert!(c.apply_env(|k| (k == "DTWIN_BACKEND").then(|| "gpt".into())).is_err());
}

/// Minimal chat-completions server: answers 500 `fail_first` times, then
/// echoes a level-1 reply. Records request bodies.
fn fake_openai(fail_first: usize) -> (String, Arc<Mutex<Vec<Value>>>, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let hits = Arc::new(AtomicUsize::new(0));
    let (b2, h2) = (bodies.clone(), hits.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut line = String::new();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            b2.lock().unwrap().push(serde_json::from_slice(&body).unwrap());
            let n = h2.fetch_add(1, Ordering::SeqCst);
            let (status, payload) = if n < fail_first {
                ("500 Internal Server Error", "{\"error\": \"busy\"}".to_string())
            } else {
                let content = "```json\n{\"requirements\": [{\"intent\": \"appearance\", \"detail\": \"Set the weather to rain with intensity 0.7.\"}]}\n```";
                ("200 OK", json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string())
            };
            let resp = format!(
                "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                payload.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/v1"), bodies, hits)
}

#[test]
fn live_backend_speaks_chat_completions() {
    let (url, bodies, hits) = fake_openai(1);
    let b = LiveBackend::new(&url, "gemma2", 0.0, Some("k".into()), Duration::from_secs(5)).unwrap();
    assert!(b.url().ends_with("/v1/chat/completions"));
    let s = session();
    let p = engineer_prompt("Make it rain.", &s, &PromptStage::Level1).unwrap();
    let reply = b.complete(&p.messages()).unwrap();
    assert!(reply.contains("requirements"));
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    let body = bodies.lock().unwrap()[1].clone();
    assert_eq!(body["model"], "gemma2");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["n"], 1);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "Make it rain.");
}

#[test]
fn live_backend_gives_up_with_status() {
    let (url, _, hits) = fake_openai(usize::MAX);
    let b = LiveBackend::new(&url, "m", 0.0, None, Duration::from_secs(5)).unwrap().with_retries(1);
    let err = b.complete(&[ChatMessage::user("hi")]).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 500, .. }), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

fn arb_class() -> impl Strategy<Value = String> {
    let known: Vec<String> = AssetCatalog::builtin().classes.keys().cloned().collect();
    prop_oneof![
        proptest::sample::select(known),
        "[a-z_]{1,12}",
        Just("traffic cone".to_string()),
    ]
}

fn arb_task() -> impl Strategy<Value = Value> {
    let coord = -200.0f64..200.0;
    prop_oneof![
        (arb_class(), -5i64..200, coord.clone(), coord.clone(), proptest::option::of(-1.0f64..20.0)).prop_map(
            |(c, n, x, y, s)| {
                let mut t = json!({"task": "add", "class_name": c, "count": n, "placement": {"point": [x, y, 0.0]}, "pattern": "grid"});
                if let Some(s) = s {
                    t["spacing"] = json!(s);
                }
                t
            }
        ),
        (arb_class(), coord.clone(), coord).prop_map(|(c, dx, dy)| json!({"task": "move", "selector": {"class": c}, "delta": [dx, dy, 0.0]})),
        arb_class().prop_map(|c| json!({"task": "remove", "selector": {"class": c}})),
        (arb_class(), 0.0f64..30.0)
            .prop_map(|(c, s)| json!({"task": "arrange", "selector": {"class": c}, "pattern": "circle", "spacing": s})),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn diffs_only_name_catalog_classes(tasks in proptest::collection::vec(arb_task(), 1..5)) {
        let mut s = session();
        let before = s.scene().to_json();
        // Put every task under one "add" requirement; bypass the kind check.
        let p = "random tasks";
        let cfg = PipelineConfig { two_level: false, ..PipelineConfig::default() };
        let b = MockBackend::builtin().with_rules_first(vec![rule(Stage::Level2, p, vec![MockReply::json(json!({"tasks": tasks}))])]);
        match s.prompt(p, &b, &cfg) {
            Ok((diff, _)) => {
                let catalog = s.scene().catalog();
                for e in &diff.edits {
                    if let Edit::Add { asset } = e {
                        prop_assert!(catalog.contains(&asset.class_name), "{}", asset.class_name);
                    }
                }
                let mut g: SceneGraph = s.scene().clone();
                prop_assert!(g.apply(&diff).is_ok());
            }
            Err(e) => prop_assert!(e.trace().is_some(), "{e}"),
        }
        prop_assert_eq!(s.scene().to_json(), before);
    }
}
