use std::path::{Path, PathBuf};

use clap::Args;
use twinsim_core::orchestrator::bench::{benchmark, Suite};
use twinsim_core::orchestrator::{BackendKind, ChatBackend, OrchestratorError, PipelineConfig, SessionContext};
use twinsim_core::scene::SceneGraph;
use twinsim_service::ServiceConfig;

use crate::exit::{usage, Class, CmdResult, Classify, Failure};
use crate::render::write_json;

#[derive(Args, Debug, Clone)]
pub struct BackendArgs {
    /// TOML config with a [backend] table; environment variables override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mock or live
    #[arg(long)]
    pub backend: Option<String>,
    /// Chat-completions base URL for the live backend
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Send every requirement straight to one agent level
    #[arg(long)]
    pub bypass_level2: bool,
}

impl BackendArgs {
    fn resolve(&self) -> CmdResult<(Box<dyn ChatBackend>, PipelineConfig)> {
        let mut cfg = ServiceConfig::resolve(self.config.as_deref()).usage()?;
        if let Some(b) = &self.backend {
            cfg.backend.kind = match b.as_str() {
                "mock" => BackendKind::Mock,
                "live" => BackendKind::Live,
                other => return Err(usage(format!("--backend {other}: expected mock or live"))),
            };
        }
        if let Some(e) = &self.endpoint {
            cfg.backend.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            cfg.backend.model = m.clone();
        }
        let backend = cfg.backend.build().usage()?;
        let pipeline = PipelineConfig {
            two_level: !(self.bypass_level2 || cfg.bypass_level2),
            ..PipelineConfig::default()
        };
        Ok((backend, pipeline))
    }
}

fn classify(e: OrchestratorError) -> Failure {
    let class = match &e {
        OrchestratorError::Backend { .. } | OrchestratorError::Parse { .. } => Class::Backend,
        OrchestratorError::EmptyPrompt => Class::Usage,
        _ => Class::Data,
    };
    Failure {
        class,
        error: e.into(),
    }
}

#[derive(Args, Debug)]
pub struct PromptArgs {
    /// Scene JSON document
    pub scene: PathBuf,
    /// Natural-language request
    pub text: String,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Apply the diff and write the scene (in place when no path is given)
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    pub apply: Option<Option<PathBuf>>,
    /// Write the agent trace as JSON
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn prompt(a: PromptArgs) -> CmdResult {
    let (backend, pipeline) = a.backend.resolve()?;
    let scene = SceneGraph::load(&a.scene).data()?;
    let mut ctx = SessionContext::new("cli", scene);
    let outcome = ctx.prompt(&a.text, backend.as_ref(), &pipeline);
    if let Some(p) = &a.trace {
        let trace = match &outcome {
            Ok((_, t)) => Some(t),
            Err(e) => e.trace(),
        };
        if let Some(t) = trace {
            write_json(p, t)?;
        }
    }
    let (diff, _) = outcome.map_err(classify)?;
    println!("{}", serde_json::to_string_pretty(&diff).data()?);
    if let Some(dest) = &a.apply {
        ctx.accept().map_err(classify)?;
        let path = dest.as_deref().unwrap_or(&a.scene);
        ctx.scene().save(path).data()?;
        eprintln!("applied {} edits to {}", diff.len(), path.display());
    }
    for line in diff.summary() {
        eprintln!("  {line}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Suite JSON; the built-in suite when omitted
    pub suite: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Directory for report.json, matrix.csv and cases.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_text(dir: &Path, name: &str, text: &str) -> CmdResult {
    let p = dir.join(name);
    std::fs::write(&p, text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
        .data()
}

pub fn bench(a: BenchArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let (backend, pipeline) = a.backend.resolve()?;
    let suite = match &a.suite {
        Some(p) => Suite::load(p).data()?,
        None => Suite::builtin(),
    };
    let report = benchmark(&suite, backend.as_ref(), a.trials, &pipeline).map_err(classify)?;
    print!("{}", report.render_text());
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))
            .data()?;
        write_json(&dir.join("report.json"), &report)?;
        write_text(dir, "matrix.csv", &report.matrix_csv())?;
        write_text(dir, "cases.csv", &report.cases_csv())?;
    }
    Ok(())
}
