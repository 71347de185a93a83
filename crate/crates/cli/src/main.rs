mod agents;
mod exit;
mod fit;
mod parse;
mod recon;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use exit::{CmdResult, Classify};
use twinsim_service::ServiceConfig;

#[derive(Parser, Debug)]
#[command(name = "twinsim", version, about = "Desk-scale digital twin: splat rendering, reconstruction, metrics and prompt-driven scene editing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a splat PLY or scene JSON to PNG and report FPS
    Render(render::RenderArgs),
    /// Apply a rigid transform to a splat PLY
    Transform(render::TransformArgs),
    /// Poisson surface reconstruction from a point cloud
    Recon(recon::ReconArgs),
    /// PSNR and SSIM between two PNGs, as JSON
    Metrics(recon::MetricsArgs),
    /// Fit splats to posed images
    Fit(fit::FitArgs),
    /// Run one prompt through the agent pipeline and print the diff
    Prompt(agents::PromptArgs),
    /// Benchmark the agent pipeline on a prompt suite
    BenchAgents(agents::BenchArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
}

#[derive(clap::Args, Debug)]
struct ServeArgs {
    /// TOML config; environment variables override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Listen address, overrides the config
    #[arg(long)]
    listen: Option<String>,
}

fn serve(a: ServeArgs) -> CmdResult {
    let mut cfg = ServiceConfig::resolve(a.config.as_deref()).usage()?;
    if let Some(l) = a.listen {
        cfg.listen = l;
    }
    let rt = tokio::runtime::Runtime::new().data()?;
    rt.block_on(twinsim_service::serve(&cfg)).data()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let r = match cli.command {
        Command::Render(a) => render::render(a),
        Command::Transform(a) => render::transform(a),
        Command::Recon(a) => recon::recon(a),
        Command::Metrics(a) => recon::metrics(a),
        Command::Fit(a) => fit::fit(a),
        Command::Prompt(a) => agents::prompt(a),
        Command::BenchAgents(a) => agents::bench(a),
        Command::Serve(a) => serve(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.class as u8)
        }
    }
}
