use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcfml_cli::{pipeline, Family, Overrides, Run};

#[derive(Parser)]
#[command(name = "pcfml", version, about = "Reduced-basis flow map learning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate training and test trajectories.
    Generate(Common),
    /// Singular spectrum, reduced basis and memory diagnostic.
    Reduce(Common),
    /// Train every configured model family.
    Train(Common),
    /// Roll out the trained ensembles on the test set.
    Predict(Common),
    /// Join the error curves of all families.
    Report(Common),
    /// All stages in order.
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Run directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measurement noise level, e.g. 0 or 0.1.
    #[arg(long)]
    sigma: Option<f64>,
    /// Epoch budget for every family.
    #[arg(long)]
    epochs: Option<usize>,
    /// Ensemble size for every family.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Comma-separated families, e.g. `fixed,nodal`.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    models: Option<Vec<Family>>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown model family `{s}`"))
}

impl Common {
    fn run(&self) -> Result<Run, pcfml_cli::CliError> {
        let ov = Overrides {
            seed: self.seed,
            sigma: self.sigma,
            epochs: self.epochs,
            ensemble: self.ensemble,
            out_dir: self.out.clone(),
            models: self.models.clone(),
        };
        Run::from_file(&self.config, ov)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Generate(c) => c.run().and_then(|r| pipeline::generate(&r).map(drop)),
        Cmd::Reduce(c) => c.run().and_then(|r| pipeline::reduce(&r).map(drop)),
        Cmd::Train(c) => c.run().and_then(|r| pipeline::train(&r).map(drop)),
        Cmd::Predict(c) => c.run().and_then(|r| pipeline::predict(&r).map(drop)),
        Cmd::Report(c) => c.run().and_then(|r| pipeline::report(&r).map(drop)),
        Cmd::Run(c) => c.run().and_then(|r| pipeline::run_all(&r)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
