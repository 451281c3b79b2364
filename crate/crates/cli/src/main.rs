use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradnoise_cli::{execute, load_config, Command};

#[derive(Debug, Parser)]
#[command(name = "gradnoise", version, about = "Gaussianity tests for stochastic gradient noise")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Battery on i.i.d. symmetric α-stable noise over a grid of α.
    SanitySas(Common),
    /// Train an MLP with SGD and probe its gradient noise at checkpoints.
    TrainProbe(Common),
    /// Tail-index estimate for a noise matrix or a list of numbers.
    EstimateAlpha(Common),
    /// Shapiro–Wilk and Anderson–Darling on one sample.
    #[command(name = "test-1d")]
    Test1d(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value config file or a train-probe manifest.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::SanitySas(c) => (Command::SanitySas, c),
        Sub::TrainProbe(c) => (Command::TrainProbe, c),
        Sub::EstimateAlpha(c) => (Command::EstimateAlpha, c),
        Sub::Test1d(c) => (Command::Test1d, c),
    };
    let result = load_config(cmd, common.config.as_deref(), &common.set).and_then(|cfg| {
        if common.print_config {
            print!("{}", cfg.to_kv_text());
            return Ok(());
        }
        let outcome = execute(cmd, &cfg)?;
        if let Some(text) = outcome.stdout {
            print!("{text}");
        }
        for f in &outcome.files {
            eprintln!("wrote {}", f.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gradnoise: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
