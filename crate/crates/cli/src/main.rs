use clap::{Parser, Subcommand};
use imitlab_cli::scenario::{self, ScenarioError};
use imitlab_cli::{builtins, runner};
use std::path::PathBuf;
use std::process::ExitCode;

/// Desk-scale laboratory for KL-constrained imitation: Bayes mixtures,
/// lifetime divergences, constrained optimizers, and the pessimistic
/// imitator, packaged as reproducible scenarios.
#[derive(Parser)]
#[command(name = "imitlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario by name, or a scenario TOML file by path.
    Run {
        /// Built-in name (see `list`) or path to a scenario file.
        scenario: String,
        /// Output directory (defaults to $IMITLAB_OUT, then ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario budget (budget-sweep runs just this one).
        #[arg(long)]
        budget: Option<f64>,
        /// Override any scenario field, e.g. --set epsilon=0.2.
        #[arg(long = "set", value_parser = parse_key_value)]
        set: Vec<(String, String)>,
    },
    /// List the built-in scenarios.
    List,
    /// Print the toy language's tag table.
    DumpLanguage {
        /// Alphabet size the language instance is built for.
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
    },
}

fn parse_key_value(raw: &str) -> Result<(String, String), String> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{raw}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in scenario::BUILTINS {
                println!("{name:<24} {}", scenario::describe(name));
            }
            ExitCode::SUCCESS
        }
        Command::DumpLanguage { alphabet } => {
            match imitlab_core::alphabet::Alphabet::new(alphabet) {
                Ok(a) => {
                    print!("{}", imitlab_core::toylang::dump_language(&a));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Run {
            scenario: spec,
            out,
            seed,
            budget,
            set,
        } => {
            let mut overrides = set;
            if let Some(s) = seed {
                overrides.push(("seed".into(), s.to_string()));
            }
            if let Some(b) = budget {
                overrides.push(("budget".into(), b.to_string()));
            }
            let out_root = out.unwrap_or_else(|| {
                std::env::var_os("IMITLAB_OUT")
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("runs"))
            });
            run_command(&spec, &overrides, &out_root)
        }
    }
}

fn run_command(spec: &str, overrides: &[(String, String)], out_root: &PathBuf) -> ExitCode {
    let scenario = match scenario::load(spec, overrides) {
        Ok(s) => s,
        Err(e @ ScenarioError::Unknown(_))
        | Err(e @ ScenarioError::Parse(_))
        | Err(e @ ScenarioError::BadOverride { .. })
        | Err(e @ ScenarioError::Io(_)) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    match runner::run(&scenario, out_root) {
        Ok(outcome) => {
            println!(
                "scenario `{}` wrote {} files to {}",
                scenario.name,
                outcome.files.len(),
                outcome.dir.display()
            );
            if outcome.violations.is_empty() {
                println!("all property assertions passed");
                ExitCode::SUCCESS
            } else {
                for v in &outcome.violations {
                    eprintln!("assertion violated: {v}");
                }
                ExitCode::from(2)
            }
        }
        Err(runner::RunError::Experiment(builtins::ExperimentError::Config(msg))) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
