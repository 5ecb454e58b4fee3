use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dolab::families::Theorem;
use dolab_cli::config::{parse_list, Algo, ExperimentConfig, LoadedGame, PartialConfig, SeedField};
use dolab_cli::error::{CliError, EXIT_LEGALITY, EXIT_OK, EXIT_PREDICATE};
use dolab_cli::report::Report;
use dolab_cli::run::{run_trial, summary};
use dolab_cli::sweep::{run_sweep, SweepSummary};
use dolab_cli::verify::{verify_theorem, VerdictKind};

#[derive(Parser)]
#[command(name = "dolab", version, about = "Exact double oracle experiments on lower-bound game families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family member in the canonical game format.
    Generate {
        #[arg(long)]
        family: String,
        #[arg(long)]
        k: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one seeded trial and print its summary.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one trial per seed in parallel.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Seed list: `0..100`, `1,5,9` or `2..=6`.
        #[arg(long)]
        seeds: Option<String>,
        /// Directory for per-seed traces and `sweep.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent trials.
        #[arg(long, env = "DOLAB_JOBS")]
        jobs: Option<usize>,
    },
    /// Run a lower-bound configuration for each k and check its predicates.
    VerifyTheorem {
        /// T1 to T5.
        theorem: Theorem,
        /// Values of k: `3`, `2..=6`, `2-4`.
        #[arg(long)]
        k: String,
        /// Directory for the traces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a directory of traces.
    Report {
        dir: PathBuf,
        /// Machine-readable report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Game file in the canonical format.
    #[arg(long)]
    game: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    /// Rational, e.g. `1/3`.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// `i,j`, `random` or `schedule`.
    #[arg(long)]
    init: Option<String>,
    /// unique-or-fail, lexicographic or scripted.
    #[arg(long)]
    meta_nash: Option<String>,
    /// unique-or-fail, lexicographic, seeded-random or scripted.
    #[arg(long)]
    best_response: Option<String>,
    /// Adversarial schedule and defaults of a lower-bound run: T1 to T5.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(self, seeds: Option<SeedField>, out: Option<PathBuf>) -> Result<(ExperimentConfig, Option<PathBuf>), CliError> {
        let file = self.config.as_deref().map(PartialConfig::from_file).transpose()?;
        let flags = PartialConfig {
            family: self.family,
            k: self.k,
            game: self.game,
            algo: self.algo,
            eps: self.eps,
            alpha: self.alpha,
            init: self.init,
            meta_nash: self.meta_nash,
            best_response: self.best_response,
            schedule: self.schedule,
            seeds,
            max_iters: self.max_iters,
            out,
        };
        ExperimentConfig::resolve(flags, file)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Generate { family, k, out } => {
            let text = dolab_cli::generate_game(&family, k)?;
            match out {
                Some(path) => write_text(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Command::Run { exp, seed, out } => {
            let (config, out) = exp.resolve(seed.map(|s| SeedField::List(vec![s])), out)?;
            let [seed] = config.seeds[..] else {
                return Err(CliError::Usage("run takes one seed; use sweep for several".into()));
            };
            let loaded = LoadedGame::load(&config.game)?;
            let trace = run_trial(&config, &loaded, seed)?;
            if let Some(path) = out {
                trace.write(&path)?;
            }
            print!("{}", summary(&trace));
            Ok(trace.failure.as_ref().map_or(EXIT_OK, |f| f.exit_code()))
        }
        Command::Sweep { exp, seeds, out, jobs } => {
            let (config, out) = exp.resolve(seeds.map(SeedField::Text), out)?;
            let loaded = LoadedGame::load(&config.game)?;
            let traces = run_sweep(&config, &loaded, jobs)?;
            let stats = SweepSummary::from_traces(&traces);
            if let Some(dir) = out {
                for t in &traces {
                    t.write(&dir.join(format!("seed-{}.jsonl", t.header.seed)))?;
                }
                let json = serde_json::to_string_pretty(&stats).expect("summary serializes") + "\n";
                write_text(&dir.join("sweep.json"), &json)?;
            }
            print!("{}", stats.text());
            for (trial, failure) in stats.failures() {
                eprintln!("seed {}: {}", trial.seed, failure.message);
            }
            let code = stats.failures().next().map_or(EXIT_OK, |(_, f)| f.exit_code());
            Ok(code)
        }
        Command::VerifyTheorem { theorem, k, out } => {
            let ks = parse_list(&k).map_err(CliError::Usage)?;
            let mut code = EXIT_OK;
            for k in ks {
                let (verdict, trace) = verify_theorem(theorem, k as usize)?;
                if let Some(dir) = &out {
                    trace.write(&dir.join(format!("{theorem}-k{k}.jsonl")))?;
                }
                println!("{}", serde_json::to_string(&verdict).expect("verdict serializes"));
                code = match (code, verdict.verdict) {
                    (_, VerdictKind::Illegal) | (EXIT_LEGALITY, _) => EXIT_LEGALITY,
                    (_, VerdictKind::Fail) => EXIT_PREDICATE,
                    (c, VerdictKind::Pass) => c,
                };
            }
            Ok(code)
        }
        Command::Report { dir, out } => {
            let report = Report::from_dir(&dir)?;
            if let Some(path) = out {
                write_text(&path, &report.json())?;
            }
            print!("{}", report.csv());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
