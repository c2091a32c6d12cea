use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dflab::catalog::{self, SCENARIOS};
use dflab::config::ScenarioConfig;
use dflab::error::CliResult;
use dflab::run::{run_scenario, write_outputs, Verdict};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "dflab", version, about = "Non-local Dirichlet forms on finite graph windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios given as config paths, bundled names or `all`.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        /// Scenarios run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory; one subdirectory per scenario when several run.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the graph of a scenario in the dump format.
    DumpModel { config: String },
    /// List the bundled scenarios.
    ListScenarios,
}

fn run_one(cfg: &ScenarioConfig, dir: PathBuf, seed: Option<u64>) -> CliResult<Verdict> {
    let out = run_scenario(cfg, seed)?;
    write_outputs(&out, &dir)?;
    for t in &out.report.tasks {
        println!("{}: [{}] {} {:?}", cfg.name, t.index, t.name, t.verdict);
    }
    println!("{}: {:?} -> {}", cfg.name, out.report.verdict, dir.display());
    Ok(out.report.verdict)
}

fn run(configs: Vec<String>, jobs: usize, out: Option<PathBuf>, seed: Option<u64>) -> u8 {
    let names: Vec<String> = if configs.iter().any(|c| c == "all") {
        SCENARIOS.iter().map(|(n, _)| n.to_string()).collect()
    } else {
        configs
    };
    let mut loaded = Vec::new();
    for n in &names {
        match catalog::load(n) {
            Ok(cfg) => loaded.push(cfg),
            Err(e) => {
                eprintln!("error: {n}: {e}");
                return 2;
            }
        }
    }
    let direct = loaded.len() == 1 && out.is_some();
    let base = out.unwrap_or_else(|| PathBuf::from("out"));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let results: Vec<CliResult<Verdict>> = pool.install(|| {
        loaded
            .par_iter()
            .map(|cfg| {
                let dir = if direct { base.clone() } else { base.join(&cfg.name) };
                run_one(cfg, dir, seed)
            })
            .collect()
    });
    let mut code = 0;
    for (cfg, r) in loaded.iter().zip(results) {
        match r {
            Ok(Verdict::Pass) => {}
            Ok(Verdict::Fail) => code = code.max(1),
            Err(e) => {
                eprintln!("error: {}: {e}", cfg.name);
                code = 2;
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            configs,
            jobs,
            out,
            seed,
        } => run(configs, jobs, out, seed),
        Command::DumpModel { config } => match catalog::load(&config).and_then(|c| c.build_graph()) {
            Ok(g) => {
                print!("{}", g.dump());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::ListScenarios => {
            for (name, text) in SCENARIOS {
                let desc = ScenarioConfig::from_json(text)
                    .map(|c| c.description)
                    .unwrap_or_default();
                println!("{name:28} {desc}");
            }
            0
        }
    };
    ExitCode::from(code)
}
