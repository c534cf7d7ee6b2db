use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use contact_oed::fisher::EngineMode;
use contact_oed::harness::{
    compare_baseline, default_priors, emit_landscape, parse_priors, run_active_learning, run_robustness_sweep,
    write_landscape_csv, write_run, LandscapeAxes, RunConfig,
};
use contact_oed::scenarios::ScenarioKind;
use contact_oed::Result;

#[derive(Parser)]
#[command(name = "contact-oed", version, about = "Contact-aware experiment design and parameter estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    /// TOML file overriding any default.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    engine: Option<EngineMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kmax: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut cfg = RunConfig::from_overrides(self.scenario, &text)?;
        if let Some(e) = self.engine {
            cfg.engine.mode = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.kmax {
            cfg.k_max = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed learning loop and write a run directory.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the loop from several prior modes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One prior per line, comma separated; defaults to seven spread priors.
        #[arg(long)]
        priors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Information landscape over a contact-state grid.
    Landscape {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long)]
        axes: Option<LandscapeAxes>,
        #[arg(long, default_value_t = 41)]
        res: usize,
        /// Comma-separated θ; defaults to the prior mode.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired contact-aware vs baseline comparison over seeds 0..N.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config {
        #[arg(long)]
        scenario: Option<ScenarioKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dump: bool,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, out } => {
            let cfg = common.resolve()?;
            let record = run_active_learning(&cfg)?;
            let files = write_run(&record, &out)?;
            println!(
                "{}",
                json!({
                    "out": files.dir,
                    "final_theta": record.final_theta(),
                    "final_error": record.final_error(),
                    "cumulative_trace_information": record.cumulative_information(),
                })
            );
        }
        Command::Sweep { common, priors, out } => {
            let cfg = common.resolve()?;
            let priors = match priors {
                Some(p) => parse_priors(&fs::read_to_string(p)?, cfg.scenario.dim())?,
                None => default_priors(&cfg),
            };
            let runs = run_robustness_sweep(&cfg, &priors)?;
            let mut table = String::from("prior,k,distance\n");
            for (i, r) in runs.iter().enumerate() {
                write_run(r, &out.join(format!("prior_{i}")))?;
                for (k, d) in r.distance_curve().iter().enumerate() {
                    table.push_str(&format!("{i},{k},{d}\n"));
                }
            }
            write_or_print(Some(&out.join("sweep.csv")), &table)?;
            println!("{}", json!({ "out": out, "runs": runs.len() }));
        }
        Command::Landscape { scenario, axes, res, theta, config, out } => {
            let text = match &config {
                Some(p) => fs::read_to_string(p)?,
                None => String::new(),
            };
            let cfg = RunConfig::from_overrides(Some(scenario), &text)?;
            let axes = axes.unwrap_or_else(|| LandscapeAxes::default_for(scenario));
            let grid = emit_landscape(&cfg.scenario, axes, res, theta.as_deref())?;
            write_landscape_csv(&grid, &out)?;
            let (i, j) = grid.argmax();
            println!("{}", json!({ "out": out, "argmax": [grid.x[i], grid.y[j]], "max_trace_f": grid.max() }));
        }
        Command::Compare { common, seeds, out } => {
            let cfg = common.resolve()?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let report = compare_baseline(&cfg, &seeds)?;
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Config { scenario, config, dump } => {
            let text = match &config {
                Some(p) => fs::read_to_string(p)?,
                None => String::new(),
            };
            let kind = scenario.or(if config.is_none() { Some(ScenarioKind::Rubbing) } else { None });
            let cfg = RunConfig::from_overrides(kind, &text)?;
            if dump {
                print!("{}", cfg.to_toml()?);
            } else {
                println!("{}", json!({ "scenario": cfg.scenario.name, "valid": true }));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let kind = std::error::Error::source(&e)
                .and_then(|s| s.downcast_ref::<contact_oed::Error>())
                .map_or("invalid_arguments", |c| c.kind());
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let detail = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": kind, "message": detail }));
            return ExitCode::FAILURE;
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
