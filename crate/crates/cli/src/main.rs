use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasecoh::presets::{preset, PRESET_NAMES};
use phasecoh::stochastic::{GapMode, SeedPolicy};
use phasecoh_cli::{
    load_file, load_preset, recurrence_plan, run_bounds, run_montecarlo, run_simulate, run_verify,
    CliError, Loaded, Result, EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK,
};

/// Phase-coupled oscillator networks under stochastic coupling.
///
/// Exit status: 0 success, 1 error, 2 infeasible bounds or failed assumption check.
#[derive(Parser)]
#[command(name = "phasecoh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a trajectory CSV.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the closed-form bounds on kappa and tau.
    Bounds {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "nominal", value_parser = parse_gap_mode)]
        gap_mode: GapMode,
        /// Also write the report as flat key=value lines.
        #[arg(long)]
        out: Option<String>,
    },
    /// Estimate return probability, return times and occupancy over many trials.
    Montecarlo {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Check the coupling function against the arc hypotheses.
    Verify {
        #[command(flatten)]
        source: Source,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Source {
    /// Preset name given positionally, e.g. `phasecoh bounds exp1`.
    #[arg(conflicts_with_all = ["scenario", "preset"])]
    name: Option<String>,
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_gap_mode(s: &str) -> std::result::Result<GapMode, String> {
    s.parse().map_err(|e: phasecoh::Error| e.to_string())
}

impl Source {
    fn load(&self) -> Result<Loaded> {
        let mut l = match (&self.name, &self.scenario, &self.preset) {
            (Some(n), _, _) | (_, _, Some(n)) => load_preset(n)?,
            (_, Some(path), _) => load_file(path)?,
            _ => {
                return Err(CliError::Usage(
                    "give a preset name, --preset NAME or --scenario PATH".into(),
                ))
            }
        };
        if let Some(s) = self.seed {
            l.scenario.seed = SeedPolicy::new(s);
        }
        Ok(l)
    }
}

fn open_out(path: &Option<String>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            }),
    }
}

fn flush(w: &mut dyn Write, path: &Option<String>) -> Result<()> {
    w.flush().map_err(|source| CliError::Io {
        path: path.clone().unwrap_or_else(|| "<stdout>".into()),
        source,
    })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate { source, steps, out } => {
            let mut l = source.load()?;
            if let Some(n) = steps {
                l.scenario.steps = n;
            }
            let mut w = open_out(&out)?;
            run_simulate(&l, &mut w)?;
            flush(&mut w, &out)?;
            Ok(EXIT_OK)
        }
        Command::Bounds {
            source,
            gap_mode,
            out,
        } => {
            let l = source.load()?;
            let b = run_bounds(&l, gap_mode)?;
            print!("{}", b.text);
            if let Some(p) = &out {
                std::fs::write(p, &b.flat).map_err(|source| CliError::Io {
                    path: p.clone(),
                    source,
                })?;
            }
            Ok(if b.feasible { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Montecarlo {
            source,
            trials,
            horizon,
            out,
        } => {
            let l = source.load()?;
            let plan = recurrence_plan(&l, trials, horizon)?;
            let mut w = open_out(&out)?;
            run_montecarlo(&l, &plan, &mut w)?;
            flush(&mut w, &out)?;
            Ok(EXIT_OK)
        }
        Command::Verify { source } => {
            let l = source.load()?;
            let report = run_verify(&l)?;
            print!("{report}");
            Ok(if report.passed() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            })
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                let p = preset(name).expect("listed presets exist");
                println!("{:<12} {}", p.name, p.summary);
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
