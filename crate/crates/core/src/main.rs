use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use flowsense::commands::{self, CliError, Overrides};
use flowsense::config::{OutputFormat, STUDY_COHORT};
use flowsense::game::Rendering;

#[derive(Debug, Parser)]
#[command(
    name = "flowsense",
    version,
    about = "Flow model of assistance and agency, with a simulated experiment"
)]
struct Cli {
    /// JSON config file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Cohort size, or `paper` for the original study's 11.
    #[arg(long, global = true, value_parser = parse_cohort)]
    cohort: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => Self::Csv,
            Format::Json => Self::Json,
            Format::Both => Self::Both,
        }
    }
}

fn parse_cohort(s: &str) -> Result<usize, String> {
    if s.eq_ignore_ascii_case("paper") {
        return Ok(STUDY_COHORT);
    }
    s.parse()
        .map_err(|_| format!("expected a participant count or `paper`, got `{s}`"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print model quantities at given JoA values.
    Eval {
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        joa: Option<Vec<f64>>,
    },
    /// Alpha, beta and assisted states on the skill-challenge plane.
    Figure5 {
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        joa: Option<Vec<f64>>,
    },
    /// Assisted states over an even JoA grid.
    Sweep {
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Play a block of game trials with one simulated player.
    Game {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        bonus: Option<f64>,
        #[arg(long)]
        rendering: Option<Rendering>,
    },
    /// Run the simulated cohort through the full protocol and analyse it.
    Experiment,
    /// Find the strongest assisted design inside the flow band.
    Optimize,
    /// Re-run the statistics on a runs.jsonl file.
    Analyze {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        format: cli.format.map(Into::into),
        cohort: cli.cohort,
    };
    let mut config = commands::resolve_config(cli.config.as_deref(), &overrides)?;
    let output = match cli.command {
        Command::Eval { joa } => commands::cmd_eval(&config, joa.as_deref())?,
        Command::Figure5 { joa } => {
            if let Some(joa) = joa {
                config.figure5.joa = joa;
                flowsense::config::validate_joa(&config.figure5.joa, "--joa")?;
            }
            commands::cmd_figure5(&config)?
        }
        Command::Sweep { steps } => {
            if let Some(n) = steps {
                config.sweep.joa_steps = n;
            }
            config.validate()?;
            commands::cmd_sweep(&config)?
        }
        Command::Game {
            trials,
            width,
            bonus,
            rendering,
        } => {
            let g = &mut config.game;
            g.trials = trials.unwrap_or(g.trials);
            g.target_width = width.unwrap_or(g.target_width);
            g.assist_bonus = bonus.unwrap_or(g.assist_bonus);
            g.rendering = rendering.unwrap_or(g.rendering);
            config.validate()?;
            commands::cmd_game(&config)?
        }
        Command::Experiment => commands::cmd_experiment(&config, commands::threads_from_env()?)?,
        Command::Optimize => commands::cmd_optimize(&config)?,
        Command::Analyze { input } => commands::cmd_analyze(&config, &input)?,
    };
    Ok(output.stdout)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flowsense: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
