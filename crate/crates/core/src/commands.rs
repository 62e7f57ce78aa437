//! Subcommand implementations behind the `flowsense` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{cohort_report, CohortReport, Measure};
use crate::config::{load_config, validate_joa, ConfigError, OutputFormat, RunConfig};
use crate::error::ModelError;
use crate::flow_plane::{classify, in_flow};
use crate::fulfillment::{
    coefficients, fulfillment, fulfillment_compositional, gamma_point, monotonicity_vertex,
    simulate_figure5, soa, Agency,
};
use crate::game::{estimate_joa, hit_rate, mean_abs_error, run_block};
use crate::optimize::{optimize_assistance, Interval};
use crate::output::{
    figure5_csv, grid_csv, json_pretty, optimum_csv, parse_runs_jsonl, record_trial_rows,
    runs_jsonl, summary_csv, trials_csv, write_artifacts, Artifact, OutputError, RunManifest,
    TrialRow,
};
use crate::protocol::{build_cohort, run_cohort};
use crate::rng::Stream;

pub const THREADS_ENV: &str = "FLOWSENSE_THREADS";

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input: {0}")]
    Missing(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Insufficient(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Internal(_) => 1,
            Self::Missing(_) => 2,
            Self::Validation(_) => 3,
            Self::Insufficient(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Missing(_) | ConfigError::Unreadable { .. } => {
                Self::Missing(e.to_string())
            }
            ConfigError::Invalid { .. } => Self::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Data(_) => Self::Insufficient(e.to_string()),
            ModelError::Domain { .. } | ModelError::Contract(_) => Self::Validation(e.to_string()),
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        Self::Internal(e.to_string())
    }
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub cohort: Option<usize>,
}

/// Loads the config (or the defaults) and applies the overrides.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.output_dir = out.clone();
    }
    if let Some(format) = overrides.format {
        config.format = format;
    }
    if let Some(n) = overrides.cohort {
        config.cohort_size = n;
    }
    config.validate()?;
    Ok(config)
}

/// Parallelism cap from the environment; unset means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got \"{v}\""
            ))),
        },
    }
}

/// What a command prints and, for file-producing commands, its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub manifest: Option<RunManifest>,
}

fn write(
    config: &RunConfig,
    command: &str,
    artifacts: &[Artifact],
) -> Result<RunManifest, CliError> {
    let manifest = RunManifest::new(command, config.seed, config.digest());
    Ok(write_artifacts(&config.output_dir, artifacts, manifest)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct EvalRow {
    joa: f64,
    soa: f64,
    skill: f64,
    challenge: f64,
    h: f64,
    h_compositional: f64,
    octant: &'static str,
    in_flow: bool,
}

/// Model quantities at each requested JoA; prints only.
pub fn cmd_eval(config: &RunConfig, joa: Option<&[f64]>) -> Result<CommandOutput, CliError> {
    let (values, field) = match joa {
        Some(v) => (v, "--joa"),
        None => (config.eval.joa.as_slice(), "eval.joa"),
    };
    validate_joa(values, field)?;
    let params = config.fulfillment_params();
    let coeffs = coefficients(&params)?;
    let vertex = monotonicity_vertex(&coeffs);
    let rows = values
        .iter()
        .map(|&j| {
            let p = gamma_point(&params, j)?;
            Ok(EvalRow {
                joa: j,
                soa: soa(&Agency::from_joa(j)?),
                skill: p.skill,
                challenge: p.challenge,
                h: fulfillment(&params, j)?,
                h_compositional: fulfillment_compositional(&params, j)?,
                octant: classify(p, &config.band).as_str(),
                in_flow: in_flow(p, &config.band),
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;

    let stdout = if config.format == OutputFormat::Json {
        #[derive(Serialize)]
        struct Eval<'a> {
            x: f64,
            d: f64,
            coefficients: crate::fulfillment::Coefficients,
            vertex_joa: f64,
            rows: &'a [EvalRow],
        }
        let doc = Eval {
            x: params.x,
            d: params.d,
            coefficients: coeffs,
            vertex_joa: vertex.joa,
            rows: &rows,
        };
        String::from_utf8(json_pretty(&doc)?).map_err(|e| CliError::Internal(e.to_string()))?
    } else {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "x = {}  d = {}  A1 = {}  A2 = {}  A3 = {}  vertex JoA = {:.6}",
            params.x, params.d, coeffs.a1, coeffs.a2, coeffs.a3, vertex.joa
        );
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>10} {:>10} {:>10} {:<11} in_flow",
            "joa", "soa", "S", "C", "H", "octant"
        );
        for r in &rows {
            let _ = writeln!(
                s,
                "{:>8.4} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:<11} {}",
                r.joa, r.soa, r.skill, r.challenge, r.h, r.octant, r.in_flow
            );
        }
        s
    };
    Ok(CommandOutput {
        stdout,
        manifest: None,
    })
}

/// Alpha, beta and assisted states for the configured JoA list.
pub fn cmd_figure5(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let points = simulate_figure5(
        &config.fulfillment_params(),
        &config.figure5.joa,
        &config.band,
    )?;
    let mut artifacts = Vec::new();
    if config.format.csv() {
        artifacts.push(Artifact::new("figure5.csv", figure5_csv(&points)?));
    }
    if config.format.json() {
        artifacts.push(Artifact::new("figure5.json", json_pretty(&points)?));
    }
    let manifest = write(config, "figure5", &artifacts)?;
    let mut stdout = String::new();
    for p in &points {
        let joa = p.joa.map(|j| format!("{j}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            stdout,
            "{:<6} joa {:<6} S {:>10.6} C {:>10.6} H {:>10.6} {}{}",
            p.state.as_str(),
            joa,
            p.point.skill,
            p.point.challenge,
            p.strength,
            p.octant,
            if p.in_flow { " (in flow)" } else { "" }
        );
    }
    Ok(CommandOutput {
        stdout,
        manifest: Some(manifest),
    })
}

/// Assisted states on an even JoA grid over [0, 1].
pub fn cmd_sweep(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let joa = Interval::new(0.0, 1.0).linspace(config.sweep.joa_steps);
    let points = simulate_figure5(&config.fulfillment_params(), &joa, &config.band)?;
    let gamma: Vec<_> = points.into_iter().skip(2).collect();
    let mut artifacts = Vec::new();
    if config.format.csv() {
        artifacts.push(Artifact::new("sweep.csv", figure5_csv(&gamma)?));
    }
    if config.format.json() {
        artifacts.push(Artifact::new("sweep.json", json_pretty(&gamma)?));
    }
    let manifest = write(config, "sweep", &artifacts)?;
    let in_flow = gamma.iter().filter(|p| p.in_flow).count();
    let stdout = format!(
        "{} JoA values, {} in flow, H from {:.6} to {:.6}\n",
        gamma.len(),
        in_flow,
        gamma.first().map_or(f64::NAN, |p| p.strength),
        gamma.last().map_or(f64::NAN, |p| p.strength)
    );
    Ok(CommandOutput {
        stdout,
        manifest: Some(manifest),
    })
}

const GAME_STREAM: u64 = 0x6761_6d65;

#[derive(Debug, Clone, Copy, Serialize)]
struct GameSummary {
    trials: usize,
    hits: usize,
    hit_rate: f64,
    joa_estimate: Option<f64>,
    mean_abs_error: f64,
}

/// A single block of game trials with the configured task and agent.
pub fn cmd_game(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let task = config.task();
    let mut rng = Stream::root(config.seed).child(GAME_STREAM);
    let trials = run_block(&task, &config.agent, config.game.trials, &mut rng);
    let summary = GameSummary {
        trials: trials.len(),
        hits: trials.iter().filter(|t| t.outcome.is_hit()).count(),
        hit_rate: hit_rate(&trials),
        joa_estimate: estimate_joa(&trials).ok(),
        mean_abs_error: mean_abs_error(&trials),
    };
    let rows = trials.iter().enumerate().map(|(i, t)| TrialRow {
        participant_id: 0,
        session: "game",
        trial: i,
        width: task.target_width,
        assist_bonus: task.effective_bonus(),
        rendering: task.rendering.as_str(),
        outcome: t,
    });
    let mut artifacts = vec![Artifact::new("trials.csv", trials_csv(rows)?)];
    if config.format.json() {
        artifacts.push(Artifact::new("game.json", json_pretty(&summary)?));
    }
    let manifest = write(config, "game", &artifacts)?;
    let joa = summary
        .joa_estimate
        .map_or("n/a".to_string(), |j| format!("{j:.4}"));
    let stdout = format!(
        "{} trials, {} hits (rate {:.4}), JoA {}, mean |aim error| {:.4}\n",
        summary.trials, summary.hits, summary.hit_rate, joa, summary.mean_abs_error
    );
    Ok(CommandOutput {
        stdout,
        manifest: Some(manifest),
    })
}

fn report_artifacts(
    report: &CohortReport,
    format: OutputFormat,
) -> Result<Vec<Artifact>, CliError> {
    let mut artifacts = vec![Artifact::new("report.txt", report.to_text().into_bytes())];
    if format.csv() {
        artifacts.push(Artifact::new(
            "comparisons.csv",
            report.to_csv()?.into_bytes(),
        ));
    }
    if format.json() {
        artifacts.push(Artifact::new("report.json", json_pretty(report)?));
    }
    Ok(artifacts)
}

fn headline(report: &CohortReport) -> String {
    match report.comparison(Measure::FlowScore) {
        Some(c) => format!(
            "flow score, internal vs external JoA: {:.3} vs {:.3} (n = {}, t = {:.3}, df = {}, p = {:.3e})\n",
            c.mean_a, c.mean_b, c.n, c.test.t, c.test.df, c.test.p_two_sided
        ),
        None => String::new(),
    }
}

/// Runs the simulated cohort and analyses it.
///
/// Run data is written even when the cohort turns out too small for the
/// paired tests; the command then exits with the data-insufficiency code.
pub fn cmd_experiment(
    config: &RunConfig,
    threads: Option<usize>,
) -> Result<CommandOutput, CliError> {
    if config.cohort_size < 2 {
        return Err(CliError::Insufficient(format!(
            "insufficient participants for paired test (cohort size {})",
            config.cohort_size
        )));
    }
    let profiles = build_cohort(&config.cohort_template(), config.cohort_size, config.seed);
    let records = run_cohort(&profiles, &config.protocol, config.seed, threads)?;

    let mut artifacts = Vec::new();
    if config.format.csv() {
        artifacts.push(Artifact::new(
            "trials.csv",
            trials_csv(record_trial_rows(&records))?,
        ));
        artifacts.push(Artifact::new("summary.csv", summary_csv(&records)?));
    }
    if config.format.json() {
        artifacts.push(Artifact::new("runs.jsonl", runs_jsonl(&records)?));
    }
    match cohort_report(&records, config.analysis.alpha) {
        Ok(report) => {
            artifacts.extend(report_artifacts(&report, config.format)?);
            let manifest = write(config, "experiment", &artifacts)?;
            Ok(CommandOutput {
                stdout: headline(&report) + &report.to_text(),
                manifest: Some(manifest),
            })
        }
        Err(e) => {
            write(config, "experiment", &artifacts)?;
            Err(e.into())
        }
    }
}

/// Best assisted design inside the flow band, plus the evaluated grid.
pub fn cmd_optimize(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &config.optimizer;
    let result = optimize_assistance(
        &config.fulfillment_params(),
        o.joa_range,
        o.x_range,
        &config.band,
        &o.settings,
    )?;
    let mut artifacts = Vec::new();
    if config.format.csv() {
        artifacts.push(Artifact::new("optimum.csv", optimum_csv(&result)?));
        artifacts.push(Artifact::new("grid.csv", grid_csv(&result)?));
    }
    if config.format.json() {
        artifacts.push(Artifact::new("optimum.json", json_pretty(&result.optimum)?));
    }
    let manifest = write(config, "optimize", &artifacts)?;
    let opt = result.optimum;
    let stdout = format!(
        "joa* = {:.6}  x* = {:.6}  H* = {:.6}  feasible = {}\n",
        opt.joa, opt.x, opt.h, opt.feasible
    );
    Ok(CommandOutput {
        stdout,
        manifest: Some(manifest),
    })
}

/// Re-runs the statistics on an existing JSON-lines file.
pub fn cmd_analyze(config: &RunConfig, input: &Path) -> Result<CommandOutput, CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::Missing(format!("{}: {e}", input.display())))?;
    let records = parse_runs_jsonl(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
    let report = cohort_report(&records, config.analysis.alpha)?;
    let manifest = write(
        config,
        "analyze",
        &report_artifacts(&report, config.format)?,
    )?;
    Ok(CommandOutput {
        stdout: headline(&report) + &report.to_text(),
        manifest: Some(manifest),
    })
}
