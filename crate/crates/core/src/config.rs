//! Run configuration: JSON with a schema tag, defaults for every omitted
//! field, and validation errors that name the offending field.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::DEFAULT_ALPHA;
use crate::error::ModelError;
use crate::flow_plane::FlowBand;
use crate::fulfillment::FulfillmentParams;
use crate::game::{AgentModel, Rendering, TaskConfig};
use crate::optimize::{Interval, OptimizerSettings};
use crate::perception::PerceptionParams;
use crate::protocol::{CohortTemplate, ProtocolSettings, QuestionnaireModel};

pub const CONFIG_SCHEMA: &str = "flowsense-config/1";
pub const DEFAULT_COHORT: usize = 30;
/// Cohort size of the original human study.
pub const STUDY_COHORT: usize = 11;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", .0.display())]
    Missing(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    fn from_model(section: &str, err: ModelError) -> Self {
        match err {
            ModelError::Domain { field, .. } => {
                Self::invalid(format!("{section}.{field}"), err.to_string())
            }
            other => Self::invalid(section, other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
}

/// Assistance amount and pre-assistance challenge error in model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub x: f64,
    pub d: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { x: 6.0, d: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JoaList {
    pub joa: Vec<f64>,
}

impl Default for JoaList {
    fn default() -> Self {
        Self {
            joa: vec![0.1, 0.5, 0.9],
        }
    }
}

impl JoaList {
    pub fn validate(&self, section: &str) -> Result<(), ConfigError> {
        validate_joa(&self.joa, &format!("{section}.joa"))
    }
}

pub fn validate_joa(values: &[f64], path: &str) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::invalid(
            path,
            "at least one JoA value is required",
        ));
    }
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(ConfigError::invalid(
            format!("{path}[{i}]"),
            format!("JoA must lie in [0, 1] (got {})", values[i]),
        )),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub joa_steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { joa_steps: 101 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub joa_range: Interval,
    pub x_range: Interval,
    pub settings: OptimizerSettings,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            joa_range: Interval::new(0.0, 1.0),
            x_range: Interval::point(6.0),
            settings: OptimizerSettings::default(),
        }
    }
}

/// A standalone block of game trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub trials: usize,
    pub target_width: f64,
    pub assist_bonus: f64,
    pub rendering: Rendering,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            target_width: 10.0,
            assist_bonus: 0.0,
            rendering: Rendering::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub alpha: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cohort")]
    pub cohort_size: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub perception: PerceptionParams,
    #[serde(default)]
    pub band: FlowBand,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub eval: JoaList,
    #[serde(default)]
    pub figure5: JoaList,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub game: GameConfig,
    #[serde(default)]
    pub agent: AgentModel,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    #[serde(default)]
    pub questionnaire: QuestionnaireModel,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_cohort() -> usize {
    DEFAULT_COHORT
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: CONFIG_SCHEMA.to_string(),
            seed: 0,
            cohort_size: DEFAULT_COHORT,
            output_dir: default_output_dir(),
            format: OutputFormat::default(),
            perception: PerceptionParams::default(),
            band: FlowBand::default(),
            scenario: ScenarioConfig::default(),
            eval: JoaList::default(),
            figure5: JoaList::default(),
            sweep: SweepConfig::default(),
            optimizer: OptimizerConfig::default(),
            game: GameConfig::default(),
            agent: AgentModel::default(),
            protocol: ProtocolSettings::default(),
            questionnaire: QuestionnaireModel::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(ConfigError::invalid(
                "schema",
                format!("expected \"{CONFIG_SCHEMA}\", got \"{}\"", self.schema),
            ));
        }
        if self.cohort_size == 0 {
            return Err(ConfigError::invalid("cohort_size", "must be at least 1"));
        }
        let wrap = |section: &str, r: crate::error::Result<()>| {
            r.map_err(|e| ConfigError::from_model(section, e))
        };
        wrap("perception", self.perception.validate())?;
        wrap("band", self.band.validate())?;
        wrap("scenario", self.fulfillment_params().validate())?;
        self.eval.validate("eval")?;
        self.figure5.validate("figure5")?;
        if self.sweep.joa_steps < 2 {
            return Err(ConfigError::invalid(
                "sweep.joa_steps",
                "must be at least 2",
            ));
        }
        self.validate_optimizer()?;
        wrap("game", self.task().validate())?;
        wrap("agent", self.agent.validate())?;
        wrap("protocol", self.protocol.validate())?;
        wrap("questionnaire", self.questionnaire.validate())?;
        if !(self.analysis.alpha > 0.0 && self.analysis.alpha < 1.0) {
            return Err(ConfigError::invalid("analysis.alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn validate_optimizer(&self) -> Result<(), ConfigError> {
        let o = &self.optimizer;
        for (name, r) in [("joa_range", o.joa_range), ("x_range", o.x_range)] {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                return Err(ConfigError::invalid(
                    format!("optimizer.{name}"),
                    format!("empty or non-finite range [{}, {}]", r.lo, r.hi),
                ));
            }
        }
        if o.joa_range.lo < 0.0 || o.joa_range.hi > 1.0 {
            return Err(ConfigError::invalid(
                "optimizer.joa_range",
                "must lie within [0, 1]",
            ));
        }
        if o.x_range.lo <= self.scenario.d {
            return Err(ConfigError::invalid(
                "optimizer.x_range",
                format!("assistance must exceed d = {}", self.scenario.d),
            ));
        }
        let s = &o.settings;
        if s.joa_steps == 0 || s.x_steps == 0 || s.max_iter == 0 {
            return Err(ConfigError::invalid(
                "optimizer.settings",
                "step and iteration counts must be positive",
            ));
        }
        if !(s.tolerance > 0.0) {
            return Err(ConfigError::invalid(
                "optimizer.settings.tolerance",
                "must be > 0",
            ));
        }
        Ok(())
    }

    pub fn fulfillment_params(&self) -> FulfillmentParams {
        FulfillmentParams::new(self.scenario.x, self.scenario.d, self.perception)
    }

    pub fn task(&self) -> TaskConfig {
        TaskConfig {
            target_center: self.protocol.target_center,
            target_width: self.game.target_width,
            assist_bonus: self.game.assist_bonus,
            shot_latency_ms: self.protocol.shot_latency_ms,
            travel_speed: self.protocol.travel_speed,
            rendering: self.game.rendering,
        }
    }

    pub fn cohort_template(&self) -> CohortTemplate {
        CohortTemplate {
            agent: self.agent,
            perception: self.perception,
            questionnaire: self.questionnaire,
            sigma_jitter: self.protocol.sigma_jitter,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(emit_config(self).as_bytes()))
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "(root)".to_string()
        } else {
            path
        };
        ConfigError::invalid(path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::Missing(path.to_path_buf())
        } else {
            ConfigError::Unreadable {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    parse_config(&text)
}

/// Canonical pretty JSON; `parse_config` inverts it exactly.
pub fn emit_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serialises")
}
