//! Simulated shooting-game task.
//!
//! A moving player icon fires at a stationary target; the shot is resolved
//! 250 ms after the click. With constant icon speed, timing error and
//! position error are interchangeable, so each trial draws the signed
//! displacement of the shot from the target centre directly. Assistance
//! widens the region that counts as a hit beyond the visible target.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, positive, unit_interval, ModelError, Result};
use crate::rng::Stream;
use crate::stats::{mean, sample_sd};

/// How the assistance is presented to the player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rendering {
    /// No assistance shown (or applied).
    None,
    /// Icon speed varies continuously between click and shot; the shot goes
    /// straight up.
    Hard,
    /// Icon moves at constant speed; the shot is angled toward the target.
    Easy,
}

impl Rendering {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Hard => "hard",
            Self::Easy => "easy",
        }
    }
}

impl fmt::Display for Rendering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rendering {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "hard" => Ok(Self::Hard),
            "easy" => Ok(Self::Easy),
            other => Err(format!(
                "unknown rendering `{other}` (expected none|hard|easy)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Horizontal target position (px).
    pub target_center: f64,
    /// Visible target width (px).
    pub target_width: f64,
    /// Extra hit-area width granted by the assistance (px).
    pub assist_bonus: f64,
    pub shot_latency_ms: f64,
    /// Player icon speed (px/ms).
    pub travel_speed: f64,
    pub rendering: Rendering,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            target_center: 400.0,
            target_width: 10.0,
            assist_bonus: 0.0,
            shot_latency_ms: 250.0,
            travel_speed: 0.4,
            rendering: Rendering::None,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        positive("target_width", self.target_width)?;
        if !(self.assist_bonus.is_finite() && self.assist_bonus >= 0.0) {
            return Err(domain(
                "assist_bonus",
                self.assist_bonus,
                "must be finite and >= 0",
            ));
        }
        positive("shot_latency_ms", self.shot_latency_ms)?;
        positive("travel_speed", self.travel_speed)?;
        Ok(())
    }

    /// Click-timing error (ms) equivalent to a shot displacement.
    pub fn timing_error_ms(&self, aim_error: f64) -> f64 {
        aim_error / self.travel_speed
    }

    /// Hit-area extension is only meaningful when assistance is rendered.
    pub fn effective_bonus(&self) -> f64 {
        match self.rendering {
            Rendering::None => 0.0,
            _ => self.assist_bonus,
        }
    }
}

/// A simulated player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentModel {
    /// Standard deviation of the signed aim error (px).
    pub aim_noise_sigma: f64,
    pub recognition_prob_easy: f64,
    pub recognition_prob_hard: f64,
}

impl Default for AgentModel {
    fn default() -> Self {
        Self {
            aim_noise_sigma: 10.0,
            recognition_prob_easy: 0.9,
            recognition_prob_hard: 0.1,
        }
    }
}

impl AgentModel {
    pub fn validate(&self) -> Result<()> {
        positive("aim_noise_sigma", self.aim_noise_sigma)?;
        unit_interval("recognition_prob_easy", self.recognition_prob_easy)?;
        unit_interval("recognition_prob_hard", self.recognition_prob_hard)?;
        if self.recognition_prob_hard > self.recognition_prob_easy {
            return Err(domain(
                "recognition_prob_hard",
                self.recognition_prob_hard,
                "must not exceed recognition_prob_easy",
            ));
        }
        Ok(())
    }

    pub fn recognition_prob(&self, rendering: Rendering) -> f64 {
        match rendering {
            Rendering::None => 0.0,
            Rendering::Hard => self.recognition_prob_hard,
            Rendering::Easy => self.recognition_prob_easy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HitOutcome {
    HitClean,
    HitAssisted,
    Miss,
}

impl HitOutcome {
    pub fn is_hit(self) -> bool {
        !matches!(self, Self::Miss)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HitClean => "hit_clean",
            Self::HitAssisted => "hit_assisted",
            Self::Miss => "miss",
        }
    }
}

impl FromStr for HitOutcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hit_clean" => Ok(Self::HitClean),
            "hit_assisted" => Ok(Self::HitAssisted),
            "miss" => Ok(Self::Miss),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Signed shot displacement from the target centre (px).
    pub aim_error: f64,
    pub outcome: HitOutcome,
    pub recognized: bool,
}

/// Classifies a shot landing `d` px from the target centre.
pub fn classify_hit(d: f64, width: f64, bonus: f64) -> Result<HitOutcome> {
    positive("target_width", width)?;
    if !(bonus.is_finite() && bonus >= 0.0) {
        return Err(domain("assist_bonus", bonus, "must be finite and >= 0"));
    }
    let r = d.abs();
    Ok(if r <= width / 2.0 {
        HitOutcome::HitClean
    } else if r <= (width + bonus) / 2.0 {
        HitOutcome::HitAssisted
    } else {
        HitOutcome::Miss
    })
}

/// Whether the player notices that the assistance produced the hit.
///
/// Only assisted hits can be recognised, and only those draw from `rng`.
pub fn recognize(
    rendering: Rendering,
    agent: &AgentModel,
    outcome: HitOutcome,
    rng: &mut Stream,
) -> bool {
    if outcome != HitOutcome::HitAssisted || rendering == Rendering::None {
        return false;
    }
    let p = agent.recognition_prob(rendering).clamp(0.0, 1.0);
    Bernoulli::new(p).map(|b| b.sample(rng)).unwrap_or(false)
}

/// Plays one trial.
pub fn run_trial(config: &TaskConfig, agent: &AgentModel, rng: &mut Stream) -> TrialOutcome {
    let aim_error = match Normal::new(0.0, agent.aim_noise_sigma) {
        Ok(n) => n.sample(rng),
        Err(_) => 0.0,
    };
    let outcome = classify_hit(aim_error, config.target_width, config.effective_bonus())
        .unwrap_or(HitOutcome::Miss);
    let recognized = recognize(config.rendering, agent, outcome, rng);
    TrialOutcome {
        aim_error,
        outcome,
        recognized,
    }
}

/// Plays `n` consecutive trials at a fixed configuration.
pub fn run_block(
    config: &TaskConfig,
    agent: &AgentModel,
    n: usize,
    rng: &mut Stream,
) -> Vec<TrialOutcome> {
    (0..n).map(|_| run_trial(config, agent, rng)).collect()
}

/// JoA as one minus the share of hits the player attributed to assistance.
pub fn estimate_joa(trials: &[TrialOutcome]) -> Result<f64> {
    let hits = trials.iter().filter(|t| t.outcome.is_hit()).count();
    if hits == 0 {
        return Err(ModelError::Data(
            "JoA undefined: no hits among trials".into(),
        ));
    }
    let recognized = trials
        .iter()
        .filter(|t| t.outcome.is_hit() && t.recognized)
        .count();
    Ok((1.0 - recognized as f64 / hits as f64).clamp(0.0, 1.0))
}

/// Which spread of the aim errors drives the target width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadMeasure {
    /// Sample SD of the signed errors.
    #[default]
    Signed,
    /// Sample SD of the absolute errors.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdapterSettings {
    pub warmup_trials: usize,
    pub width_multiplier: f64,
    pub width_floor: f64,
    pub spread: SpreadMeasure,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        Self {
            warmup_trials: 10,
            width_multiplier: 1.0,
            width_floor: 0.5,
            spread: SpreadMeasure::Signed,
        }
    }
}

impl AdapterSettings {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_trials < 2 {
            return Err(domain(
                "warmup_trials",
                self.warmup_trials as f64,
                "needs at least 2 trials for a sample SD",
            ));
        }
        positive("width_multiplier", self.width_multiplier)?;
        positive("width_floor", self.width_floor)?;
        Ok(())
    }
}

/// Tracks aim errors and resizes the target to their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyAdapter {
    settings: AdapterSettings,
    history: Vec<f64>,
    width: f64,
}

impl DifficultyAdapter {
    pub fn new(settings: AdapterSettings, initial_width: f64) -> Result<Self> {
        settings.validate()?;
        positive("initial_width", initial_width)?;
        Ok(Self {
            settings,
            history: Vec::new(),
            width: initial_width,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Records one error and returns the (possibly updated) width.
    pub fn adapt_width(&mut self, error: f64) -> f64 {
        self.history.push(error);
        if self.history.len() >= self.settings.warmup_trials {
            let sd = match self.settings.spread {
                SpreadMeasure::Signed => sample_sd(&self.history),
                SpreadMeasure::Absolute => {
                    let abs: Vec<f64> = self.history.iter().map(|e| e.abs()).collect();
                    sample_sd(&abs)
                }
            };
            let sd = sd.unwrap_or(0.0);
            self.width = (self.settings.width_multiplier * sd).max(self.settings.width_floor);
        }
        self.width
    }

    /// True when the width collapsed onto the floor.
    pub fn is_degenerate(&self) -> bool {
        self.width <= self.settings.width_floor
    }
}

/// Fraction of trials that hit (clean or assisted).
pub fn hit_rate(trials: &[TrialOutcome]) -> f64 {
    if trials.is_empty() {
        return 0.0;
    }
    trials.iter().filter(|t| t.outcome.is_hit()).count() as f64 / trials.len() as f64
}

pub fn mean_abs_error(trials: &[TrialOutcome]) -> f64 {
    let abs: Vec<f64> = trials.iter().map(|t| t.aim_error.abs()).collect();
    mean(&abs).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(sigma: f64) -> AgentModel {
        AgentModel {
            aim_noise_sigma: sigma,
            ..Default::default()
        }
    }

    #[test]
    fn classify_hit_examples() {
        assert_eq!(classify_hit(0.9, 2.0, 1.0).unwrap(), HitOutcome::HitClean);
        assert_eq!(
            classify_hit(-1.4, 2.0, 1.0).unwrap(),
            HitOutcome::HitAssisted
        );
        assert_eq!(classify_hit(1.6, 2.0, 1.0).unwrap(), HitOutcome::Miss);
        assert_eq!(classify_hit(1.0, 2.0, 0.0).unwrap(), HitOutcome::HitClean);
        assert!(classify_hit(0.0, 0.0, 1.0).is_err());
        assert!(classify_hit(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn perfect_aim_hits_center() {
        let cfg = TaskConfig::default();
        let mut rng = Stream::root(1);
        let t = run_trial(&cfg, &agent(1e-9), &mut rng);
        assert!(t.aim_error.abs() < 1e-7);
        assert_eq!(t.outcome, HitOutcome::HitClean);
        assert!(!t.recognized);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = TaskConfig {
            assist_bonus: 20.0,
            rendering: Rendering::Easy,
            ..Default::default()
        };
        let a = run_block(&cfg, &agent(10.0), 100, &mut Stream::session(3, 1, 2));
        let b = run_block(&cfg, &agent(10.0), 100, &mut Stream::session(3, 1, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn recognize_rules() {
        let mut rng = Stream::root(5);
        let sure = AgentModel {
            recognition_prob_easy: 1.0,
            ..Default::default()
        };
        assert!(!recognize(
            Rendering::None,
            &sure,
            HitOutcome::HitAssisted,
            &mut rng
        ));
        assert!(recognize(
            Rendering::Easy,
            &sure,
            HitOutcome::HitAssisted,
            &mut rng
        ));
        assert!(!recognize(
            Rendering::Easy,
            &sure,
            HitOutcome::HitClean,
            &mut rng
        ));
        assert!(!recognize(
            Rendering::Easy,
            &sure,
            HitOutcome::Miss,
            &mut rng
        ));

        let a = AgentModel::default();
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| recognize(Rendering::Hard, &a, HitOutcome::HitAssisted, &mut rng))
            .count();
        assert!((hits as f64 / n as f64 - 0.10).abs() <= 0.01);
    }

    #[test]
    fn joa_estimates() {
        let t = |o, r| TrialOutcome {
            aim_error: 0.0,
            outcome: o,
            recognized: r,
        };
        let none = vec![
            t(HitOutcome::HitAssisted, false),
            t(HitOutcome::Miss, false),
        ];
        assert_eq!(estimate_joa(&none).unwrap(), 1.0);
        let all = vec![
            t(HitOutcome::HitAssisted, true),
            t(HitOutcome::HitAssisted, true),
        ];
        assert_eq!(estimate_joa(&all).unwrap(), 0.0);
        let mut mixed: Vec<_> = (0..5).map(|_| t(HitOutcome::HitAssisted, true)).collect();
        mixed.extend((0..15).map(|_| t(HitOutcome::HitClean, false)));
        mixed.extend((0..7).map(|_| t(HitOutcome::Miss, false)));
        assert_eq!(estimate_joa(&mixed).unwrap(), 0.75);
        assert!(matches!(
            estimate_joa(&[t(HitOutcome::Miss, false)]),
            Err(ModelError::Data(_))
        ));
    }

    #[test]
    fn adapter_uses_sample_sd_after_warmup() {
        let s = AdapterSettings {
            warmup_trials: 4,
            ..Default::default()
        };
        let mut a = DifficultyAdapter::new(s, 50.0).unwrap();
        assert_eq!(a.adapt_width(-1.0), 50.0);
        assert_eq!(a.adapt_width(1.0), 50.0);
        assert_eq!(a.adapt_width(-1.0), 50.0);
        let w = a.adapt_width(1.0);
        assert!((w - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adapter_floors_zero_spread() {
        let s = AdapterSettings {
            warmup_trials: 3,
            ..Default::default()
        };
        let mut a = DifficultyAdapter::new(s, 50.0).unwrap();
        for _ in 0..5 {
            a.adapt_width(2.0);
        }
        assert_eq!(a.width(), 0.5);
        assert!(a.is_degenerate());
    }

    #[test]
    fn adapter_absolute_spread() {
        let s = AdapterSettings {
            warmup_trials: 4,
            spread: SpreadMeasure::Absolute,
            ..Default::default()
        };
        let mut a = DifficultyAdapter::new(s, 50.0).unwrap();
        for e in [-1.0, 1.0, -3.0, 3.0] {
            a.adapt_width(e);
        }
        assert!((a.width() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adapter_rejects_short_warmup() {
        let s = AdapterSettings {
            warmup_trials: 1,
            ..Default::default()
        };
        assert!(DifficultyAdapter::new(s, 1.0).is_err());
    }

    #[test]
    fn assistance_never_turns_hit_into_miss() {
        for i in 0..200 {
            let d = -10.0 + i as f64 * 0.1;
            for a in [0.0, 0.5, 1.0, 4.0] {
                let base = classify_hit(d, 3.0, a).unwrap();
                let more = classify_hit(d, 3.0, a + 1.0).unwrap();
                if base.is_hit() {
                    assert!(more.is_hit());
                }
            }
        }
    }

    #[test]
    fn agent_validation() {
        assert!(AgentModel::default().validate().is_ok());
        let bad = AgentModel {
            recognition_prob_hard: 0.95,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(agent(0.0).validate().is_err());
    }

    #[test]
    fn rendering_round_trips_text() {
        for r in [Rendering::None, Rendering::Hard, Rendering::Easy] {
            assert_eq!(r.as_str().parse::<Rendering>().unwrap(), r);
        }
        assert!("fast".parse::<Rendering>().is_err());
    }
}
