//! The five-session experiment run by simulated participants.
//!
//! Practice, difficulty adjustment (finds the balanced width `w*`, the alpha
//! state), high difficulty at a fraction of `w*` (the beta state), assisted
//! play under both renderings (the gamma states) and a free session where the
//! participant picks a rendering and keeps playing. After each assisted
//! block a questionnaire is synthesised from the model quantities.

use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, positive, ModelError, Result};
use crate::flow_plane::beta_state;
use crate::fulfillment::{fulfillment, gamma_point, FulfillmentParams};
use crate::game::{
    estimate_joa, mean_abs_error, run_block, run_trial, AdapterSettings, AgentModel,
    DifficultyAdapter, Rendering, TaskConfig, TrialOutcome,
};
use crate::perception::{perceive, PerceptionParams};
use crate::rng::Stream;

pub const RUN_SCHEMA: &str = "flowsense-run v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Practice,
    DifficultyAdjustment,
    HighDifficulty,
    Assisted,
    Free,
}

impl SessionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Practice => "practice",
            Self::DifficultyAdjustment => "difficulty_adjustment",
            Self::HighDifficulty => "high_difficulty",
            Self::Assisted => "assisted",
            Self::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub kind: SessionKind,
    pub trials: usize,
}

/// Rejects plans that cannot establish the alpha and beta states before
/// assistance is given.
pub fn validate_plan(plan: &[SessionPlan]) -> Result<()> {
    if let Some(p) = plan.iter().find(|p| p.trials == 0) {
        return Err(ModelError::Contract(format!(
            "session {} has no trials",
            p.kind.as_str()
        )));
    }
    let positions = |kind| -> Vec<usize> {
        plan.iter()
            .enumerate()
            .filter(|(_, p)| p.kind == kind)
            .map(|(i, _)| i)
            .collect()
    };
    let adjust = positions(SessionKind::DifficultyAdjustment);
    if adjust.len() != 1 {
        return Err(ModelError::Contract(format!(
            "expected exactly one difficulty adjustment session, found {}",
            adjust.len()
        )));
    }
    let high = positions(SessionKind::HighDifficulty);
    let assisted = positions(SessionKind::Assisted);
    if high.is_empty() || assisted.is_empty() {
        return Err(ModelError::Contract(
            "plan needs high difficulty and assisted sessions".into(),
        ));
    }
    if high.iter().any(|&h| h < adjust[0]) {
        return Err(ModelError::Contract(
            "high difficulty must follow difficulty adjustment".into(),
        ));
    }
    if assisted.iter().any(|&a| a < high[0]) {
        return Err(ModelError::Contract(
            "assisted sessions must follow high difficulty".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionOrder {
    HardFirst,
    EasyFirst,
}

impl ConditionOrder {
    pub fn renderings(self) -> [Rendering; 2] {
        match self {
            Self::HardFirst => [Rendering::Hard, Rendering::Easy],
            Self::EasyFirst => [Rendering::Easy, Rendering::Hard],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HardFirst => "hard_first",
            Self::EasyFirst => "easy_first",
        }
    }
}

/// Maps Likert-free model quantities onto 1..7 questionnaire scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuestionnaireModel {
    pub flow_intercept: f64,
    /// Likert units per model unit of strength.
    pub flow_slope: f64,
    /// Likert span covered as JoA goes from 0 to 1.
    pub locus_scale: f64,
    pub change_intercept: f64,
    pub change_slope: f64,
    pub score_noise: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
}

impl Default for QuestionnaireModel {
    fn default() -> Self {
        Self {
            flow_intercept: 2.0,
            flow_slope: 1.0,
            locus_scale: 6.0,
            change_intercept: 1.0,
            change_slope: 2.0,
            score_noise: 0.4,
            clamp_lo: 1.0,
            clamp_hi: 7.0,
        }
    }
}

impl QuestionnaireModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("flow_slope", self.flow_slope),
            ("locus_scale", self.locus_scale),
            ("change_slope", self.change_slope),
            ("score_noise", self.score_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(name, v, "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("flow_intercept", self.flow_intercept),
            ("change_intercept", self.change_intercept),
            ("clamp_lo", self.clamp_lo),
            ("clamp_hi", self.clamp_hi),
        ] {
            if !v.is_finite() {
                return Err(domain(name, v, "must be finite"));
            }
        }
        if self.clamp_hi <= self.clamp_lo {
            return Err(domain("clamp_hi", self.clamp_hi, "must exceed clamp_lo"));
        }
        Ok(())
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.clamp_lo, self.clamp_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub flow_score: f64,
    pub locus_score: f64,
    pub skill_change_score: f64,
    pub challenge_change_score: f64,
}

/// Perceived movement from the beta state to an assisted state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceivedChange {
    pub skill_increase: f64,
    pub challenge_decrease: f64,
}

/// Questionnaire scores for one condition. Always draws four standard
/// normals (flow, locus, skill, challenge) so the stream position does not
/// depend on the noise level.
pub fn synthesize_scores(
    h: f64,
    joa: f64,
    change: PerceivedChange,
    q: &QuestionnaireModel,
    rng: &mut Stream,
) -> ScoreSet {
    let mut noise = || {
        let z: f64 = StandardNormal.sample(rng);
        q.score_noise * z
    };
    let flow = q.flow_intercept + q.flow_slope * h + noise();
    let locus = q.clamp_lo + q.locus_scale * joa + noise();
    let skill = q.change_intercept + q.change_slope * change.skill_increase + noise();
    let challenge = q.change_intercept + q.change_slope * change.challenge_decrease + noise();
    ScoreSet {
        flow_score: q.clamp(flow),
        locus_score: q.clamp(locus),
        skill_change_score: q.clamp(skill),
        challenge_change_score: q.clamp(challenge),
    }
}

/// Softmax over the two renderings' strengths; returns P(hard).
pub fn choice_probability_hard(h_hard: f64, h_easy: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(domain("free_temperature", temperature, "must be > 0"));
    }
    Ok(1.0 / (1.0 + (-(h_hard - h_easy) / temperature).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeChoice {
    pub choice: Rendering,
    pub p_hard: f64,
    pub repeat_count: usize,
}

/// Free session: pick a rendering and decide how many times to play it.
///
/// The play count is `1 + G` with `G ~ Geometric(p_stop)` failures, capped at
/// `max_trials`.
pub fn free_choice(
    h_hard: f64,
    h_easy: f64,
    temperature: f64,
    p_stop: f64,
    max_trials: usize,
    rng: &mut Stream,
) -> Result<FreeChoice> {
    let p_hard = choice_probability_hard(h_hard, h_easy, temperature)?;
    let geo = Geometric::new(p_stop)
        .map_err(|_| domain("free_stop_prob", p_stop, "must lie in (0, 1]"))?;
    let u = rng.next_f64();
    let choice = if u < p_hard {
        Rendering::Hard
    } else {
        Rendering::Easy
    };
    let extra = geo.sample(rng);
    let repeat_count = (extra.saturating_add(1) as usize).min(max_trials.max(1));
    Ok(FreeChoice {
        choice,
        p_hard,
        repeat_count,
    })
}

/// Converts task difficulty into model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChallengeMapping {
    /// `d = h_scale * (w* / w_high - 1)`.
    pub h_scale: f64,
    /// `x = x_ratio * d`.
    pub x_ratio: f64,
}

impl Default for ChallengeMapping {
    fn default() -> Self {
        Self {
            h_scale: 4.0 / 3.0,
            x_ratio: 1.5,
        }
    }
}

impl ChallengeMapping {
    pub fn validate(&self) -> Result<()> {
        positive("h_scale", self.h_scale)?;
        if !(self.x_ratio.is_finite() && self.x_ratio > 1.0) {
            return Err(domain(
                "x_ratio",
                self.x_ratio,
                "must exceed 1 so that x > d",
            ));
        }
        Ok(())
    }

    pub fn params(
        &self,
        w_star: f64,
        w_high: f64,
        perception: PerceptionParams,
    ) -> Result<FulfillmentParams> {
        positive("w_star", w_star)?;
        positive("w_high", w_high)?;
        let d = self.h_scale * (w_star / w_high - 1.0);
        if !(d > 0.0) {
            return Err(domain(
                "d",
                d,
                "high difficulty must be harder than the balanced width",
            ));
        }
        Ok(FulfillmentParams::new(self.x_ratio * d, d, perception))
    }
}

/// Model strength of an assisted condition with estimated JoA.
pub fn model_h_for_condition(
    w_star: f64,
    w_high: f64,
    joa: f64,
    perception: &PerceptionParams,
    mapping: &ChallengeMapping,
) -> Result<f64> {
    let params = mapping.params(w_star, w_high, *perception)?;
    fulfillment(&params, joa)
}

fn perceived_change(params: &FulfillmentParams, joa: f64) -> Result<PerceivedChange> {
    let beta = perceive(beta_state(params.d)?, &params.perception)?;
    let gamma = gamma_point(params, joa)?;
    Ok(PerceivedChange {
        skill_increase: gamma.skill - beta.skill,
        challenge_decrease: beta.challenge - gamma.challenge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSettings {
    pub practice_trials: usize,
    pub adjustment_trials: usize,
    pub high_difficulty_trials: usize,
    pub assisted_trials: usize,
    pub free_max_trials: usize,
    /// Width used for practice and the first adjustment trials (px).
    pub initial_width: f64,
    /// High-difficulty width as a fraction of `w*`.
    pub high_difficulty_ratio: f64,
    /// Assistance bonus as a multiple of the high-difficulty width.
    pub assist_ratio: f64,
    pub target_center: f64,
    pub shot_latency_ms: f64,
    pub travel_speed: f64,
    pub adapter: AdapterSettings,
    pub mapping: ChallengeMapping,
    pub free_temperature: f64,
    pub free_stop_prob: f64,
    /// Relative spread of aim noise across the cohort.
    pub sigma_jitter: f64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            practice_trials: 20,
            adjustment_trials: 60,
            high_difficulty_trials: 40,
            assisted_trials: 40,
            free_max_trials: 40,
            initial_width: 30.0,
            high_difficulty_ratio: 0.25,
            assist_ratio: 3.0,
            target_center: 400.0,
            shot_latency_ms: 250.0,
            travel_speed: 0.4,
            adapter: AdapterSettings::default(),
            mapping: ChallengeMapping::default(),
            free_temperature: 1.0,
            free_stop_prob: 0.1,
            sigma_jitter: 0.2,
        }
    }
}

impl ProtocolSettings {
    pub fn plan(&self) -> Vec<SessionPlan> {
        use SessionKind::*;
        vec![
            SessionPlan {
                kind: Practice,
                trials: self.practice_trials,
            },
            SessionPlan {
                kind: DifficultyAdjustment,
                trials: self.adjustment_trials,
            },
            SessionPlan {
                kind: HighDifficulty,
                trials: self.high_difficulty_trials,
            },
            SessionPlan {
                kind: Assisted,
                trials: self.assisted_trials,
            },
            SessionPlan {
                kind: Assisted,
                trials: self.assisted_trials,
            },
            SessionPlan {
                kind: Free,
                trials: self.free_max_trials,
            },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        validate_plan(&self.plan())?;
        positive("initial_width", self.initial_width)?;
        if !(self.high_difficulty_ratio > 0.0 && self.high_difficulty_ratio < 1.0) {
            return Err(domain(
                "high_difficulty_ratio",
                self.high_difficulty_ratio,
                "must lie in (0, 1)",
            ));
        }
        if !(self.assist_ratio.is_finite() && self.assist_ratio >= 0.0) {
            return Err(domain(
                "assist_ratio",
                self.assist_ratio,
                "must be finite and >= 0",
            ));
        }
        positive("shot_latency_ms", self.shot_latency_ms)?;
        positive("travel_speed", self.travel_speed)?;
        if !self.target_center.is_finite() {
            return Err(domain(
                "target_center",
                self.target_center,
                "must be finite",
            ));
        }
        self.adapter.validate()?;
        self.mapping.validate()?;
        positive("free_temperature", self.free_temperature)?;
        if !(self.free_stop_prob > 0.0 && self.free_stop_prob <= 1.0) {
            return Err(domain(
                "free_stop_prob",
                self.free_stop_prob,
                "must lie in (0, 1]",
            ));
        }
        if !(self.sigma_jitter >= 0.0 && self.sigma_jitter < 1.0) {
            return Err(domain(
                "sigma_jitter",
                self.sigma_jitter,
                "must lie in [0, 1)",
            ));
        }
        Ok(())
    }

    fn task(&self, width: f64, bonus: f64, rendering: Rendering) -> TaskConfig {
        TaskConfig {
            target_center: self.target_center,
            target_width: width,
            assist_bonus: bonus,
            shot_latency_ms: self.shot_latency_ms,
            travel_speed: self.travel_speed,
            rendering,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub id: u64,
    pub agent: AgentModel,
    pub perception: PerceptionParams,
    pub questionnaire: QuestionnaireModel,
    pub condition_order: ConditionOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub kind: SessionKind,
    pub rendering: Rendering,
    /// Visible target width of every trial in the block.
    pub widths: Vec<f64>,
    pub assist_bonus: f64,
    pub trials: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub rendering: Rendering,
    pub joa_estimate: f64,
    pub model_h: f64,
    pub flow_score: f64,
    pub locus_score: f64,
    pub skill_change_score: f64,
    pub challenge_change_score: f64,
    pub hits: usize,
    /// Points earned in the block (one per hit).
    pub task_score: f64,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub participant_id: u64,
    pub condition_order: ConditionOrder,
    pub aim_noise_sigma: f64,
    pub w_star: f64,
    pub w_high: f64,
    pub assist_bonus: f64,
    pub d: f64,
    pub x: f64,
    /// Set when the protocol could not be completed; such records carry no
    /// condition scores.
    pub fault: Option<String>,
    pub sessions: Vec<SessionLog>,
    pub conditions: Vec<ConditionRecord>,
    pub free: Option<FreeChoice>,
}

impl RunRecord {
    pub fn condition(&self, rendering: Rendering) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.rendering == rendering)
    }

    pub fn is_complete(&self) -> bool {
        self.fault.is_none()
            && self.condition(Rendering::Hard).is_some()
            && self.condition(Rendering::Easy).is_some()
    }
}

// Stream labels within a participant.
const S_PRACTICE: u64 = 0;
const S_ADJUST: u64 = 1;
const S_HIGH: u64 = 2;
const S_ASSISTED: u64 = 3; // + block position
const S_QUESTIONNAIRE: u64 = 5; // + block position
const S_FREE: u64 = 7;

/// Runs the whole protocol for one participant.
///
/// Assisted blocks and their questionnaires draw from streams keyed by block
/// position, so swapping the condition order swaps which rendering sees
/// which draws.
pub fn run_participant(
    profile: &ParticipantProfile,
    settings: &ProtocolSettings,
    master_seed: u64,
) -> Result<RunRecord> {
    settings.validate()?;
    profile.agent.validate()?;
    profile.perception.validate()?;
    profile.questionnaire.validate()?;

    let id = profile.id;
    let agent = &profile.agent;
    let stream = |k: u64| Stream::session(master_seed, id, k);
    let mut record = RunRecord {
        schema: RUN_SCHEMA.to_string(),
        participant_id: id,
        condition_order: profile.condition_order,
        aim_noise_sigma: agent.aim_noise_sigma,
        w_star: f64::NAN,
        w_high: f64::NAN,
        assist_bonus: f64::NAN,
        d: f64::NAN,
        x: f64::NAN,
        fault: None,
        sessions: Vec::new(),
        conditions: Vec::new(),
        free: None,
    };

    // Practice: familiarisation only.
    let mut rng = stream(S_PRACTICE);
    let task = settings.task(settings.initial_width, 0.0, Rendering::None);
    let trials = run_block(&task, agent, settings.practice_trials, &mut rng);
    record.sessions.push(SessionLog {
        kind: SessionKind::Practice,
        rendering: Rendering::None,
        widths: vec![settings.initial_width; trials.len()],
        assist_bonus: 0.0,
        trials,
    });

    // Difficulty adjustment: width tracks the spread of aim errors.
    let mut rng = stream(S_ADJUST);
    let mut adapter = DifficultyAdapter::new(settings.adapter, settings.initial_width)?;
    let mut widths = Vec::with_capacity(settings.adjustment_trials);
    let mut trials = Vec::with_capacity(settings.adjustment_trials);
    for _ in 0..settings.adjustment_trials {
        let w = adapter.width();
        let t = run_trial(&settings.task(w, 0.0, Rendering::None), agent, &mut rng);
        adapter.adapt_width(t.aim_error);
        widths.push(w);
        trials.push(t);
    }
    record.sessions.push(SessionLog {
        kind: SessionKind::DifficultyAdjustment,
        rendering: Rendering::None,
        widths,
        assist_bonus: 0.0,
        trials,
    });
    if adapter.is_degenerate() {
        record.fault = Some(format!(
            "difficulty adjustment collapsed to the width floor ({})",
            adapter.width()
        ));
        return Ok(record);
    }
    let w_star = adapter.width();
    let w_high = settings.high_difficulty_ratio * w_star;
    let bonus = settings.assist_ratio * w_high;
    let params = settings
        .mapping
        .params(w_star, w_high, profile.perception)?;
    record.w_star = w_star;
    record.w_high = w_high;
    record.assist_bonus = bonus;
    record.d = params.d;
    record.x = params.x;

    // High difficulty without assistance.
    let mut rng = stream(S_HIGH);
    let task = settings.task(w_high, 0.0, Rendering::None);
    let trials = run_block(&task, agent, settings.high_difficulty_trials, &mut rng);
    record.sessions.push(SessionLog {
        kind: SessionKind::HighDifficulty,
        rendering: Rendering::None,
        widths: vec![w_high; trials.len()],
        assist_bonus: 0.0,
        trials,
    });

    // Assisted blocks in counterbalanced order, each followed by the questionnaire.
    for (pos, rendering) in profile.condition_order.renderings().into_iter().enumerate() {
        let mut rng = stream(S_ASSISTED + pos as u64);
        let task = settings.task(w_high, bonus, rendering);
        let trials = run_block(&task, agent, settings.assisted_trials, &mut rng);
        let joa = match estimate_joa(&trials) {
            Ok(j) => j,
            Err(_) => {
                record.fault = Some(format!("no hits in the {rendering} assisted session"));
                record.sessions.push(SessionLog {
                    kind: SessionKind::Assisted,
                    rendering,
                    widths: vec![w_high; trials.len()],
                    assist_bonus: bonus,
                    trials,
                });
                record.conditions.clear();
                return Ok(record);
            }
        };
        let h = fulfillment(&params, joa)?;
        let change = perceived_change(&params, joa)?;
        let mut qrng = stream(S_QUESTIONNAIRE + pos as u64);
        let scores = synthesize_scores(h, joa, change, &profile.questionnaire, &mut qrng);
        let hits = trials.iter().filter(|t| t.outcome.is_hit()).count();
        record.conditions.push(ConditionRecord {
            rendering,
            joa_estimate: joa,
            model_h: h,
            flow_score: scores.flow_score,
            locus_score: scores.locus_score,
            skill_change_score: scores.skill_change_score,
            challenge_change_score: scores.challenge_change_score,
            hits,
            task_score: hits as f64,
            mean_abs_error: mean_abs_error(&trials),
        });
        record.sessions.push(SessionLog {
            kind: SessionKind::Assisted,
            rendering,
            widths: vec![w_high; trials.len()],
            assist_bonus: bonus,
            trials,
        });
    }

    // Free session.
    let h_of = |r| record.condition(r).map(|c| c.model_h).unwrap_or(0.0);
    let mut rng = stream(S_FREE);
    let choice = free_choice(
        h_of(Rendering::Hard),
        h_of(Rendering::Easy),
        settings.free_temperature,
        settings.free_stop_prob,
        settings.free_max_trials,
        &mut rng,
    )?;
    let task = settings.task(w_high, bonus, choice.choice);
    let trials = run_block(&task, agent, choice.repeat_count, &mut rng);
    record.sessions.push(SessionLog {
        kind: SessionKind::Free,
        rendering: choice.choice,
        widths: vec![w_high; trials.len()],
        assist_bonus: bonus,
        trials,
    });
    record.free = Some(choice);
    Ok(record)
}

/// Shared settings from which a cohort of profiles is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortTemplate {
    pub agent: AgentModel,
    pub perception: PerceptionParams,
    pub questionnaire: QuestionnaireModel,
    pub sigma_jitter: f64,
}

const COHORT_STREAM: u64 = u64::MAX;

/// Profiles with alternating condition order and jittered aim noise
/// `sigma * (1 + jitter * U(-1, 1))`.
pub fn build_cohort(
    template: &CohortTemplate,
    size: usize,
    master_seed: u64,
) -> Vec<ParticipantProfile> {
    let base = Stream::root(master_seed).child(COHORT_STREAM);
    (0..size as u64)
        .map(|id| {
            let u = base.child(id).next_f64() * 2.0 - 1.0;
            let agent = AgentModel {
                aim_noise_sigma: template.agent.aim_noise_sigma * (1.0 + template.sigma_jitter * u),
                ..template.agent
            };
            ParticipantProfile {
                id,
                agent,
                perception: template.perception,
                questionnaire: template.questionnaire,
                condition_order: if id % 2 == 0 {
                    ConditionOrder::HardFirst
                } else {
                    ConditionOrder::EasyFirst
                },
            }
        })
        .collect()
}

/// Runs every participant, in parallel when `threads != Some(1)`.
/// Records come back in participant order regardless of scheduling.
pub fn run_cohort(
    profiles: &[ParticipantProfile],
    settings: &ProtocolSettings,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<RunRecord>> {
    use rayon::prelude::*;
    let work = || -> Result<Vec<RunRecord>> {
        profiles
            .par_iter()
            .map(|p| run_participant(p, settings, master_seed))
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| ModelError::Contract(format!("thread pool: {e}")))?;
    pool.install(work)
}
