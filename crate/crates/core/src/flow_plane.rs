//! The skill-challenge plane.
//!
//! Strength of a psychological state is the distance of the perceived point
//! from the average state. Flow is the diagonal band between two lines
//! through the origin, restricted to points of sufficient strength. The
//! remaining plane is split into the eight 45-degree channels of the
//! eight-channel flow model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, finite, positive, unit_interval, ModelError, Result};
use crate::perception::PerceivedPoint;

/// Slope bounds of the flow band and the minimum strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowBand {
    pub t_low: f64,
    pub t_high: f64,
    pub h_min: f64,
}

impl Default for FlowBand {
    /// The band coinciding with the diagonal octant (22.5 to 67.5 degrees).
    fn default() -> Self {
        Self {
            t_low: 22.5f64.to_radians().tan(),
            t_high: 67.5f64.to_radians().tan(),
            h_min: 1.0,
        }
    }
}

impl FlowBand {
    pub fn new(t_low: f64, t_high: f64, h_min: f64) -> Result<Self> {
        let band = Self {
            t_low,
            t_high,
            h_min,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        positive("t_low", self.t_low)?;
        positive("t_high", self.t_high)?;
        if self.t_high <= self.t_low {
            return Err(domain("t_high", self.t_high, "must exceed t_low"));
        }
        if !(self.h_min.is_finite() && self.h_min >= 0.0) {
            return Err(domain("h_min", self.h_min, "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Octant labels of the eight-channel model, plus `Neutral` for points too
/// close to the average state to carry any state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsychStateLabel {
    Flow,
    Arousal,
    Anxiety,
    Worry,
    Apathy,
    Boredom,
    Relaxation,
    Control,
    Neutral,
}

impl PsychStateLabel {
    /// Counter-clockwise from the wedge starting at 22.5 degrees.
    pub const OCTANTS: [PsychStateLabel; 8] = [
        Self::Flow,
        Self::Arousal,
        Self::Anxiety,
        Self::Worry,
        Self::Apathy,
        Self::Boredom,
        Self::Relaxation,
        Self::Control,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Flow => "Flow",
            Self::Arousal => "Arousal",
            Self::Anxiety => "Anxiety",
            Self::Worry => "Worry",
            Self::Apathy => "Apathy",
            Self::Boredom => "Boredom",
            Self::Relaxation => "Relaxation",
            Self::Control => "Control",
            Self::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for PsychStateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Skill and challenge prediction errors of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrors {
    pub delta_s: f64,
    pub delta_c: f64,
}

impl PredictionErrors {
    pub fn new(delta_s: f64, delta_c: f64) -> Self {
        Self { delta_s, delta_c }
    }
}

/// Pre-assistance challenge error `d`, assistance budget `x` and locus `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionScenario {
    pub d: f64,
    pub x: f64,
    pub locus: f64,
}

impl TransitionScenario {
    pub fn new(d: f64, x: f64, locus: f64) -> Result<Self> {
        positive("d", d)?;
        finite("x", x)?;
        if x <= d {
            return Err(domain(
                "x",
                x,
                "assistance must exceed the beta challenge error d",
            ));
        }
        unit_interval("locus", locus)?;
        Ok(Self { d, x, locus })
    }
}

/// `H = sqrt(S^2 + C^2)`.
pub fn strength(point: PerceivedPoint) -> f64 {
    point.skill.hypot(point.challenge)
}

/// True when the point lies in the flow band and is strong enough.
///
/// Points with `S <= 0` are never in flow: the slope `C/S` is either
/// undefined or on the wrong side of the origin.
pub fn in_flow(point: PerceivedPoint, band: &FlowBand) -> bool {
    let PerceivedPoint { skill, challenge } = point;
    if !(skill > 0.0) || !challenge.is_finite() {
        return false;
    }
    let ratio = challenge / skill;
    band.t_low <= ratio && ratio <= band.t_high && strength(point) >= band.h_min
}

/// Polar angle of the point in degrees, normalised to `[0, 360)`.
pub fn angle_degrees(point: PerceivedPoint) -> f64 {
    let deg = point.challenge.atan2(point.skill).to_degrees();
    let deg = if deg < 0.0 { deg + 360.0 } else { deg };
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}

/// Eight-channel label of a point; wedges are half-open `[lower, upper)`.
pub fn classify(point: PerceivedPoint, band: &FlowBand) -> PsychStateLabel {
    if !(strength(point) >= band.h_min) {
        return PsychStateLabel::Neutral;
    }
    let shifted = (angle_degrees(point) - 22.5).rem_euclid(360.0);
    let idx = ((shifted / 45.0).floor() as usize).min(7);
    PsychStateLabel::OCTANTS[idx]
}

/// Average state: no prediction error in either dimension.
pub fn alpha_state() -> PredictionErrors {
    PredictionErrors::new(0.0, 0.0)
}

/// Unachievable task: actual skill as expected, challenge above it by `d`.
pub fn beta_state(d: f64) -> Result<PredictionErrors> {
    if !(d.is_finite() && d > 0.0) {
        return Err(domain("d", d, "beta challenge error must be > 0"));
    }
    Ok(PredictionErrors::new(0.0, d))
}

/// State after assistance that raised skill error by `x_s` and lowered
/// challenge error by `x_c`.
pub fn gamma_state(scenario: &TransitionScenario, x_s: f64, x_c: f64) -> Result<PredictionErrors> {
    let total = x_s + x_c;
    if !((total - scenario.x).abs() <= 1e-12 * scenario.x.abs().max(1.0)) {
        return Err(ModelError::Contract(format!(
            "split ({x_s}, {x_c}) sums to {total}, expected x = {}",
            scenario.x
        )));
    }
    let beta = beta_state(scenario.d)?;
    Ok(PredictionErrors::new(
        beta.delta_s + x_s,
        beta.delta_c - x_c,
    ))
}
