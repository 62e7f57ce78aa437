//! Attribution of assistance and the sense of fulfillment.
//!
//! Assistance changes the total prediction error by `x`. The locus of
//! causality `L` (identified with the judgement of agency) decides how much
//! of it is read as increased skill (`x*L`) and how much as decreased
//! challenge (`x*(1-L)`). The strength of the resulting state is a square
//! root of a quadratic in `L`, computed here both in closed form and by
//! composing the individual steps.

use serde::{Deserialize, Serialize};

use crate::error::{domain, finite, positive, unit_interval, Result};
use crate::flow_plane::{
    alpha_state, beta_state, classify, gamma_state, in_flow, strength, FlowBand, PredictionErrors,
    PsychStateLabel, TransitionScenario,
};
use crate::perception::{perceive, PerceivedPoint, PerceptionParams};

/// Feeling and judgement of agency, both on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agency {
    pub foa: f64,
    pub joa: f64,
}

impl Agency {
    pub const DEFAULT_FOA: f64 = 0.5;

    pub fn new(foa: f64, joa: f64) -> Result<Self> {
        Ok(Self {
            foa: unit_interval("foa", foa)?,
            joa: unit_interval("joa", joa)?,
        })
    }

    /// Agency with only the judgement known.
    pub fn from_joa(joa: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_FOA, joa)
    }

    /// The locus of causality equals the judgement of agency.
    pub fn locus(&self) -> f64 {
        self.joa
    }
}

/// Sense of agency as the sum of its two components.
pub fn soa(agency: &Agency) -> f64 {
    agency.foa + agency.joa
}

/// Splits the assistance budget into skill and challenge changes.
pub fn split_assistance(x: f64, locus: f64) -> Result<(f64, f64)> {
    unit_interval("locus", locus)?;
    finite("x", x)?;
    Ok((x * locus, x * (1.0 - locus)))
}

/// Inputs of the fulfillment function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FulfillmentParams {
    /// Total prediction-error change produced by the assistance.
    pub x: f64,
    /// Challenge prediction error of the pre-assistance state.
    pub d: f64,
    pub perception: PerceptionParams,
}

impl Default for FulfillmentParams {
    fn default() -> Self {
        Self {
            x: 6.0,
            d: 4.0,
            perception: PerceptionParams::default(),
        }
    }
}

impl FulfillmentParams {
    pub fn new(x: f64, d: f64, perception: PerceptionParams) -> Self {
        Self { x, d, perception }
    }

    /// Checks the algebraic preconditions; `x` may be any finite value.
    pub fn validate(&self) -> Result<()> {
        finite("x", self.x)?;
        positive("d", self.d)?;
        self.perception.validate()
    }

    /// Additionally requires `x > d`, i.e. the assisted task is achievable.
    pub fn validate_scenario(&self) -> Result<()> {
        self.validate()?;
        if self.x <= self.d {
            return Err(domain(
                "x",
                self.x,
                "assistance must exceed the beta challenge error d",
            ));
        }
        Ok(())
    }

    pub fn scenario(&self, joa: f64) -> Result<TransitionScenario> {
        TransitionScenario::new(self.d, self.x, joa)
    }
}

/// Coefficients of the quadratic radicand `a1*L^2 + a2*L + a3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Coefficients {
    pub fn radicand(&self, joa: f64) -> f64 {
        (self.a1 * joa + self.a2) * joa + self.a3
    }
}

pub fn coefficients(params: &FulfillmentParams) -> Result<Coefficients> {
    params.validate()?;
    let k_s = params.perception.skill_gain()?;
    let k_c = params.perception.challenge_gain()?;
    let x = params.x;
    let gap = params.d - x;
    Ok(Coefficients {
        a1: x * x * (k_s * k_s + k_c * k_c),
        a2: 2.0 * x * k_c * k_c * gap,
        a3: k_c * k_c * gap * gap,
    })
}

/// Closed-form strength of the assisted state as a function of JoA.
pub fn fulfillment(params: &FulfillmentParams, joa: f64) -> Result<f64> {
    unit_interval("joa", joa)?;
    let c = coefficients(params)?;
    // Rounding can push a zero radicand slightly negative.
    Ok(c.radicand(joa).max(0.0).sqrt())
}

/// Same quantity as [`fulfillment`], obtained by splitting the assistance,
/// forming the assisted prediction errors, perceiving them and measuring the
/// distance from the origin.
pub fn fulfillment_compositional(params: &FulfillmentParams, joa: f64) -> Result<f64> {
    Ok(strength(gamma_point(params, joa)?))
}

/// Perceived assisted-state point for a given JoA.
///
/// Does not require `x > d`, so the algebra can be checked at boundary cases.
pub fn gamma_point(params: &FulfillmentParams, joa: f64) -> Result<PerceivedPoint> {
    params.validate()?;
    let locus = Agency::from_joa(joa)?.locus();
    let (x_s, x_c) = split_assistance(params.x, locus)?;
    let beta = beta_state(params.d)?;
    let errors = PredictionErrors::new(beta.delta_s + x_s, beta.delta_c - x_c);
    perceive(errors, &params.perception)
}

/// Scenario-checked variant of [`gamma_point`] going through
/// [`gamma_state`]; fails when `x <= d`.
pub fn gamma_point_checked(params: &FulfillmentParams, joa: f64) -> Result<PerceivedPoint> {
    let scenario = params.scenario(joa)?;
    let (x_s, x_c) = split_assistance(scenario.x, scenario.locus)?;
    perceive(gamma_state(&scenario, x_s, x_c)?, &params.perception)
}

/// Location of the minimum of `H` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub joa: f64,
    /// Set when `a1 == 0` and the radicand is not a proper quadratic.
    pub degenerate: bool,
}

/// `H` is nonincreasing on `[0, joa]` and nondecreasing on `[joa, 1]`.
pub fn monotonicity_vertex(coeffs: &Coefficients) -> Vertex {
    if !(coeffs.a1 > 0.0) {
        return Vertex {
            joa: 0.0,
            degenerate: true,
        };
    }
    Vertex {
        joa: (-coeffs.a2 / (2.0 * coeffs.a1)).clamp(0.0, 1.0),
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Alpha,
    Beta,
    Gamma,
}

impl StateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Beta => "beta",
            Self::Gamma => "gamma",
        }
    }
}

/// One state plotted on the skill-challenge plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub state: StateKind,
    pub joa: Option<f64>,
    pub point: PerceivedPoint,
    pub strength: f64,
    pub in_flow: bool,
    pub octant: PsychStateLabel,
}

impl LabeledPoint {
    fn new(state: StateKind, joa: Option<f64>, point: PerceivedPoint, band: &FlowBand) -> Self {
        Self {
            state,
            joa,
            point,
            strength: strength(point),
            in_flow: in_flow(point, band),
            octant: classify(point, band),
        }
    }
}

/// The alpha and beta states followed by one assisted state per JoA.
pub fn simulate_figure5(
    params: &FulfillmentParams,
    joa_list: &[f64],
    band: &FlowBand,
) -> Result<Vec<LabeledPoint>> {
    params.validate()?;
    band.validate()?;
    let mut out = Vec::with_capacity(joa_list.len() + 2);
    let alpha = perceive(alpha_state(), &params.perception)?;
    out.push(LabeledPoint::new(StateKind::Alpha, None, alpha, band));
    let beta = perceive(beta_state(params.d)?, &params.perception)?;
    out.push(LabeledPoint::new(StateKind::Beta, None, beta, band));
    for &joa in joa_list {
        let gamma = gamma_point(params, joa)?;
        out.push(LabeledPoint::new(StateKind::Gamma, Some(joa), gamma, band));
    }
    Ok(out)
}
