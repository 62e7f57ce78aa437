//! Bayesian perception of skill and challenge.
//!
//! The perceived value is the mean of a Gaussian posterior built from a
//! prior expectation (the individual's average state) and the evidence
//! provided by actual performance. Both dimensions use a prior mean of 0,
//! so a prediction error maps to a perceived offset from the average state.

use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Result};
use crate::flow_plane::PredictionErrors;

/// Which variance multiplies which mean in the posterior.
///
/// `VarianceWeighted` weights the prior mean by the prior variance and the evidence by
/// its own noise variance: `(mu*nu + eps*n) / (nu + n)`. `Kalman` uses the
/// usual precision weighting `(mu*n + eps*nu) / (nu + n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    #[default]
    VarianceWeighted,
    Kalman,
}

/// Prior expectation with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: f64,
    pub variance: f64,
}

/// Likelihood of the actual outcome with its noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianBelief {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        Ok(Self {
            mean: finite("prior.mean", mean)?,
            variance: positive("prior.variance", variance)?,
        })
    }
}

impl Evidence {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        Ok(Self {
            mean: finite("evidence.mean", mean)?,
            variance: positive("evidence.variance", variance)?,
        })
    }
}

/// Prior uncertainties and evidence noise for both dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerceptionParams {
    pub skill_prior_var: f64,
    pub skill_noise: f64,
    pub challenge_prior_var: f64,
    pub challenge_noise: f64,
    pub gain_convention: GainConvention,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self {
            skill_prior_var: 1.0,
            skill_noise: 1.0,
            challenge_prior_var: 1.0,
            challenge_noise: 1.0,
            gain_convention: GainConvention::VarianceWeighted,
        }
    }
}

impl PerceptionParams {
    pub fn uniform(variance: f64) -> Self {
        Self {
            skill_prior_var: variance,
            skill_noise: variance,
            challenge_prior_var: variance,
            challenge_noise: variance,
            gain_convention: GainConvention::VarianceWeighted,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("skill_prior_var", self.skill_prior_var)?;
        positive("skill_noise", self.skill_noise)?;
        positive("challenge_prior_var", self.challenge_prior_var)?;
        positive("challenge_noise", self.challenge_noise)?;
        Ok(())
    }

    /// Fraction of a skill prediction error that reaches perception.
    pub fn skill_gain(&self) -> Result<f64> {
        gain(self.skill_prior_var, self.skill_noise, self.gain_convention)
    }

    /// Fraction of a challenge prediction error that reaches perception.
    pub fn challenge_gain(&self) -> Result<f64> {
        gain(
            self.challenge_prior_var,
            self.challenge_noise,
            self.gain_convention,
        )
    }
}

/// Perceived skill `S` and challenge `C` relative to the average state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceivedPoint {
    pub skill: f64,
    pub challenge: f64,
}

impl PerceivedPoint {
    pub const ORIGIN: Self = Self {
        skill: 0.0,
        challenge: 0.0,
    };

    pub fn new(skill: f64, challenge: f64) -> Self {
        Self { skill, challenge }
    }
}

fn gain(prior_var: f64, noise: f64, convention: GainConvention) -> Result<f64> {
    let nu = positive("prior variance", prior_var)?;
    let n = positive("noise variance", noise)?;
    Ok(match convention {
        GainConvention::VarianceWeighted => n / (nu + n),
        GainConvention::Kalman => nu / (nu + n),
    })
}

/// Posterior mean with the default variance weighting.
pub fn posterior_mean(prior: GaussianBelief, evidence: Evidence) -> Result<f64> {
    posterior_mean_with(prior, evidence, GainConvention::VarianceWeighted)
}

pub fn posterior_mean_with(
    prior: GaussianBelief,
    evidence: Evidence,
    convention: GainConvention,
) -> Result<f64> {
    finite("prior.mean", prior.mean)?;
    finite("evidence.mean", evidence.mean)?;
    let nu = positive("prior.variance", prior.variance)?;
    let n = positive("evidence.variance", evidence.variance)?;
    let (w_prior, w_evidence) = match convention {
        GainConvention::VarianceWeighted => (nu, n),
        GainConvention::Kalman => (n, nu),
    };
    Ok((prior.mean * w_prior + evidence.mean * w_evidence) / (nu + n))
}

/// `S = N_s * delta_s / (nu_s + N_s)`.
pub fn perceived_skill(delta_s: f64, nu_s: f64, noise_s: f64) -> Result<f64> {
    let nu = positive("skill_prior_var", nu_s)?;
    let n = positive("skill_noise", noise_s)?;
    Ok(n * finite("delta_s", delta_s)? / (nu + n))
}

/// `C = N_c * delta_c / (nu_c + N_c)`.
pub fn perceived_challenge(delta_c: f64, nu_c: f64, noise_c: f64) -> Result<f64> {
    let nu = positive("challenge_prior_var", nu_c)?;
    let n = positive("challenge_noise", noise_c)?;
    Ok(n * finite("delta_c", delta_c)? / (nu + n))
}

/// Maps a pair of prediction errors onto the skill-challenge plane.
///
/// Under [`GainConvention::Kalman`] the roles of prior variance and noise are
/// exchanged before applying the same formulas.
pub fn perceive(errors: PredictionErrors, params: &PerceptionParams) -> Result<PerceivedPoint> {
    let p = params;
    let (skill, challenge) = match p.gain_convention {
        GainConvention::VarianceWeighted => (
            perceived_skill(errors.delta_s, p.skill_prior_var, p.skill_noise)?,
            perceived_challenge(errors.delta_c, p.challenge_prior_var, p.challenge_noise)?,
        ),
        GainConvention::Kalman => (
            perceived_skill(errors.delta_s, p.skill_noise, p.skill_prior_var)?,
            perceived_challenge(errors.delta_c, p.challenge_noise, p.challenge_prior_var)?,
        ),
    };
    Ok(PerceivedPoint { skill, challenge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ModelError;
    use proptest::prelude::*;

    fn pm(mu: f64, nu: f64, eps: f64, n: f64) -> f64 {
        posterior_mean(
            GaussianBelief::new(mu, nu).unwrap(),
            Evidence::new(eps, n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn posterior_mean_examples() {
        assert_eq!(pm(5.0, 3.0, 5.0, 7.0), 5.0);
        assert_eq!(pm(0.0, 1.0, 2.0, 1.0), 1.0);
        // (0*2 + 3*1) / 3
        assert_eq!(pm(0.0, 2.0, 3.0, 1.0), 1.0);
    }

    #[test]
    fn kalman_swaps_weights() {
        let prior = GaussianBelief::new(0.0, 2.0).unwrap();
        let ev = Evidence::new(3.0, 1.0).unwrap();
        let k = posterior_mean_with(prior, ev, GainConvention::Kalman).unwrap();
        assert!((k - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_variances() {
        let bad = GaussianBelief {
            mean: 0.0,
            variance: 0.0,
        };
        let ev = Evidence::new(1.0, 1.0).unwrap();
        assert!(matches!(
            posterior_mean(bad, ev),
            Err(ModelError::Domain { .. })
        ));
        assert!(GaussianBelief::new(0.0, f64::NAN).is_err());
        assert!(Evidence::new(0.0, -1.0).is_err());
        assert!(perceived_skill(1.0, -1.0, 1.0).is_err());
        assert!(perceived_challenge(1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn perceived_examples() {
        assert_eq!(perceived_skill(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_eq!(perceived_skill(4.0, 1.0, 1.0).unwrap(), 2.0);
        assert!((perceived_skill(6.0 * 0.9, 1.0, 1.0).unwrap() - 2.7).abs() < 1e-12);
        assert_eq!(perceived_challenge(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(perceived_challenge(4.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(perceived_challenge(-2.0, 1.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn perceive_examples() {
        let unit = PerceptionParams::default();
        let p = perceive(PredictionErrors::new(0.0, 0.0), &unit).unwrap();
        assert_eq!(p, PerceivedPoint::ORIGIN);
        let p = perceive(PredictionErrors::new(0.0, 4.0), &unit).unwrap();
        assert_eq!(p, PerceivedPoint::new(0.0, 2.0));
        let p = perceive(PredictionErrors::new(5.4, 3.4), &unit).unwrap();
        assert!((p.skill - 2.7).abs() < 1e-12 && (p.challenge - 1.7).abs() < 1e-12);
    }

    #[test]
    fn large_prior_variance_suppresses_perception() {
        let s = perceived_skill(5.0, 1e12, 1.0).unwrap();
        assert!(s.abs() < 1e-10);
        // Under the printed weighting a noisy likelihood passes the error through.
        let s = perceived_skill(5.0, 1.0, 1e12).unwrap();
        assert!((s - 5.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn posterior_is_convex_combination(
            mu in -100.0f64..100.0, eps in -100.0f64..100.0,
            nu in 1e-3f64..1e3, n in 1e-3f64..1e3,
        ) {
            let eta = pm(mu, nu, eps, n);
            let tol = 1e-12 * (mu.abs().max(eps.abs()) + 1.0);
            prop_assert!(eta >= mu.min(eps) - tol && eta <= mu.max(eps) + tol);
        }

        #[test]
        fn skill_is_posterior_at_zero_prior(
            delta in -50.0f64..50.0, nu in 1e-3f64..1e3, n in 1e-3f64..1e3,
        ) {
            let s = perceived_skill(delta, nu, n).unwrap();
            prop_assert_eq!(s, pm(0.0, nu, delta, n));
            prop_assert!(s.abs() <= delta.abs());
            prop_assert!(s == 0.0 || s.signum() == delta.signum());
        }
    }
}
