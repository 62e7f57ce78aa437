//! Choosing an assistance design from the fulfillment model.
//!
//! Searches JoA and assistance amount for the strongest assisted state that
//! still lies in the flow band. A full grid is evaluated first; the best cell
//! is then refined one coordinate at a time by golden-section search inside
//! the neighbouring grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{domain, unit_interval, ModelError, Result};
use crate::flow_plane::{in_flow, strength, FlowBand};
use crate::fulfillment::{gamma_point, FulfillmentParams};

/// Closed interval `[lo, hi]`; `lo == hi` pins the coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn check(&self, name: &'static str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(domain(name, f64::NAN, "range bounds must be finite"));
        }
        if self.lo > self.hi {
            return Err(domain(name, self.lo, "empty range (lo > hi)"));
        }
        Ok(())
    }

    /// `n` evenly spaced points including both ends; one point when pinned.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        if self.lo == self.hi || n < 2 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub joa_steps: usize,
    pub x_steps: usize,
    /// Bracket width at which golden-section refinement stops.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            joa_steps: 201,
            x_steps: 201,
            tolerance: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub joa: f64,
    pub x: f64,
    pub h: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub joa: f64,
    pub x: f64,
    pub h: f64,
    /// False when no candidate lies in the flow band; the other fields then
    /// hold the unconstrained maximum.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub optimum: Optimum,
    pub grid: Vec<GridCell>,
}

/// Maximises `f` on `[a, b]` by golden-section search.
///
/// The endpoints are evaluated as well, and the best of the endpoints and the
/// converged interior point is returned as `(argmax, max)`.
pub fn golden_section_max<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while hi - lo > tol && iter < max_iter {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        iter += 1;
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid));
    for cand in [(c, fc), (d, fd), (a, f(a)), (b, f(b))] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

struct Objective<'a> {
    template: &'a FulfillmentParams,
    band: &'a FlowBand,
}

impl Objective<'_> {
    fn eval(&self, joa: f64, x: f64) -> Result<(f64, bool)> {
        let params = FulfillmentParams {
            x,
            ..*self.template
        };
        let p = gamma_point(&params, joa)?;
        Ok((strength(p), in_flow(p, self.band)))
    }

    /// Strength if admissible, otherwise negative infinity.
    fn penalized(&self, joa: f64, x: f64, constrained: bool) -> f64 {
        match self.eval(joa, x) {
            Ok((h, ok)) if ok || !constrained => h,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Maximises fulfillment over `joa_range x x_range` subject to the assisted
/// state being in flow.
///
/// Grid ties go to the smallest `x`, then the largest JoA.
pub fn optimize_assistance(
    template: &FulfillmentParams,
    joa_range: Interval,
    x_range: Interval,
    band: &FlowBand,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    template.validate()?;
    band.validate()?;
    joa_range.check("joa_range")?;
    x_range.check("x_range")?;
    unit_interval("joa_range", joa_range.lo)?;
    unit_interval("joa_range", joa_range.hi)?;
    if x_range.lo <= template.d {
        return Err(domain(
            "x_range",
            x_range.lo,
            "x must exceed the beta challenge error d",
        ));
    }
    if settings.joa_steps == 0 || settings.x_steps == 0 {
        return Err(ModelError::Contract(
            "grid resolution must be positive".into(),
        ));
    }

    let objective = Objective { template, band };
    let xs = x_range.linspace(settings.x_steps);
    let mut joas = joa_range.linspace(settings.joa_steps);
    joas.reverse();

    let mut grid = Vec::with_capacity(xs.len() * joas.len());
    let mut best_feasible: Option<usize> = None;
    let mut best_any: Option<usize> = None;
    for &x in &xs {
        for &joa in &joas {
            let (h, feasible) = objective.eval(joa, x)?;
            let idx = grid.len();
            grid.push(GridCell {
                joa,
                x,
                h,
                feasible,
            });
            if best_any.is_none_or(|b| h > grid[b].h) {
                best_any = Some(idx);
            }
            if feasible && best_feasible.is_none_or(|b| h > grid[b].h) {
                best_feasible = Some(idx);
            }
        }
    }

    let constrained = best_feasible.is_some();
    let start = grid[best_feasible.or(best_any).expect("grid is non-empty")];
    let mut opt = Optimum {
        joa: start.joa,
        x: start.x,
        h: start.h,
        feasible: constrained,
    };

    let joa_step = step_of(&joa_range, settings.joa_steps);
    let x_step = step_of(&x_range, settings.x_steps);
    if joa_step > 0.0 {
        let (a, b) = (
            (opt.joa - joa_step).max(joa_range.lo),
            (opt.joa + joa_step).min(joa_range.hi),
        );
        let x = opt.x;
        let (j, h) = golden_section_max(
            |j| objective.penalized(j, x, constrained),
            a,
            b,
            settings.tolerance,
            settings.max_iter,
        );
        if h > opt.h {
            opt.joa = j;
            opt.h = h;
        }
    }
    if x_step > 0.0 {
        let (a, b) = (
            (opt.x - x_step).max(x_range.lo),
            (opt.x + x_step).min(x_range.hi),
        );
        let joa = opt.joa;
        let (x, h) = golden_section_max(
            |x| objective.penalized(joa, x, constrained),
            a,
            b,
            settings.tolerance,
            settings.max_iter,
        );
        if h > opt.h {
            opt.x = x;
            opt.h = h;
        }
    }

    Ok(OptimizationResult { optimum: opt, grid })
}

fn step_of(range: &Interval, n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        (range.hi - range.lo) / (n - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fulfillment::fulfillment;

    fn fixed_x(x: f64) -> (FulfillmentParams, OptimizationResult) {
        let p = FulfillmentParams {
            x,
            ..Default::default()
        };
        let r = optimize_assistance(
            &p,
            Interval::new(0.0, 1.0),
            Interval::point(x),
            &FlowBand::default(),
            &OptimizerSettings::default(),
        )
        .unwrap();
        (p, r)
    }

    #[test]
    fn golden_section_finds_interior_max() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12, 200);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx.abs() < 1e-12);
    }

    #[test]
    fn golden_section_checks_endpoints() {
        let (x, _) = golden_section_max(|x| (x - 0.2).abs(), 0.0, 1.0, 1e-12, 200);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let v = Interval::new(0.0, 1.0).linspace(201);
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[200], 1.0);
        assert_eq!(Interval::point(6.0).linspace(201), vec![6.0]);
    }

    #[test]
    fn default_fixed_assistance() {
        let (_, r) = fixed_x(6.0);
        assert!(r.optimum.feasible);
        assert_eq!(r.optimum.joa, 1.0);
        assert!((r.optimum.h - 13f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.grid.len(), 201);
    }

    #[test]
    fn assistance_just_above_d() {
        let (p, r) = fixed_x(4.001);
        assert_eq!(r.optimum.joa, 1.0);
        assert!((r.optimum.h - fulfillment(&p, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_band_reports_unconstrained_max() {
        let band = FlowBand::new(10.0, 20.0, 1.0).unwrap();
        let p = FulfillmentParams::default();
        let r = optimize_assistance(
            &p,
            Interval::new(0.0, 1.0),
            Interval::point(6.0),
            &band,
            &OptimizerSettings::default(),
        )
        .unwrap();
        assert!(!r.optimum.feasible);
        assert!(r.grid.iter().all(|c| !c.feasible));
        assert!((r.optimum.h - 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_search_respects_band() {
        let p = FulfillmentParams::default();
        let band = FlowBand::default();
        let r = optimize_assistance(
            &p,
            Interval::new(0.0, 1.0),
            Interval::new(4.5, 12.0),
            &band,
            &OptimizerSettings {
                joa_steps: 51,
                x_steps: 51,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.optimum.feasible);
        let at = gamma_point(
            &FulfillmentParams {
                x: r.optimum.x,
                ..p
            },
            r.optimum.joa,
        )
        .unwrap();
        assert!(in_flow(at, &band));
        let grid_best = r
            .grid
            .iter()
            .filter(|c| c.feasible)
            .map(|c| c.h)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(r.optimum.h >= grid_best);
    }

    #[test]
    fn tie_break_prefers_large_joa() {
        // H(0) = H(1/3) = 1 exactly for the default parameters.
        let p = FulfillmentParams::default();
        let band = FlowBand::new(10.0, 20.0, 0.0).unwrap();
        let r = optimize_assistance(
            &p,
            Interval::new(0.0, 1.0 / 3.0),
            Interval::point(6.0),
            &band,
            &OptimizerSettings {
                joa_steps: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.grid[0].h, r.grid[1].h);
        assert_eq!(r.optimum.joa, 1.0 / 3.0);
        assert_eq!(r.optimum.h, 1.0);
    }

    #[test]
    fn range_validation() {
        let p = FulfillmentParams::default();
        let band = FlowBand::default();
        let s = OptimizerSettings::default();
        let run = |j: Interval, x: Interval| optimize_assistance(&p, j, x, &band, &s);
        assert!(run(Interval::new(0.6, 0.4), Interval::point(6.0)).is_err());
        assert!(run(Interval::new(0.0, 1.2), Interval::point(6.0)).is_err());
        assert!(run(Interval::new(0.0, 1.0), Interval::new(7.0, 6.0)).is_err());
        assert!(run(Interval::new(0.0, 1.0), Interval::point(4.0)).is_err());
    }
}
