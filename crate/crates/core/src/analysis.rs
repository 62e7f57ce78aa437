//! Condition classification and t-tests over cohort results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::game::Rendering;
use crate::protocol::{ConditionRecord, RunRecord};
use crate::special::student_t_two_sided;
use crate::stats::{mean, sample_variance};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Scores in two conditions, aligned by participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    labels: Vec<u64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(labels: Vec<u64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || labels.len() != a.len() {
            return Err(ModelError::Data(format!(
                "misaligned sample: {} labels, {} and {} scores",
                labels.len(),
                a.len(),
                b.len()
            )));
        }
        if a.len() < 2 {
            return Err(ModelError::Data(format!(
                "paired test needs n >= 2, got {}",
                a.len()
            )));
        }
        Ok(Self { labels, a, b })
    }

    /// Unlabelled pairs, numbered from zero.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            (0..pairs.len() as u64).collect(),
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// The same pairs with the conditions exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub mean_diff: f64,
    /// The standard error was zero, so `t` is 0 or infinite.
    pub degenerate: bool,
}

fn degenerate_result(mean_diff: f64, df: f64) -> TestResult {
    let (t, p) = if mean_diff == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(mean_diff), 0.0)
    };
    TestResult {
        t,
        df,
        p_two_sided: p,
        mean_diff,
        degenerate: true,
    }
}

/// Paired t-test on `a - b`.
pub fn paired_t_test(sample: &PairedSample) -> Result<TestResult> {
    let diffs: Vec<f64> = sample.a.iter().zip(&sample.b).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let df = n - 1.0;
    let mean_diff = mean(&diffs).ok_or_else(|| ModelError::Data("empty sample".into()))?;
    let var = sample_variance(&diffs)
        .ok_or_else(|| ModelError::Data("paired test needs n >= 2".into()))?;
    if var == 0.0 {
        return Ok(degenerate_result(mean_diff, df));
    }
    let t = mean_diff / (var / n).sqrt();
    Ok(TestResult {
        t,
        df,
        p_two_sided: student_t_two_sided(t, df),
        mean_diff,
        degenerate: false,
    })
}

/// Unequal-variance two-sample t-test with Welch–Satterthwaite df.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let stats = |xs: &[f64], name: &str| -> Result<(f64, f64, f64)> {
        match (mean(xs), sample_variance(xs)) {
            (Some(m), Some(v)) => Ok((m, v, xs.len() as f64)),
            _ => Err(ModelError::Data(format!(
                "group {name} needs n >= 2, got {}",
                xs.len()
            ))),
        }
    };
    let (ma, va, na) = stats(a, "a")?;
    let (mb, vb, nb) = stats(b, "b")?;
    let mean_diff = ma - mb;
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(degenerate_result(mean_diff, na + nb - 2.0));
    }
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let t = mean_diff / se2.sqrt();
    Ok(TestResult {
        t,
        df,
        p_two_sided: student_t_two_sided(t, df),
        mean_diff,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConditionSplit {
    Split {
        internal: Rendering,
        external: Rendering,
    },
    Tie,
}

/// The condition with the strictly higher locus score is the internal one.
pub fn classify_conditions(record: &RunRecord) -> Result<ConditionSplit> {
    let get = |r: Rendering| {
        record.condition(r).ok_or_else(|| {
            ModelError::Data(format!(
                "participant {} has no {r} condition",
                record.participant_id
            ))
        })
    };
    let hard = get(Rendering::Hard)?;
    let easy = get(Rendering::Easy)?;
    Ok(if hard.locus_score > easy.locus_score {
        ConditionSplit::Split {
            internal: Rendering::Hard,
            external: Rendering::Easy,
        }
    } else if easy.locus_score > hard.locus_score {
        ConditionSplit::Split {
            internal: Rendering::Easy,
            external: Rendering::Hard,
        }
    } else {
        ConditionSplit::Tie
    })
}

/// A per-condition quantity compared across participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    FlowScore,
    LocusScore,
    SkillChangeScore,
    ChallengeChangeScore,
    TaskScore,
    MeanAbsAimError,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Self::FlowScore,
        Self::LocusScore,
        Self::SkillChangeScore,
        Self::ChallengeChangeScore,
        Self::TaskScore,
        Self::MeanAbsAimError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FlowScore => "flow_score",
            Self::LocusScore => "locus_score",
            Self::SkillChangeScore => "skill_change_score",
            Self::ChallengeChangeScore => "challenge_change_score",
            Self::TaskScore => "task_score",
            Self::MeanAbsAimError => "mean_abs_aim_error",
        }
    }

    pub fn of(self, c: &ConditionRecord) -> f64 {
        match self {
            Self::FlowScore => c.flow_score,
            Self::LocusScore => c.locus_score,
            Self::SkillChangeScore => c.skill_change_score,
            Self::ChallengeChangeScore => c.challenge_change_score,
            Self::TaskScore => c.task_score,
            Self::MeanAbsAimError => c.mean_abs_error,
        }
    }

    /// Checks of the player's actual skill rather than their experience.
    pub fn is_actual_skill(self) -> bool {
        matches!(self, Self::TaskScore | Self::MeanAbsAimError)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub measure: Measure,
    pub group_a: &'static str,
    pub group_b: &'static str,
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: TestResult,
    pub significant: bool,
}

impl Comparison {
    fn new(
        measure: Measure,
        groups: (&'static str, &'static str),
        sample: &PairedSample,
        alpha: f64,
    ) -> Result<Self> {
        let test = paired_t_test(sample)?;
        Ok(Self {
            measure,
            group_a: groups.0,
            group_b: groups.1,
            n: sample.len(),
            mean_a: mean(sample.a()).unwrap_or(f64::NAN),
            mean_b: mean(sample.b()).unwrap_or(f64::NAN),
            significant: test.p_two_sided < alpha,
            test,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub alpha: f64,
    pub participants: usize,
    pub faulted: usize,
    pub ties: usize,
    /// Participants entering the internal/external comparisons.
    pub classified: usize,
    /// Classified participants whose internal condition was the hard rendering.
    pub internal_is_hard: usize,
    pub internal_vs_external: Vec<Comparison>,
    /// Flow under the hard vs easy rendering, over all complete participants.
    pub hard_vs_easy_flow: Comparison,
}

impl CohortReport {
    pub fn comparison(&self, measure: Measure) -> Option<&Comparison> {
        self.internal_vs_external
            .iter()
            .find(|c| c.measure == measure)
    }

    fn rows(&self) -> impl Iterator<Item = &Comparison> {
        self.internal_vs_external
            .iter()
            .chain(std::iter::once(&self.hard_vs_easy_flow))
    }

    /// Aligned-column text for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "participants {}  faulted {}  ties {}  classified {}  internal=hard {}  alpha {}",
            self.participants,
            self.faulted,
            self.ties,
            self.classified,
            self.internal_is_hard,
            self.alpha
        );
        let _ = writeln!(
            out,
            "{:<24} {:<9} {:<9} {:>3} {:>9} {:>9} {:>9} {:>9} {:>6} {:>9} sig",
            "measure", "a", "b", "n", "mean_a", "mean_b", "diff", "t", "df", "p"
        );
        for c in self.rows() {
            let _ = writeln!(
                out,
                "{:<24} {:<9} {:<9} {:>3} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>6.1} {:>9.4} {}",
                c.measure.as_str(),
                c.group_a,
                c.group_b,
                c.n,
                c.mean_a,
                c.mean_b,
                c.test.mean_diff,
                c.test.t,
                c.test.df,
                c.test.p_two_sided,
                if c.significant { "*" } else { "" }
            );
        }
        out
    }

    /// One CSV row per comparison.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ModelError::Data(format!("csv: {e}"));
        w.write_record([
            "measure",
            "group_a",
            "group_b",
            "n",
            "mean_a",
            "mean_b",
            "mean_diff",
            "t",
            "df",
            "p",
            "significant",
            "degenerate",
        ])
        .map_err(io)?;
        for c in self.rows() {
            w.write_record([
                c.measure.as_str().to_string(),
                c.group_a.to_string(),
                c.group_b.to_string(),
                c.n.to_string(),
                c.mean_a.to_string(),
                c.mean_b.to_string(),
                c.test.mean_diff.to_string(),
                c.test.t.to_string(),
                c.test.df.to_string(),
                c.test.p_two_sided.to_string(),
                c.significant.to_string(),
                c.test.degenerate.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ModelError::Data(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| ModelError::Data(e.to_string()))
    }
}

/// Internal vs external comparisons over a cohort.
///
/// Faulted participants are dropped entirely; ties are dropped from the
/// internal/external comparisons but kept for hard vs easy.
pub fn cohort_report(records: &[RunRecord], alpha: f64) -> Result<CohortReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(crate::error::domain("alpha", alpha, "must lie in (0, 1)"));
    }
    let complete: Vec<&RunRecord> = records.iter().filter(|r| r.is_complete()).collect();
    let mut split = Vec::new();
    let mut ties = 0;
    for r in &complete {
        match classify_conditions(r)? {
            ConditionSplit::Split { internal, external } => split.push((*r, internal, external)),
            ConditionSplit::Tie => ties += 1,
        }
    }
    if split.len() < 2 {
        return Err(ModelError::Data(format!(
            "insufficient participants for paired test: {} classified ({} ties, {} faulted)",
            split.len(),
            ties,
            records.len() - complete.len()
        )));
    }
    let labels: Vec<u64> = split.iter().map(|(r, ..)| r.participant_id).collect();
    let internal_vs_external = Measure::ALL
        .iter()
        .map(|&m| {
            let pick = |which: fn(&(&RunRecord, Rendering, Rendering)) -> Rendering| -> Vec<f64> {
                split
                    .iter()
                    .map(|s| s.0.condition(which(s)).map(|c| m.of(c)).unwrap_or(f64::NAN))
                    .collect()
            };
            let sample = PairedSample::new(labels.clone(), pick(|s| s.1), pick(|s| s.2))?;
            Comparison::new(m, ("internal", "external"), &sample, alpha)
        })
        .collect::<Result<Vec<_>>>()?;

    let flow = |r: Rendering| -> Vec<f64> {
        complete
            .iter()
            .map(|rec| rec.condition(r).map(|c| c.flow_score).unwrap_or(f64::NAN))
            .collect()
    };
    let hard_easy = PairedSample::new(
        complete.iter().map(|r| r.participant_id).collect(),
        flow(Rendering::Hard),
        flow(Rendering::Easy),
    )?;
    let hard_vs_easy_flow =
        Comparison::new(Measure::FlowScore, ("hard", "easy"), &hard_easy, alpha)?;

    Ok(CohortReport {
        alpha,
        participants: records.len(),
        faulted: records.len() - complete.len(),
        ties,
        classified: split.len(),
        internal_is_hard: split.iter().filter(|s| s.1 == Rendering::Hard).count(),
        internal_vs_external,
        hard_vs_easy_flow,
    })
}
