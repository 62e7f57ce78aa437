//! File formats and the run manifest.
//!
//! Every command renders its artifacts in memory first; a single writer then
//! puts them on disk and records their digests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fulfillment::LabeledPoint;
use crate::game::TrialOutcome;
use crate::optimize::{GridCell, OptimizationResult};
use crate::protocol::RunRecord;

pub const TRIALS_HEADER: &str = "# flowsense-trials v1";
pub const MANIFEST_SCHEMA: &str = "flowsense-manifest v1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A named artifact waiting to be written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    fn of(name: &str, bytes: &[u8]) -> Self {
        Self {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_sha256: String) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_sha256,
            started_at: now(),
            finished_at: String::new(),
            files: Vec::new(),
        }
    }

    /// Names of files whose current contents differ from the recorded digest.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, OutputError> {
        let mut bad = Vec::new();
        for f in &self.files {
            let path = dir.join(&f.path);
            let bytes = fs::read(&path).map_err(|source| OutputError::Io { path, source })?;
            if FileDigest::of(&f.path, &bytes) != *f {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the artifacts and then the manifest describing them.
pub fn write_artifacts(
    dir: &Path,
    artifacts: &[Artifact],
    mut manifest: RunManifest,
) -> Result<RunManifest, OutputError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| OutputError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(io_err(&path))?;
        manifest.files.push(FileDigest::of(&a.name, &a.bytes));
    }
    manifest.finished_at = now();
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, OutputError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|source| OutputError::Io { path, source })?;
    Ok(serde_json::from_slice(&text)?)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, OutputError> {
    w.into_inner()
        .map_err(|e| OutputError::Csv(e.into_error().into()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Labelled plane states, one row each.
pub fn figure5_csv(points: &[LabeledPoint]) -> Result<Vec<u8>, OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state", "joa", "S", "C", "H", "octant", "in_flow"])?;
    for p in points {
        w.write_record([
            p.state.as_str().to_string(),
            opt(p.joa),
            p.point.skill.to_string(),
            p.point.challenge.to_string(),
            p.strength.to_string(),
            p.octant.as_str().to_string(),
            p.in_flow.to_string(),
        ])?;
    }
    finish_csv(w)
}

pub fn json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, OutputError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// One row of the trial log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow<'a> {
    pub participant_id: u64,
    pub session: &'a str,
    pub trial: usize,
    pub width: f64,
    pub assist_bonus: f64,
    pub rendering: &'a str,
    pub outcome: &'a TrialOutcome,
}

/// Trial log with a version comment above the header.
pub fn trials_csv<'a>(
    rows: impl IntoIterator<Item = TrialRow<'a>>,
) -> Result<Vec<u8>, OutputError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(TRIALS_HEADER.as_bytes());
    buf.push(b'\n');
    let mut w = csv::Writer::from_writer(buf);
    w.write_record([
        "participant_id",
        "session",
        "trial",
        "width",
        "assist_bonus",
        "rendering",
        "aim_error",
        "outcome",
        "recognized",
    ])?;
    for r in rows {
        w.write_record([
            r.participant_id.to_string(),
            r.session.to_string(),
            r.trial.to_string(),
            r.width.to_string(),
            r.assist_bonus.to_string(),
            r.rendering.to_string(),
            r.outcome.aim_error.to_string(),
            r.outcome.outcome.as_str().to_string(),
            r.outcome.recognized.to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Every trial of every session, in participant order.
pub fn record_trial_rows(records: &[RunRecord]) -> impl Iterator<Item = TrialRow<'_>> {
    records.iter().flat_map(|r| {
        r.sessions.iter().flat_map(move |s| {
            s.trials.iter().enumerate().map(move |(i, t)| TrialRow {
                participant_id: r.participant_id,
                session: s.kind.as_str(),
                trial: i,
                width: s.widths[i],
                assist_bonus: s.assist_bonus,
                rendering: s.rendering.as_str(),
                outcome: t,
            })
        })
    })
}

/// One JSON object per line.
pub fn runs_jsonl(records: &[RunRecord]) -> Result<Vec<u8>, OutputError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Inverse of [`runs_jsonl`]; blank lines are skipped.
pub fn parse_runs_jsonl(text: &str) -> Result<Vec<RunRecord>, OutputError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| OutputError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Per-participant, per-condition scores of complete records.
pub fn summary_csv(records: &[RunRecord]) -> Result<Vec<u8>, OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "participant_id",
        "condition_order",
        "rendering",
        "joa_estimate",
        "model_h",
        "flow_score",
        "locus_score",
        "skill_change_score",
        "challenge_change_score",
        "hits",
        "task_score",
        "mean_abs_error",
    ])?;
    for r in records.iter().filter(|r| r.is_complete()) {
        for c in &r.conditions {
            w.write_record([
                r.participant_id.to_string(),
                r.condition_order.as_str().to_string(),
                c.rendering.as_str().to_string(),
                c.joa_estimate.to_string(),
                c.model_h.to_string(),
                c.flow_score.to_string(),
                c.locus_score.to_string(),
                c.skill_change_score.to_string(),
                c.challenge_change_score.to_string(),
                c.hits.to_string(),
                c.task_score.to_string(),
                c.mean_abs_error.to_string(),
            ])?;
        }
    }
    finish_csv(w)
}

fn cells_csv<'a>(cells: impl IntoIterator<Item = &'a GridCell>) -> Result<Vec<u8>, OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["joa", "x", "H", "feasible"])?;
    for c in cells {
        w.write_record([
            c.joa.to_string(),
            c.x.to_string(),
            c.h.to_string(),
            c.feasible.to_string(),
        ])?;
    }
    finish_csv(w)
}

pub fn grid_csv(result: &OptimizationResult) -> Result<Vec<u8>, OutputError> {
    cells_csv(&result.grid)
}

pub fn optimum_csv(result: &OptimizationResult) -> Result<Vec<u8>, OutputError> {
    let o = result.optimum;
    cells_csv(&[GridCell {
        joa: o.joa,
        x: o.x,
        h: o.h,
        feasible: o.feasible,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_plane::FlowBand;
    use crate::fulfillment::{simulate_figure5, FulfillmentParams};
    use crate::game::HitOutcome;

    #[test]
    fn figure5_layout() {
        let pts =
            simulate_figure5(&FulfillmentParams::default(), &[0.5], &FlowBand::default()).unwrap();
        let text = String::from_utf8(figure5_csv(&pts).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "state,joa,S,C,H,octant,in_flow");
        assert_eq!(lines[1], "alpha,,0,0,0,Neutral,false");
        assert!(lines[3].starts_with("gamma,0.5,1.5,0.5,1.58113883"));
    }

    #[test]
    fn trial_log_layout() {
        let t = TrialOutcome {
            aim_error: -1.25,
            outcome: HitOutcome::HitAssisted,
            recognized: true,
        };
        let rows = [TrialRow {
            participant_id: 3,
            session: "assisted",
            trial: 7,
            width: 2.5,
            assist_bonus: 7.5,
            rendering: "easy",
            outcome: &t,
        }];
        let text = String::from_utf8(trials_csv(rows).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRIALS_HEADER);
        assert_eq!(
            lines[1],
            "participant_id,session,trial,width,assist_bonus,rendering,aim_error,outcome,recognized"
        );
        assert_eq!(
            lines[2],
            "3,assisted,7,2.5,7.5,easy,-1.25,hit_assisted,true"
        );
    }

    #[test]
    fn manifest_matches_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [
            Artifact::new("a.csv", b"x,y\n1,2\n".to_vec()),
            Artifact::new("b.json", b"{}\n".to_vec()),
        ];
        let m =
            write_artifacts(dir.path(), &arts, RunManifest::new("test", 1, "00".into())).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(read_manifest(dir.path()).unwrap(), m);
        assert!(m.verify(dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("a.csv"), b"tampered").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
    }
}
