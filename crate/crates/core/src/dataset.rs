//! JSON Lines trajectory files.
//!
//! One trajectory per line:
//!
//! ```text
//! {"id":0,"task":1,"steps":[[4,2],[7,0]],"terminal":3}
//! ```
//!
//! `task` may be `null`. Indices are 0-based. Blank lines are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Trajectory;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: u64,
    #[serde(default)]
    task: Option<usize>,
    steps: Vec<[usize; 2]>,
    terminal: usize,
}

impl From<&Trajectory> for Record {
    fn from(t: &Trajectory) -> Self {
        Self {
            id: t.id,
            task: t.task,
            steps: t.steps.iter().map(|&(s, a)| [s, a]).collect(),
            terminal: t.terminal,
        }
    }
}

impl From<Record> for Trajectory {
    fn from(r: Record) -> Self {
        Self {
            id: r.id,
            task: r.task,
            steps: r.steps.into_iter().map(|[s, a]| (s, a)).collect(),
            terminal: r.terminal,
        }
    }
}

/// State/action counts a dataset must fit into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub n_states: usize,
    pub n_actions: usize,
}

/// Parses one line. Range checks are left to [`parse_dataset`].
pub fn parse_trajectory_line(line: &str) -> Result<Trajectory> {
    let record: Record = serde_json::from_str(line)?;
    Ok(record.into())
}

/// Parses a whole JSONL document. With `bounds`, out-of-range indices are
/// rejected; without, only syntax and non-empty steps are checked.
pub fn parse_dataset(text: &str, bounds: Option<Bounds>) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let traj = parse_trajectory_line(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if traj.steps.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "trajectory has no steps".into(),
            });
        }
        if let Some(b) = bounds {
            traj.validate(b.n_states, b.n_actions)
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
        }
        out.push(traj);
    }
    Ok(out)
}

pub fn read_dataset(path: impl AsRef<Path>, bounds: Option<Bounds>) -> Result<Vec<Trajectory>> {
    let text = fs::read_to_string(path)?;
    parse_dataset(&text, bounds)
}

pub fn to_jsonl(dataset: &[Trajectory]) -> String {
    let mut out = String::new();
    for t in dataset {
        out.push_str(&serde_json::to_string(&Record::from(t)).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: impl AsRef<Path>, dataset: &[Trajectory]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(to_jsonl(dataset).as_bytes())?;
    Ok(())
}
