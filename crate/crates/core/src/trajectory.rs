//! JSON-lines trajectory logs: a header record followed by one record per
//! step, so any episode can be replayed from its seed and action list.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::env::{decode_action, EnvConfig, RewardBreakdown, Transition};
use crate::geometry::{Transformation, WallId};
use crate::planner::StepOutcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub config: EnvConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: usize,
    pub wall: WallId,
    pub transformation: Transformation,
    pub reward: RewardBreakdown,
    pub total_reward: f64,
    pub closeness: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub outcome: Option<StepOutcome>,
}

impl StepRecord {
    pub fn from_transition(action: usize, tr: &Transition) -> Self {
        let (wall, transformation) = decode_action(action);
        Self {
            step: tr.info.step,
            action,
            wall,
            transformation,
            reward: tr.info.reward,
            total_reward: tr.reward,
            closeness: tr.info.closeness,
            terminated: tr.terminated,
            truncated: tr.truncated,
            outcome: tr.info.outcome,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header(TrajectoryHeader),
    Step(StepRecord),
}

/// Writes one JSON object per line.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W, config: &EnvConfig, seed: u64) -> io::Result<Self> {
        write_line(&mut out, &LogRecord::Header(TrajectoryHeader { config: config.clone(), seed }))?;
        Ok(Self { out })
    }

    pub fn record(&mut self, action: usize, tr: &Transition) -> io::Result<()> {
        write_line(&mut self.out, &LogRecord::Step(StepRecord::from_transition(action, tr)))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_line<W: Write>(out: &mut W, rec: &LogRecord) -> io::Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")
}

/// Reads a log back into its header and step records.
pub fn read_trajectory<R: BufRead>(input: R) -> io::Result<(TrajectoryHeader, Vec<StepRecord>)> {
    let mut header = None;
    let mut steps = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogRecord>(&line)? {
            LogRecord::Header(h) if header.is_none() => header = Some(h),
            LogRecord::Header(_) => return Err(io::Error::new(io::ErrorKind::InvalidData, "second header")),
            LogRecord::Step(s) => steps.push(s),
        }
    }
    let header = header.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "missing header"))?;
    Ok((header, steps))
}
