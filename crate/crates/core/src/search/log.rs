//! Event log of a run, one CSV row per evaluated offspring.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netlist::Area;

pub const EVENT_LOG_HEADER: [&str; 8] =
    ["generation", "elapsed_ms", "candidate_size", "decision", "conflicts", "limit", "best_size", "improvement"];

/// Outcome of scoring one offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionKind {
    Sat,
    Unsat,
    Undecided,
    /// Rejected by the size pre-filter; the solver was not called.
    Skipped,
}

impl DecisionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionKind::Sat => "SAT",
            DecisionKind::Unsat => "UNSAT",
            DecisionKind::Undecided => "UNDECIDED",
            DecisionKind::Skipped => "SKIPPED",
        }
    }
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecisionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<DecisionKind> {
        Ok(match s {
            "SAT" => DecisionKind::Sat,
            "UNSAT" => DecisionKind::Unsat,
            "UNDECIDED" => DecisionKind::Undecided,
            "SKIPPED" => DecisionKind::Skipped,
            _ => return Err(Error::Config(format!("unknown decision `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub generation: u64,
    pub elapsed_ms: u64,
    pub candidate_size: Area,
    pub decision: DecisionKind,
    pub conflicts: u64,
    /// Conflict limit the offspring was checked with.
    pub limit: u64,
    /// Parent size after this generation's replacement step.
    pub best_size: Area,
    pub improvement: bool,
}

/// Which generations are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogMode {
    /// Every evaluation.
    #[default]
    Full,
    /// Only generations with an improvement or a limit change, every
    /// `heartbeat`-th generation, and the last one.
    Sparse { heartbeat: u64 },
}

/// CSV writer applying the log mode.
pub struct EventLog<W: Write> {
    out: W,
    mode: LogMode,
    pending: Vec<Event>,
}

fn parse_area(text: &str) -> Result<Area> {
    let bad = || Error::Config(format!("invalid area `{text}`"));
    let (int, frac) = text.split_once('.').unwrap_or((text, "0"));
    let int: u64 = int.parse().map_err(|_| bad())?;
    let frac = match frac.len() {
        1 => frac.parse::<u64>().map_err(|_| bad())? * 10,
        2 => frac.parse::<u64>().map_err(|_| bad())?,
        _ => return Err(bad()),
    };
    Ok(Area::from_hundredths(int * 100 + frac))
}

impl<W: Write> EventLog<W> {
    pub fn new(mut out: W, mode: LogMode) -> Result<EventLog<W>> {
        writeln!(out, "{}", EVENT_LOG_HEADER.join(","))?;
        Ok(EventLog { out, mode, pending: Vec::new() })
    }

    fn write(&mut self, e: &Event) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{}",
            e.generation,
            e.elapsed_ms,
            e.candidate_size,
            e.decision,
            e.conflicts,
            e.limit,
            e.best_size,
            e.improvement as u8
        )?;
        Ok(())
    }

    /// Records the events of one generation. `notable` forces them out in
    /// sparse mode.
    pub fn push(&mut self, events: Vec<Event>, notable: bool) -> Result<()> {
        let generation = events.first().map(|e| e.generation).unwrap_or(0);
        let keep = match self.mode {
            LogMode::Full => true,
            LogMode::Sparse { heartbeat } => notable || (heartbeat > 0 && generation.is_multiple_of(heartbeat)),
        };
        if keep {
            for e in &events {
                self.write(e)?;
            }
            self.pending.clear();
        } else {
            self.pending = events;
        }
        Ok(())
    }

    /// Writes the last generation if it was held back, and flushes.
    pub fn finish(mut self) -> Result<()> {
        for e in std::mem::take(&mut self.pending) {
            self.write(&e)?;
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Reads an event log back.
pub fn read_events<R: Read>(input: R) -> Result<Vec<Event>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != EVENT_LOG_HEADER {
        return Err(Error::Config(format!("unexpected event log header {header:?}")));
    }
    let mut events = Vec::new();
    for record in reader.records() {
        let r = record?;
        let num = |i: usize| -> Result<u64> {
            r[i].parse().map_err(|_| Error::Config(format!("invalid number `{}` in event log", &r[i])))
        };
        events.push(Event {
            generation: num(0)?,
            elapsed_ms: num(1)?,
            candidate_size: parse_area(&r[2])?,
            decision: r[3].parse()?,
            conflicts: num(4)?,
            limit: num(5)?,
            best_size: parse_area(&r[6])?,
            improvement: num(7)? == 1,
        });
    }
    Ok(events)
}
