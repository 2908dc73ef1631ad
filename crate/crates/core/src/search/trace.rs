use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::model::Minutes;

/// One progress record: the incumbent as seen at `elapsed` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub elapsed: f64,
    /// Requests served once partially served groups are removed.
    pub served: usize,
    pub working_minutes: Minutes,
    pub objective: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgressTrace {
    pub samples: Vec<TraceSample>,
}

impl ProgressTrace {
    pub const CSV_HEADER: &'static str = "elapsed_s,served,working_minutes,objective";

    pub fn push(&mut self, sample: TraceSample) {
        self.samples.push(sample);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:.3},{},{},{}",
                s.elapsed, s.served, s.working_minutes, s.objective
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Parses the CSV produced by [`ProgressTrace::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == Self::CSV_HEADER => {}
            other => return Err(format!("unexpected trace header {other:?}")),
        }
        let mut samples = Vec::new();
        for (idx, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(format!("line {}: expected 4 fields", idx + 2));
            }
            let bad = |e: &dyn std::fmt::Display| format!("line {}: {e}", idx + 2);
            samples.push(TraceSample {
                elapsed: fields[0].parse().map_err(|e| bad(&e))?,
                served: fields[1].parse().map_err(|e| bad(&e))?,
                working_minutes: fields[2].parse().map_err(|e| bad(&e))?,
                objective: fields[3].parse().map_err(|e| bad(&e))?,
            });
        }
        Ok(ProgressTrace { samples })
    }

    /// Samples where the recorded objective strictly dropped.
    pub fn improvements(&self) -> usize {
        self.samples
            .windows(2)
            .filter(|w| w[1].objective < w[0].objective)
            .count()
    }
}
