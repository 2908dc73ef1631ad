use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Route nodes scheduled per deterministic second.
///
/// Calibrated so that one deterministic second takes roughly one wall-clock
/// second of single-threaded search on a current x86-64 core.
pub const WORK_UNITS_PER_SECOND: u64 = 600_000_000;

/// How elapsed time is measured against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Elapsed time is scheduling work divided by [`WORK_UNITS_PER_SECOND`];
    /// runs are reproducible bit for bit.
    Deterministic,
    /// Real elapsed time; results depend on machine speed and load.
    Wall,
}

#[derive(Debug, Clone)]
pub(crate) struct Clock {
    mode: ClockMode,
    limit: f64,
    started: Instant,
}

impl Clock {
    pub fn start(mode: ClockMode, limit: f64) -> Self {
        Clock {
            mode,
            limit,
            started: Instant::now(),
        }
    }

    pub fn elapsed(&self, work: u64) -> f64 {
        match self.mode {
            ClockMode::Deterministic => work as f64 / WORK_UNITS_PER_SECOND as f64,
            ClockMode::Wall => self.started.elapsed().as_secs_f64(),
        }
    }

    #[inline]
    pub fn exhausted(&self, work: u64) -> bool {
        self.elapsed(work) >= self.limit
    }
}
