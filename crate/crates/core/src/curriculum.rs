//! Initial-height curriculum: the sampling-based scheme plus the standard
//! and no-curriculum baselines.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumMode {
    /// Always start at `z_high`.
    None,
    /// Always start at `z_low`.
    Standard,
    /// Start uniformly in `[z_low, z_high]`.
    Sampling,
}

impl CurriculumMode {
    pub fn name(self) -> &'static str {
        match self {
            CurriculumMode::None => "none",
            CurriculumMode::Standard => "standard",
            CurriculumMode::Sampling => "sampling",
        }
    }
}

/// Heights are plug-tip heights relative to the socket opening (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumState {
    pub z_low: f64,
    pub z_high: f64,
    pub dz_inc: f64,
    pub dz_dec: f64,
    pub z_low_min: f64,
    pub z_low_max: f64,
    pub stage: u32,
    pub advance_threshold: f64,
    pub revert_threshold: f64,
    pub mode: CurriculumMode,
    /// Lateral perturbation half-range applied above the opening (m).
    pub lateral_range: f64,
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self {
            z_low: -0.010,
            z_high: 0.010,
            dz_inc: 0.005,
            dz_dec: 0.003,
            z_low_min: -0.010,
            z_low_max: 0.010,
            stage: 0,
            advance_threshold: 0.80,
            revert_threshold: 0.10,
            mode: CurriculumMode::Sampling,
            lateral_range: 0.010,
        }
    }
}

impl CurriculumState {
    pub fn new(mode: CurriculumMode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("curriculum: {m}")));
        if !(self.dz_dec < self.dz_inc) {
            return bad("dz_dec must be smaller than dz_inc");
        }
        if !(self.dz_dec > 0.0) {
            return bad("step sizes must be positive");
        }
        if !(self.z_low_min <= self.z_low && self.z_low <= self.z_low_max.min(self.z_high)) {
            return bad("z_low must lie in [z_low_min, min(z_low_max, z_high)]");
        }
        if !(0.0..=1.0).contains(&self.revert_threshold)
            || !(0.0..=1.0).contains(&self.advance_threshold)
            || self.revert_threshold >= self.advance_threshold
        {
            return bad("thresholds must satisfy 0 <= revert < advance <= 1");
        }
        if !(self.lateral_range >= 0.0) {
            return bad("lateral_range must be non-negative");
        }
        Ok(())
    }

    /// Progress of `z_low` through its range, in [0, 1].
    pub fn difficulty_ratio(&self) -> f64 {
        let span = self.z_high - self.z_low_min;
        if span <= 0.0 {
            1.0
        } else {
            ((self.z_low - self.z_low_min) / span).clamp(0.0, 1.0)
        }
    }
}

/// One update from the batch success rate `p_n`. The stage counter moves
/// only when the clamp lets `z_low` move.
pub fn curriculum_update(state: &CurriculumState, p_n: f64) -> CurriculumState {
    assert!((0.0..=1.0).contains(&p_n), "success fraction {p_n} outside [0, 1]");
    let mut next = *state;
    let proposed = if p_n > state.advance_threshold {
        state.z_low + state.dz_inc
    } else if p_n < state.revert_threshold {
        state.z_low - state.dz_dec
    } else {
        state.z_low
    };
    next.z_low = proposed.clamp(state.z_low_min, state.z_low_max.min(state.z_high));
    if next.z_low > state.z_low {
        next.stage += 1;
    } else if next.z_low < state.z_low {
        next.stage = next.stage.saturating_sub(1);
    }
    next
}

/// Folds [`curriculum_update`] over a trace and returns the state after
/// each entry.
pub fn run_schedule(trace: &[f64], initial: &CurriculumState) -> Vec<CurriculumState> {
    let mut s = *initial;
    trace
        .iter()
        .map(|&p| {
            s = curriculum_update(&s, p);
            s
        })
        .collect()
}

pub fn sample_initial_height<R: Rng + ?Sized>(state: &CurriculumState, rng: &mut R) -> f64 {
    match state.mode {
        CurriculumMode::None => state.z_high,
        CurriculumMode::Standard => state.z_low,
        CurriculumMode::Sampling => {
            if state.z_low < state.z_high {
                rng.gen_range(state.z_low..=state.z_high)
            } else {
                state.z_low
            }
        }
    }
}

/// Lateral offset for a start at `z_init`; zero unless above the opening.
pub fn sample_lateral_offset<R: Rng + ?Sized>(state: &CurriculumState, z_init: f64, rng: &mut R) -> (f64, f64) {
    if z_init <= 0.0 || state.lateral_range == 0.0 {
        return (0.0, 0.0);
    }
    let r = state.lateral_range;
    (rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumLogRow {
    pub step: usize,
    pub p_n: f64,
    pub z_low_m: f64,
    pub stage: u32,
    pub mode: String,
}

pub fn write_trace_csv(path: &Path, rows: &[CurriculumLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
