//! Synchronous bootstrap dynamics with per-step thresholds.
//!
//! A [`ThresholdSchedule`] covers the base process and its three relaxations.
//! The relaxed variants lower the threshold at the first one or two steps only,
//! so every schedule is nondecreasing in the step index. That makes the first
//! step that adds nothing a true fixpoint.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{CubeSpec, LiveCounts, NeighborKernel, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("base threshold r must be at least 1")]
    ZeroThreshold,
    #[error("{kind} schedule with r = {r}, t = {t} has a step threshold below 1")]
    ThresholdBelowOne { kind: ScheduleKind, r: u64, t: u64 },
    #[error("the base process takes no relaxation (t = {t})")]
    UnexpectedRelaxation { t: u64 },
    #[error("max_steps must be at least 1")]
    ZeroMaxSteps,
    #[error("no fixpoint within {max_steps} steps")]
    Truncated { max_steps: u64, trace: Box<Trace> },
    #[error("initial set lives on Q_{found}, expected Q_{expected}")]
    DimensionMismatch { expected: u32, found: u32 },
    #[error("lower schedule exceeds upper schedule at step {step}: {lo} > {hi}")]
    NotPointwiseLower { step: u64, lo: u64, hi: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Boot,
    Boot1,
    Boot2,
    Boot3,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Boot => "boot",
            ScheduleKind::Boot1 => "boot1",
            ScheduleKind::Boot2 => "boot2",
            ScheduleKind::Boot3 => "boot3",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boot" => Ok(ScheduleKind::Boot),
            "boot1" => Ok(ScheduleKind::Boot1),
            "boot2" => Ok(ScheduleKind::Boot2),
            "boot3" => Ok(ScheduleKind::Boot3),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Infection thresholds indexed by step (`1, 2, ...`).
///
/// | kind  | step 1  | step 2 | later |
/// |-------|---------|--------|-------|
/// | boot  | r       | r      | r     |
/// | boot1 | r − t   | r      | r     |
/// | boot2 | r − 2t  | r − t  | r     |
/// | boot3 | r − 2t  | r − t  | r     |
///
/// `boot3` has the shape of `boot2`; callers pass the majority threshold as `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    kind: ScheduleKind,
    r: u64,
    t: u64,
}

impl ThresholdSchedule {
    pub fn new(kind: ScheduleKind, r: u64, t: u64) -> Result<Self, EngineError> {
        if r == 0 {
            return Err(EngineError::ZeroThreshold);
        }
        let floor = match kind {
            ScheduleKind::Boot if t != 0 => return Err(EngineError::UnexpectedRelaxation { t }),
            ScheduleKind::Boot => Some(r),
            ScheduleKind::Boot1 => r.checked_sub(t),
            ScheduleKind::Boot2 | ScheduleKind::Boot3 => {
                t.checked_mul(2).and_then(|d| r.checked_sub(d))
            }
        };
        match floor {
            Some(f) if f >= 1 => Ok(Self { kind, r, t }),
            _ => Err(EngineError::ThresholdBelowOne { kind, r, t }),
        }
    }

    pub fn boot(r: u64) -> Result<Self, EngineError> {
        Self::new(ScheduleKind::Boot, r, 0)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Threshold applied when computing `A_step` from `A_{step-1}`.
    pub fn threshold(&self, step: u64) -> u64 {
        assert!(step >= 1, "steps are numbered from 1");
        match (self.kind, step) {
            (ScheduleKind::Boot1, 1) => self.r - self.t,
            (ScheduleKind::Boot2 | ScheduleKind::Boot3, 1) => self.r - 2 * self.t,
            (ScheduleKind::Boot2 | ScheduleKind::Boot3, 2) => self.r - self.t,
            _ => self.r,
        }
    }

    /// Number of leading steps whose threshold differs from `r`.
    pub fn relaxed_steps(&self) -> u64 {
        match self.kind {
            _ if self.t == 0 => 0,
            ScheduleKind::Boot => 0,
            ScheduleKind::Boot1 => 1,
            ScheduleKind::Boot2 | ScheduleKind::Boot3 => 2,
        }
    }
}

impl fmt::Display for ThresholdSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Boot => write!(f, "boot(r={})", self.r),
            kind => write!(f, "{kind}(r={},t={})", self.r, self.t),
        }
    }
}

/// Per-step record of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// `|A_0|, |A_1|, ..., |A_fixpoint|`.
    pub sizes: Vec<u64>,
    /// First `i` with `A_{i+1} = A_i`.
    pub fixpoint_step: u64,
    pub percolated: bool,
    pub final_set: Option<VertexSet>,
}

/// One synchronous update: `A ∪ {v : |N(v) ∩ A| >= threshold}`.
pub fn step(spec: CubeSpec, a: &VertexSet, threshold: u64) -> VertexSet {
    let kernel = NeighborKernel::new(spec);
    let mut out = VertexSet::empty(spec.n());
    kernel.step_into(a, threshold, &mut out);
    out
}

/// Default step budget: every non-final step adds at least one vertex.
pub fn default_max_steps(spec: CubeSpec) -> u64 {
    spec.order()
}

/// Reusable buffers for repeated runs on one cube.
#[derive(Debug, Clone)]
pub struct Runner {
    kernel: NeighborKernel,
    live: LiveCounts,
}

impl Runner {
    pub fn new(spec: CubeSpec) -> Self {
        let kernel = NeighborKernel::new(spec);
        let live = LiveCounts::new(&kernel);
        Self { kernel, live }
    }

    pub fn spec(&self) -> CubeSpec {
        self.kernel.spec()
    }

    /// Iterates in place until nothing changes. `current` ends as the closure.
    /// Returns the fixpoint step, or `None` on truncation.
    pub fn close(
        &mut self,
        current: &mut VertexSet,
        schedule: &ThresholdSchedule,
        max_steps: u64,
        mut on_size: impl FnMut(u64),
    ) -> Option<u64> {
        let mut size = current.len();
        on_size(size);
        self.live.reset(&self.kernel, current);
        for i in 1..=max_steps {
            let added = self
                .live
                .advance(&self.kernel, current, schedule.threshold(i));
            if added == 0 {
                return Some(i - 1);
            }
            size += added;
            on_size(size);
        }
        None
    }

    /// Whether the closure of `current` is the whole cube; `current` ends as
    /// the closure. The relaxed prefix runs synchronously, the constant tail
    /// is closed in place.
    pub fn percolates(&mut self, current: &mut VertexSet, schedule: &ThresholdSchedule) -> bool {
        self.live.reset(&self.kernel, current);
        for i in 1..=schedule.relaxed_steps() {
            if self
                .live
                .advance(&self.kernel, current, schedule.threshold(i))
                == 0
            {
                return current.is_full();
            }
        }
        self.kernel.close_in_place(current, schedule.r());
        current.is_full()
    }

    pub fn run(
        &mut self,
        a0: &VertexSet,
        schedule: &ThresholdSchedule,
        max_steps: u64,
    ) -> Result<Trace, EngineError> {
        let spec = self.spec();
        if a0.dimension() != spec.n() {
            return Err(EngineError::DimensionMismatch {
                expected: spec.n(),
                found: a0.dimension(),
            });
        }
        if max_steps == 0 {
            return Err(EngineError::ZeroMaxSteps);
        }
        let mut current = a0.clone();
        let mut sizes = Vec::new();
        let fix = self.close(&mut current, schedule, max_steps, |s| sizes.push(s));
        let percolated = current.is_full();
        match fix {
            Some(fixpoint_step) => Ok(Trace {
                sizes,
                fixpoint_step,
                percolated,
                final_set: Some(current),
            }),
            None => Err(EngineError::Truncated {
                max_steps,
                trace: Box::new(Trace {
                    sizes,
                    fixpoint_step: max_steps,
                    percolated,
                    final_set: Some(current),
                }),
            }),
        }
    }
}

/// Runs `schedule` from `a0` until `A_{i+1} = A_i` or `max_steps` updates.
pub fn run_to_fixpoint(
    spec: CubeSpec,
    a0: &VertexSet,
    schedule: &ThresholdSchedule,
    max_steps: u64,
) -> Result<Trace, EngineError> {
    Runner::new(spec).run(a0, schedule, max_steps)
}

/// Runs both schedules from `a0` and checks `A_i(lo) ⊇ A_i(hi)` at every step
/// until both have stabilized.
///
/// Fails with [`EngineError::NotPointwiseLower`] when `lo` has a larger
/// threshold than `hi` at some step of the run; `Ok(false)` means the
/// containment itself failed.
pub fn trace_dominates(
    spec: CubeSpec,
    a0: &VertexSet,
    lo: &ThresholdSchedule,
    hi: &ThresholdSchedule,
) -> Result<bool, EngineError> {
    if a0.dimension() != spec.n() {
        return Err(EngineError::DimensionMismatch {
            expected: spec.n(),
            found: a0.dimension(),
        });
    }
    let kernel = NeighborKernel::new(spec);
    let mut a_lo = a0.clone();
    let mut a_hi = a0.clone();
    let mut next = VertexSet::empty(spec.n());
    let mut dominated = true;
    // Past the relaxed prefix both schedules are constant; one stalled step
    // on each side after that means both are at their fixpoints.
    let mut stalled_lo = false;
    let mut stalled_hi = false;
    let warmup = lo.relaxed_steps().max(hi.relaxed_steps());
    for i in 1..=default_max_steps(spec) + warmup + 1 {
        let (t_lo, t_hi) = (lo.threshold(i), hi.threshold(i));
        if t_lo > t_hi {
            return Err(EngineError::NotPointwiseLower {
                step: i,
                lo: t_lo,
                hi: t_hi,
            });
        }
        let changed_lo = kernel.step_into(&a_lo, t_lo, &mut next);
        std::mem::swap(&mut a_lo, &mut next);
        let changed_hi = kernel.step_into(&a_hi, t_hi, &mut next);
        std::mem::swap(&mut a_hi, &mut next);
        dominated &= a_hi.is_subset(&a_lo);
        stalled_lo |= !changed_lo && i > warmup;
        stalled_hi |= !changed_hi && i > warmup;
        if stalled_lo && stalled_hi {
            break;
        }
    }
    Ok(dominated)
}
