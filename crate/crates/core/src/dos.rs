//! Denial-of-service attack schedules: half-open attack intervals, the
//! attacked-time measure, per-instant link state, duration-budget validation,
//! and seeded generation of budget-respecting random schedules.

use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DosError {
    #[error("time {t} outside the schedule window [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Ordered, disjoint, half-open attack intervals `[start, end)` inside
/// `[0, horizon]`. Communication is severed exactly while `t` lies in one.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSchedule {
    intervals: Vec<(f64, f64)>,
    horizon: f64,
}

impl AttackSchedule {
    pub fn new(intervals: Vec<(f64, f64)>, horizon: f64) -> Result<AttackSchedule, DosError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(DosError::InvalidSchedule(format!(
                "horizon must be finite and positive, got {horizon}"
            )));
        }
        let mut prev_end = 0.0_f64;
        for (idx, &(start, end)) in intervals.iter().enumerate() {
            if !start.is_finite() || !end.is_finite() {
                return Err(DosError::InvalidSchedule(format!(
                    "interval {idx} has non-finite endpoints"
                )));
            }
            if !(start < end) {
                return Err(DosError::InvalidSchedule(format!(
                    "interval {idx} = [{start}, {end}) must satisfy start < end"
                )));
            }
            if start < 0.0 || end > horizon {
                return Err(DosError::InvalidSchedule(format!(
                    "interval {idx} = [{start}, {end}) leaves [0, {horizon}]"
                )));
            }
            if idx > 0 && start < prev_end {
                return Err(DosError::InvalidSchedule(format!(
                    "interval {idx} overlaps or reorders its predecessor"
                )));
            }
            prev_end = end;
        }
        Ok(AttackSchedule { intervals, horizon })
    }

    pub fn empty(horizon: f64) -> Result<AttackSchedule, DosError> {
        AttackSchedule::new(Vec::new(), horizon)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Every interval endpoint, ordered: the instants where the link state
    /// switches, used to align integration steps with the discontinuities.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.intervals.len());
        for &(s, e) in &self.intervals {
            out.push(s);
            out.push(e);
        }
        out
    }
}

/// Attack-duration budget: over any window `[t0, t]` the attacked time may
/// not exceed `nu_d + (t − t0)/p_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    nu_d: f64,
    p_d: f64,
}

impl AttackBudget {
    pub fn new(nu_d: f64, p_d: f64) -> Result<AttackBudget, DosError> {
        if !(nu_d > 0.0) || !nu_d.is_finite() {
            return Err(DosError::InfeasibleBudget(format!(
                "offset nu_d must be positive, got {nu_d}"
            )));
        }
        if !(p_d > 1.0) || !p_d.is_finite() {
            return Err(DosError::InfeasibleBudget(format!(
                "rate denominator p_d must exceed 1, got {p_d}"
            )));
        }
        Ok(AttackBudget { nu_d, p_d })
    }

    pub fn nu_d(&self) -> f64 {
        self.nu_d
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }
}

/// Total attacked time in `[t0, t]`: the measure of the schedule's intervals
/// intersected with the window. The healthy time is `(t − t0)` minus this.
pub fn attacked_duration(
    schedule: &AttackSchedule,
    t0: f64,
    t: f64,
) -> Result<f64, DosError> {
    if t0 < 0.0 || t < t0 || t > schedule.horizon {
        return Err(DosError::OutOfHorizon { t, horizon: schedule.horizon });
    }
    let mut total = 0.0;
    for &(s, e) in &schedule.intervals {
        let lo = s.max(t0);
        let hi = e.min(t);
        if hi > lo {
            total += hi - lo;
        }
    }
    Ok(total)
}

/// Link state at `t`: 0 inside an attack interval (half-open, so an
/// interval's start is attacked and its end is not), 1 otherwise.
pub fn theta(schedule: &AttackSchedule, t: f64) -> f64 {
    // Last interval starting at or before t, if any.
    let idx = schedule
        .intervals
        .partition_point(|&(s, _)| s <= t);
    if idx > 0 {
        let (_, e) = schedule.intervals[idx - 1];
        if t < e {
            return 0.0;
        }
    }
    1.0
}

/// Budget-check outcome: either the bound holds over the whole window or it
/// first fails at `at` by `excess` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetVerdict {
    Valid,
    Violation { at: f64, excess: f64 },
}

impl BudgetVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, BudgetVerdict::Valid)
    }
}

/// Checks `attacked_duration(t0, t) ≤ nu_d + (t − t0)/p_d` for all
/// `t ∈ [t0, horizon]`. The slack is piecewise linear and grows only during
/// attacks, so checking each interval end (clipped to the horizon) plus the
/// horizon itself is exact, not a sampling approximation.
pub fn validate_budget(
    schedule: &AttackSchedule,
    budget: &AttackBudget,
    t0: f64,
) -> BudgetVerdict {
    let mut checkpoints: Vec<f64> = schedule
        .intervals
        .iter()
        .filter(|&&(_, e)| e > t0)
        .map(|&(_, e)| e.min(schedule.horizon))
        .collect();
    checkpoints.push(schedule.horizon);
    for t in checkpoints {
        let attacked = attacked_duration(schedule, t0, t)
            .expect("checkpoints lie inside the schedule window");
        let excess = attacked - budget.nu_d - (t - t0) / budget.p_d;
        if excess > 0.0 {
            return BudgetVerdict::Violation { at: t, excess };
        }
    }
    BudgetVerdict::Valid
}

/// Maximum admissible length for an attack starting at `t` given `already`
/// seconds attacked since `t0`: during an attack the budget slack shrinks at
/// rate `1 − 1/p_d`, so the interval may run until the slack hits zero.
fn max_attack_len(budget: &AttackBudget, t0: f64, t: f64, already: f64) -> f64 {
    let slack = budget.nu_d + (t - t0) / budget.p_d - already;
    slack / (1.0 - 1.0 / budget.p_d)
}

/// Draws alternating healthy/attacked phases with exponential lengths,
/// truncating any attack that would breach the running budget, so the result
/// always validates. Deterministic in `seed`.
pub fn generate_schedule(
    seed: u64,
    budget: &AttackBudget,
    horizon: f64,
    mean_on: f64,
    mean_off: f64,
) -> Result<AttackSchedule, DosError> {
    if !(mean_on > 0.0) || !(mean_off > 0.0) {
        return Err(DosError::InfeasibleBudget(format!(
            "phase means must be positive, got on={mean_on}, off={mean_off}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(DosError::InvalidSchedule(format!(
            "horizon must be finite and positive, got {horizon}"
        )));
    }
    // Truncation margin keeps the accumulated duration strictly inside the
    // bound despite rounding; ultra-short remnants are dropped entirely.
    const SAFETY: f64 = 0.999_999;
    const MIN_LEN: f64 = 1e-6;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut exp = |mean: f64| -> f64 {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        -mean * (1.0 - u).ln()
    };
    let mut intervals = Vec::new();
    let mut t = 0.0_f64;
    let mut attacked = 0.0_f64;
    loop {
        t += exp(mean_off);
        if t >= horizon {
            break;
        }
        let cap = max_attack_len(budget, 0.0, t, attacked) * SAFETY;
        let len = exp(mean_on).min(cap).min(horizon - t);
        if len >= MIN_LEN {
            intervals.push((t, t + len));
            attacked += len;
            t += len;
        }
    }
    AttackSchedule::new(intervals, horizon)
}
