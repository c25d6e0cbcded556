//! Range sweeps under the general map.
//!
//! Each start is iterated in `u128` and falls back to [`Natural`] when a
//! value would overflow. Ranges are cut into fixed-size chunks that are
//! processed in parallel and merged in chunk order, so the report does not
//! depend on the thread count.

use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::dynamics::{self, Natural};
use crate::error::{Error, Result};

const CHUNK: u64 = 1 << 14;

/// Stopping data for one start under the general map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitSummary {
    pub x: u64,
    /// First `k` with `T^k(x) = 1`; `None` if the budget ran out.
    pub total_stopping_time: Option<u64>,
    /// First `k` with `T^k(x) < x`; `None` for `x = 1` or if the budget ran out.
    pub stopping_time: Option<u64>,
    /// Largest value visited (including `x`) within the steps taken.
    pub peak: Natural,
}

impl OrbitSummary {
    /// `total_stopping_time / ln x`, for `x ≥ 2` when the orbit reached 1.
    pub fn ratio(&self) -> Option<f64> {
        if self.x < 2 {
            return None;
        }
        self.total_stopping_time
            .map(|t| t as f64 / (self.x as f64).ln())
    }
}

struct FastOrbit {
    total: Option<u64>,
    stopping: Option<u64>,
    peak: u128,
}

const ODD_STEP_CEILING: u128 = (u128::MAX - 1) / 3;

/// `None` when some odd value exceeds `ceiling`, i.e. `3v + 1` might not fit.
fn fast_orbit(x: u64, max_steps: u64, ceiling: u128) -> Option<FastOrbit> {
    let start = x as u128;
    let mut v = start;
    let mut peak = v;
    let mut stopping = None;
    let mut steps = 0u64;
    while v != 1 {
        if steps == max_steps {
            return Some(FastOrbit {
                total: None,
                stopping,
                peak,
            });
        }
        if v & 1 == 1 {
            if v > ceiling {
                return None;
            }
            v = (3 * v + 1) >> 1;
            if v > peak {
                peak = v;
            }
        } else {
            v >>= 1;
        }
        steps += 1;
        if stopping.is_none() && v < start {
            stopping = Some(steps);
        }
    }
    Some(FastOrbit {
        total: Some(steps),
        stopping,
        peak,
    })
}

fn slow_orbit(x: u64, max_steps: u64) -> OrbitSummary {
    let start = Natural::from(x);
    let mut v = start.clone();
    let mut peak = v.clone();
    let mut stopping = None;
    let mut steps = 0u64;
    while !v.is_one() {
        if steps == max_steps {
            return OrbitSummary {
                x,
                total_stopping_time: None,
                stopping_time: stopping,
                peak,
            };
        }
        v = dynamics::step_general(&v).expect("positive").0;
        if v > peak {
            peak = v.clone();
        }
        steps += 1;
        if stopping.is_none() && v < start {
            stopping = Some(steps);
        }
    }
    OrbitSummary {
        x,
        total_stopping_time: Some(steps),
        stopping_time: stopping,
        peak,
    }
}

/// Stopping data for `x ≥ 1`.
pub fn summarize(x: u64, max_steps: u64) -> Result<OrbitSummary> {
    summarize_with_ceiling(x, max_steps, ODD_STEP_CEILING)
}

fn summarize_with_ceiling(x: u64, max_steps: u64, ceiling: u128) -> Result<OrbitSummary> {
    if x == 0 {
        return Err(Error::Domain("the general map is undefined at 0".into()));
    }
    Ok(match fast_orbit(x, max_steps, ceiling) {
        Some(f) => OrbitSummary {
            x,
            total_stopping_time: f.total,
            stopping_time: f.stopping,
            peak: Natural::from(f.peak),
        },
        None => slow_orbit(x, max_steps),
    })
}

/// Arbitrary-precision path only; the reference for [`summarize`].
pub fn summarize_exact(x: u64, max_steps: u64) -> Result<OrbitSummary> {
    if x == 0 {
        return Err(Error::Domain("the general map is undefined at 0".into()));
    }
    Ok(slow_orbit(x, max_steps))
}

/// Aggregate over a range of starts. Reports over disjoint ranges combine
/// with [`SweepReport::merge`]; ties are broken toward the smallest start.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub first: u64,
    pub last: u64,
    pub max_steps: u64,
    /// Starts confirmed to reach 1 within `max_steps`.
    pub verified: u64,
    /// Starts that exhausted `max_steps`, ascending.
    pub failures: Vec<u64>,
    pub max_total_stopping_time: u64,
    pub max_total_stopping_time_at: u64,
    /// Largest `total_stopping_time / ln x` over `x ≥ 2`.
    pub max_ratio: Option<f64>,
    pub max_ratio_at: u64,
    pub max_excursion: Natural,
    pub max_excursion_at: u64,
}

impl SweepReport {
    fn empty(first: u64, last: u64, max_steps: u64) -> Self {
        SweepReport {
            first,
            last,
            max_steps,
            verified: 0,
            failures: Vec::new(),
            max_total_stopping_time: 0,
            max_total_stopping_time_at: first,
            max_ratio: None,
            max_ratio_at: first,
            max_excursion: Natural::from(0u32),
            max_excursion_at: first,
        }
    }

    fn record(&mut self, s: OrbitSummary) {
        match s.total_stopping_time {
            Some(t) => {
                self.verified += 1;
                if t > self.max_total_stopping_time {
                    self.max_total_stopping_time = t;
                    self.max_total_stopping_time_at = s.x;
                }
            }
            None => self.failures.push(s.x),
        }
        if let Some(r) = s.ratio() {
            if self.max_ratio.is_none_or(|best| r > best) {
                self.max_ratio = Some(r);
                self.max_ratio_at = s.x;
            }
        }
        if s.peak > self.max_excursion {
            self.max_excursion = s.peak;
            self.max_excursion_at = s.x;
        }
    }

    /// Combines with a report over a disjoint range. Strictly-greater
    /// comparisons plus the smaller-start tie rule keep the result
    /// independent of merge order.
    pub fn merge(mut self, other: SweepReport) -> SweepReport {
        self.first = self.first.min(other.first);
        self.last = self.last.max(other.last);
        self.verified += other.verified;
        self.failures.extend(other.failures);
        self.failures.sort_unstable();

        if (other.max_total_stopping_time, std::cmp::Reverse(other.max_total_stopping_time_at))
            > (self.max_total_stopping_time, std::cmp::Reverse(self.max_total_stopping_time_at))
        {
            self.max_total_stopping_time = other.max_total_stopping_time;
            self.max_total_stopping_time_at = other.max_total_stopping_time_at;
        }
        match (self.max_ratio, other.max_ratio) {
            (None, Some(_)) => {
                self.max_ratio = other.max_ratio;
                self.max_ratio_at = other.max_ratio_at;
            }
            (Some(a), Some(b)) if b > a || (b == a && other.max_ratio_at < self.max_ratio_at) => {
                self.max_ratio = Some(b);
                self.max_ratio_at = other.max_ratio_at;
            }
            _ => {}
        }
        if other.max_excursion > self.max_excursion
            || (other.max_excursion == self.max_excursion
                && other.max_excursion_at < self.max_excursion_at)
        {
            self.max_excursion = other.max_excursion;
            self.max_excursion_at = other.max_excursion_at;
        }
        self
    }

    pub fn all_verified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sequential sweep of `first..=last`.
pub fn sweep_range(first: u64, last: u64, max_steps: u64) -> Result<SweepReport> {
    if first == 0 || first > last {
        return Err(Error::Precondition(format!(
            "sweep range must satisfy 1 ≤ first ≤ last, got {first}..={last}"
        )));
    }
    let mut report = SweepReport::empty(first, last, max_steps);
    for x in first..=last {
        report.record(summarize(x, max_steps)?);
    }
    Ok(report)
}

/// Confirms that every `1 ≤ x ≤ limit` reaches 1 within `max_steps`, in
/// parallel on the current rayon pool.
pub fn sweep_to_one(limit: u64, max_steps: u64) -> Result<SweepReport> {
    if limit == 0 {
        return Err(Error::Precondition("limit must be at least 1".into()));
    }
    let chunks = limit.div_ceil(CHUNK);
    let parts: Vec<SweepReport> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let first = c * CHUNK + 1;
            let last = ((c + 1) * CHUNK).min(limit);
            sweep_range(first, last, max_steps)
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .reduce(SweepReport::merge)
        .expect("at least one chunk"))
}

/// Peak as `u128` when it fits, for compact output.
pub fn peak_u128(s: &OrbitSummary) -> Option<u128> {
    s.peak.to_u128()
}
