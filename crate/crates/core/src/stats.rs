//! Seeded coin-flip experiments, confidence intervals, the drift bound and
//! stopping-time statistics.
//!
//! # Generator
//!
//! Fair bits come from `ChaCha8Rng` (`rand_chacha` pinned to 0.9.0). A run
//! with seed `s` seeds the generator with `seed_from_u64(s)`; sample `j`
//! of a batch reads stream `j` (`set_stream(j)`). Bits are taken from
//! successive `next_u64` outputs, least significant bit first. A `1` stands
//! for an increase step and a `0` for a decrease step. Golden values in the
//! tests depend on all of the above.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dynamics::{self, Natural, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::sweep;

/// Reference constant `c` in `σ_∞(x) > c · ln x`.
pub const TOTAL_STOPPING_REFERENCE: f64 = 6.14316;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConfidenceLevel {
    P95,
    P98,
    P99,
}

impl ConfidenceLevel {
    pub const ALL: [ConfidenceLevel; 3] = [ConfidenceLevel::P95, ConfidenceLevel::P98, ConfidenceLevel::P99];

    /// Two-sided normal critical value, as tabulated to three decimals.
    pub fn z(self) -> f64 {
        match self {
            ConfidenceLevel::P95 => 1.960,
            ConfidenceLevel::P98 => 2.326,
            ConfidenceLevel::P99 => 2.576,
        }
    }

    pub fn coverage(self) -> f64 {
        match self {
            ConfidenceLevel::P95 => 0.95,
            ConfidenceLevel::P98 => 0.98,
            ConfidenceLevel::P99 => 0.99,
        }
    }

    pub fn percent(self) -> u32 {
        match self {
            ConfidenceLevel::P95 => 95,
            ConfidenceLevel::P98 => 98,
            ConfidenceLevel::P99 => 99,
        }
    }

    /// Accepts `95`, `0.95`, `95%` and the like.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim().trim_end_matches('%');
        let value: f64 = trimmed
            .parse()
            .map_err(|_| Error::UnsupportedLevel(text.to_string()))?;
        let percent = if value < 1.0 { value * 100.0 } else { value };
        ConfidenceLevel::ALL
            .into_iter()
            .find(|l| (l.percent() as f64 - percent).abs() < 1e-9)
            .ok_or_else(|| Error::UnsupportedLevel(text.to_string()))
    }
}

/// Critical value used for the interval half-width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMode {
    Normal,
    /// Student t with `count − 1` degrees of freedom.
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator).
    pub std: f64,
    pub level: ConfidenceLevel,
}

impl SampleStats {
    pub fn from_values(values: &[f64], level: ConfidenceLevel) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Precondition("need at least two values".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(SampleStats {
            count: values.len(),
            mean,
            std: (ss / (n - 1.0)).sqrt(),
            level,
        })
    }

    pub fn critical_value(&self, mode: IntervalMode) -> f64 {
        match mode {
            IntervalMode::Normal => self.level.z(),
            IntervalMode::StudentT => {
                let t = StudentsT::new(0.0, 1.0, (self.count - 1) as f64)
                    .expect("count ≥ 2 gives positive degrees of freedom");
                t.inverse_cdf(1.0 - (1.0 - self.level.coverage()) / 2.0)
            }
        }
    }
}

/// `mean ± c · std / √count` with `c` from `mode`.
pub fn confidence_interval(stats: &SampleStats, mode: IntervalMode) -> Result<(f64, f64)> {
    if stats.count < 2 {
        return Err(Error::Precondition("confidence intervals need count ≥ 2".into()));
    }
    if stats.std < 0.0 || !stats.std.is_finite() {
        return Err(Error::Precondition(format!("invalid std {}", stats.std)));
    }
    let half = stats.critical_value(mode) * stats.std / (stats.count as f64).sqrt();
    Ok((stats.mean - half, stats.mean + half))
}

/// `(2^lo, 2^hi)`.
pub fn exponentiate_interval(lo: f64, hi: f64) -> Result<(f64, f64)> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::Precondition(format!("interval ({lo}, {hi}) is not ordered")));
    }
    Ok((lo.exp2(), hi.exp2()))
}

/// One simulated sequence of `n + D` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    /// `D`, the number of decrease steps (zeros).
    pub zeros: u64,
    /// `n`, the number of increase steps (ones).
    pub ones: u64,
    /// `ξ = D / n`; `+∞` when `n = 0`.
    pub xi: f64,
    /// Sample standard deviation of the 0/1 indicators.
    pub indicator_std: f64,
}

impl RatioSample {
    pub fn from_counts(zeros: u64, ones: u64) -> Self {
        let total = zeros + ones;
        let xi = if ones == 0 {
            f64::INFINITY
        } else {
            zeros as f64 / ones as f64
        };
        let indicator_std = if total < 2 {
            0.0
        } else {
            let t = total as f64;
            ((ones as f64 * zeros as f64) / (t * (t - 1.0))).sqrt()
        };
        RatioSample {
            zeros,
            ones,
            xi,
            indicator_std,
        }
    }

    pub fn length(&self) -> u64 {
        self.zeros + self.ones
    }

    pub fn one_plus_xi(&self) -> f64 {
        1.0 + self.xi
    }

    pub fn chi(&self) -> f64 {
        self.one_plus_xi().exp2()
    }
}

pub fn ratio_from_bits(bits: impl IntoIterator<Item = bool>) -> RatioSample {
    let (mut zeros, mut ones) = (0u64, 0u64);
    for bit in bits {
        if bit {
            ones += 1;
        } else {
            zeros += 1;
        }
    }
    RatioSample::from_counts(zeros, ones)
}

fn count_ones(rng: &mut ChaCha8Rng, length: u64) -> u64 {
    let mut ones = 0u64;
    let mut remaining = length;
    while remaining >= 64 {
        ones += rng.next_u64().count_ones() as u64;
        remaining -= 64;
    }
    if remaining > 0 {
        let mask = (1u64 << remaining) - 1;
        ones += (rng.next_u64() & mask).count_ones() as u64;
    }
    ones
}

/// The first `length` bits of stream `stream` under `seed`.
pub fn seeded_bits(seed: u64, stream: u64, length: u64) -> impl Iterator<Item = bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut word = 0u64;
    (0..length).map(move |i| {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        (word >> (i % 64)) & 1 == 1
    })
}

fn simulate_stream(length: u64, seed: u64, stream: u64) -> RatioSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let ones = count_ones(&mut rng, length);
    RatioSample::from_counts(length - ones, ones)
}

/// One sequence of `length` fair bits (stream 0 of `seed`).
pub fn simulate_ratio(length: u64, seed: u64) -> Result<RatioSample> {
    if length == 0 {
        return Err(Error::Precondition("length must be at least 1".into()));
    }
    Ok(simulate_stream(length, seed, 0))
}

/// `samples` sequences; sample `j` reads stream `j`. Output order and
/// values do not depend on the thread count.
pub fn simulate_batch(length: u64, samples: u64, seed: u64) -> Result<Vec<RatioSample>> {
    if length == 0 || samples == 0 {
        return Err(Error::Precondition("length and samples must be at least 1".into()));
    }
    Ok((0..samples)
        .into_par_iter()
        .map(|j| simulate_stream(length, seed, j))
        .collect())
}

/// Batch aggregates, reduced in sample order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub samples: usize,
    pub mean_xi: f64,
    pub std_xi: f64,
    pub mean_indicator_std: f64,
}

pub fn summarize_batch(batch: &[RatioSample]) -> Result<BatchSummary> {
    let xi: Vec<f64> = batch.iter().map(|s| s.xi).collect();
    let stats = SampleStats::from_values(&xi, ConfidenceLevel::P95)?;
    Ok(BatchSummary {
        samples: batch.len(),
        mean_xi: stats.mean,
        std_xi: stats.std,
        mean_indicator_std: batch.iter().map(|s| s.indicator_std).sum::<f64>() / batch.len() as f64,
    })
}

/// A row of the published 14-sample table: `ξ`, `1+ξ`, `s`, `2^{1+ξ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub sample: u32,
    pub xi: f64,
    pub one_plus_xi: f64,
    pub s: f64,
    pub chi: f64,
}

const fn row(sample: u32, xi: f64, one_plus_xi: f64, s: f64, chi: f64) -> PublishedRow {
    PublishedRow {
        sample,
        xi,
        one_plus_xi,
        s,
        chi,
    }
}

/// The published table for sequences of length 100, decimal commas
/// normalized to points.
pub const PUBLISHED_TABLE: [PublishedRow; 14] = [
    row(1, 0.7241, 1.7241, 0.4960, 3.3038),
    row(2, 1.0833, 2.0833, 0.5021, 4.2379),
    row(3, 1.1277, 2.1277, 0.5016, 4.3701),
    row(4, 1.0833, 2.0833, 0.5021, 4.2379),
    row(5, 1.3256, 2.3256, 0.4976, 5.0127),
    row(6, 0.7857, 1.7857, 0.4989, 3.4479),
    row(7, 1.0833, 2.0833, 0.5021, 4.2379),
    row(8, 1.0833, 2.0833, 0.5021, 4.2379),
    row(9, 1.8571, 2.8571, 0.4794, 7.2458),
    row(10, 0.8519, 1.8519, 0.5009, 3.6096),
    row(11, 1.0408, 2.0408, 0.5024, 4.1148),
    row(12, 0.9231, 1.9231, 0.5021, 3.7923),
    row(13, 0.9608, 1.9608, 0.5024, 3.8927),
    row(14, 1.1739, 2.1739, 0.5009, 4.5125),
];

/// The published bounds, which appear under both the `μ = E(1+ξ)` and the
/// `χ = 2^μ` headings.
pub const PUBLISHED_INTERVALS: [(ConfidenceLevel, f64, f64); 3] = [
    (ConfidenceLevel::P95, 3.8953, 4.9174),
    (ConfidenceLevel::P98, 3.7794, 5.0333),
    (ConfidenceLevel::P99, 3.6938, 5.1189),
];

/// Recomputation of the published intervals from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub level: ConfidenceLevel,
    pub one_plus_xi: SampleStats,
    pub chi_column: SampleStats,
    /// Interval for `μ = E(1+ξ)`.
    pub mu_normal: (f64, f64),
    pub mu_t: (f64, f64),
    /// `2^μ` bounds from the `μ` intervals.
    pub chi_from_mu_normal: (f64, f64),
    pub chi_from_mu_t: (f64, f64),
    /// Intervals built directly on the `2^{1+ξ}` column.
    pub chi_column_normal: (f64, f64),
    pub chi_column_t: (f64, f64),
    pub published: (f64, f64),
    /// Whether the published bounds, read as a `μ` interval, contain the
    /// sample mean of the `1+ξ` column.
    pub published_contains_mu_mean: bool,
    /// Whether the published bounds, read as a `χ` interval, contain `2^{mean}`.
    pub published_contains_chi_of_mean: bool,
}

impl FixtureReport {
    /// Human-readable notes on where the recomputation and the published
    /// bounds disagree.
    pub fn discrepancies(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let (lo, hi) = self.published;
        if !self.published_contains_mu_mean {
            notes.push(format!(
                "published {}% bounds [{lo}, {hi}] do not contain the 1+xi sample mean {:.4}; \
                 they cannot be an interval for mu = E(1+xi)",
                self.level.percent(),
                self.one_plus_xi.mean
            ));
        }
        let close = |a: (f64, f64)| (a.0 - lo).abs() < 5e-4 && (a.1 - hi).abs() < 5e-4;
        if ![self.chi_from_mu_normal, self.chi_from_mu_t, self.chi_column_normal, self.chi_column_t]
            .into_iter()
            .any(close)
        {
            notes.push(format!(
                "no recomputed chi interval matches the published {}% bounds [{lo}, {hi}] to 4 decimals \
                 (2^mu normal [{:.4}, {:.4}], 2^mu t [{:.4}, {:.4}], chi column normal [{:.4}, {:.4}], \
                 chi column t [{:.4}, {:.4}])",
                self.level.percent(),
                self.chi_from_mu_normal.0,
                self.chi_from_mu_normal.1,
                self.chi_from_mu_t.0,
                self.chi_from_mu_t.1,
                self.chi_column_normal.0,
                self.chi_column_normal.1,
                self.chi_column_t.0,
                self.chi_column_t.1,
            ));
        }
        notes
    }
}

/// Recomputes `μ` and `χ` intervals from [`PUBLISHED_TABLE`].
pub fn fixture_report(level: ConfidenceLevel) -> FixtureReport {
    let one_plus_xi: Vec<f64> = PUBLISHED_TABLE.iter().map(|r| r.one_plus_xi).collect();
    let chi: Vec<f64> = PUBLISHED_TABLE.iter().map(|r| r.chi).collect();
    let mu = SampleStats::from_values(&one_plus_xi, level).expect("14 values");
    let chi_stats = SampleStats::from_values(&chi, level).expect("14 values");
    let interval = |s: &SampleStats, m| confidence_interval(s, m).expect("valid stats");
    let exp = |(lo, hi): (f64, f64)| exponentiate_interval(lo, hi).expect("ordered");

    let mu_normal = interval(&mu, IntervalMode::Normal);
    let mu_t = interval(&mu, IntervalMode::StudentT);
    let published = PUBLISHED_INTERVALS
        .iter()
        .find(|(l, _, _)| *l == level)
        .map(|&(_, lo, hi)| (lo, hi))
        .expect("every level is published");
    let chi_of_mean = mu.mean.exp2();
    FixtureReport {
        level,
        chi_from_mu_normal: exp(mu_normal),
        chi_from_mu_t: exp(mu_t),
        chi_column_normal: interval(&chi_stats, IntervalMode::Normal),
        chi_column_t: interval(&chi_stats, IntervalMode::StudentT),
        mu_normal,
        mu_t,
        published_contains_mu_mean: published.0 <= mu.mean && mu.mean <= published.1,
        published_contains_chi_of_mean: published.0 <= chi_of_mean && chi_of_mean <= published.1,
        published,
        one_plus_xi: mu,
        chi_column: chi_stats,
    }
}

/// Upper bound `((3x0 + 1)/4) · (4 / 2^{k̄})^{n+1}` for the odd value
/// `x_{n+1}`, kept in exact form `C / 2^E` with `C = (3x0 + 1) · 4^n` and
/// `E = (n + 1) k̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftBound {
    pub numerator: Natural,
    pub exponent: BigRational,
}

impl DriftBound {
    /// The bound as a rational when `E` is an integer.
    pub fn exact_value(&self) -> Option<BigRational> {
        if !self.exponent.is_integer() {
            return None;
        }
        let e = self.exponent.to_integer().to_u64()?;
        Some(BigRational::new(
            BigInt::from(self.numerator.clone()),
            BigInt::from(BigUint::one() << e),
        ))
    }

    /// Display value.
    pub fn to_f64(&self) -> f64 {
        let e = self.exponent.numer().to_f64().unwrap_or(f64::INFINITY)
            / self.exponent.denom().to_f64().unwrap_or(1.0);
        let bits = self.numerator.bits() as f64;
        // Scale down before converting so huge numerators stay finite.
        let shift = (bits - 1000.0).max(0.0) as u64;
        let head = (&self.numerator >> shift).to_f64().unwrap_or(f64::INFINITY);
        head * (shift as f64 - e).exp2()
    }

    /// `bound ≥ actual`, decided by `C^q ≥ actual^q · 2^p` with `E = p/q`.
    pub fn dominates(&self, actual: &Natural) -> bool {
        let p = self.exponent.numer().to_u64().expect("exponent fits in u64");
        let q = self.exponent.denom().to_u32().expect("denominator fits in u32");
        let lhs: Natural = Pow::pow(&self.numerator, q);
        let rhs: Natural = Pow::pow(actual, q) << p;
        lhs >= rhs
    }
}

/// The drift bound for `x_{n+1}` given the mean exponent `k̄` of the first
/// `n + 1` odd steps.
pub fn drift_bound(x0: &Natural, n: u64, mean_k: &BigRational) -> Result<DriftBound> {
    if mean_k.is_negative() {
        return Err(Error::Precondition(format!("mean exponent must be non-negative, got {mean_k}")));
    }
    let numerator = (x0 * 3u32 + 1u32) << (2 * n);
    let exponent = mean_k * BigRational::from_integer(BigInt::from(n + 1));
    Ok(DriftBound {
        numerator,
        exponent,
    })
}

/// Checks the drift bound at every index of the odd trajectory of `x0`.
/// Returns the number of indices checked, or the first `n` where the bound
/// falls below `x_{n+1}`.
pub fn drift_bound_along(x0: &Natural, max_steps: u64) -> Result<std::result::Result<usize, u64>> {
    let (traj, exps) = dynamics::trajectory_odd(x0, max_steps)?;
    let v = exps.prefix_sums();
    for n in 0..exps.len() {
        let mean_k = BigRational::new(BigInt::from(v[n + 1]), BigInt::from(n as u64 + 1));
        if !drift_bound(x0, n as u64, &mean_k)?.dominates(&traj.values[n + 1]) {
            return Ok(Err(n as u64));
        }
    }
    Ok(Ok(exps.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingProfile {
    pub x: Natural,
    /// First `k` with `T^k(x) < x`.
    pub stopping_time: Option<u64>,
    /// First `k` with `T^k(x) = 1`.
    pub total_stopping_time: Option<u64>,
    /// The orbit reached 1 within the budget.
    pub complete: bool,
}

impl StoppingProfile {
    /// `total_stopping_time / ln x` for `x ≥ 2`.
    pub fn ratio(&self) -> Option<f64> {
        if self.x < Natural::from(2u32) {
            return None;
        }
        let ln = ln_natural(&self.x);
        self.total_stopping_time.map(|t| t as f64 / ln)
    }
}

fn ln_natural(x: &Natural) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Stopping measures of `x` under the general map.
pub fn stopping_profile(x: &Natural, max_steps: u64) -> Result<StoppingProfile> {
    let traj = dynamics::trajectory_general(x, max_steps)?;
    let stopping_time = traj
        .values
        .iter()
        .position(|v| v < x)
        .map(|i| i as u64);
    let complete = traj.terminated == dynamics::Termination::ReachedOne;
    Ok(StoppingProfile {
        x: x.clone(),
        stopping_time,
        total_stopping_time: complete.then_some(traj.step_count() as u64),
        complete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSurvey {
    pub limit: u64,
    pub max_ratio: f64,
    pub argmax: u64,
    pub reference: f64,
}

/// Largest `total_stopping_time / ln x` over `2 ≤ x ≤ limit`.
pub fn ratio_survey(limit: u64) -> Result<RatioSurvey> {
    if limit < 2 {
        return Err(Error::Precondition("ratio survey needs limit ≥ 2".into()));
    }
    let report = sweep::sweep_to_one(limit, DEFAULT_MAX_STEPS)?;
    let max_ratio = report
        .max_ratio
        .ok_or_else(|| Error::Precondition("no start in range reached 1".into()))?;
    Ok(RatioSurvey {
        limit,
        max_ratio,
        argmax: report.max_ratio_at,
        reference: TOTAL_STOPPING_REFERENCE,
    })
}

/// The `x` with `c · ln x = total`: the largest start the reference bound
/// allows for a given total stopping time.
pub fn reference_start_for_total(total: f64) -> f64 {
    (total / TOTAL_STOPPING_REFERENCE).exp()
}
