//! The general (shortcut) Collatz map, the odd-to-odd map and trajectories.
//!
//! The general map is
//!
//! ```text
//! T(x) = x / 2          x even
//! T(x) = (3x + 1) / 2   x odd
//! ```
//!
//! Under this map a step increases the value exactly when the value is odd,
//! so every step is either an [`StepKind::Increase`] or a
//! [`StepKind::Decrease`]; `T(x) = x` never happens for `x ≥ 1`.
//!
//! The odd map sends an odd `x` to the odd part of `3x + 1`, recording the
//! number `k` of halvings. Iterating it produces the chain
//! `3 T^{i-1} + 1 = 2^{k_i} T^i`, whose exponents are collected in
//! [`ParityExponents`].

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative integer.
pub type Natural = BigUint;

/// Step budget used when the caller does not pick one.
pub const DEFAULT_MAX_STEPS: u64 = 100_000;

/// Direction of a single step.
///
/// `Stationary` only occurs for odd `an+b` maps at a fixed point, e.g. the
/// `7n+1` map at 1 (`7 + 1 = 2^3 · 1`). The `3n+1` general map never
/// produces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Increase,
    Decrease,
    Stationary,
}

impl StepKind {
    /// Classifies the step `from → to` by comparing the two values.
    pub fn between(from: &Natural, to: &Natural) -> StepKind {
        match to.cmp(from) {
            std::cmp::Ordering::Greater => StepKind::Increase,
            std::cmp::Ordering::Less => StepKind::Decrease,
            std::cmp::Ordering::Equal => StepKind::Stationary,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Increase => "increase",
            StepKind::Decrease => "decrease",
            StepKind::Stationary => "stationary",
        }
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedOne,
    ReachedCycle,
    StepLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedOne => "reached_one",
            Termination::ReachedCycle => "reached_cycle",
            Termination::StepLimit => "step_limit",
        }
    }
}

/// An orbit prefix together with the kind of every step taken.
///
/// `values[0] == start` and `steps.len() == values.len() - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start: Natural,
    pub values: Vec<Natural>,
    pub steps: Vec<StepKind>,
    pub terminated: Termination,
}

impl Trajectory {
    fn begin(start: Natural) -> Self {
        Trajectory {
            values: vec![start.clone()],
            start,
            steps: Vec::new(),
            terminated: Termination::StepLimit,
        }
    }

    fn push(&mut self, next: Natural, kind: StepKind) {
        self.values.push(next);
        self.steps.push(kind);
    }

    pub fn last(&self) -> &Natural {
        self.values.last().expect("trajectory always holds its start")
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }
}

/// The exponents `k_1, …, k_n` of an odd trajectory and their prefix sums
/// `v_0 = 0, v_r = k_1 + … + k_r`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParityExponents {
    exponents: Vec<u64>,
    prefix_sums: Vec<u64>,
}

impl ParityExponents {
    pub fn new() -> Self {
        ParityExponents {
            exponents: Vec::new(),
            prefix_sums: vec![0],
        }
    }

    /// Builds the exponent record from a list of `k_i`, each of which must be
    /// at least 1.
    pub fn from_exponents(exponents: &[u64]) -> Result<Self> {
        let mut out = ParityExponents::new();
        for &k in exponents {
            if k == 0 {
                return Err(Error::Precondition(
                    "division exponents must be positive".into(),
                ));
            }
            out.push(k);
        }
        Ok(out)
    }

    pub(crate) fn push(&mut self, k: u64) {
        debug_assert!(k >= 1);
        let last = *self.prefix_sums.last().unwrap();
        self.exponents.push(k);
        self.prefix_sums.push(last + k);
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    /// `v_0, v_1, …, v_n`; always one longer than [`Self::exponents`].
    pub fn prefix_sums(&self) -> &[u64] {
        &self.prefix_sums
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// `v_n`, the total number of halvings.
    pub fn total(&self) -> u64 {
        *self.prefix_sums.last().unwrap()
    }

    /// `k̄ = v_n / n`, or `None` for an empty record.
    pub fn mean_k(&self) -> Option<BigRational> {
        if self.exponents.is_empty() {
            return None;
        }
        Some(BigRational::new(
            self.total().into(),
            (self.exponents.len() as u64).into(),
        ))
    }
}

/// Parameters of an odd `an+b` map. Both must be odd so that `ax + b` is
/// even for odd `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnbParams {
    a: u64,
    b: u64,
}

impl AnbParams {
    /// The `3n+1` map.
    pub const COLLATZ: AnbParams = AnbParams { a: 3, b: 1 };

    pub fn new(a: u64, b: u64) -> Result<Self> {
        if a < 3 || a % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "a must be odd and at least 3, got {a}"
            )));
        }
        if b == 0 || b % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "b must be odd and at least 1, got {b}"
            )));
        }
        Ok(AnbParams { a, b })
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    /// `a·x + b`.
    pub fn affine(&self, x: &Natural) -> Natural {
        x * self.a + self.b
    }
}

impl std::fmt::Display for AnbParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}n+{}", self.a, self.b)
    }
}

pub(crate) fn is_odd(x: &Natural) -> bool {
    x.is_odd()
}

/// Splits `y > 0` into `(y / 2^k, k)` with an odd quotient.
pub(crate) fn strip_twos(y: Natural) -> (Natural, u64) {
    let k = y.trailing_zeros().expect("value is nonzero");
    (y >> k, k)
}

/// One step of the general map.
pub fn step_general(x: &Natural) -> Result<(Natural, StepKind)> {
    if x.is_zero() {
        return Err(Error::Domain("the general map is undefined at 0".into()));
    }
    if is_odd(x) {
        let y: Natural = ((x << 1u32) + x + 1u32) >> 1u32;
        Ok((y, StepKind::Increase))
    } else {
        Ok((x >> 1u32, StepKind::Decrease))
    }
}

/// One step of the odd map: the odd part of `3x + 1` and the number of
/// halvings removed.
pub fn step_odd(x: &Natural) -> Result<(Natural, u64)> {
    if x.is_zero() || !is_odd(x) {
        return Err(Error::Domain(format!(
            "the odd map needs an odd positive value, got {x}"
        )));
    }
    Ok(strip_twos((x << 1u32) + x + 1u32))
}

/// One step of the odd `an+b` map.
pub fn step_anb(x: &Natural, params: &AnbParams) -> Result<(Natural, u64)> {
    if x.is_zero() || !is_odd(x) {
        return Err(Error::Domain(format!(
            "the odd {params} map needs an odd positive value, got {x}"
        )));
    }
    Ok(strip_twos(params.affine(x)))
}

/// Iterates the general map from `x0` until it reaches 1 or takes
/// `max_steps` steps.
pub fn trajectory_general(x0: &Natural, max_steps: u64) -> Result<Trajectory> {
    if x0.is_zero() {
        return Err(Error::Domain("trajectories start at a positive value".into()));
    }
    let mut traj = Trajectory::begin(x0.clone());
    let mut taken = 0u64;
    loop {
        if traj.last().is_one() {
            traj.terminated = Termination::ReachedOne;
            break;
        }
        if taken == max_steps {
            break;
        }
        let (next, kind) = step_general(traj.last())?;
        traj.push(next, kind);
        taken += 1;
    }
    Ok(traj)
}

/// Iterates the odd map from an odd `x0` until it reaches 1 or takes
/// `max_steps` steps. Step kinds compare consecutive odd values.
pub fn trajectory_odd(x0: &Natural, max_steps: u64) -> Result<(Trajectory, ParityExponents)> {
    if x0.is_zero() || !is_odd(x0) {
        return Err(Error::Domain(format!(
            "odd trajectories start at an odd positive value, got {x0}"
        )));
    }
    let mut traj = Trajectory::begin(x0.clone());
    let mut exps = ParityExponents::new();
    let mut taken = 0u64;
    loop {
        if traj.last().is_one() {
            traj.terminated = Termination::ReachedOne;
            break;
        }
        if taken == max_steps {
            break;
        }
        let (next, k) = step_odd(traj.last())?;
        let kind = StepKind::between(traj.last(), &next);
        traj.push(next, kind);
        exps.push(k);
        taken += 1;
    }
    Ok((traj, exps))
}

/// Applies the odd map exactly `n` times without stopping at 1 (1 is a fixed
/// point with `k = 2`). Returns the `n + 1` visited values and the exponents.
pub fn odd_orbit_prefix(x0: &Natural, n: usize) -> Result<(Vec<Natural>, ParityExponents)> {
    if x0.is_zero() || !is_odd(x0) {
        return Err(Error::Domain(format!(
            "the odd map needs an odd positive value, got {x0}"
        )));
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(x0.clone());
    let mut exps = ParityExponents::new();
    for _ in 0..n {
        let (next, k) = step_odd(values.last().unwrap())?;
        values.push(next);
        exps.push(k);
    }
    Ok((values, exps))
}

/// `(increases, decreases)` over the steps of `t`.
pub fn classify_counts(t: &Trajectory) -> (usize, usize) {
    t.steps.iter().fold((0, 0), |(up, down), kind| match kind {
        StepKind::Increase => (up + 1, down),
        StepKind::Decrease => (up, down + 1),
        StepKind::Stationary => (up, down),
    })
}

/// Relation between the halving exponents of an odd trajectory and the
/// step counts of the matching general trajectory.
///
/// For an odd trajectory with `n` steps, the general trajectory between the
/// same endpoints has `n` increases and `D` decreases, and
/// `Σ k_i = n + D` exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentBookkeeping {
    pub odd_steps: u64,
    pub exponent_sum: u64,
    pub general_increases: u64,
    pub general_decreases: u64,
}

impl ExponentBookkeeping {
    /// `Σ k − (n + D)`; zero whenever the shortcut/odd correspondence holds.
    pub fn offset(&self) -> i64 {
        self.exponent_sum as i64 - (self.odd_steps + self.general_decreases) as i64
    }

    /// `Σ k − (n + D − 1)`, the residual against the off-by-one form
    /// `Σ k = n + D − 1`.
    pub fn offset_from_minus_one_form(&self) -> i64 {
        self.offset() + 1
    }
}

/// Runs both the odd and the general trajectory of odd `x0` to 1 and
/// tallies the quantities that link them.
pub fn exponent_bookkeeping(x0: &Natural, max_steps: u64) -> Result<ExponentBookkeeping> {
    let (odd, exps) = trajectory_odd(x0, max_steps)?;
    if odd.terminated != Termination::ReachedOne {
        return Err(Error::Precondition(format!(
            "odd trajectory of {x0} did not reach 1 within {max_steps} steps"
        )));
    }
    let general = trajectory_general(x0, max_steps.saturating_mul(64))?;
    let (up, down) = classify_counts(&general);
    Ok(ExponentBookkeeping {
        odd_steps: exps.len() as u64,
        exponent_sum: exps.total(),
        general_increases: up as u64,
        general_decreases: down as u64,
    })
}
