//! Odd `an+b` maps: trajectories, cycles, the closed form and growth
//! diagnostics.
//!
//! The odd map sends odd `x` to the odd part of `a·x + b`. The matching
//! general map halves evens and sends odds to `(a·x + b) / 2`; it is used
//! for the residue-class shift law, with `T(0) = 0` as in
//! [`crate::identities`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, AnbParams, Natural, ParityExponents, StepKind, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::identities::{ClosedForm, Lemma7Outcome, ResidueClass};

/// Odd trajectory of an `an+b` map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnbTrajectory {
    pub params: AnbParams,
    pub trajectory: Trajectory,
    pub exponents: ParityExponents,
    /// For [`Termination::ReachedCycle`], the index of the first occurrence
    /// of the repeated (final) value.
    pub cycle_entry: Option<usize>,
}

/// Iterates the odd `an+b` map from odd `x0` until a value repeats or
/// `max_steps` steps are taken. The repeated value is appended, so a
/// trajectory entering `[13, 33, 83]` ends `…, 13, 33, 83, 13`.
pub fn trajectory_anb(x0: &Natural, params: AnbParams, max_steps: u64) -> Result<AnbTrajectory> {
    if x0.is_zero() || !dynamics::is_odd(x0) {
        return Err(Error::Domain(format!(
            "odd {params} trajectories start at an odd positive value, got {x0}"
        )));
    }
    let mut seen: HashMap<Natural, usize> = HashMap::new();
    seen.insert(x0.clone(), 0);
    let mut trajectory = Trajectory {
        start: x0.clone(),
        values: vec![x0.clone()],
        steps: Vec::new(),
        terminated: Termination::StepLimit,
    };
    let mut exponents = ParityExponents::new();
    let mut cycle_entry = None;

    for _ in 0..max_steps {
        let current = trajectory.values.last().unwrap();
        let (next, k) = dynamics::step_anb(current, &params)?;
        let kind = StepKind::between(current, &next);
        exponents.push(k);
        trajectory.steps.push(kind);
        if let Some(&first) = seen.get(&next) {
            trajectory.values.push(next);
            trajectory.terminated = Termination::ReachedCycle;
            cycle_entry = Some(first);
            break;
        }
        seen.insert(next.clone(), trajectory.values.len());
        trajectory.values.push(next);
    }

    Ok(AnbTrajectory {
        params,
        trajectory,
        exponents,
        cycle_entry,
    })
}

/// A cycle of the odd map, rotated so the smallest member comes first.
/// `exponents[j]` is the `k` of the step leaving `members[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleRecord {
    pub params: AnbParams,
    pub members: Vec<Natural>,
    pub exponents: Vec<u64>,
}

impl CycleRecord {
    /// Rotates `members` (and the aligned `exponents`) to start at the
    /// smallest member.
    pub fn canonical(params: AnbParams, members: Vec<Natural>, exponents: Vec<u64>) -> Result<Self> {
        if members.is_empty() || members.len() != exponents.len() {
            return Err(Error::Precondition(
                "a cycle needs as many exponents as members, and at least one".into(),
            ));
        }
        let pivot = members
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let mut members = members;
        let mut exponents = exponents;
        members.rotate_left(pivot);
        exponents.rotate_left(pivot);
        Ok(CycleRecord {
            params,
            members,
            exponents,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `(2^{Σk} · Π members, Π (a·member + b))`.
    pub fn product_sides(&self) -> (Natural, Natural) {
        let total: u64 = self.exponents.iter().sum();
        let members: Natural = self.members.iter().product();
        let images: Natural = self.members.iter().map(|m| self.params.affine(m)).product();
        (members << total as usize, images)
    }

    /// `2^{Σk} · Π members − Π (a·member + b)`; zero for a genuine cycle.
    pub fn product_residue(&self) -> BigInt {
        let (lhs, rhs) = self.product_sides();
        BigInt::from(lhs) - BigInt::from(rhs)
    }

    /// Both the product identity and step-by-step closure around the cycle.
    pub fn verify(&self) -> bool {
        if self.product_residue() != BigInt::zero() {
            return false;
        }
        let n = self.members.len();
        (0..n).all(|j| match dynamics::step_anb(&self.members[j], &self.params) {
            Ok((next, k)) => next == self.members[(j + 1) % n] && k == self.exponents[j],
            Err(_) => false,
        })
    }
}

/// The cycle `x0` falls into within `max_steps`, or `None` (inconclusive).
pub fn find_cycle(x0: &Natural, params: AnbParams, max_steps: u64) -> Result<Option<CycleRecord>> {
    let run = trajectory_anb(x0, params, max_steps)?;
    cycle_of(&run).transpose()
}

fn cycle_of(run: &AnbTrajectory) -> Option<Result<CycleRecord>> {
    let entry = run.cycle_entry?;
    let values = &run.trajectory.values;
    let members = values[entry..values.len() - 1].to_vec();
    let exponents = run.exponents.exponents()[entry..].to_vec();
    Some(CycleRecord::canonical(run.params, members, exponents))
}

/// Cycles reached from a set of starts, deduplicated by canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCatalog {
    pub params: AnbParams,
    /// Ascending by smallest member.
    pub cycles: Vec<CycleRecord>,
    /// Number of starts that led to each cycle, aligned with `cycles`.
    pub basin_counts: Vec<u64>,
    /// Starts with no cycle within the step budget.
    pub inconclusive: Vec<Natural>,
}

/// Runs every odd start through [`find_cycle`] in parallel and merges the
/// per-start results by canonical form.
pub fn cycle_catalog(params: AnbParams, starts: &[Natural], max_steps: u64) -> Result<CycleCatalog> {
    let found: Vec<Option<CycleRecord>> = starts
        .par_iter()
        .map(|x| find_cycle(x, params, max_steps))
        .collect::<Result<_>>()?;
    let mut registry: BTreeMap<Vec<Natural>, (CycleRecord, u64)> = BTreeMap::new();
    let mut inconclusive = Vec::new();
    for (start, cycle) in starts.iter().zip(found) {
        match cycle {
            Some(c) => registry.entry(c.members.clone()).or_insert((c, 0)).1 += 1,
            None => inconclusive.push(start.clone()),
        }
    }
    let mut entries: Vec<(CycleRecord, u64)> = registry.into_values().collect();
    entries.sort_by(|a, b| a.0.members[0].cmp(&b.0.members[0]).then(a.0.len().cmp(&b.0.len())));
    let (cycles, basin_counts) = entries.into_iter().unzip();
    Ok(CycleCatalog {
        params,
        cycles,
        basin_counts,
        inconclusive,
    })
}

fn pow_nat(base: u64, e: u64) -> Natural {
    Pow::pow(BigUint::from(base), e)
}

/// The exponent side `a^n x0 + b Σ_{r=1}^{n} a^{n−r} 2^{v_{r−1}}`.
pub fn closed_form_anb_rhs(x0: &Natural, params: AnbParams, prefix_sums: &[u64], n: usize) -> Natural {
    let (a, b) = (params.a(), params.b());
    let mut sum = Natural::zero();
    for r in 1..=n {
        sum += pow_nat(a, (n - r) as u64) * (BigUint::one() << prefix_sums[r - 1]);
    }
    pow_nat(a, n as u64) * x0 + sum * b
}

/// Checks `T^n(x0) · 2^{Σk} = a^n x0 + b Σ_{r=1}^{n} a^{n−r} 2^{Σ_{i<r} k_i}`.
/// The odd map is applied `n` times regardless of cycles.
pub fn closed_form_anb_check(x0: &Natural, params: AnbParams, n: usize) -> Result<ClosedForm> {
    if x0.is_zero() || !dynamics::is_odd(x0) {
        return Err(Error::Domain(format!("need an odd positive start, got {x0}")));
    }
    let mut value = x0.clone();
    let mut exps = ParityExponents::new();
    for _ in 0..n {
        let (next, k) = dynamics::step_anb(&value, &params)?;
        value = next;
        exps.push(k);
    }
    closed_form_anb_along(x0, params, &value, &exps, n)
}

/// Same check given `T^n(x0)` and the exponents of the first `n` (or more)
/// steps; fails when fewer than `n` exponents are supplied.
pub fn closed_form_anb_along(
    x0: &Natural,
    params: AnbParams,
    value_n: &Natural,
    exps: &ParityExponents,
    n: usize,
) -> Result<ClosedForm> {
    if exps.len() < n {
        return Err(Error::Precondition(format!(
            "trajectory has {} steps, {n} needed",
            exps.len()
        )));
    }
    let lhs = value_n << exps.prefix_sums()[n] as usize;
    let rhs = closed_form_anb_rhs(x0, params, exps.prefix_sums(), n);
    Ok(ClosedForm {
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

/// General `an+b` step: `x/2` on evens, `(a·x + b)/2` on odds, `T(0) = 0`.
pub fn step_general_anb(x: &Natural, params: AnbParams) -> (Natural, StepKind) {
    if x.is_zero() {
        return (Natural::zero(), StepKind::Decrease);
    }
    if dynamics::is_odd(x) {
        (params.affine(x) >> 1u32, StepKind::Increase)
    } else {
        (x >> 1u32, StepKind::Decrease)
    }
}

/// Residue-class shift law `T^k(2^k m + i) = a^{p_k} m + T^k(i)` for the
/// general `an+b` map.
pub fn lemma7_anb_check(class: &ResidueClass, m: &Natural, params: AnbParams) -> Lemma7Outcome {
    let k = class.modulus_exponent();
    let mut lhs = class.member(m);
    for _ in 0..k {
        lhs = step_general_anb(&lhs, params).0;
    }
    let mut right = class.residue().clone();
    let mut increases = 0u32;
    for _ in 0..k {
        let (next, kind) = step_general_anb(&right, params);
        increases += (kind == StepKind::Increase) as u32;
        right = next;
    }
    let rhs = pow_nat(params.a(), increases as u64) * m + right;
    Lemma7Outcome {
        holds: lhs == rhs,
        lhs,
        rhs,
        increases,
    }
}

/// Horizon-bounded label. Divergence is never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthLabel {
    /// A cycle was entered within the horizon.
    BoundedOrCyclic,
    /// No cycle within the horizon.
    UnboundedWithinHorizon,
}

impl GrowthLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthLabel::BoundedOrCyclic => "bounded-or-cyclic",
            GrowthLabel::UnboundedWithinHorizon => "unbounded-within-horizon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceDiagnostic {
    pub params: AnbParams,
    pub start: Natural,
    pub steps_taken: u64,
    pub last: Natural,
    pub peak: Natural,
    /// `Σ k` over the steps taken.
    pub exponent_sum: u64,
    /// `bits(last) − bits(start)`.
    pub bit_growth: i64,
    /// `bit_growth / steps_taken`, exact.
    pub drift: Option<BigRational>,
    /// Sign of `n·log2(a) − Σk`, decided exactly as `a^n` vs `2^{Σk}`.
    pub exponent_drift_sign: Ordering,
    pub label: GrowthLabel,
    pub cycle: Option<CycleRecord>,
}

impl DivergenceDiagnostic {
    /// `(n·log2(a) − Σk) / n` in floating point; display only.
    pub fn drift_estimate(&self) -> Option<f64> {
        (self.steps_taken > 0).then(|| {
            let n = self.steps_taken as f64;
            (n * (self.params.a() as f64).log2() - self.exponent_sum as f64) / n
        })
    }
}

pub fn divergence_report(x0: &Natural, params: AnbParams, horizon: u64) -> Result<DivergenceDiagnostic> {
    let run = trajectory_anb(x0, params, horizon)?;
    let steps_taken = run.exponents.len() as u64;
    let last = run.trajectory.values.last().unwrap().clone();
    let peak = run.trajectory.values.iter().max().unwrap().clone();
    let exponent_sum = run.exponents.total();
    let bit_growth = last.bits() as i64 - x0.bits() as i64;
    let drift = (steps_taken > 0)
        .then(|| BigRational::new(bit_growth.into(), (steps_taken as i64).into()));
    let exponent_drift_sign = pow_nat(params.a(), steps_taken).cmp(&(BigUint::one() << exponent_sum));
    let cycle = cycle_of(&run).transpose()?;
    let label = if cycle.is_some() {
        GrowthLabel::BoundedOrCyclic
    } else {
        GrowthLabel::UnboundedWithinHorizon
    };
    Ok(DivergenceDiagnostic {
        params,
        start: x0.clone(),
        steps_taken,
        last,
        peak,
        exponent_sum,
        bit_growth,
        drift,
        exponent_drift_sign,
        label,
        cycle,
    })
}
