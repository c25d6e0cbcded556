//! Increase/decrease tallies over `Γ_M = {1, …, 2^M}`.
//!
//! For every step `n ≤ M − 1` exactly `2^{M−1}` elements of `Γ_M` take an
//! increase step and `2^{M−1}` a decrease step. Two routes compute the
//! tallies:
//!
//! * direct: every element is iterated `M` steps (the oracle);
//! * residue: the kind of step `n` depends only on `x mod 2^n`, and the
//!   class `i + 2^n` is reached from `i` by adding `3^{p_n}` to `T^n(i)`.
//!   Walking the binary tree of classes counts each class once and scales
//!   by its size `2^{M−n}`.
//!
//! Steps `M` and `M + 1` are reported too, flagged as outside the guaranteed
//! range. Step `M` still splits evenly because `Γ_M` holds one element of
//! every class mod `2^M`; step `M + 1` generally does not.

use rayon::prelude::*;

use crate::dynamics::{Natural, StepKind};
use crate::error::{Error, Result};
use crate::identities::ResidueClass;

/// `Γ_M`, never materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaSet {
    m: u32,
}

impl GammaSet {
    pub fn new(m: u32) -> Result<Self> {
        if !(1..=63).contains(&m) {
            return Err(Error::Precondition(format!("M must lie in 1..=63, got {m}")));
        }
        Ok(GammaSet { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn last(&self) -> u64 {
        1u64 << self.m
    }

    pub fn cardinality(&self) -> u64 {
        self.last()
    }
}

/// Tally for one step index (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepTally {
    pub step: u32,
    pub increases: u64,
    pub decreases: u64,
    /// `step ≤ M − 1`.
    pub within_theorem: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSplitReport {
    pub m: u32,
    /// Steps `1..=M + 1`, in order.
    pub steps: Vec<StepTally>,
    /// Disjoint inclusive element intervals covered, ascending.
    pub covered: Vec<(u64, u64)>,
}

impl HalfSplitReport {
    fn zeroed(m: u32, covered: Vec<(u64, u64)>) -> Self {
        HalfSplitReport {
            m,
            steps: (1..=m + 1)
                .map(|step| StepTally {
                    step,
                    increases: 0,
                    decreases: 0,
                    within_theorem: step < m,
                })
                .collect(),
            covered,
        }
    }

    pub fn elements(&self) -> u64 {
        self.covered.iter().map(|(lo, hi)| hi - lo + 1).sum()
    }

    pub fn is_full(&self) -> bool {
        self.covered == [(1, 1u64 << self.m)]
    }

    /// Component-wise sum with a report over a disjoint range.
    pub fn merge(mut self, other: &HalfSplitReport) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::Precondition(format!(
                "cannot merge reports for M = {} and M = {}",
                self.m, other.m
            )));
        }
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            a.increases += b.increases;
            a.decreases += b.decreases;
        }
        self.covered.extend_from_slice(&other.covered);
        self.covered.sort_unstable();
        if self.covered.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(Error::Precondition("merged ranges overlap".into()));
        }
        // Coalesce adjacent intervals.
        let mut joined: Vec<(u64, u64)> = Vec::with_capacity(self.covered.len());
        for (lo, hi) in self.covered.drain(..) {
            match joined.last_mut() {
                Some(last) if last.1 + 1 == lo => last.1 = hi,
                _ => joined.push((lo, hi)),
            }
        }
        self.covered = joined;
        Ok(self)
    }

    /// Every in-range step of a full report has `2^{M−1}` of each kind.
    pub fn is_exact_half(&self) -> bool {
        let half = 1u64 << (self.m - 1);
        self.is_full()
            && self
                .steps
                .iter()
                .filter(|t| t.within_theorem)
                .all(|t| t.increases == half && t.decreases == half)
    }

    /// First in-range step whose counts are not an exact half, if any.
    pub fn first_mismatch(&self) -> Option<StepTally> {
        let half = 1u64 << (self.m - 1);
        self.steps
            .iter()
            .filter(|t| t.within_theorem)
            .find(|t| t.increases != half || t.decreases != half)
            .copied()
    }
}

/// Work budget for [`halfsplit_verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfSplitLimits {
    /// Largest element count the direct route will iterate, as `log2`.
    pub direct_max_log2: u32,
    /// Largest `M` the residue route will walk.
    pub residue_max_m: u32,
}

impl Default for HalfSplitLimits {
    fn default() -> Self {
        HalfSplitLimits {
            direct_max_log2: 24,
            residue_max_m: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfSplitMode {
    /// Direct for small `M` or any subrange, residue walk otherwise.
    Auto,
    Direct,
    Residue,
}

const CHUNK: u64 = 1 << 12;

fn tally_direct(m: u32, first: u64, last: u64) -> Vec<(u64, u64)> {
    let mut counts = vec![(0u64, 0u64); m as usize + 1];
    for x in first..=last {
        let mut v = x as u128;
        for slot in counts.iter_mut() {
            if v & 1 == 1 {
                slot.0 += 1;
                v = (3 * v + 1) >> 1;
            } else {
                slot.1 += 1;
                v >>= 1;
            }
        }
    }
    counts
}

/// Per-element tallies over `first..=last ⊆ [1, 2^M]`, in parallel over
/// fixed chunks.
pub fn halfsplit_direct(gamma: GammaSet, first: u64, last: u64) -> Result<HalfSplitReport> {
    if first == 0 || first > last || last > gamma.last() {
        return Err(Error::Precondition(format!(
            "subrange {first}..={last} is not inside [1, 2^{}]",
            gamma.m()
        )));
    }
    let m = gamma.m();
    let chunks = (last - first) / CHUNK + 1;
    let partials: Vec<Vec<(u64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = first + c * CHUNK;
            let hi = (lo + CHUNK - 1).min(last);
            tally_direct(m, lo, hi)
        })
        .collect();
    let mut report = HalfSplitReport::zeroed(m, vec![(first, last)]);
    for part in partials {
        for (slot, (up, down)) in report.steps.iter_mut().zip(part) {
            slot.increases += up;
            slot.decreases += down;
        }
    }
    Ok(report)
}

/// A node of the class tree: residue `i` mod `2^depth`, `T^depth(i)` under
/// the `T(0) = 0` convention, and the increase count `p_depth`.
#[derive(Debug, Clone, Copy)]
struct ClassNode {
    depth: u32,
    residue: u64,
    image: u128,
    increases: u32,
}

fn pow3_u128(e: u32) -> u128 {
    3u128.pow(e)
}

/// Depth-first walk over residue classes mod `2^1 … 2^max_depth`. `visit`
/// receives `(n, residue mod 2^n, kind of step n)`.
fn walk_classes(max_depth: u32, mut visit: impl FnMut(u32, u64, StepKind)) {
    let mut stack = vec![ClassNode {
        depth: 0,
        residue: 0,
        image: 0,
        increases: 0,
    }];
    while let Some(node) = stack.pop() {
        if node.depth == max_depth {
            continue;
        }
        let shift = pow3_u128(node.increases);
        // Children mod 2^{depth+1}: i and i + 2^depth. Pushed high first so
        // residues are visited in ascending order at each depth.
        for (residue, image) in [
            (node.residue + (1u64 << node.depth), node.image + shift),
            (node.residue, node.image),
        ] {
            let step = node.depth + 1;
            let (kind, next, increases) = if image & 1 == 1 {
                (StepKind::Increase, (3 * image + 1) >> 1, node.increases + 1)
            } else {
                (StepKind::Decrease, image >> 1, node.increases)
            };
            visit(step, residue, kind);
            stack.push(ClassNode {
                depth: step,
                residue,
                image: next,
                increases,
            });
        }
    }
}

/// Full-range tallies from the residue-class walk.
pub fn halfsplit_residue(gamma: GammaSet) -> HalfSplitReport {
    let m = gamma.m();
    let mut report = HalfSplitReport::zeroed(m, vec![(1, gamma.last())]);
    walk_classes(m + 1, |step, residue, kind| {
        // Classes mod 2^{M+1}: only residues 1..=2^M have a member in Γ_M.
        let size = if step <= m {
            1u64 << (m - step)
        } else if residue >= 1 && residue <= gamma.last() {
            1
        } else {
            0
        };
        let slot = &mut report.steps[step as usize - 1];
        match kind {
            StepKind::Increase => slot.increases += size,
            _ => slot.decreases += size,
        }
    });
    report
}

/// Tallies for `Γ_M`, or for a subrange of it.
pub fn halfsplit_verify(
    m: u32,
    subrange: Option<(u64, u64)>,
    mode: HalfSplitMode,
    limits: HalfSplitLimits,
) -> Result<HalfSplitReport> {
    let gamma = GammaSet::new(m)?;
    let (first, last) = subrange.unwrap_or((1, gamma.last()));
    let span = last.saturating_sub(first).saturating_add(1);
    let direct_ok = span <= 1u64 << limits.direct_max_log2;

    let use_direct = match mode {
        HalfSplitMode::Direct => true,
        HalfSplitMode::Residue => {
            if subrange.is_some_and(|r| r != (1, gamma.last())) {
                return Err(Error::Precondition(
                    "the residue route covers the full range only".into(),
                ));
            }
            false
        }
        HalfSplitMode::Auto => subrange.is_some() || direct_ok,
    };

    if use_direct {
        if !direct_ok {
            return Err(Error::Resource(format!(
                "{span} elements exceed the direct budget of 2^{}; split [1, 2^{m}] \
                 into subranges of at most that size and merge the reports",
                limits.direct_max_log2
            )));
        }
        halfsplit_direct(gamma, first, last)
    } else {
        if m > limits.residue_max_m {
            return Err(Error::Resource(format!(
                "M = {m} exceeds the residue budget of {}; verify subranges of at most \
                 2^{} elements directly and merge them",
                limits.residue_max_m, limits.direct_max_log2
            )));
        }
        Ok(halfsplit_residue(gamma))
    }
}

/// Classification of every residue class mod `2^n` at step `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSplit {
    pub n: u32,
    /// Ascending by residue.
    pub classes: Vec<(ResidueClass, StepKind)>,
}

impl ClassSplit {
    pub fn counts(&self) -> (usize, usize) {
        let up = self
            .classes
            .iter()
            .filter(|(_, k)| *k == StepKind::Increase)
            .count();
        (up, self.classes.len() - up)
    }
}

/// Residue classes mod `2^n` split by the kind of step `n`, `1 ≤ n ≤ M − 1`.
pub fn class_split(n: u32, m: u32) -> Result<ClassSplit> {
    if n == 0 || n >= m {
        return Err(Error::Precondition(format!(
            "class split needs 1 ≤ n ≤ M − 1, got n = {n}, M = {m}"
        )));
    }
    if n > 40 {
        return Err(Error::Resource(format!("2^{n} classes is too many to list")));
    }
    let mut kinds = vec![StepKind::Decrease; 1usize << n];
    walk_classes(n, |step, residue, kind| {
        if step == n {
            kinds[residue as usize] = kind;
        }
    });
    let classes = kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            (
                ResidueClass::new(n, Natural::from(i as u64)).expect("i < 2^n"),
                kind,
            )
        })
        .collect();
    Ok(ClassSplit { n, classes })
}

/// Kind of step `n` (1-based) for `x ≥ 1`, by direct iteration.
pub fn step_kind_at(x: u64, n: u32) -> StepKind {
    let mut v = x as u128;
    for _ in 1..n {
        v = if v & 1 == 1 { (3 * v + 1) >> 1 } else { v >> 1 };
    }
    if v & 1 == 1 {
        StepKind::Increase
    } else {
        StepKind::Decrease
    }
}

/// Checks the case analysis that drives the residue route: for the two
/// lifts `2^{n+1} r + i` and `2^{n+1} r + 2^n + i` of a class `i mod 2^n`,
/// step `n + 1` has opposite kinds, and after `n + 1` steps the lifts sit
/// at the displayed values
///
/// ```text
/// T^n(i) even: 3^{p_n} r + T^n(i)/2          and (3^{p_n+1}(2r+1) + 3T^n(i) + 1)/2
/// T^n(i) odd:  (3^{p_n+1} 2r + 3T^n(i) + 1)/2 and (3^{p_n}(2r+1) + T^n(i))/2
/// ```
///
/// Returns the number of `(i, r)` pairs where a displayed value is wrong.
pub fn proof_case_mismatches(n: u32, r_values: &[u64]) -> u64 {
    let mut bad = 0;
    let step = |v: u128| if v & 1 == 1 { (3 * v + 1) >> 1 } else { v >> 1 };
    for i in 0..(1u64 << n) {
        let mut ti = i as u128;
        let mut p = 0u32;
        for _ in 0..n {
            if ti & 1 == 1 {
                p += 1;
            }
            ti = step(ti);
        }
        let three_p = pow3_u128(p);
        for &r in r_values {
            let r = r as u128;
            let upper = ((r << (n + 1)) + i as u128, ti % 2 == 0);
            let lower = ((r << (n + 1)) + (1u128 << n) + i as u128, ti % 2 == 1);
            let (expected_upper, expected_lower) = if ti % 2 == 0 {
                (three_p * r + ti / 2, (3 * three_p * (2 * r + 1) + 3 * ti + 1) / 2)
            } else {
                ((3 * three_p * 2 * r + 3 * ti + 1) / 2, (three_p * (2 * r + 1) + ti) / 2)
            };
            for ((x, expect_decrease), expected) in
                [(upper, expected_upper), (lower, expected_lower)]
            {
                if x == 0 {
                    continue;
                }
                let mut v = x;
                for _ in 0..n {
                    v = step(v);
                }
                let decreased = v % 2 == 0;
                if decreased != expect_decrease || step(v) != expected {
                    bad += 1;
                }
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify(m: u32) -> HalfSplitReport {
        halfsplit_verify(m, None, HalfSplitMode::Auto, HalfSplitLimits::default()).unwrap()
    }

    #[test]
    fn gamma_two() {
        let r = verify(2);
        assert_eq!(r.steps[0].increases, 2);
        assert_eq!(r.steps[0].decreases, 2);
        assert!(r.steps[0].within_theorem);
        assert!(!r.steps[1].within_theorem);
        assert_eq!(r.steps.len(), 3);
        assert!(r.is_exact_half());
    }

    #[test]
    fn gamma_three_step_three_is_flagged() {
        let r = verify(3);
        assert_eq!((r.steps[1].increases, r.steps[1].decreases), (4, 4));
        let third = r.steps[2];
        assert!(!third.within_theorem);
        // T^2 over 1..8 is 1,2,8,1,4,5,17,2: four odd values.
        assert_eq!((third.increases, third.decreases), (4, 4));
        // T^3 over 1..8 is 2,1,4,2,2,8,26,1: two odd values.
        let fourth = r.steps[3];
        assert!(!fourth.within_theorem);
        assert_eq!((fourth.increases, fourth.decreases), (2, 6));
    }

    #[test]
    fn gamma_one_has_no_guaranteed_step() {
        let r = verify(1);
        assert_eq!(r.steps.len(), 2);
        assert!(!r.steps[0].within_theorem);
        assert!(r.is_exact_half());
    }

    #[test]
    fn residue_route_matches_direct() {
        for m in 1..=14 {
            let gamma = GammaSet::new(m).unwrap();
            let direct = halfsplit_direct(gamma, 1, gamma.last()).unwrap();
            assert_eq!(halfsplit_residue(gamma), direct, "M = {m}");
        }
    }

    #[test]
    fn subranges_merge_to_full() {
        let gamma = GammaSet::new(10).unwrap();
        let a = halfsplit_direct(gamma, 1, 100).unwrap();
        let b = halfsplit_direct(gamma, 101, 700).unwrap();
        let c = halfsplit_direct(gamma, 701, 1024).unwrap();
        let merged = c.merge(&a).unwrap().merge(&b).unwrap();
        assert_eq!(merged, halfsplit_direct(gamma, 1, 1024).unwrap());
        assert!(merged.is_exact_half());
    }

    #[test]
    fn overlapping_merge_is_rejected() {
        let gamma = GammaSet::new(6).unwrap();
        let a = halfsplit_direct(gamma, 1, 40).unwrap();
        let b = halfsplit_direct(gamma, 40, 64).unwrap();
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn budgets_produce_resource_errors() {
        let tight = HalfSplitLimits {
            direct_max_log2: 8,
            residue_max_m: 10,
        };
        assert!(matches!(
            halfsplit_verify(12, None, HalfSplitMode::Auto, tight),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            halfsplit_verify(12, None, HalfSplitMode::Direct, tight),
            Err(Error::Resource(_))
        ));
        let part = halfsplit_verify(12, Some((1, 256)), HalfSplitMode::Auto, tight).unwrap();
        assert_eq!(part.elements(), 256);
        assert!(halfsplit_verify(10, None, HalfSplitMode::Residue, tight).unwrap().is_exact_half());
        assert!(halfsplit_verify(12, Some((0, 5)), HalfSplitMode::Auto, tight).is_err());
        assert!(halfsplit_verify(3, Some((1, 9)), HalfSplitMode::Auto, tight).is_err());
    }

    #[test]
    fn class_split_small_cases() {
        let s = class_split(1, 2).unwrap();
        assert_eq!(s.classes[0].1, StepKind::Decrease);
        assert_eq!(s.classes[1].1, StepKind::Increase);

        // Step 2 kinds by direct evaluation for residues 0..3 (using 4 for 0):
        // 4→2 even, 1→2 even, 2→1 odd, 3→5 odd.
        let s = class_split(2, 3).unwrap();
        let kinds: Vec<_> = s.classes.iter().map(|(_, k)| *k).collect();
        assert_eq!(
            kinds,
            [StepKind::Decrease, StepKind::Decrease, StepKind::Increase, StepKind::Increase]
        );
        assert_eq!(s.counts(), (2, 2));

        assert!(class_split(3, 3).is_err());
        assert!(class_split(0, 3).is_err());
    }

    #[test]
    fn class_split_matches_elements() {
        for n in 1..=8 {
            let split = class_split(n, n + 1).unwrap();
            for x in 1..=(1u64 << (n + 2)) {
                let i = x % (1 << n);
                assert_eq!(split.classes[i as usize].1, step_kind_at(x, n), "x={x} n={n}");
            }
        }
    }

    #[test]
    fn proof_cases_hold() {
        for n in 1..=8 {
            assert_eq!(proof_case_mismatches(n, &[0, 1, 2, 5, 17]), 0, "n = {n}");
        }
    }
}
