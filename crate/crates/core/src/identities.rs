//! Exact checks of the algebraic identities behind the Collatz map.
//!
//! Every check computes its two sides along separate code paths: one side
//! iterates the map, the other evaluates a formula from exponents alone.
//!
//! Lemma 7 needs `T^k(i)` for `i = 0`. The general map is undefined at 0 in
//! [`crate::dynamics`]; this module alone uses `T(0) = 0`, classified as a
//! decrease and never counted as an increase.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::dynamics::{self, Natural, ParityExponents, StepKind};
use crate::error::{Error, Result};

/// Exact rational in lowest terms with a positive denominator.
pub type Rational = BigRational;

fn pow2(e: u64) -> Natural {
    BigUint::one() << e
}

fn pow3(e: u64) -> Natural {
    Pow::pow(BigUint::from(3u32), e)
}

fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

fn to_rational(x: &Natural) -> Rational {
    Rational::from_integer(BigInt::from(x.clone()))
}

/// A residue class `2^k · m + i` with `0 ≤ i < 2^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueClass {
    modulus_exponent: u32,
    residue: Natural,
}

impl ResidueClass {
    pub fn new(modulus_exponent: u32, residue: Natural) -> Result<Self> {
        if modulus_exponent == 0 {
            return Err(Error::Precondition("modulus exponent must be at least 1".into()));
        }
        if residue >= pow2(modulus_exponent as u64) {
            return Err(Error::Precondition(format!(
                "residue {residue} is not below 2^{modulus_exponent}"
            )));
        }
        Ok(ResidueClass {
            modulus_exponent,
            residue,
        })
    }

    pub fn modulus_exponent(&self) -> u32 {
        self.modulus_exponent
    }

    pub fn residue(&self) -> &Natural {
        &self.residue
    }

    /// The member `2^k · m + i`.
    pub fn member(&self, m: &Natural) -> Natural {
        (m << self.modulus_exponent as usize) + &self.residue
    }
}

/// General map step extended by `T(0) = 0`.
pub(crate) fn step_general_or_zero(x: &Natural) -> (Natural, StepKind) {
    if x.is_zero() {
        return (Natural::zero(), StepKind::Decrease);
    }
    dynamics::step_general(x).expect("nonzero input")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma7Outcome {
    /// `T^k(2^k m + i)` by direct iteration.
    pub lhs: Natural,
    /// `3^{p_k} m + T^k(i)`.
    pub rhs: Natural,
    /// Number of increase steps among the first `k` steps from `i`.
    pub increases: u32,
    pub holds: bool,
}

/// Checks the residue-class shift law `T^k(2^k m + i) = 3^{p_k} m + T^k(i)`.
pub fn verify_lemma7(class: &ResidueClass, m: &Natural) -> Lemma7Outcome {
    let k = class.modulus_exponent();

    let mut left = class.member(m);
    for _ in 0..k {
        left = step_general_or_zero(&left).0;
    }

    let mut right = class.residue().clone();
    let mut increases = 0u32;
    for _ in 0..k {
        let (next, kind) = step_general_or_zero(&right);
        if kind == StepKind::Increase {
            increases += 1;
        }
        right = next;
    }
    let rhs = pow3(increases as u64) * m + right;

    Lemma7Outcome {
        holds: left == rhs,
        lhs: left,
        rhs,
        increases,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedForm {
    /// `T^n(x0) · 2^{v_n}` from the iterated odd map.
    pub lhs: Natural,
    /// `3^n x0 + Σ_{r=1}^{n} 3^{n−r} 2^{v_{r−1}}` from the exponents.
    pub rhs: Natural,
    pub holds: bool,
}

/// The exponent side of the closed form, term by term.
pub fn closed_form_rhs(x0: &Natural, prefix_sums: &[u64], n: usize) -> Natural {
    let n64 = n as u64;
    let mut rhs = pow3(n64) * x0;
    for r in 1..=n {
        rhs += pow3(n64 - r as u64) * pow2(prefix_sums[r - 1]);
    }
    rhs
}

/// Checks `T^n(x0) · 2^{Σk} = 3^n x0 + Σ_{r=1}^{n} 3^{n−r} 2^{Σ_{i<r} k_i}`
/// after `n` odd steps. The odd map keeps running past 1 (fixed point, `k = 2`).
pub fn closed_form_check(x0: &Natural, n: usize) -> Result<ClosedForm> {
    let (values, exps) = dynamics::odd_orbit_prefix(x0, n)?;
    closed_form_along(x0, &values, &exps, n)
}

/// Same check against an already computed odd orbit; fails if the orbit is
/// shorter than `n` steps.
pub fn closed_form_along(
    x0: &Natural,
    values: &[Natural],
    exps: &ParityExponents,
    n: usize,
) -> Result<ClosedForm> {
    if exps.len() < n || values.len() <= n {
        return Err(Error::Precondition(format!(
            "odd orbit of {x0} has {} steps, {n} needed",
            exps.len()
        )));
    }
    let lhs = &values[n] << exps.prefix_sums()[n] as usize;
    let rhs = closed_form_rhs(x0, exps.prefix_sums(), n);
    Ok(ClosedForm {
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Checks the closed form at every step of the odd trajectory of `x0` up to
/// its first arrival at 1, using the Horner recurrence
/// `R_n = 3 R_{n−1} + 2^{v_{n−1}}` for the exponent side.
///
/// Returns the number of steps checked, or the first failing step.
pub fn closed_form_along_trajectory(x0: &Natural, max_steps: u64) -> Result<std::result::Result<usize, usize>> {
    let (traj, exps) = dynamics::trajectory_odd(x0, max_steps)?;
    let v = exps.prefix_sums();
    let mut rhs = x0.clone();
    for n in 1..traj.values.len() {
        rhs = rhs * 3u32 + pow2(v[n - 1]);
        let lhs = &traj.values[n] << v[n] as usize;
        if lhs != rhs {
            return Ok(Err(n));
        }
    }
    Ok(Ok(traj.values.len() - 1))
}

/// Bohm–Sontacchi form `(2^{v_m} − Σ_{k=0}^{m−1} 3^{m−k−1} 2^{v_k}) / 3^m`
/// for strictly increasing exponents `v_0 < … < v_m`.
///
/// When `v` are the prefix sums of a full odd trajectory of `x0` ending at
/// 1 the value is exactly `x0`.
pub fn bohm_sontacchi_reconstruct(v: &[u64]) -> Result<Rational> {
    if v.is_empty() {
        return Err(Error::Precondition("need at least v_0".into()));
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "exponents must be strictly increasing".into(),
        ));
    }
    let m = (v.len() - 1) as u64;
    let mut sum = BigUint::zero();
    for (k, &vk) in v[..v.len() - 1].iter().enumerate() {
        sum += pow3(m - k as u64 - 1) * pow2(vk);
    }
    let numerator = BigInt::from(pow2(v[v.len() - 1])) - BigInt::from(sum);
    Ok(Rational::new(numerator, BigInt::from(pow3(m))))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricSum {
    /// `Σ_{r=n}^{n+m} (4/3)^r`, summed term by term.
    pub lhs: Rational,
    /// `3 (4/3)^n ((4/3)^{m+1} − 1)`.
    pub rhs: Rational,
    pub holds: bool,
}

/// Evaluates both sides of `Σ_{r=n}^{n+m} (4/3)^r = 3(4/3)^n((4/3)^{m+1} − 1)`.
pub fn geometric_sum_identity(n: u32, m: u32) -> GeometricSum {
    let q = ratio(4, 3);
    let mut lhs = Rational::zero();
    for r in n..=n + m {
        lhs += Pow::pow(&q, r);
    }
    let rhs = ratio(3, 1) * Pow::pow(&q, n) * (Pow::pow(&q, m + 1) - Rational::one());
    GeometricSum {
        holds: lhs == rhs,
        lhs,
        rhs,
    }
}

/// The geometric heuristic model for `T^{n+m}(x0)`.
///
/// With `q = 3/4` and `v_r` the prefix sums of the actual odd orbit, the
/// model is
///
/// ```text
/// x0 q^{n+m} + (1/4) q^{n+m} Σ_{r=1}^{n−1} 2^{r + D_r} / 3^r
///            + (1/4) q^{n+m} Σ_{r=n}^{n+m} (4/3)^r
/// ```
///
/// where `D_r = v_{r−1} − r + 2` and the tail assumes `D_r / r = 1`.
/// Nothing here claims the model equals the true orbit value.
#[derive(Debug, Clone)]
pub struct HeuristicModel {
    x0: Natural,
    /// `v_0, …, v_{n−2}`: the prefix sums the first `n − 1` terms use.
    prefix: Vec<u64>,
    n: u32,
}

impl HeuristicModel {
    /// `exps` must cover at least `n − 1` odd steps.
    pub fn new(x0: &Natural, exps: &ParityExponents, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("the model needs n ≥ 1".into()));
        }
        let needed = n as usize - 1;
        if exps.len() < needed {
            return Err(Error::Precondition(format!(
                "model with n = {n} needs {needed} odd steps, got {}",
                exps.len()
            )));
        }
        Ok(HeuristicModel {
            x0: x0.clone(),
            prefix: exps.prefix_sums()[..needed].to_vec(),
            n,
        })
    }

    /// Builds the model from the odd orbit of `x0`, continued through the
    /// fixed point 1 if it arrives early.
    pub fn from_orbit(x0: &Natural, n: u32) -> Result<Self> {
        let (_, exps) = dynamics::odd_orbit_prefix(x0, n.saturating_sub(1) as usize)?;
        HeuristicModel::new(x0, &exps, n)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `D_r` for `1 ≤ r ≤ n − 1`, defined so that `2^{r + D_r − 2} = 2^{v_{r−1}}`.
    pub fn decrement(&self, r: u32) -> i64 {
        self.prefix[r as usize - 1] as i64 - r as i64 + 2
    }

    /// Expansion form of the model.
    pub fn expansion(&self, m: u32) -> Rational {
        let q = ratio(3, 4);
        let quarter = ratio(1, 4);
        let scale = Pow::pow(&q, self.n + m);

        let mut prefix_sum = Rational::zero();
        for r in 1..self.n {
            let exponent = r as i64 + self.decrement(r);
            let term = Rational::new(
                BigInt::from(pow2(exponent as u64)),
                BigInt::from(pow3(r as u64)),
            );
            prefix_sum += term;
        }

        let mut tail = Rational::zero();
        let up = ratio(4, 3);
        for r in self.n..=self.n + m {
            tail += Pow::pow(&up, r);
        }

        to_rational(&self.x0) * &scale + &quarter * &scale * prefix_sum + quarter * scale * tail
    }

    /// `T̂^j = x0 (3/4)^j + (3/4)^j Σ_{r=1}^{j} 2^{v_{r−1}} / 3^r`, for `j ≤ n − 1`.
    pub fn truncated(&self, j: u32) -> Rational {
        assert!(j < self.n, "truncated model needs j ≤ n − 1");
        let q = Pow::pow(ratio(3, 4), j);
        let mut sum = Rational::zero();
        for r in 1..=j {
            sum += Rational::new(
                BigInt::from(pow2(self.prefix[r as usize - 1])),
                BigInt::from(pow3(r as u64)),
            );
        }
        &q * to_rational(&self.x0) + q * sum
    }

    /// Recursive form `(3/4)^{m+1} T̂^{n−1} + 1 − (3/4)^{m+1}`.
    pub fn recursion(&self, m: u32) -> Rational {
        let decay = Pow::pow(ratio(3, 4), m + 1);
        &decay * self.truncated(self.n - 1) + Rational::one() - decay
    }

    /// `|model − 1|` as a rational, from the recursive form.
    pub fn distance_from_one(&self, m: u32) -> Rational {
        use num_traits::Signed;
        (self.recursion(m) - Rational::one()).abs()
    }
}

/// `heuristic_model(x0, exps, n, m)`: expansion form of the model.
pub fn heuristic_model(x0: &Natural, exps: &ParityExponents, n: u32, m: u32) -> Result<Rational> {
    Ok(HeuristicModel::new(x0, exps, n)?.expansion(m))
}

/// Prefix bookkeeping at one odd step: `v_{r−1}` against the general-map
/// decreases taken during the first `r − 1` odd steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixBookkeeping {
    pub r: u64,
    pub prefix_sum: u64,
    pub decreases_before: u64,
}

impl PrefixBookkeeping {
    /// `v_{r−1} − (r + D − 2)`. The exact relation is `v_{r−1} = (r − 1) + D`,
    /// so this is 1 at every step.
    pub fn offset_from_minus_two_form(&self) -> i64 {
        self.prefix_sum as i64 - (self.r as i64 + self.decreases_before as i64 - 2)
    }
}

/// For each odd step `r = 1, …` of `x0`'s orbit to 1, pairs `v_{r−1}` with
/// the decreases seen in the general trajectory before the `(r−1)`-th odd
/// value after the start.
pub fn prefix_bookkeeping(x0: &Natural, max_steps: u64) -> Result<Vec<PrefixBookkeeping>> {
    let (odd, exps) = dynamics::trajectory_odd(x0, max_steps)?;
    let general = dynamics::trajectory_general(x0, max_steps.saturating_mul(64))?;

    // Decrease counts at each odd value of the general trajectory, in order.
    let mut decreases_at_odd = vec![0u64];
    let mut down = 0u64;
    for (kind, value) in general.steps.iter().zip(&general.values[1..]) {
        if *kind == StepKind::Decrease {
            down += 1;
        }
        if value.is_odd() {
            decreases_at_odd.push(down);
        }
    }

    let v = exps.prefix_sums();
    let steps = odd.step_count().min(decreases_at_odd.len());
    Ok((1..=steps)
        .map(|r| PrefixBookkeeping {
            r: r as u64,
            prefix_sum: v[r - 1],
            decreases_before: decreases_at_odd[r - 1],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> Natural {
        Natural::from(v)
    }

    fn class(k: u32, i: u64) -> ResidueClass {
        ResidueClass::new(k, n(i)).unwrap()
    }

    #[test]
    fn residue_class_bounds() {
        assert!(ResidueClass::new(2, n(4)).is_err());
        assert!(ResidueClass::new(0, n(0)).is_err());
        assert_eq!(class(3, 5).member(&n(2)), n(21));
    }

    #[test]
    fn lemma7_examples() {
        let out = verify_lemma7(&class(2, 1), &n(1));
        assert!(out.holds);
        assert_eq!(out.increases, 1);
        assert_eq!(out.lhs, n(4));

        for r in 0..20u64 {
            let out = verify_lemma7(&class(1, 0), &n(r));
            assert!(out.holds);
            assert_eq!(out.increases, 0);
            assert_eq!(out.lhs, n(r));
        }

        let out = verify_lemma7(&class(1, 1), &n(0));
        assert!(out.holds);
        assert_eq!(out.increases, 1);
        assert_eq!(out.lhs, n(2));
    }

    #[test]
    fn lemma7_zero_residue_zero_multiplier() {
        let out = verify_lemma7(&class(4, 0), &n(0));
        assert!(out.holds);
        assert_eq!(out.increases, 0);
        assert_eq!(out.lhs, n(0));
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_check(&n(7), 2).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (n(68), n(68)));
        assert!(c.holds);

        let c = closed_form_check(&n(7), 1).unwrap();
        assert_eq!(c.lhs, n(22));
        assert!(c.holds);

        let c = closed_form_check(&n(1), 1).unwrap();
        assert_eq!(c.lhs, n(4));
        assert!(c.holds);
    }

    #[test]
    fn closed_form_short_orbit_is_error() {
        let (values, exps) = dynamics::odd_orbit_prefix(&n(7), 2).unwrap();
        assert!(closed_form_along(&n(7), &values, &exps, 3).is_err());
    }

    #[test]
    fn closed_form_horner_matches_termwise() {
        assert_eq!(closed_form_along_trajectory(&n(27), 1000).unwrap(), Ok(41));
        let (traj, exps) = dynamics::trajectory_odd(&n(27), 1000).unwrap();
        for step in 0..=exps.len() {
            assert!(closed_form_along(&n(27), &traj.values, &exps, step).unwrap().holds);
        }
    }

    #[test]
    fn bohm_sontacchi_examples() {
        assert_eq!(bohm_sontacchi_reconstruct(&[0, 4]).unwrap(), ratio(5, 1));
        assert_eq!(
            bohm_sontacchi_reconstruct(&[0, 1, 2, 4, 7, 11]).unwrap(),
            ratio(7, 1)
        );
        assert_eq!(bohm_sontacchi_reconstruct(&[0, 2]).unwrap(), ratio(1, 1));
        // Exponents that do not come from an orbit give a non-integer.
        assert_eq!(bohm_sontacchi_reconstruct(&[0, 3]).unwrap(), ratio(7, 3));
        assert!(bohm_sontacchi_reconstruct(&[0, 2, 2]).is_err());
        assert!(bohm_sontacchi_reconstruct(&[]).is_err());
    }

    /// Term-by-term oracle values, written out by hand.
    #[test]
    fn geometric_sum_examples() {
        let g = geometric_sum_identity(0, 0);
        assert!(g.holds);
        assert_eq!(g.lhs, ratio(1, 1));

        // 16/9 + 64/27 + 256/81 + 1024/243 = (432 + 576 + 768 + 1024) / 243
        let g = geometric_sum_identity(2, 3);
        assert!(g.holds);
        assert_eq!(g.lhs, ratio(2800, 243));

        assert!(geometric_sum_identity(5, 7).holds);
    }

    #[test]
    fn heuristic_model_single_step() {
        for x0 in [1u64, 3, 7, 27, 999] {
            let model = HeuristicModel::from_orbit(&n(x0), 1).unwrap();
            let expected = ratio(3, 4) * ratio(x0 as i64, 1) + ratio(1, 4);
            assert_eq!(model.expansion(0), expected);
            assert_eq!(model.recursion(0), expected);
        }
    }

    #[test]
    fn heuristic_model_forms_agree() {
        for x0 in [1u64, 7, 27, 97] {
            for nn in 1..8 {
                let model = HeuristicModel::from_orbit(&n(x0), nn).unwrap();
                for m in 0..6 {
                    assert_eq!(model.expansion(m), model.recursion(m), "x0={x0} n={nn} m={m}");
                }
            }
        }
    }

    #[test]
    fn heuristic_model_is_one_at_fixed_point() {
        for nn in 1..10 {
            let model = HeuristicModel::from_orbit(&n(1), nn).unwrap();
            assert_eq!(model.expansion(3), Rational::one());
        }
    }

    #[test]
    fn heuristic_model_needs_enough_steps() {
        let exps = ParityExponents::from_exponents(&[1, 1]).unwrap();
        assert!(HeuristicModel::new(&n(7), &exps, 4).is_err());
        assert!(HeuristicModel::new(&n(7), &exps, 3).is_ok());
        assert!(HeuristicModel::new(&n(7), &exps, 0).is_err());
        assert!(heuristic_model(&n(7), &exps, 3, 2).is_ok());
    }

    #[test]
    fn prefix_bookkeeping_offset_is_one() {
        let rows = prefix_bookkeeping(&n(7), 1000).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|row| row.offset_from_minus_two_form() == 1));
    }
}
