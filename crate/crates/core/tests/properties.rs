use collatz_lab::anb::{closed_form_anb_check, cycle_catalog, find_cycle};
use collatz_lab::dynamics::{self, classify_counts, exponent_bookkeeping};
use collatz_lab::halfsplit::{self, class_split, halfsplit_direct, halfsplit_residue, step_kind_at};
use collatz_lab::identities::{
    bohm_sontacchi_reconstruct, closed_form_check, geometric_sum_identity, prefix_bookkeeping,
    verify_lemma7, HeuristicModel,
};
use collatz_lab::stats::{self, confidence_interval, drift_bound_along, exponentiate_interval, simulate_batch};
use collatz_lab::{
    sweep, AnbParams, ConfidenceLevel, GammaSet, IntervalMode, Natural, Rational, ResidueClass,
    SampleStats, StepKind, Termination,
};
use num_bigint::BigInt;
use proptest::prelude::*;

fn n(v: u64) -> Natural {
    Natural::from(v)
}

fn odd() -> impl Strategy<Value = u64> {
    (0u64..5_000_000).prop_map(|j| 2 * j + 1)
}

proptest! {
    #[test]
    fn parity_forces_direction(x in 1u64..u64::MAX / 2) {
        let (next, kind) = dynamics::step_general(&n(x)).unwrap();
        prop_assert_ne!(&next, &n(x));
        if x % 2 == 1 {
            prop_assert!(next > n(x));
            prop_assert_eq!(kind, StepKind::Increase);
        } else {
            prop_assert!(next < n(x));
            prop_assert_eq!(kind, StepKind::Decrease);
        }
    }

    #[test]
    fn odd_step_is_one_increase_then_halvings(x in odd()) {
        let (image, k) = dynamics::step_odd(&n(x)).unwrap();
        let mut v = dynamics::step_general(&n(x)).unwrap();
        prop_assert_eq!(v.1, StepKind::Increase);
        for _ in 1..k {
            v = dynamics::step_general(&v.0).unwrap();
            prop_assert_eq!(v.1, StepKind::Decrease);
        }
        prop_assert_eq!(v.0, image);
    }

    #[test]
    fn trajectory_shape(x in 1u64..1_000_000, cap in 0u64..400) {
        let t = dynamics::trajectory_general(&n(x), cap).unwrap();
        prop_assert_eq!(&t.values[0], &n(x));
        prop_assert_eq!(t.steps.len() + 1, t.values.len());
        let (up, down) = classify_counts(&t);
        prop_assert_eq!(up + down, t.steps.len());
        for (w, kind) in t.values.windows(2).zip(&t.steps) {
            prop_assert_eq!(dynamics::step_general(&w[0]).unwrap(), (w[1].clone(), *kind));
        }
        if t.terminated == Termination::StepLimit {
            prop_assert_eq!(t.steps.len() as u64, cap);
        }
    }

    #[test]
    fn exponent_sum_is_steps_plus_decreases(x in odd()) {
        let b = exponent_bookkeeping(&n(x), 100_000).unwrap();
        prop_assert_eq!(b.offset(), 0);
        prop_assert_eq!(b.offset_from_minus_one_form(), 1);
    }

    #[test]
    fn prefix_relation_is_off_by_one(x in odd()) {
        for row in prefix_bookkeeping(&n(x), 100_000).unwrap() {
            prop_assert_eq!(row.offset_from_minus_two_form(), 1);
        }
    }

    #[test]
    fn shift_law(k in 1u32..=12, i in any::<u64>(), m in 0u64..1 << 20) {
        let i = i % (1u64 << k);
        let class = ResidueClass::new(k, n(i)).unwrap();
        let out = verify_lemma7(&class, &n(m));
        prop_assert!(out.holds);
        // p_k matches the increase count of the first k steps from i, when
        // i does not reach 1 early.
        if i >= 1 {
            let t = dynamics::trajectory_general(&n(i), k as u64).unwrap();
            if t.steps.len() == k as usize {
                prop_assert_eq!(classify_counts(&t).0 as u32, out.increases);
            }
        }
    }

    #[test]
    fn closed_form_and_reconstruction(x in odd()) {
        let (traj, exps) = dynamics::trajectory_odd(&n(x), 100_000).unwrap();
        for step in [1, traj.step_count() / 2, traj.step_count()] {
            if step >= 1 {
                prop_assert!(closed_form_check(&n(x), step).unwrap().holds);
            }
        }
        let value = bohm_sontacchi_reconstruct(exps.prefix_sums()).unwrap();
        prop_assert_eq!(value, Rational::from_integer(BigInt::from(x)));
    }

    #[test]
    fn geometric_sum(a in 0u32..=50, b in 0u32..=50) {
        prop_assert!(geometric_sum_identity(a, b).holds);
    }

    #[test]
    fn model_forms_agree(j in 0u64..500, steps in 1u32..=20, m in 0u32..=40) {
        let model = HeuristicModel::from_orbit(&n(2 * j + 1), steps).unwrap();
        prop_assert_eq!(model.expansion(m), model.recursion(m));
    }

    #[test]
    fn halfsplit_merges_over_partitions(m in 2u32..=14, cuts in proptest::collection::vec(any::<u64>(), 3)) {
        let gamma = GammaSet::new(m).unwrap();
        let last = gamma.last();
        let mut points: Vec<u64> = cuts.iter().map(|c| 1 + c % last).collect();
        points.sort_unstable();
        points.dedup();
        let mut bounds = vec![1u64];
        bounds.extend(points.into_iter().filter(|&p| p > 1));
        bounds.push(last + 1);
        let whole = halfsplit_direct(gamma, 1, last).unwrap();
        let mut parts: Vec<_> = bounds
            .windows(2)
            .map(|w| halfsplit_direct(gamma, w[0], w[1] - 1).unwrap())
            .collect();
        parts.reverse();
        let merged = parts
            .into_iter()
            .reduce(|a, b| a.merge(&b).unwrap())
            .unwrap();
        prop_assert_eq!(merged, whole);
    }

    #[test]
    fn step_kind_depends_on_residue(x in 1u64..=1 << 14, step in 1u32..=10, lift in 1u64..64) {
        let y = x + (lift << step);
        prop_assert_eq!(step_kind_at(x, step), step_kind_at(y, step));
    }

    #[test]
    fn sweep_fast_path_matches_exact(x in 1u64..u64::MAX) {
        prop_assert_eq!(sweep::summarize(x, 3_000).unwrap(), sweep::summarize_exact(x, 3_000).unwrap());
    }

    #[test]
    fn sweep_partition_independent(limit in 1u64..5_000, cut in 1u64..5_000) {
        let cut = cut.min(limit);
        let whole = sweep::sweep_range(1, limit, 10_000).unwrap();
        let mut merged = sweep::sweep_range(1, cut, 10_000).unwrap();
        if cut < limit {
            merged = sweep::sweep_range(cut + 1, limit, 10_000).unwrap().merge(merged);
        }
        prop_assert_eq!(merged, whole);
    }

    #[test]
    fn exponentiate_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let (lo, mid) = exponentiate_interval(v[0], v[1]).unwrap();
        let (mid2, hi) = exponentiate_interval(v[1], v[2]).unwrap();
        prop_assert!(lo <= mid && mid == mid2 && mid2 <= hi);
    }

    #[test]
    fn stopping_profile_shape(x in 1u64..10_000_000) {
        let p = stats::stopping_profile(&n(x), 100_000).unwrap();
        if x % 2 == 0 {
            prop_assert_eq!(p.stopping_time, Some(1));
        }
        if let (Some(s), Some(t)) = (p.stopping_time, p.total_stopping_time) {
            prop_assert!(s <= t);
        }
    }
}

#[test]
fn shortcut_consistency_exhaustive() {
    for x in (1..=100_000u64).step_by(2) {
        let (image, k) = dynamics::step_odd(&n(x)).unwrap();
        let mut v = n(x);
        for _ in 0..k {
            v = dynamics::step_general(&v).unwrap().0;
        }
        assert_eq!(v, image, "x = {x}");
    }
}

#[test]
fn halfsplit_exact_through_18() {
    for m in 1..=18u32 {
        let gamma = GammaSet::new(m).unwrap();
        let report = halfsplit_direct(gamma, 1, gamma.last()).unwrap();
        assert!(report.is_exact_half(), "M = {m}");
        assert_eq!(report, halfsplit_residue(gamma), "M = {m}");
    }
}

#[test]
fn class_split_cardinalities() {
    for step in 1..=12u32 {
        let split = class_split(step, step + 1).unwrap();
        let half = 1usize << (step - 1);
        assert_eq!(split.counts(), (half, half));
        for (class, kind) in &split.classes {
            let i: u64 = class.residue().try_into().unwrap();
            let x = if i == 0 { 1u64 << step } else { i };
            assert_eq!(step_kind_at(x, step), *kind);
        }
    }
    assert_eq!(halfsplit::proof_case_mismatches(6, &[0, 1, 2, 3, 17, 1000]), 0);
}

#[test]
fn anb_closed_form_on_seeded_starts() {
    let params = [(5, 1), (7, 1), (5, 3)];
    for (a, b) in params {
        let p = AnbParams::new(a, b).unwrap();
        let starts = stats::seeded_bits(99, a * 10 + b, 200 * 20)
            .collect::<Vec<bool>>()
            .chunks(20)
            .map(|bits| bits.iter().fold(1u64, |acc, &bit| (acc << 1) | bit as u64))
            .collect::<Vec<u64>>();
        for x in starts {
            let x = x | 1;
            for steps in 1..=50 {
                assert!(closed_form_anb_check(&n(x), p, steps).unwrap().holds, "{p} x={x} n={steps}");
            }
        }
    }
}

#[test]
fn emitted_cycles_satisfy_product_identity() {
    for (a, b) in [(5u64, 1u64), (7, 1), (5, 3), (3, 1), (3, 5)] {
        let p = AnbParams::new(a, b).unwrap();
        let starts: Vec<Natural> = (1..=301u64).step_by(2).map(n).collect();
        let catalog = cycle_catalog(p, &starts, 2_000).unwrap();
        for cycle in &catalog.cycles {
            assert!(cycle.verify(), "{p}: {:?}", cycle.members);
            assert_eq!(cycle.product_residue(), BigInt::from(0));
        }
    }
    for (x, members) in [(13u64, vec![13u64, 33, 83]), (17, vec![17, 43, 27]), (3, vec![1, 3])] {
        let c = find_cycle(&n(x), AnbParams::new(5, 1).unwrap(), 100).unwrap().unwrap();
        assert_eq!(c.members, members.into_iter().map(n).collect::<Vec<_>>());
    }
}

#[test]
fn simulation_is_thread_independent() {
    let reference = simulate_batch(1_000, 64, 5).unwrap();
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        assert_eq!(pool.install(|| simulate_batch(1_000, 64, 5).unwrap()), reference);
    }
}

#[test]
fn interval_width_shrinks_as_inverse_root() {
    let width = |count: usize| {
        let values: Vec<f64> = (0..count).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = SampleStats::from_values(&values, ConfidenceLevel::P95).unwrap();
        let (lo, hi) = confidence_interval(&s, IntervalMode::Normal).unwrap();
        (hi - lo) / s.std
    };
    let (w10, w1k, w100k) = (width(10), width(1_000), width(100_000));
    assert!((w10 / w1k - 10.0).abs() < 1e-9);
    assert!((w1k / w100k - 10.0).abs() < 1e-9);
}

#[test]
fn drift_bound_over_small_starts() {
    for x in (1..=1_000u64).step_by(2) {
        let (traj, _) = dynamics::trajectory_odd(&n(x), 100_000).unwrap();
        assert_eq!(drift_bound_along(&n(x), 100_000).unwrap(), Ok(traj.step_count()), "x0 = {x}");
    }
}

#[test]
fn batch_law_of_large_numbers() {
    let batch = simulate_batch(10_000, 1_000, 1).unwrap();
    let summary = stats::summarize_batch(&batch).unwrap();
    assert!((summary.mean_xi - 1.0).abs() < 0.02);
    assert!((summary.mean_indicator_std - 0.5).abs() < 0.01);
}
