use bootperc::bounds::{
    chernoff_bound, exact_binom_tail, normal_upper_tail, small_p_tail_bound,
    weighted_binom_tail_bound, weighted_binom_tail_exact, WeightedBinomialSpec,
};
use bootperc::cube::{infected_neighbor_counts, weight_codes};
use bootperc::engine::{default_max_steps, step, trace_dominates, Runner};
use bootperc::estimator::{run_trial, sample_initial, wilson_interval, TrialPlan};
use bootperc::partition::{baranyai, distance_partition, verify_factorization};
use bootperc::*;
use proptest::prelude::*;

fn spec_strategy(max_n: u32) -> impl Strategy<Value = CubeSpec> {
    (1u32..=max_n)
        .prop_flat_map(|n| (1u32..=n.min(3)).prop_map(move |k| CubeSpec::new(n, k).unwrap()))
}

fn set_strategy(spec: CubeSpec) -> impl Strategy<Value = VertexSet> {
    let len = spec.order() as usize;
    proptest::collection::vec(any::<bool>(), len).prop_map(move |bits| {
        VertexSet::from_vertices(
            spec.n(),
            bits.iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .map(|(i, _)| Vertex(i as u32)),
        )
    })
}

fn spec_and_set(max_n: u32) -> impl Strategy<Value = (CubeSpec, VertexSet)> {
    spec_strategy(max_n).prop_flat_map(|spec| (Just(spec), set_strategy(spec)))
}

fn schedule_strategy(degree: u64) -> impl Strategy<Value = ThresholdSchedule> {
    (0usize..4, 1..=degree, 0..=degree / 3).prop_map(|(kind, r, t)| match kind {
        0 => ThresholdSchedule::boot(r).unwrap(),
        1 => ThresholdSchedule::new(ScheduleKind::Boot1, r + t, t).unwrap(),
        2 => ThresholdSchedule::new(ScheduleKind::Boot2, r + 2 * t, t).unwrap(),
        _ => ThresholdSchedule::new(ScheduleKind::Boot3, r + 2 * t, t).unwrap(),
    })
}

/// Vertex-by-vertex reference for one update.
fn scalar_step(spec: CubeSpec, a: &VertexSet, threshold: u64) -> VertexSet {
    let mut next = a.clone();
    for c in 0..spec.order() as u32 {
        let v = Vertex(c);
        let hits = (0..spec.order() as u32)
            .map(Vertex)
            .filter(|&u| (1..=spec.k()).contains(&hamming(u, v)) && a.contains(u))
            .count() as u64;
        if hits >= threshold {
            next.insert(v);
        }
    }
    next
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernel_counts_match_scalar_reference((spec, a) in spec_and_set(12)) {
        let counts = infected_neighbor_counts(spec, &a);
        for c in 0..spec.order() as u32 {
            let expected = spec.neighbors(Vertex(c)).into_iter().filter(|&u| a.contains(u)).count() as u64;
            prop_assert_eq!(counts.get(Vertex(c)), expected, "vertex {}", c);
        }
    }

    #[test]
    fn kernel_step_matches_scalar_step((spec, a) in spec_and_set(9), frac in 0.0f64..1.0) {
        let threshold = 1 + (frac * spec.degree() as f64) as u64;
        prop_assert_eq!(step(spec, &a, threshold), scalar_step(spec, &a, threshold));
    }

    #[test]
    fn hamming_is_a_metric(n in 1u32..=31, x in any::<u32>(), y in any::<u32>(), z in any::<u32>()) {
        let mask = (1u32 << n) - 1;
        let (x, y, z) = (Vertex(x & mask), Vertex(y & mask), Vertex(z & mask));
        prop_assert_eq!(hamming(x, y), hamming(y, x));
        prop_assert_eq!(hamming(x, x), 0);
        prop_assert!(hamming(x, z) <= hamming(x, y) + hamming(y, z));
        prop_assert!(hamming(x, y) <= n);
    }

    #[test]
    fn neighborhoods_have_the_common_degree(spec in spec_strategy(14), raw in any::<u32>()) {
        let x = Vertex(raw & (spec.order() as u32 - 1));
        let nb = spec.neighbors(x);
        prop_assert_eq!(nb.len() as u64, spec.degree());
        prop_assert!(nb.iter().all(|&u| (1..=spec.k()).contains(&hamming(u, x))));
        prop_assert!(nb.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn growth_is_monotone((spec, a0) in spec_and_set(8), pick in any::<prop::sample::Index>()) {
        let schedules: Vec<ThresholdSchedule> = (1..=spec.degree()).map(|r| ThresholdSchedule::boot(r).unwrap()).collect();
        let schedule = schedules[pick.index(schedules.len())];
        let mut prev = a0.clone();
        for i in 1..=default_max_steps(spec) {
            let next = step(spec, &prev, schedule.threshold(i));
            prop_assert!(prev.is_subset(&next));
            if next == prev {
                break;
            }
            prev = next;
        }
        let trace = run_to_fixpoint(spec, &a0, &schedule, default_max_steps(spec)).unwrap();
        prop_assert!(trace.sizes.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(trace.final_set, Some(prev));
    }

    #[test]
    fn closure_is_monotone_in_the_initial_set(
        (spec, a, b) in spec_and_set(8).prop_flat_map(|(spec, a)| (Just(spec), Just(a), set_strategy(spec))),
        frac in 0.0f64..1.0,
    ) {
        let r = 1 + (frac * spec.degree() as f64) as u64;
        let schedule = ThresholdSchedule::boot(r).unwrap();
        let small = a.intersection(&b);
        let big = a.union(&b);
        let run = |s: &VertexSet| run_to_fixpoint(spec, s, &schedule, default_max_steps(spec)).unwrap();
        let (lo, hi) = (run(&small), run(&big));
        prop_assert!(lo.final_set.unwrap().is_subset(hi.final_set.as_ref().unwrap()));
        prop_assert!(!lo.percolated || hi.percolated);
    }

    #[test]
    fn relaxed_schedules_dominate_the_base_process(
        (spec, a0) in spec_and_set(8),
        frac in 0.0f64..1.0,
        t_frac in 0.0f64..1.0,
        kind in prop::sample::select(vec![ScheduleKind::Boot1, ScheduleKind::Boot2, ScheduleKind::Boot3]),
    ) {
        let r = 1 + (frac * spec.degree() as f64) as u64;
        let max_t = match kind {
            ScheduleKind::Boot1 => r - 1,
            _ => (r - 1) / 2,
        };
        let t = (t_frac * max_t as f64) as u64;
        let relaxed = ThresholdSchedule::new(kind, r, t).unwrap();
        let base = ThresholdSchedule::boot(r).unwrap();
        prop_assert!(trace_dominates(spec, &a0, &relaxed, &base).unwrap());
    }

    #[test]
    fn fast_closure_agrees_with_the_synchronous_runner(
        (spec, a0, schedule) in spec_and_set(10)
            .prop_flat_map(|(spec, a)| (Just(spec), Just(a), schedule_strategy(spec.degree()))),
    ) {
        let trace = run_to_fixpoint(spec, &a0, &schedule, default_max_steps(spec) + 3).unwrap();
        let mut fast = a0.clone();
        prop_assert_eq!(Runner::new(spec).percolates(&mut fast, &schedule), trace.percolated);
        prop_assert_eq!(Some(fast), trace.final_set);
    }

    #[test]
    fn coupled_samples_are_nested(n in 1u32..=12, p in 0.0f64..=1.0, q in 0.0f64..=1.0, seed in any::<u64>(), trial in 0u64..1000) {
        let spec = CubeSpec::hypercube(n).unwrap();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(sample_initial(spec, lo, seed, trial).is_subset(&sample_initial(spec, hi, seed, trial)));
        prop_assert!(sample_initial(spec, 0.0, seed, trial).is_empty());
        prop_assert!(sample_initial(spec, 1.0, seed, trial).is_full());
    }

    #[test]
    fn percolation_indicator_is_monotone_along_a_trajectory(
        n in 2u32..=8, r_frac in 0.0f64..1.0, seed in any::<u64>(), trial in 0u64..10_000,
    ) {
        let spec = CubeSpec::hypercube(n).unwrap();
        let r = 1 + (r_frac * n as f64) as u64;
        let schedule = ThresholdSchedule::boot(r.min(n as u64)).unwrap();
        let mut last = false;
        for i in 0..=20 {
            let plan = TrialPlan::new(spec, schedule, i as f64 / 20.0, 1, seed);
            let now = run_trial(&plan, trial).percolated;
            prop_assert!(!last || now, "lost percolation at p = {}", i as f64 / 20.0);
            last = now;
        }
    }

    #[test]
    fn wilson_interval_is_ordered(trials in 1u64..100_000, frac in 0.0f64..=1.0, conf in 0.5f64..0.9999) {
        let successes = (frac * trials as f64) as u64;
        let (lo, hi) = wilson_interval(successes, trials, conf);
        let p_hat = successes as f64 / trials as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p_hat + 1e-12 && p_hat <= hi + 1e-12);
    }

    #[test]
    fn chernoff_dominates_exact_tails(n in 1u64..=400, p in 0.001f64..0.999, t_frac in 0.0f64..1.0) {
        let mean = n as f64 * p;
        let t = (t_frac * (n as f64 - mean)).max(1e-6);
        let m = (mean + t - 1e-9).ceil() as u64;
        prop_assume!(m <= n + 1);
        let exact = exact_binom_tail(n, p, m).unwrap();
        prop_assert!(exact <= chernoff_bound(n, t).unwrap() + 1e-15);
    }

    #[test]
    fn small_p_bound_dominates_exact_tails(n in 1u64..=200, scale in 0.0f64..0.999, m_frac in 0.0f64..1.0) {
        let p = scale / (n * n) as f64;
        prop_assume!(p > 0.0);
        let m = 1 + (m_frac * (n - 1) as f64) as u64;
        let exact = exact_binom_tail(n, p, m).unwrap();
        prop_assert!(exact <= small_p_tail_bound(n, p, m).unwrap());
    }

    #[test]
    fn weighted_bound_dominates_exact_tails(
        d in proptest::collection::vec(0u64..=15, 1..=4), p in 0.01f64..0.99, t in 1u64..=20,
    ) {
        let spec = WeightedBinomialSpec::new(d, p).unwrap();
        prop_assume!(spec.variance_proxy() > 0);
        let exact = weighted_binom_tail_exact(&spec, spec.mean() + t as f64).unwrap();
        prop_assert!(exact <= weighted_binom_tail_bound(&spec, t as f64).unwrap() + 1e-15);
    }

    #[test]
    fn greedy_partitions_are_valid(n in 3u32..=9, d in 1u32..=4, keep in proptest::collection::vec(any::<bool>(), 512)) {
        let universe: Vec<Vertex> = (0..1u32 << n).filter(|&c| keep[c as usize]).map(Vertex).collect();
        prop_assume!(!universe.is_empty());
        let partition = distance_partition(&universe, d).unwrap();
        prop_assert!(partition.verify().is_ok());
    }
}

#[test]
fn de_moivre_laplace_convergence() {
    // P(Bin(n, 1/2) >= n/2 + z sqrt(n)/2) against 1 - Phi(z), averaging the two
    // lattice tails around the cut to remove the continuity offset.
    for z in [0.5, 1.0, 2.0] {
        let err = |n: u64| {
            let m = (n as f64 / 2.0 + z * (n as f64).sqrt() / 2.0).ceil() as u64;
            let upper = exact_binom_tail(n, 0.5, m).unwrap();
            let lower = exact_binom_tail(n, 0.5, m + 1).unwrap();
            (0.5 * (upper + lower) - normal_upper_tail(z)).abs()
        };
        for n in [100u64, 1_000, 10_000, 100_000] {
            assert!(
                err(n) < 1.0 / (n as f64).sqrt(),
                "z = {z}, n = {n}: {}",
                err(n)
            );
        }
    }
}

#[test]
fn exact_closure_on_every_subset_of_q4() {
    let spec = CubeSpec::hypercube(4).unwrap();
    let schedule = ThresholdSchedule::boot(2).unwrap();
    let mut runner = Runner::new(spec);
    let mut percolating = 0;
    for mask in 0u64..1 << 16 {
        let a0 = VertexSet::from_words(4, vec![mask]);
        let mut reference = a0.clone();
        loop {
            let next = scalar_step(spec, &reference, 2);
            if next == reference {
                break;
            }
            reference = next;
        }
        let trace = runner.run(&a0, &schedule, default_max_steps(spec)).unwrap();
        assert_eq!(
            trace.final_set.as_ref(),
            Some(&reference),
            "mask {mask:#06x}"
        );
        let mut fast = a0.clone();
        assert_eq!(runner.percolates(&mut fast, &schedule), reference.is_full());
        percolating += u32::from(reference.is_full());
    }
    assert_eq!(percolating, PERCOLATING_Q4_R2);
}

/// Percolating subsets of `Q_4` under `r = 2`, from a separate sequential
/// enumeration.
const PERCOLATING_Q4_R2: u32 = 63_687;

#[test]
fn small_factorizations_verify() {
    for (n, k) in [
        (2, 1),
        (4, 2),
        (6, 3),
        (6, 2),
        (8, 4),
        (9, 3),
        (12, 3),
        (12, 4),
    ] {
        let f = baranyai(n, k).unwrap();
        verify_factorization(&f).unwrap();
        let per_factor = (n / k) as usize;
        assert!(f.factors().iter().all(|factor| factor.len() == per_factor));
    }
    assert_eq!(weight_codes(6, 3).len(), 20);
}
