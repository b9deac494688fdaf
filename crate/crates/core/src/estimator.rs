//! Monte Carlo estimation of percolation probabilities and of the critical
//! probability.
//!
//! ## Coupling
//!
//! Every vertex `v` of trial `i` under master seed `s` draws one uniform value
//! `U(s, i, v)` in `(0, 1]` and is initially infected iff `U <= p`. The uniform
//! is word `v` of a ChaCha8 stream keyed on `s` with stream id `i`, so it can
//! be recomputed in any order and on any thread. For fixed `(s, i)` the initial
//! set is therefore nondecreasing in `p`, and because the dynamics are monotone
//! in the initial set, so is the percolation indicator of every trial.
//!
//! Estimates are pure functions of their plan: trials are independent and the
//! aggregate is a count, so the thread count never changes a result.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::cube::{CubeSpec, VertexSet};
use crate::engine::{default_max_steps, Runner, ThresholdSchedule};

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Minimum trials per bisection point.
pub const MIN_PC_TRIALS: u64 = 1_000;

/// Trials multiplier for the single re-evaluation of an ambiguous midpoint.
pub const WIDEN_FACTOR: u64 = 4;

/// Largest vertex count for [`exact_percolation_probability`].
pub const EXACT_VERTEX_CAP: u64 = 16;

const KEY_TAG: &[u8; 8] = b"bootperc";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("exact enumeration needs at most {cap} vertices, got {vertices}")]
    TooManyVertices { vertices: u64, cap: u64 },
    #[error("percolation probability does not bracket 1/2: P(p=0) = {at_zero}, P(p=1) = {at_one}")]
    NonBracketing { at_zero: f64, at_one: f64 },
}

/// Everything that determines a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub spec: CubeSpec,
    pub schedule: ThresholdSchedule,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl TrialPlan {
    pub fn new(
        spec: CubeSpec,
        schedule: ThresholdSchedule,
        p: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            spec,
            schedule,
            p,
            trials,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn at(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(EstimatorError::InvalidPlan(format!(
                "p = {} outside [0, 1]",
                self.p
            )));
        }
        if self.trials == 0 {
            return Err(EstimatorError::InvalidPlan(
                "trials must be at least 1".into(),
            ));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EstimatorError::InvalidPlan(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Generator for trial `trial` under `seed`; word `v` belongs to vertex `v`.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(KEY_TAG);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Maps a raw 32-bit draw to `(0, 1]`.
fn to_unit(x: u32) -> f64 {
    (u64::from(x) + 1) as f64 * (1.0 / (1u64 << 32) as f64)
}

/// `U(seed, trial, v)`, computed by random access into the stream.
pub fn uniform(seed: u64, trial: u64, vertex: u32) -> f64 {
    let mut rng = trial_rng(seed, trial);
    rng.set_word_pos(u128::from(vertex));
    to_unit(rng.next_u32())
}

/// Initial set `{v : U(seed, trial, v) <= p}`.
pub fn sample_initial(spec: CubeSpec, p: f64, seed: u64, trial: u64) -> VertexSet {
    let mut out = VertexSet::empty(spec.n());
    sample_into(spec, p, seed, trial, &mut out);
    out
}

fn sample_into(spec: CubeSpec, p: f64, seed: u64, trial: u64, out: &mut VertexSet) {
    // U <= p  <=>  x + 1 <= p 2^32  <=>  x < floor(p 2^32).
    let cut = (p.clamp(0.0, 1.0) * (1u64 << 32) as f64).floor() as u64;
    let words = out.words_mut();
    if cut == 0 {
        words.fill(0);
        return;
    }
    let mut rng = trial_rng(seed, trial);
    let lanes = spec.order().min(64) as usize;
    if cut > u64::from(u32::MAX) {
        words.fill(lane_mask(lanes));
        return;
    }
    let cut = cut as u32;
    let pack = packer();
    let mut block = [0u8; 4 * 64];
    for word in words.iter_mut() {
        rng.fill_bytes(&mut block[..4 * lanes]);
        *word = pack(&block, cut) & lane_mask(lanes);
    }
}

/// Bit `b` of the result is set iff little-endian draw `b` of `block` is
/// below `cut`.
#[inline(always)]
fn pack_below(block: &[u8; 256], cut: u32) -> u64 {
    let mut bits = 0u64;
    for b in 0..64 {
        let x = u32::from_le_bytes(block[4 * b..4 * b + 4].try_into().unwrap());
        bits |= u64::from(x < cut) << b;
    }
    bits
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn pack_below_avx2(block: &[u8; 256], cut: u32) -> u64 {
    pack_below(block, cut)
}

fn packer() -> fn(&[u8; 256], u32) -> u64 {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: only selected when the CPU supports AVX2.
        return |block, cut| unsafe { pack_below_avx2(block, cut) };
    }
    pack_below
}

fn lane_mask(lanes: usize) -> u64 {
    if lanes == 64 {
        !0
    } else {
        (1u64 << lanes) - 1
    }
}

/// Binomial proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let p_hat = successes as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(successes, trials, confidence);
        Self {
            successes,
            trials,
            p_hat,
            ci_low,
            ci_high,
            confidence,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Two-sided normal quantile for a central `confidence` mass.
pub fn z_for_confidence(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Wilson score interval, clamped so that `low <= p_hat <= high` within `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z = z_for_confidence(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).max(0.0).min(p_hat);
    let high = (center + half).min(1.0).max(p_hat);
    (low, high)
}

/// Estimated `P_p(percolation)` at one value of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercProbEstimate {
    pub p: f64,
    #[serde(flatten)]
    pub proportion: Proportion,
}

impl PercProbEstimate {
    pub fn p_hat(&self) -> f64 {
        self.proportion.p_hat
    }
}

/// Result of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub percolated: bool,
    pub fixpoint_step: u64,
}

/// Runs trial `trial` of `plan` from its coupled initial set.
pub fn run_trial(plan: &TrialPlan, trial: u64) -> TrialOutcome {
    let mut runner = Runner::new(plan.spec);
    let mut buf = VertexSet::empty(plan.spec.n());
    trial_with(&mut runner, &mut buf, plan, trial)
}

fn trial_with(
    runner: &mut Runner,
    buf: &mut VertexSet,
    plan: &TrialPlan,
    trial: u64,
) -> TrialOutcome {
    sample_into(plan.spec, plan.p, plan.seed, trial, buf);
    let fixpoint_step = runner
        .close(buf, &plan.schedule, default_max_steps(plan.spec), |_| {})
        .expect("the default step budget always reaches the fixpoint");
    TrialOutcome {
        percolated: buf.is_full(),
        fixpoint_step,
    }
}

fn percolates_with(runner: &mut Runner, buf: &mut VertexSet, plan: &TrialPlan, trial: u64) -> bool {
    sample_into(plan.spec, plan.p, plan.seed, trial, buf);
    runner.percolates(buf, &plan.schedule)
}

/// Folds `f` over `trial(i)` for trials `0..trials` in parallel.
fn fold_trials<X, G, T, F, R>(plan: &TrialPlan, trial: G, init: T, f: F, reduce: R) -> T
where
    X: Send,
    G: Fn(&mut Runner, &mut VertexSet, &TrialPlan, u64) -> X + Sync + Send,
    T: Send + Sync + Clone,
    F: Fn(T, X) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    (0..plan.trials)
        .into_par_iter()
        .map_init(
            || (Runner::new(plan.spec), VertexSet::empty(plan.spec.n())),
            |(runner, buf), i| trial(runner, buf, plan, i),
        )
        .fold(|| init.clone(), &f)
        .reduce(|| init.clone(), reduce)
}

/// Monte Carlo estimate of `P_p(percolation)` over trials `0..plan.trials`.
pub fn percolation_probability(plan: &TrialPlan) -> Result<PercProbEstimate, EstimatorError> {
    plan.validate()?;
    let successes = fold_trials(
        plan,
        percolates_with,
        0u64,
        |acc, hit| acc + u64::from(hit),
        |a, b| a + b,
    );
    Ok(PercProbEstimate {
        p: plan.p,
        proportion: Proportion::new(successes, plan.trials, plan.confidence),
    })
}

/// Number of percolating initial sets of each size `0..=2^n`.
pub fn percolating_set_counts(
    spec: CubeSpec,
    schedule: &ThresholdSchedule,
) -> Result<Vec<u64>, EstimatorError> {
    let vertices = spec.order();
    if vertices > EXACT_VERTEX_CAP {
        return Err(EstimatorError::TooManyVertices {
            vertices,
            cap: EXACT_VERTEX_CAP,
        });
    }
    let mut runner = Runner::new(spec);
    let mut counts = vec![0u64; vertices as usize + 1];
    for mask in 0..1u64 << vertices {
        let mut set = VertexSet::from_words(spec.n(), vec![mask]);
        runner.close(&mut set, schedule, default_max_steps(spec), |_| {});
        if set.is_full() {
            counts[mask.count_ones() as usize] += 1;
        }
    }
    Ok(counts)
}

/// `sum over percolating S of p^|S| (1-p)^(2^n - |S|)`, by enumeration.
pub fn exact_percolation_probability(
    spec: CubeSpec,
    schedule: &ThresholdSchedule,
    p: f64,
) -> Result<f64, EstimatorError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EstimatorError::InvalidPlan(format!(
            "p = {p} outside [0, 1]"
        )));
    }
    let counts = percolating_set_counts(spec, schedule)?;
    let vertices = counts.len() as i32 - 1;
    let mut terms: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(s, &c)| c as f64 * p.powi(s as i32) * (1.0 - p).powi(vertices - s as i32))
        .collect();
    terms.sort_by(f64::total_cmp);
    Ok(terms.into_iter().sum())
}

/// Bisection settings for [`estimate_pc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcSearch {
    pub trials_per_point: u64,
    pub tolerance: f64,
    pub seed: u64,
    pub confidence: f64,
}

impl PcSearch {
    pub fn new(trials_per_point: u64, tolerance: f64, seed: u64) -> Self {
        Self {
            trials_per_point,
            tolerance,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

/// Bracket around the crossing `P_p(percolation) = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    /// Every evaluation in order, including a widened re-run.
    pub evaluations: Vec<PercProbEstimate>,
    /// The search stopped because a midpoint stayed ambiguous after widening.
    pub ci_limited: bool,
    pub schedule: ThresholdSchedule,
    pub search: PcSearch,
}

impl PcEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Bisection for `p_c` on `[0, 1]`.
///
/// Each midpoint is estimated with `trials_per_point` coupled trials (the same
/// seed at every point). A point whose estimate exceeds 1/2 becomes `hi`;
/// otherwise, ties included, it becomes `lo`. When the Wilson interval at a
/// midpoint contains 1/2 the point is re-run once with `WIDEN_FACTOR` times the
/// trials; if it is still ambiguous the search stops and reports the current
/// bracket as CI-limited. Otherwise it stops once `hi - lo <= tolerance`.
/// The endpoints are never sampled: with every threshold at least 1 the empty
/// set never percolates and the full set always does.
pub fn estimate_pc(
    spec: CubeSpec,
    schedule: &ThresholdSchedule,
    search: &PcSearch,
) -> Result<PcEstimate, EstimatorError> {
    if search.trials_per_point < MIN_PC_TRIALS {
        return Err(EstimatorError::InvalidPlan(format!(
            "trials_per_point = {} below {MIN_PC_TRIALS}",
            search.trials_per_point
        )));
    }
    if !(search.tolerance > 0.0 && search.tolerance < 1.0) {
        return Err(EstimatorError::InvalidPlan(format!(
            "tolerance {} outside (0, 1)",
            search.tolerance
        )));
    }
    check_endpoints(spec, schedule)?;

    let base = TrialPlan::new(spec, *schedule, 0.5, search.trials_per_point, search.seed)
        .with_confidence(search.confidence);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut evaluations = Vec::new();
    let mut ci_limited = false;
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        let mut est = percolation_probability(&base.at(mid))?;
        evaluations.push(est);
        if est.proportion.contains(0.5) {
            let wide = TrialPlan {
                trials: search.trials_per_point * WIDEN_FACTOR,
                ..base.at(mid)
            };
            est = percolation_probability(&wide)?;
            evaluations.push(est);
            if est.proportion.contains(0.5) {
                ci_limited = true;
                break;
            }
        }
        if est.p_hat() > 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PcEstimate {
        lo,
        hi,
        target: 0.5,
        evaluations,
        ci_limited,
        schedule: *schedule,
        search: *search,
    })
}

fn check_endpoints(spec: CubeSpec, schedule: &ThresholdSchedule) -> Result<(), EstimatorError> {
    let mut runner = Runner::new(spec);
    let budget = default_max_steps(spec);
    let mut empty = VertexSet::empty(spec.n());
    runner.close(&mut empty, schedule, budget, |_| {});
    let mut full = VertexSet::full(spec.n());
    runner.close(&mut full, schedule, budget, |_| {});
    let (at_zero, at_one) = (
        f64::from(u8::from(empty.is_full())),
        f64::from(u8::from(full.is_full())),
    );
    if at_zero > 0.5 || at_one <= 0.5 {
        return Err(EstimatorError::NonBracketing { at_zero, at_one });
    }
    Ok(())
}

/// How quickly trials reach their fixpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationProfile {
    /// fixpoint step -> number of trials.
    pub histogram: BTreeMap<u64, u64>,
    /// Trials with `A_2 = A_1`, i.e. fixpoint step at most 1.
    pub stable_after_one: Proportion,
    /// Trials with `A_3 = A_2`, i.e. fixpoint step at most 2.
    pub stable_after_two: Proportion,
    pub percolated: Proportion,
}

pub fn stabilization_profile(plan: &TrialPlan) -> Result<StabilizationProfile, EstimatorError> {
    plan.validate()?;
    let histogram = fold_trials(
        plan,
        trial_with,
        (BTreeMap::new(), 0u64),
        |(mut h, perc), o| {
            *h.entry(o.fixpoint_step).or_insert(0u64) += 1;
            (h, perc + u64::from(o.percolated))
        },
        |(mut a, pa), (b, pb)| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            (a, pa + pb)
        },
    );
    let (histogram, percolated) = histogram;
    let within = |limit: u64| histogram.range(..=limit).map(|(_, c)| c).sum::<u64>();
    Ok(StabilizationProfile {
        stable_after_one: Proportion::new(within(1), plan.trials, plan.confidence),
        stable_after_two: Proportion::new(within(2), plan.trials, plan.confidence),
        percolated: Proportion::new(percolated, plan.trials, plan.confidence),
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Vertex;

    fn q(n: u32) -> CubeSpec {
        CubeSpec::hypercube(n).unwrap()
    }

    #[test]
    fn sampling_endpoints() {
        assert!(sample_initial(q(7), 0.0, 3, 11).is_empty());
        assert!(sample_initial(q(7), 1.0, 3, 11).is_full());
        assert!(sample_initial(q(3), 1.0, 3, 11).is_full());
    }

    #[test]
    fn sampling_is_coupled_in_p() {
        for trial in 0..20 {
            let low = sample_initial(q(9), 0.2, 99, trial);
            let high = sample_initial(q(9), 0.7, 99, trial);
            assert!(low.is_subset(&high));
        }
    }

    #[test]
    fn sampling_matches_random_access_uniforms() {
        let spec = q(7);
        let set = sample_initial(spec, 0.37, 5, 8);
        for v in 0..128 {
            assert_eq!(
                set.contains(Vertex(v)),
                uniform(5, 8, v) <= 0.37,
                "vertex {v}"
            );
        }
        assert_ne!(
            sample_initial(spec, 0.5, 5, 8),
            sample_initial(spec, 0.5, 5, 9)
        );
        assert_ne!(
            sample_initial(spec, 0.5, 5, 8),
            sample_initial(spec, 0.5, 6, 8)
        );
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, 0.99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson_interval(100, 100, 0.99);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.9);
        // z for 99% is 2.5758293035489...
        assert!((z_for_confidence(0.99) - 2.575_829_303_548_9).abs() < 1e-9);
    }

    #[test]
    fn exact_q2_boot2() {
        let boot2 = ThresholdSchedule::boot(2).unwrap();
        assert_eq!(
            exact_percolation_probability(q(2), &boot2, 0.5).unwrap(),
            7.0 / 16.0
        );
        assert_eq!(
            percolating_set_counts(q(2), &boot2).unwrap(),
            vec![0, 0, 2, 4, 1]
        );
        for i in 1..10 {
            let p = i as f64 / 10.0;
            let closed = 2.0 * p * p - p.powi(4);
            assert!(
                (exact_percolation_probability(q(2), &boot2, p).unwrap() - closed).abs() < 1e-12
            );
        }
        assert_eq!(
            exact_percolation_probability(q(3), &boot2, 1.0).unwrap(),
            1.0
        );
        assert!(exact_percolation_probability(q(5), &boot2, 0.5).is_err());
    }

    #[test]
    fn monte_carlo_endpoints_are_exact() {
        let boot2 = ThresholdSchedule::boot(2).unwrap();
        let one = percolation_probability(&TrialPlan::new(q(6), boot2, 1.0, 200, 1)).unwrap();
        assert_eq!(one.p_hat(), 1.0);
        let zero = percolation_probability(&TrialPlan::new(q(6), boot2, 0.0, 200, 1)).unwrap();
        assert_eq!(zero.p_hat(), 0.0);
        assert!(percolation_probability(&TrialPlan::new(q(6), boot2, 1.5, 200, 1)).is_err());
        assert!(percolation_probability(&TrialPlan::new(q(6), boot2, 0.5, 0, 1)).is_err());
    }

    #[test]
    fn monte_carlo_q2_matches_enumeration() {
        let boot2 = ThresholdSchedule::boot(2).unwrap();
        let est = percolation_probability(&TrialPlan::new(q(2), boot2, 0.5, 100_000, 17)).unwrap();
        assert!(est.proportion.contains(7.0 / 16.0), "{est:?}");
    }

    #[test]
    fn pc_q2_r1() {
        let boot1 = ThresholdSchedule::boot(1).unwrap();
        let pc = estimate_pc(q(2), &boot1, &PcSearch::new(20_000, 0.01, 3)).unwrap();
        let truth = 1.0 - 2f64.powf(-0.25);
        assert!(pc.contains(truth), "{pc:?}");
        assert!(pc.lo < pc.hi);
        if !pc.ci_limited {
            assert!(pc.width() <= 0.01);
        }
    }

    #[test]
    fn pc_search_validation() {
        let boot1 = ThresholdSchedule::boot(1).unwrap();
        assert!(estimate_pc(q(2), &boot1, &PcSearch::new(999, 0.01, 3)).is_err());
        assert!(estimate_pc(q(2), &boot1, &PcSearch::new(1000, 0.0, 3)).is_err());
    }

    #[test]
    fn stabilization_examples() {
        let boot2 = ThresholdSchedule::boot(2).unwrap();
        let prof = stabilization_profile(&TrialPlan::new(q(2), boot2, 0.5, 5_000, 2)).unwrap();
        assert!(prof.histogram.keys().all(|&s| s <= 1));
        assert_eq!(prof.stable_after_one.successes, 5_000);

        let prof = stabilization_profile(&TrialPlan::new(q(6), boot2, 1.0, 100, 2)).unwrap();
        assert_eq!(prof.histogram, BTreeMap::from([(0, 100)]));
        assert_eq!(prof.percolated.successes, 100);
        let prof = stabilization_profile(&TrialPlan::new(q(6), boot2, 0.0, 100, 2)).unwrap();
        assert_eq!(prof.histogram, BTreeMap::from([(0, 100)]));
        assert_eq!(prof.percolated.successes, 0);
    }
}
