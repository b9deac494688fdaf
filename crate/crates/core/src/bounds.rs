//! Tail inequalities for binomial and weighted binomial sums, each paired with
//! an exact evaluation so that `bound >= truth` can be checked numerically,
//! plus exact-enumeration checks of positive correlation (FKG) and of
//! independence at large Hamming distance on cubes with at most 16 vertices.
//!
//! Exact tails are summed in log space, smallest term first.

use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::cube::{hamming, CubeSpec, NeighborKernel, Vertex, VertexSet};
use crate::engine::ThresholdSchedule;

/// Largest `sum_i i * d_i` accepted by [`weighted_binom_tail_exact`].
pub const WEIGHTED_SUPPORT_CAP: u64 = 10_000;

/// Largest vertex count for the exhaustive checks (`2^16` initial sets).
pub const ENUMERATION_VERTEX_CAP: u64 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("precondition p * n^2 < 1 violated: p * n^2 = {value}")]
    SmallPViolated { value: f64 },
    #[error("support size {support} exceeds the cap {cap}")]
    SupportTooLarge { support: u64, cap: u64 },
    #[error("exhaustive enumeration needs at most {cap} vertices, got {vertices}")]
    TooManyVertices { vertices: u64, cap: u64 },
    #[error(
        "predicate `{which}` is not increasing: holds on {below:?} but not after adding {added:?}"
    )]
    NotMonotone {
        which: &'static str,
        below: VertexSet,
        added: Vertex,
    },
}

fn check_probability(p: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(BoundsError::Domain(format!(
            "probability {p} outside [0, 1]"
        )))
    }
}

/// Sum of nonnegative terms, smallest first.
fn sum_ascending(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// `exp(-2 t^2 / n)`: bounds both `P(Bin(n,p) >= np + t)` and
/// `P(Bin(n,p) <= np - t)`.
pub fn chernoff_bound(n: u64, t: f64) -> Result<f64, BoundsError> {
    if n == 0 || t.is_nan() || t <= 0.0 {
        return Err(BoundsError::Domain(format!(
            "need n >= 1 and t > 0, got n = {n}, t = {t}"
        )));
    }
    Ok((-2.0 * t * t / n as f64).exp())
}

/// `P(Bin(n, p) >= m)` for `0 <= m <= n + 1`, with absolute error below 1e-12.
pub fn exact_binom_tail(n: u64, p: f64, m: u64) -> Result<f64, BoundsError> {
    check_probability(p)?;
    if m > n + 1 {
        return Err(BoundsError::Domain(format!(
            "m = {m} exceeds n + 1 = {}",
            n + 1
        )));
    }
    if m == 0 {
        return Ok(1.0);
    }
    if m > n || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let terms = (m..=n)
        .map(|i| (ln_binomial(n, i) + i as f64 * lp + (n - i) as f64 * lq).exp())
        .collect();
    Ok(sum_ascending(terms).min(1.0))
}

/// `2 p^(m/2)`: bounds `P(Bin(n, p) >= m)` for `m in 1..=n` when `p n^2 < 1`.
pub fn small_p_tail_bound(n: u64, p: f64, m: u64) -> Result<f64, BoundsError> {
    check_probability(p)?;
    let value = p * (n as f64) * (n as f64);
    if value.is_nan() || value >= 1.0 {
        return Err(BoundsError::SmallPViolated { value });
    }
    if m == 0 || m > n {
        return Err(BoundsError::Domain(format!("m = {m} outside 1..={n}")));
    }
    Ok(2.0 * p.powf(m as f64 / 2.0))
}

/// `Y = sum_i i * X_i` with independent `X_i ~ Bin(d_i, p)`, `i = 1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBinomialSpec {
    d: Vec<u64>,
    p: f64,
}

impl WeightedBinomialSpec {
    /// `d[i-1]` is the size of weight class `i`.
    pub fn new(d: Vec<u64>, p: f64) -> Result<Self, BoundsError> {
        if d.is_empty() {
            return Err(BoundsError::Domain("need at least one weight class".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(BoundsError::Domain(format!("p = {p} outside (0, 1)")));
        }
        Ok(Self { d, p })
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn classes(&self) -> &[u64] {
        &self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `D(k) = sum_i i^2 d_i`.
    pub fn variance_proxy(&self) -> u64 {
        self.weighted(|i| i * i)
    }

    /// Largest value of `Y`, `sum_i i d_i`.
    pub fn support(&self) -> u64 {
        self.weighted(|i| i)
    }

    pub fn mean(&self) -> f64 {
        self.p * self.support() as f64
    }

    fn weighted(&self, f: impl Fn(u64) -> u64) -> u64 {
        self.d
            .iter()
            .enumerate()
            .map(|(i, &d)| f(i as u64 + 1) * d)
            .sum()
    }
}

/// `(2t)^(k-1) exp(-2 t^2 / D(k))`: bounds `P(Y >= E[Y] + t)`.
pub fn weighted_binom_tail_bound(spec: &WeightedBinomialSpec, t: f64) -> Result<f64, BoundsError> {
    let big_d = spec.variance_proxy();
    if t.is_nan() || t <= 0.0 || big_d == 0 {
        return Err(BoundsError::Domain(format!(
            "need t > 0 and D(k) > 0, got t = {t}, D = {big_d}"
        )));
    }
    let k = spec.k() as i32;
    Ok((2.0 * t).powi(k - 1) * (-2.0 * t * t / big_d as f64).exp())
}

/// `P(Y >= threshold)` from the exact distribution of `Y`.
pub fn weighted_binom_tail_exact(
    spec: &WeightedBinomialSpec,
    threshold: f64,
) -> Result<f64, BoundsError> {
    let support = spec.support();
    if support > WEIGHTED_SUPPORT_CAP {
        return Err(BoundsError::SupportTooLarge {
            support,
            cap: WEIGHTED_SUPPORT_CAP,
        });
    }
    let pmf = weighted_pmf(spec);
    // Thresholds such as E[Y] + t carry rounding noise; round toward the
    // larger event.
    let from = (threshold - 1e-9).ceil();
    if from <= 0.0 {
        return Ok(1.0);
    }
    let from = from as usize;
    if from >= pmf.len() {
        return Ok(0.0);
    }
    Ok(sum_ascending(pmf[from..].to_vec()).min(1.0))
}

/// Distribution of `Y` on `0..=support` by successive convolution.
pub fn weighted_pmf(spec: &WeightedBinomialSpec) -> Vec<f64> {
    let mut dist = vec![1.0];
    let (lp, lq) = (spec.p.ln(), (-spec.p).ln_1p());
    for (idx, &d) in spec.d.iter().enumerate() {
        let weight = idx + 1;
        let class: Vec<f64> = (0..=d)
            .map(|x| (ln_binomial(d, x) + x as f64 * lp + (d - x) as f64 * lq).exp())
            .collect();
        let mut next = vec![0.0; dist.len() + weight * d as usize];
        for (y, &py) in dist.iter().enumerate() {
            if py == 0.0 {
                continue;
            }
            for (x, &px) in class.iter().enumerate() {
                next[y + weight * x] += py * px;
            }
        }
        dist = next;
    }
    dist
}

/// `1 - Phi(z)` for the standard normal distribution.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Outcome of [`fkg_exact_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkgReport {
    pub p_a: f64,
    pub p_b: f64,
    pub p_a_and_b: f64,
    /// `P(A) * P(B)`.
    pub product: f64,
    /// `P(A ∩ B) >= P(A) P(B)` up to 1e-12.
    pub holds: bool,
}

/// Every subset of the `2^n` vertices with its product-measure weight.
fn enumerate_initial_sets(n: u32, p: f64) -> Result<Vec<(VertexSet, f64)>, BoundsError> {
    check_probability(p)?;
    let vertices = 1u64 << n;
    if vertices > ENUMERATION_VERTEX_CAP {
        return Err(BoundsError::TooManyVertices {
            vertices,
            cap: ENUMERATION_VERTEX_CAP,
        });
    }
    let weights: Vec<f64> = (0..=vertices)
        .map(|s| p.powi(s as i32) * (1.0 - p).powi((vertices - s) as i32))
        .collect();
    Ok((0..1u64 << vertices)
        .map(|mask| {
            let set = VertexSet::from_words(n, vec![mask]);
            (set, weights[mask.count_ones() as usize])
        })
        .collect())
}

/// Checks that `pred` is increasing: adding any vertex to a set where it
/// holds keeps it true. `values[mask]` is the predicate on the set `mask`.
fn verify_increasing(n: u32, values: &[bool], which: &'static str) -> Result<(), BoundsError> {
    let vertices = 1u32 << n;
    for (mask, &holds) in values.iter().enumerate() {
        if !holds {
            continue;
        }
        for v in 0..vertices {
            let bigger = mask | (1 << v);
            if !values[bigger] {
                return Err(BoundsError::NotMonotone {
                    which,
                    below: VertexSet::from_words(n, vec![mask as u64]),
                    added: Vertex(v),
                });
            }
        }
    }
    Ok(())
}

/// Exact `P(A ∩ B)` against `P(A) P(B)` for two increasing events under the
/// product measure with density `p` on a cube with at most 16 vertices.
///
/// Both predicates are evaluated on every initial set, and the same table is
/// used to confirm they are increasing.
pub fn fkg_exact_check(
    n: u32,
    p: f64,
    event_a: impl Fn(&VertexSet) -> bool,
    event_b: impl Fn(&VertexSet) -> bool,
) -> Result<FkgReport, BoundsError> {
    let sets = enumerate_initial_sets(n, p)?;
    let a: Vec<bool> = sets.iter().map(|(s, _)| event_a(s)).collect();
    let b: Vec<bool> = sets.iter().map(|(s, _)| event_b(s)).collect();
    verify_increasing(n, &a, "A")?;
    verify_increasing(n, &b, "B")?;

    let mut pa = Vec::new();
    let mut pb = Vec::new();
    let mut pab = Vec::new();
    for (i, (_, w)) in sets.iter().enumerate() {
        if a[i] {
            pa.push(*w);
        }
        if b[i] {
            pb.push(*w);
        }
        if a[i] && b[i] {
            pab.push(*w);
        }
    }
    let (p_a, p_b, p_a_and_b) = (sum_ascending(pa), sum_ascending(pb), sum_ascending(pab));
    let product = p_a * p_b;
    Ok(FkgReport {
        p_a,
        p_b,
        p_a_and_b,
        product,
        holds: p_a_and_b >= product - 1e-12,
    })
}

/// Outcome of [`independence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    /// `P(y ∈ A_j)` for each listed vertex.
    pub marginals: Vec<f64>,
    /// `P(every listed vertex ∈ A_j)`.
    pub joint: f64,
    /// Product of the marginals.
    pub product: f64,
    /// Smallest pairwise Hamming distance in the list.
    pub min_distance: u32,
    /// Whether `min_distance >= 2j + 1`, where independence is guaranteed.
    pub separated: bool,
    /// `|joint - product| <= 1e-12`.
    pub factorizes: bool,
}

/// Exact joint and marginal probabilities of `{y ∈ A_j}` over all initial
/// sets of a cube with at most 16 vertices.
pub fn independence_check(
    spec: CubeSpec,
    schedule: &ThresholdSchedule,
    steps: u64,
    vertices: &[Vertex],
    p: f64,
) -> Result<IndependenceReport, BoundsError> {
    if vertices.is_empty() {
        return Err(BoundsError::Domain("need at least one vertex".into()));
    }
    if let Some(v) = vertices.iter().find(|v| !spec.contains(**v)) {
        return Err(BoundsError::Domain(format!(
            "vertex {} outside {spec}",
            v.0
        )));
    }
    let sets = enumerate_initial_sets(spec.n(), p)?;
    let kernel = NeighborKernel::new(spec);
    let mut scratch = VertexSet::empty(spec.n());
    let mut marginal_terms = vec![Vec::new(); vertices.len()];
    let mut joint_terms = Vec::new();
    for (a0, w) in sets {
        let mut current = a0;
        for i in 1..=steps {
            if !kernel.step_into(&current, schedule.threshold(i), &mut scratch) {
                break;
            }
            std::mem::swap(&mut current, &mut scratch);
        }
        let mut all = true;
        for (terms, &y) in marginal_terms.iter_mut().zip(vertices) {
            if current.contains(y) {
                terms.push(w);
            } else {
                all = false;
            }
        }
        if all {
            joint_terms.push(w);
        }
    }
    let marginals: Vec<f64> = marginal_terms.into_iter().map(sum_ascending).collect();
    let joint = sum_ascending(joint_terms);
    let product = marginals.iter().product();
    let min_distance = vertices
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| vertices[i + 1..].iter().map(move |&b| hamming(a, b)))
        .min()
        .unwrap_or(u32::MAX);
    Ok(IndependenceReport {
        marginals,
        joint,
        product,
        min_distance,
        separated: u64::from(min_distance) > 2 * steps,
        factorizes: (joint - product).abs() <= 1e-12,
    })
}
