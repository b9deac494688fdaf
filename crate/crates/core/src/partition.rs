//! Distance partitions of vertex families and 1-factorizations of the
//! complete `k`-uniform hypergraph on `n` points.
//!
//! The factorization is built one ground element at a time. After placing
//! elements `0..j`, each of the `C(n-1, k-1)` factors is a list of `n/k`
//! disjoint partial edges covering `0..j`, and every `S ⊆ 0..j` with `|S| < k`
//! occurs `C(n-j, k-|S|)` times overall. Placing element `j` means choosing one
//! partial edge per factor to extend. The choice is an integral flow
//! `source -> factor -> S -> sink`. A fractional flow sending
//! `(k-|S|)/(n-j)` along every copy of `S` saturates all capacities, so an
//! integral maximum flow does too and the counting invariant carries to `j+1`.
//! At `j = n` every edge has size `k` and each `k`-subset appears exactly once.
//!
//! Subsets of the ground set are `u64` bitmasks (bit `i` is element `i`); the
//! text export numbers elements from 1.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::cube::{binomial, hamming, sphere, weight_codes, Vertex};

/// Default size cap on `C(n, k)` for [`baranyai`].
pub const DEFAULT_EDGE_CAP: u64 = 1_000_000;

/// Size cap on `C(n, k)` for the backtracking construction.
pub const BACKTRACK_EDGE_CAP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("minimum distance must be at least 1")]
    ZeroDistance,
    #[error("uniformity k = {k} must satisfy 1 <= k <= n = {n}")]
    BadUniformity { n: u32, k: u32 },
    #[error("no 1-factorization exists: k = {k} does not divide n = {n}")]
    NotDivisible { n: u32, k: u32 },
    #[error("C({n}, {k}) = {edges} edges exceeds the cap {cap}")]
    TooLarge {
        n: u32,
        k: u32,
        edges: u64,
        cap: u64,
    },
    #[error("ground set of {n} points does not fit in a 64-bit subset mask")]
    GroundSetTooLarge { n: u32 },
    #[error("flow step failed to saturate at element {element} and the instance is too large to backtrack")]
    FlowFailed { element: u32 },
    #[error("backtracking exhausted the search without a factorization")]
    SearchExhausted,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Disjoint blocks covering a vertex family, with a guaranteed minimum
/// Hamming distance between distinct members of the same block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<Vertex>>,
    pub universe: Vec<Vertex>,
    pub min_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionViolation {
    #[error("vertex {0:?} appears in more than one block")]
    Overlap(Vertex),
    #[error("vertex {0:?} of the universe is in no block")]
    Uncovered(Vertex),
    #[error("vertex {0:?} is in a block but not in the universe")]
    Foreign(Vertex),
    #[error("block {block} holds {a:?} and {b:?} at distance {distance} < {min}")]
    TooClose {
        block: usize,
        a: Vertex,
        b: Vertex,
        distance: u32,
        min: u32,
    },
}

impl Partition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Exhaustive check of disjointness, exact cover and the distance bound.
    pub fn verify(&self) -> Result<(), PartitionViolation> {
        let mut seen: HashMap<Vertex, usize> = HashMap::with_capacity(self.universe.len());
        for (bi, block) in self.blocks.iter().enumerate() {
            for &v in block {
                if seen.insert(v, bi).is_some() {
                    return Err(PartitionViolation::Overlap(v));
                }
            }
        }
        for &v in &self.universe {
            if seen.remove(&v).is_none() {
                return Err(PartitionViolation::Uncovered(v));
            }
        }
        if let Some((&v, _)) = seen.iter().min() {
            return Err(PartitionViolation::Foreign(v));
        }
        for (bi, block) in self.blocks.iter().enumerate() {
            for (i, &a) in block.iter().enumerate() {
                for &b in &block[i + 1..] {
                    let distance = hamming(a, b);
                    if distance < self.min_distance {
                        return Err(PartitionViolation::TooClose {
                            block: bi,
                            a,
                            b,
                            distance,
                            min: self.min_distance,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The same partition moved by `v -> v ^ x`; Hamming distances are kept.
    pub fn translate(&self, x: Vertex) -> Partition {
        let shift = |v: &Vertex| Vertex(v.0 ^ x.0);
        let mut universe: Vec<Vertex> = self.universe.iter().map(shift).collect();
        universe.sort_unstable();
        Partition {
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let mut moved: Vec<Vertex> = b.iter().map(shift).collect();
                    moved.sort_unstable();
                    moved
                })
                .collect(),
            universe,
            min_distance: self.min_distance,
        }
    }
}

/// `max_x |{y in U : d(x, y) <= d - 1}|`, the block-count bound met by the
/// greedy construction.
pub fn conflict_bound(universe: &[Vertex], d: u32) -> usize {
    universe
        .iter()
        .map(|&x| universe.iter().filter(|&&y| hamming(x, y) < d).count())
        .max()
        .unwrap_or(0)
}

/// Greedy coloring of the conflict graph `{y, z : d(y, z) < d}`: vertices in
/// ascending code order, each placed in the lowest-index block it fits.
pub fn distance_partition(universe: &[Vertex], d: u32) -> Result<Partition, PartitionError> {
    if d == 0 {
        return Err(PartitionError::ZeroDistance);
    }
    let mut universe = universe.to_vec();
    universe.sort_unstable();
    universe.dedup();

    let mut blocks: Vec<Vec<Vertex>> = Vec::new();
    let mut blocked = Vec::new();
    for &v in &universe {
        blocked.clear();
        blocked.resize(blocks.len(), false);
        for (bi, block) in blocks.iter().enumerate() {
            blocked[bi] = block.iter().any(|&u| hamming(u, v) < d);
        }
        match blocked.iter().position(|b| !b) {
            Some(bi) => blocks[bi].push(v),
            None => blocks.push(vec![v]),
        }
    }
    Ok(Partition {
        blocks,
        universe,
        min_distance: d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereRoute {
    /// Factors of a 1-factorization: disjoint supports, distance exactly `2k`.
    Factorization,
    /// Greedy distance partition.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpherePartition {
    pub partition: Partition,
    pub route: SphereRoute,
    /// `k * C(n, k-1)`.
    pub bound: u64,
}

impl SpherePartition {
    pub fn within_bound(&self) -> bool {
        self.partition.block_count() as u64 <= self.bound
    }
}

/// Partition of the radius-`k` sphere about the origin with within-block
/// distance at least `2k`. Use [`Partition::translate`] for other centers.
///
/// When `k | n` the blocks are the factors of [`baranyai`], giving exactly
/// `C(n-1, k-1)` blocks. Otherwise the greedy partition is used; it always
/// meets the distance guarantee, but may exceed `k * C(n, k-1)` blocks.
pub fn sphere_partition(n: u32, k: u32) -> Result<SpherePartition, PartitionError> {
    if k == 0 || k > n {
        return Err(PartitionError::BadUniformity { n, k });
    }
    let universe = sphere(n, Vertex(0), k);
    let bound = u64::from(k) * binomial(n, k - 1);
    if n.is_multiple_of(k) && binomial(n, k) <= DEFAULT_EDGE_CAP {
        let f = baranyai(n, k)?;
        let blocks = f
            .factors()
            .iter()
            .map(|factor| {
                let mut block: Vec<Vertex> = factor.iter().map(|&s| Vertex(s as u32)).collect();
                block.sort_unstable();
                block
            })
            .collect();
        return Ok(SpherePartition {
            partition: Partition {
                blocks,
                universe,
                min_distance: 2 * k,
            },
            route: SphereRoute::Factorization,
            bound,
        });
    }
    Ok(SpherePartition {
        partition: distance_partition(&universe, 2 * k)?,
        route: SphereRoute::Greedy,
        bound,
    })
}

/// A decomposition of all `k`-subsets of `{0..n}` into perfect matchings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u32,
    k: u32,
    factors: Vec<Vec<u64>>,
}

impl Factorization {
    /// Wraps raw factors in canonical order; nothing is checked here, see
    /// [`verify_factorization`].
    pub fn from_factors(n: u32, k: u32, factors: Vec<Vec<u64>>) -> Self {
        let mut f = Self { n, k, factors };
        f.canonicalize();
        f
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn factors(&self) -> &[Vec<u64>] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Vec<u64>> {
        self.factors
    }

    /// One factor per line; subsets are comma-separated 1-based elements,
    /// joined by `|`. Factors and subsets appear in lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for factor in &self.factors {
            let line: Vec<String> = factor
                .iter()
                .map(|&s| {
                    elements(s)
                        .map(|e| (e + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect();
            out.push_str(&line.join("|"));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Factorization::to_text`].
    pub fn from_text(n: u32, k: u32, text: &str) -> Result<Self, PartitionError> {
        let mut factors = Vec::new();
        for (li, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut factor = Vec::new();
            for part in line.split('|') {
                let mut mask = 0u64;
                for tok in part.split(',') {
                    let e: u32 = tok.trim().parse().map_err(|_| PartitionError::Parse {
                        line: li + 1,
                        message: format!("bad element `{tok}`"),
                    })?;
                    if e == 0 || e > n {
                        return Err(PartitionError::Parse {
                            line: li + 1,
                            message: format!("element {e} outside 1..={n}"),
                        });
                    }
                    mask |= 1u64 << (e - 1);
                }
                factor.push(mask);
            }
            factors.push(factor);
        }
        Ok(Self::from_factors(n, k, factors))
    }

    fn canonicalize(&mut self) {
        for factor in &mut self.factors {
            factor.sort_by(|&a, &b| lex_cmp(a, b));
        }
        self.factors.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| lex_cmp(x, y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| a.len().cmp(&b.len()))
        });
    }
}

fn elements(mask: u64) -> impl Iterator<Item = u32> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let e = m.trailing_zeros();
        m &= m - 1;
        Some(e)
    })
}

/// Lexicographic order of the ascending element lists.
fn lex_cmp(a: u64, b: u64) -> Ordering {
    let mut x = elements(a);
    let mut y = elements(b);
    loop {
        match (x.next(), y.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(p), Some(q)) if p != q => return p.cmp(&q),
            _ => {}
        }
    }
}

fn check_shape(n: u32, k: u32, cap: u64) -> Result<(), PartitionError> {
    if k == 0 || k > n {
        return Err(PartitionError::BadUniformity { n, k });
    }
    if n > 64 {
        return Err(PartitionError::GroundSetTooLarge { n });
    }
    if !n.is_multiple_of(k) {
        return Err(PartitionError::NotDivisible { n, k });
    }
    let edges = binomial(n, k);
    if edges > cap {
        return Err(PartitionError::TooLarge { n, k, edges, cap });
    }
    Ok(())
}

/// 1-factorization of the complete `k`-uniform hypergraph on `n` points,
/// built by the element-by-element integral flow described in the module
/// docs. Falls back to [`baranyai_backtrack`] for small instances if a flow
/// step ever fails to saturate.
pub fn baranyai(n: u32, k: u32) -> Result<Factorization, PartitionError> {
    baranyai_with_cap(n, k, DEFAULT_EDGE_CAP)
}

pub fn baranyai_with_cap(n: u32, k: u32, cap: u64) -> Result<Factorization, PartitionError> {
    check_shape(n, k, cap)?;
    match flow_construction(n, k) {
        Ok(factors) => Ok(Factorization::from_factors(n, k, factors)),
        Err(element) if binomial(n, k) <= BACKTRACK_EDGE_CAP => {
            let _ = element;
            baranyai_backtrack(n, k)
        }
        Err(element) => Err(PartitionError::FlowFailed { element }),
    }
}

fn flow_construction(n: u32, k: u32) -> Result<Vec<Vec<u64>>, u32> {
    let factor_count = binomial(n - 1, k - 1) as usize;
    let parts = (n / k) as usize;
    let mut factors = vec![vec![0u64; parts]; factor_count];

    for j in 0..n {
        let remaining = n - j - 1;
        // Node layout: 0 = source, 1 = sink, then factors, then subsets.
        let mut subset_index: HashMap<u64, usize> = HashMap::new();
        let mut subsets: Vec<u64> = Vec::new();
        for factor in &factors {
            for &s in factor {
                if s.count_ones() < k && !subset_index.contains_key(&s) {
                    subset_index.insert(s, subsets.len());
                    subsets.push(s);
                }
            }
        }
        let factor_node = |f: usize| 2 + f;
        let subset_node = |s: usize| 2 + factor_count + s;
        let mut net = FlowNetwork::new(2 + factor_count + subsets.len());
        let mut arcs: Vec<Vec<(u64, usize)>> = Vec::with_capacity(factor_count);
        for (fi, factor) in factors.iter().enumerate() {
            net.add_edge(0, factor_node(fi), 1);
            let mut counts: Vec<(u64, i64)> = Vec::new();
            for &s in factor {
                if s.count_ones() >= k {
                    continue;
                }
                match counts.iter_mut().find(|(t, _)| *t == s) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((s, 1)),
                }
            }
            arcs.push(
                counts
                    .into_iter()
                    .map(|(s, c)| {
                        (
                            s,
                            net.add_edge(factor_node(fi), subset_node(subset_index[&s]), c),
                        )
                    })
                    .collect(),
            );
        }
        for (si, &s) in subsets.iter().enumerate() {
            let demand = binomial(remaining, k - s.count_ones() - 1) as i64;
            if demand > 0 {
                net.add_edge(subset_node(si), 1, demand);
            }
        }
        if net.max_flow(0, 1) != factor_count as i64 {
            return Err(j);
        }
        for (factor, factor_arcs) in factors.iter_mut().zip(&arcs) {
            let chosen = factor_arcs
                .iter()
                .find(|&&(_, e)| net.flow(e) > 0)
                .map(|&(s, _)| s)
                .ok_or(j)?;
            let slot = factor.iter().position(|&p| p == chosen).ok_or(j)?;
            factor[slot] |= 1u64 << j;
        }
    }
    Ok(factors)
}

/// Exhaustive search for a 1-factorization, limited to
/// `C(n, k) <= BACKTRACK_EDGE_CAP`. Independent of the flow construction.
///
/// Factor `i` is pinned to contain the `i`-th edge through element 0, which
/// removes the factor-order symmetry.
pub fn baranyai_backtrack(n: u32, k: u32) -> Result<Factorization, PartitionError> {
    check_shape(n, k, BACKTRACK_EDGE_CAP)?;
    let edges: Vec<u64> = weight_codes(n, k).into_iter().map(u64::from).collect();
    let mut by_first: Vec<Vec<usize>> = vec![Vec::new(); n as usize];
    for (i, &e) in edges.iter().enumerate() {
        by_first[e.trailing_zeros() as usize].push(i);
    }
    let mut search = Backtrack {
        full: if n == 64 { !0 } else { (1u64 << n) - 1 },
        edges: &edges,
        by_first: &by_first,
        used: vec![false; edges.len()],
        factors: Vec::new(),
        current: Vec::new(),
        factor_count: binomial(n - 1, k - 1) as usize,
    };
    if search.extend(0) {
        let factors = search
            .factors
            .iter()
            .map(|f| f.iter().map(|&i| edges[i]).collect())
            .collect();
        Ok(Factorization::from_factors(n, k, factors))
    } else {
        Err(PartitionError::SearchExhausted)
    }
}

struct Backtrack<'a> {
    full: u64,
    edges: &'a [u64],
    by_first: &'a [Vec<usize>],
    used: Vec<bool>,
    factors: Vec<Vec<usize>>,
    current: Vec<usize>,
    factor_count: usize,
}

impl Backtrack<'_> {
    fn extend(&mut self, covered: u64) -> bool {
        if covered == self.full {
            let done = std::mem::take(&mut self.current);
            self.factors.push(done);
            if self.factors.len() == self.factor_count || self.extend(0) {
                return true;
            }
            self.current = self.factors.pop().unwrap_or_default();
            return false;
        }
        let first = (!covered).trailing_zeros() as usize;
        let candidates: &[usize] = if covered == 0 {
            // Element 0 opens a factor: take the next unused edge through it.
            match self.by_first[0].iter().position(|&i| !self.used[i]) {
                Some(p) => &self.by_first[0][p..p + 1],
                None => return false,
            }
        } else {
            &self.by_first[first]
        };
        for &i in candidates {
            let e = self.edges[i];
            if self.used[i] || e & covered != 0 {
                continue;
            }
            self.used[i] = true;
            self.current.push(i);
            if self.extend(covered | e) {
                return true;
            }
            self.current.pop();
            self.used[i] = false;
        }
        false
    }
}

/// Invariant of a factorization that failed, with a witness.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorizationViolation {
    #[error("uniformity: subset {} in factor {factor} has size {size}, expected {expected}", show(*subset))]
    Uniformity {
        factor: usize,
        subset: u64,
        size: u32,
        expected: u32,
    },
    #[error("range: subset {} in factor {factor} uses an element outside 1..={n}", show(*subset))]
    Range { factor: usize, subset: u64, n: u32 },
    #[error("disjointness: factor {factor} covers element {} twice", element + 1)]
    Overlap { factor: usize, element: u32 },
    #[error("spanning: factor {factor} misses element {}", element + 1)]
    NotSpanning { factor: usize, element: u32 },
    #[error("multiplicity: subset {} appears {count} times", show(*subset))]
    Multiplicity { subset: u64, count: usize },
    #[error("coverage: missing subset {}", show(*subset))]
    MissingSubset { subset: u64 },
    #[error("factor count: {found} factors, expected C(n-1,k-1) = {expected}")]
    FactorCount { found: usize, expected: u64 },
    #[error("shape: k = {k} does not divide n = {n}")]
    Shape { n: u32, k: u32 },
}

fn show(subset: u64) -> String {
    let inner: Vec<String> = elements(subset).map(|e| (e + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

impl FactorizationViolation {
    /// Short name of the violated invariant.
    pub fn invariant(&self) -> &'static str {
        match self {
            Self::Uniformity { .. } => "uniformity",
            Self::Range { .. } => "range",
            Self::Overlap { .. } => "disjointness",
            Self::NotSpanning { .. } => "spanning",
            Self::Multiplicity { .. } => "multiplicity",
            Self::MissingSubset { .. } => "coverage",
            Self::FactorCount { .. } => "factor count",
            Self::Shape { .. } => "shape",
        }
    }
}

/// Checks every invariant of a 1-factorization. Per-factor structure is
/// checked first, then global multiplicity, coverage and the factor count.
pub fn verify_factorization(f: &Factorization) -> Result<(), FactorizationViolation> {
    let (n, k) = (f.n, f.k);
    if k == 0 || k > n || n > 64 || n % k != 0 {
        return Err(FactorizationViolation::Shape { n, k });
    }
    let full = if n == 64 { !0 } else { (1u64 << n) - 1 };
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for (fi, factor) in f.factors.iter().enumerate() {
        let mut covered = 0u64;
        for &s in factor {
            if s & !full != 0 {
                return Err(FactorizationViolation::Range {
                    factor: fi,
                    subset: s,
                    n,
                });
            }
            if s.count_ones() != k {
                return Err(FactorizationViolation::Uniformity {
                    factor: fi,
                    subset: s,
                    size: s.count_ones(),
                    expected: k,
                });
            }
            if s & covered != 0 {
                return Err(FactorizationViolation::Overlap {
                    factor: fi,
                    element: (s & covered).trailing_zeros(),
                });
            }
            covered |= s;
            *counts.entry(s).or_default() += 1;
        }
        if covered != full {
            return Err(FactorizationViolation::NotSpanning {
                factor: fi,
                element: (!covered & full).trailing_zeros(),
            });
        }
    }
    let mut repeated: Vec<(u64, usize)> = counts
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(&s, &c)| (s, c))
        .collect();
    repeated.sort_by(|a, b| lex_cmp(a.0, b.0));
    if let Some(&(subset, count)) = repeated.first() {
        return Err(FactorizationViolation::Multiplicity { subset, count });
    }
    // Past 31 points coverage follows from distinctness plus the factor count.
    if n <= 31 {
        for code in weight_codes(n, k) {
            let s = u64::from(code);
            if !counts.contains_key(&s) {
                return Err(FactorizationViolation::MissingSubset { subset: s });
            }
        }
    }
    let expected = binomial(n - 1, k - 1);
    if f.factors.len() as u64 != expected {
        return Err(FactorizationViolation::FactorCount {
            found: f.factors.len(),
            expected,
        });
    }
    Ok(())
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Dinic maximum flow on a small dense-ish network.
struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    original: Vec<i64>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            original: Vec::new(),
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Returns the id of the forward arc; its residual twin is `id ^ 1`.
    fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.adj[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.original.push(cap);
        self.adj[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        self.original.push(0);
        id
    }

    fn flow(&self, edge: usize) -> i64 {
        self.original[edge] - self.cap[edge]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: i64) -> i64 {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adj[u].len() {
            let e = self.adj[u][self.cursor[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.cursor[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.cursor.fill(0);
            loop {
                let got = self.dfs(s, t, i64::MAX);
                if got == 0 {
                    break;
                }
                total += got;
            }
        }
        total
    }
}
