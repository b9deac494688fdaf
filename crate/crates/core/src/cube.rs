//! Graph model of the hypercube `Q_n` and the generalized cube `Q_{k,n}`.
//!
//! Vertices are the integers `0..2^n`; bit `i` of the code is coordinate `i`.
//! Two vertices are adjacent when their Hamming distance lies in `1..=k`, so
//! `k = 1` gives the ordinary hypercube.
//!
//! Adjacency lists are never materialized. Every neighborhood is described by
//! the list of flip masks (codes of Hamming weight `1..=k`), and the bulk
//! counting kernel works on the membership bits of a [`VertexSet`] 64 vertices
//! at a time, accumulating the per-vertex counts in bit-sliced counter planes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the dimension: a `VertexSet` over `Q_28` is 32 MiB.
pub const DEFAULT_N_MAX: u32 = 28;

/// Hard ceiling regardless of configuration; vertex codes are `u32`.
pub const HARD_N_MAX: u32 = 31;

/// Enough planes to hold any degree reachable below [`HARD_N_MAX`].
const MAX_PLANES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CubeError {
    #[error("dimension n must be at least 1")]
    ZeroDimension,
    #[error("radius k = {k} must satisfy 1 <= k <= n = {n}")]
    BadRadius { n: u32, k: u32 },
    #[error("dimension n = {n} exceeds the cap n_max = {n_max}")]
    TooLarge { n: u32, n_max: u32 },
}

/// Parameters `(n, k)` of the graph family, with the configured size cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeSpec {
    n: u32,
    k: u32,
    n_max: u32,
}

impl CubeSpec {
    pub fn new(n: u32, k: u32) -> Result<Self, CubeError> {
        Self::with_cap(n, k, DEFAULT_N_MAX)
    }

    /// Like [`CubeSpec::new`] with an explicit cap (clamped to [`HARD_N_MAX`]).
    pub fn with_cap(n: u32, k: u32, n_max: u32) -> Result<Self, CubeError> {
        let n_max = n_max.min(HARD_N_MAX);
        if n == 0 {
            return Err(CubeError::ZeroDimension);
        }
        if k == 0 || k > n {
            return Err(CubeError::BadRadius { n, k });
        }
        if n > n_max {
            return Err(CubeError::TooLarge { n, n_max });
        }
        Ok(Self { n, k, n_max })
    }

    /// The ordinary hypercube `Q_n`.
    pub fn hypercube(n: u32) -> Result<Self, CubeError> {
        Self::new(n, 1)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Number of vertices, `2^n`.
    pub fn order(&self) -> u64 {
        1u64 << self.n
    }

    /// Degree `N = sum_{i=1..k} C(n, i)`.
    pub fn degree(&self) -> u64 {
        (1..=self.k).map(|i| binomial(self.n, i)).sum()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        u64::from(v.0) < self.order()
    }

    /// All codes of Hamming weight `1..=k`, ascending.
    pub fn flip_masks(&self) -> Vec<u32> {
        let mut masks: Vec<u32> = (1..=self.k).flat_map(|w| weight_codes(self.n, w)).collect();
        masks.sort_unstable();
        masks
    }

    /// Neighbors of `x` in ascending code order.
    pub fn neighbors(&self, x: Vertex) -> Vec<Vertex> {
        debug_assert!(self.contains(x));
        let mut out: Vec<Vertex> = self
            .flip_masks()
            .into_iter()
            .map(|m| Vertex(x.0 ^ m))
            .collect();
        out.sort_unstable();
        out
    }
}

impl fmt::Display for CubeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "Q_{}", self.n)
        } else {
            write!(f, "Q_{{{},{}}}", self.k, self.n)
        }
    }
}

/// A vertex of `{0,1}^n`, encoded with bit `i` holding coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub u32);

impl Vertex {
    pub fn code(self) -> u32 {
        self.0
    }

    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }
}

impl From<u32> for Vertex {
    fn from(code: u32) -> Self {
        Vertex(code)
    }
}

pub fn hamming(u: Vertex, v: Vertex) -> u32 {
    (u.0 ^ v.0).count_ones()
}

/// `C(n, k)` as an integer; exact for every argument this crate uses.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

/// Codes in `0..2^n` of weight exactly `w`, ascending (Gosper's hack).
pub fn weight_codes(n: u32, w: u32) -> Vec<u32> {
    if w > n {
        return Vec::new();
    }
    if w == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::with_capacity(binomial(n, w) as usize);
    let mut c: u64 = (1u64 << w) - 1;
    while c < limit {
        out.push(c as u32);
        let lowest = c & c.wrapping_neg();
        let ripple = c + lowest;
        c = (((ripple ^ c) >> 2) / lowest) | ripple;
    }
    out
}

/// The sphere `S(x, l)`: vertices at Hamming distance exactly `l` from `x`,
/// in ascending code order.
pub fn sphere(n: u32, x: Vertex, l: u32) -> Vec<Vertex> {
    let mut out: Vec<Vertex> = weight_codes(n, l)
        .into_iter()
        .map(|m| Vertex(x.0 ^ m))
        .collect();
    out.sort_unstable();
    out
}

/// One membership bit per vertex of `Q_n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: u32,
    words: Vec<u64>,
}

impl VertexSet {
    pub fn empty(n: u32) -> Self {
        Self {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn full(n: u32) -> Self {
        let mut s = Self {
            n,
            words: vec![!0; word_count(n)],
        };
        s.clear_tail();
        s
    }

    pub fn from_vertices<I: IntoIterator<Item = Vertex>>(n: u32, vertices: I) -> Self {
        let mut s = Self::empty(n);
        for v in vertices {
            s.insert(v);
        }
        s
    }

    /// Builds a set from raw membership words; bits beyond `2^n` are dropped.
    pub fn from_words(n: u32, mut words: Vec<u64>) -> Self {
        words.resize(word_count(n), 0);
        let mut s = Self { n, words };
        s.clear_tail();
        s
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    /// Number of vertices in the ambient cube.
    pub fn universe_len(&self) -> u64 {
        1u64 << self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn contains(&self, v: Vertex) -> bool {
        let i = v.0 as usize;
        debug_assert!((i as u64) < self.universe_len());
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    pub fn insert(&mut self, v: Vertex) {
        let i = v.0 as usize;
        assert!(
            (i as u64) < self.universe_len(),
            "vertex {i} outside Q_{}",
            self.n
        );
        self.words[i >> 6] |= 1 << (i & 63);
    }

    pub fn remove(&mut self, v: Vertex) {
        let i = v.0 as usize;
        assert!(
            (i as u64) < self.universe_len(),
            "vertex {i} outside Q_{}",
            self.n
        );
        self.words[i >> 6] &= !(1 << (i & 63));
    }

    pub fn len(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe_len()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            n: self.n,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.clear_tail();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "vertex sets over different cubes");
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Members in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some(Vertex(((wi as u32) << 6) | bit))
            })
        })
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.n, other.n, "vertex sets over different cubes");
        Self {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    fn clear_tail(&mut self) {
        let mask = tail_mask(self.n);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VertexSet(n={}, ", self.n)?;
        if self.n <= 8 {
            f.debug_set().entries(self.iter().map(|v| v.0)).finish()?;
        } else {
            write!(f, "|A|={}", self.len())?;
        }
        write!(f, ")")
    }
}

fn word_count(n: u32) -> usize {
    if n >= 6 {
        1usize << (n - 6)
    } else {
        1
    }
}

/// Valid-bit mask for the last word (all ones once `2^n >= 64`).
fn tail_mask(n: u32) -> u64 {
    if n >= 6 {
        !0
    } else {
        (1u64 << (1u32 << n)) - 1
    }
}

/// Positions whose index has bit `j` clear, for `j < 6`.
const LOW_HALVES: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Moves the bit at position `i` to position `i ^ low`, for `low < 64`.
#[inline(always)]
fn permute_within_word(mut w: u64, mut low: u32) -> u64 {
    while low != 0 {
        let j = low.trailing_zeros();
        let m = LOW_HALVES[j as usize];
        let s = 1u32 << j;
        w = ((w & m) << s) | ((w >> s) & m);
        low &= low - 1;
    }
    w
}

#[derive(Debug, Clone, Copy)]
struct FlipMask {
    word_xor: usize,
    low: u32,
}

/// The neighborhood structure of a [`CubeSpec`], precomputed once and reused
/// across steps.
#[derive(Debug, Clone)]
pub struct NeighborKernel {
    spec: CubeSpec,
    masks: Vec<FlipMask>,
    planes: usize,
}

impl NeighborKernel {
    pub fn new(spec: CubeSpec) -> Self {
        let masks = spec
            .flip_masks()
            .into_iter()
            .map(|m| FlipMask {
                word_xor: (m >> 6) as usize,
                low: m & 63,
            })
            .collect();
        let planes = counter_planes(spec.degree());
        Self {
            spec,
            masks,
            planes,
        }
    }

    pub fn spec(&self) -> CubeSpec {
        self.spec
    }

    /// Number of bit planes, `ceil(log2(N + 1))`.
    pub fn planes(&self) -> usize {
        self.planes
    }

    /// Bit-sliced counts `|N(v) ∩ A|` for the 64 vertices of word `w`.
    #[inline]
    fn accumulate(&self, a: &[u64], w: usize, acc: &mut [u64; MAX_PLANES]) {
        match self.planes {
            1 => self.accumulate_fixed::<1>(a, w, acc),
            2 => self.accumulate_fixed::<2>(a, w, acc),
            3 => self.accumulate_fixed::<3>(a, w, acc),
            4 => self.accumulate_fixed::<4>(a, w, acc),
            5 => self.accumulate_fixed::<5>(a, w, acc),
            6 => self.accumulate_fixed::<6>(a, w, acc),
            7 => self.accumulate_fixed::<7>(a, w, acc),
            8 => self.accumulate_fixed::<8>(a, w, acc),
            _ => self.accumulate_any(a, w, acc),
        }
    }

    #[inline(always)]
    fn accumulate_fixed<const P: usize>(&self, a: &[u64], w: usize, out: &mut [u64; MAX_PLANES]) {
        let mut acc = [0u64; P];
        let mut pairs = self.masks.chunks_exact(2);
        for pair in &mut pairs {
            let x = permute_within_word(a[w ^ pair[0].word_xor], pair[0].low);
            let y = permute_within_word(a[w ^ pair[1].word_xor], pair[1].low);
            // Full adder on the ones plane, then ripple the twos carry.
            let p0 = acc[0];
            acc[0] = p0 ^ x ^ y;
            let mut carry = (p0 & x) | (p0 & y) | (x & y);
            for plane in acc[1..].iter_mut() {
                let s = *plane ^ carry;
                carry &= *plane;
                *plane = s;
            }
        }
        if let [m] = pairs.remainder() {
            let mut carry = permute_within_word(a[w ^ m.word_xor], m.low);
            for plane in acc.iter_mut() {
                let s = *plane ^ carry;
                carry &= *plane;
                *plane = s;
            }
        }
        out[..P].copy_from_slice(&acc);
    }

    fn accumulate_any(&self, a: &[u64], w: usize, acc: &mut [u64; MAX_PLANES]) {
        let planes = self.planes;
        acc[..planes].fill(0);
        for m in &self.masks {
            let mut carry = permute_within_word(a[w ^ m.word_xor], m.low);
            for plane in acc[..planes].iter_mut() {
                if carry == 0 {
                    break;
                }
                let s = *plane ^ carry;
                carry &= *plane;
                *plane = s;
            }
        }
    }

    /// Bulk `|N(v) ∩ A|` for every vertex.
    pub fn counts(&self, a: &VertexSet) -> NeighborCounts {
        assert_eq!(
            a.dimension(),
            self.spec.n,
            "vertex set over a different cube"
        );
        let words = a.words();
        let mut planes = vec![vec![0u64; words.len()]; self.planes];
        let mut acc = [0u64; MAX_PLANES];
        for w in 0..words.len() {
            self.accumulate(words, w, &mut acc);
            for (plane, &bits) in planes.iter_mut().zip(&acc[..self.planes]) {
                plane[w] = bits;
            }
        }
        NeighborCounts {
            n: self.spec.n,
            planes,
        }
    }

    /// Writes `A ∪ {v : |N(v) ∩ A| >= threshold}` into `out` and reports
    /// whether any vertex was added.
    pub fn step_into(&self, a: &VertexSet, threshold: u64, out: &mut VertexSet) -> bool {
        assert_eq!(
            a.dimension(),
            self.spec.n,
            "vertex set over a different cube"
        );
        assert_eq!(
            out.dimension(),
            self.spec.n,
            "vertex set over a different cube"
        );
        let src = a.words();
        let tail = tail_mask(self.spec.n);
        let dst = out.words_mut();
        if threshold > self.spec.degree() {
            dst.copy_from_slice(src);
            return false;
        }
        let mut acc = [0u64; MAX_PLANES];
        let mut changed = false;
        for w in 0..src.len() {
            self.accumulate(src, w, &mut acc);
            let hit = at_least(&acc[..self.planes], threshold) & tail;
            let next = src[w] | hit;
            changed |= next != src[w];
            dst[w] = next;
        }
        changed
    }
}

/// Words handled together by the grouped closure.
const LANES: usize = 4;
type Lanes = [u64; LANES];

impl NeighborKernel {
    /// Closure of `a` under a constant `threshold`, updated in place.
    ///
    /// Words are revisited in sweeps and each update sees every earlier one,
    /// so intermediate sets do not match the synchronous steps; the closure
    /// itself is order independent and therefore identical.
    pub fn close_in_place(&self, a: &mut VertexSet, threshold: u64) {
        assert_eq!(
            a.dimension(),
            self.spec.n,
            "vertex set over a different cube"
        );
        if threshold > self.spec.degree() {
            return;
        }
        let words = a.words_mut();
        if words.len() < LANES {
            return self.close_words(words, threshold);
        }
        match self.planes {
            1 => self.close_grouped_dispatch::<1>(words, threshold),
            2 => self.close_grouped_dispatch::<2>(words, threshold),
            3 => self.close_grouped_dispatch::<3>(words, threshold),
            4 => self.close_grouped_dispatch::<4>(words, threshold),
            5 => self.close_grouped_dispatch::<5>(words, threshold),
            6 => self.close_grouped_dispatch::<6>(words, threshold),
            7 => self.close_grouped_dispatch::<7>(words, threshold),
            8 => self.close_grouped_dispatch::<8>(words, threshold),
            _ => self.close_words(words, threshold),
        }
    }

    /// One word at a time; used for tiny cubes and very large degrees.
    fn close_words(&self, words: &mut [u64], threshold: u64) {
        let tail = tail_mask(self.spec.n);
        let mut acc = [0u64; MAX_PLANES];
        let mut word_xors: Vec<usize> = self.masks.iter().map(|m| m.word_xor).collect();
        word_xors.sort_unstable();
        word_xors.dedup();
        let mut dirty = vec![true; words.len()];
        let mut pending = words.len();
        while pending > 0 {
            for w in 0..words.len() {
                if !dirty[w] {
                    continue;
                }
                dirty[w] = false;
                pending -= 1;
                let mut grew = false;
                loop {
                    self.accumulate(words, w, &mut acc);
                    let hit = at_least(&acc[..self.planes], threshold) & !words[w] & tail;
                    if hit == 0 {
                        break;
                    }
                    words[w] |= hit;
                    grew = true;
                }
                if grew {
                    for &x in &word_xors {
                        let u = w ^ x;
                        if u != w && !dirty[u] {
                            dirty[u] = true;
                            pending += 1;
                        }
                    }
                }
            }
        }
    }

    fn close_grouped_dispatch<const P: usize>(&self, words: &mut [u64], threshold: u64) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            return unsafe { self.close_grouped_avx2::<P>(words, threshold) };
        }
        self.close_grouped::<P>(words, threshold)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn close_grouped_avx2<const P: usize>(&self, words: &mut [u64], threshold: u64) {
        self.close_grouped::<P>(words, threshold)
    }

    /// Groups of `LANES` aligned words: for a word offset `x`, group `g`
    /// reads the aligned block at `g ^ (x & !3)` with its lanes permuted by
    /// `x & 3`, so every lane runs the same instruction stream.
    #[inline(always)]
    fn close_grouped<const P: usize>(&self, words: &mut [u64], threshold: u64) {
        let groups = words.len() / LANES;
        let mut block_xors: Vec<usize> = self.masks.iter().map(|m| m.word_xor / LANES).collect();
        block_xors.sort_unstable();
        block_xors.dedup();
        // Masks reading inside the group change between repeats of one visit;
        // the rest are summed once per visit.
        let (inner, outer): (Vec<FlipMask>, Vec<FlipMask>) =
            self.masks.iter().partition(|m| m.word_xor < LANES);
        let mut dirty = vec![true; groups];
        let mut pending = groups;
        let mut forward = true;
        while pending > 0 {
            // Alternate directions so growth travels both ways within a pass.
            for i in 0..groups {
                let g = if forward { i } else { groups - 1 - i };
                if !dirty[g] {
                    continue;
                }
                dirty[g] = false;
                pending -= 1;
                if words[g * LANES..(g + 1) * LANES].iter().all(|&x| x == !0) {
                    continue;
                }
                let mut grew = false;
                let base = accumulate_group::<P>(&outer, words, g * LANES, [[0; LANES]; P]);
                loop {
                    let acc = accumulate_group::<P>(&inner, words, g * LANES, base);
                    let mut any = 0;
                    let cur = &mut words[g * LANES..(g + 1) * LANES];
                    for (lane, word) in cur.iter_mut().enumerate() {
                        let column: [u64; P] = std::array::from_fn(|b| acc[b][lane]);
                        let hit = at_least_fixed(&column, threshold) & !*word;
                        *word |= hit;
                        any |= hit;
                    }
                    if any == 0 {
                        break;
                    }
                    grew = true;
                }
                if grew {
                    for &x in &block_xors {
                        let h = g ^ x;
                        if h != g && !dirty[h] {
                            dirty[h] = true;
                            pending += 1;
                        }
                    }
                }
            }
            forward = !forward;
        }
    }
}

/// Adds the inputs selected by `masks` for the group at `base` to `acc`.
#[inline(always)]
fn accumulate_group<const P: usize>(
    masks: &[FlipMask],
    a: &[u64],
    base: usize,
    mut acc: [Lanes; P],
) -> [Lanes; P] {
    let load = |m: &FlipMask| -> Lanes {
        let start = base ^ (m.word_xor & !(LANES - 1));
        let sw = m.word_xor & (LANES - 1);
        let block = &a[start..start + LANES];
        let mut v: Lanes = std::array::from_fn(|j| block[j ^ sw]);
        let mut low = m.low;
        while low != 0 {
            let j = low.trailing_zeros();
            let mask = LOW_HALVES[j as usize];
            let s = 1u32 << j;
            for x in v.iter_mut() {
                *x = ((*x & mask) << s) | ((*x >> s) & mask);
            }
            low &= low - 1;
        }
        v
    };
    let mut pairs = masks.chunks_exact(2);
    for pair in &mut pairs {
        let x = load(&pair[0]);
        let y = load(&pair[1]);
        let mut carry = [0u64; LANES];
        for j in 0..LANES {
            let p0 = acc[0][j];
            acc[0][j] = p0 ^ x[j] ^ y[j];
            carry[j] = (p0 & x[j]) | (p0 & y[j]) | (x[j] & y[j]);
        }
        for plane in acc[1..].iter_mut() {
            for j in 0..LANES {
                let s = plane[j] ^ carry[j];
                carry[j] &= plane[j];
                plane[j] = s;
            }
        }
    }
    if let [m] = pairs.remainder() {
        let mut carry = load(m);
        for plane in acc.iter_mut() {
            for j in 0..LANES {
                let s = plane[j] ^ carry[j];
                carry[j] &= plane[j];
                plane[j] = s;
            }
        }
    }
    acc
}

#[inline(always)]
fn at_least_fixed<const P: usize>(planes: &[u64; P], threshold: u64) -> u64 {
    if threshold == 0 {
        return !0;
    }
    if threshold >> P != 0 {
        return 0;
    }
    let mut greater = 0u64;
    let mut equal = !0u64;
    for b in (0..P).rev() {
        if threshold >> b & 1 == 1 {
            equal &= planes[b];
        } else {
            greater |= equal & planes[b];
            equal &= !planes[b];
        }
    }
    greater | equal
}

fn counter_planes(degree: u64) -> usize {
    let planes = (64 - degree.leading_zeros()) as usize;
    debug_assert!(planes <= MAX_PLANES);
    planes.max(1)
}

/// Bit-sliced comparison `count >= threshold`, one lane per vertex.
#[inline]
fn at_least(planes: &[u64], threshold: u64) -> u64 {
    if threshold == 0 {
        return !0;
    }
    if threshold >> planes.len() != 0 {
        return 0;
    }
    let mut greater = 0u64;
    let mut equal = !0u64;
    for (b, &plane) in planes.iter().enumerate().rev() {
        if threshold >> b & 1 == 1 {
            equal &= plane;
        } else {
            greater |= equal & plane;
            equal &= !plane;
        }
    }
    greater | equal
}

/// Per-vertex infected-neighbor counts, stored as bit planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborCounts {
    n: u32,
    planes: Vec<Vec<u64>>,
}

impl NeighborCounts {
    pub fn get(&self, v: Vertex) -> u64 {
        let i = v.0 as usize;
        self.planes
            .iter()
            .enumerate()
            .map(|(b, plane)| (plane[i >> 6] >> (i & 63) & 1) << b)
            .sum()
    }

    pub fn to_vec(&self) -> Vec<u64> {
        (0..1u32 << self.n).map(|c| self.get(Vertex(c))).collect()
    }

    /// Vertices whose count is at least `threshold`.
    pub fn at_least(&self, threshold: u64) -> VertexSet {
        let words = self.planes.first().map_or(0, Vec::len);
        let mut column = Vec::with_capacity(self.planes.len());
        let out = (0..words)
            .map(|w| {
                column.clear();
                column.extend(self.planes.iter().map(|p| p[w]));
                at_least(&column, threshold)
            })
            .collect();
        VertexSet::from_words(self.n, out)
    }
}

/// `|N(v) ∩ A|` for every vertex `v`.
pub fn infected_neighbor_counts(spec: CubeSpec, a: &VertexSet) -> NeighborCounts {
    NeighborKernel::new(spec).counts(a)
}

/// Infected-neighbor counters kept across steps of a run.
///
/// After a full count of the initial set, each step only adds the
/// contributions of newly infected vertices and re-tests the words they
/// touch. This is exact whenever thresholds never decrease along the run:
/// an untouched word failed the previous threshold with the same counts.
#[derive(Debug, Clone)]
pub(crate) struct LiveCounts {
    /// Word-major bit planes: `planes` counters per word.
    counts: Vec<u64>,
    stamp: Vec<u64>,
    epoch: u64,
    touched: Vec<usize>,
    delta: Vec<(usize, u64)>,
    thresholds_seen: Option<u64>,
}

impl LiveCounts {
    pub(crate) fn new(kernel: &NeighborKernel) -> Self {
        let words = word_count(kernel.spec.n);
        Self {
            counts: vec![0; words * kernel.planes],
            stamp: vec![0; words],
            epoch: 0,
            touched: Vec::new(),
            delta: Vec::new(),
            thresholds_seen: None,
        }
    }

    /// Full recount for a new starting set.
    pub(crate) fn reset(&mut self, kernel: &NeighborKernel, a: &VertexSet) {
        let planes = kernel.planes;
        let src = a.words();
        let mut acc = [0u64; MAX_PLANES];
        for w in 0..src.len() {
            kernel.accumulate(src, w, &mut acc);
            self.counts[w * planes..(w + 1) * planes].copy_from_slice(&acc[..planes]);
        }
        self.touched.clear();
        self.thresholds_seen = None;
    }

    /// One synchronous update of `a` in place; returns the number of vertices
    /// added. Thresholds must be nondecreasing between calls after `reset`.
    pub(crate) fn advance(
        &mut self,
        kernel: &NeighborKernel,
        a: &mut VertexSet,
        threshold: u64,
    ) -> u64 {
        let planes = kernel.planes;
        let tail = tail_mask(kernel.spec.n);
        let full_scan = match self.thresholds_seen {
            None => true,
            Some(prev) => {
                assert!(threshold >= prev, "thresholds must not decrease");
                false
            }
        };
        self.thresholds_seen = Some(threshold);
        self.delta.clear();
        let words = a.words();
        let test = |w: usize, delta: &mut Vec<(usize, u64)>| {
            let hit =
                at_least(&self.counts[w * planes..(w + 1) * planes], threshold) & !words[w] & tail;
            if hit != 0 {
                delta.push((w, hit));
            }
        };
        if full_scan {
            for w in 0..words.len() {
                test(w, &mut self.delta);
            }
        } else {
            for &w in &self.touched {
                test(w, &mut self.delta);
            }
        }
        self.epoch += 1;
        self.touched.clear();
        let dst = a.words_mut();
        let mut added = 0;
        for &(w, hit) in &self.delta {
            dst[w] |= hit;
            added += u64::from(hit.count_ones());
            for m in &kernel.masks {
                let target = w ^ m.word_xor;
                let mut carry = permute_within_word(hit, m.low);
                for plane in &mut self.counts[target * planes..(target + 1) * planes] {
                    if carry == 0 {
                        break;
                    }
                    let s = *plane ^ carry;
                    carry &= *plane;
                    *plane = s;
                }
                if self.stamp[target] != self.epoch {
                    self.stamp[target] = self.epoch;
                    self.touched.push(target);
                }
            }
        }
        added
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        Vertex(u32::from_str_radix(s, 2).unwrap())
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(v("0000"), v("0000")), 0);
        assert_eq!(hamming(v("1010"), v("0101")), 4);
        let u = v("10110");
        assert_eq!(hamming(u, Vertex(!u.0 & 0b11111)), 5);
    }

    #[test]
    fn degree_examples() {
        assert_eq!(CubeSpec::new(4, 1).unwrap().degree(), 4);
        assert_eq!(CubeSpec::new(4, 2).unwrap().degree(), 10);
        assert_eq!(CubeSpec::new(6, 3).unwrap().degree(), 41);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(
            CubeSpec::new(4, 5),
            Err(CubeError::BadRadius { n: 4, k: 5 })
        );
        assert_eq!(
            CubeSpec::new(4, 0),
            Err(CubeError::BadRadius { n: 4, k: 0 })
        );
        assert_eq!(CubeSpec::new(0, 1), Err(CubeError::ZeroDimension));
        assert_eq!(
            CubeSpec::new(29, 1),
            Err(CubeError::TooLarge { n: 29, n_max: 28 })
        );
        assert!(CubeSpec::with_cap(29, 1, 30).is_ok());
    }

    #[test]
    fn neighbors_examples() {
        let q3 = CubeSpec::new(3, 1).unwrap();
        assert_eq!(q3.neighbors(v("000")), vec![v("001"), v("010"), v("100")]);
        let q23 = CubeSpec::new(3, 2).unwrap();
        assert_eq!(
            q23.neighbors(v("000")),
            vec![v("001"), v("010"), v("011"), v("100"), v("101"), v("110")]
        );
        assert_eq!(q23.neighbors(v("101")).len() as u64, q23.degree());
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(sphere(3, v("000"), 0), vec![v("000")]);
        for x in 0..32 {
            assert_eq!(sphere(5, Vertex(x), 2).len(), 10);
        }
        assert_eq!(sphere(4, v("0000"), 4), vec![v("1111")]);
        let total: usize = (0..=7).map(|l| sphere(7, Vertex(19), l).len()).sum();
        assert_eq!(total, 128);
    }

    #[test]
    fn counts_on_four_cycle() {
        let q2 = CubeSpec::new(2, 1).unwrap();
        let a = VertexSet::from_vertices(2, [v("00"), v("11")]);
        let counts = infected_neighbor_counts(q2, &a);
        assert_eq!(counts.to_vec(), vec![0, 2, 2, 0]);
    }

    #[test]
    fn counts_empty_and_full() {
        for (n, k) in [(3, 1), (7, 2), (9, 1), (8, 3)] {
            let spec = CubeSpec::new(n, k).unwrap();
            let empty = infected_neighbor_counts(spec, &VertexSet::empty(n));
            assert!(empty.to_vec().iter().all(|&c| c == 0));
            let full = infected_neighbor_counts(spec, &VertexSet::full(n));
            assert!(full.to_vec().iter().all(|&c| c == spec.degree()));
        }
    }

    #[test]
    fn within_word_permutation_is_xor_relabeling() {
        let w: u64 = 0x9E37_79B9_7F4A_7C15;
        for low in 0..64u32 {
            let p = permute_within_word(w, low);
            for i in 0..64u32 {
                assert_eq!(p >> (i ^ low) & 1, w >> i & 1);
            }
        }
    }

    #[test]
    fn comparator_matches_integers() {
        // Lanes hold the counts 0..64 spread over 7 planes.
        let mut planes = [0u64; 7];
        for lane in 0..64u64 {
            for (b, plane) in planes.iter_mut().enumerate() {
                *plane |= (lane >> b & 1) << lane;
            }
        }
        for thr in 0..130u64 {
            let got = at_least(&planes, thr);
            for lane in 0..64u64 {
                assert_eq!(got >> lane & 1 == 1, lane >= thr, "thr {thr} lane {lane}");
            }
        }
    }

    #[test]
    fn set_algebra() {
        let a = VertexSet::from_vertices(7, [1, 5, 64, 100].map(Vertex));
        let b = VertexSet::from_vertices(7, [5, 64, 127].map(Vertex));
        assert_eq!(a.union(&b).len(), 5);
        assert_eq!(
            a.intersection(&b).iter().collect::<Vec<_>>(),
            vec![Vertex(5), Vertex(64)]
        );
        assert_eq!(a.complement().len(), 124);
        assert_eq!(a.difference(&b).len(), 2);
        assert!(a.intersection(&b).is_subset(&a));
        assert_eq!(VertexSet::full(3).len(), 8);
        assert_eq!(VertexSet::full(3).complement(), VertexSet::empty(3));
    }

    #[test]
    fn weight_codes_are_ascending_and_complete() {
        let codes = weight_codes(6, 3);
        assert_eq!(codes.len(), 20);
        assert!(codes.windows(2).all(|w| w[0] < w[1]));
        assert!(codes.iter().all(|c| c.count_ones() == 3 && *c < 64));
        assert_eq!(binomial(28, 14), 40_116_600);
    }
}
