//! δ-regularity of bipartite graphs: an exact checker, a seeded one-sided
//! refuter for pairs past the exhaustive cap, and the constructive search
//! for regular pairs and ternary partitions.
//!
//! A pair `(X, Y)` is δ-regular when every `X' ⊆ X`, `Y' ⊆ Y` with
//! `|X'| > δ|X|` and `|Y'| > δ|Y|` has `|d(X', Y') − d(X, Y)| < δ`.
//!
//! The exact checker enumerates subsets of the smaller side only. For a
//! fixed subset there, the subset of the other side of a given size that
//! maximizes (or minimizes) the edge count is the top (bottom) block of
//! vertices sorted by degree into it, and the deviation is extremal at one
//! of those two, so the scan is exact at `O(2^min · max log max)` cost.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tournament::{ArcSet, BipartitePair, Density, Tournament, Vertex, VertexSet};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Exact,
    Sampled,
}

/// How `ternary_partition` picks the starting equipartition `X ∪ Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equipartition {
    /// Lower half of the vertex labels against the upper half.
    Sorted,
    /// A seeded shuffle split in half.
    Shuffled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    /// Largest `|X| + |Y|` checked exhaustively.
    pub exhaustive_cap: usize,
    /// Trials per sampled refutation.
    pub sample_trials: usize,
    /// Subset pairs the exhaustive fallback may test before giving up.
    pub search_budget: usize,
    pub equipartition: Equipartition,
    pub seed: u64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            sample_trials: 256,
            search_budget: 2_000_000,
            equipartition: Equipartition::Sorted,
            seed: 0,
        }
    }
}

impl RegularityConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        RegularityConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Undirected bipartite graph on a pair `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigraphView {
    pair: BipartitePair,
    edges: BTreeSet<(Vertex, Vertex)>,
}

impl BigraphView {
    pub fn new(pair: BipartitePair, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(x, y) in &edges {
            if !pair.left().contains(&x) || !pair.right().contains(&y) {
                return Err(Error::InvalidArc(x, y));
            }
        }
        Ok(BigraphView { pair, edges })
    }

    /// The graph underlying `d ∩ ((X×Y) ∪ (Y×X))`: `x ~ y` whenever either
    /// `xy` or `yx` is an arc.
    pub fn from_arcs(d: &ArcSet, pair: &BipartitePair) -> Self {
        let edges = d
            .arcs()
            .iter()
            .filter_map(|&(u, v)| {
                if pair.left().contains(&u) && pair.right().contains(&v) {
                    Some((u, v))
                } else if pair.right().contains(&u) && pair.left().contains(&v) {
                    Some((v, u))
                } else {
                    None
                }
            })
            .collect();
        BigraphView {
            pair: pair.clone(),
            edges,
        }
    }

    /// The graph underlying `T ∩ (X×Y)`.
    pub fn from_tournament(t: &Tournament, pair: &BipartitePair) -> Self {
        let edges = pair
            .left()
            .iter()
            .flat_map(|&x| pair.right().iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| t.has_arc(x, y))
            .collect();
        BigraphView {
            pair: pair.clone(),
            edges,
        }
    }

    pub fn complete(pair: BipartitePair) -> Self {
        let edges = pair
            .left()
            .iter()
            .flat_map(|&x| pair.right().iter().map(move |&y| (x, y)))
            .collect();
        BigraphView { pair, edges }
    }

    pub fn empty(pair: BipartitePair) -> Self {
        BigraphView {
            pair,
            edges: BTreeSet::new(),
        }
    }

    pub fn pair(&self) -> &BipartitePair {
        &self.pair
    }

    pub fn edges(&self) -> &BTreeSet<(Vertex, Vertex)> {
        &self.edges
    }

    pub fn contains(&self, x: Vertex, y: Vertex) -> bool {
        self.edges.contains(&(x, y))
    }

    pub fn complement(&self) -> BigraphView {
        let edges = self
            .pair
            .left()
            .iter()
            .flat_map(|&x| self.pair.right().iter().map(move |&y| (x, y)))
            .filter(|e| !self.edges.contains(e))
            .collect();
        BigraphView {
            pair: self.pair.clone(),
            edges,
        }
    }

    /// The induced view on a sub-pair.
    pub fn restrict(&self, left: &VertexSet, right: &VertexSet) -> BigraphView {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(x, y)| left.contains(x) && right.contains(y))
            .collect();
        BigraphView {
            pair: BipartitePair::new(left.clone(), right.clone()).expect("sub-pair of a valid pair"),
            edges,
        }
    }

    pub fn density(&self) -> Result<Density> {
        let (a, b) = (self.pair.left().len(), self.pair.right().len());
        if a == 0 || b == 0 {
            return Err(Error::EmptyPart);
        }
        Ok(Density::new(self.edges.len() as u64, (a * b) as u64))
    }

    fn size(&self) -> usize {
        self.pair.left().len() + self.pair.right().len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub left: VertexSet,
    pub right: VertexSet,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub delta: f64,
    pub regular: bool,
    pub witness: Option<Witness>,
    pub mode: CheckMode,
}

/// Smallest subset size `k` with `k > δ·size`, if any.
pub fn min_qualifying_size(size: usize, delta: f64) -> Option<usize> {
    (1..=size).find(|&k| (k as f64) > delta * size as f64)
}

/// Exact deviation `|e'·ab − e·kx·ky| / (kx·ky·ab)` as a fraction.
#[derive(Clone, Copy, Debug)]
struct Deviation {
    num: u128,
    den: u128,
}

impl Deviation {
    fn new(sub_edges: u64, kx: usize, ky: usize, edges: u64, a: usize, b: usize) -> Self {
        let ab = (a * b) as u128;
        let kk = (kx * ky) as u128;
        let lhs = sub_edges as u128 * ab;
        let rhs = edges as u128 * kk;
        Deviation {
            num: lhs.abs_diff(rhs),
            den: kk * ab,
        }
    }

    fn value(self) -> f64 {
        // One correctly rounded division of exact integers.
        self.num as f64 / self.den as f64
    }

    fn cmp(self, other: Deviation) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Lexicographic order of two subsets of an index range given as bit masks,
/// comparing their sorted element lists.
fn lex_cmp(mut a: u64, mut b: u64) -> Ordering {
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (la, lb) = (a.trailing_zeros(), b.trailing_zeros());
        if la != lb {
            return la.cmp(&lb);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

/// Index-based adjacency of a view: `rows[i]` holds the right-side
/// neighbours of `left[i]` as a bitset over right indices.
struct Dense {
    left: Vec<Vertex>,
    right: Vec<Vertex>,
    rows: Vec<Vec<u64>>,
    cols: Vec<Vec<u64>>,
    edges: u64,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

fn bit(set: &[u64], i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(set: &mut [u64], i: usize) {
    set[i / 64] |= 1 << (i % 64);
}

fn and_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}

impl Dense {
    fn new(view: &BigraphView) -> Self {
        let left: Vec<_> = view.pair.left().iter().copied().collect();
        let right: Vec<_> = view.pair.right().iter().copied().collect();
        let mut rows = vec![vec![0u64; words(right.len())]; left.len()];
        let mut cols = vec![vec![0u64; words(left.len())]; right.len()];
        for (i, &x) in left.iter().enumerate() {
            for (j, &y) in right.iter().enumerate() {
                if view.contains(x, y) {
                    set_bit(&mut rows[i], j);
                    set_bit(&mut cols[j], i);
                }
            }
        }
        Dense {
            left,
            right,
            rows,
            cols,
            edges: view.edges.len() as u64,
        }
    }

    fn to_sets(&self, left: &[u64], right: &[u64]) -> (VertexSet, VertexSet) {
        let l = (0..self.left.len())
            .filter(|&i| bit(left, i))
            .map(|i| self.left[i])
            .collect();
        let r = (0..self.right.len())
            .filter(|&j| bit(right, j))
            .map(|j| self.right[j])
            .collect();
        (l, r)
    }

    fn sub_edges(&self, left: &[u64], right: &[u64]) -> u64 {
        (0..self.left.len())
            .filter(|&i| bit(left, i))
            .map(|i| and_count(&self.rows[i], right))
            .sum()
    }
}

struct Candidate {
    left: u64,
    right: u64,
    dev: Deviation,
}

impl Candidate {
    /// Larger deviation wins; ties go to the lexicographically smaller
    /// `(X', Y')`.
    fn beats(&self, other: &Candidate) -> bool {
        match self.dev.cmp(other.dev) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                lex_cmp(self.left, other.left).then(lex_cmp(self.right, other.right))
                    == Ordering::Less
            }
        }
    }
}

/// Exhaustive scan. With `early_exit` returns the first violation met,
/// otherwise the maximally deviating qualifying pair (violating or not).
fn exact_scan(dense: &Dense, delta: f64, early_exit: bool) -> Option<Candidate> {
    let (a, b) = (dense.left.len(), dense.right.len());
    let (kx_min, ky_min) = match (min_qualifying_size(a, delta), min_qualifying_size(b, delta)) {
        (Some(x), Some(y)) => (x, y),
        _ => return None,
    };
    // Enumerate subsets of the smaller side `E`, sort the other side `O`.
    let enumerate_left = a <= b;
    let (e_len, o_len, e_min, o_min) = if enumerate_left {
        (a, b, kx_min, ky_min)
    } else {
        (b, a, ky_min, kx_min)
    };
    let adj_o: Vec<u64> = if enumerate_left {
        dense.cols.iter().map(|c| c[0]).collect()
    } else {
        dense.rows.iter().map(|r| r[0]).collect()
    };

    let mut best: Option<Candidate> = None;
    let mut degree = vec![0u32; o_len];
    let mut top: Vec<usize> = (0..o_len).collect();
    let mut bottom: Vec<usize> = (0..o_len).collect();
    for e_mask in 1u64..(1u64 << e_len) {
        let ke = e_mask.count_ones() as usize;
        if ke < e_min {
            continue;
        }
        for (o, d) in degree.iter_mut().enumerate() {
            *d = (adj_o[o] & e_mask).count_ones();
        }
        top.sort_by(|&i, &j| degree[j].cmp(&degree[i]).then(i.cmp(&j)));
        bottom.sort_by(|&i, &j| degree[i].cmp(&degree[j]).then(i.cmp(&j)));
        let (mut top_mask, mut bottom_mask) = (0u64, 0u64);
        let (mut top_sum, mut bottom_sum) = (0u64, 0u64);
        for ko in 1..=o_len {
            top_mask |= 1 << top[ko - 1];
            bottom_mask |= 1 << bottom[ko - 1];
            top_sum += degree[top[ko - 1]] as u64;
            bottom_sum += degree[bottom[ko - 1]] as u64;
            if ko < o_min {
                continue;
            }
            for (o_mask, sum) in [(top_mask, top_sum), (bottom_mask, bottom_sum)] {
                let (lm, rm, kx, ky) = if enumerate_left {
                    (e_mask, o_mask, ke, ko)
                } else {
                    (o_mask, e_mask, ko, ke)
                };
                let cand = Candidate {
                    left: lm,
                    right: rm,
                    dev: Deviation::new(sum, kx, ky, dense.edges, a, b),
                };
                if early_exit && cand.dev.value() >= delta {
                    return Some(cand);
                }
                if !early_exit && best.as_ref().is_none_or(|b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

fn check_cap(view: &BigraphView, cap: usize) -> Result<()> {
    let size = view.size();
    // Masks are u64 and the scan is exponential in the smaller side.
    if size > cap || view.pair.left().len() > 63 || view.pair.right().len() > 63 {
        return Err(Error::ExhaustiveCapExceeded { size, cap });
    }
    Ok(())
}

/// Exact δ-regularity over every qualifying subset pair, with the
/// maximally deviating pair (lexicographically smallest on ties) as the
/// witness when the pair is irregular.
pub fn is_regular_exact(view: &BigraphView, delta: f64) -> Result<RegularityVerdict> {
    is_regular_exact_capped(view, delta, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn is_regular_exact_capped(view: &BigraphView, delta: f64, cap: usize) -> Result<RegularityVerdict> {
    check_cap(view, cap)?;
    let dense = Dense::new(view);
    let best = exact_scan(&dense, delta, false);
    let witness = best.filter(|c| c.dev.value() >= delta).map(|c| {
        let (left, right) = dense.to_sets(&[c.left], &[c.right]);
        Witness {
            left,
            right,
            deviation: c.dev.value(),
        }
    });
    Ok(RegularityVerdict {
        delta,
        regular: witness.is_none(),
        witness,
        mode: CheckMode::Exact,
    })
}

fn holds_exact(view: &BigraphView, delta: f64) -> bool {
    exact_scan(&Dense::new(view), delta, true).is_none()
}

/// Recomputes a witness from scratch: sizes qualify and the deviation
/// reaches `delta`.
pub fn verify_witness(view: &BigraphView, delta: f64, witness: &Witness) -> bool {
    let (a, b) = (view.pair.left().len(), view.pair.right().len());
    let (kx, ky) = (witness.left.len(), witness.right.len());
    if !witness.left.is_subset(view.pair.left()) || !witness.right.is_subset(view.pair.right()) {
        return false;
    }
    if (kx as f64) <= delta * a as f64 || (ky as f64) <= delta * b as f64 {
        return false;
    }
    let sub = witness
        .left
        .iter()
        .flat_map(|&x| witness.right.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| view.contains(x, y))
        .count() as u64;
    Deviation::new(sub, kx, ky, view.edges.len() as u64, a, b).value() >= delta
}

/// Indices of the `k` largest (`largest = true`) or smallest entries of
/// `degree`, ties to the lower index, as a bitset.
fn extreme_block(degree: &[u64], k: usize, largest: bool, len: usize) -> Vec<u64> {
    let mut order: Vec<usize> = (0..degree.len()).collect();
    if largest {
        order.sort_by(|&i, &j| degree[j].cmp(&degree[i]).then(i.cmp(&j)));
    } else {
        order.sort_by(|&i, &j| degree[i].cmp(&degree[j]).then(i.cmp(&j)));
    }
    let mut set = vec![0u64; words(len)];
    for &i in &order[..k] {
        set_bit(&mut set, i);
    }
    set
}

fn random_block(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<u64> {
    let mut set = vec![0u64; words(len)];
    for i in rand::seq::index::sample(rng, len, k) {
        set_bit(&mut set, i);
    }
    set
}

/// One-sided refutation: random subset pairs, each pushed towards an
/// extreme density by alternating best responses. A returned witness is
/// always re-verified; `regular = true` only means none was found.
pub fn refute_regular_sampled(view: &BigraphView, delta: f64, trials: usize, seed: u64) -> RegularityVerdict {
    let dense = Dense::new(view);
    let (a, b) = (dense.left.len(), dense.right.len());
    let mut best: Option<(Vec<u64>, Vec<u64>, Deviation)> = None;
    if let (Some(kx_min), Some(ky_min)) = (min_qualifying_size(a, delta), min_qualifying_size(b, delta)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for trial in 0..trials {
            let kx = rng.random_range(kx_min..=a);
            let ky = rng.random_range(ky_min..=b);
            let mut right = random_block(&mut rng, b, ky);
            let mut left = random_block(&mut rng, a, kx);
            let largest = trial % 2 == 0;
            // Trials alternate between chasing dense and sparse corners;
            // every fourth trial keeps the purely random pair.
            let rounds = if trial % 4 == 3 { 0 } else { 2 };
            for _ in 0..rounds {
                let to_right: Vec<u64> = dense.rows.iter().map(|r| and_count(r, &right)).collect();
                left = extreme_block(&to_right, kx, largest, a);
                let to_left: Vec<u64> = dense.cols.iter().map(|c| and_count(c, &left)).collect();
                right = extreme_block(&to_left, ky, largest, b);
            }
            let sub = dense.sub_edges(&left, &right);
            let dev = Deviation::new(sub, kx, ky, dense.edges, a, b);
            if dev.value() >= delta && best.as_ref().is_none_or(|(_, _, d)| dev.cmp(*d) == Ordering::Greater) {
                best = Some((left, right, dev));
            }
        }
    }
    let witness = best.map(|(l, r, dev)| {
        let (left, right) = dense.to_sets(&l, &r);
        Witness {
            left,
            right,
            deviation: dev.value(),
        }
    });
    debug_assert!(witness.as_ref().is_none_or(|w| verify_witness(view, delta, w)));
    RegularityVerdict {
        delta,
        regular: witness.is_none(),
        witness,
        mode: CheckMode::Sampled,
    }
}

/// Exact below the cap, sampled above it.
pub fn check_in_force(view: &BigraphView, delta: f64, config: &RegularityConfig) -> RegularityVerdict {
    if view.size() <= config.exhaustive_cap {
        is_regular_exact_capped(view, delta, config.exhaustive_cap).expect("size checked against cap")
    } else {
        refute_regular_sampled(view, delta, config.sample_trials, config.seed)
    }
}

fn deviation_from(view: &BigraphView, left: &VertexSet, right: &VertexSet) -> Deviation {
    let a = view.pair.left().len();
    let b = view.pair.right().len();
    let sub = left
        .iter()
        .flat_map(|&x| right.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| view.contains(x, y))
        .count() as u64;
    Deviation::new(sub, left.len(), right.len(), view.edges.len() as u64, a, b)
}

/// Finds `X' ⊆ X`, `Y' ⊆ Y`, both of size at least `floor`, that the check
/// in force accepts as δ-regular.
///
/// Above the exhaustive cap the search descends along witnesses: the
/// current pair is replaced by whichever quadrant cut out by the witness
/// deviates most from the current density, for at most `⌈1/δ²⌉` steps.
/// Once the pair fits under the cap, subset pairs are tried exhaustively,
/// larger `min(|X'|, |Y'|)` first.
pub fn find_regular_pair(
    view: &BigraphView,
    delta: f64,
    floor: usize,
    config: &RegularityConfig,
) -> Result<BipartitePair> {
    let floor = floor.max(1);
    let mut current = view.clone();
    let (a, b) = (current.pair.left().len(), current.pair.right().len());
    if a < floor || b < floor {
        return Err(Error::FloorUnreachable {
            floor,
            best_left: a,
            best_right: b,
            deviation: f64::NAN,
        });
    }

    let max_steps = (1.0 / (delta * delta)).ceil() as usize;
    let mut step = 0;
    while current.size() > config.exhaustive_cap {
        let verdict = refute_regular_sampled(&current, delta, config.sample_trials, config.seed.wrapping_add(step as u64));
        let Some(w) = verdict.witness else {
            return Ok(current.pair.clone());
        };
        step += 1;
        let left_rest: VertexSet = current.pair.left().difference(&w.left).copied().collect();
        let right_rest: VertexSet = current.pair.right().difference(&w.right).copied().collect();
        let next = [
            (&w.left, &w.right),
            (&left_rest, &w.right),
            (&w.left, &right_rest),
            (&left_rest, &right_rest),
        ]
        .into_iter()
        .filter(|(l, r)| l.len() >= floor && r.len() >= floor)
        .map(|(l, r)| (deviation_from(&current, l, r), l, r))
        .fold(None::<(Deviation, &VertexSet, &VertexSet)>, |acc, cand| match acc {
            Some(best) if best.0.cmp(cand.0) != Ordering::Less => Some(best),
            _ => Some(cand),
        });
        match next {
            Some((_, l, r)) if step <= max_steps => current = current.restrict(l, r),
            _ => {
                // Descent is stuck: shrink to a cap-sized corner and search it.
                let half = config.exhaustive_cap / 2;
                let l: VertexSet = current.pair.left().iter().copied().take(half).collect();
                let r: VertexSet = current.pair.right().iter().copied().take(config.exhaustive_cap - half).collect();
                current = current.restrict(&l, &r);
            }
        }
    }
    exhaustive_search(&current, delta, floor, config.search_budget)
}

fn exhaustive_search(view: &BigraphView, delta: f64, floor: usize, budget: usize) -> Result<BipartitePair> {
    let left: Vec<Vertex> = view.pair.left().iter().copied().collect();
    let right: Vec<Vertex> = view.pair.right().iter().copied().collect();
    let (a, b) = (left.len(), right.len());
    let mut classes: Vec<(usize, usize)> = (floor..=a)
        .flat_map(|kx| (floor..=b).map(move |ky| (kx, ky)))
        .collect();
    classes.sort_by(|p, q| {
        q.0.min(q.1)
            .cmp(&p.0.min(p.1))
            .then((q.0 + q.1).cmp(&(p.0 + p.1)))
            .then(q.0.cmp(&p.0))
    });

    let mut tried = 0usize;
    let mut best: Option<(f64, usize, usize)> = None;
    for (kx, ky) in classes {
        for xs in combinations(a, kx) {
            let l: VertexSet = xs.iter().map(|&i| left[i]).collect();
            for ys in combinations(b, ky) {
                let r: VertexSet = ys.iter().map(|&j| right[j]).collect();
                let sub = view.restrict(&l, &r);
                if holds_exact(&sub, delta) {
                    return Ok(sub.pair.clone());
                }
                tried += 1;
                if best.is_none() {
                    let dev = is_regular_exact_capped(&sub, delta, usize::MAX)
                        .ok()
                        .and_then(|v| v.witness)
                        .map_or(0.0, |w| w.deviation);
                    best = Some((dev, kx, ky));
                }
                if tried >= budget {
                    let (deviation, best_left, best_right) = best.unwrap();
                    return Err(Error::FloorUnreachable {
                        floor,
                        best_left,
                        best_right,
                        deviation,
                    });
                }
            }
        }
    }
    // No size class fits under the floor: report the searched region itself.
    let (deviation, best_left, best_right) = best.unwrap_or_else(|| {
        let dev = is_regular_exact_capped(view, delta, usize::MAX)
            .ok()
            .and_then(|v| v.witness)
            .map_or(0.0, |w| w.deviation);
        (dev, a, b)
    });
    Err(Error::FloorUnreachable {
        floor,
        best_left,
        best_right,
        deviation,
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = (k <= n).then(|| (0..k).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        if let Some(i) = (0..k).rev().find(|&i| succ[i] < n - k + i) {
            succ[i] += 1;
            for j in i + 1..k {
                succ[j] = succ[j - 1] + 1;
            }
            next = Some(succ);
        }
        Some(current)
    })
}

/// Output of [`ternary_partition`]: `L ∪ R ∪ W = V` with `S = T ∩ (L×R)`
/// regular of density at least 1/2.
#[derive(Clone, Debug)]
pub struct TernaryPartition {
    pub left: VertexSet,
    pub right: VertexSet,
    pub rest: VertexSet,
    pub arcs: ArcSet,
    pub density: Density,
    pub verdict: RegularityVerdict,
}

/// Smallest part size demanded of a partition of `size` vertices.
pub fn part_floor(size: usize, floor_fraction: f64) -> usize {
    ((floor_fraction * size as f64).ceil() as usize).max(1)
}

/// Splits `vertices` into `L ∪ R ∪ W` with `T ∩ (L×R)` δ-regular, of density
/// at least 1/2, and `min(|L|, |R|) >= ⌈floor_fraction·|V|⌉`.
///
/// Starts from an equipartition `X ∪ Y`, finds a regular pair inside the
/// graph underlying `T ∩ (X×Y)`, and swaps the two sides when fewer than
/// half of the pairs point `L → R`.
pub fn ternary_partition(
    t: &Tournament,
    vertices: &VertexSet,
    delta: f64,
    floor_fraction: f64,
    config: &RegularityConfig,
) -> Result<TernaryPartition> {
    if !(0.0..=0.5).contains(&floor_fraction) {
        return Err(Error::Config(format!("floor fraction {floor_fraction} outside [0, 1/2]")));
    }
    if vertices.len() < 2 {
        return Err(Error::Config("cannot partition fewer than two vertices".into()));
    }
    let mut order: Vec<Vertex> = vertices.iter().copied().collect();
    if config.equipartition == Equipartition::Shuffled {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    }
    let half = order.len() / 2;
    let pair = BipartitePair::new(order[..half].iter().copied().collect(), order[half..].iter().copied().collect())?;
    let view = BigraphView::from_tournament(t, &pair);
    let floor = part_floor(vertices.len(), floor_fraction);
    let found = find_regular_pair(&view, delta, floor, config)?;

    let forward = found
        .left()
        .iter()
        .flat_map(|&x| found.right().iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| t.has_arc(x, y))
        .count();
    let (left, right) = if 2 * forward >= found.left().len() * found.right().len() {
        (found.left().clone(), found.right().clone())
    } else {
        (found.right().clone(), found.left().clone())
    };
    let arcs = t.arcs_across(&left, &right);
    let oriented = BipartitePair::new(left.clone(), right.clone())?;
    let density = crate::tournament::density(&arcs, &oriented)?;
    let verdict = check_in_force(&BigraphView::from_arcs(&arcs, &oriented), delta, config);
    let rest = vertices
        .iter()
        .copied()
        .filter(|v| !left.contains(v) && !right.contains(v))
        .collect();
    Ok(TernaryPartition {
        left,
        right,
        rest,
        arcs,
        density,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(l: &[Vertex], r: &[Vertex]) -> BipartitePair {
        BipartitePair::from_slices(l, r).unwrap()
    }

    fn half_graph(k: usize) -> BigraphView {
        let l: Vec<_> = (1..=k).collect();
        let r: Vec<_> = (k + 1..=2 * k).collect();
        let edges = (1..=k).flat_map(|i| (i..=k).map(move |j| (i, k + j)));
        BigraphView::new(pair(&l, &r), edges).unwrap()
    }

    fn random_view(a: usize, b: usize, p: f64, seed: u64) -> BigraphView {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l: Vec<_> = (1..=a).collect();
        let r: Vec<_> = (a + 1..=a + b).collect();
        let edges: Vec<_> = l
            .iter()
            .flat_map(|&x| r.iter().map(move |&y| (x, y)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        BigraphView::new(pair(&l, &r), edges).unwrap()
    }

    #[test]
    fn complete_and_empty_are_regular() {
        let p = pair(&[1, 2, 3], &[4, 5, 6]);
        assert!(is_regular_exact(&BigraphView::complete(p.clone()), 0.1).unwrap().regular);
        for delta in [0.05, 0.3, 0.9] {
            assert!(is_regular_exact(&BigraphView::empty(p.clone()), delta).unwrap().regular);
        }
    }

    #[test]
    fn single_edge_witness() {
        let view = BigraphView::new(pair(&[1, 2], &[3, 4]), [(1, 3)]).unwrap();
        let v = is_regular_exact(&view, 0.4).unwrap();
        assert!(!v.regular);
        let w = v.witness.unwrap();
        assert_eq!(w.left, [1].into());
        assert_eq!(w.right, [3].into());
        assert!((w.deviation - 0.75).abs() < 1e-15);
        assert!(verify_witness(&view, 0.4, &w));
    }

    #[test]
    fn exact_cap_is_enforced() {
        let view = BigraphView::empty(pair(&(1..=11).collect::<Vec<_>>(), &(12..=22).collect::<Vec<_>>()));
        assert!(matches!(
            is_regular_exact(&view, 0.2),
            Err(Error::ExhaustiveCapExceeded { size: 22, cap: 20 })
        ));
    }

    #[test]
    fn sampled_refuter_examples() {
        let full = BigraphView::complete(pair(&[1, 2, 3, 4], &[5, 6, 7]));
        assert!(refute_regular_sampled(&full, 0.2, 500, 1).regular);

        let view = BigraphView::new(pair(&[1, 2], &[3, 4]), [(1, 3)]).unwrap();
        let v = refute_regular_sampled(&view, 0.4, 1000, 9);
        assert!(!v.regular);
        assert!(verify_witness(&view, 0.4, v.witness.as_ref().unwrap()));
        assert_eq!(v, refute_regular_sampled(&view, 0.4, 1000, 9));
    }

    #[test]
    fn regular_pair_examples() {
        let cfg = RegularityConfig::default();
        let full = BigraphView::complete(pair(&(1..=8).collect::<Vec<_>>(), &(9..=16).collect::<Vec<_>>()));
        let found = find_regular_pair(&full, 0.2, 4, &cfg).unwrap();
        assert_eq!(&found, full.pair());

        let half = half_graph(8);
        let found = find_regular_pair(&half, 0.45, 2, &cfg).unwrap();
        assert!(found.left().len() >= 2 && found.right().len() >= 2);
        assert!(is_regular_exact(&half.restrict(found.left(), found.right()), 0.45).unwrap().regular);

        let random = random_view(10, 10, 0.5, 3);
        let found = find_regular_pair(&random, 0.3, 3, &cfg).unwrap();
        assert!(found.left().len() >= 3 && found.right().len() >= 3);
        assert!(is_regular_exact(&random.restrict(found.left(), found.right()), 0.3).unwrap().regular);
    }

    #[test]
    fn descent_above_the_cap() {
        let cfg = RegularityConfig::default();
        let half = half_graph(30);
        let found = find_regular_pair(&half, 0.3, 5, &cfg).unwrap();
        assert!(found.left().len() >= 5 && found.right().len() >= 5);
        let sub = half.restrict(found.left(), found.right());
        let verdict = check_in_force(&sub, 0.3, &cfg);
        assert!(verdict.regular);
    }

    #[test]
    fn floor_too_large() {
        let view = half_graph(3);
        assert!(matches!(
            find_regular_pair(&view, 0.2, 4, &RegularityConfig::default()),
            Err(Error::FloorUnreachable { .. })
        ));
    }

    #[test]
    fn ternary_partition_on_transitive() {
        let t = Tournament::transitive(9);
        let v: VertexSet = (1..=9).collect();
        for equipartition in [Equipartition::Sorted, Equipartition::Shuffled] {
            let cfg = RegularityConfig {
                equipartition,
                seed: 4,
                ..Default::default()
            };
            let part = ternary_partition(&t, &v, 0.4, 0.2, &cfg).unwrap();
            if equipartition == Equipartition::Sorted {
                // Both halves of a sorted split are blocks of the order.
                assert_eq!(part.density, Density::from_integer(1));
            }
            assert!(part.density * 2u64 >= Density::from_integer(1));
            assert!(part.left.len().min(part.right.len()) >= 2);
            assert!(part.verdict.regular);
            let union: VertexSet = part.left.iter().chain(&part.right).chain(&part.rest).copied().collect();
            assert_eq!(union, v);
            assert_eq!(part.left.len() + part.right.len() + part.rest.len(), 9);
        }
    }

    #[test]
    fn ternary_partition_on_rotational() {
        let t = Tournament::rotational(9);
        let v: VertexSet = (1..=9).collect();
        for seed in 0..5 {
            let cfg = RegularityConfig {
                equipartition: Equipartition::Shuffled,
                seed,
                ..Default::default()
            };
            let part = ternary_partition(&t, &v, 0.4, 0.2, &cfg).unwrap();
            assert!(part.density * 2u64 >= Density::from_integer(1));
            let p = BipartitePair::new(part.left.clone(), part.right.clone()).unwrap();
            assert!(is_regular_exact(&BigraphView::from_arcs(&part.arcs, &p), 0.4).unwrap().regular);
        }
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).count(), 6);
        assert_eq!(combinations(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(2, 3).count(), 0);
    }
}
