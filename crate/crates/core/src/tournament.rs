//! Tournaments, permutations, arc sets and the `fit` / `density` primitives.
//!
//! Vertices are 1-based throughout, so a tournament on `n` vertices lives on
//! `[1, n]`, and a permutation `σ` is stored as its image sequence
//! `(σ(1), …, σ(n))`. `σ(u)` is read as the position of `u` in the ranking.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type VertexSet = BTreeSet<Vertex>;

/// Exact density of a pair, `|D ∩ (X×Y)| / (|X||Y|)`.
pub type Density = Ratio<u64>;

/// Orientation of every pair of `[1, n]`, stored as a triangular bit matrix.
///
/// Bit `(u, v)` for `u < v` is set when the arc points `u → v`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tournament {
    n: usize,
    bits: Vec<u64>,
}

#[inline]
fn pair_index(u: Vertex, v: Vertex) -> usize {
    debug_assert!(u < v);
    (v - 1) * (v - 2) / 2 + (u - 1)
}

impl Tournament {
    fn empty(n: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        Tournament {
            n,
            bits: vec![0; pairs.div_ceil(64)],
        }
    }

    fn set_forward(&mut self, u: Vertex, v: Vertex, forward: bool) {
        let idx = pair_index(u, v);
        if forward {
            self.bits[idx / 64] |= 1 << (idx % 64);
        } else {
            self.bits[idx / 64] &= !(1 << (idx % 64));
        }
    }

    fn forward(&self, u: Vertex, v: Vertex) -> bool {
        let idx = pair_index(u, v);
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Builds a tournament by asking `points_up(u, v)` for each `u < v`
    /// whether the arc is `u → v`.
    pub fn from_fn(n: usize, mut points_up: impl FnMut(Vertex, Vertex) -> bool) -> Self {
        let mut t = Tournament::empty(n);
        for v in 2..=n {
            for u in 1..v {
                t.set_forward(u, v, points_up(u, v));
            }
        }
        t
    }

    /// The transitive tournament `{uv : u < v}`.
    pub fn transitive(n: usize) -> Self {
        Tournament::from_fn(n, |_, _| true)
    }

    /// Each pair oriented by an independent fair coin drawn from a ChaCha8
    /// stream seeded with `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tournament::from_fn(n, |_, _| rng.random::<bool>())
    }

    /// Rotational tournament: `u → v` iff `(v − u) mod n ∈ [1, (n−1)/2]`.
    /// Regular (every out-degree equal) when `n` is odd.
    pub fn rotational(n: usize) -> Self {
        let half = (n.saturating_sub(1)) / 2;
        Tournament::from_fn(n, |u, v| (v - u) % n <= half)
    }

    /// `T_σ`: the transitive tournament with `uv` iff `σ(u) < σ(v)`.
    pub fn from_permutation(sigma: &Permutation) -> Self {
        Tournament::from_fn(sigma.len(), |u, v| sigma.image(u) < sigma.image(v))
    }

    /// Builds a tournament from an explicit arc list, rejecting loops,
    /// out-of-range vertices, duplicated pairs and missing pairs.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let mut t = Tournament::empty(n);
        let mut seen = vec![false; n * n.saturating_sub(1) / 2];
        let mut count = 0;
        for (u, v) in arcs {
            if u == v || u == 0 || v == 0 || u > n || v > n {
                return Err(Error::InvalidArc(u, v));
            }
            let (lo, hi) = (u.min(v), u.max(v));
            let idx = pair_index(lo, hi);
            if seen[idx] {
                return Err(Error::InvalidArc(u, v));
            }
            seen[idx] = true;
            count += 1;
            t.set_forward(lo, hi, u < v);
        }
        if count != seen.len() {
            let missing = (2..=n)
                .flat_map(|v| (1..v).map(move |u| (u, v)))
                .find(|&(u, v)| !seen[pair_index(u, v)])
                .expect("a pair is missing");
            return Err(Error::Config(format!(
                "tournament is missing the pair {{{}, {}}}",
                missing.0, missing.1
            )));
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// `true` iff `uv` is an arc.
    pub fn has_arc(&self, u: Vertex, v: Vertex) -> bool {
        if u == v || u == 0 || v == 0 || u > self.n || v > self.n {
            return false;
        }
        if u < v {
            self.forward(u, v)
        } else {
            !self.forward(v, u)
        }
    }

    /// Arcs in the order of their unordered pairs `(1,2), (1,3), (2,3), (1,4), …`.
    pub fn arcs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (2..=self.n).flat_map(move |v| {
            (1..v).map(move |u| if self.forward(u, v) { (u, v) } else { (v, u) })
        })
    }

    pub fn is_transitive(&self) -> bool {
        // A tournament is transitive iff its score sequence is 0, 1, …, n−1.
        let mut scores: Vec<usize> = (1..=self.n)
            .map(|u| (1..=self.n).filter(|&v| self.has_arc(u, v)).count())
            .collect();
        scores.sort_unstable();
        scores.iter().enumerate().all(|(i, &s)| i == s)
    }

    /// Some directed triangle `u → v → w → u`, if one exists.
    pub fn find_triangle(&self) -> Option<[Vertex; 3]> {
        for u in 1..=self.n {
            for v in 1..=self.n {
                if !self.has_arc(u, v) {
                    continue;
                }
                for w in 1..=self.n {
                    if self.has_arc(v, w) && self.has_arc(w, u) {
                        return Some([u, v, w]);
                    }
                }
            }
        }
        None
    }

    /// `|T ∩ T_σ|`, the number of arcs `uv` with `σ(u) < σ(v)`.
    pub fn agreement(&self, sigma: &Permutation) -> usize {
        self.arcs()
            .filter(|&(u, v)| sigma.image(u) < sigma.image(v))
            .count()
    }

    pub fn to_arc_set(&self) -> ArcSet {
        ArcSet {
            ground: (1..=self.n).collect(),
            arcs: self.arcs().collect(),
        }
    }

    /// `T ∩ (left × right)` as an arc set on `left ∪ right`.
    pub fn arcs_across(&self, left: &VertexSet, right: &VertexSet) -> ArcSet {
        let arcs = left
            .iter()
            .flat_map(|&u| right.iter().map(move |&v| (u, v)))
            .filter(|&(u, v)| self.has_arc(u, v))
            .collect();
        ArcSet {
            ground: left.union(right).copied().collect(),
            arcs,
        }
    }

    /// Text form: `n` on the first line, then one `u v` line per arc.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in self.arcs() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (lineno, first) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing vertex count"))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad vertex count {first:?}")))?;
        if n == 0 {
            return Err(Error::parse(lineno, "vertex count must be positive"));
        }
        let mut arcs = Vec::new();
        for (lineno, line) in lines {
            let mut fields = line.split_whitespace();
            let mut next = || -> Result<Vertex> {
                let f = fields
                    .next()
                    .ok_or_else(|| Error::parse(lineno, "expected two vertices"))?;
                f.parse()
                    .map_err(|_| Error::parse(lineno, format!("bad vertex {f:?}")))
            };
            let (u, v) = (next()?, next()?);
            if fields.next().is_some() {
                return Err(Error::parse(lineno, "trailing fields"));
            }
            arcs.push((u, v));
        }
        Tournament::from_arcs(n, arcs)
    }
}

impl fmt::Debug for Tournament {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tournament")
            .field("n", &self.n)
            .field("arcs", &self.arcs().collect::<Vec<_>>())
            .finish()
    }
}

/// A bijection `[1, n] → [1, n]` stored as its image sequence.
///
/// The derived ordering is lexicographic on images, which is the tie-break
/// order everywhere a "smallest" permutation is asked for.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &x in &images {
            if x == 0 || x > n {
                return Err(Error::InvalidPermutation {
                    n,
                    detail: format!("image {x} out of range"),
                });
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidPermutation {
                    n,
                    detail: format!("image {x} repeated"),
                });
            }
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n).collect(),
        }
    }

    /// `σ(i) = n + 1 − i`.
    pub fn reversal(n: usize) -> Self {
        Permutation {
            images: (1..=n).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `σ(u)` for a 1-based vertex `u`.
    #[inline]
    pub fn image(&self, u: Vertex) -> usize {
        self.images[u - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// All permutations of `[1, n]` in lexicographic order.
    pub fn all(n: usize) -> AllPermutations {
        AllPermutations {
            next: Some(Permutation::identity(n)),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let images = text
            .split_whitespace()
            .map(|f| {
                f.parse::<usize>().map_err(|_| Error::InvalidPermutation {
                    n: 0,
                    detail: format!("bad image {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(images)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::new(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for x in &self.images {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

/// Lexicographic enumeration of the symmetric group.
pub struct AllPermutations {
    next: Option<Permutation>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.images.clone();
        let n = succ.len();
        if n >= 2 {
            if let Some(i) = (0..n - 1).rev().find(|&i| succ[i] < succ[i + 1]) {
                let j = (i + 1..n).rev().find(|&j| succ[j] > succ[i]).unwrap();
                succ.swap(i, j);
                succ[i + 1..].reverse();
                self.next = Some(Permutation { images: succ });
            }
        }
        Some(current)
    }
}

/// A digraph given as an explicit set of arcs over a ground vertex set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ArcSet {
    ground: VertexSet,
    arcs: BTreeSet<(Vertex, Vertex)>,
}

impl ArcSet {
    pub fn new(ground: VertexSet, arcs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let arcs: BTreeSet<_> = arcs.into_iter().collect();
        for &(u, v) in &arcs {
            if u == v || !ground.contains(&u) || !ground.contains(&v) {
                return Err(Error::InvalidArc(u, v));
            }
        }
        Ok(ArcSet { ground, arcs })
    }

    /// Arc set whose ground is the set of arc endpoints.
    pub fn from_arcs(arcs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let arcs: Vec<_> = arcs.into_iter().collect();
        let ground = arcs.iter().flat_map(|&(u, v)| [u, v]).collect();
        ArcSet::new(ground, arcs)
    }

    pub fn ground(&self) -> &VertexSet {
        &self.ground
    }

    pub fn arcs(&self) -> &BTreeSet<(Vertex, Vertex)> {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, u: Vertex, v: Vertex) -> bool {
        self.arcs.contains(&(u, v))
    }

    /// `D^r`: every arc turned around.
    pub fn reversed(&self) -> ArcSet {
        ArcSet {
            ground: self.ground.clone(),
            arcs: self.arcs.iter().map(|&(u, v)| (v, u)).collect(),
        }
    }

    /// Arcs with one end in each part of `pair`, on ground `left ∪ right`.
    pub fn restrict(&self, pair: &BipartitePair) -> ArcSet {
        let arcs = self
            .arcs
            .iter()
            .copied()
            .filter(|&(u, v)| {
                (pair.left.contains(&u) && pair.right.contains(&v))
                    || (pair.right.contains(&u) && pair.left.contains(&v))
            })
            .collect();
        ArcSet {
            ground: pair.union(),
            arcs,
        }
    }
}

/// An ordered pair of disjoint vertex sets `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BipartitePair {
    left: VertexSet,
    right: VertexSet,
}

impl BipartitePair {
    pub fn new(left: VertexSet, right: VertexSet) -> Result<Self> {
        if let Some(&v) = left.intersection(&right).next() {
            return Err(Error::OverlappingParts(v));
        }
        Ok(BipartitePair { left, right })
    }

    pub fn from_slices(left: &[Vertex], right: &[Vertex]) -> Result<Self> {
        BipartitePair::new(left.iter().copied().collect(), right.iter().copied().collect())
    }

    pub fn left(&self) -> &VertexSet {
        &self.left
    }

    pub fn right(&self) -> &VertexSet {
        &self.right
    }

    pub fn union(&self) -> VertexSet {
        self.left.union(&self.right).copied().collect()
    }

    pub fn swapped(&self) -> BipartitePair {
        BipartitePair {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }
}

fn check_ground(ground: impl IntoIterator<Item = Vertex>, n: usize) -> Result<()> {
    for v in ground {
        if v == 0 || v > n {
            return Err(Error::GroundMismatch { vertex: v, n });
        }
    }
    Ok(())
}

/// `fit(σ, D) = |D ∩ T_σ| − |D^r ∩ T_σ|`: arcs of `d` that `sigma` ranks
/// forwards minus arcs it ranks backwards.
pub fn fit(sigma: &Permutation, d: &ArcSet) -> Result<i64> {
    check_ground(d.ground.iter().copied(), sigma.len())?;
    Ok(d.arcs
        .iter()
        .map(|&(u, v)| if sigma.image(u) < sigma.image(v) { 1 } else { -1 })
        .sum())
}

/// `d(X, Y) = |D ∩ (X×Y)| / (|X||Y|)` for a digraph with arcs across the
/// pair in at most one direction. When all crossing arcs go `Y → X` the
/// count is taken in that direction.
pub fn density(d: &ArcSet, pair: &BipartitePair) -> Result<Density> {
    if pair.left.is_empty() || pair.right.is_empty() {
        return Err(Error::EmptyPart);
    }
    let mut forward = 0u64;
    let mut backward = 0u64;
    for &(u, v) in &d.arcs {
        if pair.left.contains(&u) && pair.right.contains(&v) {
            forward += 1;
        } else if pair.right.contains(&u) && pair.left.contains(&v) {
            backward += 1;
        }
    }
    if forward > 0 && backward > 0 {
        return Err(Error::BothDirections);
    }
    let size = (pair.left.len() * pair.right.len()) as u64;
    Ok(Ratio::new(forward.max(backward), size))
}

/// With `σ(L ∪ R) = {j_1 < … < j_l}`, the set of ranks `s` for which `j_s`
/// is the position of a vertex of `R`.
pub fn extract_relative_positions(sigma: &Permutation, pair: &BipartitePair) -> Result<VertexSet> {
    check_ground(pair.union(), sigma.len())?;
    let mut positions: Vec<(usize, bool)> = pair
        .left
        .iter()
        .map(|&u| (sigma.image(u), false))
        .chain(pair.right.iter().map(|&u| (sigma.image(u), true)))
        .collect();
    positions.sort_unstable();
    Ok(positions
        .iter()
        .enumerate()
        .filter(|(_, &(_, in_right))| in_right)
        .map(|(s, _)| s + 1)
        .collect())
}

/// Cheap relabel-free pattern: bit `s` set when rank `s` (0-based) of the
/// merged order belongs to the right part. Only valid for `|L| + |R| <= 64`.
pub(crate) fn relative_pattern(sigma: &Permutation, left: &[Vertex], right: &[Vertex]) -> u64 {
    let mut positions: Vec<(usize, bool)> = left
        .iter()
        .map(|&u| (sigma.image(u), false))
        .chain(right.iter().map(|&u| (sigma.image(u), true)))
        .collect();
    positions.sort_unstable();
    positions
        .iter()
        .enumerate()
        .filter(|(_, &(_, r))| r)
        .fold(0, |acc, (s, _)| acc | 1 << s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Vertex]) -> VertexSet {
        v.iter().copied().collect()
    }

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn transitive_arcs() {
        let t = Tournament::transitive(2);
        assert_eq!(t.arcs().collect::<Vec<_>>(), vec![(1, 2)]);
        let t = Tournament::transitive(3);
        let arcs: BTreeSet<_> = t.arcs().collect();
        assert_eq!(arcs, [(1, 2), (1, 3), (2, 3)].into_iter().collect());
        let t = Tournament::transitive(5);
        assert_eq!(t.arcs().count(), 10);
        assert!(t.arcs().all(|(u, v)| u < v));
        assert!(t.is_transitive());
        assert!(t.find_triangle().is_none());
    }

    #[test]
    fn random_tournament_is_seeded() {
        assert_eq!(Tournament::random(1, 3).arcs().count(), 0);
        assert_eq!(Tournament::random(4, 7), Tournament::random(4, 7));
        let t = Tournament::random(9, 1);
        for u in 1..=9 {
            for v in 1..=9 {
                if u != v {
                    assert!(t.has_arc(u, v) ^ t.has_arc(v, u));
                }
            }
            assert!(!t.has_arc(u, u));
        }
    }

    #[test]
    fn rotational_is_regular() {
        let t = Tournament::rotational(9);
        for u in 1..=9 {
            assert_eq!((1..=9).filter(|&v| t.has_arc(u, v)).count(), 4);
        }
        assert!(t.has_arc(1, 5) && t.has_arc(6, 1));
    }

    #[test]
    fn fit_examples() {
        let t = Tournament::transitive(3).to_arc_set();
        assert_eq!(fit(&Permutation::identity(3), &t).unwrap(), 3);
        assert_eq!(fit(&perm(&[3, 2, 1]), &t).unwrap(), -3);
        let cyclic = ArcSet::from_arcs([(1, 2), (2, 3), (3, 1)]).unwrap();
        assert_eq!(fit(&Permutation::identity(3), &cyclic).unwrap(), 1);
    }

    #[test]
    fn fit_rejects_foreign_vertices() {
        let d = ArcSet::from_arcs([(1, 4)]).unwrap();
        assert!(matches!(
            fit(&Permutation::identity(3), &d),
            Err(Error::GroundMismatch { vertex: 4, n: 3 })
        ));
    }

    #[test]
    fn density_examples() {
        let pair = BipartitePair::from_slices(&[1, 2], &[3, 4]).unwrap();
        let d = ArcSet::from_arcs([(1, 3)]).unwrap();
        assert_eq!(density(&d, &pair).unwrap(), Ratio::new(1, 4));

        let complete =
            ArcSet::from_arcs([(1, 3), (1, 4), (2, 3), (2, 4)]).unwrap();
        assert_eq!(density(&complete, &pair).unwrap(), Ratio::from_integer(1));

        let t = Tournament::transitive(4);
        let pair = BipartitePair::from_slices(&[1, 3], &[2, 4]).unwrap();
        let across = t.arcs_across(pair.left(), pair.right());
        assert_eq!(density(&across, &pair).unwrap(), Ratio::new(3, 4));
    }

    #[test]
    fn density_errors() {
        let pair = BipartitePair::from_slices(&[1], &[]).unwrap();
        assert!(matches!(
            density(&ArcSet::default(), &pair),
            Err(Error::EmptyPart)
        ));
        let pair = BipartitePair::from_slices(&[1, 3], &[2, 4]).unwrap();
        let t = Tournament::transitive(4).to_arc_set();
        assert!(matches!(density(&t, &pair), Err(Error::BothDirections)));
    }

    #[test]
    fn reverse_examples() {
        let d = ArcSet::from_arcs([(1, 2)]).unwrap();
        assert_eq!(d.reversed(), ArcSet::from_arcs([(2, 1)]).unwrap());
        let t = Tournament::transitive(3).to_arc_set();
        assert_eq!(
            t.reversed(),
            ArcSet::from_arcs([(2, 1), (3, 1), (3, 2)]).unwrap()
        );
    }

    #[test]
    fn relative_positions_examples() {
        let pair = BipartitePair::from_slices(&[1, 2], &[3, 4]).unwrap();
        let y = |p: &[usize]| extract_relative_positions(&perm(p), &pair).unwrap();
        assert_eq!(y(&[1, 2, 3, 4]), set(&[3, 4]));
        assert_eq!(y(&[4, 3, 2, 1]), set(&[1, 2]));
        assert_eq!(y(&[1, 3, 2, 4]), set(&[2, 4]));
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
        let p = perm(&[3, 1, 2]);
        assert_eq!(p.inverse(), perm(&[2, 3, 1]));
        assert_eq!(Permutation::parse("3 1 2").unwrap(), p);
    }

    #[test]
    fn enumerates_symmetric_group_in_order() {
        let all: Vec<_> = Permutation::all(3).collect();
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Permutation::all(5).count(), 120);
        assert_eq!(Permutation::all(1).count(), 1);
    }

    #[test]
    fn text_round_trip_and_rejections() {
        let t = Tournament::random(6, 11);
        assert_eq!(Tournament::parse(&t.to_text()).unwrap(), t);

        assert!(Tournament::parse("3\n1 2\n2 3\n").is_err(), "missing pair");
        assert!(Tournament::parse("2\n1 2\n2 1\n").is_err(), "duplicate pair");
        assert!(Tournament::parse("2\n1 1\n").is_err(), "loop");
        assert!(Tournament::parse("2\n1 3\n").is_err(), "out of range");
        assert!(Tournament::parse("").is_err());
    }

    #[test]
    fn agreement_matches_fit() {
        let t = Tournament::random(7, 5);
        let d = t.to_arc_set();
        for sigma in Permutation::all(7).step_by(97) {
            let f = fit(&sigma, &d).unwrap();
            assert_eq!(f, 2 * t.agreement(&sigma) as i64 - 21);
        }
    }
}
