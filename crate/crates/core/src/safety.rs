//! Safe position pairs, the interval balance condition and the tail bound
//! on the probability that a uniform permutation is unsafe.
//!
//! Safety of `(X, Y)` for `D ⊆ L × R` only depends on which ranks of the
//! merged order `X ∪ Y` belong to `Y`. That pattern is encoded as a bitmask
//! (bit `s` set when rank `s`, 0-based, is in `Y`), and everything here
//! works on patterns.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::derive_seed;
use crate::error::{Error, Result};
use crate::regularity::{is_regular_exact, BigraphView};
use crate::tournament::{density, relative_pattern, ArcSet, BipartitePair, Permutation, Vertex, VertexSet};

/// Largest part size for which all `|L|!·|R|!` bijections are enumerated.
pub const SAFETY_CAP: usize = 5;

const MC_CHUNKS: u64 = 64;
const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyParams {
    pub l: usize,
    pub left: usize,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub zeta: f64,
    /// Length of every interval but the last, `max(1, ⌊λl⌋)`.
    pub interval_len: usize,
    pub r: usize,
}

impl SafetyParams {
    /// `λ = 2δ`, `ζ = εδγ(1−γ)/4`.
    pub fn new(left: usize, right: usize, delta: f64, epsilon: f64) -> Result<Self> {
        if left == 0 || right == 0 {
            return Err(Error::EmptyPart);
        }
        if !(delta > 0.0 && epsilon > 0.0) {
            return Err(Error::Config(format!("need δ, ε > 0, got {delta}, {epsilon}")));
        }
        let l = left + right;
        let gamma = left as f64 / l as f64;
        let mut params = SafetyParams {
            l,
            left,
            gamma,
            delta,
            epsilon,
            lambda: 2.0 * delta,
            zeta: epsilon * delta * gamma * (1.0 - gamma) / 4.0,
            interval_len: 0,
            r: 0,
        };
        params.set_intervals();
        Ok(params)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self.set_intervals();
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    fn set_intervals(&mut self) {
        let len = ((self.lambda * self.l as f64) + 1e-9).floor() as usize;
        self.interval_len = len.clamp(1, self.l);
        self.r = self.l / self.interval_len;
    }

    /// The `r` intervals of `[0, l)` (0-based ranks); the last one absorbs
    /// the remainder when `λl` does not divide `l`.
    pub fn intervals(&self) -> Vec<Range<usize>> {
        (0..self.r)
            .map(|j| {
                let start = j * self.interval_len;
                let end = if j + 1 == self.r { self.l } else { start + self.interval_len };
                start..end
            })
            .collect()
    }

    /// Allowed `X`-count range on an interval of the given length:
    /// `γ|I| ± ζl`.
    pub fn allowed_range(&self, len: usize) -> (f64, f64) {
        let centre = self.gamma * len as f64;
        let width = self.zeta * self.l as f64;
        (centre - width, centre + width)
    }

    fn interval_ok(&self, range: &Range<usize>, x_count: usize) -> bool {
        let (lo, hi) = self.allowed_range(range.len());
        let c = x_count as f64;
        c >= lo - SLACK && c <= hi + SLACK
    }

    /// Interval condition on a pattern with `Y` ranks set.
    fn pattern_balanced(&self, y_pattern: u64) -> bool {
        self.intervals().iter().all(|range| {
            let x_count = range.clone().filter(|&s| y_pattern >> s & 1 == 0).count();
            self.interval_ok(range, x_count)
        })
    }
}

/// `x_positions` are ranks in `[1, l]` of the merged order.
pub fn interval_condition(x_positions: &VertexSet, params: &SafetyParams) -> Result<bool> {
    if x_positions.len() != params.left {
        return Err(Error::SizeMismatch(format!(
            "{} positions given, |L| = {}",
            x_positions.len(),
            params.left
        )));
    }
    if let Some(&bad) = x_positions.iter().find(|&&p| p == 0 || p > params.l) {
        return Err(Error::GroundMismatch { vertex: bad, n: params.l });
    }
    Ok(params.intervals().iter().all(|range| {
        let x_count = range.clone().filter(|s| x_positions.contains(&(s + 1))).count();
        params.interval_ok(range, x_count)
    }))
}

/// `2r·exp(−2ζ²l/λ)`, not clamped.
pub fn unsafe_prob_bound(params: &SafetyParams) -> f64 {
    hoeffding_union_bound(params.r, params.zeta, params.l, params.lambda)
}

pub fn hoeffding_union_bound(r: usize, zeta: f64, l: usize, lambda: f64) -> f64 {
    2.0 * r as f64 * (-2.0 * zeta * zeta * l as f64 / lambda).exp()
}

fn check_cap(pair: &BipartitePair) -> Result<()> {
    let (left, right) = (pair.left().len(), pair.right().len());
    if left == 0 || right == 0 {
        return Err(Error::EmptyPart);
    }
    if left > SAFETY_CAP || right > SAFETY_CAP {
        return Err(Error::SafetyCapExceeded {
            left,
            right,
            cap: SAFETY_CAP,
        });
    }
    Ok(())
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = items.to_vec();
    cur.sort_unstable();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Precomputed `max_τ fit(τ, D)` for every pattern of a fixed `(D, L, R)`.
#[derive(Clone, Debug)]
pub struct SafetyTable {
    left: Vec<Vertex>,
    right: Vec<Vertex>,
    threshold: f64,
    max_fit: BTreeMap<u64, i64>,
}

impl SafetyTable {
    pub fn new(d: &ArcSet, pair: &BipartitePair, epsilon: f64) -> Result<Self> {
        check_cap(pair)?;
        let left: Vec<Vertex> = pair.left().iter().copied().collect();
        let right: Vec<Vertex> = pair.right().iter().copied().collect();
        let index = |v: Vertex, side: &[Vertex]| side.iter().position(|&w| w == v);
        let mut arcs = Vec::with_capacity(d.len());
        for &(u, v) in d.arcs() {
            match (index(u, &left), index(v, &right)) {
                (Some(i), Some(j)) => arcs.push((i, j)),
                _ => return Err(Error::InvalidArc(u, v)),
            }
        }
        let l = left.len() + right.len();
        let mut max_fit = BTreeMap::new();
        for y_ranks in crate::regularity::combinations(l, right.len()) {
            let pattern = y_ranks.iter().fold(0u64, |acc, &s| acc | 1 << s);
            let x_ranks: Vec<usize> = (0..l).filter(|s| pattern >> s & 1 == 0).collect();
            max_fit.insert(pattern, max_fit_over_bijections(&arcs, &x_ranks, &y_ranks));
        }
        Ok(SafetyTable {
            left,
            right,
            threshold: epsilon * (pair.left().len() * pair.right().len()) as f64 / 4.0,
            max_fit,
        })
    }

    pub fn max_fit(&self, y_pattern: u64) -> i64 {
        self.max_fit[&y_pattern]
    }

    /// `fit(τ, D) < ε|L||R|/4` for every bijection, strictly.
    pub fn is_safe(&self, y_pattern: u64) -> bool {
        (self.max_fit(y_pattern) as f64) < self.threshold
    }

    pub fn patterns(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.max_fit.iter().map(|(&p, &f)| (p, f))
    }

    pub fn is_safe_permutation(&self, sigma: &Permutation) -> bool {
        self.is_safe(relative_pattern(sigma, &self.left, &self.right))
    }

    /// Fraction of patterns (equivalently, of uniform permutations) that
    /// are unsafe.
    pub fn unsafe_fraction(&self) -> f64 {
        let unsafe_count = self.max_fit.keys().filter(|&&p| !self.is_safe(p)).count();
        unsafe_count as f64 / self.max_fit.len() as f64
    }
}

/// `arcs` hold indices into the left and right vertex lists; `x_ranks` and
/// `y_ranks` are the ranks available to each side.
fn max_fit_over_bijections(arcs: &[(usize, usize)], x_ranks: &[usize], y_ranks: &[usize]) -> i64 {
    let left_orders = permutations_of(x_ranks);
    let right_orders = permutations_of(y_ranks);
    let mut best = i64::MIN;
    for tl in &left_orders {
        for tr in &right_orders {
            let f: i64 = arcs
                .iter()
                .map(|&(i, j)| if tl[i] < tr[j] { 1 } else { -1 })
                .sum();
            best = best.max(f);
        }
    }
    best
}

fn pattern_of(x: &VertexSet, y: &VertexSet) -> u64 {
    let mut merged: Vec<(usize, bool)> = x.iter().map(|&p| (p, false)).chain(y.iter().map(|&p| (p, true))).collect();
    merged.sort_unstable();
    merged
        .iter()
        .enumerate()
        .filter(|(_, &(_, in_y))| in_y)
        .fold(0, |acc, (s, _)| acc | 1 << s)
}

/// Whether `(X, Y)` is safe for `D ⊆ L × R`, by enumerating every bijection
/// `τ` with `τ(L) = X`.
pub fn is_safe_exhaustive(d: &ArcSet, pair: &BipartitePair, x: &VertexSet, y: &VertexSet, epsilon: f64) -> Result<bool> {
    check_cap(pair)?;
    if x.len() != pair.left().len() || y.len() != pair.right().len() {
        return Err(Error::SizeMismatch(format!(
            "|X| = {}, |Y| = {} against |L| = {}, |R| = {}",
            x.len(),
            y.len(),
            pair.left().len(),
            pair.right().len()
        )));
    }
    if let Some(&shared) = x.intersection(y).next() {
        return Err(Error::OverlappingParts(shared));
    }
    Ok(SafetyTable::new(d, pair, epsilon)?.is_safe(pattern_of(x, y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_counts(hits: usize, samples: usize) -> Self {
        let p = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
        let stderr = if samples == 0 { 0.0 } else { (p * (1.0 - p) / samples as f64).sqrt() };
        Estimate {
            estimate: p,
            stderr,
            samples,
        }
    }
}

/// Exact probability that a uniform permutation is unsafe for `D`.
pub fn unsafe_prob_exact(d: &ArcSet, pair: &BipartitePair, epsilon: f64) -> Result<f64> {
    Ok(SafetyTable::new(d, pair, epsilon)?.unsafe_fraction())
}

/// Samples `σ` uniformly from the symmetric group on `[1, n_ambient]` and
/// counts unsafe position pairs. Work is split into fixed chunks with
/// derived seeds, so the result does not depend on the thread count.
pub fn unsafe_prob_monte_carlo(
    d: &ArcSet,
    pair: &BipartitePair,
    epsilon: f64,
    n_ambient: usize,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let table = SafetyTable::new(d, pair, epsilon)?;
    if let Some(&v) = pair.union().iter().find(|&&v| v == 0 || v > n_ambient) {
        return Err(Error::GroundMismatch { vertex: v, n: n_ambient });
    }
    let hits = count_monte_carlo(samples, seed, |rng, images| {
        images.shuffle(rng);
        let sigma = Permutation::new(images.clone()).expect("shuffle of identity");
        !table.is_safe_permutation(&sigma)
    }, n_ambient);
    Ok(Estimate::from_counts(hits, samples))
}

fn count_monte_carlo(
    samples: usize,
    seed: u64,
    trial: impl Fn(&mut ChaCha8Rng, &mut Vec<usize>) -> bool + Sync,
    n: usize,
) -> usize {
    (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let quota = samples / MC_CHUNKS as usize + usize::from((chunk as usize) < samples % MC_CHUNKS as usize);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, chunk));
            let mut images: Vec<usize> = (1..=n).collect();
            (0..quota).filter(|_| trial(&mut rng, &mut images)).count()
        })
        .sum()
}

/// Exact probability, over a uniform placement of `X` among the `l` merged
/// ranks, that some interval violates the balance condition. This is the
/// event the union bound `2r·exp(−2ζ²l/λ)` controls.
pub fn interval_failure_prob_exact(params: &SafetyParams) -> Result<f64> {
    if params.l > 30 {
        return Err(Error::TooLarge { n: params.l, cap: 30 });
    }
    let (mut total, mut failures) = (0usize, 0usize);
    for y in crate::regularity::combinations(params.l, params.l - params.left) {
        total += 1;
        if !params.pattern_balanced(y.iter().fold(0u64, |acc, &s| acc | 1 << s)) {
            failures += 1;
        }
    }
    Ok(failures as f64 / total as f64)
}

/// The three premises of the interval lemma together with its conclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalLemmaCase {
    pub regular: bool,
    pub dense: bool,
    pub balanced: bool,
    pub safe: bool,
}

impl IntervalLemmaCase {
    pub fn premises_hold(&self) -> bool {
        self.regular && self.dense && self.balanced
    }

    pub fn is_counterexample(&self) -> bool {
        self.premises_hold() && !self.safe
    }
}

/// Evaluates the interval lemma on every pattern of `(D, L, R)`: exact
/// regularity and density are fixed by `D`, balance and safety vary with
/// the pattern. Parameters are derived from `delta` and `epsilon`.
pub fn interval_lemma_cases(
    d: &ArcSet,
    pair: &BipartitePair,
    delta: f64,
    epsilon: f64,
) -> Result<Vec<(u64, IntervalLemmaCase)>> {
    let table = SafetyTable::new(d, pair, epsilon)?;
    let params = SafetyParams::new(pair.left().len(), pair.right().len(), delta, epsilon)?;
    let view = BigraphView::from_arcs(d, pair);
    let regular = is_regular_exact(&view, delta)?.regular;
    // An arc-free D has no defined density; it is not dense either way.
    let dense = match density(d, pair) {
        Ok(dens) => dens * 2 >= 1.into(),
        Err(Error::EmptyPart) if d.is_empty() => false,
        Err(e) => return Err(e),
    };
    Ok(table
        .patterns()
        .map(|(p, _)| {
            (
                p,
                IntervalLemmaCase {
                    regular,
                    dense,
                    balanced: params.pattern_balanced(p),
                    safe: table.is_safe(p),
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    fn complete(pair: &BipartitePair) -> ArcSet {
        let arcs = pair
            .left()
            .iter()
            .flat_map(|&u| pair.right().iter().map(move |&v| (u, v)));
        ArcSet::from_arcs(arcs).unwrap()
    }

    fn pair22() -> BipartitePair {
        BipartitePair::from_slices(&[1, 2], &[3, 4]).unwrap()
    }

    #[test]
    fn params_derivation() {
        let p = SafetyParams::new(3, 3, 0.1, 0.2).unwrap();
        assert_eq!(p.l, 6);
        assert!((p.lambda - 0.2).abs() < 1e-15);
        assert!((p.zeta - 0.2 * 0.1 * 0.25 / 4.0).abs() < 1e-15);
        assert_eq!(p.interval_len, 1);
        assert_eq!(p.r, 6);
        let q = SafetyParams::new(5, 5, 0.15, 0.2).unwrap();
        assert_eq!((q.interval_len, q.r), (3, 3));
        assert_eq!(q.intervals(), vec![0..3, 3..6, 6..10]);
    }

    #[test]
    fn interval_condition_examples() {
        let p = SafetyParams::new(5, 5, 0.1, 0.2).unwrap().with_lambda(0.4);
        assert_eq!(p.interval_len, 4);
        let alternating = set(&[1, 3, 5, 7, 9]);
        assert!(interval_condition(&alternating, &p).unwrap());
        let first_half = set(&[1, 2, 3, 4, 5]);
        assert!(!interval_condition(&first_half, &p).unwrap());
        let wide = p.clone().with_zeta(p.gamma * p.lambda);
        assert!(interval_condition(&first_half, &wide).unwrap());
        assert!(interval_condition(&set(&[1, 2]), &p).is_err());
        assert!(interval_condition(&set(&[1, 2, 3, 4, 11]), &p).is_err());
    }

    #[test]
    fn bound_examples() {
        let p = SafetyParams::new(50, 50, 0.25, 0.2).unwrap().with_zeta(0.1);
        assert_eq!((p.l, p.r), (100, 2));
        assert!((unsafe_prob_bound(&p) - 4.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((unsafe_prob_bound(&p) - 0.07326).abs() < 1e-5);
        assert_eq!(unsafe_prob_bound(&p.clone().with_zeta(0.0)), 4.0);
        assert!(hoeffding_union_bound(2, 0.1, 200, 0.5) < hoeffding_union_bound(2, 0.1, 100, 0.5));
    }

    #[test]
    fn safety_examples() {
        let pair = pair22();
        let d = complete(&pair);
        let empty = ArcSet::from_arcs([]).unwrap();
        assert!(is_safe_exhaustive(&empty, &pair, &set(&[1, 2]), &set(&[3, 4]), 0.01).unwrap());
        for eps in [0.01, 0.5, 1.0] {
            assert!(!is_safe_exhaustive(&d, &pair, &set(&[1, 2]), &set(&[3, 4]), eps).unwrap());
        }
        assert!(is_safe_exhaustive(&d, &pair, &set(&[1, 4]), &set(&[2, 3]), 0.1).unwrap());
        let table = SafetyTable::new(&d, &pair, 0.1).unwrap();
        assert_eq!(table.max_fit(0b1100), 4);
        assert_eq!(table.max_fit(0b0110), 0);
    }

    #[test]
    fn safety_rejects_bad_input() {
        let big = BipartitePair::from_slices(&[1, 2, 3, 4, 5, 6], &[7]).unwrap();
        assert!(matches!(
            SafetyTable::new(&complete(&big), &big, 0.1),
            Err(Error::SafetyCapExceeded { .. })
        ));
        let pair = pair22();
        assert!(is_safe_exhaustive(&complete(&pair), &pair, &set(&[1, 2]), &set(&[2, 3]), 0.1).is_err());
    }

    #[test]
    fn safety_is_label_free() {
        let pair = BipartitePair::from_slices(&[1, 2, 3], &[4, 5]).unwrap();
        let d = ArcSet::from_arcs([(1, 4), (2, 4), (3, 5), (1, 5)]).unwrap();
        let a = is_safe_exhaustive(&d, &pair, &set(&[1, 4, 6]), &set(&[2, 9]), 0.3).unwrap();
        let b = is_safe_exhaustive(&d, &pair, &set(&[10, 40, 60]), &set(&[20, 90]), 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let pair = pair22();
        let d = complete(&pair);
        let exact = unsafe_prob_exact(&d, &pair, 0.5).unwrap();
        // For complete D the fit is τ-independent: 4, 2, 0, 0, −2, −4 over the six splits.
        assert!((exact - 1.0 / 3.0).abs() < 1e-15);
        let est = unsafe_prob_monte_carlo(&d, &pair, 0.5, 4, 20_000, 7).unwrap();
        assert!((est.estimate - exact).abs() <= 3.0 * est.stderr);
        assert_eq!(est, unsafe_prob_monte_carlo(&d, &pair, 0.5, 4, 20_000, 7).unwrap());
        let empty = ArcSet::from_arcs([]).unwrap();
        assert_eq!(unsafe_prob_monte_carlo(&empty, &pair, 0.5, 10, 1000, 1).unwrap().estimate, 0.0);
    }

    #[test]
    fn interval_failure_respects_union_bound() {
        for (left, right, lambda, zeta) in [(5, 5, 0.5, 0.1), (8, 8, 0.25, 0.15), (6, 10, 0.5, 0.12)] {
            let p = SafetyParams::new(left, right, 0.1, 0.2)
                .unwrap()
                .with_lambda(lambda)
                .with_zeta(zeta);
            let exact = interval_failure_prob_exact(&p).unwrap();
            assert!(exact <= unsafe_prob_bound(&p) + 1e-12, "{exact} vs {}", unsafe_prob_bound(&p));
        }
    }
}
