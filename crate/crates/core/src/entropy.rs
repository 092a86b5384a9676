//! Explicit distributions over permutations and over `m`-subsets of
//! `[2m]`, their entropies, and the crossing-count entropy bound.
//!
//! Entropies are in bits. Sums of `p ln p` are accumulated in natural log
//! and converted once at the end.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::decomposition::dyadic_decomposition;
use crate::error::{Error, Result};
use crate::tournament::{extract_relative_positions, BipartitePair, Permutation, VertexSet};

/// Allowed distance of a total mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Slack used when checking the crossing-count chain numerically.
pub const MPC_TOLERANCE: f64 = 1e-9;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `−Σ p log₂ p` with `0 log 0 = 0`.
pub fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    let nats = compensated_sum(probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()));
    nats / LN_2
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(entropy_bits([p, 1.0 - p]))
}

/// `Σ p_i log₂(q_i / p_i)`, which is never positive.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch(format!("{} vs {} entries", p.len(), q.len())));
    }
    let mut terms = Vec::with_capacity(p.len());
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::AbsoluteContinuity(i));
        }
        terms.push(pi * (qi / pi).ln());
    }
    Ok(compensated_sum(terms) / LN_2)
}

fn check_probabilities<'a>(probs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let mut all = Vec::new();
    for &p in probs {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        all.push(p);
    }
    let total = compensated_sum(all);
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

/// A probability vector over permutations of `[1, n]`, keyed in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermDistribution {
    n: usize,
    support: BTreeMap<Permutation, f64>,
}

impl PermDistribution {
    pub fn new(n: usize, entries: impl IntoIterator<Item = (Permutation, f64)>) -> Result<Self> {
        let mut support = BTreeMap::new();
        for (sigma, p) in entries {
            if sigma.len() != n {
                return Err(Error::SizeMismatch(format!("permutation {sigma} is not on [1, {n}]")));
            }
            if support.insert(sigma.clone(), p).is_some() {
                return Err(Error::SizeMismatch(format!("permutation {sigma} listed twice")));
            }
        }
        check_probabilities(support.values())?;
        Ok(PermDistribution { n, support })
    }

    /// Uniform measure on the symmetric group.
    pub fn uniform(n: usize) -> Self {
        let all: Vec<_> = Permutation::all(n).collect();
        let p = 1.0 / all.len() as f64;
        PermDistribution {
            n,
            support: all.into_iter().map(|s| (s, p)).collect(),
        }
    }

    pub fn point_mass(sigma: Permutation) -> Self {
        PermDistribution {
            n: sigma.len(),
            support: [(sigma, 1.0)].into(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Permutation, f64)> {
        self.support.iter().map(|(s, &p)| (s, p))
    }

    pub fn probability(&self, sigma: &Permutation) -> f64 {
        self.support.get(sigma).copied().unwrap_or(0.0)
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.support.values().copied())
    }

    /// Probability of the event `{σ : event(σ)}`.
    pub fn prob(&self, mut event: impl FnMut(&Permutation) -> bool) -> f64 {
        compensated_sum(self.iter().filter(|(s, _)| event(s)).map(|(_, p)| p))
    }

    /// `Pr(σ(u) < σ(v))`.
    pub fn arc_probability(&self, u: usize, v: usize) -> f64 {
        self.prob(|s| s.image(u) < s.image(v))
    }

    pub fn expect(&self, mut f: impl FnMut(&Permutation) -> f64) -> f64 {
        compensated_sum(self.iter().map(|(s, p)| p * f(s)))
    }

    /// Distribution of the relative-position set of `pair` (requires
    /// `|L| = |R|`).
    pub fn induced_subsets(&self, pair: &BipartitePair) -> Result<SubsetDistribution> {
        let m = pair.left().len();
        if pair.right().len() != m {
            return Err(Error::SizeMismatch(format!(
                "pair parts have sizes {} and {}",
                m,
                pair.right().len()
            )));
        }
        let mut mass: BTreeMap<VertexSet, Vec<f64>> = BTreeMap::new();
        for (sigma, p) in self.iter() {
            mass.entry(extract_relative_positions(sigma, pair)?).or_default().push(p);
        }
        SubsetDistribution::new(m, mass.into_iter().map(|(y, ps)| (y, compensated_sum(ps))))
    }

    /// The induced distributions of `Y_i` on every dyadic pair of `[n]`.
    pub fn dyadic_block_distributions(&self) -> Result<Vec<SubsetDistribution>> {
        dyadic_decomposition(self.n)?
            .iter()
            .map(|pair| self.induced_subsets(pair))
            .collect()
    }

    /// One `images : probability` line per support element.
    pub fn to_text(&self) -> String {
        self.iter().map(|(s, p)| format!("{s} : {p}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in data_lines(text) {
            let (lhs, p) = split_entry(lineno, line)?;
            let sigma = Permutation::parse(lhs).map_err(|e| Error::parse(lineno, e.to_string()))?;
            entries.push((sigma, p));
        }
        let n = entries
            .first()
            .map(|(s, _)| s.len())
            .ok_or_else(|| Error::parse(1, "empty distribution"))?;
        PermDistribution::new(n, entries)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn split_entry(lineno: usize, line: &str) -> Result<(&str, f64)> {
    let (lhs, rhs) = line
        .split_once(':')
        .ok_or_else(|| Error::parse(lineno, "expected `members : probability`"))?;
    let p = rhs
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(lineno, format!("bad probability {:?}", rhs.trim())))?;
    Ok((lhs, p))
}

/// All `m`-subsets of `[1, 2m]` in lexicographic order.
pub fn all_m_subsets(m: usize) -> Vec<VertexSet> {
    fn rec(start: usize, end: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<VertexSet>) {
        if left == 0 {
            out.push(cur.iter().copied().collect());
            return;
        }
        for x in start..=end + 1 - left {
            cur.push(x);
            rec(x + 1, end, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, 2 * m, m, &mut Vec::new(), &mut out);
    out
}

fn check_subset(y: &VertexSet, m: usize) -> Result<()> {
    if y.len() != m || y.iter().any(|&a| a == 0 || a > 2 * m) {
        return Err(Error::WrongSubsetSize {
            subset: y.iter().copied().collect(),
            m,
        });
    }
    Ok(())
}

/// A distribution over `m`-subsets of `[1, 2m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetDistribution {
    m: usize,
    support: BTreeMap<VertexSet, f64>,
}

impl SubsetDistribution {
    pub fn new(m: usize, entries: impl IntoIterator<Item = (VertexSet, f64)>) -> Result<Self> {
        let mut support = BTreeMap::new();
        for (y, p) in entries {
            check_subset(&y, m)?;
            if support.insert(y.clone(), p).is_some() {
                return Err(Error::SizeMismatch(format!("subset {y:?} listed twice")));
            }
        }
        check_probabilities(support.values())?;
        Ok(SubsetDistribution { m, support })
    }

    pub fn uniform(m: usize) -> Self {
        let all = all_m_subsets(m);
        let p = 1.0 / all.len() as f64;
        SubsetDistribution {
            m,
            support: all.into_iter().map(|y| (y, p)).collect(),
        }
    }

    pub fn point_mass(m: usize, y: VertexSet) -> Result<Self> {
        SubsetDistribution::new(m, [(y, 1.0)])
    }

    /// The point mass on the top half `{m+1, …, 2m}`.
    pub fn top(m: usize) -> Self {
        SubsetDistribution {
            m,
            support: [((m + 1..=2 * m).collect(), 1.0)].into(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexSet, f64)> {
        self.support.iter().map(|(y, &p)| (y, p))
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.support.values().copied())
    }

    /// `δ_a = Pr(a ∈ 𝕐) − 1/2` for `a = 1..2m`.
    pub fn marginals(&self) -> MarginalProfile {
        let mut inclusion = vec![Vec::new(); 2 * self.m];
        for (y, p) in self.iter() {
            for &a in y {
                inclusion[a - 1].push(p);
            }
        }
        MarginalProfile {
            deltas: inclusion.into_iter().map(|ps| compensated_sum(ps) - 0.5).collect(),
        }
    }

    pub fn expected_crossings(&self) -> f64 {
        compensated_sum(
            self.iter()
                .map(|(y, p)| p * crossing_count(y, self.m).expect("support holds m-subsets") as f64),
        )
    }

    pub fn to_text(&self) -> String {
        self.iter()
            .map(|(y, p)| {
                let members: Vec<String> = y.iter().map(|a| a.to_string()).collect();
                format!("{} : {p}\n", members.join(" "))
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in data_lines(text) {
            let (lhs, p) = split_entry(lineno, line)?;
            let y = lhs
                .split_whitespace()
                .map(|f| f.parse::<usize>().map_err(|_| Error::parse(lineno, format!("bad member {f:?}"))))
                .collect::<Result<VertexSet>>()?;
            entries.push((y, p));
        }
        let m = entries
            .first()
            .map(|(y, _)| y.len())
            .ok_or_else(|| Error::parse(1, "empty distribution"))?;
        SubsetDistribution::new(m, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalProfile {
    pub deltas: Vec<f64>,
}

impl MarginalProfile {
    pub fn sum(&self) -> f64 {
        compensated_sum(self.deltas.iter().copied())
    }

    pub fn sum_of_squares(&self) -> f64 {
        compensated_sum(self.deltas.iter().map(|d| d * d))
    }

    pub fn positive_sum(&self) -> f64 {
        compensated_sum(self.deltas.iter().copied().filter(|&d| d > 0.0))
    }

    /// `Σ_b δ_b·b`.
    pub fn weighted_sum(&self) -> f64 {
        compensated_sum(self.deltas.iter().enumerate().map(|(i, d)| d * (i + 1) as f64))
    }
}

/// `f(Y) = |{(a, b) : a < b, a ∉ Y, b ∈ Y}|`, computed by direct pair
/// count and by `Σ_{b∈Y} b − C(m+1, 2)`; the two must agree.
pub fn crossing_count(y: &VertexSet, m: usize) -> Result<u64> {
    check_subset(y, m)?;
    let direct = y
        .iter()
        .map(|&b| (1..b).filter(|a| !y.contains(a)).count() as u64)
        .sum::<u64>();
    let closed = y.iter().map(|&b| b as u64).sum::<u64>() - (m * (m + 1) / 2) as u64;
    assert_eq!(direct, closed, "crossing count closed form disagrees");
    Ok(direct)
}

/// The inequalities of the crossing-count entropy bound, each evaluated
/// with slack [`MPC_TOLERANCE`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpcChain {
    /// `Σ δ_b b >= ε m²`
    pub weighted_sum: bool,
    /// `Σ_{δ_b > 0} δ_b >= ε m / 2`
    pub positive_mass: bool,
    /// `Σ δ_a² >= ε² m / 8`
    pub cauchy_schwarz: bool,
    /// `H(𝕐) <= Σ_a H(1/2 + δ_a)`
    pub subadditivity: bool,
    /// `Σ_a H(1/2 + δ_a) <= 2m − 2 Σ δ_a²`
    pub quadratic: bool,
    /// `2m − 2 Σ δ_a² <= (1 − ε²/8) 2m`
    pub target: bool,
    /// `H(𝕐) <= (1 − ε²/8) 2m`
    pub conclusion: bool,
}

impl MpcChain {
    pub fn all_hold(&self) -> bool {
        self.weighted_sum
            && self.positive_mass
            && self.cauchy_schwarz
            && self.subadditivity
            && self.quadratic
            && self.target
            && self.conclusion
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcReport {
    pub m: usize,
    pub epsilon: f64,
    pub profile: MarginalProfile,
    /// `E f(𝕐)` summed over the support.
    pub expected_crossings: f64,
    /// `Σ (1/2 + δ_b) b − C(m+1, 2)`.
    pub expected_crossings_marginal: f64,
    /// `(1/2 + ε) m²`.
    pub threshold: f64,
    pub hypothesis_strict: bool,
    /// Hypothesis on the closure: `E f >= (1/2 + ε) m² − tolerance`.
    pub hypothesis: bool,
    pub delta_sum: f64,
    pub sum_delta_sq: f64,
    pub entropy: f64,
    pub binary_entropy_sum: f64,
    pub quadratic_bound: f64,
    pub target: f64,
    pub chain: Option<MpcChain>,
}

/// Evaluates every step of the crossing-count entropy bound for `dist`.
/// The chain is only filled in when the hypothesis holds (on its closure).
pub fn mpc_check(dist: &SubsetDistribution, epsilon: f64) -> MpcReport {
    mpc_check_with_tolerance(dist, epsilon, MPC_TOLERANCE)
}

/// [`mpc_check`] with an explicit slack for the hypothesis and every step,
/// for distributions that only satisfy their constraints numerically.
pub fn mpc_check_with_tolerance(dist: &SubsetDistribution, epsilon: f64, tolerance: f64) -> MpcReport {
    let m = dist.m();
    let mf = m as f64;
    let profile = dist.marginals();
    let expected_crossings = dist.expected_crossings();
    let expected_crossings_marginal = compensated_sum(
        profile
            .deltas
            .iter()
            .enumerate()
            .map(|(i, d)| (0.5 + d) * (i + 1) as f64),
    ) - (m * (m + 1) / 2) as f64;
    assert!(
        (expected_crossings - expected_crossings_marginal).abs() <= MPC_TOLERANCE * (1.0 + mf * mf),
        "E f disagrees with its marginal form: {expected_crossings} vs {expected_crossings_marginal}"
    );
    let threshold = (0.5 + epsilon) * mf * mf;
    let sum_delta_sq = profile.sum_of_squares();
    let binary_entropy_sum = compensated_sum(
        profile
            .deltas
            .iter()
            .map(|d| binary_entropy((0.5 + d).clamp(0.0, 1.0)).expect("clamped")),
    );
    let entropy = dist.entropy();
    let quadratic_bound = 2.0 * mf - 2.0 * sum_delta_sq;
    let target = (1.0 - epsilon * epsilon / 8.0) * 2.0 * mf;
    let tol = tolerance.max(MPC_TOLERANCE);
    let hypothesis = expected_crossings >= threshold - tol;
    let chain = hypothesis.then(|| MpcChain {
        weighted_sum: profile.weighted_sum() >= epsilon * mf * mf - tol,
        positive_mass: profile.positive_sum() >= epsilon * mf / 2.0 - tol,
        cauchy_schwarz: sum_delta_sq >= epsilon * epsilon * mf / 8.0 - tol,
        subadditivity: entropy <= binary_entropy_sum + tol,
        quadratic: binary_entropy_sum <= quadratic_bound + tol,
        target: quadratic_bound <= target + tol,
        conclusion: entropy <= target + tol,
    });
    MpcReport {
        m,
        epsilon,
        delta_sum: profile.sum(),
        profile,
        expected_crossings,
        expected_crossings_marginal,
        threshold,
        hypothesis_strict: expected_crossings > threshold,
        hypothesis,
        sum_delta_sq,
        entropy,
        binary_entropy_sum,
        quadratic_bound,
        target,
        chain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn entropy_examples() {
        assert!((PermDistribution::uniform(3).entropy() - 6f64.log2()).abs() < 1e-12);
        assert!((PermDistribution::uniform(3).entropy() - 2.584963).abs() < 1e-6);
        assert_eq!(PermDistribution::point_mass(Permutation::identity(4)).entropy(), 0.0);
        assert!((entropy_bits([0.6, 0.4]) - 0.970951).abs() < 1e-6);
    }

    #[test]
    fn uniform_entropy_is_log_factorial() {
        for n in 1..=7 {
            let log_fact: f64 = (1..=n).map(|k| (k as f64).log2()).sum();
            assert!((PermDistribution::uniform(n).entropy() - log_fact).abs() < 1e-9);
        }
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let expected = -(0.6f64 * 0.6f64.log2() + 0.4 * 0.4f64.log2());
        assert!((binary_entropy(0.6).unwrap() - expected).abs() < 1e-15);
        assert!((binary_entropy(0.6).unwrap() - 0.970951).abs() < 1e-6);
        assert!(binary_entropy(1.2).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        assert!((relative_entropy(&[1.0, 0.0], &[0.5, 0.5]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            relative_entropy(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::AbsoluteContinuity(1))
        ));
    }

    #[test]
    fn relative_entropy_is_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let k = rng.random_range(1..8);
            let mut draw = || {
                let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let (p, q) = (draw(), draw());
            assert!(relative_entropy(&p, &q).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn crossing_count_examples() {
        assert_eq!(crossing_count(&set(&[1, 2]), 2).unwrap(), 0);
        assert_eq!(crossing_count(&set(&[3, 4]), 2).unwrap(), 4);
        assert_eq!(crossing_count(&set(&[1, 4]), 2).unwrap(), 2);
        assert!(crossing_count(&set(&[1]), 2).is_err());
        assert!(crossing_count(&set(&[1, 5]), 2).is_err());
    }

    #[test]
    fn crossing_count_exhaustive() {
        for m in 1..=6 {
            for y in all_m_subsets(m) {
                let brute = (1..=2 * m)
                    .flat_map(|a| (a + 1..=2 * m).map(move |b| (a, b)))
                    .filter(|(a, b)| !y.contains(a) && y.contains(b))
                    .count() as u64;
                let f = crossing_count(&y, m).unwrap();
                assert_eq!(f, brute);
                assert!(f <= (m * m) as u64);
            }
        }
    }

    #[test]
    fn mpc_point_mass_top() {
        for m in 1..=5 {
            let r = mpc_check(&SubsetDistribution::top(m), 0.45);
            assert!(r.hypothesis_strict);
            assert_eq!(r.entropy, 0.0);
            assert!(r.chain.unwrap().all_hold());
        }
    }

    #[test]
    fn mpc_uniform_fails_hypothesis() {
        for m in 1..=5 {
            let r = mpc_check(&SubsetDistribution::uniform(m), 0.01);
            assert!((r.expected_crossings - (m * m) as f64 / 2.0).abs() < 1e-9);
            assert!(!r.hypothesis && r.chain.is_none());
            assert!(r.delta_sum.abs() < 1e-12);
        }
    }

    #[test]
    fn mpc_mixture_m3() {
        let uniform = all_m_subsets(3);
        assert_eq!(uniform.len(), 20);
        let top = set(&[4, 5, 6]);
        let entries = uniform
            .iter()
            .map(|y| (y.clone(), 0.1 / 20.0 + if *y == top { 0.9 } else { 0.0 }));
        let dist = SubsetDistribution::new(3, entries).unwrap();
        let r = mpc_check(&dist, 0.2);
        // E f = 0.9·9 + 0.1·4.5 by symmetry of the uniform part.
        assert!((r.expected_crossings - 8.55).abs() < 1e-12);
        assert!(r.hypothesis_strict);
        assert!(r.chain.unwrap().all_hold());
    }

    #[test]
    fn text_round_trips() {
        let d = PermDistribution::uniform(3);
        assert_eq!(PermDistribution::parse(&d.to_text()).unwrap(), d);
        let s = SubsetDistribution::uniform(2);
        assert_eq!(SubsetDistribution::parse(&s.to_text()).unwrap(), s);
        assert!(matches!(
            PermDistribution::parse("1 2 : 0.5\n2 1 : 0.4\n"),
            Err(Error::NotNormalized(_))
        ));
        assert!(SubsetDistribution::parse("1 5 : 1\n").is_err());
    }

    #[test]
    fn dyadic_blocks_of_uniform() {
        let blocks = PermDistribution::uniform(4).dyadic_block_distributions().unwrap();
        let total: f64 = blocks.iter().map(|b| b.entropy()).sum();
        assert!((total - 24f64.log2()).abs() < 1e-12);
        assert!((blocks[0].entropy() - 6f64.log2()).abs() < 1e-12);
    }
}
