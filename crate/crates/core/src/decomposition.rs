//! The recursive decomposition tree of a tournament, its statistics, the
//! leaf-depth inequality, and the dyadic decomposition of a transitive
//! tournament on `2^k` vertices.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularity::{ternary_partition, RegularityConfig, RegularityVerdict};
use crate::tournament::{
    extract_relative_positions, ArcSet, BipartitePair, Density, Permutation, Tournament, Vertex, VertexSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Root,
    L,
    R,
    W,
}

impl Role {
    fn tag(self) -> &'static str {
        match self {
            Role::Root => "root",
            Role::L => "L",
            Role::R => "R",
            Role::W => "W",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NodeSplit {
    /// Child ids in `L, R, W` order; `W` is absent when empty.
    pub children: Vec<usize>,
    pub left: VertexSet,
    pub right: VertexSet,
    /// `S = T ∩ (L×R)`.
    pub arcs: ArcSet,
    pub density: Density,
    pub verdict: RegularityVerdict,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub role: Role,
    pub depth: usize,
    pub vertices: VertexSet,
    pub split: Option<NodeSplit>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionTree {
    n: usize,
    leaf_threshold: usize,
    nodes: Vec<TreeNode>,
    /// Internal node ids in processing order: `V_1, V_2, …`.
    internal: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeOptions {
    pub delta: f64,
    pub leaf_threshold: usize,
    pub floor_fraction: f64,
    pub seed: u64,
    pub regularity: RegularityConfig,
}

impl TreeOptions {
    pub fn new(n: usize, delta: f64) -> Self {
        TreeOptions {
            delta,
            leaf_threshold: default_leaf_threshold(n),
            floor_fraction: 0.1,
            seed: 0,
            regularity: RegularityConfig::default(),
        }
    }
}

/// `⌈√n⌉`, at least 2.
pub fn default_leaf_threshold(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r.max(2)
}

/// SplitMix64 finalizer, used to give each tree node its own seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits nodes of size `>= leaf_threshold` with [`ternary_partition`] in
/// breadth-first order until every unprocessed node is smaller.
pub fn build_tree(t: &Tournament, options: &TreeOptions) -> Result<DecompositionTree> {
    if options.leaf_threshold < 2 {
        return Err(Error::Config(format!(
            "leaf threshold must be at least 2, got {}",
            options.leaf_threshold
        )));
    }
    let mut nodes = vec![TreeNode {
        id: 0,
        parent: None,
        role: Role::Root,
        depth: 0,
        vertices: (1..=t.n()).collect(),
        split: None,
    }];
    let mut internal = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        if nodes[id].vertices.len() < options.leaf_threshold {
            continue;
        }
        let cfg = options.regularity.with_seed(derive_seed(options.seed, id as u64));
        let part = ternary_partition(t, &nodes[id].vertices, options.delta, options.floor_fraction, &cfg)
            .map_err(|e| Error::PartitionFailed {
                node: id,
                source: Box::new(e),
            })?;
        let depth = nodes[id].depth + 1;
        let mut children = Vec::with_capacity(3);
        for (role, vertices) in [(Role::L, &part.left), (Role::R, &part.right), (Role::W, &part.rest)] {
            if vertices.is_empty() {
                continue;
            }
            let child = nodes.len();
            nodes.push(TreeNode {
                id: child,
                parent: Some(id),
                role,
                depth,
                vertices: vertices.clone(),
                split: None,
            });
            children.push(child);
            queue.push_back(child);
        }
        nodes[id].split = Some(NodeSplit {
            children,
            left: part.left,
            right: part.right,
            arcs: part.arcs,
            density: part.density,
            verdict: part.verdict,
        });
        internal.push(id);
    }
    Ok(DecompositionTree {
        n: t.n(),
        leaf_threshold: options.leaf_threshold,
        nodes,
        internal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    /// `Λ = Σ_i |V_i|` over internal nodes.
    pub lambda: u64,
    /// Internal node count.
    pub m: usize,
    /// Leaf sizes in node-id order.
    pub leaf_sizes: Vec<usize>,
    pub max_depth: usize,
}

impl DecompositionTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn leaf_threshold(&self) -> usize {
        self.leaf_threshold
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Internal nodes in the order they were split.
    pub fn internal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.internal.iter().map(|&id| &self.nodes[id])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Statistics with `Λ` computed both as the internal-size sum and as
    /// the leaf size × depth sum; the two must agree.
    pub fn stats(&self) -> TreeStats {
        let by_internal: u64 = self.internal_nodes().map(|v| v.vertices.len() as u64).sum();
        let by_leaves: u64 = self
            .leaves()
            .map(|u| (u.vertices.len() * u.depth) as u64)
            .sum();
        assert_eq!(by_internal, by_leaves, "the two expressions for Λ disagree");
        TreeStats {
            lambda: by_internal,
            m: self.internal.len(),
            leaf_sizes: self.leaves().map(|u| u.vertices.len()).collect(),
            max_depth: self.nodes.iter().map(|u| u.depth).max().unwrap_or(0),
        }
    }

    /// Checks the structural invariants: children partition their parent,
    /// 2 or 3 children, size threshold, nesting of the `L ∪ R` spans, and
    /// pairwise disjoint arc sets.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentBlocks(msg));
        for node in &self.nodes {
            match &node.split {
                None => {
                    if node.vertices.len() >= self.leaf_threshold {
                        return bad(format!("leaf {} has size {} >= threshold", node.id, node.vertices.len()));
                    }
                }
                Some(split) => {
                    if node.vertices.len() < self.leaf_threshold {
                        return bad(format!("internal node {} is below threshold", node.id));
                    }
                    if !(2..=3).contains(&split.children.len()) {
                        return bad(format!("node {} has {} children", node.id, split.children.len()));
                    }
                    let mut union = VertexSet::new();
                    let mut total = 0;
                    for &c in &split.children {
                        union.extend(&self.nodes[c].vertices);
                        total += self.nodes[c].vertices.len();
                    }
                    if union != node.vertices || total != node.vertices.len() {
                        return bad(format!("children of node {} do not partition it", node.id));
                    }
                    if split.density * 2 < Density::from_integer(1) {
                        return bad(format!("node {} has density below 1/2", node.id));
                    }
                }
            }
        }
        if !self.nesting_holds() {
            return bad("L ∪ R spans are not nested".into());
        }
        if !self.arc_sets_disjoint() {
            return bad("arc sets S_i overlap".into());
        }
        Ok(())
    }

    /// For `i < j` in processing order, the spans `L_i ∪ R_i` and
    /// `L_j ∪ R_j` are disjoint or the latter sits inside `L_i` or `R_i`.
    pub fn nesting_holds(&self) -> bool {
        let splits: Vec<&NodeSplit> = self.internal_nodes().map(|v| v.split.as_ref().unwrap()).collect();
        for (i, a) in splits.iter().enumerate() {
            let span_a: VertexSet = a.left.union(&a.right).copied().collect();
            for b in &splits[i + 1..] {
                let span_b: VertexSet = b.left.union(&b.right).copied().collect();
                if span_a.is_disjoint(&span_b) {
                    continue;
                }
                if !(span_b.is_subset(&a.left) || span_b.is_subset(&a.right)) {
                    return false;
                }
            }
        }
        true
    }

    pub fn arc_sets_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.internal_nodes()
            .flat_map(|v| v.split.as_ref().unwrap().arcs.arcs().iter())
            .all(|&arc| seen.insert(arc))
    }

    /// The leaf sizes and depths as an instance of the leaf-depth
    /// inequality, with branching 3 and leaf cap `t̃ − 1`.
    pub fn lemma_instance(&self) -> TreeLemmaInstance {
        TreeLemmaInstance {
            s: self.n,
            branching: 3,
            t: self.leaf_threshold.saturating_sub(1).max(1),
            leaves: self.leaves().map(|u| (u.vertices.len(), u.depth)).collect(),
        }
    }

    /// One node per line: `id parent role vertices`, parent `-` for the
    /// root and vertices comma separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
            let vertices: Vec<String> = node.vertices.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{} {} {} {}", node.id, parent, node.role.tag(), vertices.join(",")).unwrap();
        }
        out
    }
}

/// `Λ >= ½·n·log₃ n`, decided exactly as `3^(2Λ) >= n^n`.
pub fn lambda_bound_holds(lambda: u64, n: usize) -> bool {
    if n <= 1 {
        return true;
    }
    let lhs = BigUint::from(3u32).pow((2 * lambda) as u32);
    let rhs = BigUint::from(n).pow(n as u32);
    lhs >= rhs
}

/// Leaf sizes and depths of a partition tree of an `s`-set whose internal
/// nodes have at most `branching` children and whose leaves have size at
/// most `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeLemmaInstance {
    pub s: usize,
    pub branching: usize,
    pub t: usize,
    /// `(u_i, d_i)`: leaf size and depth.
    pub leaves: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtreeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const LTREE_TOLERANCE: f64 = 1e-9;

/// `Σ u_i d_i` against `s·log_b(s/t)`.
pub fn check_ltree(instance: &TreeLemmaInstance) -> Result<LtreeCheck> {
    if instance.branching < 2 {
        return Err(Error::BranchingTooSmall(instance.branching));
    }
    let total: usize = instance.leaves.iter().map(|&(u, _)| u).sum();
    if total != instance.s {
        return Err(Error::SizeMismatch(format!("leaf sizes sum to {total}, not {}", instance.s)));
    }
    if let Some(&(u, _)) = instance.leaves.iter().find(|&&(u, _)| u > instance.t) {
        return Err(Error::SizeMismatch(format!("leaf of size {u} exceeds t = {}", instance.t)));
    }
    let lhs = instance.leaves.iter().map(|&(u, d)| (u * d) as f64).sum::<f64>();
    let s = instance.s as f64;
    let rhs = s * (s / instance.t as f64).ln() / (instance.branching as f64).ln();
    Ok(LtreeCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - LTREE_TOLERANCE,
    })
}

fn power_of_two_exponent(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// Position of the pair `(j, s)` in [`dyadic_decomposition`] order.
pub fn dyadic_index(j: u32, s: usize) -> usize {
    (1usize << (j - 1)) - 1 + (s - 1)
}

/// The `n − 1` pairs `(L, R)` of consecutive half-blocks at every scale,
/// ordered by level `j = 1..k` and then by `s = 1..2^(j−1)`. Their products
/// `L × R` partition `{(a, b) : a < b}`.
pub fn dyadic_decomposition(n: usize) -> Result<Vec<BipartitePair>> {
    let k = power_of_two_exponent(n)?;
    let mut pairs = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..=k {
        let width = n >> j;
        for s in 1..=(1usize << (j - 1)) {
            let start = (2 * s - 2) * width;
            let left: VertexSet = (start + 1..=start + width).collect();
            let right: VertexSet = (start + width + 1..=start + 2 * width).collect();
            pairs.push(BipartitePair::new(left, right)?);
        }
    }
    Ok(pairs)
}

/// The relative-position sets `Y_i` of `sigma` on every dyadic pair.
pub fn dyadic_blocks(sigma: &Permutation) -> Result<Vec<VertexSet>> {
    dyadic_decomposition(sigma.len())?
        .iter()
        .map(|pair| extract_relative_positions(sigma, pair))
        .collect()
}

/// Inverts [`dyadic_blocks`]: each `Y` splits the position interval of its
/// block into the positions of its left and right halves, top-down.
pub fn reconstruct_from_blocks(n: usize, blocks: &[VertexSet]) -> Result<Permutation> {
    power_of_two_exponent(n)?;
    if blocks.len() != n - 1 {
        return Err(Error::InconsistentBlocks(format!(
            "expected {} blocks, got {}",
            n - 1,
            blocks.len()
        )));
    }
    let mut images = vec![0usize; n];
    if n == 1 {
        images[0] = 1;
    } else {
        assign(1, n, (1..=n).collect(), 1, 1, blocks, &mut images)?;
    }
    Permutation::new(images)
}

fn assign(
    lo: Vertex,
    width: usize,
    positions: Vec<usize>,
    j: u32,
    s: usize,
    blocks: &[VertexSet],
    images: &mut [usize],
) -> Result<()> {
    if width == 1 {
        images[lo - 1] = positions[0];
        return Ok(());
    }
    let half = width / 2;
    let y = &blocks[dyadic_index(j, s)];
    if y.len() != half || y.iter().any(|&r| r == 0 || r > width) {
        return Err(Error::InconsistentBlocks(format!(
            "block ({j}, {s}) must be a {half}-subset of [1, {width}], got {y:?}"
        )));
    }
    let (right, left): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
        positions.into_iter().enumerate().partition(|(rank, _)| y.contains(&(rank + 1)));
    let strip = |v: Vec<(usize, usize)>| v.into_iter().map(|(_, p)| p).collect::<Vec<_>>();
    assign(lo, half, strip(left), j + 1, 2 * s - 1, blocks, images)?;
    assign(lo + half, half, strip(right), j + 1, 2 * s, blocks, images)
}
