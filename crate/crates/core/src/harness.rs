//! Run configuration, the replay of the general entropy argument and of the
//! transitive pipeline on explicit distributions, and report export.
//!
//! Reports are a flat list of tagged records. Exports never contain
//! timing, so equal configurations give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decomposition::{
    build_tree, check_ltree, default_leaf_threshold, derive_seed, lambda_bound_holds, reconstruct_from_blocks,
    dyadic_blocks, DecompositionTree, TreeOptions,
};
use crate::entropy::{compensated_sum, mpc_check, mpc_check_with_tolerance, MpcReport, PermDistribution, SubsetDistribution};
use crate::error::{Error, Result};
use crate::maxent::{
    log2_factorial, solve_maxent, verify_bounds, ArcConstraintSystem, ArcRecord, BoundConstants, SolveStatus,
};
use crate::safety::{unsafe_prob_bound, unsafe_prob_monte_carlo, SafetyParams, SafetyTable};
use crate::tournament::{fit, BipartitePair, Permutation, Tournament};

pub const SCHEMA: &str = "ranklab-report/1";

/// Largest `n` for which distributions over all `n!` orders are handled.
pub const MAX_EXPLICIT_N: usize = 8;

/// Largest internal-node count for which every index family is enumerated.
const MAX_FAMILY_NODES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Replay,
    Transitive,
    Mpc,
    Maxent,
    Decompose,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay" => Ok(Mode::Replay),
            "transitive" => Ok(Mode::Transitive),
            "mpc" => Ok(Mode::Mpc),
            "maxent" => Ok(Mode::Maxent),
            "decompose" => Ok(Mode::Decompose),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown format {s:?}, expected jsonl or csv"))),
        }
    }
}

/// Where the tournament comes from: `transitive:N`, `random:N` (seeded by
/// the run seed), `rotational:N`, or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TournamentSource {
    Transitive(usize),
    Random(usize),
    Rotational(usize),
    File(String),
}

impl TournamentSource {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, TournamentSource::Random(_))
    }

    pub fn load(&self, seed: Option<u64>) -> Result<Tournament> {
        match self {
            TournamentSource::Transitive(n) => Ok(Tournament::transitive(*n)),
            TournamentSource::Random(n) => {
                let seed = seed.ok_or_else(|| Error::Config("random tournaments need a seed".into()))?;
                Ok(Tournament::random(*n, seed))
            }
            TournamentSource::Rotational(n) => Ok(Tournament::rotational(*n)),
            TournamentSource::File(path) => Tournament::parse(&std::fs::read_to_string(path)?),
        }
    }
}

impl FromStr for TournamentSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("tournament source {s:?} is not kind:arg")))?;
        let size = || {
            arg.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad tournament size {arg:?}")))
        };
        match kind {
            "transitive" => Ok(TournamentSource::Transitive(size()?)),
            "random" => Ok(TournamentSource::Random(size()?)),
            "rotational" => Ok(TournamentSource::Rotational(size()?)),
            "file" => Ok(TournamentSource::File(arg.to_string())),
            _ => Err(Error::Config(format!("unknown tournament kind {kind:?}"))),
        }
    }
}

impl std::fmt::Display for TournamentSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TournamentSource::Transitive(n) => write!(f, "transitive:{n}"),
            TournamentSource::Random(n) => write!(f, "random:{n}"),
            TournamentSource::Rotational(n) => write!(f, "rotational:{n}"),
            TournamentSource::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl TryFrom<String> for TournamentSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TournamentSource> for String {
    fn from(s: TournamentSource) -> String {
        s.to_string()
    }
}

/// The explicit distribution over orders: `maxent`, `uniform`,
/// `identity` or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistributionSource {
    Maxent,
    Uniform,
    Identity,
    File(String),
}

impl FromStr for DistributionSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxent" => Ok(DistributionSource::Maxent),
            "uniform" => Ok(DistributionSource::Uniform),
            "identity" => Ok(DistributionSource::Identity),
            _ => match s.strip_prefix("file:") {
                Some(p) => Ok(DistributionSource::File(p.to_string())),
                None => Err(Error::Config(format!("unknown distribution {s:?}"))),
            },
        }
    }
}

impl std::fmt::Display for DistributionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistributionSource::Maxent => write!(f, "maxent"),
            DistributionSource::Uniform => write!(f, "uniform"),
            DistributionSource::Identity => write!(f, "identity"),
            DistributionSource::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl TryFrom<String> for DistributionSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSource> for String {
    fn from(s: DistributionSource) -> String {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub tournament: TournamentSource,
    pub distribution: DistributionSource,
    pub epsilon: f64,
    /// Regularity parameter; `0.03·ε` when unset.
    pub delta: Option<f64>,
    /// `⌈√n⌉` when unset.
    pub leaf_threshold: Option<usize>,
    pub floor_fraction: f64,
    pub margin: f64,
    pub samples: usize,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Subset-distribution file for the `mpc` mode.
    pub input: Option<String>,
    /// Half-size of the generated subset distribution in the `mpc` mode.
    pub m: Option<usize>,
}

impl RunConfig {
    pub fn new(mode: Mode, tournament: TournamentSource) -> Self {
        RunConfig {
            mode,
            tournament,
            distribution: DistributionSource::Maxent,
            epsilon: 0.2,
            delta: None,
            leaf_threshold: None,
            floor_fraction: 0.1,
            margin: 0.0,
            samples: 10_000,
            seed: None,
            tolerance: 1e-8,
            max_iterations: 20_000,
            input: None,
            m: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_distribution(mut self, distribution: DistributionSource) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.03 * self.epsilon)
    }

    /// Applies one `key = value` setting; keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key.as_str() {
            "mode" => self.mode = value.parse()?,
            "tournament" => self.tournament = value.parse()?,
            "distribution" => self.distribution = value.parse()?,
            "epsilon" => self.epsilon = num(&key, value)?,
            "delta" => self.delta = Some(num(&key, value)?),
            "leaf-threshold" => self.leaf_threshold = Some(num(&key, value)?),
            "floor-fraction" => self.floor_fraction = num(&key, value)?,
            "margin" => self.margin = num(&key, value)?,
            "samples" => self.samples = num(&key, value)?,
            "seed" => self.seed = Some(num(&key, value)?),
            "tolerance" => self.tolerance = num(&key, value)?,
            "max-iterations" => self.max_iterations = num(&key, value)?,
            "input" => self.input = Some(value.to_string()),
            "m" => self.m = Some(num(&key, value)?),
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment. Returns the
    /// settings this struct does not hold (such as `out` and `format`) for
    /// the caller.
    pub fn apply_file(&mut self, text: &str) -> Result<BTreeMap<String, String>> {
        let mut extra = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected key = value"))?;
            let key = k.trim().replace('_', "-");
            if matches!(key.as_str(), "out" | "format") {
                extra.insert(key, v.trim().to_string());
            } else {
                self.set(&key, v)?;
            }
        }
        Ok(extra)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if !(0.0..=0.5).contains(&self.floor_fraction) {
            return Err(Error::Config(format!(
                "floor fraction must lie in [0, 1/2], got {}",
                self.floor_fraction
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1e-2) {
            return Err(Error::Config(format!("tolerance must lie in (0, 0.01), got {}", self.tolerance)));
        }
        if self.margin < 0.0 {
            return Err(Error::Config("margin must be non-negative".into()));
        }
        let stochastic = self.tournament.is_stochastic() || (self.mode == Mode::Replay && self.samples > 0) || (self.mode == Mode::Mpc && self.input.is_none());
        if stochastic && self.seed.is_none() {
            return Err(Error::Config("this run is stochastic and needs --seed".into()));
        }
        Ok(())
    }
}

/// A value with its provenance: exact enumeration or a Monte Carlo
/// estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub exact: bool,
}

impl Measured {
    fn exact(value: f64, states: u64) -> Self {
        Measured {
            value,
            stderr: 0.0,
            samples: states,
            exact: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentRecord {
    pub n: usize,
    pub arcs: usize,
    pub transitive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionRecord {
    pub source: String,
    pub support: usize,
    pub entropy: f64,
    pub log_factorial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisRecord {
    pub target: f64,
    pub min_arc_probability: f64,
    pub strict: bool,
    /// Holds on the closure, up to the run tolerance.
    pub closure: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverRecord {
    pub status: SolveStatus,
    pub feasible: bool,
    pub iterations: usize,
    pub entropy: f64,
    pub dual: f64,
    pub arcs: Vec<ArcRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeRecord {
    pub n: usize,
    pub delta: f64,
    pub leaf_threshold: usize,
    pub lambda: u64,
    pub internal_nodes: usize,
    pub max_depth: usize,
    pub max_leaf: usize,
    pub lambda_lower_bound: f64,
    pub ltree_lhs: f64,
    pub ltree_rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    /// Position in processing order, starting at 1.
    pub index: usize,
    pub node: usize,
    pub depth: usize,
    pub size: usize,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub arcs: usize,
    pub density: String,
    pub regular: bool,
    pub regularity_mode: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEventRecord {
    pub index: usize,
    pub expected_fit: f64,
    /// `2ε|S_i|`
    pub expected_fit_floor: f64,
    pub pr_a: Measured,
    /// `(Pr(A_i) + ε)|S_i|`, recomputed from `Pr(A_i)`.
    pub markov_ceiling: f64,
    pub mu_a: Measured,
    pub mu_b: Measured,
    pub mu_b_monte_carlo: Option<Measured>,
    /// `2r·exp(−2ζ²l/λ)`
    pub interval_bound: f64,
    pub interval_bound_vacuous: bool,
    /// `exp(−b|V_i|)`
    pub node_bound: f64,
    pub node_bound_vacuous: bool,
    pub contained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiRecord {
    pub lambda: u64,
    pub expected_xi: f64,
    pub max_xi: u64,
    pub pr_q: f64,
    pub mu_q: f64,
    pub q_size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndependenceRecord {
    pub i: usize,
    pub j: usize,
    pub joint: f64,
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRecord {
    pub members: Vec<usize>,
    pub weight: u64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub product_mu_b: f64,
    /// `exp(−bεΛ/2)`
    pub bound: f64,
    pub vacuous: bool,
}

/// One inequality `value <= limit`; `vacuous` when the limit carries no
/// information at this size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRecord {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
    pub vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockRecord {
    pub index: usize,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub report: MpcReport,
}

/// A plot-ready sample: analytic bound against an empirical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesRecord {
    pub series: String,
    pub x: f64,
    pub bound: f64,
    pub empirical: Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// False when a premise failed and the check was not required.
    pub applicable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Header(Header),
    Tournament(TournamentRecord),
    Distribution(DistributionRecord),
    Hypothesis(HypothesisRecord),
    Solver(SolverRecord),
    Tree(TreeRecord),
    Node(NodeRecord),
    NodeEvents(NodeEventRecord),
    Xi(XiRecord),
    Independence(IndependenceRecord),
    Family(FamilyRecord),
    Bound(BoundRecord),
    Block(BlockRecord),
    Series(SeriesRecord),
    Check(CheckRecord),
}

impl Record {
    fn kind(&self) -> &'static str {
        match self {
            Record::Header(_) => "header",
            Record::Tournament(_) => "tournament",
            Record::Distribution(_) => "distribution",
            Record::Hypothesis(_) => "hypothesis",
            Record::Solver(_) => "solver",
            Record::Tree(_) => "tree",
            Record::Node(_) => "node",
            Record::NodeEvents(_) => "node_events",
            Record::Xi(_) => "xi",
            Record::Independence(_) => "independence",
            Record::Family(_) => "family",
            Record::Bound(_) => "bound",
            Record::Block(_) => "block",
            Record::Series(_) => "series",
            Record::Check(_) => "check",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub records: Vec<Record>,
}

impl RunReport {
    fn new(config: &RunConfig) -> Self {
        RunReport {
            records: vec![Record::Header(Header {
                schema: SCHEMA.to_string(),
                config: config.clone(),
            })],
        }
    }

    fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, applicable: bool) {
        self.push(Record::Check(CheckRecord {
            name: name.into(),
            passed: passed || !applicable,
            applicable,
        }));
    }

    fn bound(&mut self, name: impl Into<String>, value: f64, limit: f64, vacuous: bool, tolerance: f64) {
        self.push(Record::Bound(BoundRecord {
            name: name.into(),
            value,
            limit,
            holds: value <= limit + tolerance,
            vacuous,
        }));
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Check(c) => Some(c),
            _ => None,
        })
    }

    pub fn bounds(&self) -> impl Iterator<Item = &BoundRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Bound(b) => Some(b),
            _ => None,
        })
    }

    pub fn find_check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks().find(|c| c.name == name)
    }

    /// Every applicable check passed and every bound line holds.
    pub fn all_passed(&self) -> bool {
        self.checks().all(|c| c.passed) && self.bounds().all(|b| b.holds)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.checks().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        out.extend(self.bounds().filter(|b| !b.holds).map(|b| format!("bound {}", b.name)));
        out
    }

    /// A human-readable summary: bound lines carry a `VACUOUS` tag when
    /// their limit says nothing at this size.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                Record::Bound(b) => {
                    let tag = if b.vacuous { " VACUOUS" } else { "" };
                    let verdict = if b.holds { "ok" } else { "VIOLATED" };
                    writeln!(out, "bound {}: {:.6} <= {:.6} {verdict}{tag}", b.name, b.value, b.limit).unwrap();
                }
                Record::Check(c) => {
                    let verdict = match (c.applicable, c.passed) {
                        (false, _) => "n/a",
                        (true, true) => "ok",
                        (true, false) => "FAILED",
                    };
                    writeln!(out, "check {}: {verdict}", c.name).unwrap();
                }
                _ => {}
            }
        }
        out
    }
}

fn density_string(d: &crate::tournament::Density) -> String {
    format!("{}/{}", d.numer(), d.denom())
}

/// Loads the tournament and the explicit distribution named by `config`.
pub fn load_inputs(config: &RunConfig) -> Result<(Tournament, PermDistribution, Option<SolverRecord>)> {
    let t = config.tournament.load(config.seed)?;
    let n = t.n();
    if n > MAX_EXPLICIT_N {
        return Err(Error::TooLarge { n, cap: MAX_EXPLICIT_N });
    }
    match &config.distribution {
        DistributionSource::Uniform => Ok((t, PermDistribution::uniform(n), None)),
        DistributionSource::Identity => Ok((t, PermDistribution::point_mass(Permutation::identity(n)), None)),
        DistributionSource::File(path) => {
            let d = PermDistribution::parse(&std::fs::read_to_string(path)?)?;
            if d.n() != n {
                return Err(Error::SizeMismatch(format!("distribution on {} points, tournament on {n}", d.n())));
            }
            Ok((t, d, None))
        }
        DistributionSource::Maxent => {
            let system = ArcConstraintSystem::new(t.clone(), config.epsilon, config.margin)?;
            let sol = solve_maxent(&system, config.tolerance, config.max_iterations)?;
            if !sol.feasible {
                return Err(Error::Infeasible(format!("{:?}", sol.status)));
            }
            let record = solver_record(&sol);
            Ok((t, sol.distribution, Some(record)))
        }
    }
}

fn solver_record(sol: &crate::maxent::MaxentSolution) -> SolverRecord {
    SolverRecord {
        status: sol.status.clone(),
        feasible: sol.feasible,
        iterations: sol.iterations,
        entropy: sol.entropy_bits,
        dual: sol.dual_bits,
        arcs: sol.arcs.clone(),
    }
}

fn hypothesis_record(t: &Tournament, dist: &PermDistribution, config: &RunConfig) -> HypothesisRecord {
    let target = 0.5 + config.epsilon;
    let min_arc_probability = t
        .arcs()
        .map(|(u, v)| dist.arc_probability(u, v))
        .fold(1.0, f64::min);
    HypothesisRecord {
        target,
        min_arc_probability,
        strict: min_arc_probability > target,
        closure: min_arc_probability >= target - config.tolerance,
    }
}

fn tree_options(config: &RunConfig, n: usize) -> TreeOptions {
    let mut options = TreeOptions::new(n, config.delta());
    options.leaf_threshold = config.leaf_threshold.unwrap_or_else(|| default_leaf_threshold(n));
    options.floor_fraction = config.floor_fraction;
    options.seed = config.seed.unwrap_or(0);
    options.regularity.seed = options.seed;
    options
}

fn tree_record(tree: &DecompositionTree, delta: f64) -> Result<TreeRecord> {
    let stats = tree.stats();
    let ltree = check_ltree(&tree.lemma_instance())?;
    let n = tree.n();
    Ok(TreeRecord {
        n,
        delta,
        leaf_threshold: tree.leaf_threshold(),
        lambda: stats.lambda,
        internal_nodes: stats.m,
        max_depth: stats.max_depth,
        max_leaf: stats.leaf_sizes.iter().copied().max().unwrap_or(0),
        lambda_lower_bound: if n > 1 { 0.5 * n as f64 * (n as f64).ln() / 3f64.ln() } else { 0.0 },
        ltree_lhs: ltree.lhs,
        ltree_rhs: ltree.rhs,
    })
}

/// Records the structural lemmas of a built tree.
fn tree_checks(report: &mut RunReport, tree: &DecompositionTree, record: &TreeRecord) {
    let n = tree.n();
    report.check("tree.valid", tree.validate().is_ok(), true);
    report.check("tree.internal_below_n", record.internal_nodes < n, n > 1);
    report.check("tree.leaves_below_threshold", record.max_leaf < tree.leaf_threshold(), true);
    report.check("tree.lambda_bound", lambda_bound_holds(record.lambda, n), true);
    report.check("tree.nesting", tree.nesting_holds(), true);
    report.check("tree.disjoint_arcs", tree.arc_sets_disjoint(), true);
    report.check("tree.ltree", record.ltree_lhs >= record.ltree_rhs - crate::decomposition::LTREE_TOLERANCE, true);
}

/// Builds and checks the decomposition tree of the configured tournament.
pub fn decompose(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let t = config.tournament.load(config.seed)?;
    let mut report = RunReport::new(config);
    report.push(Record::Tournament(TournamentRecord {
        n: t.n(),
        arcs: t.arc_count(),
        transitive: t.is_transitive(),
    }));
    let options = tree_options(config, t.n());
    let tree = build_tree(&t, &options)?;
    let record = tree_record(&tree, options.delta)?;
    report.push(Record::Tree(record.clone()));
    push_nodes(&mut report, &tree);
    tree_checks(&mut report, &tree, &record);
    Ok(report)
}

fn push_nodes(report: &mut RunReport, tree: &DecompositionTree) {
    for (index, node) in tree.internal_nodes().enumerate() {
        let split = node.split.as_ref().expect("internal node");
        report.push(Record::Node(NodeRecord {
            index: index + 1,
            node: node.id,
            depth: node.depth,
            size: node.vertices.len(),
            left: split.left.iter().copied().collect(),
            right: split.right.iter().copied().collect(),
            arcs: split.arcs.len(),
            density: density_string(&split.density),
            regular: split.verdict.regular,
            regularity_mode: format!("{:?}", split.verdict.mode).to_lowercase(),
        }));
    }
}

/// Solves the max-entropy program and reports the bound comparison.
pub fn maxent_report(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let t = config.tournament.load(config.seed)?;
    let mut report = RunReport::new(config);
    report.push(Record::Tournament(TournamentRecord {
        n: t.n(),
        arcs: t.arc_count(),
        transitive: t.is_transitive(),
    }));
    let system = ArcConstraintSystem::new(t, config.epsilon, config.margin)?;
    let sol = solve_maxent(&system, config.tolerance, config.max_iterations)?;
    report.push(Record::Solver(solver_record(&sol)));
    if !sol.feasible {
        return Ok(report);
    }
    let bounds = verify_bounds(&sol, &BoundConstants::new(config.epsilon, config.floor_fraction));
    let tol = 1e-9;
    report.bound("entropy_vs_log_factorial", bounds.entropy, bounds.log_factorial, true, tol);
    report.bound("general_theorem", bounds.entropy, bounds.general_bound, bounds.general_vacuous, tol);
    if bounds.transitive_holds.is_some() {
        let vacuous = bounds.transitive_bound >= bounds.log_factorial;
        report.bound("transitive_theorem", bounds.entropy, bounds.transitive_bound, vacuous, tol);
    }
    report.push(Record::Series(SeriesRecord {
        series: "ceiling_one_minus_two_eps".into(),
        x: config.epsilon,
        bound: bounds.ceiling,
        empirical: Measured::exact(bounds.entropy, sol.distribution.iter().count() as u64),
    }));
    report.check("solver.converged", sol.status == SolveStatus::Converged, true);
    Ok(report)
}

/// Loads a subset distribution (or generates a seeded tilted one) and runs
/// the crossing-count entropy checks.
pub fn mpc_report(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let dist = match &config.input {
        Some(path) => SubsetDistribution::parse(&std::fs::read_to_string(path)?)?,
        None => {
            let m = config.m.ok_or_else(|| Error::Config("mpc needs --input or --m".into()))?;
            tilted_subset_distribution(m, 1.0, config.seed.expect("validated"))?
        }
    };
    let mut report = RunReport::new(config);
    let r = mpc_check(&dist, config.epsilon);
    push_mpc_checks(&mut report, &r, "mpc");
    report.push(Record::Block(BlockRecord {
        index: 1,
        left: vec![],
        right: vec![],
        report: r,
    }));
    Ok(report)
}

fn push_mpc_checks(report: &mut RunReport, r: &MpcReport, prefix: &str) {
    let applicable = r.chain.is_some();
    let chain = r.chain.unwrap_or(crate::entropy::MpcChain {
        weighted_sum: false,
        positive_mass: false,
        cauchy_schwarz: false,
        subadditivity: false,
        quadratic: false,
        target: false,
        conclusion: false,
    });
    report.check(format!("{prefix}.hypothesis"), r.hypothesis, true);
    report.check(format!("{prefix}.cauchy_schwarz"), chain.cauchy_schwarz, applicable);
    report.check(format!("{prefix}.subadditivity"), chain.subadditivity, applicable);
    report.check(format!("{prefix}.quadratic"), chain.quadratic, applicable);
    report.check(format!("{prefix}.entropy_bound"), chain.conclusion, applicable);
}

/// A seeded distribution on `m`-subsets of `[2m]` tilted toward large
/// crossing counts: `p(Y) ∝ exp(strength·(f(Y) + noise))`.
pub fn tilted_subset_distribution(m: usize, strength: f64, seed: u64) -> Result<SubsetDistribution> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let subsets = crate::entropy::all_m_subsets(m);
    let logits: Vec<f64> = subsets
        .iter()
        .map(|y| {
            let f = crate::entropy::crossing_count(y, m).expect("m-subset") as f64;
            strength * (f + rng.random_range(-1.0..1.0))
        })
        .collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z = compensated_sum(weights.iter().copied());
    SubsetDistribution::new(m, subsets.into_iter().zip(weights.into_iter().map(|w| w / z)))
}

/// Replays the general entropy argument on the configured tournament and
/// distribution.
pub fn replay_proof_chain(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let (t, dist, solver) = load_inputs(config)?;
    replay_distribution(&t, &dist, solver, config)
}

/// Replay on an explicit `(T, ℙ)`; every probability over `𝔖_n` is an
/// exact sum.
pub fn replay_distribution(
    t: &Tournament,
    dist: &PermDistribution,
    solver: Option<SolverRecord>,
    config: &RunConfig,
) -> Result<RunReport> {
    let n = t.n();
    if n > MAX_EXPLICIT_N || dist.n() != n {
        return Err(Error::SizeMismatch(format!("replay needs n <= {MAX_EXPLICIT_N} and matching sizes")));
    }
    let eps = config.epsilon;
    let tol = config.tolerance;
    let mut report = RunReport::new(config);
    report.push(Record::Tournament(TournamentRecord {
        n,
        arcs: t.arc_count(),
        transitive: t.is_transitive(),
    }));
    if let Some(s) = solver {
        report.push(Record::Solver(s));
    }
    let h = dist.entropy();
    let log_fact = log2_factorial(n);
    report.push(Record::Distribution(DistributionRecord {
        source: config.distribution.to_string(),
        support: dist.iter().count(),
        entropy: h,
        log_factorial: log_fact,
    }));
    let hyp = hypothesis_record(t, dist, config);
    let hypothesis = hyp.closure;
    report.push(Record::Hypothesis(hyp));
    report.check("hypothesis", hypothesis, true);

    let options = tree_options(config, n);
    let tree = build_tree(t, &options)?;
    let tree_rec = tree_record(&tree, options.delta)?;
    let lambda = tree_rec.lambda;
    report.push(Record::Tree(tree_rec.clone()));
    tree_checks(&mut report, &tree, &tree_rec);
    push_nodes(&mut report, &tree);

    let constants = BoundConstants::new(eps, config.floor_fraction);
    let all: Vec<Permutation> = Permutation::all(n).collect();
    let states = all.len() as u64;
    let probs: Vec<f64> = all.iter().map(|s| dist.probability(s)).collect();

    // Per internal node: membership of every order in A_i and B_i.
    let mut in_a: Vec<Vec<bool>> = Vec::new();
    let mut in_b: Vec<Vec<bool>> = Vec::new();
    let mut sizes: Vec<u64> = Vec::new();
    let mut seed_index = 0u64;
    for (idx, node) in tree.internal_nodes().enumerate() {
        let index = idx + 1;
        let split = node.split.as_ref().expect("internal node");
        let s_len = split.arcs.len() as f64;
        let pair = BipartitePair::new(split.left.clone(), split.right.clone())?;
        let fits: Vec<i64> = all.iter().map(|s| fit(s, &split.arcs)).collect::<Result<_>>()?;
        let a_members: Vec<bool> = fits.iter().map(|&f| f as f64 >= eps * s_len).collect();
        let table = SafetyTable::new(&split.arcs, &pair, eps)?;
        let b_members: Vec<bool> = all.iter().map(|s| !table.is_safe_permutation(s)).collect();

        let expected_fit = compensated_sum(probs.iter().zip(&fits).map(|(p, &f)| p * f as f64));
        let pr_a = prob_of(&probs, &a_members);
        let markov_ceiling = (pr_a + eps) * s_len;
        let mu_a = a_members.iter().filter(|&&x| x).count() as f64 / states as f64;
        let mu_b = b_members.iter().filter(|&&x| x).count() as f64 / states as f64;
        let contained = a_members.iter().zip(&b_members).all(|(&a, &b)| !a || b);

        let mu_b_mc = if config.samples > 0 {
            seed_index += 1;
            let est = unsafe_prob_monte_carlo(
                &split.arcs,
                &pair,
                eps,
                n,
                config.samples,
                derive_seed(config.seed.unwrap_or(0), seed_index),
            )?;
            Some(Measured {
                value: est.estimate,
                stderr: est.stderr,
                samples: est.samples as u64,
                exact: false,
            })
        } else {
            None
        };

        let params = SafetyParams::new(pair.left().len(), pair.right().len(), config.delta(), eps)?;
        let interval_bound = unsafe_prob_bound(&params);
        let node_bound = (-constants.b * node.vertices.len() as f64).exp();

        report.check(format!("node{index}.expected_fit"), expected_fit >= 2.0 * eps * s_len - 2.0 * s_len * tol, hypothesis);
        report.check(format!("node{index}.markov_step"), expected_fit <= markov_ceiling + tol, true);
        report.check(format!("node{index}.pr_a"), pr_a >= eps - 2.0 * tol, hypothesis);
        report.check(format!("node{index}.a_within_b"), contained, true);
        if let Some(mc) = &mu_b_mc {
            let sd = (mu_b * (1.0 - mu_b) / mc.samples as f64).sqrt();
            report.check(format!("node{index}.mu_b_monte_carlo"), (mc.value - mu_b).abs() <= 4.0 * sd + 1e-12, true);
            report.push(Record::Series(SeriesRecord {
                series: "unsafe_probability_vs_l".into(),
                x: params.l as f64,
                bound: interval_bound,
                empirical: *mc,
            }));
        }
        report.bound(format!("node{index}.interval_bound"), mu_b, interval_bound, interval_bound >= 1.0, 0.0);
        report.bound(format!("node{index}.node_bound"), mu_b, node_bound, node_bound >= 1.0, 0.0);

        report.push(Record::NodeEvents(NodeEventRecord {
            index,
            expected_fit,
            expected_fit_floor: 2.0 * eps * s_len,
            pr_a: Measured::exact(pr_a, states),
            markov_ceiling,
            mu_a: Measured::exact(mu_a, states),
            mu_b: Measured::exact(mu_b, states),
            mu_b_monte_carlo: mu_b_mc,
            interval_bound,
            interval_bound_vacuous: interval_bound >= 1.0,
            node_bound,
            node_bound_vacuous: node_bound >= 1.0,
            contained,
        }));
        in_a.push(a_members);
        in_b.push(b_members);
        sizes.push(node.vertices.len() as u64);
    }

    // ξ = Σ |V_i|·1[A_i] and Q = {ξ >= εΛ/2}.
    let xi: Vec<u64> = (0..all.len())
        .map(|s| (0..sizes.len()).filter(|&i| in_a[i][s]).map(|i| sizes[i]).sum())
        .collect();
    let expected_xi = compensated_sum(probs.iter().zip(&xi).map(|(p, &x)| p * x as f64));
    let q_threshold = eps * lambda as f64 / 2.0;
    let in_q: Vec<bool> = xi.iter().map(|&x| x as f64 >= q_threshold).collect();
    let pr_q = prob_of(&probs, &in_q);
    let q_size = in_q.iter().filter(|&&x| x).count() as u64;
    let mu_q = q_size as f64 / states as f64;
    let max_xi = xi.iter().copied().max().unwrap_or(0);
    report.push(Record::Xi(XiRecord {
        lambda,
        expected_xi,
        max_xi,
        pr_q,
        mu_q,
        q_size,
    }));
    let nodes_ok = report
        .checks()
        .filter(|c| c.name.ends_with(".pr_a"))
        .all(|c| c.passed && c.applicable);
    report.check("xi.at_most_lambda", max_xi <= lambda, true);
    report.check("xi.expectation", expected_xi >= eps * lambda as f64 - 2.0 * tol * lambda as f64, nodes_ok);
    report.check("q.probability", pr_q >= eps / 2.0 - tol, nodes_ok);

    // Entropy accounting for a random order conditioned on Q.
    let q_log = if q_size > 0 { (q_size as f64).log2() } else { 0.0 };
    let rhs_exact = 1.0 + (1.0 - pr_q) * log_fact + pr_q * q_log;
    report.bound("entropy_split_on_q", h, rhs_exact, rhs_exact >= log_fact, 1e-9);
    if q_size > 0 && pr_q >= eps / 2.0 {
        let rhs_eps = 1.0 + log_fact + (eps / 2.0) * mu_q.log2();
        report.bound("entropy_split_relaxed", rhs_exact, rhs_eps, rhs_eps >= log_fact, 1e-9);
    }

    // Exact independence of the B_i under the uniform measure.
    let mu_b: Vec<f64> = in_b.iter().map(|b| b.iter().filter(|&&x| x).count() as f64 / states as f64).collect();
    let mut independent = true;
    for i in 0..in_b.len() {
        for j in i + 1..in_b.len() {
            let joint = (0..all.len()).filter(|&s| in_b[i][s] && in_b[j][s]).count() as f64 / states as f64;
            let product = mu_b[i] * mu_b[j];
            independent &= (joint - product).abs() <= 1e-12;
            report.push(Record::Independence(IndependenceRecord {
                i: i + 1,
                j: j + 1,
                joint,
                product,
            }));
        }
    }
    report.check("b.pairwise_independent", independent, true);

    if sizes.len() <= MAX_FAMILY_NODES {
        let bound = (-constants.b * eps * lambda as f64 / 2.0).exp();
        let mut families_ok = true;
        for mask in 1u32..(1 << sizes.len()) {
            let members: Vec<usize> = (0..sizes.len()).filter(|i| mask >> i & 1 == 1).collect();
            let weight: u64 = members.iter().map(|&i| sizes[i]).sum();
            if (weight as f64) < q_threshold {
                continue;
            }
            let count = |sets: &[Vec<bool>]| {
                (0..all.len()).filter(|&s| members.iter().all(|&i| sets[i][s])).count() as f64 / states as f64
            };
            let mu_a_family = count(&in_a);
            let mu_b_family = count(&in_b);
            let product: f64 = members.iter().map(|&i| mu_b[i]).product();
            families_ok &= mu_a_family <= mu_b_family + 1e-12 && (mu_b_family - product).abs() <= 1e-12;
            report.push(Record::Family(FamilyRecord {
                members: members.iter().map(|i| i + 1).collect(),
                weight,
                mu_a: mu_a_family,
                mu_b: mu_b_family,
                product_mu_b: product,
                bound,
                vacuous: bound >= 1.0,
            }));
            report.bound(
                format!("family{mask}.intersection"),
                mu_a_family,
                bound,
                bound >= 1.0,
                0.0,
            );
        }
        report.check("families.independent_and_contained", families_ok, true);
    }

    let general = (1.0 - constants.theta) * log_fact;
    report.bound("general_theorem", h, general, general > log_fact - 1.0, 1e-9);
    if t.is_transitive() && n > 1 {
        let transitive = (1.0 - eps * eps / 8.0) * n as f64 * (n as f64).log2();
        report.bound("transitive_theorem", h, transitive, transitive >= log_fact, 1e-9);
    }
    Ok(report)
}

fn prob_of(probs: &[f64], members: &[bool]) -> f64 {
    compensated_sum(probs.iter().zip(members).filter(|(_, &m)| m).map(|(&p, _)| p))
}

/// Runs the dyadic-block pipeline on the configured distribution, which
/// must live on `[1, n]` with `n` a power of two.
pub fn transitive_pipeline(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let n = match config.tournament {
        TournamentSource::Transitive(n) => n,
        _ => return Err(Error::Config("the transitive pipeline needs tournament = transitive:N".into())),
    };
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let (_, dist, solver) = load_inputs(config)?;
    transitive_distribution(&dist, solver, config)
}

pub fn transitive_distribution(
    dist: &PermDistribution,
    solver: Option<SolverRecord>,
    config: &RunConfig,
) -> Result<RunReport> {
    let n = dist.n();
    let pairs = crate::decomposition::dyadic_decomposition(n)?;
    let eps = config.epsilon;
    let mut report = RunReport::new(config);
    if let Some(s) = solver {
        report.push(Record::Solver(s));
    }
    let h = dist.entropy();
    let log_fact = log2_factorial(n);
    report.push(Record::Distribution(DistributionRecord {
        source: config.distribution.to_string(),
        support: dist.iter().count(),
        entropy: h,
        log_factorial: log_fact,
    }));
    let t = Tournament::transitive(n);
    let hyp = hypothesis_record(&t, dist, config);
    report.check("hypothesis", hyp.closure, true);
    report.push(Record::Hypothesis(hyp));

    let injective = dist
        .iter()
        .all(|(s, _)| dyadic_blocks(s).and_then(|b| reconstruct_from_blocks(n, &b)).is_ok_and(|r| &r == s));
    report.check("blocks.determine_order", injective, true);

    let mut block_entropy = Vec::with_capacity(pairs.len());
    let mut total_2m = 0usize;
    for (i, pair) in pairs.iter().enumerate() {
        let y = dist.induced_subsets(pair)?;
        // Each of the m² arc probabilities behind E f may miss its target
        // by the solver tolerance.
        let r = mpc_check_with_tolerance(&y, eps, config.tolerance * (y.m() * y.m()) as f64);
        block_entropy.push(r.entropy);
        total_2m += 2 * r.m;
        push_mpc_checks(&mut report, &r, &format!("block{}", i + 1));
        report.push(Record::Block(BlockRecord {
            index: i + 1,
            left: pair.left().iter().copied().collect(),
            right: pair.right().iter().copied().collect(),
            report: r,
        }));
    }
    let sum_h = compensated_sum(block_entropy.iter().copied());
    let factor = 1.0 - eps * eps / 8.0;
    report.check("blocks.size_sum", total_2m as f64 == n as f64 * (n as f64).log2(), n > 1);
    report.bound("order_vs_blocks", h, sum_h, false, 1e-9);
    report.bound("blocks_vs_sizes", sum_h, factor * total_2m as f64, factor * total_2m as f64 >= log_fact, 1e-9);
    let thm = factor * n as f64 * (n as f64).log2();
    report.bound("transitive_theorem", sum_h, thm, thm >= log_fact, 1e-9);
    Ok(report)
}

/// Runs the mode named in `config`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    match config.mode {
        Mode::Replay => replay_proof_chain(config),
        Mode::Transitive => transitive_pipeline(config),
        Mode::Mpc => mpc_report(config),
        Mode::Maxent => maxent_report(config),
        Mode::Decompose => decompose(config),
    }
}

/// Serializes a report; JSONL writes one tagged record per line, CSV a
/// long `line,kind,field,value` table with nested fields flattened to
/// dotted paths.
pub fn render_report(report: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Jsonl => {
            let mut out = String::new();
            for r in &report.records {
                out.push_str(&serde_json::to_string(r)?);
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["line", "kind", "field", "value"])?;
            for (line, r) in report.records.iter().enumerate() {
                let mut fields = Vec::new();
                flatten("", &serde_json::to_value(r)?, &mut fields);
                for (field, value) in fields {
                    if field == "kind" {
                        continue;
                    }
                    w.write_record([line.to_string().as_str(), r.kind(), &field, &value])?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push((prefix.to_string(), "[]".into()));
            }
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn export_report(report: &RunReport, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}

/// Parses a JSONL report, rejecting other schemas and unknown fields.
pub fn parse_report(text: &str) -> Result<RunReport> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if i == 0 {
            match &record {
                Record::Header(h) if h.schema == SCHEMA => {}
                Record::Header(h) => return Err(Error::parse(1, format!("unsupported schema {:?}", h.schema))),
                _ => return Err(Error::parse(1, "report must start with a header")),
            }
        }
        records.push(record);
    }
    Ok(RunReport { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mode: Mode, n: usize) -> RunConfig {
        RunConfig::new(mode, TournamentSource::Transitive(n)).with_seed(1)
    }

    #[test]
    fn replay_point_mass() {
        let cfg = config(Mode::Replay, 4).with_distribution(DistributionSource::Identity);
        let report = replay_proof_chain(&cfg).unwrap();
        assert!(report.all_passed(), "{:?}", report.failures());
        let xi = report
            .records
            .iter()
            .find_map(|r| match r {
                Record::Xi(x) => Some(x.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(xi.pr_q, 1.0);
        for r in &report.records {
            if let Record::NodeEvents(e) = r {
                assert_eq!(e.pr_a.value, 1.0);
            }
        }
    }

    #[test]
    fn replay_uniform_flags_hypothesis() {
        let cfg = config(Mode::Replay, 4).with_distribution(DistributionSource::Uniform);
        let report = replay_proof_chain(&cfg).unwrap();
        let hyp = report.find_check("hypothesis").unwrap();
        assert!(!hyp.passed);
        assert!(report.find_check("node1.a_within_b").unwrap().passed);
        assert!(report.find_check("b.pairwise_independent").unwrap().passed);
    }

    #[test]
    fn replay_maxent_n4() {
        let report = replay_proof_chain(&config(Mode::Replay, 4)).unwrap();
        assert!(report.all_passed(), "{:?}", report.failures());
        assert!(report.bounds().any(|b| b.vacuous));
        assert!(report.summary().contains("VACUOUS"));
    }

    #[test]
    fn transitive_examples() {
        let report = transitive_pipeline(&config(Mode::Transitive, 4).with_distribution(DistributionSource::Identity)).unwrap();
        let blocks: f64 = report
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Block(b) => Some(b.report.entropy),
                _ => None,
            })
            .sum();
        assert_eq!(blocks, 0.0);
        let report = transitive_pipeline(&config(Mode::Transitive, 4).with_distribution(DistributionSource::Uniform)).unwrap();
        let b = report.bounds().find(|b| b.name == "order_vs_blocks").unwrap();
        assert!((b.value - 24f64.log2()).abs() < 1e-12 && (b.limit - 24f64.log2()).abs() < 1e-12);
        let report = transitive_pipeline(&config(Mode::Transitive, 4)).unwrap();
        assert!(report.all_passed(), "{:?}", report.failures());
        assert!(transitive_pipeline(&config(Mode::Transitive, 6)).is_err());
    }

    #[test]
    fn export_round_trip() {
        let report = replay_proof_chain(&config(Mode::Replay, 4)).unwrap();
        let text = render_report(&report, Format::Jsonl).unwrap();
        assert_eq!(parse_report(&text).unwrap(), report);
        assert_eq!(text, render_report(&report, Format::Jsonl).unwrap());
        let csv = render_report(&report, Format::Csv).unwrap();
        assert!(csv.starts_with("line,kind,field,value\n"));
        let empty = render_report(&RunReport::default(), Format::Csv).unwrap();
        assert_eq!(empty, "line,kind,field,value\n");
    }

    #[test]
    fn parse_rejects_unknown_fields_and_schema() {
        let report = decompose(&config(Mode::Decompose, 9)).unwrap();
        let text = render_report(&report, Format::Jsonl).unwrap();
        let tampered = text.replacen("\"transitive\":true", "\"transitive\":true,\"extra\":1", 1);
        assert!(parse_report(&tampered).is_err());
        let other = text.replacen(SCHEMA, "ranklab-report/0", 1);
        assert!(parse_report(&other).is_err());
    }

    #[test]
    fn config_file_and_flags() {
        let mut cfg = config(Mode::Replay, 4);
        let extra = cfg
            .apply_file("# comment\nepsilon = 0.1\nleaf_threshold=3\nout = x.jsonl\n")
            .unwrap();
        assert_eq!(cfg.epsilon, 0.1);
        assert_eq!(cfg.leaf_threshold, Some(3));
        assert_eq!(extra["out"], "x.jsonl");
        assert!(cfg.apply_file("bogus = 1").is_err());
        let mut no_seed = RunConfig::new(Mode::Decompose, TournamentSource::Random(5));
        assert!(no_seed.validate().is_err());
        no_seed.seed = Some(3);
        assert!(no_seed.validate().is_ok());
    }

    #[test]
    fn mpc_generated() {
        let mut cfg = RunConfig::new(Mode::Mpc, TournamentSource::Transitive(1)).with_seed(5);
        cfg.m = Some(3);
        let report = mpc_report(&cfg).unwrap();
        assert!(report.all_passed(), "{:?}", report.failures());
    }
}
