//! Maximum-entropy distributions on the symmetric group subject to
//! `Pr(σ(u) < σ(v)) >= 1/2 + ε + margin` for every arc `uv` of a
//! tournament.
//!
//! The optimum lies in the Gibbs family `p(σ) ∝ exp(Σ_uv θ_uv·[σ(u) < σ(v)])`
//! with `θ >= 0`. The dual `log Z(θ) − Σ θ_uv·a` is minimized one coordinate
//! at a time; each coordinate step is solved in closed form, so the dual
//! never increases.

use serde::{Deserialize, Serialize};

use crate::entropy::{compensated_sum, entropy_bits, PermDistribution};
use crate::error::{Error, Result};
use crate::tournament::{Permutation, Tournament, Vertex};

pub const MAX_SOLVER_N: usize = 8;
pub const MAX_AGREEMENT_N: usize = 10;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DUAL_CHANGE_TOLERANCE: f64 = 1e-10;
/// A potential past this size means the constraint set is (numerically)
/// empty.
pub const DIVERGENCE_THRESHOLD: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ArcConstraintSystem {
    pub tournament: Tournament,
    pub epsilon: f64,
    pub margin: f64,
}

impl ArcConstraintSystem {
    pub fn new(tournament: Tournament, epsilon: f64, margin: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
        }
        if !(margin >= 0.0) || 0.5 + epsilon + margin > 1.0 {
            return Err(Error::Config(format!("margin {margin} must be >= 0 and keep the target <= 1")));
        }
        if tournament.n() == 0 {
            return Err(Error::Config("tournament has no vertices".into()));
        }
        Ok(ArcConstraintSystem {
            tournament,
            epsilon,
            margin,
        })
    }

    /// Required agreement probability per arc.
    pub fn target(&self) -> f64 {
        0.5 + self.epsilon + self.margin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfeasibilityCertificate {
    /// At most `k − 1` arcs of a `k`-cycle agree with any order, so the
    /// cycle's probabilities sum to at most `k − 1 < k·a`.
    Cycle { cycle: Vec<Vertex>, target: f64 },
    /// `E[agreeing arcs] <= max_agreement < a·C(n, 2)`.
    Counting {
        max_agreement: usize,
        arcs: usize,
        target: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted; the best iterate is returned.
    NotConverged,
    Infeasible { certificate: InfeasibilityCertificate },
    /// Potentials diverged. No certificate, so this is a heuristic verdict.
    PresumedInfeasible { max_weight: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub u: Vertex,
    pub v: Vertex,
    pub weight: f64,
    pub probability: f64,
    /// `Pr(A_uv) − target`; complementary slackness asks for zero slack
    /// wherever the weight is positive.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxentSolution {
    pub n: usize,
    pub epsilon: f64,
    pub margin: f64,
    pub transitive: bool,
    pub distribution: PermDistribution,
    pub arcs: Vec<ArcRecord>,
    pub entropy_bits: f64,
    pub dual_bits: f64,
    pub feasible: bool,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl MaxentSolution {
    pub fn weights(&self) -> impl Iterator<Item = ((Vertex, Vertex), f64)> + '_ {
        self.arcs.iter().map(|a| ((a.u, a.v), a.weight))
    }

    pub fn max_violation(&self) -> f64 {
        self.arcs.iter().map(|a| (-a.slack).max(0.0)).fold(0.0, f64::max)
    }

    /// Largest `|slack|` over arcs with a positive weight.
    pub fn max_active_residual(&self) -> f64 {
        self.arcs
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.slack.abs())
            .fold(0.0, f64::max)
    }
}

/// All permutations of `[1, n]` with their agreement bitmasks (bit `k` set
/// when arc `k` of `arcs` agrees).
struct StateSpace {
    perms: Vec<Permutation>,
    masks: Vec<u64>,
}

impl StateSpace {
    fn new(n: usize, arcs: &[(Vertex, Vertex)]) -> Self {
        let perms: Vec<Permutation> = Permutation::all(n).collect();
        let masks = perms
            .iter()
            .map(|s| {
                arcs.iter()
                    .enumerate()
                    .filter(|(_, &(u, v))| s.image(u) < s.image(v))
                    .fold(0u64, |acc, (k, _)| acc | 1 << k)
            })
            .collect();
        StateSpace { perms, masks }
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        self.masks
            .iter()
            .map(|&m| compensated_sum((0..theta.len()).filter(|k| m >> k & 1 == 1).map(|k| theta[k])))
            .collect()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + compensated_sum(xs.iter().map(|x| (x - top).exp())).ln()
}

/// Normalized `exp(log_weights)`.
fn gibbs(log_weights: &[f64]) -> Vec<f64> {
    let log_z = log_sum_exp(log_weights);
    log_weights.iter().map(|w| (w - log_z).exp()).collect()
}

/// The Gibbs distribution of `weights` (keyed by arc) on `[1, n]`,
/// recomputed from scratch.
pub fn gibbs_distribution(n: usize, weights: &[((Vertex, Vertex), f64)]) -> Result<PermDistribution> {
    if n > MAX_SOLVER_N {
        return Err(Error::TooLarge { n, cap: MAX_SOLVER_N });
    }
    let arcs: Vec<_> = weights.iter().map(|&(a, _)| a).collect();
    let theta: Vec<_> = weights.iter().map(|&(_, w)| w).collect();
    let space = StateSpace::new(n, &arcs);
    let p = gibbs(&space.log_weights(&theta));
    PermDistribution::new(n, space.perms.into_iter().zip(p))
}

fn marginal(p: &[f64], masks: &[u64], k: usize) -> f64 {
    compensated_sum(p.iter().zip(masks).filter(|(_, &m)| m >> k & 1 == 1).map(|(&q, _)| q))
}

/// Exact certificates: a 3-cycle when `a > 2/3`, then the global counting
/// bound (only computed up to [`MAX_AGREEMENT_N`]).
pub fn infeasibility_certificate(system: &ArcConstraintSystem) -> Result<Option<InfeasibilityCertificate>> {
    let t = &system.tournament;
    let a = system.target();
    let arcs = t.arc_count();
    if arcs > 0 && t.n() <= MAX_AGREEMENT_N {
        let (_, best) = max_agreement_count(t)?;
        if a * arcs as f64 > best as f64 {
            return Ok(Some(InfeasibilityCertificate::Counting {
                max_agreement: best,
                arcs,
                target: a,
            }));
        }
    }
    // A cyclic triangle caps the mean of its three arc probabilities at 2/3.
    if 3.0 * a > 2.0 {
        if let Some(tri) = t.find_triangle() {
            return Ok(Some(InfeasibilityCertificate::Cycle {
                cycle: tri.to_vec(),
                target: a,
            }));
        }
    }
    Ok(None)
}

/// Maximizes entropy subject to every arc constraint.
pub fn solve_maxent(system: &ArcConstraintSystem, tolerance: f64, max_iterations: usize) -> Result<MaxentSolution> {
    let t = &system.tournament;
    let n = t.n();
    if n > MAX_SOLVER_N {
        return Err(Error::TooLarge { n, cap: MAX_SOLVER_N });
    }
    let arcs: Vec<(Vertex, Vertex)> = t.arcs().collect();
    let space = StateSpace::new(n, &arcs);
    let a = system.target();
    let mut theta = vec![0.0f64; arcs.len()];
    let mut p = gibbs(&space.log_weights(&theta));

    let finish = |theta: &[f64], iterations: usize, status: SolveStatus| -> Result<MaxentSolution> {
        let log_w = space.log_weights(theta);
        let p = gibbs(&log_w);
        let log_z = log_sum_exp(&log_w);
        let records: Vec<ArcRecord> = arcs
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| {
                let probability = marginal(&p, &space.masks, k);
                ArcRecord {
                    u,
                    v,
                    weight: theta[k],
                    probability,
                    slack: probability - a,
                }
            })
            .collect();
        let dual_nats = log_z - compensated_sum(theta.iter().map(|w| w * a));
        let max_violation = records.iter().map(|r| (-r.slack).max(0.0)).fold(0.0, f64::max);
        let feasible = match status {
            SolveStatus::Infeasible { .. } | SolveStatus::PresumedInfeasible { .. } => false,
            _ => max_violation <= tolerance,
        };
        Ok(MaxentSolution {
            n,
            epsilon: system.epsilon,
            margin: system.margin,
            transitive: t.is_transitive(),
            entropy_bits: entropy_bits(p.iter().copied()),
            distribution: PermDistribution::new(n, space.perms.iter().cloned().zip(p))?,
            arcs: records,
            dual_bits: dual_nats / std::f64::consts::LN_2,
            feasible,
            status,
            iterations,
        })
    };

    if let Some(certificate) = infeasibility_certificate(system)? {
        return finish(&theta, 0, SolveStatus::Infeasible { certificate });
    }

    let dual = |theta: &[f64]| log_sum_exp(&space.log_weights(theta)) - compensated_sum(theta.iter().map(|w| w * a));
    let mut previous_dual = dual(&theta);
    for sweep in 1..=max_iterations {
        for k in 0..arcs.len() {
            let pk = marginal(&p, &space.masks, k);
            let step = if pk <= 0.0 {
                DIVERGENCE_THRESHOLD
            } else if pk >= 1.0 {
                -theta[k]
            } else {
                (a * (1.0 - pk) / (pk * (1.0 - a))).ln()
            };
            let next = (theta[k] + step).max(0.0);
            let applied = next - theta[k];
            if applied == 0.0 {
                continue;
            }
            theta[k] = next;
            let scale = applied.exp();
            let z = pk * scale + (1.0 - pk);
            for (q, &m) in p.iter_mut().zip(&space.masks) {
                if m >> k & 1 == 1 {
                    *q *= scale / z;
                } else {
                    *q /= z;
                }
            }
        }
        // Re-derive from the potentials to keep rounding from accumulating.
        p = gibbs(&space.log_weights(&theta));

        let max_weight = theta.iter().copied().fold(0.0, f64::max);
        if max_weight > DIVERGENCE_THRESHOLD {
            return finish(&theta, sweep, SolveStatus::PresumedInfeasible { max_weight });
        }
        let residual = (0..arcs.len())
            .map(|k| {
                let slack = marginal(&p, &space.masks, k) - a;
                if theta[k] > 0.0 {
                    slack.abs()
                } else {
                    (-slack).max(0.0)
                }
            })
            .fold(0.0, f64::max);
        let current_dual = dual(&theta);
        let change = (previous_dual - current_dual).abs();
        previous_dual = current_dual;
        if residual < tolerance && change < DUAL_CHANGE_TOLERANCE {
            return finish(&theta, sweep, SolveStatus::Converged);
        }
    }
    finish(&theta, max_iterations, SolveStatus::NotConverged)
}

fn max_agreement_count(t: &Tournament) -> Result<(Permutation, usize)> {
    let n = t.n();
    if n > MAX_AGREEMENT_N {
        return Err(Error::TooLarge { n, cap: MAX_AGREEMENT_N });
    }
    let mut best: Option<(Permutation, usize)> = None;
    for sigma in Permutation::all(n) {
        let agree = t.agreement(&sigma);
        if best.as_ref().is_none_or(|(_, b)| agree > *b) {
            best = Some((sigma, agree));
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// The lexicographically first order agreeing with the most arcs, and the
/// fraction of arcs it agrees with.
pub fn max_agreement(t: &Tournament) -> Result<(Permutation, f64)> {
    let (sigma, count) = max_agreement_count(t)?;
    let arcs = t.arc_count();
    let fraction = if arcs == 0 { 1.0 } else { count as f64 / arcs as f64 };
    Ok((sigma, fraction))
}

/// Constants of the general entropy bound for a given `ε` and part-size
/// floor `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub b: f64,
    pub c: f64,
    pub theta: f64,
}

impl BoundConstants {
    pub fn new(epsilon: f64, beta: f64) -> Self {
        let delta = 0.03 * epsilon;
        let beta3 = beta.powi(3);
        BoundConstants {
            epsilon,
            delta,
            beta,
            b: epsilon.powi(2) * delta * beta3 / 33.0,
            c: epsilon.powi(3) * delta * beta3 / 150.0,
            theta: epsilon.powi(4) * delta * beta3 / 300.0,
        }
    }
}

pub fn log2_factorial(n: usize) -> f64 {
    compensated_sum((2..=n).map(|k| (k as f64).log2()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub feasible: bool,
    pub entropy: f64,
    pub log_factorial: f64,
    /// `(1 − ϑ)·log₂ n!`
    pub general_bound: f64,
    pub general_holds: bool,
    /// Set when `(1 − ϑ)·log₂ n! > log₂ n! − 1`.
    pub general_vacuous: bool,
    /// `(1 − ε²/8)·n·log₂ n`
    pub transitive_bound: f64,
    /// Only meaningful for a transitive tournament.
    pub transitive_holds: Option<bool>,
    /// `(1 − 2ε)·log₂ n!`
    pub ceiling: f64,
    pub above_ceiling: bool,
    pub within_log_factorial: bool,
}

pub fn verify_bounds(solution: &MaxentSolution, constants: &BoundConstants) -> BoundReport {
    let n = solution.n;
    let h = solution.entropy_bits;
    let log_factorial = log2_factorial(n);
    let general_bound = (1.0 - constants.theta) * log_factorial;
    let eps = constants.epsilon;
    let transitive_bound = (1.0 - eps * eps / 8.0) * n as f64 * (n as f64).log2();
    let ceiling = (1.0 - 2.0 * eps) * log_factorial;
    BoundReport {
        n,
        feasible: solution.feasible,
        entropy: h,
        log_factorial,
        general_bound,
        general_holds: h <= general_bound,
        general_vacuous: general_bound > log_factorial - 1.0,
        transitive_bound,
        transitive_holds: solution.transitive.then_some(h <= transitive_bound + 1e-9),
        ceiling,
        above_ceiling: h >= ceiling,
        within_log_factorial: h <= log_factorial + 1e-9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;

    fn cyclic3() -> Tournament {
        Tournament::from_arcs(3, [(1, 2), (2, 3), (3, 1)]).unwrap()
    }

    #[test]
    fn single_arc() {
        let sys = ArcConstraintSystem::new(Tournament::transitive(2), 0.1, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 1000).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(sol.feasible);
        assert!((sol.entropy_bits - binary_entropy(0.6).unwrap()).abs() < 1e-9);
        assert!((sol.entropy_bits - 0.970951).abs() < 1e-6);
        assert!((sol.arcs[0].probability - 0.6).abs() < 1e-9);
        assert!((sol.dual_bits - sol.entropy_bits).abs() < 1e-9);
        let report = verify_bounds(&sol, &BoundConstants::new(0.1, 0.1));
        assert!(report.general_holds && report.within_log_factorial);
        assert_eq!(report.transitive_holds, Some(true));
    }

    #[test]
    fn single_vertex_is_trivial() {
        let sys = ArcConstraintSystem::new(Tournament::transitive(1), 0.1, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 10).unwrap();
        assert_eq!(sol.entropy_bits, 0.0);
        assert!(sol.feasible);
    }

    #[test]
    fn cyclic_triangle() {
        let sys = ArcConstraintSystem::new(cyclic3(), 0.2, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 1000).unwrap();
        assert!(!sol.feasible);
        assert!(matches!(
            sol.status,
            SolveStatus::Infeasible {
                certificate: InfeasibilityCertificate::Counting {
                    max_agreement: 2,
                    arcs: 3,
                    ..
                }
            }
        ));

        // Past the enumeration cap only the triangle certificate is available.
        let big = ArcConstraintSystem::new(Tournament::rotational(11), 0.2, 0.0).unwrap();
        assert!(matches!(
            infeasibility_certificate(&big).unwrap(),
            Some(InfeasibilityCertificate::Cycle { .. })
        ));

        let sys = ArcConstraintSystem::new(cyclic3(), 0.15, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 10_000).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(sol.feasible);
        // The uniform law on the three 2-agreeing orders already satisfies
        // the constraints, so the optimum is at least log₂ 3.
        assert!(sol.entropy_bits >= 3f64.log2() - 1e-9);
        for arc in &sol.arcs {
            assert!(arc.probability >= 0.65 - 1e-8);
        }
    }

    #[test]
    fn gibbs_consistency() {
        let t = Tournament::random(5, 3);
        let sys = ArcConstraintSystem::new(t, 0.05, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 5000).unwrap();
        if sol.feasible {
            let weights: Vec<_> = sol.weights().collect();
            let again = gibbs_distribution(5, &weights).unwrap();
            for (sigma, p) in sol.distribution.iter() {
                assert!((again.probability(sigma) - p).abs() < 1e-9);
            }
            assert!(sol.arcs.iter().all(|a| a.weight >= 0.0));
            assert!(sol.max_active_residual() <= DEFAULT_TOLERANCE);
        }
    }

    #[test]
    fn max_agreement_examples() {
        let (best, frac) = max_agreement(&Tournament::transitive(6)).unwrap();
        assert_eq!(best, Permutation::identity(6));
        assert_eq!(frac, 1.0);
        let (_, frac) = max_agreement(&cyclic3()).unwrap();
        assert!((frac - 2.0 / 3.0).abs() < 1e-15);
        assert!(max_agreement(&Tournament::transitive(11)).is_err());
    }

    #[test]
    fn constants() {
        let c = BoundConstants::new(0.2, 0.1);
        assert!((c.delta - 0.006).abs() < 1e-15);
        assert!((c.theta - 0.2f64.powi(4) * 0.006 * 1e-3 / 300.0).abs() < 1e-25);
        assert!((c.theta - 3.2e-11).abs() < 1e-13);
        assert!((c.b - 0.04 * 0.006 * 1e-3 / 33.0).abs() < 1e-22);
        assert!((c.c - 0.008 * 0.006 * 1e-3 / 150.0).abs() < 1e-22);
    }

    #[test]
    fn transitive_n4_bounds() {
        let sys = ArcConstraintSystem::new(Tournament::transitive(4), 0.2, 0.0).unwrap();
        let sol = solve_maxent(&sys, DEFAULT_TOLERANCE, 10_000).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let report = verify_bounds(&sol, &BoundConstants::new(0.2, 0.1));
        assert!(report.within_log_factorial);
        assert!(report.general_vacuous);
        assert_eq!(report.transitive_holds, Some(true));
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(ArcConstraintSystem::new(Tournament::transitive(3), 0.5, 0.0).is_err());
        assert!(ArcConstraintSystem::new(Tournament::transitive(3), 0.2, -0.1).is_err());
        let sys = ArcConstraintSystem::new(Tournament::transitive(9), 0.1, 0.0).unwrap();
        assert!(solve_maxent(&sys, 1e-8, 10).is_err());
    }
}
