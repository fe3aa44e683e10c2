//! Lift, compress, cover, enumerate, verify.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use itertools::Itertools;
use serde::Serialize;

use crate::covering::{amplified_cover, CoveringConfig, Strategy};
use crate::error::{Error, Result};
use crate::gain_graph::compress_labels;
use crate::lifting::{direct_satisfiable_subset, lift, Instance, Weight};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DeletionSet {
    /// Ascending.
    pub constraint_ids: Vec<usize>,
    pub cardinality: usize,
    #[serde(serialize_with = "serialize_weight")]
    pub total_weight: Weight,
}

pub(crate) fn serialize_weight<S: serde::Serializer>(
    w: &Weight,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

impl DeletionSet {
    pub fn new(instance: &Instance, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut constraint_ids: Vec<usize> = ids.into_iter().collect();
        constraint_ids.sort_unstable();
        constraint_ids.dedup();
        let mut total_weight = Weight::from_integer(0);
        for &id in &constraint_ids {
            total_weight += instance.constraints()[instance.position(id)?].weight;
        }
        Ok(Self {
            cardinality: constraint_ids.len(),
            constraint_ids,
            total_weight,
        })
    }

    /// Order used to pick the best set: by weight when weighted, then by
    /// cardinality, then lexicographically by ids.
    fn better_than(&self, other: &Self, weighted: bool) -> bool {
        let key = |d: &Self| (d.cardinality, d.constraint_ids.clone());
        if weighted && self.total_weight != other.total_weight {
            return self.total_weight < other.total_weight;
        }
        key(self) < key(other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Covering,
    Exhaustive,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covering" => Ok(Mode::Covering),
            "exhaustive" => Ok(Mode::Exhaustive),
            other => Err(Error::InvalidParams(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub weighted: bool,
    pub mode: Mode,
    /// Candidates enumerated per covering attempt before it is cut short.
    pub candidate_budget: u64,
    /// In covering mode, branch on minimal unsatisfiable cores when balance
    /// of the lifted graph does not decide satisfiability.
    pub exact_fallback: bool,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            repetitions: 200,
            seed: 0,
            strategy: Strategy::CycleSampling,
            weighted: false,
            mode: Mode::Covering,
            candidate_budget: 1_000_000,
            exact_fallback: true,
        }
    }

    pub fn exhaustive(k: usize) -> Self {
        Self {
            mode: Mode::Exhaustive,
            ..Self::new(k)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Answer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub rho: usize,
    pub ambient_dim: usize,
    pub exact_regime: bool,
    pub mandatory_deletions: Vec<usize>,
    /// `|F|` of each covering attempt.
    pub f_sizes: Vec<usize>,
    /// Union over attempts of the constraints behind `F`.
    pub candidate_constraints: Vec<usize>,
    pub candidates_enumerated: u64,
    /// `(e·ρ)^k`; reported, not enforced.
    pub enumeration_bound: f64,
    pub verification_calls: u64,
    pub truncated_attempts: usize,
    /// Whether balance of the lifted graph decides satisfiability.
    pub balance_decides: bool,
    pub fallback_used: bool,
    /// Nodes of the core-branching search.
    pub branch_nodes: u64,
    /// Satisfiability calls spent shrinking cores.
    pub core_checks: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub answer: Answer,
    pub best: Option<DeletionSet>,
    pub stats: SolveStats,
}

/// Whether the instance minus `ids` is satisfiable.
pub fn verify_deletion(instance: &Instance, ids: &[usize]) -> Result<bool> {
    let mut keep = vec![true; instance.constraint_count()];
    for &id in ids {
        keep[instance.position(id)?] = false;
    }
    Ok(direct_satisfiable_subset(instance, &keep).is_some())
}

/// All subsets of `f` (ascending ids) of size at most `k`, by size and then
/// lexicographically.
pub fn enumerate_candidates(f: &[usize], k: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..=k.min(f.len())).flat_map(move |size| f.iter().copied().combinations(size))
}

struct Search<'a> {
    instance: &'a Instance,
    weighted: bool,
    cache: HashMap<Vec<usize>, bool>,
    visited: HashSet<Vec<usize>>,
    best: Option<DeletionSet>,
    stats: SolveStats,
}

impl Search<'_> {
    fn feasible(&mut self, ids: &[usize]) -> bool {
        if let Some(&hit) = self.cache.get(ids) {
            return hit;
        }
        self.stats.verification_calls += 1;
        let ok = verify_deletion(self.instance, ids).expect("ids come from the instance");
        self.cache.insert(ids.to_vec(), ok);
        ok
    }

    /// Enumerates `mandatory ∪ D` for `D ⊆ pool`, `|D| ≤ k`. Returns whether
    /// the budget ran out.
    fn run(&mut self, pool: &[usize], mandatory: &[usize], k: usize, budget: Option<u64>) -> bool {
        for (seen, extra) in enumerate_candidates(pool, k).enumerate() {
            let size = mandatory.len() + extra.len();
            if !self.weighted {
                if let Some(b) = &self.best {
                    if size > b.cardinality {
                        break;
                    }
                }
            }
            if budget.is_some_and(|b| seen as u64 >= b) {
                return true;
            }
            self.stats.candidates_enumerated += 1;
            let cand = DeletionSet::new(self.instance, mandatory.iter().copied().chain(extra))
                .expect("ids come from the instance");
            if let Some(b) = &self.best {
                if !cand.better_than(b, self.weighted) {
                    continue;
                }
            }
            if self.feasible(&cand.constraint_ids) {
                self.best = Some(cand);
            }
        }
        false
    }

    /// A minimal subset of the constraints outside `deleted` that is
    /// unsatisfiable, assuming they are unsatisfiable together.
    fn minimal_core(&mut self, deleted: &[usize]) -> Vec<usize> {
        let mut keep = vec![true; self.instance.constraint_count()];
        for &id in deleted {
            keep[self
                .instance
                .position(id)
                .expect("ids come from the instance")] = false;
        }
        for pos in 0..keep.len() {
            if keep[pos] {
                keep[pos] = false;
                self.stats.core_checks += 1;
                if direct_satisfiable_subset(self.instance, &keep).is_some() {
                    keep[pos] = true;
                }
            }
        }
        let ids = self.instance.constraints();
        keep.iter()
            .zip(ids)
            .filter(|(&k, _)| k)
            .map(|(_, c)| c.id)
            .collect()
    }

    /// Every feasible deletion set must hit every unsatisfiable core of what
    /// remains, so branching on the members of one core is complete.
    fn branch(&mut self, deleted: Vec<usize>, room: usize) {
        if !self.visited.insert(deleted.clone()) {
            return;
        }
        self.stats.branch_nodes += 1;
        let cand = DeletionSet::new(self.instance, deleted.iter().copied())
            .expect("ids come from the instance");
        if let Some(b) = &self.best {
            let hopeless = if self.weighted {
                cand.total_weight >= b.total_weight && !cand.better_than(b, true)
            } else {
                cand.cardinality > b.cardinality || !cand.better_than(b, false)
            };
            if hopeless {
                return;
            }
        }
        if self.feasible(&cand.constraint_ids) {
            self.best = Some(cand);
            return;
        }
        if room == 0 {
            return;
        }
        for c in self.minimal_core(&deleted) {
            let mut next = deleted.clone();
            let at = next.binary_search(&c).unwrap_err();
            next.insert(at, c);
            self.branch(next, room - 1);
        }
    }
}

/// Minimum (or minimum-weight) deletion set of size at most `k`.
///
/// YES answers always carry a verified set. In covering mode a NO may be
/// wrong when no attempt captured an optimal solution.
pub fn solve(instance: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    if cfg.repetitions == 0 {
        return Err(Error::InvalidParams(
            "at least one repetition is required".into(),
        ));
    }
    let start = Instant::now();
    let lifted = lift(instance);
    let mandatory = lifted.mandatory_deletions.clone();
    let mut search = Search {
        instance,
        weighted: cfg.weighted,
        cache: HashMap::new(),
        visited: HashSet::new(),
        best: None,
        stats: SolveStats {
            ambient_dim: lifted.ambient_dim,
            exact_regime: lifted.exact_regime,
            mandatory_deletions: mandatory.clone(),
            balance_decides: lifted.balance_decides(),
            ..Default::default()
        },
    };

    if mandatory.len() <= cfg.k {
        let room = cfg.k - mandatory.len();
        let compressed = compress_labels(&lifted.graph)?;
        let rho = compressed.rho();
        search.stats.rho = rho;
        search.stats.enumeration_bound = (std::f64::consts::E * rho as f64).powi(cfg.k as i32);
        match cfg.mode {
            Mode::Exhaustive => {
                let pool: Vec<usize> = instance
                    .constraint_ids()
                    .filter(|id| mandatory.binary_search(id).is_err())
                    .sorted()
                    .collect();
                search.run(&pool, &mandatory, room, None);
            }
            Mode::Covering => {
                let cover_cfg = CoveringConfig {
                    k: cfg.k,
                    strategy: cfg.strategy,
                    seed: cfg.seed,
                    max_iterations: None,
                };
                let covers = amplified_cover(&compressed.graph, &cover_cfg, cfg.repetitions)?;
                let mut union = BTreeSet::new();
                for cover in &covers {
                    let pool = lifted.constraints_of_edges(cover.f.iter().copied());
                    search.stats.f_sizes.push(cover.f.len());
                    union.extend(pool.iter().copied());
                    if search.run(&pool, &mandatory, room, Some(cfg.candidate_budget)) {
                        search.stats.truncated_attempts += 1;
                    }
                }
                search.stats.candidate_constraints = union.into_iter().collect();
                if cfg.exact_fallback && !lifted.balance_decides() {
                    search.stats.fallback_used = true;
                    search.branch(mandatory.clone(), room);
                }
            }
        }
    }

    let mut stats = search.stats;
    stats.wall_time = start.elapsed();
    Ok(SolveReport {
        answer: if search.best.is_some() {
            Answer::Yes
        } else {
            Answer::No
        },
        best: search.best,
        stats,
    })
}

/// Whether some deletion set of size at most `k` makes the instance satisfiable.
pub fn solve_decision(instance: &Instance, cfg: &SolverConfig) -> Result<Answer> {
    Ok(solve(instance, cfg)?.answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{Constraint, DyadicList, Relation};

    fn two_cycle() -> Instance {
        Instance::new(
            2,
            vec![DyadicList::new(1, 1), DyadicList::new(1, 1)],
            vec![
                Constraint::new(0, Relation::Eq { u: 0, v: 1 }),
                Constraint::new(1, Relation::Neg { u: 0, v: 1 }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn verify_examples() {
        let i = two_cycle();
        assert!(verify_deletion(&i, &[0, 1]).unwrap());
        assert!(verify_deletion(&i, &[1]).unwrap());
        assert!(!verify_deletion(&i, &[]).unwrap());
        assert_eq!(verify_deletion(&i, &[5]), Err(Error::UnknownConstraint(5)));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(
            enumerate_candidates(&[], 2).collect::<Vec<_>>(),
            vec![Vec::<usize>::new()]
        );
        assert_eq!(enumerate_candidates(&[1, 2, 3], 1).count(), 4);
        assert_eq!(enumerate_candidates(&[0, 1, 2, 3, 4], 2).count(), 16);
        let order: Vec<_> = enumerate_candidates(&[1, 4, 7], 2).collect();
        assert_eq!(
            order,
            vec![
                vec![],
                vec![1],
                vec![4],
                vec![7],
                vec![1, 4],
                vec![1, 7],
                vec![4, 7]
            ]
        );
    }

    #[test]
    fn solve_examples() {
        let sat = Instance::new(
            2,
            vec![DyadicList::full(); 2],
            vec![Constraint::new(0, Relation::Eq { u: 0, v: 1 })],
        )
        .unwrap();
        let r = solve(&sat, &SolverConfig::new(0)).unwrap();
        assert_eq!(r.answer, Answer::Yes);
        assert_eq!(r.best.unwrap().cardinality, 0);

        let i = two_cycle();
        let r = solve(&i, &SolverConfig::exhaustive(1)).unwrap();
        assert_eq!(r.answer, Answer::Yes);
        assert_eq!(r.best.as_ref().unwrap().cardinality, 1);
        assert!(verify_deletion(&i, &r.best.unwrap().constraint_ids).unwrap());

        let r = solve(&i, &SolverConfig::new(1)).unwrap();
        assert_eq!(r.best.unwrap().cardinality, 1);
    }

    #[test]
    fn decision_examples() {
        let i = two_cycle();
        assert_eq!(
            solve_decision(&i, &SolverConfig::new(2)).unwrap(),
            Answer::Yes
        );
        assert_eq!(
            solve_decision(&i, &SolverConfig::exhaustive(0)).unwrap(),
            Answer::No
        );
        assert_eq!(
            solve_decision(&i, &SolverConfig::new(0)).unwrap(),
            Answer::No
        );
    }

    #[test]
    fn mandatory_deletions_are_charged() {
        let i = Instance::new(
            2,
            vec![DyadicList::new(1, 1), DyadicList::new(0, 1)],
            vec![
                Constraint::new(0, Relation::Eq { u: 0, v: 1 }),
                Constraint::new(1, Relation::Anchor { v: 0, b: 3 }),
            ],
        )
        .unwrap();
        assert_eq!(
            solve_decision(&i, &SolverConfig::new(0)).unwrap(),
            Answer::No
        );
        let r = solve(&i, &SolverConfig::new(1)).unwrap();
        assert_eq!(r.best.unwrap().constraint_ids, vec![0]);
        assert_eq!(r.stats.mandatory_deletions, vec![0]);
    }

    #[test]
    fn weighted_prefers_lighter_sets() {
        // Deleting the heavy Neg alone costs 5; the two light Eqs cost 2.
        let i = Instance::new(
            2,
            vec![DyadicList::new(1, 1); 3],
            vec![
                Constraint::weighted(0, Relation::Neg { u: 0, v: 1 }, Weight::from_integer(5)),
                Constraint::weighted(1, Relation::Eq { u: 0, v: 2 }, Weight::from_integer(1)),
                Constraint::weighted(2, Relation::Eq { u: 2, v: 1 }, Weight::from_integer(1)),
            ],
        )
        .unwrap();
        let mut cfg = SolverConfig::exhaustive(2);
        assert_eq!(
            solve(&i, &cfg).unwrap().best.unwrap().constraint_ids,
            vec![0]
        );
        cfg.weighted = true;
        let best = solve(&i, &cfg).unwrap().best.unwrap();
        assert_eq!(best.total_weight, Weight::from_integer(1));
        assert_eq!(best.constraint_ids, vec![1]);
    }

    #[test]
    fn fallback_handles_pairwise_consistent_triples() {
        // Eq and Neg together force x_u even; the anchor asks for 1. Balance
        // of the lifted graph cannot see this.
        let i = Instance::new(
            2,
            vec![DyadicList::full(); 2],
            vec![
                Constraint::new(0, Relation::Eq { u: 0, v: 1 }),
                Constraint::new(1, Relation::Neg { u: 0, v: 1 }),
                Constraint::new(2, Relation::Anchor { v: 0, b: 1 }),
            ],
        )
        .unwrap();
        let r = solve(&i, &SolverConfig::new(1)).unwrap();
        assert!(r.stats.fallback_used);
        assert_eq!(r.best.unwrap().cardinality, 1);

        let mut cfg = SolverConfig::new(1);
        cfg.exact_fallback = false;
        let r = solve(&i, &cfg).unwrap();
        assert!(!r.stats.fallback_used);
        if let Some(b) = r.best {
            assert!(verify_deletion(&i, &b.constraint_ids).unwrap());
        }
    }

    #[test]
    fn covering_with_fallback_matches_exhaustive() {
        use crate::io::{generate_planted, GenParams};
        for seed in 0..150 {
            let p = GenParams {
                n: 2 + seed as usize % 5,
                m: 4 + seed as usize % 7,
                d: 1 + seed as u32 % 3,
                plant_k: seed as usize % 3,
                max_weight: 1 + seed as i64 % 2,
                seed,
                ..Default::default()
            };
            let (i, _) = generate_planted(&p).unwrap();
            for weighted in [false, true] {
                let mut cover = SolverConfig::new(2);
                cover.weighted = weighted;
                cover.seed = seed;
                cover.repetitions = 40;
                let mut exact = SolverConfig::exhaustive(2);
                exact.weighted = weighted;
                let (a, b) = (solve(&i, &cover).unwrap(), solve(&i, &exact).unwrap());
                if let Some(best) = &a.best {
                    assert!(verify_deletion(&i, &best.constraint_ids).unwrap());
                }
                if a.stats.fallback_used {
                    let key =
                        |r: &SolveReport| r.best.as_ref().map(|b| (b.cardinality, b.total_weight));
                    if weighted {
                        assert_eq!(key(&a).map(|k| k.1), key(&b).map(|k| k.1), "seed {seed}");
                    } else {
                        assert_eq!(key(&a).map(|k| k.0), key(&b).map(|k| k.0), "seed {seed}");
                    }
                }
            }
        }
    }
}
