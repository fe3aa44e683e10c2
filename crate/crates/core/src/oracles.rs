//! Brute-force ground truth for small inputs.
//!
//! Nothing here shares code with the fast paths it is used to check: cycles
//! are enumerated explicitly, potentials are counted by exhaustive search, and
//! satisfiability is decided by plain backtracking over list values.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain_graph::{EdgeId, GainGraph, SubgraphSelection};
use crate::gf2::BitVector;
use crate::lifting::{
    direct_satisfiable_subset, edge_offset, lift, lifted_accepts, FidelityReport, Instance,
    Relation,
};
use crate::solver::DeletionSet;

/// Hard caps for the exhaustive routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub max_constraints: usize,
    pub max_vertices: usize,
    pub max_depth: u32,
    pub max_k: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_constraints: 12,
            max_vertices: 8,
            max_depth: 4,
            max_k: 3,
        }
    }
}

impl OracleBudget {
    fn check_instance(&self, instance: &Instance) -> Result<()> {
        if instance.constraint_count() > self.max_constraints {
            return Err(Error::CapExceeded(format!(
                "{} constraints (cap {})",
                instance.constraint_count(),
                self.max_constraints
            )));
        }
        if instance.variable_count() > self.max_vertices {
            return Err(Error::CapExceeded(format!(
                "{} variables (cap {})",
                instance.variable_count(),
                self.max_vertices
            )));
        }
        if instance.depth() > self.max_depth {
            return Err(Error::CapExceeded(format!(
                "depth {} (cap {})",
                instance.depth(),
                self.max_depth
            )));
        }
        Ok(())
    }
}

/// Satisfiability by backtracking over variables in index order, checking
/// each constraint once all its variables have values.
pub fn naive_satisfiable(instance: &Instance, active: &[bool]) -> bool {
    let n = instance.variable_count();
    let d = instance.depth();
    // Constraints grouped by their largest variable index.
    let mut due: Vec<Vec<Relation>> = vec![Vec::new(); n];
    for (c, _) in instance
        .constraints()
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
    {
        let (u, v) = c.relation.variables();
        due[u.max(v)].push(c.relation);
    }
    let mut x = vec![0u64; n];
    fn go(i: usize, x: &mut [u64], due: &[Vec<Relation>], instance: &Instance, d: u32) -> bool {
        if i == x.len() {
            return true;
        }
        for value in instance.list(i).values(d) {
            x[i] = value;
            if due[i].iter().all(|r| r.holds(x, d)) && go(i + 1, x, due, instance, d) {
                return true;
            }
        }
        false
    }
    go(0, &mut x, &due, instance, d)
}

/// Exact optimum over deletion sets of size at most `k_max`: minimum
/// cardinality, or minimum weight (then cardinality, then ids) when weighted.
pub fn brute_force_opt(
    instance: &Instance,
    k_max: usize,
    weighted: bool,
    budget: &OracleBudget,
) -> Result<Option<DeletionSet>> {
    budget.check_instance(instance)?;
    if k_max > budget.max_k {
        return Err(Error::CapExceeded(format!(
            "k = {k_max} (cap {})",
            budget.max_k
        )));
    }
    let m = instance.constraint_count();
    let ids: Vec<usize> = instance.constraint_ids().collect();
    let mut best: Option<DeletionSet> = None;
    for size in 0..=k_max.min(m) {
        for removed in (0..m).combinations(size) {
            let mut keep = vec![true; m];
            for &p in &removed {
                keep[p] = false;
            }
            if !naive_satisfiable(instance, &keep) {
                continue;
            }
            let cand = DeletionSet::new(instance, removed.iter().map(|&p| ids[p]))?;
            let better = match &best {
                None => true,
                Some(b) if weighted => {
                    (cand.total_weight, cand.cardinality, &cand.constraint_ids)
                        < (b.total_weight, b.cardinality, &b.constraint_ids)
                }
                Some(b) => {
                    (cand.cardinality, &cand.constraint_ids) < (b.cardinality, &b.constraint_ids)
                }
            };
            if better {
                best = Some(cand);
            }
        }
        if best.is_some() && !weighted {
            break;
        }
    }
    Ok(best)
}

/// Every simple cycle of `h` as a list of edge ids. Each cycle is reported
/// once: it is walked from its smallest vertex, leaving by an edge with a
/// smaller id than the one it returns by. Self-loops are cycles of length one.
pub fn simple_cycles(g: &GainGraph, h: &SubgraphSelection) -> Vec<Vec<EdgeId>> {
    let mut cycles = Vec::new();
    for e in h.edge_ids().filter(|&e| g.is_loop(e)) {
        cycles.push(vec![e]);
    }
    let n = g.vertex_count();
    let mut on_path = vec![false; n];
    let mut path: Vec<EdgeId> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        g: &GainGraph,
        h: &SubgraphSelection,
        start: usize,
        at: usize,
        on_path: &mut [bool],
        path: &mut Vec<EdgeId>,
        cycles: &mut Vec<Vec<EdgeId>>,
    ) {
        for &e in g.incident(at) {
            if !h.contains_edge(e) || g.is_loop(e) || path.last() == Some(&e) {
                continue;
            }
            let next = g.other_endpoint(e, at);
            if next == start {
                if path.first().is_some_and(|&first| first < e) {
                    let mut c = path.clone();
                    c.push(e);
                    cycles.push(c);
                }
            } else if next > start && !on_path[next] {
                on_path[next] = true;
                path.push(e);
                dfs(g, h, start, next, on_path, path, cycles);
                path.pop();
                on_path[next] = false;
            }
        }
    }

    for s in h.vertex_ids() {
        on_path[s] = true;
        dfs(g, h, s, s, &mut on_path, &mut path, &mut cycles);
        on_path[s] = false;
    }
    cycles
}

/// Balance by summing labels over every simple cycle.
pub fn brute_force_balanced(
    g: &GainGraph,
    h: &SubgraphSelection,
    budget: &OracleBudget,
) -> Result<bool> {
    let edges = h.edge_ids().count();
    if edges > budget.max_constraints || g.vertex_count() > budget.max_vertices + 1 {
        return Err(Error::CapExceeded(format!(
            "{edges} edges on {} vertices",
            g.vertex_count()
        )));
    }
    Ok(simple_cycles(g, h).iter().all(|c| {
        let mut sum = BitVector::zeros(g.dim());
        for &e in c {
            sum.xor_assign(g.label(e));
        }
        sum.is_zero()
    }))
}

/// Number of maps `p: V(H) → F₂^r` with `λ(uv) = p(u) + p(v)` on every edge
/// of `H`, by exhaustive search. Fails on unbalanced `H` (no such map), when
/// `r > 20`, and when the search visits more than `2^24` partial maps.
pub fn count_potentials(g: &GainGraph, h: &SubgraphSelection) -> Result<u64> {
    let r = g.dim();
    if r > 20 {
        return Err(Error::CapExceeded(format!("r = {r}")));
    }
    let vertices: Vec<usize> = h.vertex_ids().collect();
    let mut order_of = vec![usize::MAX; g.vertex_count()];
    for (i, &v) in vertices.iter().enumerate() {
        order_of[v] = i;
    }
    // Edges checked once their later endpoint gets a value.
    let mut due: Vec<Vec<EdgeId>> = vec![Vec::new(); vertices.len()];
    for e in h.edge_ids() {
        let (u, v) = g.endpoints(e);
        due[order_of[u].max(order_of[v])].push(e);
    }
    let mut p = vec![0u64; g.vertex_count()];
    let mut visited = 0u64;
    fn go(
        i: usize,
        vertices: &[usize],
        due: &[Vec<EdgeId>],
        g: &GainGraph,
        p: &mut [u64],
        visited: &mut u64,
    ) -> Result<u64> {
        if i == vertices.len() {
            return Ok(1);
        }
        let mut total = 0;
        for value in 0..1u64 << g.dim() {
            *visited += 1;
            if *visited > 1 << 24 {
                return Err(Error::CapExceeded("potential search too large".into()));
            }
            p[vertices[i]] = value;
            let ok = due[i].iter().all(|&e| {
                let (u, v) = g.endpoints(e);
                p[u] ^ p[v] == g.label(e).to_u64()
            });
            if ok {
                total += go(i + 1, vertices, due, g, p, visited)?;
            }
        }
        Ok(total)
    }
    let count = go(0, &vertices, &due, g, &mut p, &mut visited)?;
    if count == 0 {
        return Err(Error::Unbalanced);
    }
    Ok(count)
}

/// Which exactness classes an instance falls in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegimeFlags {
    pub depth_at_most_two: bool,
    /// Every variable has at most one free bit.
    pub one_free_bit: bool,
    /// Only equalities, each with zero offset.
    pub eq_zero_offset: bool,
    /// The lift's own per-constraint exactness verdict.
    pub lift_exact: bool,
}

pub fn regime_flags(instance: &Instance) -> RegimeFlags {
    let d = instance.depth();
    RegimeFlags {
        depth_at_most_two: d <= 2,
        one_free_bit: instance.lists().iter().all(|l| l.ell + 1 >= d),
        eq_zero_offset: instance.constraints().iter().all(|c| {
            matches!(c.relation, Relation::Eq { .. })
                && edge_offset(instance, &c.relation).is_ok_and(|o| o == 0)
        }),
        lift_exact: lift(instance).exact_regime,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftEquivalenceReport {
    pub regimes: RegimeFlags,
    pub report: FidelityReport,
}

/// Compares exact satisfiability with the lifted criterion on every
/// constraint subset (or on `samples` random ones when not exhaustive).
pub fn lift_equivalence_suite(
    instance: &Instance,
    exhaustive: bool,
    samples: usize,
    seed: u64,
    budget: &OracleBudget,
) -> Result<LiftEquivalenceReport> {
    let regimes = regime_flags(instance);
    if !exhaustive {
        return Ok(LiftEquivalenceReport {
            regimes,
            report: crate::lifting::lift_fidelity_report(instance, samples, seed),
        });
    }
    budget.check_instance(instance)?;
    let lifted = lift(instance);
    let m = instance.constraint_count();
    let ids: Vec<usize> = instance.constraint_ids().collect();
    let mut report = FidelityReport {
        exact_regime: lifted.exact_regime,
        ..Default::default()
    };
    for mask in 0u64..1 << m {
        let active: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        let direct = direct_satisfiable_subset(instance, &active).is_some();
        report.record(&ids, &active, direct, lifted_accepts(&lifted, &active));
    }
    Ok(LiftEquivalenceReport { regimes, report })
}
