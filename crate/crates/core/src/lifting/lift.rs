use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    active_depths, depth_mask, direct_satisfiable_subset, normalize_lists, DyadicList, Instance,
    Kind, Relation,
};
use crate::gain_graph::{prefix_sums, spanning_forest_of, EdgeId, GainGraph, SubgraphSelection};
use crate::gf2::BitVector;

fn intersect(x: DyadicList, y: DyadicList) -> Option<DyadicList> {
    let low = x.ell.min(y.ell);
    if (x.a ^ y.a) & depth_mask(low) != 0 {
        return None;
    }
    Some(if x.ell >= y.ell { x } else { y }.normalized())
}

/// Values of `x_v` that have a partner `x_u` in `L_u` under the relation.
fn feasible_v(rel: &Relation, lu: DyadicList, lv: DyadicList) -> Option<DyadicList> {
    match rel.kind() {
        Kind::Eq => intersect(lv, lu),
        Kind::Neg => intersect(
            lv,
            DyadicList::new(lu.a.wrapping_neg() & depth_mask(lu.ell), lu.ell),
        ),
        Kind::Dbl => {
            if lu.ell == 0 {
                Some(lv)
            } else if lu.a & 1 == 1 {
                None
            } else {
                intersect(lv, DyadicList::new(lu.a >> 1, lu.ell - 1))
            }
        }
        Kind::Anchor => unreachable!("anchors are unary"),
    }
}

/// Values of `x_u` that have a partner `x_v` in `L_v`.
fn feasible_u(rel: &Relation, lu: DyadicList, lv: DyadicList, d: u32) -> Option<DyadicList> {
    match rel.kind() {
        Kind::Eq => intersect(lu, lv),
        Kind::Neg => intersect(
            lu,
            DyadicList::new(lv.a.wrapping_neg() & depth_mask(lv.ell), lv.ell),
        ),
        Kind::Dbl => {
            let ell = (lv.ell + 1).min(d);
            intersect(lu, DyadicList::new((lv.a << 1) & depth_mask(ell), ell))
        }
        Kind::Anchor => unreachable!("anchors are unary"),
    }
}

/// How one constraint enters the lifted graph.
#[derive(Clone, Debug, PartialEq, Eq)]
struct EdgePlan {
    /// Endpoints with `None` standing for the anchor vertex.
    ends: (Option<usize>, Option<usize>),
    /// Label indexed by depth, length `d`.
    label: BitVector,
    exact: bool,
}

/// Lift of one constraint, or `None` when no assignment of its variables
/// within their lists satisfies it.
///
/// Each variable gets the potential `p(v) = x_v XOR a_v`, whose low `ℓ_v`
/// bits vanish on the list. The label is `p(u) XOR p(v)` at a canonical
/// satisfying pair, with endpoints that the relation cannot move (constants,
/// or the halved side of a doubling when only its top bit is free) replaced
/// by the anchor vertex. The lift is exact for the constraint when every
/// satisfying pair yields the same label.
fn plan(instance: &Instance, rel: &Relation) -> Option<EdgePlan> {
    let d = instance.depth();
    let mask = depth_mask(d);
    let bits = |x: u64| BitVector::from_u64(d as usize, x);
    match *rel {
        Relation::Anchor { v, b } => {
            let lv = instance.list(v);
            if !lv.contains(b) {
                return None;
            }
            let involved = lv.ell < d;
            Some(EdgePlan {
                ends: (involved.then_some(v), None),
                label: bits(if involved { b ^ lv.a } else { 0 }),
                exact: true,
            })
        }
        Relation::Eq { u, v } | Relation::Neg { u, v } | Relation::Dbl { u, v } if u == v => {
            let l = instance.list(u);
            let involved = l.ell < d;
            let at = |x: Option<usize>| x.filter(|_| involved);
            match rel.kind() {
                Kind::Eq => Some(EdgePlan {
                    ends: (at(Some(u)), at(Some(u))),
                    label: bits(0),
                    exact: true,
                }),
                Kind::Neg => {
                    // 2x = 0: x ∈ {0, 2^(d-1)}.
                    let top = 1u64 << (d - 1);
                    if !l.contains(0) && !l.contains(top) {
                        return None;
                    }
                    if l.ell + 1 >= d {
                        Some(EdgePlan {
                            ends: (None, None),
                            label: bits(0),
                            exact: true,
                        })
                    } else {
                        Some(EdgePlan {
                            ends: (Some(u), None),
                            label: bits(0),
                            exact: false,
                        })
                    }
                }
                Kind::Dbl => {
                    // x = 2x: x = 0.
                    if !l.contains(0) {
                        return None;
                    }
                    Some(EdgePlan {
                        ends: (at(Some(u)), None),
                        label: bits(0),
                        exact: true,
                    })
                }
                Kind::Anchor => unreachable!(),
            }
        }
        Relation::Eq { u, v } | Relation::Neg { u, v } | Relation::Dbl { u, v } => {
            let (lu, lv) = (instance.list(u), instance.list(v));
            let fv = feasible_v(rel, lu, lv)?;
            let xv = fv.a;
            let xu = match rel.kind() {
                Kind::Eq => xv,
                Kind::Neg => xv.wrapping_neg() & mask,
                _ => (xv << 1) & mask,
            };
            debug_assert!(lu.contains(xu) && lv.contains(xv) && rel.holds_pair(xu, xv, d));
            let inv_u = lu.ell < d;
            let inv_v = match rel.kind() {
                Kind::Dbl => lv.ell + 1 < d,
                _ => lv.ell < d,
            };
            let mut label = 0;
            if inv_u {
                label ^= xu ^ lu.a;
            }
            if inv_v {
                label ^= xv ^ lv.a;
            }
            let exact = match rel.kind() {
                Kind::Eq => true,
                // x XOR -x depends only on the lowest set bit of x; it is fixed
                // when x has a forced nonzero low part or at most one free bit.
                Kind::Neg => fv.a != 0 || fv.ell + 1 >= d,
                _ => !inv_v,
            };
            Some(EdgePlan {
                ends: (inv_u.then_some(u), inv_v.then_some(v)),
                label: bits(label),
                exact,
            })
        }
    }
}

/// Depth-indexed parity defect of a constraint: bit `t` of `p(u) XOR p(v)` at
/// the canonical satisfying pair. `None` when the constraint is infeasible on
/// its own lists.
pub fn defect_vector(instance: &Instance, relation: &Relation) -> Option<BitVector> {
    plan(&normalize_lists(instance), relation).map(|p| p.label)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    /// The normalized instance. Lists are not refined; see `implied_lists`.
    pub instance: Instance,
    /// Ids of constraints unsatisfiable on their own lists.
    pub mandatory_deletions: Vec<usize>,
    /// `(constraint id, variable, list)` whenever a constraint alone confines
    /// a variable to a strictly smaller dyadic list.
    pub implied_lists: Vec<(usize, usize, DyadicList)>,
}

/// Normalizes lists and separates constraints infeasible in isolation.
pub fn preprocess(instance: &Instance) -> Preprocessed {
    let inst = normalize_lists(instance);
    let d = inst.depth();
    let mut mandatory = Vec::new();
    let mut implied = Vec::new();
    for c in inst.constraints() {
        if plan(&inst, &c.relation).is_none() {
            mandatory.push(c.id);
            continue;
        }
        match c.relation {
            Relation::Anchor { v, b } => {
                if inst.list(v).ell < d {
                    implied.push((c.id, v, DyadicList::new(b, d)));
                }
            }
            rel @ (Relation::Eq { u, v } | Relation::Neg { u, v } | Relation::Dbl { u, v })
                if u != v =>
            {
                let (lu, lv) = (inst.list(u), inst.list(v));
                if let Some(f) = feasible_u(&rel, lu, lv, d).filter(|f| f.ell > lu.ell) {
                    implied.push((c.id, u, f));
                }
                if let Some(f) = feasible_v(&rel, lu, lv).filter(|f| f.ell > lv.ell) {
                    implied.push((c.id, v, f));
                }
            }
            _ => {}
        }
    }
    mandatory.sort_unstable();
    Preprocessed {
        instance: inst,
        mandatory_deletions: mandatory,
        implied_lists: implied,
    }
}

/// The lifted gain graph `Γ(I)`: one vertex per variable plus the anchor
/// vertex `⋆` (the last vertex), one edge per feasible constraint. A
/// constraint whose balance condition is not equivalent to it becomes a zero
/// loop at `⋆`, so balance is necessary for satisfiability everywhere and
/// sufficient when every edge is exact.
///
/// Label coordinate `c` corresponds to depth `depth - ambient_dim + c`.
#[derive(Clone, Debug)]
pub struct LiftedGraph {
    pub graph: GainGraph,
    pub anchor_vertex: usize,
    pub depth: u32,
    pub ambient_dim: usize,
    /// Constraint ids in instance order; other per-constraint vectors use these positions.
    pub constraint_ids: Vec<usize>,
    pub edge_of_constraint: Vec<Option<EdgeId>>,
    /// Position of the constraint behind each edge.
    pub constraint_of_edge: Vec<usize>,
    pub mandatory_deletions: Vec<usize>,
    pub active_depths: Vec<Vec<u32>>,
    /// Whether the edge's balance condition is equivalent to its constraint.
    pub exact_edges: Vec<bool>,
    pub exact_regime: bool,
    /// Number of low depths pinned to zero at each vertex; `depth` for `⋆`.
    pub pin_levels: Vec<u32>,
}

impl LiftedGraph {
    pub fn is_mandatory(&self, position: usize) -> bool {
        self.edge_of_constraint[position].is_none()
    }

    /// Constraint ids behind a set of edges, ascending.
    pub fn constraints_of_edges(&self, edges: impl IntoIterator<Item = EdgeId>) -> Vec<usize> {
        let mut ids: Vec<usize> = edges
            .into_iter()
            .map(|e| self.constraint_ids[self.constraint_of_edge[e]])
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Whether balance of a selection alone decides the lifted criterion:
    /// every edge is exact and no variable carries pins inside the label range.
    pub fn balance_decides(&self) -> bool {
        self.exact_regime && (0..self.anchor_vertex).all(|w| self.pin_mask(w) == 0)
    }

    /// Bitmask of label coordinates pinned at vertex `w`.
    fn pin_mask(&self, w: usize) -> u64 {
        let offset = self.depth as usize - self.ambient_dim;
        let pinned = (self.pin_levels[w] as usize)
            .saturating_sub(offset)
            .min(self.ambient_dim);
        if pinned >= 64 {
            u64::MAX
        } else {
            (1u64 << pinned) - 1
        }
    }
}

/// Builds `Γ(I)` after normalizing and separating mandatory deletions.
pub fn lift(instance: &Instance) -> LiftedGraph {
    let pre = preprocess(instance);
    let inst = &pre.instance;
    let d = inst.depth();
    let n = inst.variable_count();
    let star = n;

    let plans: Vec<Option<EdgePlan>> = inst
        .constraints()
        .iter()
        .map(|c| plan(inst, &c.relation))
        .collect();
    let min_level = plans
        .iter()
        .flatten()
        .filter(|p| p.exact)
        .flat_map(|p| [p.ends.0, p.ends.1])
        .flatten()
        .map(|w| inst.list(w).ell)
        .min();
    let ambient = min_level.map_or(0, |l| (d - l) as usize);
    let offset = d as usize - ambient;

    let mut graph = GainGraph::new(n + 1, ambient);
    let mut edge_of_constraint = Vec::with_capacity(plans.len());
    let mut constraint_of_edge = Vec::new();
    let mut exact_edges = Vec::with_capacity(plans.len());
    for (pos, p) in plans.iter().enumerate() {
        match p {
            Some(p) => {
                // An inexact edge would reject some satisfying assignments, so
                // it is kept only as a zero loop at `⋆` that no cycle sees.
                let (a, b, label) = if p.exact {
                    debug_assert!(p.label.slice(0, offset).is_zero());
                    let label = p.label.slice(offset, d as usize);
                    (p.ends.0.unwrap_or(star), p.ends.1.unwrap_or(star), label)
                } else {
                    (star, star, BitVector::zeros(ambient))
                };
                let e = graph
                    .add_edge(a, b, label)
                    .expect("endpoints and dimension are valid");
                edge_of_constraint.push(Some(e));
                constraint_of_edge.push(pos);
                exact_edges.push(p.exact);
            }
            None => {
                edge_of_constraint.push(None);
                exact_edges.push(true);
            }
        }
    }

    let active = inst
        .constraints()
        .iter()
        .map(|c| match c.relation {
            Relation::Anchor { v, .. } => (inst.list(v).ell..d).collect(),
            rel => active_depths(inst, &rel).expect("binary"),
        })
        .collect();
    let mut pin_levels: Vec<u32> = inst.lists().iter().map(|l| l.ell).collect();
    pin_levels.push(d);

    LiftedGraph {
        graph,
        anchor_vertex: star,
        depth: d,
        ambient_dim: ambient,
        constraint_ids: inst.constraint_ids().collect(),
        edge_of_constraint,
        constraint_of_edge,
        mandatory_deletions: pre.mandatory_deletions,
        active_depths: active,
        exact_regime: exact_edges.iter().all(|&x| x),
        exact_edges,
        pin_levels,
    }
}

/// The lifted satisfiability criterion for the constraints flagged in
/// `active` (by position): no mandatory deletion is present, the selected
/// edges are balanced, and in every component all vertices pinned at a depth
/// (including `⋆`) carry the same potential bit there.
pub fn lifted_accepts(lifted: &LiftedGraph, active: &[bool]) -> bool {
    let mut edges = Vec::new();
    for (pos, &on) in active.iter().enumerate() {
        if on {
            match lifted.edge_of_constraint[pos] {
                Some(e) => edges.push(e),
                None => return false,
            }
        }
    }
    let g = &lifted.graph;
    let sel = SubgraphSelection::spanning(g, edges).expect("valid edge ids");
    let forest = spanning_forest_of(g, &sel);
    let sums = prefix_sums(g, &forest);
    for &e in forest.nontree_edges() {
        let (u, v) = g.endpoints(e);
        let mut c = g.label(e).clone();
        c.xor_assign(&sums[u]);
        c.xor_assign(&sums[v]);
        if !c.is_zero() {
            return false;
        }
    }
    // Per component: coordinates seen pinned so far and their common value.
    let mut seen = vec![0u64; forest.component_count];
    let mut value = vec![0u64; forest.component_count];
    for (w, sum) in sums.iter().enumerate() {
        let pins = lifted.pin_mask(w);
        if pins == 0 {
            continue;
        }
        let comp = forest.component[w].expect("every vertex is selected");
        let p = sum.to_u64();
        if (p ^ value[comp]) & pins & seen[comp] != 0 {
            return false;
        }
        value[comp] |= p & pins & !seen[comp];
        seen[comp] |= pins;
    }
    true
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FidelityReport {
    pub samples: usize,
    pub agreements: usize,
    /// Satisfiable subsets the lift rejects.
    pub lift_rejects_satisfiable: usize,
    /// Unsatisfiable subsets the lift accepts.
    pub lift_accepts_unsatisfiable: usize,
    /// Constraint ids of each disagreeing subset.
    pub disagreements: Vec<Vec<usize>>,
    pub exact_regime: bool,
}

impl FidelityReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.agreements as f64 / self.samples as f64
        }
    }

    pub(crate) fn record(&mut self, ids: &[usize], active: &[bool], direct: bool, lifted: bool) {
        self.samples += 1;
        if direct == lifted {
            self.agreements += 1;
            return;
        }
        if direct {
            self.lift_rejects_satisfiable += 1;
        } else {
            self.lift_accepts_unsatisfiable += 1;
        }
        self.disagreements.push(
            ids.iter()
                .zip(active)
                .filter(|(_, &a)| a)
                .map(|(&id, _)| id)
                .collect(),
        );
    }
}

/// Compares exact satisfiability with the lifted criterion on `samples`
/// uniformly random constraint subsets.
pub fn lift_fidelity_report(instance: &Instance, samples: usize, seed: u64) -> FidelityReport {
    let lifted = lift(instance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = instance.constraint_count();
    let ids: Vec<usize> = instance.constraint_ids().collect();
    let mut report = FidelityReport {
        exact_regime: lifted.exact_regime,
        ..Default::default()
    };
    for _ in 0..samples {
        let active: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        let direct = direct_satisfiable_subset(instance, &active).is_some();
        report.record(&ids, &active, direct, lifted_accepts(&lifted, &active));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::direct_satisfiable;
    use crate::lifting::tests::inst;
    use crate::lifting::Relation::*;

    fn bv(s: &str) -> BitVector {
        BitVector::parse(s).unwrap()
    }

    fn sweep(i: &Instance) -> FidelityReport {
        let lifted = lift(i);
        let m = i.constraint_count();
        let ids: Vec<usize> = i.constraint_ids().collect();
        let mut r = FidelityReport {
            exact_regime: lifted.exact_regime,
            ..Default::default()
        };
        for mask in 0u32..1 << m {
            let active: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
            let direct = direct_satisfiable_subset(i, &active).is_some();
            r.record(&ids, &active, direct, lifted_accepts(&lifted, &active));
        }
        r
    }

    #[test]
    fn defect_examples() {
        // Depth-indexed: string position t is depth t.
        let neg = inst(2, &[(1, 1), (1, 1)], &[]);
        assert_eq!(defect_vector(&neg, &Neg { u: 0, v: 1 }), Some(bv("01")));
        let eq = inst(2, &[(1, 1), (1, 1)], &[]);
        assert_eq!(defect_vector(&eq, &Eq { u: 0, v: 1 }), Some(bv("00")));
        let bad = inst(2, &[(1, 1), (0, 1)], &[]);
        assert_eq!(defect_vector(&bad, &Eq { u: 0, v: 1 }), None);
    }

    #[test]
    fn preprocess_examples() {
        let i = inst(2, &[(1, 1), (0, 1)], &[Eq { u: 0, v: 1 }]);
        assert_eq!(preprocess(&i).mandatory_deletions, vec![0]);

        let j = inst(2, &[(0, 0), (0, 0)], &[Dbl { u: 0, v: 1 }]);
        let p = preprocess(&j);
        assert!(p.mandatory_deletions.is_empty());
        assert_eq!(p.implied_lists, vec![(0, 0, DyadicList::new(0, 1))]);
        assert_eq!(p.instance, j);

        let k = inst(2, &[(0, 0), (0, 0)], &[Eq { u: 0, v: 1 }]);
        let p = preprocess(&k);
        assert_eq!(p.instance, k);
        assert!(p.mandatory_deletions.is_empty() && p.implied_lists.is_empty());
    }

    #[test]
    fn lift_examples() {
        let a = inst(2, &[(1, 1)], &[Anchor { v: 0, b: 3 }]);
        let l = lift(&a);
        assert_eq!(l.ambient_dim, 1);
        assert_eq!(l.graph.endpoints(0), (0, l.anchor_vertex));
        assert_eq!(l.graph.label(0), &bv("1"));

        let zero = inst(
            3,
            &[(0, 0), (0, 0), (0, 0)],
            &[Eq { u: 0, v: 1 }, Eq { u: 1, v: 2 }, Eq { u: 2, v: 0 }],
        );
        let l = lift(&zero);
        assert!(l.graph.labels().iter().all(BitVector::is_zero));
        assert!(lifted_accepts(&l, &[true; 3]));

        let two_cycle = inst(
            2,
            &[(1, 1), (1, 1)],
            &[Eq { u: 0, v: 1 }, Neg { u: 0, v: 1 }],
        );
        let l = lift(&two_cycle);
        assert!(!lifted_accepts(&l, &[true, true]));
        assert!(direct_satisfiable_subset(&two_cycle, &[true, true]).is_none());
        assert!(lifted_accepts(&l, &[true, false]) && lifted_accepts(&l, &[false, true]));
    }

    #[test]
    fn mandatory_anchor_has_no_edge() {
        let a = inst(2, &[(1, 1)], &[Anchor { v: 0, b: 2 }]);
        let l = lift(&a);
        assert_eq!(l.mandatory_deletions, vec![0]);
        assert_eq!(l.edge_of_constraint, vec![None]);
        assert!(!lifted_accepts(&l, &[true]));
        assert!(lifted_accepts(&l, &[false]));
    }

    #[test]
    fn labels_with_borrows_stay_balanced() {
        // x = 1 everywhere satisfies this triangle although c_e has borrows.
        let i = inst(
            2,
            &[(1, 1), (0, 0), (1, 1)],
            &[Eq { u: 0, v: 1 }, Eq { u: 1, v: 2 }, Eq { u: 2, v: 0 }],
        );
        assert!(direct_satisfiable(&i).is_some());
        assert!(lifted_accepts(&lift(&i), &[true; 3]));
    }

    #[test]
    fn pins_conflict_through_a_path() {
        // Two variables with fixed, different high bits joined by a free one.
        let i = inst(
            2,
            &[(1, 2), (0, 0), (3, 2)],
            &[Eq { u: 0, v: 1 }, Eq { u: 1, v: 2 }],
        );
        let l = lift(&i);
        assert!(l.exact_regime);
        assert!(!lifted_accepts(&l, &[true, true]));
        assert!(lifted_accepts(&l, &[true, false]));
    }

    #[test]
    fn exactness_flags() {
        let full_neg = inst(3, &[(0, 0), (0, 0)], &[Neg { u: 0, v: 1 }]);
        assert!(!lift(&full_neg).exact_regime);
        let odd_neg = inst(3, &[(1, 1), (0, 0)], &[Neg { u: 0, v: 1 }]);
        assert!(lift(&odd_neg).exact_regime);
        let dbl = inst(3, &[(0, 0), (0, 0)], &[Dbl { u: 0, v: 1 }]);
        assert!(!lift(&dbl).exact_regime);
        let dbl_pinned = inst(3, &[(0, 0), (1, 2)], &[Dbl { u: 0, v: 1 }]);
        assert!(lift(&dbl_pinned).exact_regime);
    }

    #[test]
    fn inexact_edges_become_loops_at_star() {
        // x = -x with a full list allows 0 and 2; the anchor picks 2.
        let i = inst(2, &[(0, 0)], &[Neg { u: 0, v: 0 }, Anchor { v: 0, b: 2 }]);
        let l = lift(&i);
        let e = l.edge_of_constraint[0].unwrap();
        assert_eq!(l.graph.endpoints(e), (l.anchor_vertex, l.anchor_vertex));
        assert!(l.graph.label(e).is_zero());
        assert!(!l.exact_edges[0]);
        assert!(lifted_accepts(&l, &[true, true]));
        assert!(direct_satisfiable(&i).is_some());
    }

    #[test]
    fn eq_only_sweeps_agree() {
        let i = inst(
            3,
            &[(1, 1), (0, 0), (5, 3), (2, 2)],
            &[
                Eq { u: 0, v: 1 },
                Eq { u: 1, v: 2 },
                Eq { u: 2, v: 3 },
                Eq { u: 3, v: 0 },
                Anchor { v: 1, b: 5 },
                Eq { u: 1, v: 1 },
            ],
        );
        let r = sweep(&i);
        assert!(r.exact_regime);
        assert_eq!(r.agreements, r.samples, "{r:?}");
    }

    #[test]
    fn d2_counterexample_is_inexact() {
        // Every pair is satisfiable, all three together are not, and the
        // triple has the same cycles as the Eq/Neg pair.
        let i = inst(
            2,
            &[(0, 0), (0, 0)],
            &[Eq { u: 0, v: 1 }, Neg { u: 0, v: 1 }, Anchor { v: 0, b: 1 }],
        );
        let r = sweep(&i);
        assert!(!r.exact_regime);
        assert_eq!(r.samples - r.agreements, 1);
    }

    #[test]
    fn fidelity_report_is_seeded() {
        let i = inst(
            3,
            &[(0, 0), (0, 0), (1, 1)],
            &[Neg { u: 0, v: 1 }, Dbl { u: 1, v: 2 }, Eq { u: 0, v: 2 }],
        );
        assert_eq!(
            lift_fidelity_report(&i, 50, 3),
            lift_fidelity_report(&i, 50, 3)
        );
        assert_eq!(lift_fidelity_report(&i, 50, 3).samples, 50);
    }
}
