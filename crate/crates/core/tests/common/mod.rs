#![allow(dead_code)]

use cosetlin::gain_graph::GainGraph;
use cosetlin::gf2::BitVector;
use cosetlin::lifting::{depth_mask, Weight};
use cosetlin::{Constraint, DyadicList, Instance, Relation};
use rand::Rng;

pub fn random_label(rng: &mut impl Rng, r: usize) -> BitVector {
    BitVector::from_u64(r, rng.gen::<u64>() & ((1u64 << r) - 1))
}

/// Multigraph with loops and parallel edges and uniform labels. Labels are
/// sparse-ish so that balanced pieces show up often.
pub fn random_gain_graph(
    rng: &mut impl Rng,
    max_n: usize,
    max_m: usize,
    max_r: usize,
) -> GainGraph {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(0..=max_m);
    let r = rng.gen_range(0..=max_r);
    let zero_bias = rng.gen_range(0.0..0.7);
    let mut g = GainGraph::new(n, r);
    for _ in 0..m {
        let u = rng.gen_range(0..n);
        let v = if rng.gen_bool(0.1) {
            u
        } else {
            rng.gen_range(0..n)
        };
        let label = if rng.gen_bool(zero_bias) {
            BitVector::zeros(r)
        } else {
            random_label(rng, r)
        };
        g.add_edge(u, v, label).unwrap();
    }
    g
}

/// Connected components of the selection by union-find.
pub fn component_count(n: usize, vertices: &[usize], edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = vertices.len();
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

#[derive(Clone, Copy, Debug)]
pub enum ListShape {
    /// Any `ℓ ≤ d`.
    Any,
    /// `ℓ ≥ d − 1`.
    OneFreeBit,
    /// `a` drawn from a small pool so equalities with equal offsets are common.
    SharedOffsets,
}

pub fn random_list(rng: &mut impl Rng, d: u32, shape: ListShape) -> DyadicList {
    match shape {
        ListShape::Any => {
            let ell = if rng.gen_bool(0.4) {
                0
            } else {
                rng.gen_range(0..=d)
            };
            DyadicList::new(rng.gen::<u64>() & depth_mask(ell), ell)
        }
        ListShape::OneFreeBit => {
            let ell = rng.gen_range(d - 1..=d);
            DyadicList::new(rng.gen::<u64>() & depth_mask(ell), ell)
        }
        ListShape::SharedOffsets => {
            let ell = rng.gen_range(0..=d);
            DyadicList::new(rng.gen_range(0..2u64) & depth_mask(ell), ell)
        }
    }
}

pub fn random_relation(rng: &mut impl Rng, n: usize, d: u32, anchors: bool) -> Relation {
    let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
    match rng.gen_range(0..if anchors { 4 } else { 3 }) {
        0 => Relation::Eq { u, v },
        1 => Relation::Neg { u, v },
        2 => Relation::Dbl { u, v },
        _ => Relation::Anchor {
            v,
            b: rng.gen::<u64>() & depth_mask(d),
        },
    }
}

/// Unstructured instance over all constraint kinds.
pub fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    d: u32,
    shape: ListShape,
    max_weight: i64,
) -> Instance {
    let lists = (0..n).map(|_| random_list(rng, d, shape)).collect();
    let constraints = (0..m)
        .map(|id| {
            Constraint::weighted(
                id,
                random_relation(rng, n, d, true),
                Weight::from_integer(rng.gen_range(1..=max_weight)),
            )
        })
        .collect();
    Instance::new(d, lists, constraints).unwrap()
}

/// Equalities between variables with equal list offsets.
pub fn random_eq_zero_offset(rng: &mut impl Rng, n: usize, m: usize, d: u32) -> Instance {
    let lists: Vec<DyadicList> = (0..n)
        .map(|_| random_list(rng, d, ListShape::SharedOffsets))
        .collect();
    let mut constraints = Vec::new();
    while constraints.len() < m {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if lists[u].a == lists[v].a {
            constraints.push(Constraint::new(constraints.len(), Relation::Eq { u, v }));
        }
    }
    Instance::new(d, lists, constraints).unwrap()
}
