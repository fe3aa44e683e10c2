use std::collections::VecDeque;

use super::{EdgeId, GainGraph, SubgraphSelection, VertexId};
use crate::gf2::{BitMatrix, BitVector};

/// BFS spanning forest of a selection. Components are grown from the lowest
/// unvisited vertex and edges are scanned in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningForest {
    pub parent_edge: Vec<Option<EdgeId>>,
    pub root: Vec<Option<VertexId>>,
    pub component: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Selected vertices in BFS order; parents precede children.
    pub order: Vec<VertexId>,
    pub component_count: usize,
    nontree: Vec<EdgeId>,
}

impl SpanningForest {
    /// Selected edges outside the forest, ascending by id.
    pub fn nontree_edges(&self) -> &[EdgeId] {
        &self.nontree
    }

    pub fn is_tree_edge(&self, e: EdgeId) -> bool {
        self.parent_edge.contains(&Some(e))
    }

    /// Parent vertex of `v` in its tree.
    pub fn parent(&self, g: &GainGraph, v: VertexId) -> Option<VertexId> {
        self.parent_edge[v].map(|e| g.other_endpoint(e, v))
    }
}

pub fn spanning_forest(g: &GainGraph) -> SpanningForest {
    spanning_forest_of(g, &SubgraphSelection::whole(g))
}

pub fn spanning_forest_of(g: &GainGraph, h: &SubgraphSelection) -> SpanningForest {
    let n = g.vertex_count();
    let mut parent_edge = vec![None; n];
    let mut root = vec![None; n];
    let mut component = vec![None; n];
    let mut depth = vec![0; n];
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; g.edge_count()];
    let mut component_count = 0;
    let mut queue = VecDeque::new();

    for s in 0..n {
        if !h.contains_vertex(s) || component[s].is_some() {
            continue;
        }
        component[s] = Some(component_count);
        root[s] = Some(s);
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &e in g.incident(x) {
                if !h.contains_edge(e) || used[e] {
                    continue;
                }
                let y = g.other_endpoint(e, x);
                if component[y].is_none() {
                    used[e] = true;
                    component[y] = Some(component_count);
                    root[y] = Some(s);
                    parent_edge[y] = Some(e);
                    depth[y] = depth[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        component_count += 1;
    }

    let nontree = h.edge_ids().filter(|&e| !used[e]).collect();
    SpanningForest {
        parent_edge,
        root,
        component,
        depth,
        order,
        component_count,
        nontree,
    }
}

/// `σ(v)`: XOR of labels on the tree path from the root to `v`.
/// Unselected vertices get the zero vector.
pub fn prefix_sums(g: &GainGraph, forest: &SpanningForest) -> Vec<BitVector> {
    let mut sums = vec![BitVector::zeros(g.dim()); g.vertex_count()];
    for &v in &forest.order {
        if let Some(e) = forest.parent_edge[v] {
            let p = g.other_endpoint(e, v);
            let mut s = sums[p].clone();
            s.xor_assign(g.label(e));
            sums[v] = s;
        }
    }
    sums
}

/// `M_Γ` together with the non-tree edge each column belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalCycleMatrix {
    pub matrix: BitMatrix,
    pub nontree_edge_ids: Vec<EdgeId>,
}

/// Column `j` is `λ(f) + σ(u) + σ(v)` for the `j`-th non-tree edge `f = uv`.
pub fn fundamental_cycle_labels(g: &GainGraph, forest: &SpanningForest) -> FundamentalCycleMatrix {
    let sums = prefix_sums(g, forest);
    let columns: Vec<BitVector> = forest
        .nontree_edges()
        .iter()
        .map(|&f| {
            let (u, v) = g.endpoints(f);
            let mut c = g.label(f).clone();
            c.xor_assign(&sums[u]);
            c.xor_assign(&sums[v]);
            c
        })
        .collect();
    FundamentalCycleMatrix {
        matrix: BitMatrix::from_columns(g.dim(), &columns).expect("labels share the dimension"),
        nontree_edge_ids: forest.nontree_edges().to_vec(),
    }
}

/// Edges of the fundamental cycle closed by non-tree edge `f`.
pub fn fundamental_cycle(g: &GainGraph, forest: &SpanningForest, f: EdgeId) -> Vec<EdgeId> {
    let (mut a, mut b) = g.endpoints(f);
    let mut cycle = vec![f];
    while forest.depth[a] > forest.depth[b] {
        let e = forest.parent_edge[a].expect("non-root has a parent");
        cycle.push(e);
        a = g.other_endpoint(e, a);
    }
    while forest.depth[b] > forest.depth[a] {
        let e = forest.parent_edge[b].expect("non-root has a parent");
        cycle.push(e);
        b = g.other_endpoint(e, b);
    }
    while a != b {
        let ea = forest.parent_edge[a].expect("non-root has a parent");
        let eb = forest.parent_edge[b].expect("non-root has a parent");
        cycle.push(ea);
        cycle.push(eb);
        a = g.other_endpoint(ea, a);
        b = g.other_endpoint(eb, b);
    }
    cycle
}
