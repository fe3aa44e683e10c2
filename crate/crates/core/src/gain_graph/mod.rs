//! Linear gain graphs over GF(2)^r.
//!
//! A gain graph is an undirected multigraph (parallel edges and self-loops
//! allowed) whose edges carry label vectors of a common length `r`. The label
//! of a cycle is the XOR of its edge labels, and a subgraph is balanced when
//! every cycle label vanishes. Orientation never matters in characteristic two.

mod compress;
mod forest;

pub use compress::{compress_labels, Compression};
pub use forest::{
    fundamental_cycle, fundamental_cycle_labels, prefix_sums, spanning_forest, spanning_forest_of,
    FundamentalCycleMatrix, SpanningForest,
};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GainGraph {
    vertex_count: usize,
    dim: usize,
    endpoints: Vec<(VertexId, VertexId)>,
    labels: Vec<BitVector>,
    incident: Vec<Vec<EdgeId>>,
}

impl GainGraph {
    /// An edgeless graph on `vertex_count` vertices with labels in GF(2)^dim.
    pub fn new(vertex_count: usize, dim: usize) -> Self {
        Self {
            vertex_count,
            dim,
            endpoints: Vec::new(),
            labels: Vec::new(),
            incident: vec![Vec::new(); vertex_count],
        }
    }

    pub fn from_edges<I>(vertex_count: usize, dim: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, BitVector)>,
    {
        let mut g = Self::new(vertex_count, dim);
        for (u, v, label) in edges {
            g.add_edge(u, v, label)?;
        }
        Ok(g)
    }

    /// Appends an edge; ids are assigned densely in insertion order.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, label: BitVector) -> Result<EdgeId> {
        for x in [u, v] {
            if x >= self.vertex_count {
                return Err(Error::IndexOutOfRange {
                    index: x,
                    limit: self.vertex_count,
                });
            }
        }
        if label.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "label of length {} in a graph of dimension {}",
                label.len(),
                self.dim
            )));
        }
        let id = self.endpoints.len();
        self.endpoints.push((u, v));
        self.labels.push(label);
        self.incident[u].push(id);
        if u != v {
            self.incident[v].push(id);
        }
        Ok(id)
    }

    /// Same vertices and edges, new labels (all of length `dim`).
    pub fn relabel(&self, dim: usize, labels: Vec<BitVector>) -> Result<Self> {
        if labels.len() != self.edge_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} edges",
                labels.len(),
                self.edge_count()
            )));
        }
        if let Some(bad) = labels.iter().find(|l| l.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "label of length {} but dimension {dim}",
                bad.len()
            )));
        }
        Ok(Self {
            vertex_count: self.vertex_count,
            dim,
            endpoints: self.endpoints.clone(),
            labels,
            incident: self.incident.clone(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    /// Label dimension `r`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.endpoints[e]
    }

    pub fn label(&self, e: EdgeId) -> &BitVector {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[BitVector] {
        &self.labels
    }

    /// Incident edges of `v` in insertion order; a self-loop appears once.
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v]
    }

    pub fn other_endpoint(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        let (a, b) = self.endpoints[e];
        a == b
    }

    /// `Λ`: the `r × |E|` matrix whose columns are edge labels.
    pub fn label_matrix(&self) -> BitMatrix {
        BitMatrix::from_columns(self.dim, &self.labels).expect("labels share the dimension")
    }

    /// `B`: the `|V| × |E|` incidence matrix over GF(2). Self-loops give zero columns.
    pub fn incidence_matrix(&self) -> BitMatrix {
        let mut b = BitMatrix::zeros(self.vertex_count, self.edge_count());
        for (e, &(u, v)) in self.endpoints.iter().enumerate() {
            if u != v {
                b.set(u, e, true);
                b.set(v, e, true);
            }
        }
        b
    }
}

/// A subgraph `H`: a vertex set plus edges whose endpoints both lie in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphSelection {
    vertices: Vec<bool>,
    edges: Vec<bool>,
}

impl SubgraphSelection {
    pub fn whole(g: &GainGraph) -> Self {
        Self {
            vertices: vec![true; g.vertex_count()],
            edges: vec![true; g.edge_count()],
        }
    }

    pub fn new<V, E>(g: &GainGraph, vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = VertexId>,
        E: IntoIterator<Item = EdgeId>,
    {
        let mut vmask = vec![false; g.vertex_count()];
        for v in vertices {
            *vmask.get_mut(v).ok_or(Error::IndexOutOfRange {
                index: v,
                limit: g.vertex_count(),
            })? = true;
        }
        let mut emask = vec![false; g.edge_count()];
        for e in edges {
            *emask.get_mut(e).ok_or(Error::IndexOutOfRange {
                index: e,
                limit: g.edge_count(),
            })? = true;
        }
        Self::from_masks(g, vmask, emask)
    }

    pub fn from_masks(g: &GainGraph, vertices: Vec<bool>, edges: Vec<bool>) -> Result<Self> {
        if vertices.len() != g.vertex_count() || edges.len() != g.edge_count() {
            return Err(Error::InvalidSelection(
                "mask sizes do not match the graph".into(),
            ));
        }
        for (e, _) in edges.iter().enumerate().filter(|(_, &on)| on) {
            let (u, v) = g.endpoints(e);
            if !vertices[u] || !vertices[v] {
                return Err(Error::InvalidSelection(format!(
                    "edge {e} has an endpoint outside the vertex set"
                )));
            }
        }
        Ok(Self { vertices, edges })
    }

    /// All vertices, only the given edges.
    pub fn spanning<E>(g: &GainGraph, edges: E) -> Result<Self>
    where
        E: IntoIterator<Item = EdgeId>,
    {
        Self::new(g, 0..g.vertex_count(), edges)
    }

    /// `G[vertices]` with every induced edge.
    pub fn induced<V>(g: &GainGraph, vertices: V) -> Result<Self>
    where
        V: IntoIterator<Item = VertexId>,
    {
        let mut s = Self::new(g, vertices, std::iter::empty())?;
        for e in 0..g.edge_count() {
            let (u, v) = g.endpoints(e);
            s.edges[e] = s.vertices[u] && s.vertices[v];
        }
        Ok(s)
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices[v]
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        self.edges[e]
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn vertex_mask(&self) -> &[bool] {
        &self.vertices
    }

    pub fn edge_mask(&self) -> &[bool] {
        &self.edges
    }
}

/// Vertex potential `p` with `λ(uv) = p(u) + p(v)` on every selected edge.
/// Vertices outside the selection have no value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential {
    pub values: Vec<Option<BitVector>>,
}

impl Potential {
    pub fn get(&self, v: VertexId) -> Option<&BitVector> {
        self.values[v].as_ref()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PotentialOutcome {
    Balanced(Potential),
    /// Edges of one fundamental cycle whose label is nonzero.
    Unbalanced {
        cycle: Vec<EdgeId>,
    },
}

/// Balance test through the fundamental cycles of a spanning forest of `h`.
pub fn is_balanced(g: &GainGraph, h: &SubgraphSelection) -> bool {
    matches!(extract_potential(g, h), PotentialOutcome::Balanced(_))
}

/// Root-path prefix sums as a potential, or a witness cycle when `h` is unbalanced.
/// Each component's root (its lowest vertex) gets the zero vector.
pub fn extract_potential(g: &GainGraph, h: &SubgraphSelection) -> PotentialOutcome {
    let forest = spanning_forest_of(g, h);
    let sums = prefix_sums(g, &forest);
    for &e in forest.nontree_edges() {
        let (u, v) = g.endpoints(e);
        let mut cycle_label = g.label(e).clone();
        cycle_label.xor_assign(&sums[u]);
        cycle_label.xor_assign(&sums[v]);
        if !cycle_label.is_zero() {
            return PotentialOutcome::Unbalanced {
                cycle: fundamental_cycle(g, &forest, e),
            };
        }
    }
    let values = sums
        .into_iter()
        .enumerate()
        .map(|(v, s)| h.contains_vertex(v).then_some(s))
        .collect();
    PotentialOutcome::Balanced(Potential { values })
}

/// `|δ_G(V(H))| + |E(G[V(H)]) \ E(H)|`: edges to delete to carve `h` out of `g`.
pub fn cost(g: &GainGraph, h: &SubgraphSelection) -> usize {
    (0..g.edge_count())
        .filter(|&e| {
            let (u, v) = g.endpoints(e);
            match (h.contains_vertex(u), h.contains_vertex(v)) {
                (true, true) => !h.contains_edge(e),
                (false, false) => false,
                _ => true,
            }
        })
        .count()
}

/// The scalar gain graph keeping only coordinate `i` of every label.
pub fn coordinate_projection(g: &GainGraph, i: usize) -> Result<GainGraph> {
    if i >= g.dim() {
        return Err(Error::IndexOutOfRange {
            index: i,
            limit: g.dim(),
        });
    }
    let labels = g
        .labels()
        .iter()
        .map(|l| BitVector::from_bits(&[l.get(i)]))
        .collect();
    g.relabel(1, labels)
}

/// `ρ`: rank of the fundamental-cycle label matrix.
pub fn cycle_label_rank(g: &GainGraph) -> usize {
    let forest = spanning_forest(g);
    fundamental_cycle_labels(g, &forest).matrix.rank()
}

/// `C_G`: the `|E| × μ` matrix whose columns are incidence vectors of the
/// fundamental cycles of the BFS spanning forest.
pub fn cycle_basis_matrix(g: &GainGraph) -> BitMatrix {
    let forest = spanning_forest(g);
    let columns: Vec<BitVector> = forest
        .nontree_edges()
        .iter()
        .map(|&f| {
            let mut c = BitVector::zeros(g.edge_count());
            for e in fundamental_cycle(g, &forest, f) {
                c.set(e, true);
            }
            c
        })
        .collect();
    BitMatrix::from_columns(g.edge_count(), &columns).expect("columns have |E| rows")
}

/// Ranks involved in the cut-space identity `ρ = rank[B; Λ] − rank B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankIdentity {
    pub rho: usize,
    pub rank_stacked: usize,
    pub rank_incidence: usize,
}

impl RankIdentity {
    pub fn holds(&self) -> bool {
        self.rho + self.rank_incidence == self.rank_stacked
    }
}

pub fn stacked_rank_identity(g: &GainGraph) -> RankIdentity {
    let b = g.incidence_matrix();
    let stacked = b.vstack(&g.label_matrix()).expect("both have |E| columns");
    RankIdentity {
        rho: cycle_label_rank(g),
        rank_stacked: stacked.rank(),
        rank_incidence: b.rank(),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn bv(s: &str) -> BitVector {
        BitVector::parse(s).unwrap()
    }

    pub(crate) fn graph(n: usize, dim: usize, edges: &[(usize, usize, &str)]) -> GainGraph {
        GainGraph::from_edges(n, dim, edges.iter().map(|&(u, v, l)| (u, v, bv(l)))).unwrap()
    }

    fn balanced_triangle() -> GainGraph {
        graph(3, 2, &[(0, 1, "10"), (1, 2, "10"), (0, 2, "00")])
    }

    fn theta() -> GainGraph {
        graph(2, 3, &[(0, 1, "100"), (0, 1, "010"), (0, 1, "001")])
    }

    #[test]
    fn balance_examples() {
        let g = balanced_triangle();
        assert!(is_balanced(&g, &SubgraphSelection::whole(&g)));
        let bad = graph(3, 2, &[(0, 1, "10"), (1, 2, "10"), (0, 2, "11")]);
        assert!(!is_balanced(&bad, &SubgraphSelection::whole(&bad)));
        let forest = graph(4, 1, &[(0, 1, "1"), (1, 2, "1"), (1, 3, "1")]);
        assert!(is_balanced(&forest, &SubgraphSelection::whole(&forest)));
    }

    #[test]
    fn potential_examples() {
        let g = balanced_triangle();
        let PotentialOutcome::Balanced(p) = extract_potential(&g, &SubgraphSelection::whole(&g))
        else {
            panic!("triangle is balanced");
        };
        assert_eq!(p.get(0), Some(&bv("00")));
        assert_eq!(p.get(1), Some(&bv("10")));
        assert_eq!(p.get(2), Some(&bv("00")));
        for e in 0..g.edge_count() {
            let (u, v) = g.endpoints(e);
            assert_eq!(&p.get(u).unwrap().xor(p.get(v).unwrap()), g.label(e));
        }

        let zero = graph(3, 2, &[(0, 1, "00"), (1, 2, "00")]);
        let PotentialOutcome::Balanced(p) =
            extract_potential(&zero, &SubgraphSelection::whole(&zero))
        else {
            panic!()
        };
        assert!(p.values.iter().all(|x| x.as_ref().unwrap().is_zero()));

        let bad = graph(3, 2, &[(0, 1, "10"), (1, 2, "10"), (0, 2, "11")]);
        match extract_potential(&bad, &SubgraphSelection::whole(&bad)) {
            PotentialOutcome::Unbalanced { mut cycle } => {
                cycle.sort();
                assert_eq!(cycle, vec![0, 1, 2]);
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn cost_examples() {
        let tri = balanced_triangle();
        assert_eq!(cost(&tri, &SubgraphSelection::whole(&tri)), 0);
        let one = SubgraphSelection::new(&tri, [0], []).unwrap();
        assert_eq!(cost(&tri, &one), 2);
        let th = theta();
        let keep_one = SubgraphSelection::new(&th, [0, 1], [0]).unwrap();
        assert_eq!(cost(&th, &keep_one), 2);
    }

    #[test]
    fn selection_rejects_dangling_edges() {
        let tri = balanced_triangle();
        assert!(matches!(
            SubgraphSelection::new(&tri, [0], [0]),
            Err(Error::InvalidSelection(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let g = graph(2, 1, &[(0, 1, "1")]);
        assert_eq!(coordinate_projection(&g, 0).unwrap(), g);
        let g2 = graph(3, 2, &[(0, 1, "10"), (1, 2, "01")]);
        let p = coordinate_projection(&g2, 0).unwrap();
        assert_eq!(p.label(0), &bv("1"));
        assert_eq!(p.label(1), &bv("0"));
        assert!(coordinate_projection(&g2, 2).is_err());
        let tri = balanced_triangle();
        for i in 0..2 {
            let p = coordinate_projection(&tri, i).unwrap();
            assert!(is_balanced(&p, &SubgraphSelection::whole(&p)));
        }
    }

    #[test]
    fn rank_examples() {
        let forest = graph(4, 2, &[(0, 1, "11"), (1, 2, "10"), (2, 3, "01")]);
        assert_eq!(cycle_label_rank(&forest), 0);
        assert_eq!(cycle_label_rank(&theta()), 2);
        let zero_tri = graph(3, 2, &[(0, 1, "00"), (1, 2, "00"), (0, 2, "00")]);
        assert_eq!(cycle_label_rank(&zero_tri), 0);
    }

    #[test]
    fn stacked_rank_examples() {
        let forest = graph(4, 2, &[(0, 1, "11"), (1, 2, "10"), (2, 3, "01")]);
        assert_eq!(
            stacked_rank_identity(&forest),
            RankIdentity {
                rho: 0,
                rank_stacked: 3,
                rank_incidence: 3
            }
        );
        let tri = graph(3, 1, &[(0, 1, "1"), (1, 2, "0"), (0, 2, "0")]);
        assert_eq!(
            stacked_rank_identity(&tri),
            RankIdentity {
                rho: 1,
                rank_stacked: 3,
                rank_incidence: 2
            }
        );
        let t = stacked_rank_identity(&theta());
        assert_eq!(t.rho, 2);
        assert!(t.holds());
    }

    #[test]
    fn self_loops_count_as_cycles() {
        let g = graph(2, 1, &[(0, 1, "0"), (1, 1, "1")]);
        assert!(!is_balanced(&g, &SubgraphSelection::whole(&g)));
        assert_eq!(cycle_label_rank(&g), 1);
        assert!(stacked_rank_identity(&g).holds());
        let without = SubgraphSelection::spanning(&g, [0]).unwrap();
        assert!(is_balanced(&g, &without));
    }

    #[test]
    fn cycle_basis_spans_kernel_of_incidence() {
        let g = theta();
        let c = cycle_basis_matrix(&g);
        assert_eq!((c.rows(), c.cols()), (3, 2));
        assert!(g.incidence_matrix().multiply(&c).unwrap().is_zero());
        assert_eq!(g.label_matrix().multiply(&c).unwrap().rank(), 2);
    }
}
