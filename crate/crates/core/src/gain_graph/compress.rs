use super::{fundamental_cycle_labels, spanning_forest, GainGraph};
use crate::error::Result;
use crate::gf2::BitMatrix;

/// Output of [`compress_labels`].
#[derive(Clone, Debug)]
pub struct Compression {
    /// Same vertices and edges, labels of length `ρ`.
    pub graph: GainGraph,
    /// `ρ × r` map from old label space to new; injective on the cycle-label span.
    pub projection: BitMatrix,
    /// Columns of the fundamental-cycle matrix kept as a basis.
    pub basis_columns: Vec<usize>,
}

impl Compression {
    pub fn rho(&self) -> usize {
        self.graph.dim()
    }
}

/// Rewrites labels into the span of the cycle labels. With `Q` the greedy
/// column basis of `M_Γ` and `P` a left inverse of `Q`, each label becomes
/// `P · λ(e)`. Every cycle label lies in the column space of `Q`, on which `P`
/// is injective, so balance of every subgraph is unchanged.
pub fn compress_labels(g: &GainGraph) -> Result<Compression> {
    let forest = spanning_forest(g);
    let m = fundamental_cycle_labels(g, &forest);
    let (basis_columns, q) = m.matrix.column_basis();
    let p = q.left_inverse()?;
    let labels = g
        .labels()
        .iter()
        .map(|l| p.mul_vec(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Compression {
        graph: g.relabel(p.rows(), labels)?,
        projection: p,
        basis_columns,
    })
}
