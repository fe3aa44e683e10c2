//! Coset-list modular equations over Z/2^d and their lift to gain graphs.
//!
//! A variable `x_v` ranges over a dyadic list `a_v + 2^ℓ·Z/2^d`, i.e. its low
//! `ℓ` bits are fixed to those of `a_v`. Constraints are `x_u = x_v`,
//! `x_u = -x_v`, `x_u = 2·x_v` and unary anchors `x_u = b`.

mod direct;
mod lift;

pub use direct::{direct_satisfiable, direct_satisfiable_subset, Assignment};
pub use lift::{
    defect_vector, lift, lift_fidelity_report, lifted_accepts, preprocess, FidelityReport,
    LiftedGraph, Preprocessed,
};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported modulus exponent.
pub const MAX_DEPTH: u32 = 62;

pub type Weight = Rational64;

/// `2^d - 1`.
pub fn depth_mask(d: u32) -> u64 {
    (1u64 << d) - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicList {
    pub a: u64,
    pub ell: u32,
}

impl DyadicList {
    pub fn new(a: u64, ell: u32) -> Self {
        Self { a, ell }
    }

    pub fn full() -> Self {
        Self { a: 0, ell: 0 }
    }

    /// Canonical form: representative reduced mod `2^ℓ`.
    pub fn normalized(self) -> Self {
        Self {
            a: self.a & depth_mask(self.ell),
            ell: self.ell,
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        (x ^ self.a) & depth_mask(self.ell) == 0
    }

    /// Members in increasing order.
    pub fn values(&self, d: u32) -> impl Iterator<Item = u64> {
        let low = self.a & depth_mask(self.ell);
        let step = 1u64 << self.ell;
        (0..1u64 << (d - self.ell)).map(move |y| low + y * step)
    }

    pub fn size(&self, d: u32) -> u64 {
        1u64 << (d - self.ell)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Eq,
    Neg,
    Dbl,
    Anchor,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Eq => "eq",
            Kind::Neg => "neg",
            Kind::Dbl => "dbl",
            Kind::Anchor => "anchor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `x_u = x_v`
    Eq { u: usize, v: usize },
    /// `x_u = -x_v`
    Neg { u: usize, v: usize },
    /// `x_u = 2·x_v`
    Dbl { u: usize, v: usize },
    /// `x_v = b`
    Anchor { v: usize, b: u64 },
}

impl Relation {
    pub fn kind(&self) -> Kind {
        match self {
            Relation::Eq { .. } => Kind::Eq,
            Relation::Neg { .. } => Kind::Neg,
            Relation::Dbl { .. } => Kind::Dbl,
            Relation::Anchor { .. } => Kind::Anchor,
        }
    }

    /// `(u, v)` for binary relations.
    pub fn endpoints(&self) -> Option<(usize, usize)> {
        match *self {
            Relation::Eq { u, v } | Relation::Neg { u, v } | Relation::Dbl { u, v } => Some((u, v)),
            Relation::Anchor { .. } => None,
        }
    }

    pub fn variables(&self) -> (usize, usize) {
        match *self {
            Relation::Eq { u, v } | Relation::Neg { u, v } | Relation::Dbl { u, v } => (u, v),
            Relation::Anchor { v, .. } => (v, v),
        }
    }

    /// Whether the assignment satisfies the relation over Z/2^d.
    pub fn holds(&self, x: &[u64], d: u32) -> bool {
        let mask = depth_mask(d);
        match *self {
            Relation::Eq { u, v } => x[u] == x[v],
            Relation::Neg { u, v } => x[u] == x[v].wrapping_neg() & mask,
            Relation::Dbl { u, v } => x[u] == (x[v] << 1) & mask,
            Relation::Anchor { v, b } => x[v] == b,
        }
    }

    pub fn holds_pair(&self, xu: u64, xv: u64, d: u32) -> bool {
        let mask = depth_mask(d);
        match *self {
            Relation::Eq { .. } => xu == xv,
            Relation::Neg { .. } => xu == xv.wrapping_neg() & mask,
            Relation::Dbl { .. } => xu == (xv << 1) & mask,
            Relation::Anchor { b, .. } => xu == b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub id: usize,
    pub relation: Relation,
    pub weight: Weight,
}

impl Constraint {
    pub fn new(id: usize, relation: Relation) -> Self {
        Self {
            id,
            relation,
            weight: Weight::from_integer(1),
        }
    }

    pub fn weighted(id: usize, relation: Relation, weight: Weight) -> Self {
        Self {
            id,
            relation,
            weight,
        }
    }
}

/// A Coset-List Min-2-Lin± instance. Constraint ids are unique but need not
/// be dense, so sub-instances keep the ids of the instance they came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    d: u32,
    names: Vec<String>,
    lists: Vec<DyadicList>,
    constraints: Vec<Constraint>,
}

impl Instance {
    /// Variables are named `x0, x1, …`.
    pub fn new(d: u32, lists: Vec<DyadicList>, constraints: Vec<Constraint>) -> Result<Self> {
        let names = (0..lists.len()).map(|i| format!("x{i}")).collect();
        Self::with_names(d, names, lists, constraints)
    }

    pub fn with_names(
        d: u32,
        names: Vec<String>,
        lists: Vec<DyadicList>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if d == 0 || d > MAX_DEPTH {
            return Err(Error::InvalidInstance(format!(
                "depth {d} outside 1..={MAX_DEPTH}"
            )));
        }
        if names.len() != lists.len() {
            return Err(Error::InvalidInstance(
                "one name per variable required".into(),
            ));
        }
        let mask = depth_mask(d);
        let n = lists.len();
        for (v, l) in lists.iter().enumerate() {
            if l.ell > d || l.a > mask {
                return Err(Error::InvalidInstance(format!(
                    "list of variable {v} out of range for d = {d}"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &constraints {
            if !seen.insert(c.id) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate constraint id {}",
                    c.id
                )));
            }
            let (u, v) = c.relation.variables();
            if u >= n || v >= n {
                return Err(Error::InvalidInstance(format!(
                    "constraint {} references an unknown variable",
                    c.id
                )));
            }
            if let Relation::Anchor { b, .. } = c.relation {
                if b > mask {
                    return Err(Error::InvalidInstance(format!(
                        "anchor target {b} out of range for d = {d}"
                    )));
                }
            }
            if c.weight <= Weight::from_integer(0) {
                return Err(Error::InvalidInstance(format!(
                    "constraint {} has a non-positive weight",
                    c.id
                )));
            }
        }
        Ok(Self {
            d,
            names,
            lists,
            constraints,
        })
    }

    pub fn depth(&self) -> u32 {
        self.d
    }

    pub fn variable_count(&self) -> usize {
        self.lists.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lists(&self) -> &[DyadicList] {
        &self.lists
    }

    pub fn list(&self, v: usize) -> DyadicList {
        self.lists[v]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraint_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.constraints.iter().map(|c| c.id)
    }

    /// Position of the constraint with the given id.
    pub fn position(&self, id: usize) -> Result<usize> {
        self.constraints
            .iter()
            .position(|c| c.id == id)
            .ok_or(Error::UnknownConstraint(id))
    }

    /// Keeps only constraints whose position is flagged; ids are preserved.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        let constraints = self
            .constraints
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        Self {
            d: self.d,
            names: self.names.clone(),
            lists: self.lists.clone(),
            constraints,
        }
    }

    /// The instance without the given constraint ids.
    pub fn without(&self, ids: &[usize]) -> Result<Self> {
        let mut keep = vec![true; self.constraints.len()];
        for &id in ids {
            keep[self.position(id)?] = false;
        }
        Ok(self.restrict(&keep))
    }

    /// Whether the assignment lies in every list and satisfies every constraint.
    pub fn satisfied_by(&self, x: &[u64]) -> bool {
        x.len() == self.lists.len()
            && x.iter().zip(&self.lists).all(|(&xv, l)| l.contains(xv))
            && self.constraints.iter().all(|c| c.relation.holds(x, self.d))
    }

    /// Whether every relation is an equality between distinct-or-equal variables.
    pub fn is_eq_only(&self) -> bool {
        self.constraints
            .iter()
            .all(|c| matches!(c.relation, Relation::Eq { .. }))
    }
}

/// Reduces every list representative mod `2^ℓ`.
pub fn normalize_lists(instance: &Instance) -> Instance {
    let mut out = instance.clone();
    for l in &mut out.lists {
        *l = l.normalized();
    }
    out
}

/// `c_e = -α·a_u - β·a_v mod 2^d` with `(α, β)` equal to `(1,-1)`, `(1,1)`,
/// `(1,-2)` for Eq, Neg and Dbl.
pub fn edge_offset(instance: &Instance, relation: &Relation) -> Result<u64> {
    let d = instance.depth();
    let (u, v) = relation
        .endpoints()
        .ok_or_else(|| Error::InvalidInstance("anchors have no edge offset".into()))?;
    let (au, av) = (instance.list(u).a, instance.list(v).a);
    let c = match relation.kind() {
        Kind::Eq => av.wrapping_sub(au),
        Kind::Neg => au.wrapping_neg().wrapping_sub(av),
        Kind::Dbl => av.wrapping_mul(2).wrapping_sub(au),
        Kind::Anchor => unreachable!(),
    };
    Ok(c & depth_mask(d))
}

/// Depths `{max(ℓ_u, ℓ_v + s), …, d-1}` where `s = 1` for doubling.
pub fn active_depths(instance: &Instance, relation: &Relation) -> Result<Vec<u32>> {
    let d = instance.depth();
    let (u, v) = relation
        .endpoints()
        .ok_or_else(|| Error::InvalidInstance("anchors have no active depths".into()))?;
    let shift = u32::from(relation.kind() == Kind::Dbl);
    let lo = instance.list(u).ell.max(instance.list(v).ell + shift);
    Ok((lo..d).collect())
}
