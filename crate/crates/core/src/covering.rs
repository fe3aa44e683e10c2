//! Balanced coverings.
//!
//! A covering of a gain graph `G` is a pair `(S, F)` of a vertex set and an
//! edge set with every edge leaving `S` in `F` and `(G − F)[S]` balanced. It
//! is meant to contain, with noticeable probability, every cheap balanced
//! subgraph `H`: `V(H) ⊆ S` and few edges of `F` touch `V(H)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain_graph::{coordinate_projection, is_balanced, EdgeId, GainGraph, SubgraphSelection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Repeatedly breaks a shortest unbalanced cycle at a random edge or endpoint.
    CycleSampling,
    /// No search: `S = ∅` and `F = E`, so later enumeration ranges over everything.
    None,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::CycleSampling => "cycle-sampling",
            Strategy::None => "none",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle-sampling" => Ok(Strategy::CycleSampling),
            "none" => Ok(Strategy::None),
            other => Err(Error::InvalidParams(format!(
                "unknown covering strategy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringConfig {
    pub k: usize,
    pub strategy: Strategy,
    pub seed: u64,
    /// Defaults to `|E| + |V|`.
    pub max_iterations: Option<usize>,
}

impl CoveringConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            strategy: Strategy::CycleSampling,
            seed,
            max_iterations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoveringResult {
    /// Vertex mask of `S`.
    pub s: Vec<bool>,
    /// `F`, ascending.
    pub f: Vec<EdgeId>,
    pub attempts: usize,
    pub strategy: Strategy,
}

impl CoveringResult {
    /// Checks `δ(S) ⊆ F` and that `(G − F)[S]` is balanced.
    pub fn new(
        g: &GainGraph,
        s: Vec<bool>,
        mut f: Vec<EdgeId>,
        attempts: usize,
        strategy: Strategy,
    ) -> Result<Self> {
        f.sort_unstable();
        f.dedup();
        let result = Self {
            s,
            f,
            attempts,
            strategy,
        };
        result.check(g)?;
        Ok(result)
    }

    pub fn check(&self, g: &GainGraph) -> Result<()> {
        if self.s.len() != g.vertex_count() {
            return Err(Error::ContractViolation(
                "vertex mask has the wrong size".into(),
            ));
        }
        let mut in_f = vec![false; g.edge_count()];
        for &e in &self.f {
            *in_f.get_mut(e).ok_or(Error::IndexOutOfRange {
                index: e,
                limit: g.edge_count(),
            })? = true;
        }
        for (e, &inside) in in_f.iter().enumerate() {
            let (u, v) = g.endpoints(e);
            if self.s[u] != self.s[v] && !inside {
                return Err(Error::ContractViolation(format!(
                    "edge {e} leaves S but is not in F"
                )));
            }
        }
        if !is_balanced(g, &self.surviving(g)) {
            return Err(Error::ContractViolation("(G - F)[S] is unbalanced".into()));
        }
        Ok(())
    }

    /// `(G − F)[S]` as a selection.
    pub fn surviving(&self, g: &GainGraph) -> SubgraphSelection {
        let mut edges = vec![true; g.edge_count()];
        for &e in &self.f {
            edges[e] = false;
        }
        for (e, keep) in edges.iter_mut().enumerate() {
            let (u, v) = g.endpoints(e);
            *keep = *keep && self.s[u] && self.s[v];
        }
        SubgraphSelection::from_masks(g, self.s.clone(), edges).expect("edges lie inside S")
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.s
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

/// Shortest closed walk with label 1 in the scalar graph restricted to
/// `alive` vertices and edges, found by BFS on the double cover from every
/// source. A shortest one is a simple cycle.
pub fn shortest_unbalanced_cycle(
    g: &GainGraph,
    coordinate: usize,
    alive_v: &[bool],
    alive_e: &[bool],
) -> Option<Vec<EdgeId>> {
    let n = g.vertex_count();
    let mut best: Option<Vec<EdgeId>> = None;
    let mut dist = vec![usize::MAX; 2 * n];
    let mut via = vec![(usize::MAX, usize::MAX); 2 * n];
    let mut queue = VecDeque::new();
    for s in (0..n).filter(|&s| alive_v[s]) {
        dist.fill(usize::MAX);
        dist[2 * s] = 0;
        queue.clear();
        queue.push_back(2 * s);
        while let Some(state) = queue.pop_front() {
            if state == 2 * s + 1 {
                break;
            }
            if best.as_ref().is_some_and(|b| dist[state] + 1 >= b.len()) {
                break;
            }
            let (x, parity) = (state / 2, state % 2);
            for &e in g.incident(x) {
                if !alive_e[e] {
                    continue;
                }
                let y = g.other_endpoint(e, x);
                let next = 2 * y + (parity ^ usize::from(g.label(e).get(coordinate)));
                if dist[next] == usize::MAX {
                    dist[next] = dist[state] + 1;
                    via[next] = (state, e);
                    queue.push_back(next);
                }
            }
        }
        let target = 2 * s + 1;
        if dist[target] != usize::MAX && best.as_ref().is_none_or(|b| dist[target] < b.len()) {
            let mut walk = Vec::with_capacity(dist[target]);
            let mut state = target;
            while state != 2 * s {
                let (prev, e) = via[state];
                walk.push(e);
                state = prev;
            }
            best = Some(walk);
        }
    }
    best
}

fn trivial(g: &GainGraph, strategy: Strategy) -> CoveringResult {
    CoveringResult {
        s: vec![false; g.vertex_count()],
        f: Vec::new(),
        attempts: 0,
        strategy,
    }
}

/// Scalar covering with an explicit random stream.
pub fn one_coordinate_cover_with(
    g: &GainGraph,
    cfg: &CoveringConfig,
    rng: &mut impl Rng,
) -> Result<CoveringResult> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "one-coordinate covering needs r = 1, got {}",
            g.dim()
        )));
    }
    let n = g.vertex_count();
    let m = g.edge_count();
    if cfg.strategy == Strategy::None {
        return CoveringResult::new(g, vec![false; n], (0..m).collect(), 0, cfg.strategy);
    }
    let cap = cfg.max_iterations.unwrap_or(n + m);
    let mut in_s = vec![true; n];
    let mut alive_e = vec![true; m];
    let mut iterations = 0;
    while let Some(cycle) = shortest_unbalanced_cycle(g, 0, &in_s, &alive_e) {
        if iterations == cap {
            return Ok(trivial(g, cfg.strategy));
        }
        iterations += 1;
        let e = *cycle.choose(rng).expect("cycles are nonempty");
        if rng.gen_bool(0.5) {
            alive_e[e] = false;
        } else {
            let (u, v) = g.endpoints(e);
            let w = if rng.gen_bool(0.5) { u } else { v };
            in_s[w] = false;
            for &x in g.incident(w) {
                alive_e[x] = false;
            }
        }
    }
    let f = (0..m)
        .filter(|&e| {
            let (u, v) = g.endpoints(e);
            !alive_e[e] || in_s[u] != in_s[v]
        })
        .collect();
    CoveringResult::new(g, in_s, f, iterations, cfg.strategy)
}

/// Scalar covering seeded from `cfg.seed`.
pub fn one_coordinate_cover(g: &GainGraph, cfg: &CoveringConfig) -> Result<CoveringResult> {
    one_coordinate_cover_with(g, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}

/// Coordinatewise covering: `S = ∩ S_i`, `F = ∪ F_i` over the scalar
/// projections, all drawing from one random stream in coordinate order.
pub fn cover_vector_with(
    g: &GainGraph,
    cfg: &CoveringConfig,
    rng: &mut impl Rng,
) -> Result<CoveringResult> {
    let mut s = vec![true; g.vertex_count()];
    let mut f = Vec::new();
    let mut attempts = 0;
    if cfg.strategy == Strategy::None {
        return CoveringResult::new(
            g,
            vec![false; g.vertex_count()],
            (0..g.edge_count()).collect(),
            0,
            cfg.strategy,
        );
    }
    for i in 0..g.dim() {
        let part = one_coordinate_cover_with(&coordinate_projection(g, i)?, cfg, rng)?;
        for (x, y) in s.iter_mut().zip(&part.s) {
            *x &= *y;
        }
        f.extend(part.f);
        attempts += part.attempts;
    }
    CoveringResult::new(g, s, f, attempts, cfg.strategy)
}

pub fn cover_vector(g: &GainGraph, cfg: &CoveringConfig) -> Result<CoveringResult> {
    cover_vector_with(g, cfg, &mut repetition_rng(cfg.seed, 0))
}

/// Random stream of repetition `j`; stream 0 is the one [`cover_vector`] uses.
pub fn repetition_rng(seed: u64, j: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j);
    rng
}

/// `T` independent coverings, in repetition order.
pub fn amplified_cover(
    g: &GainGraph,
    cfg: &CoveringConfig,
    repetitions: usize,
) -> Result<Vec<CoveringResult>> {
    if repetitions == 0 {
        return Err(Error::InvalidParams(
            "at least one repetition is required".into(),
        ));
    }
    (0..repetitions as u64)
        .into_par_iter()
        .map(|j| cover_vector_with(g, cfg, &mut repetition_rng(cfg.seed, j)))
        .collect()
}

/// Success event for a hidden balanced subgraph `H`: `V(H) ⊆ S` and at most
/// `r·k` edges of `F` have an endpoint in `V(H)`.
pub fn capture_check(
    g: &GainGraph,
    result: &CoveringResult,
    h: &SubgraphSelection,
    k: usize,
    r: usize,
) -> bool {
    h.vertex_ids().all(|v| result.s[v]) && incident_f_count(g, result, h) <= r * k
}

/// Number of edges of `F` with an endpoint in `V(H)`.
pub fn incident_f_count(g: &GainGraph, result: &CoveringResult, h: &SubgraphSelection) -> usize {
    result
        .f
        .iter()
        .filter(|&&e| {
            let (u, v) = g.endpoints(e);
            h.contains_vertex(u) || h.contains_vertex(v)
        })
        .count()
}
