//! Instance text format, result records and planted instance generation.
//!
//! ```text
//! # comment
//! mod2 2
//! var x 1 1
//! var y 0 0
//! con neg x y
//! con dbl y x 3/2
//! anchor y 2 0.5
//! ```
//!
//! Constraint ids follow line order starting at 0.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{
    depth_mask, Constraint, DyadicList, Instance, Kind, LiftedGraph, Relation, Weight, MAX_DEPTH,
};
use crate::solver::{Answer, DeletionSet, SolveReport, SolverConfig};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Positive decimal (`1`, `2.5`) or fraction (`3/2`).
pub fn parse_weight(s: &str) -> Option<Weight> {
    let w = if let Some((p, q)) = s.split_once('/') {
        let (p, q): (i64, i64) = (p.parse().ok()?, q.parse().ok()?);
        if q == 0 {
            return None;
        }
        Weight::new(p, q)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let scale = 10i64.pow(frac.len() as u32);
        let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac: i64 = frac.parse().ok()?;
        if int < 0 || s.starts_with('-') {
            return None;
        }
        Weight::new(int.checked_mul(scale)?.checked_add(frac)?, scale)
    } else {
        Weight::from_integer(s.parse().ok()?)
    };
    (w > Weight::from_integer(0)).then_some(w)
}

fn format_weight(w: &Weight) -> String {
    w.to_string()
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut d: Option<u32> = None;
    let mut names = Vec::new();
    let mut lists = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut constraints = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|_| {
                parse_error(
                    line_no,
                    format!("{what} `{s}` is not a nonnegative integer"),
                )
            })
        };
        let weight = |s: Option<&&str>| -> Result<Weight> {
            match s {
                None => Ok(Weight::from_integer(1)),
                Some(s) => parse_weight(s).ok_or_else(|| {
                    parse_error(line_no, format!("weight `{s}` is not a positive number"))
                }),
            }
        };
        match fields[0] {
            "mod2" => {
                if d.is_some() {
                    return Err(parse_error(line_no, "duplicate header"));
                }
                if fields.len() != 2 {
                    return Err(parse_error(line_no, "expected `mod2 <d>`"));
                }
                let v = num(fields[1], "depth")?;
                if v == 0 || v > u64::from(MAX_DEPTH) {
                    return Err(parse_error(
                        line_no,
                        format!("depth must lie in 1..={MAX_DEPTH}"),
                    ));
                }
                d = Some(v as u32);
            }
            kw => {
                let d = d.ok_or_else(|| parse_error(line_no, "missing `mod2` header"))?;
                let var = |s: &str| -> Result<usize> {
                    index
                        .get(s)
                        .copied()
                        .ok_or_else(|| parse_error(line_no, format!("unknown variable `{s}`")))
                };
                match kw {
                    "var" => {
                        if fields.len() != 4 {
                            return Err(parse_error(line_no, "expected `var <name> <a> <ell>`"));
                        }
                        let name = fields[1].to_string();
                        if index.contains_key(&name) {
                            return Err(parse_error(
                                line_no,
                                format!("duplicate variable `{name}`"),
                            ));
                        }
                        let a = num(fields[2], "residue")?;
                        let ell = num(fields[3], "level")?;
                        if a > depth_mask(d) {
                            return Err(parse_error(line_no, format!("residue {a} out of range")));
                        }
                        if ell > u64::from(d) {
                            return Err(parse_error(
                                line_no,
                                format!("level {ell} exceeds d = {d}"),
                            ));
                        }
                        index.insert(name.clone(), names.len());
                        names.push(name);
                        lists.push(DyadicList::new(a, ell as u32));
                    }
                    "con" => {
                        if !(4..=5).contains(&fields.len()) {
                            return Err(parse_error(
                                line_no,
                                "expected `con <eq|neg|dbl> <u> <v> [weight]`",
                            ));
                        }
                        let (u, v) = (var(fields[2])?, var(fields[3])?);
                        let relation = match fields[1] {
                            "eq" => Relation::Eq { u, v },
                            "neg" => Relation::Neg { u, v },
                            "dbl" => Relation::Dbl { u, v },
                            other => {
                                return Err(parse_error(
                                    line_no,
                                    format!("unknown relation `{other}`"),
                                ))
                            }
                        };
                        let w = weight(fields.get(4))?;
                        constraints.push(Constraint::weighted(constraints.len(), relation, w));
                    }
                    "anchor" => {
                        if !(3..=4).contains(&fields.len()) {
                            return Err(parse_error(line_no, "expected `anchor <v> <b> [weight]`"));
                        }
                        let v = var(fields[1])?;
                        let b = num(fields[2], "residue")?;
                        if b > depth_mask(d) {
                            return Err(parse_error(line_no, format!("residue {b} out of range")));
                        }
                        let w = weight(fields.get(3))?;
                        constraints.push(Constraint::weighted(
                            constraints.len(),
                            Relation::Anchor { v, b },
                            w,
                        ));
                    }
                    other => {
                        return Err(parse_error(line_no, format!("unknown directive `{other}`")))
                    }
                }
            }
        }
    }
    let d = d.ok_or_else(|| parse_error(text.lines().count().max(1), "missing `mod2` header"))?;
    Instance::with_names(d, names, lists, constraints)
}

/// Text form of an instance. Constraints are written in instance order, so
/// re-parsing renumbers them densely.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = format!("mod2 {}\n", instance.depth());
    let names = instance.names();
    for (name, l) in names.iter().zip(instance.lists()) {
        let _ = writeln!(out, "var {name} {} {}", l.a, l.ell);
    }
    for c in instance.constraints() {
        let w = if c.weight == Weight::from_integer(1) {
            String::new()
        } else {
            format!(" {}", format_weight(&c.weight))
        };
        let _ = match c.relation {
            Relation::Anchor { v, b } => writeln!(out, "anchor {} {b}{w}", names[v]),
            rel => {
                let (u, v) = rel.endpoints().expect("binary");
                writeln!(
                    out,
                    "con {} {} {}{w}",
                    rel.kind().name(),
                    names[u],
                    names[v]
                )
            }
        };
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_ms: f64,
}

/// JSON document describing one solver run. Everything except `timings` is
/// determined by the instance, configuration and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub answer: String,
    pub deletions: Vec<usize>,
    pub cardinality: Option<usize>,
    pub weight: Option<String>,
    pub k: usize,
    pub mode: String,
    pub strategy: String,
    pub weighted: bool,
    pub seed: u64,
    pub repetitions: usize,
    pub rho: usize,
    #[serde(rename = "R")]
    pub ambient_dim: usize,
    pub exact_regime: bool,
    pub mandatory_deletions: Vec<usize>,
    pub f_sizes: Vec<usize>,
    pub candidate_constraints: Vec<usize>,
    pub candidates_enumerated: u64,
    pub enumeration_bound: f64,
    pub verification_calls: u64,
    pub truncated_attempts: usize,
    pub balance_decides: bool,
    pub fallback_used: bool,
    pub branch_nodes: u64,
    pub timings: Timings,
}

impl ResultRecord {
    pub fn new(report: &SolveReport, cfg: &SolverConfig) -> Self {
        let s = &report.stats;
        let best: Option<&DeletionSet> = report.best.as_ref();
        Self {
            answer: report.answer.to_string(),
            deletions: best.map(|b| b.constraint_ids.clone()).unwrap_or_default(),
            cardinality: best.map(|b| b.cardinality),
            weight: best.map(|b| format_weight(&b.total_weight)),
            k: cfg.k,
            mode: match cfg.mode {
                crate::solver::Mode::Covering => "covering".into(),
                crate::solver::Mode::Exhaustive => "exhaustive".into(),
            },
            strategy: cfg.strategy.name().into(),
            weighted: cfg.weighted,
            seed: cfg.seed,
            repetitions: cfg.repetitions,
            rho: s.rho,
            ambient_dim: s.ambient_dim,
            exact_regime: s.exact_regime,
            mandatory_deletions: s.mandatory_deletions.clone(),
            f_sizes: s.f_sizes.clone(),
            candidate_constraints: s.candidate_constraints.clone(),
            candidates_enumerated: s.candidates_enumerated,
            enumeration_bound: s.enumeration_bound,
            verification_calls: s.verification_calls,
            truncated_attempts: s.truncated_attempts,
            balance_decides: s.balance_decides,
            fallback_used: s.fallback_used,
            branch_nodes: s.branch_nodes,
            timings: Timings {
                wall_ms: s.wall_time.as_secs_f64() * 1e3,
            },
        }
    }

    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes.to_string()
    }
}

pub fn write_result(report: &SolveReport, cfg: &SolverConfig) -> String {
    serde_json::to_string_pretty(&ResultRecord::new(report, cfg)).expect("record serializes")
}

/// Summary of a lift, as printed by `lift --stats`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftStats {
    pub rho: usize,
    #[serde(rename = "R")]
    pub ambient_dim: usize,
    /// Cycle-space dimension `|E| − |V| + c`.
    pub mu: usize,
    pub vertices: usize,
    pub edges: usize,
    pub exact_regime: bool,
    pub mandatory_deletions: Vec<usize>,
}

impl LiftStats {
    pub fn new(lifted: &LiftedGraph) -> Self {
        let g = &lifted.graph;
        let forest = crate::gain_graph::spanning_forest(g);
        let m = crate::gain_graph::fundamental_cycle_labels(g, &forest);
        Self {
            rho: m.matrix.rank(),
            ambient_dim: lifted.ambient_dim,
            mu: m.nontree_edge_ids.len(),
            vertices: g.vertex_count(),
            edges: g.edge_count(),
            exact_regime: lifted.exact_regime,
            mandatory_deletions: lifted.mandatory_deletions.clone(),
        }
    }
}

/// Parameters of [`generate_planted`]. `m` counts every constraint, anchors
/// and planted ones included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub plant_k: usize,
    /// Probability that a variable gets a list with `ℓ > 0`.
    pub list_density: f64,
    /// Relative frequencies of Eq, Neg and Dbl.
    pub kind_mix: [f64; 3],
    pub anchors: usize,
    /// Integer weights drawn from `1..=max_weight`.
    pub max_weight: i64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n: 6,
            m: 10,
            d: 2,
            plant_k: 1,
            list_density: 0.3,
            kind_mix: [1.0, 1.0, 1.0],
            anchors: 1,
            max_weight: 1,
            seed: 0,
        }
    }
}

fn pick_kind(rng: &mut impl Rng, mix: &[f64; 3]) -> Kind {
    let total: f64 = mix.iter().sum();
    let mut t = rng.gen::<f64>() * total;
    for (kind, &w) in [Kind::Eq, Kind::Neg, Kind::Dbl].into_iter().zip(mix) {
        if t < w {
            return kind;
        }
        t -= w;
    }
    Kind::Eq
}

fn relation(kind: Kind, u: usize, v: usize) -> Relation {
    match kind {
        Kind::Eq => Relation::Eq { u, v },
        Kind::Neg => Relation::Neg { u, v },
        _ => Relation::Dbl { u, v },
    }
}

/// A random instance satisfied by a hidden assignment except at `plant_k`
/// planted constraints, which it violates. Returns the instance and the
/// planted ids; deleting them leaves a satisfiable instance.
pub fn generate_planted(p: &GenParams) -> Result<(Instance, DeletionSet)> {
    if p.n == 0 || p.d == 0 || p.d > MAX_DEPTH {
        return Err(Error::InvalidParams("need n ≥ 1 and 1 ≤ d ≤ 62".into()));
    }
    if p.plant_k + p.anchors > p.m {
        return Err(Error::InvalidParams("plant_k + anchors exceeds m".into()));
    }
    if !(0.0..=1.0).contains(&p.list_density) {
        return Err(Error::InvalidParams(
            "list density must lie in [0, 1]".into(),
        ));
    }
    if p.kind_mix.iter().any(|&w| w < 0.0) || p.kind_mix.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParams(
            "kind mix needs a positive total".into(),
        ));
    }
    if p.max_weight < 1 {
        return Err(Error::InvalidParams("max weight must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (n, d) = (p.n, p.d);
    let mask = depth_mask(d);
    let core = p.m - p.plant_k - p.anchors;

    // Hidden assignment grown along a random forest; tree constraints hold by construction.
    let mut x = vec![0u64; n];
    let mut rels: Vec<Relation> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    x[order[0]] = rng.gen::<u64>() & mask;
    for i in 1..n {
        let c = order[i];
        if rels.len() >= core {
            x[c] = rng.gen::<u64>() & mask;
            continue;
        }
        let par = order[rng.gen_range(0..i)];
        let xp = x[par];
        let rel = match pick_kind(&mut rng, &p.kind_mix) {
            Kind::Eq => {
                x[c] = xp;
                relation(Kind::Eq, c, par)
            }
            Kind::Neg => {
                x[c] = xp.wrapping_neg() & mask;
                relation(Kind::Neg, c, par)
            }
            _ => {
                if xp & 1 == 0 && rng.gen_bool(0.5) {
                    x[c] = (xp >> 1) | (u64::from(rng.gen_bool(0.5)) << (d - 1));
                    relation(Kind::Dbl, par, c)
                } else {
                    x[c] = (xp << 1) & mask;
                    relation(Kind::Dbl, c, par)
                }
            }
        };
        rels.push(if rng.gen_bool(0.5) {
            rel
        } else {
            swap_if_symmetric(rel)
        });
    }
    let tree = rels.clone();
    while rels.len() < core {
        rels.push(extra_satisfied(&mut rng, &x, d, &p.kind_mix, &tree));
    }

    let lists: Vec<DyadicList> = x
        .iter()
        .map(|&xv| {
            if rng.gen_bool(p.list_density) {
                let ell = rng.gen_range(1..=d);
                DyadicList::new(xv & depth_mask(ell), ell)
            } else {
                DyadicList::full()
            }
        })
        .collect();
    for _ in 0..p.anchors {
        let v = rng.gen_range(0..n);
        rels.push(Relation::Anchor { v, b: x[v] });
    }
    let mut planted_rels = Vec::new();
    for _ in 0..p.plant_k {
        planted_rels.push(violated(&mut rng, &x, &lists, d, &p.kind_mix));
    }

    let mut all: Vec<(Relation, bool)> = rels
        .into_iter()
        .map(|r| (r, false))
        .chain(planted_rels.into_iter().map(|r| (r, true)))
        .collect();
    all.shuffle(&mut rng);
    let constraints: Vec<Constraint> = all
        .iter()
        .enumerate()
        .map(|(id, &(r, _))| {
            let w = Weight::from_integer(rng.gen_range(1..=p.max_weight));
            Constraint::weighted(id, r, w)
        })
        .collect();
    let instance = Instance::new(d, lists, constraints)?;
    debug_assert!(instance
        .constraints()
        .iter()
        .zip(&all)
        .all(|(c, &(_, planted))| planted != c.relation.holds(&x, d)));
    let planted = DeletionSet::new(
        &instance,
        all.iter()
            .enumerate()
            .filter(|(_, (_, pl))| *pl)
            .map(|(id, _)| id),
    )?;
    Ok((instance, planted))
}

fn swap_if_symmetric(rel: Relation) -> Relation {
    match rel {
        Relation::Eq { u, v } => Relation::Eq { u: v, v: u },
        Relation::Neg { u, v } => Relation::Neg { u: v, v: u },
        other => other,
    }
}

/// A binary constraint the hidden assignment satisfies.
fn extra_satisfied(
    rng: &mut impl Rng,
    x: &[u64],
    d: u32,
    mix: &[f64; 3],
    tree: &[Relation],
) -> Relation {
    let n = x.len();
    for _ in 0..50 {
        let kind = pick_kind(rng, mix);
        let u = rng.gen_range(0..n);
        let options: Vec<usize> = (0..n)
            .filter(|&v| v != u && relation(kind, u, v).holds(x, d))
            .collect();
        if let Some(&v) = options.choose(rng) {
            return relation(kind, u, v);
        }
    }
    match tree.choose(rng) {
        Some(&r) => r,
        None => Relation::Eq { u: 0, v: 0 },
    }
}

/// A constraint the hidden assignment violates, inside the lists when possible.
fn violated(
    rng: &mut impl Rng,
    x: &[u64],
    lists: &[DyadicList],
    d: u32,
    mix: &[f64; 3],
) -> Relation {
    let n = x.len();
    let mask = depth_mask(d);
    for _ in 0..50 {
        let kind = pick_kind(rng, mix);
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u == v && n > 1 {
            continue;
        }
        let r = relation(kind, u, v);
        if !r.holds(x, d) {
            return r;
        }
    }
    let v = rng.gen_range(0..n);
    let ell = lists[v].ell;
    let b = if ell < d {
        x[v] ^ (1u64 << rng.gen_range(ell..d))
    } else {
        x[v].wrapping_add(1) & mask
    };
    Relation::Anchor { v, b }
}
