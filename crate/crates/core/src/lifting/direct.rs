use std::collections::VecDeque;

use super::{depth_mask, Instance, Relation};

/// One value per variable.
pub type Assignment = Vec<u64>;

/// Exact satisfiability over Z/2^d with a witness, independent of the lift.
pub fn direct_satisfiable(instance: &Instance) -> Option<Assignment> {
    direct_satisfiable_subset(instance, &vec![true; instance.constraint_count()])
}

/// As [`direct_satisfiable`], using only constraints whose position is flagged.
///
/// Each connected component of the constraint graph is rooted at an anchored
/// variable if there is one, else at a variable with the smallest list. Root
/// values are enumerated; every other variable takes its candidates from its
/// BFS parent through the tree constraint (one value for Eq, Neg and forward
/// doubling, the two halving preimages for backward doubling), and all
/// constraints closing back into assigned variables are checked on the spot.
pub fn direct_satisfiable_subset(instance: &Instance, active: &[bool]) -> Option<Assignment> {
    let d = instance.depth();
    let n = instance.variable_count();
    let mask = depth_mask(d);

    let mut anchor: Vec<Option<u64>> = vec![None; n];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let cons = instance.constraints();
    for (pos, c) in cons.iter().enumerate() {
        if !active[pos] {
            continue;
        }
        match c.relation {
            Relation::Anchor { v, b } => {
                if !instance.list(v).contains(b) {
                    return None;
                }
                match anchor[v] {
                    Some(prev) if prev != b => return None,
                    _ => anchor[v] = Some(b),
                }
            }
            rel => {
                let (u, v) = rel.endpoints().expect("binary");
                adjacency[u].push(pos);
                if u != v {
                    adjacency[v].push(pos);
                }
            }
        }
    }

    let domain_size = |v: usize| -> u64 {
        if anchor[v].is_some() {
            1
        } else {
            instance.list(v).size(d)
        }
    };
    let in_domain = |v: usize, x: u64| -> bool {
        match anchor[v] {
            Some(b) => x == b,
            None => instance.list(v).contains(x),
        }
    };

    let mut x = vec![0u64; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Collect the component, then pick its root.
        let mut members = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < members.len() {
            let w = members[i];
            i += 1;
            for &pos in &adjacency[w] {
                let (a, b) = cons[pos].relation.endpoints().expect("binary");
                let y = if a == w { b } else { a };
                if !seen[y] {
                    seen[y] = true;
                    members.push(y);
                }
            }
        }
        let root = *members
            .iter()
            .min_by_key(|&&v| (domain_size(v), v))
            .expect("nonempty component");

        // BFS order from the root with parent constraints.
        let mut order = Vec::with_capacity(members.len());
        let mut parent: Vec<(usize, usize)> = Vec::with_capacity(members.len());
        let mut index_of = std::collections::HashMap::with_capacity(members.len());
        index_of.insert(root, 0usize);
        queue.push_back(root);
        order.push(root);
        parent.push((usize::MAX, usize::MAX));
        while let Some(w) = queue.pop_front() {
            for &pos in &adjacency[w] {
                let (a, b) = cons[pos].relation.endpoints().expect("binary");
                let y = if a == w { b } else { a };
                if let std::collections::hash_map::Entry::Vacant(slot) = index_of.entry(y) {
                    slot.insert(order.len());
                    order.push(y);
                    parent.push((pos, w));
                    queue.push_back(y);
                }
            }
        }
        // Constraints checked when their later endpoint (in BFS order) is assigned.
        let mut checks: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
        for &w in &order {
            for &pos in &adjacency[w] {
                let (a, b) = cons[pos].relation.endpoints().expect("binary");
                let later = index_of[&a].max(index_of[&b]);
                if order[later] == w {
                    checks[later].push(pos);
                }
            }
        }

        if !solve_component(
            &order, &parent, &checks, instance, &anchor, mask, d, &in_domain, &mut x,
        ) {
            return None;
        }
    }
    debug_assert!(instance.restrict(active).satisfied_by(&x));
    Some(x)
}

/// Candidate values for one level of the search.
enum Candidates {
    Root {
        next: u64,
        total: u64,
    },
    Few {
        vals: [u64; 2],
        len: usize,
        next: usize,
    },
}

#[allow(clippy::too_many_arguments)]
fn solve_component(
    order: &[usize],
    parent: &[(usize, usize)],
    checks: &[Vec<usize>],
    instance: &Instance,
    anchor: &[Option<u64>],
    mask: u64,
    d: u32,
    in_domain: &dyn Fn(usize, u64) -> bool,
    x: &mut [u64],
) -> bool {
    let cons = instance.constraints();
    let root = order[0];
    let root_list = instance.list(root);
    let mut stack: Vec<Candidates> = Vec::with_capacity(order.len());
    stack.push(match anchor[root] {
        Some(b) => Candidates::Few {
            vals: [b, 0],
            len: 1,
            next: 0,
        },
        None => Candidates::Root {
            next: 0,
            total: root_list.size(d),
        },
    });
    let low = root_list.a & depth_mask(root_list.ell);
    let step = 1u64 << root_list.ell;

    loop {
        let level = stack.len() - 1;
        let value = match stack.last_mut().expect("nonempty") {
            Candidates::Root { next, total } => {
                if *next < *total {
                    *next += 1;
                    Some(low + (*next - 1) * step)
                } else {
                    None
                }
            }
            Candidates::Few { vals, len, next } => {
                if *next < *len {
                    *next += 1;
                    Some(vals[*next - 1])
                } else {
                    None
                }
            }
        };
        let Some(value) = value else {
            stack.pop();
            if stack.is_empty() {
                return false;
            }
            continue;
        };
        let w = order[level];
        if !in_domain(w, value) {
            continue;
        }
        x[w] = value;
        if !checks[level]
            .iter()
            .all(|&pos| cons[pos].relation.holds(x, d))
        {
            continue;
        }
        if level + 1 == order.len() {
            return true;
        }
        let child = order[level + 1];
        let (pos, p) = parent[level + 1];
        let xp = x[p];
        let mut vals = [0u64; 2];
        let len = match cons[pos].relation {
            Relation::Eq { .. } => {
                vals[0] = xp;
                1
            }
            Relation::Neg { .. } => {
                vals[0] = xp.wrapping_neg() & mask;
                1
            }
            Relation::Dbl { u, .. } if u == child => {
                vals[0] = (xp << 1) & mask;
                1
            }
            Relation::Dbl { .. } => {
                if xp & 1 == 1 {
                    0
                } else {
                    vals[0] = xp >> 1;
                    vals[1] = (xp >> 1) | (1u64 << (d - 1));
                    2
                }
            }
            Relation::Anchor { .. } => unreachable!("anchors are not tree edges"),
        };
        stack.push(Candidates::Few { vals, len, next: 0 });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::tests::inst;
    use crate::lifting::Relation::*;

    fn brute(i: &Instance) -> bool {
        let n = i.variable_count();
        let size = 1u64 << i.depth();
        let total = size.pow(n as u32);
        (0..total).any(|mut code| {
            let x: Vec<u64> = (0..n)
                .map(|_| {
                    let v = code % size;
                    code /= size;
                    v
                })
                .collect();
            i.satisfied_by(&x)
        })
    }

    #[test]
    fn spec_examples() {
        let empty = inst(2, &[(1, 1), (0, 0)], &[]);
        let x = direct_satisfiable(&empty).unwrap();
        assert!(empty.satisfied_by(&x));

        let eq_neg = inst(
            2,
            &[(0, 0), (0, 0)],
            &[Eq { u: 0, v: 1 }, Neg { u: 0, v: 1 }],
        );
        let x = direct_satisfiable(&eq_neg).unwrap();
        assert!(x[0] == 0 || x[0] == 2);

        let anchored = inst(
            2,
            &[(0, 0), (0, 0)],
            &[Eq { u: 0, v: 1 }, Neg { u: 0, v: 1 }, Anchor { v: 0, b: 1 }],
        );
        assert_eq!(direct_satisfiable(&anchored), None);
    }

    #[test]
    fn backward_doubling_branches() {
        // x0 = 2·x1 with x0 = 2 forces x1 ∈ {1, 3}; list of x1 keeps only 3.
        let i = inst(
            2,
            &[(0, 0), (3, 2)],
            &[Dbl { u: 0, v: 1 }, Anchor { v: 0, b: 2 }],
        );
        assert_eq!(direct_satisfiable(&i), Some(vec![2, 3]));
        let odd = inst(
            2,
            &[(0, 0), (0, 0)],
            &[Dbl { u: 0, v: 1 }, Anchor { v: 0, b: 1 }],
        );
        assert_eq!(direct_satisfiable(&odd), None);
    }

    #[test]
    fn self_loops() {
        assert!(direct_satisfiable(&inst(3, &[(1, 1)], &[Eq { u: 0, v: 0 }])).is_some());
        assert_eq!(
            direct_satisfiable(&inst(3, &[(1, 1)], &[Neg { u: 0, v: 0 }])),
            None
        );
        assert_eq!(
            direct_satisfiable(&inst(
                3,
                &[(0, 0)],
                &[Neg { u: 0, v: 0 }, Anchor { v: 0, b: 4 }]
            )),
            Some(vec![4])
        );
        assert_eq!(
            direct_satisfiable(&inst(3, &[(0, 0)], &[Dbl { u: 0, v: 0 }])),
            Some(vec![0])
        );
    }

    #[test]
    fn conflicting_anchors() {
        let i = inst(
            2,
            &[(0, 0)],
            &[Anchor { v: 0, b: 1 }, Anchor { v: 0, b: 2 }],
        );
        assert_eq!(direct_satisfiable(&i), None);
        let off_list = inst(2, &[(0, 1)], &[Anchor { v: 0, b: 1 }]);
        assert_eq!(direct_satisfiable(&off_list), None);
    }

    #[test]
    fn subset_mask_is_respected() {
        let i = inst(
            2,
            &[(0, 0), (0, 0)],
            &[Eq { u: 0, v: 1 }, Neg { u: 0, v: 1 }, Anchor { v: 0, b: 1 }],
        );
        assert!(direct_satisfiable_subset(&i, &[true, false, true]).is_some());
        assert!(direct_satisfiable_subset(&i, &[false, true, true]).is_some());
    }

    #[test]
    fn agrees_with_enumeration_on_small_cases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..400 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=4);
            let lists: Vec<(u64, u32)> = (0..n)
                .map(|_| {
                    let ell = rng.gen_range(0..=d);
                    (rng.gen_range(0..1u64 << ell), ell)
                })
                .collect();
            let m = rng.gen_range(0..=5);
            let rels: Vec<Relation> = (0..m)
                .map(|_| {
                    let u = rng.gen_range(0..n);
                    let v = rng.gen_range(0..n);
                    match rng.gen_range(0..4) {
                        0 => Eq { u, v },
                        1 => Neg { u, v },
                        2 => Dbl { u, v },
                        _ => Anchor {
                            v,
                            b: rng.gen_range(0..1u64 << d),
                        },
                    }
                })
                .collect();
            let i = inst(d, &lists, &rels);
            let got = direct_satisfiable(&i);
            assert_eq!(got.is_some(), brute(&i), "{i:?}");
            if let Some(x) = got {
                assert!(i.satisfied_by(&x));
            }
        }
    }
}
