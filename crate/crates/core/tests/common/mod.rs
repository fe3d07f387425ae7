//! Independent oracles shared by the integration suites.
//!
//! Everything here is deliberately brute force and independent of the
//! library's algorithms: d-separation by exhaustive path enumeration,
//! back-door admissibility by path enumeration, and conditional mutual
//! information straight from an exact joint table.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use pathwise::graph::{CausalGraph, VariableId};
use pathwise::scm::Distribution;

/// Directionality of one hop along a path.
#[derive(Clone, Copy, PartialEq)]
enum Hop {
    /// Edge points toward the later node (u -> v).
    Forward,
    /// Edge points toward the earlier node (u <- v).
    Backward,
}

struct Skeleton {
    nodes: Vec<VariableId>,
    /// Adjacent (neighbor, hop direction) pairs per node index.
    adjacent: Vec<Vec<(usize, Hop)>>,
    /// descendants[i] includes i itself.
    descendants_or_self: Vec<BTreeSet<usize>>,
}

impl Skeleton {
    fn new(g: &CausalGraph) -> Skeleton {
        let nodes = g.nodes().to_vec();
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut adjacent = vec![Vec::new(); nodes.len()];
        for (from, to) in g.edges() {
            let f = index[from.as_str()];
            let t = index[to.as_str()];
            adjacent[f].push((t, Hop::Forward));
            adjacent[t].push((f, Hop::Backward));
        }
        let descendants_or_self = nodes
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut set: BTreeSet<usize> = g
                    .descendants(std::slice::from_ref(v))
                    .unwrap()
                    .iter()
                    .map(|d| index[d.as_str()])
                    .collect();
                set.insert(i);
                set
            })
            .collect();
        Skeleton {
            nodes,
            adjacent,
            descendants_or_self,
        }
    }

    fn ix(&self, v: &VariableId) -> usize {
        self.nodes.iter().position(|n| n == v).unwrap()
    }
}

/// Is this undirected path open given `cond`? Interior colliders must have
/// a descendant (or themselves) in the conditioning set; interior
/// non-colliders must be outside it.
fn path_open(skel: &Skeleton, path: &[(usize, Hop)], cond: &BTreeSet<usize>) -> bool {
    // path[k] = (node, hop that led INTO this node); path[0].1 is unused.
    for k in 1..path.len() - 1 {
        let (node, hop_in) = path[k];
        let hop_out = path[k + 1].1;
        let collider = hop_in == Hop::Forward && hop_out == Hop::Backward;
        if collider {
            let opens = skel.descendants_or_self[node]
                .iter()
                .any(|d| cond.contains(d));
            if !opens {
                return false;
            }
        } else if cond.contains(&node) {
            return false;
        }
    }
    true
}

/// Exhaustive-path d-separation: true iff no open simple path connects the
/// two sets given the third.
pub fn dsep_path_oracle(
    g: &CausalGraph,
    a: &[VariableId],
    b: &[VariableId],
    c: &[VariableId],
) -> bool {
    let skel = Skeleton::new(g);
    let targets: BTreeSet<usize> = b.iter().map(|v| skel.ix(v)).collect();
    let cond: BTreeSet<usize> = c.iter().map(|v| skel.ix(v)).collect();
    for start_var in a {
        let start = skel.ix(start_var);
        let mut on_path = vec![false; skel.nodes.len()];
        on_path[start] = true;
        let mut path = vec![(start, Hop::Forward)];
        if dfs_open_path(&skel, &targets, &cond, &mut path, &mut on_path) {
            return false;
        }
    }
    true
}

fn dfs_open_path(
    skel: &Skeleton,
    targets: &BTreeSet<usize>,
    cond: &BTreeSet<usize>,
    path: &mut Vec<(usize, Hop)>,
    on_path: &mut Vec<bool>,
) -> bool {
    let (current, _) = *path.last().unwrap();
    for &(next, hop) in &skel.adjacent[current] {
        if on_path[next] {
            continue;
        }
        path.push((next, hop));
        if targets.contains(&next) {
            if path_open(skel, path, cond) {
                return true;
            }
        } else {
            on_path[next] = true;
            if dfs_open_path(skel, targets, cond, path, on_path) {
                return true;
            }
            on_path[next] = false;
        }
        path.pop();
    }
    false
}

/// Back-door oracle: every path from `x` to `z` that starts with an edge
/// into `x` must be blocked given `s`.
pub fn backdoor_path_oracle(
    g: &CausalGraph,
    x: &VariableId,
    z: &VariableId,
    s: &[VariableId],
) -> bool {
    let skel = Skeleton::new(g);
    let start = skel.ix(x);
    let target = skel.ix(z);
    let cond: BTreeSet<usize> = s.iter().map(|v| skel.ix(v)).collect();
    // Enumerate paths whose first hop is Backward (an arrow into x).
    let mut stack: Vec<(usize, Hop)> = Vec::new();
    for &(next, hop) in &skel.adjacent[start] {
        if hop != Hop::Backward {
            continue;
        }
        let mut on_path = vec![false; skel.nodes.len()];
        on_path[start] = true;
        stack.clear();
        stack.push((start, Hop::Forward));
        stack.push((next, hop));
        if next == target {
            if path_open(&skel, &stack, &cond) {
                return false;
            }
        } else {
            on_path[next] = true;
            let mut path = stack.clone();
            if dfs_open_path_to(&skel, target, &cond, &mut path, &mut on_path) {
                return false;
            }
        }
    }
    true
}

fn dfs_open_path_to(
    skel: &Skeleton,
    target: usize,
    cond: &BTreeSet<usize>,
    path: &mut Vec<(usize, Hop)>,
    on_path: &mut Vec<bool>,
) -> bool {
    let (current, _) = *path.last().unwrap();
    for &(next, hop) in &skel.adjacent[current] {
        if on_path[next] {
            continue;
        }
        path.push((next, hop));
        if next == target {
            if path_open(skel, path, cond) {
                return true;
            }
        } else {
            on_path[next] = true;
            if dfs_open_path_to(skel, target, cond, path, on_path) {
                return true;
            }
            on_path[next] = false;
        }
        path.pop();
    }
    false
}

/// Conditional mutual information I(A; B | C) in nats, computed from an
/// exact joint distribution whose variables cover A, B, and C.
pub fn conditional_mutual_information(
    joint: &Distribution<f64>,
    a: &[VariableId],
    b: &[VariableId],
    c: &[VariableId],
) -> f64 {
    let pos = |set: &[VariableId]| -> Vec<usize> {
        set.iter()
            .map(|v| {
                joint
                    .variables()
                    .iter()
                    .position(|x| x == v)
                    .expect("variable in joint")
            })
            .collect()
    };
    let a_pos = pos(a);
    let b_pos = pos(b);
    let c_pos = pos(c);
    let project = |tuple: &[usize], idx: &[usize]| -> Vec<usize> {
        idx.iter().map(|&i| tuple[i]).collect()
    };

    let mut p_abc: HashMap<(Vec<usize>, Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut p_ac: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut p_bc: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut p_c: HashMap<Vec<usize>, f64> = HashMap::new();
    for (tuple, p) in joint.support() {
        let ka = project(&tuple, &a_pos);
        let kb = project(&tuple, &b_pos);
        let kc = project(&tuple, &c_pos);
        *p_abc.entry((ka.clone(), kb.clone(), kc.clone())).or_insert(0.0) += p;
        *p_ac.entry((ka, kc.clone())).or_insert(0.0) += p;
        *p_bc.entry((kb, kc.clone())).or_insert(0.0) += p;
        *p_c.entry(kc).or_insert(0.0) += p;
    }

    let mut total = 0.0;
    for ((ka, kb, kc), &p) in &p_abc {
        if p <= 0.0 {
            continue;
        }
        let pac = p_ac[&(ka.clone(), kc.clone())];
        let pbc = p_bc[&(kb.clone(), kc.clone())];
        let pc = p_c[kc];
        total += p * ((p * pc) / (pac * pbc)).ln();
    }
    total
}

/// All (A, B, C) partitions of the graph's nodes into disjoint sets with A
/// and B nonempty (the remainder is unused), as index triples.
pub fn all_set_triples(n: usize) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut assignment = vec![0u8; n];
    loop {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for (i, &cls) in assignment.iter().enumerate() {
            match cls {
                1 => a.push(i),
                2 => b.push(i),
                3 => c.push(i),
                _ => {}
            }
        }
        if !a.is_empty() && !b.is_empty() {
            out.push((a, b, c));
        }
        // Base-4 counter.
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            assignment[pos] += 1;
            if assignment[pos] < 4 {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}
