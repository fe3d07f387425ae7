//! Causal DAGs, graph mutilation, d-separation, and graphical
//! identifiability criteria.
//!
//! Graphs are immutable after construction and all operations here are pure,
//! so values can be shared freely across threads.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a variable in a causal graph or model.
///
/// Names are nonempty tokens over letters, digits, and underscore, and are
/// case-sensitive. Ordering (used for deterministic tie-breaks) is plain
/// byte-lexicographic ordering of the name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(String);

impl VariableId {
    pub fn new(name: &str) -> Result<Self, GraphError> {
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(GraphError::InvalidName(name.to_string()));
        }
        Ok(VariableId(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which edge classes to delete when mutilating a graph.
///
/// `delete_outgoing_of` removes every edge emanating from the listed nodes;
/// `delete_incoming_of` removes every edge entering the listed nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutilationSpec {
    pub delete_outgoing_of: BTreeSet<VariableId>,
    pub delete_incoming_of: BTreeSet<VariableId>,
}

impl MutilationSpec {
    pub fn outgoing<I: IntoIterator<Item = VariableId>>(nodes: I) -> Self {
        MutilationSpec {
            delete_outgoing_of: nodes.into_iter().collect(),
            delete_incoming_of: BTreeSet::new(),
        }
    }

    pub fn incoming<I: IntoIterator<Item = VariableId>>(nodes: I) -> Self {
        MutilationSpec {
            delete_outgoing_of: BTreeSet::new(),
            delete_incoming_of: nodes.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.delete_outgoing_of.is_empty() && self.delete_incoming_of.is_empty()
    }
}

impl fmt::Display for MutilationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let mut parts = Vec::new();
        if !self.delete_outgoing_of.is_empty() {
            let names: Vec<&str> = self.delete_outgoing_of.iter().map(|v| v.as_str()).collect();
            parts.push(format!("del-out({})", names.join(",")));
        }
        if !self.delete_incoming_of.is_empty() {
            let names: Vec<&str> = self.delete_incoming_of.iter().map(|v| v.as_str()).collect();
            parts.push(format!("del-in({})", names.join(",")));
        }
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid variable name {0:?}: expected a nonempty token of letters, digits, or underscore")]
    InvalidName(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate node {0:?}")]
    DuplicateNode(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("exogenous node {0:?} has parents")]
    ExogenousWithParents(String),
    #[error("sets are not pairwise disjoint: {0:?} appears twice")]
    OverlappingSets(String),
    #[error("covariate set {set} may not contain {node:?}, a descendant of {of:?}")]
    DescendantInSet {
        set: &'static str,
        node: String,
        of: String,
    },
    #[error("graph has {0} nodes, above the cap of {1} for subset search")]
    CapacityExceeded(usize, usize),
}

/// A directed acyclic graph over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<VariableId>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    exogenous: Vec<bool>,
}

impl CausalGraph {
    /// Builds a graph from declared nodes, edges, and exogenous marks.
    ///
    /// Rejects duplicate or invalid names, edges with undeclared endpoints,
    /// exogenous nodes with parents, and cycles.
    pub fn new(
        nodes: Vec<VariableId>,
        edges: &[(VariableId, VariableId)],
        exogenous_mark: &BTreeSet<VariableId>,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.as_str().to_string(), i).is_some() {
                return Err(GraphError::DuplicateNode(node.as_str().to_string()));
            }
        }
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (from, to) in edges {
            let f = *index
                .get(from.as_str())
                .ok_or_else(|| GraphError::UnknownNode(from.as_str().to_string()))?;
            let t = *index
                .get(to.as_str())
                .ok_or_else(|| GraphError::UnknownNode(to.as_str().to_string()))?;
            if children[f].contains(&t) {
                return Err(GraphError::DuplicateEdge(
                    from.as_str().to_string(),
                    to.as_str().to_string(),
                ));
            }
            children[f].push(t);
            parents[t].push(f);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let mut exo = vec![false; n];
        for node in exogenous_mark {
            let i = *index
                .get(node.as_str())
                .ok_or_else(|| GraphError::UnknownNode(node.as_str().to_string()))?;
            if !parents[i].is_empty() {
                return Err(GraphError::ExogenousWithParents(node.as_str().to_string()));
            }
            exo[i] = true;
        }
        let graph = CausalGraph {
            nodes,
            index,
            parents,
            children,
            exogenous: exo,
        };
        if let Some(cycle) = graph.find_cycle() {
            return Err(GraphError::Cycle(cycle));
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[VariableId] {
        &self.nodes
    }

    pub fn contains(&self, node: &VariableId) -> bool {
        self.index.contains_key(node.as_str())
    }

    pub fn is_exogenous(&self, node: &VariableId) -> Result<bool, GraphError> {
        Ok(self.exogenous[self.ix(node)?])
    }

    /// Edges in (parent, child) form, ordered by declaration.
    pub fn edges(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::new();
        for (p, kids) in self.children.iter().enumerate() {
            for &c in kids {
                out.push((self.nodes[p].clone(), self.nodes[c].clone()));
            }
        }
        out
    }

    pub fn has_edge(&self, from: &VariableId, to: &VariableId) -> Result<bool, GraphError> {
        let f = self.ix(from)?;
        let t = self.ix(to)?;
        Ok(self.children[f].binary_search(&t).is_ok())
    }

    pub fn parents_of(&self, node: &VariableId) -> Result<Vec<VariableId>, GraphError> {
        let i = self.ix(node)?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].clone()).collect())
    }

    fn ix(&self, node: &VariableId) -> Result<usize, GraphError> {
        self.index
            .get(node.as_str())
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(node.as_str().to_string()))
    }

    fn ix_set(&self, nodes: &[VariableId]) -> Result<Vec<bool>, GraphError> {
        let mut set = vec![false; self.nodes.len()];
        for node in nodes {
            set[self.ix(node)?] = true;
        }
        Ok(set)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // Iterative DFS with a gray/black coloring; returns the gray loop.
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let n = self.nodes.len();
        let mut color = vec![Color::White; n];
        let mut parent_in_dfs = vec![usize::MAX; n];
        for start in 0..n {
            if color[start] != Color::White {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = Color::Gray;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.children[v].len() {
                    let c = self.children[v][*next];
                    *next += 1;
                    match color[c] {
                        Color::White => {
                            color[c] = Color::Gray;
                            parent_in_dfs[c] = v;
                            stack.push((c, 0));
                        }
                        Color::Gray => {
                            let mut cycle = vec![self.nodes[c].as_str().to_string()];
                            let mut cur = v;
                            while cur != c {
                                cycle.push(self.nodes[cur].as_str().to_string());
                                cur = parent_in_dfs[cur];
                            }
                            cycle.push(self.nodes[c].as_str().to_string());
                            cycle.reverse();
                            return Some(cycle);
                        }
                        Color::Black => {}
                    }
                } else {
                    color[v] = Color::Black;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Returns a new graph with the specified edge classes removed.
    ///
    /// The node set (and exogenous marking) is unchanged; only edges are
    /// deleted, never added, and applying the same spec twice is a no-op.
    pub fn mutilate(&self, spec: &MutilationSpec) -> Result<CausalGraph, GraphError> {
        let mut out_of = vec![false; self.nodes.len()];
        for node in &spec.delete_outgoing_of {
            out_of[self.ix(node)?] = true;
        }
        let mut in_of = vec![false; self.nodes.len()];
        for node in &spec.delete_incoming_of {
            in_of[self.ix(node)?] = true;
        }
        let mut g = self.clone();
        for p in 0..g.children.len() {
            g.children[p].retain(|&c| !(out_of[p] || in_of[c]));
        }
        for c in 0..g.parents.len() {
            g.parents[c].retain(|&p| !(out_of[p] || in_of[c]));
        }
        Ok(g)
    }

    /// All nodes reachable from `from` by directed paths, excluding `from`
    /// itself.
    pub fn descendants(&self, from: &[VariableId]) -> Result<BTreeSet<VariableId>, GraphError> {
        let start = self.ix_set(from)?;
        let mut seen = start.clone();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| start[i]).collect();
        let mut out = BTreeSet::new();
        while let Some(v) = queue.pop_front() {
            for &c in &self.children[v] {
                if !seen[c] {
                    seen[c] = true;
                    out.insert(self.nodes[c].clone());
                    queue.push_back(c);
                }
            }
        }
        for node in from {
            out.remove(node);
        }
        Ok(out)
    }

    fn ancestors_or_self(&self, of: &[bool]) -> Vec<bool> {
        let mut seen = of.to_vec();
        let mut queue: VecDeque<usize> = (0..seen.len()).filter(|&i| seen[i]).collect();
        while let Some(v) = queue.pop_front() {
            for &p in &self.parents[v] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Standard d-separation: true iff every path between `a` and `b` is
    /// blocked given `c`.
    ///
    /// Chains and forks are blocked by conditioning on the middle node;
    /// colliders are open only if the collider or one of its descendants is
    /// conditioned on. The verdict is symmetric in `a` and `b`. The three
    /// sets must be pairwise disjoint.
    pub fn d_separated(
        &self,
        a: &[VariableId],
        b: &[VariableId],
        c: &[VariableId],
    ) -> Result<bool, GraphError> {
        let a_set = self.ix_set(a)?;
        let b_set = self.ix_set(b)?;
        let c_set = self.ix_set(c)?;
        for i in 0..self.nodes.len() {
            let hits = a_set[i] as u8 + b_set[i] as u8 + c_set[i] as u8;
            if hits > 1 {
                return Err(GraphError::OverlappingSets(
                    self.nodes[i].as_str().to_string(),
                ));
            }
        }
        // Reachability over (node, arrived-via) states. `via_incoming` means
        // the last traversed edge points into the node.
        let anc_c = self.ancestors_or_self(&c_set);
        let n = self.nodes.len();
        let mut visited = vec![[false; 2]; n];
        let mut queue: VecDeque<(usize, bool)> = VecDeque::new();
        let push = |queue: &mut VecDeque<(usize, bool)>,
                        visited: &mut Vec<[bool; 2]>,
                        node: usize,
                        via_incoming: bool|
         -> bool {
            if b_set[node] {
                return true;
            }
            if !visited[node][via_incoming as usize] {
                visited[node][via_incoming as usize] = true;
                queue.push_back((node, via_incoming));
            }
            false
        };
        for i in 0..n {
            if !a_set[i] {
                continue;
            }
            for &child in &self.children[i] {
                if push(&mut queue, &mut visited, child, true) {
                    return Ok(false);
                }
            }
            for &parent in &self.parents[i] {
                if push(&mut queue, &mut visited, parent, false) {
                    return Ok(false);
                }
            }
        }
        while let Some((v, via_incoming)) = queue.pop_front() {
            if via_incoming {
                // Chain w -> v -> c is open when v is unobserved; collider
                // w -> v <- p is open when v is an ancestor of (or in) C.
                if !c_set[v] {
                    for &child in &self.children[v] {
                        if push(&mut queue, &mut visited, child, true) {
                            return Ok(false);
                        }
                    }
                }
                if anc_c[v] {
                    for &parent in &self.parents[v] {
                        if push(&mut queue, &mut visited, parent, false) {
                            return Ok(false);
                        }
                    }
                }
            } else if !c_set[v] {
                // Fork w <- v -> c and chain w <- v <- p, both blocked only
                // by conditioning on v.
                for &child in &self.children[v] {
                    if push(&mut queue, &mut visited, child, true) {
                        return Ok(false);
                    }
                }
                for &parent in &self.parents[v] {
                    if push(&mut queue, &mut visited, parent, false) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// The experimental identifiability criterion for natural effects: after
    /// deleting all arrows emanating from `x` and from every member of
    /// `mediators`, `covariates` must d-separate `y` from the mediators.
    ///
    /// `covariates` must not contain a descendant of `x` or of any mediator;
    /// offenders are reported by name.
    pub fn check_experimental_criterion(
        &self,
        x: &VariableId,
        mediators: &[VariableId],
        y: &VariableId,
        covariates: &[VariableId],
    ) -> Result<bool, GraphError> {
        let mut sources = vec![x.clone()];
        sources.extend(mediators.iter().cloned());
        let desc = self.descendants(&sources)?;
        for w in covariates {
            if desc.contains(w) {
                return Err(GraphError::DescendantInSet {
                    set: "W",
                    node: w.as_str().to_string(),
                    of: format!("{} or mediators", x.as_str()),
                });
            }
        }
        let cut = self.mutilate(&MutilationSpec::outgoing(sources))?;
        cut.d_separated(std::slice::from_ref(y), mediators, covariates)
    }

    /// True iff `s` blocks every path from `x` to `z_target` that starts
    /// with an edge into `x` (checked by d-separation in the graph with the
    /// outgoing edges of `x` deleted). `s` must not contain descendants of
    /// `x`.
    pub fn backdoor_admissible(
        &self,
        x: &VariableId,
        z_target: &VariableId,
        s: &[VariableId],
    ) -> Result<bool, GraphError> {
        let desc = self.descendants(std::slice::from_ref(x))?;
        for v in s {
            if desc.contains(v) {
                return Err(GraphError::DescendantInSet {
                    set: "S",
                    node: v.as_str().to_string(),
                    of: x.as_str().to_string(),
                });
            }
        }
        let cut = self.mutilate(&MutilationSpec::outgoing([x.clone()]))?;
        cut.d_separated(
            std::slice::from_ref(x),
            std::slice::from_ref(z_target),
            s,
        )
    }
}

/// How the bar in the four-covariate criterion's subscripts is read.
///
/// The printed remark defines plain subscripts as "delete outgoing edges"
/// and barred subscripts as "delete incoming edges". Condition (iv) as
/// printed then leaves directed x -> ... -> z paths intact; the alternative
/// reading treats it back-door style (delete the outgoing edges of x
/// instead). The printed reading is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarConvention {
    #[default]
    Printed,
    BackdoorStyle,
}

/// Per-condition mutilations for [`CausalGraph::check_corollary1`].
///
/// Built from a [`BarConvention`] by default; individual entries may be
/// overridden for nonstandard readings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corollary1Mutilations {
    pub cond_i: MutilationSpec,
    pub cond_ii: MutilationSpec,
    pub cond_iii: MutilationSpec,
    pub cond_iv: MutilationSpec,
}

impl Corollary1Mutilations {
    pub fn with_convention(
        x: &VariableId,
        mediators: &[VariableId],
        convention: BarConvention,
    ) -> Self {
        let xz: Vec<VariableId> = std::iter::once(x.clone())
            .chain(mediators.iter().cloned())
            .collect();
        let cond_iv = match convention {
            BarConvention::Printed => MutilationSpec::incoming([x.clone()]),
            BarConvention::BackdoorStyle => MutilationSpec::outgoing([x.clone()]),
        };
        Corollary1Mutilations {
            cond_i: MutilationSpec::outgoing(xz),
            cond_ii: MutilationSpec {
                delete_outgoing_of: [x.clone()].into_iter().collect(),
                delete_incoming_of: mediators.iter().cloned().collect(),
            },
            cond_iii: MutilationSpec::incoming(mediators.iter().cloned()),
            cond_iv,
        }
    }
}

/// One row of a [`ConditionReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub label: String,
    /// Mutilation applied before testing, if the condition is a separation.
    pub mutilation: Option<MutilationSpec>,
    /// Human-readable statement of what was tested.
    pub premise: String,
    pub satisfied: bool,
}

/// Per-condition verdicts for a graphical criterion; `satisfied` is the
/// conjunction of the entries.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionEntry>,
    pub satisfied: bool,
}

impl ConditionReport {
    fn from_entries(conditions: Vec<ConditionEntry>) -> Self {
        let satisfied = conditions.iter().all(|c| c.satisfied);
        ConditionReport {
            conditions,
            satisfied,
        }
    }

    /// Labels of the conditions that failed.
    pub fn failed(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.label.as_str())
            .collect()
    }
}

fn names(set: &[VariableId]) -> String {
    if set.is_empty() {
        "{}".to_string()
    } else {
        let list: Vec<&str> = set.iter().map(|v| v.as_str()).collect();
        format!("{{{}}}", list.join(","))
    }
}

/// The four sets of covariates for the nonexperimental criterion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateQuad {
    pub w0: Vec<VariableId>,
    pub w1: Vec<VariableId>,
    pub w2: Vec<VariableId>,
    pub w3: Vec<VariableId>,
}

impl CausalGraph {
    /// Evaluates the five-part nonexperimental identification criterion and
    /// reports every condition individually.
    ///
    /// Conditions (i)-(iv) are separation tests in mutilated graphs (the
    /// mutilations come from `muts`, normally
    /// [`Corollary1Mutilations::with_convention`]); condition (v) requires
    /// that `w0`, `w1`, `w3` contain no descendant of `x` and `w2` no
    /// descendant of a mediator.
    pub fn check_corollary1(
        &self,
        x: &VariableId,
        mediators: &[VariableId],
        y: &VariableId,
        quad: &CovariateQuad,
        muts: &Corollary1Mutilations,
    ) -> Result<ConditionReport, GraphError> {
        let y_slice = std::slice::from_ref(y);
        let x_slice = std::slice::from_ref(x);

        let mut entries = Vec::new();

        let g1 = self.mutilate(&muts.cond_i)?;
        entries.push(ConditionEntry {
            label: "(i)".to_string(),
            mutilation: Some(muts.cond_i.clone()),
            premise: format!("{} _||_ {} | {}", y.as_str(), names(mediators), names(&quad.w0)),
            satisfied: g1.d_separated(y_slice, mediators, &quad.w0)?,
        });

        let mut w01 = quad.w0.clone();
        w01.extend(quad.w1.iter().cloned());
        let g2 = self.mutilate(&muts.cond_ii)?;
        entries.push(ConditionEntry {
            label: "(ii)".to_string(),
            mutilation: Some(muts.cond_ii.clone()),
            premise: format!("{} _||_ {} | {}", y.as_str(), x.as_str(), names(&w01)),
            satisfied: g2.d_separated(y_slice, x_slice, &w01)?,
        });

        let mut xw012 = vec![x.clone()];
        xw012.extend(w01.iter().cloned());
        xw012.extend(quad.w2.iter().cloned());
        let g3 = self.mutilate(&muts.cond_iii)?;
        entries.push(ConditionEntry {
            label: "(iii)".to_string(),
            mutilation: Some(muts.cond_iii.clone()),
            premise: format!("{} _||_ {} | {}", y.as_str(), names(mediators), names(&xw012)),
            satisfied: g3.d_separated(y_slice, mediators, &xw012)?,
        });

        let mut w03 = quad.w0.clone();
        w03.extend(quad.w3.iter().cloned());
        let g4 = self.mutilate(&muts.cond_iv)?;
        entries.push(ConditionEntry {
            label: "(iv)".to_string(),
            mutilation: Some(muts.cond_iv.clone()),
            premise: format!("{} _||_ {} | {}", names(mediators), x.as_str(), names(&w03)),
            satisfied: g4.d_separated(mediators, x_slice, &w03)?,
        });

        let desc_x = self.descendants(x_slice)?;
        let desc_z = self.descendants(mediators)?;
        let mut offender = None;
        for (set_name, set) in [("W0", &quad.w0), ("W1", &quad.w1), ("W3", &quad.w3)] {
            for v in set.iter() {
                if desc_x.contains(v) {
                    offender = Some(format!(
                        "{} contains {}, a descendant of {}",
                        set_name,
                        v.as_str(),
                        x.as_str()
                    ));
                }
            }
        }
        for v in quad.w2.iter() {
            if desc_z.contains(v) {
                offender = Some(format!(
                    "W2 contains {}, a descendant of a mediator",
                    v.as_str()
                ));
            }
        }
        entries.push(ConditionEntry {
            label: "(v)".to_string(),
            mutilation: None,
            premise: match &offender {
                Some(reason) => reason.clone(),
                None => "W0, W1, W3 free of descendants of X; W2 free of descendants of Z"
                    .to_string(),
            },
            satisfied: offender.is_none(),
        });

        Ok(ConditionReport::from_entries(entries))
    }
}

/// Which criterion a witness search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    Theorem1,
    Corollary1(BarConvention),
}

/// A covariate witness found by [`CausalGraph::search_witnesses`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// Covariate set for the experimental criterion.
    Experimental { w: Vec<VariableId> },
    /// Covariate quadruple for the nonexperimental criterion.
    Nonexperimental(CovariateQuad),
}

const SEARCH_NODE_CAP: usize = 20;

/// Enumerates subsets of `pool` by ascending size, lexicographically within
/// a size (pool must already be sorted by name).
fn subsets_by_size(pool: &[VariableId]) -> Vec<Vec<VariableId>> {
    let n = pool.len();
    let mut by_size: Vec<Vec<Vec<VariableId>>> = vec![Vec::new(); n + 1];
    // Lexicographic combinations per size via index recursion.
    fn rec(
        pool: &[VariableId],
        start: usize,
        k: usize,
        cur: &mut Vec<VariableId>,
        out: &mut Vec<Vec<VariableId>>,
    ) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=pool.len().saturating_sub(k) {
            cur.push(pool[i].clone());
            rec(pool, i + 1, k - 1, cur, out);
            cur.pop();
        }
    }
    for k in 0..=n {
        let mut cur = Vec::new();
        rec(pool, 0, k, &mut cur, &mut by_size[k]);
    }
    by_size.into_iter().flatten().collect()
}

impl CausalGraph {
    /// First subset of `candidates` (minimal total size, then lexicographic)
    /// that is back-door admissible for `x` against every target, or `None`.
    /// Candidates that are descendants of `x` or appear among the targets
    /// are filtered out; the same node cap as the witness search applies.
    pub fn search_backdoor_set(
        &self,
        x: &VariableId,
        targets: &[VariableId],
        candidates: &BTreeSet<VariableId>,
    ) -> Result<Option<Vec<VariableId>>, GraphError> {
        if self.node_count() > SEARCH_NODE_CAP {
            return Err(GraphError::CapacityExceeded(self.node_count(), SEARCH_NODE_CAP));
        }
        let desc = self.descendants(std::slice::from_ref(x))?;
        let pool: Vec<VariableId> = candidates
            .iter()
            .filter(|v| self.contains(v))
            .filter(|v| *v != x && !targets.contains(v))
            .filter(|v| !desc.contains(*v))
            .cloned()
            .collect();
        for s in subsets_by_size(&pool) {
            let mut admissible = true;
            for target in targets {
                if !self.backdoor_admissible(x, target, &s)? {
                    admissible = false;
                    break;
                }
            }
            if admissible {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Searches for covariate sets satisfying the requested criterion.
    ///
    /// Candidates are drawn from `observed` (the model's observable
    /// variables), restricted to the descendant-freedom requirements of the
    /// criterion and excluding `x`, `y`, and the mediators. The first
    /// witness under minimal-total-size order (ties broken lexicographically
    /// by node name) is returned, or `None` when no witness exists.
    ///
    /// Graphs above 20 nodes are refused: the subset search is exponential.
    pub fn search_witnesses(
        &self,
        x: &VariableId,
        mediators: &[VariableId],
        y: &VariableId,
        observed: &BTreeSet<VariableId>,
        mode: SearchMode,
    ) -> Result<Option<Witness>, GraphError> {
        if self.node_count() > SEARCH_NODE_CAP {
            return Err(GraphError::CapacityExceeded(self.node_count(), SEARCH_NODE_CAP));
        }
        self.ix(x)?;
        self.ix(y)?;
        let mut sources = vec![x.clone()];
        sources.extend(mediators.iter().cloned());
        let desc_xz = self.descendants(&sources)?;
        let desc_x = self.descendants(std::slice::from_ref(x))?;
        let desc_z = self.descendants(mediators)?;
        let excluded: BTreeSet<&VariableId> = std::iter::once(x)
            .chain(std::iter::once(y))
            .chain(mediators.iter())
            .collect();
        // Pools are sorted by name: BTreeSet iteration order.
        let pool_of = |banned_desc: &BTreeSet<VariableId>| -> Vec<VariableId> {
            observed
                .iter()
                .filter(|v| self.contains(v))
                .filter(|v| !excluded.contains(v))
                .filter(|v| !banned_desc.contains(*v))
                .cloned()
                .collect()
        };
        match mode {
            SearchMode::Theorem1 => {
                let pool = pool_of(&desc_xz);
                for w in subsets_by_size(&pool) {
                    if self.check_experimental_criterion(x, mediators, y, &w)? {
                        return Ok(Some(Witness::Experimental { w }));
                    }
                }
                Ok(None)
            }
            SearchMode::Corollary1(convention) => {
                let muts = Corollary1Mutilations::with_convention(x, mediators, convention);
                let pool_x = pool_of(&desc_x);
                let pool_z = pool_of(&desc_z);
                let subsets_x = subsets_by_size(&pool_x);
                let subsets_z = subsets_by_size(&pool_z);
                let max_total = pool_x.len() * 3 + pool_z.len();
                for total in 0..=max_total {
                    for w0 in subsets_x.iter().filter(|s| s.len() <= total) {
                        for w1 in subsets_x.iter().filter(|s| w0.len() + s.len() <= total) {
                            for w2 in subsets_z
                                .iter()
                                .filter(|s| w0.len() + w1.len() + s.len() <= total)
                            {
                                let rest = total - w0.len() - w1.len() - w2.len();
                                for w3 in subsets_x.iter().filter(|s| s.len() == rest) {
                                    let quad = CovariateQuad {
                                        w0: w0.clone(),
                                        w1: w1.clone(),
                                        w2: w2.clone(),
                                        w3: w3.clone(),
                                    };
                                    let report =
                                        self.check_corollary1(x, mediators, y, &quad, &muts)?;
                                    if report.satisfied {
                                        return Ok(Some(Witness::Nonexperimental(quad)));
                                    }
                                }
                            }
                        }
                    }
                }
                Ok(None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> VariableId {
        VariableId::new(name).unwrap()
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> CausalGraph {
        CausalGraph::new(
            nodes.iter().map(|n| v(n)).collect(),
            &edges
                .iter()
                .map(|(a, b)| (v(a), v(b)))
                .collect::<Vec<_>>(),
            &BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_names() {
        assert!(VariableId::new("").is_err());
        assert!(VariableId::new("a b").is_err());
        assert!(VariableId::new("x-1").is_err());
        assert!(VariableId::new("X_1").is_ok());
    }

    #[test]
    fn rejects_cycles() {
        let err = CausalGraph::new(
            vec![v("A"), v("B"), v("C")],
            &[(v("A"), v("B")), (v("B"), v("C")), (v("C"), v("A"))],
            &BTreeSet::new(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Cycle(_)));
    }

    #[test]
    fn rejects_exogenous_with_parents() {
        let err = CausalGraph::new(
            vec![v("A"), v("B")],
            &[(v("A"), v("B"))],
            &[v("B")].into_iter().collect(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::ExogenousWithParents(_)));
    }

    #[test]
    fn mutilate_chain() {
        let g = graph(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")]);
        let cut = g.mutilate(&MutilationSpec::outgoing([v("X")])).unwrap();
        assert_eq!(cut.edges(), vec![(v("Z"), v("Y"))]);
        let cut2 = g.mutilate(&MutilationSpec::incoming([v("Z")])).unwrap();
        assert_eq!(cut2.edges(), vec![(v("Z"), v("Y"))]);
        assert_eq!(cut.node_count(), 3);
    }

    #[test]
    fn mutilate_diamond() {
        // X->Z, X->W, Z->W, Z->Y, W->Y; deleting outgoing of {X,Z} leaves W->Y.
        let g = graph(
            &["X", "Z", "W", "Y"],
            &[("X", "Z"), ("X", "W"), ("Z", "W"), ("Z", "Y"), ("W", "Y")],
        );
        let cut = g
            .mutilate(&MutilationSpec::outgoing([v("X"), v("Z")]))
            .unwrap();
        assert_eq!(cut.edges(), vec![(v("W"), v("Y"))]);
    }

    #[test]
    fn mutilate_unknown_node() {
        let g = graph(&["X"], &[]);
        assert!(g.mutilate(&MutilationSpec::outgoing([v("Q")])).is_err());
    }

    #[test]
    fn dsep_chain_and_collider() {
        let chain = graph(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")]);
        assert!(chain.d_separated(&[v("X")], &[v("Y")], &[v("Z")]).unwrap());
        assert!(!chain.d_separated(&[v("X")], &[v("Y")], &[]).unwrap());

        let collider = graph(&["X", "Z", "Y"], &[("X", "Z"), ("Y", "Z")]);
        assert!(collider.d_separated(&[v("X")], &[v("Y")], &[]).unwrap());
        assert!(!collider.d_separated(&[v("X")], &[v("Y")], &[v("Z")]).unwrap());
    }

    #[test]
    fn dsep_collider_descendant_opens() {
        let g = graph(&["X", "Z", "Y", "D"], &[("X", "Z"), ("Y", "Z"), ("Z", "D")]);
        assert!(!g.d_separated(&[v("X")], &[v("Y")], &[v("D")]).unwrap());
    }

    #[test]
    fn dsep_rejects_overlap() {
        let g = graph(&["X", "Y"], &[("X", "Y")]);
        assert!(matches!(
            g.d_separated(&[v("X")], &[v("X")], &[]),
            Err(GraphError::OverlappingSets(_))
        ));
    }

    #[test]
    fn descendants_chain() {
        let g = graph(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")]);
        assert_eq!(
            g.descendants(&[v("X")]).unwrap(),
            [v("Z"), v("Y")].into_iter().collect()
        );
        assert!(g.descendants(&[v("Y")]).unwrap().is_empty());
        let diamond = graph(
            &["X", "Z", "W", "Y"],
            &[("X", "Z"), ("X", "W"), ("Z", "W"), ("Z", "Y"), ("W", "Y")],
        );
        assert_eq!(
            diamond.descendants(&[v("Z")]).unwrap(),
            [v("W"), v("Y")].into_iter().collect()
        );
    }

    fn fixture_e_graph() -> CausalGraph {
        graph(
            &["X", "W", "Z", "Y"],
            &[("X", "Z"), ("X", "Y"), ("Z", "Y"), ("W", "Z"), ("W", "Y")],
        )
    }

    #[test]
    fn experimental_criterion() {
        let g = fixture_e_graph();
        assert!(g
            .check_experimental_criterion(&v("X"), &[v("Z")], &v("Y"), &[v("W")])
            .unwrap());
        // Open path Z <- W -> Y remains without conditioning on W.
        assert!(!g
            .check_experimental_criterion(&v("X"), &[v("Z")], &v("Y"), &[])
            .unwrap());

        let simple = graph(&["X", "Z", "Y"], &[("X", "Z"), ("X", "Y"), ("Z", "Y")]);
        assert!(simple
            .check_experimental_criterion(&v("X"), &[v("Z")], &v("Y"), &[])
            .unwrap());
    }

    #[test]
    fn experimental_criterion_rejects_descendant_covariate() {
        let g = graph(&["X", "Z", "Y", "D"], &[("X", "Z"), ("Z", "Y"), ("Y", "D")]);
        let err = g
            .check_experimental_criterion(&v("X"), &[v("Z")], &v("Y"), &[v("D")])
            .unwrap_err();
        match err {
            GraphError::DescendantInSet { node, .. } => assert_eq!(node, "D"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn backdoor_textbook() {
        let g = graph(&["C", "X", "Z"], &[("C", "X"), ("C", "Z"), ("X", "Z")]);
        assert!(g.backdoor_admissible(&v("X"), &v("Z"), &[v("C")]).unwrap());
        assert!(!g.backdoor_admissible(&v("X"), &v("Z"), &[]).unwrap());
        let chain = graph(&["X", "Z"], &[("X", "Z")]);
        assert!(chain.backdoor_admissible(&v("X"), &v("Z"), &[]).unwrap());
    }

    #[test]
    fn backdoor_set_search_is_minimal() {
        let g = graph(&["C", "X", "Z"], &[("C", "X"), ("C", "Z"), ("X", "Z")]);
        let found = g
            .search_backdoor_set(&v("X"), &[v("Z")], &all_observed(&g))
            .unwrap();
        assert_eq!(found, Some(vec![v("C")]));
        let chain = graph(&["X", "Z"], &[("X", "Z")]);
        assert_eq!(
            chain
                .search_backdoor_set(&v("X"), &[v("Z")], &all_observed(&chain))
                .unwrap(),
            Some(vec![])
        );
        // Direct edge into the treatment from the target side: hopeless.
        let rev = graph(&["X", "Z"], &[("Z", "X")]);
        assert_eq!(
            rev.search_backdoor_set(&v("X"), &[v("Z")], &all_observed(&rev))
                .unwrap(),
            None
        );
    }

    #[test]
    fn backdoor_rejects_descendant() {
        let g = graph(&["X", "Z", "D"], &[("X", "Z"), ("X", "D")]);
        assert!(matches!(
            g.backdoor_admissible(&v("X"), &v("Z"), &[v("D")]),
            Err(GraphError::DescendantInSet { .. })
        ));
    }

    #[test]
    fn corollary1_chain_per_condition() {
        let g = graph(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")]);
        let muts =
            Corollary1Mutilations::with_convention(&v("X"), &[v("Z")], BarConvention::Printed);
        let report = g
            .check_corollary1(&v("X"), &[v("Z")], &v("Y"), &CovariateQuad::default(), &muts)
            .unwrap();
        let verdicts: Vec<bool> = report.conditions.iter().map(|c| c.satisfied).collect();
        // (i) true, (ii) true, (iii) false (Z->Y survives deleting Z's
        // incoming edges), (iv) false under the printed reading, (v) true.
        assert_eq!(verdicts, vec![true, true, false, false, true]);
        assert!(!report.satisfied);
        assert_eq!(report.failed(), vec!["(iii)", "(iv)"]);
    }

    #[test]
    fn corollary1_condition_v_names_reason() {
        let g = graph(&["X", "Z", "Y", "D"], &[("X", "Z"), ("Z", "Y"), ("X", "D")]);
        let muts =
            Corollary1Mutilations::with_convention(&v("X"), &[v("Z")], BarConvention::Printed);
        let quad = CovariateQuad {
            w0: vec![v("D")],
            ..CovariateQuad::default()
        };
        let report = g
            .check_corollary1(&v("X"), &[v("Z")], &v("Y"), &quad, &muts)
            .unwrap();
        assert!(!report.satisfied);
        let v_entry = report.conditions.last().unwrap();
        assert_eq!(v_entry.label, "(v)");
        assert!(!v_entry.satisfied);
        assert!(v_entry.premise.contains("W0 contains D"));
    }

    fn all_observed(g: &CausalGraph) -> BTreeSet<VariableId> {
        g.nodes().iter().cloned().collect()
    }

    #[test]
    fn witness_search_simple_markovian() {
        let g = graph(&["X", "Z", "Y"], &[("X", "Z"), ("X", "Y"), ("Z", "Y")]);
        let w = g
            .search_witnesses(&v("X"), &[v("Z")], &v("Y"), &all_observed(&g), SearchMode::Theorem1)
            .unwrap();
        assert_eq!(w, Some(Witness::Experimental { w: vec![] }));
    }

    #[test]
    fn witness_search_needs_confounder() {
        let g = fixture_e_graph();
        let w = g
            .search_witnesses(&v("X"), &[v("Z")], &v("Y"), &all_observed(&g), SearchMode::Theorem1)
            .unwrap();
        assert_eq!(w, Some(Witness::Experimental { w: vec![v("W")] }));
    }

    #[test]
    fn witness_search_latent_common_parent_absent() {
        // L is a common parent of Z and Y but excluded from the pool.
        let g = graph(
            &["X", "Z", "Y", "L"],
            &[("X", "Z"), ("X", "Y"), ("Z", "Y"), ("L", "Z"), ("L", "Y")],
        );
        let observed: BTreeSet<VariableId> =
            [v("X"), v("Z"), v("Y")].into_iter().collect();
        let w = g
            .search_witnesses(&v("X"), &[v("Z")], &v("Y"), &observed, SearchMode::Theorem1)
            .unwrap();
        assert_eq!(w, None);
    }

    #[test]
    fn witness_search_cap() {
        let nodes: Vec<VariableId> = (0..21).map(|i| v(&format!("N{i}"))).collect();
        let g = CausalGraph::new(nodes, &[], &BTreeSet::new()).unwrap();
        assert!(matches!(
            g.search_witnesses(
                &v("N0"),
                &[v("N1")],
                &v("N2"),
                &BTreeSet::new(),
                SearchMode::Theorem1
            ),
            Err(GraphError::CapacityExceeded(21, 20))
        ));
    }

    #[test]
    fn corollary1_search_printed_reading_is_strict() {
        // Under the printed reading, (iii) keeps Z -> Y and (iv) keeps
        // X -> Z, so no covariate quad can exist for a genuine mediator.
        let g = fixture_e_graph();
        let w = g
            .search_witnesses(
                &v("X"),
                &[v("Z")],
                &v("Y"),
                &all_observed(&g),
                SearchMode::Corollary1(BarConvention::Printed),
            )
            .unwrap();
        assert_eq!(w, None);

        // A graph whose "mediator" does not reach Y is satisfiable under
        // the back-door-style (iv).
        let side = graph(&["X", "Z", "Y"], &[("X", "Z"), ("X", "Y")]);
        let w = side
            .search_witnesses(
                &v("X"),
                &[v("Z")],
                &v("Y"),
                &all_observed(&side),
                SearchMode::Corollary1(BarConvention::BackdoorStyle),
            )
            .unwrap();
        assert_eq!(w, Some(Witness::Nonexperimental(CovariateQuad::default())));
    }

    #[test]
    fn corollary1_custom_mutilations_on_fixture_e() {
        // Do-calculus-style readings for (iii) and (iv): delete the edges
        // emanating from the mutilated variable. With those, conditioning
        // on W satisfies all five conditions.
        let g = fixture_e_graph();
        let mut muts =
            Corollary1Mutilations::with_convention(&v("X"), &[v("Z")], BarConvention::BackdoorStyle);
        muts.cond_iii = MutilationSpec::outgoing([v("Z")]);
        let quad = CovariateQuad {
            w0: vec![v("W")],
            ..CovariateQuad::default()
        };
        let report = g
            .check_corollary1(&v("X"), &[v("Z")], &v("Y"), &quad, &muts)
            .unwrap();
        assert!(report.satisfied, "{report:?}");
    }
}
