//! Causal DAGs, d-separation and the backdoor criterion.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Default cap on the number of candidate nodes searched by
/// [`CausalDag::minimal_backdoor_sets`].
pub const DEFAULT_CANDIDATE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node names must be non-empty")]
    EmptyNodeName,
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("node `{0}` appears in more than one of the argument sets")]
    OverlappingSets(String),
    #[error("treatment and outcome are the same node `{0}`")]
    TreatmentEqualsOutcome(String),
    #[error("{candidates} candidate adjustment nodes exceed the search cap of {cap}")]
    GraphTooLarge { candidates: usize, cap: usize },
}

/// A directed acyclic graph over named variables. Unobserved nodes stand for
/// latent or exogenous variables: they take part in paths but can never be
/// adjusted for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    names: Vec<String>,
    observed: Vec<bool>,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalDag {
    /// Validates nodes and edges and builds the graph.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = (String, bool)>,
        E: IntoIterator<Item = (String, String)>,
    {
        let mut names = Vec::new();
        let mut observed = Vec::new();
        let mut index = BTreeMap::new();
        for (name, obs) in nodes {
            if name.is_empty() {
                return Err(GraphError::EmptyNodeName);
            }
            if index.contains_key(&name) {
                return Err(GraphError::DuplicateNode(name));
            }
            index.insert(name.clone(), names.len());
            names.push(name);
            observed.push(obs);
        }
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (from, to) in edges {
            let a = *index.get(&from).ok_or_else(|| GraphError::UnknownNode(from.clone()))?;
            let b = *index.get(&to).ok_or_else(|| GraphError::UnknownNode(to.clone()))?;
            if a == b {
                return Err(GraphError::CycleDetected(vec![from.clone(), from]));
            }
            if !seen.insert((a, b)) {
                return Err(GraphError::DuplicateEdge(from, to));
            }
            children[a].push(b);
            parents[b].push(a);
        }
        let dag = CausalDag { names, observed, index, parents, children };
        if let Some(cycle) = dag.find_cycle() {
            return Err(GraphError::CycleDetected(cycle));
        }
        Ok(dag)
    }

    /// Convenience constructor where every node is observed.
    pub fn from_names(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        Self::new(
            nodes.iter().map(|n| (n.to_string(), true)),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.names.len();
        let mut color = vec![0u8; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if color[root] != 0 {
                continue;
            }
            color[root] = 1;
            stack.push((root, 0));
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&child) = self.children[node].get(*next) {
                    *next += 1;
                    match color[child] {
                        0 => {
                            color[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|&(v, _)| v == child).unwrap();
                            let mut cycle: Vec<String> =
                                stack[start..].iter().map(|&(v, _)| self.names[v].clone()).collect();
                            cycle.push(self.names[child].clone());
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[node] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn is_observed(&self, name: &str) -> Result<bool, GraphError> {
        Ok(self.observed[self.idx(name)?])
    }

    /// Edges as (parent, child) name pairs, in insertion order per parent.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (a, kids) in self.children.iter().enumerate() {
            for &b in kids {
                out.push((self.names[a].as_str(), self.names[b].as_str()));
            }
        }
        out
    }

    pub fn parents_of(&self, name: &str) -> Result<BTreeSet<String>, GraphError> {
        let i = self.idx(name)?;
        Ok(self.parents[i].iter().map(|&p| self.names[p].clone()).collect())
    }

    fn idx(&self, name: &str) -> Result<usize, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    fn idx_set<'a, I>(&self, names: I) -> Result<BTreeSet<usize>, GraphError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        names.into_iter().map(|n| self.idx(n)).collect()
    }

    fn view(&self) -> View<'_> {
        View { dag: self, cut_outgoing: None }
    }

    /// All nodes reachable from `node` by a directed path, excluding `node`.
    pub fn descendants(&self, node: &str) -> Result<BTreeSet<String>, GraphError> {
        let i = self.idx(node)?;
        Ok(self.view().descendants(i).into_iter().map(|d| self.names[d].clone()).collect())
    }

    /// True iff `given` d-separates every node in `a` from every node in `b`.
    pub fn d_separated(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<bool, GraphError> {
        let (a, b, given) = self.disjoint_sets(a, b, given)?;
        Ok(self.view().d_separated(&a, &b, &given))
    }

    fn disjoint_sets(
        &self,
        a: &[&str],
        b: &[&str],
        given: &[&str],
    ) -> Result<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>), GraphError> {
        let a = self.idx_set(a.iter().copied())?;
        let b = self.idx_set(b.iter().copied())?;
        let given = self.idx_set(given.iter().copied())?;
        for &x in &a {
            if b.contains(&x) || given.contains(&x) {
                return Err(GraphError::OverlappingSets(self.names[x].clone()));
            }
        }
        if let Some(&x) = b.intersection(&given).next() {
            return Err(GraphError::OverlappingSets(self.names[x].clone()));
        }
        Ok((a, b, given))
    }

    /// Checks the backdoor criterion for `z` relative to (treatment, outcome).
    /// The returned set is marked valid iff no member descends from the
    /// treatment, every member is observed, and `z` blocks every path from
    /// treatment to outcome that starts with an arrow into the treatment.
    pub fn satisfies_backdoor<S: AsRef<str>>(
        &self,
        z: &[S],
        treatment: &str,
        outcome: &str,
    ) -> Result<AdjustmentSet, GraphError> {
        let (x, y) = self.pair(treatment, outcome)?;
        let mut members = BTreeSet::new();
        for name in z {
            let i = self.idx(name.as_ref())?;
            if i == x || i == y {
                return Err(GraphError::OverlappingSets(self.names[i].clone()));
            }
            members.insert(i);
        }
        let valid = self.backdoor_valid(&members, x, y);
        Ok(AdjustmentSet {
            variables: members.iter().map(|&i| self.names[i].clone()).collect(),
            valid,
            treatment: treatment.to_string(),
            outcome: outcome.to_string(),
        })
    }

    fn pair(&self, treatment: &str, outcome: &str) -> Result<(usize, usize), GraphError> {
        let x = self.idx(treatment)?;
        let y = self.idx(outcome)?;
        if x == y {
            return Err(GraphError::TreatmentEqualsOutcome(treatment.to_string()));
        }
        Ok((x, y))
    }

    fn backdoor_valid(&self, z: &BTreeSet<usize>, x: usize, y: usize) -> bool {
        if z.iter().any(|&i| !self.observed[i]) {
            return false;
        }
        let desc = self.view().descendants(x);
        if z.iter().any(|i| desc.contains(i)) {
            return false;
        }
        let cut = View { dag: self, cut_outgoing: Some(x) };
        cut.d_separated(&BTreeSet::from([x]), &BTreeSet::from([y]), z)
    }

    /// Every inclusion-minimal observed backdoor set, sorted by size and then
    /// lexicographically by sorted member names. An empty result means the
    /// effect is not identifiable by backdoor adjustment.
    pub fn minimal_backdoor_sets(
        &self,
        treatment: &str,
        outcome: &str,
    ) -> Result<Vec<AdjustmentSet>, GraphError> {
        self.minimal_backdoor_sets_capped(treatment, outcome, DEFAULT_CANDIDATE_CAP)
    }

    pub fn minimal_backdoor_sets_capped(
        &self,
        treatment: &str,
        outcome: &str,
        cap: usize,
    ) -> Result<Vec<AdjustmentSet>, GraphError> {
        let (x, y) = self.pair(treatment, outcome)?;
        let desc = self.view().descendants(x);
        // candidates in name order so subset enumeration is already lexicographic
        let candidates: Vec<usize> = self
            .index
            .values()
            .copied()
            .filter(|&i| i != x && i != y && self.observed[i] && !desc.contains(&i))
            .collect();
        if candidates.len() > cap {
            return Err(GraphError::GraphTooLarge { candidates: candidates.len(), cap });
        }
        let k = candidates.len();
        let mut found: Vec<BTreeSet<usize>> = Vec::new();
        for size in 0..=k {
            let mut this_size = Vec::new();
            for combo in Combinations::new(k, size) {
                let set: BTreeSet<usize> = combo.iter().map(|&c| candidates[c]).collect();
                if found.iter().any(|m| m.is_subset(&set)) {
                    continue;
                }
                if self.backdoor_valid(&set, x, y) {
                    this_size.push(set);
                }
            }
            found.extend(this_size);
        }
        let mut sets: Vec<AdjustmentSet> = found
            .into_iter()
            .map(|s| AdjustmentSet {
                variables: s.iter().map(|&i| self.names[i].clone()).collect(),
                valid: true,
                treatment: treatment.to_string(),
                outcome: outcome.to_string(),
            })
            .collect();
        sets.sort_by(|a, b| {
            a.variables
                .len()
                .cmp(&b.variables.len())
                .then_with(|| a.variables.iter().cmp(b.variables.iter()))
        });
        Ok(sets)
    }

    /// A path from treatment to outcome that begins with an arrow into the
    /// treatment and is left open by `z`, if any. Used to explain why a set
    /// (or the empty set) fails the backdoor criterion.
    pub fn open_backdoor_path<S: AsRef<str>>(
        &self,
        z: &[S],
        treatment: &str,
        outcome: &str,
    ) -> Result<Option<BackdoorPath>, GraphError> {
        let (x, y) = self.pair(treatment, outcome)?;
        let given = self.idx_set(z.iter().map(AsRef::as_ref))?;
        let view = View { dag: self, cut_outgoing: Some(x) };
        let mut path = vec![x];
        let mut on_path = vec![false; self.len()];
        on_path[x] = true;
        let found = view.search_open_path(&mut path, &mut on_path, y, &given);
        Ok(found.then(|| BackdoorPath {
            nodes: path.iter().map(|&i| self.names[i].clone()).collect(),
            forward: path.windows(2).map(|w| self.children[w[0]].contains(&w[1])).collect(),
        }))
    }
}

/// Read-only adjacency view, optionally with every edge out of one node removed.
struct View<'a> {
    dag: &'a CausalDag,
    cut_outgoing: Option<usize>,
}

impl View<'_> {
    fn children(&self, v: usize) -> &[usize] {
        if self.cut_outgoing == Some(v) {
            &[]
        } else {
            &self.dag.children[v]
        }
    }

    fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let cut = self.cut_outgoing;
        self.dag.parents[v].iter().copied().filter(move |&p| Some(p) != cut)
    }

    fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.children(v).iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            if c != v && seen.insert(c) {
                queue.extend(self.children(c).iter().copied());
            }
        }
        seen
    }

    /// Reachability ("Bayes ball") formulation of d-separation.
    fn d_separated(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>, given: &BTreeSet<usize>) -> bool {
        let n = self.dag.len();
        // nodes that are in `given` or have a descendant in it
        let mut given_anc = vec![false; n];
        let mut queue: VecDeque<usize> = given.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if !given_anc[v] {
                given_anc[v] = true;
                queue.extend(self.parents(v));
            }
        }
        const UP: usize = 0; // arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; n];
        let mut queue: VecDeque<(usize, usize)> = a.iter().map(|&v| (v, UP)).collect();
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            let blocked = given.contains(&v);
            if !blocked && b.contains(&v) {
                return false;
            }
            if dir == UP && !blocked {
                queue.extend(self.parents(v).map(|p| (p, UP)));
                queue.extend(self.children(v).iter().map(|&c| (c, DOWN)));
            } else if dir == DOWN {
                if !blocked {
                    queue.extend(self.children(v).iter().map(|&c| (c, DOWN)));
                }
                if given_anc[v] {
                    queue.extend(self.parents(v).map(|p| (p, UP)));
                }
            }
        }
        true
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parents(v).chain(self.children(v).iter().copied())
    }

    fn is_edge(&self, from: usize, to: usize) -> bool {
        self.children(from).contains(&to)
    }

    fn search_open_path(
        &self,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        target: usize,
        given: &BTreeSet<usize>,
    ) -> bool {
        let last = *path.last().unwrap();
        let nbrs: Vec<usize> = self.neighbours(last).collect();
        for next in nbrs {
            if on_path[next] {
                continue;
            }
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                let collider = self.is_edge(prev, last) && self.is_edge(next, last);
                let open = if collider {
                    given.contains(&last) || self.descendants(last).iter().any(|d| given.contains(d))
                } else {
                    !given.contains(&last)
                };
                if !open {
                    continue;
                }
            }
            path.push(next);
            if next == target {
                return true;
            }
            on_path[next] = true;
            if self.search_open_path(path, on_path, target, given) {
                return true;
            }
            on_path[next] = false;
            path.pop();
        }
        false
    }
}

/// Lexicographic k-subsets of 0..n.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations { n, current: (k <= n).then(|| (0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// A candidate adjustment set for a (treatment, outcome) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustmentSet {
    pub variables: BTreeSet<String>,
    pub valid: bool,
    pub treatment: String,
    pub outcome: String,
}

impl AdjustmentSet {
    pub fn names(&self) -> Vec<String> {
        self.variables.iter().cloned().collect()
    }
}

impl fmt::Display for AdjustmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// An open path between treatment and outcome; `forward[k]` tells whether
/// the edge between `nodes[k]` and `nodes[k + 1]` points forward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackdoorPath {
    pub nodes: Vec<String>,
    pub forward: Vec<bool>,
}

impl fmt::Display for BackdoorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = self.nodes[0].clone();
        for (node, fwd) in self.nodes[1..].iter().zip(&self.forward) {
            s.push_str(if *fwd { " -> " } else { " <- " });
            s.push_str(node);
        }
        f.write_str(&s)
    }
}

impl BackdoorPath {
    pub fn describe(&self) -> String {
        format!("{self}")
    }
}
