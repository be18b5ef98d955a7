//! Weighted multigraphs of conductances, boundary conditions and node fusion.
//!
//! Nodes carry string names externally and dense indices internally. The
//! declaration order of nodes is the canonical order for every vector and
//! matrix in the crate; the file order of branches defines their ids.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single resistive branch. `u == v` marks a self-loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub g: f64,
}

impl Branch {
    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }

    /// The endpoint opposite `k`. Panics if `k` is not an endpoint.
    pub fn other(&self, k: usize) -> usize {
        if self.u == k {
            self.v
        } else {
            assert_eq!(self.v, k, "node {k} is not an endpoint of branch {}", self.id);
            self.u
        }
    }
}

/// On-disk form of a network: `{"nodes": [...], "branches": [{"u", "v", "g"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: Vec<String>,
    pub branches: Vec<BranchSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub u: String,
    pub v: String,
    pub g: f64,
}

/// A validated, connected, immutable conductance network.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    branches: Vec<Branch>,
    incident: Vec<Vec<usize>>,
}

/// Builds a network from named nodes and `(u, v, g)` branch triples.
pub fn build_network<S: AsRef<str>>(nodes: &[S], branches: &[(S, S, f64)]) -> Result<Network> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, name) in nodes.iter().enumerate() {
        let name = name.as_ref();
        if index.insert(name.to_string(), i).is_some() {
            return Err(Error::DuplicateNode(name.to_string()));
        }
    }
    let mut resolved = Vec::with_capacity(branches.len());
    for (id, (u, v, g)) in branches.iter().enumerate() {
        let lookup = |name: &S| {
            index.get(name.as_ref()).copied().ok_or_else(|| Error::UnknownEndpoint {
                branch: id,
                node: name.as_ref().to_string(),
            })
        };
        resolved.push((lookup(u)?, lookup(v)?, *g));
    }
    let names = nodes.iter().map(|s| s.as_ref().to_string()).collect();
    Network::from_indexed(names, &resolved)
}

impl Network {
    /// Builds a network from node names and index-based branch triples.
    pub fn from_indexed(nodes: Vec<String>, branches: &[(usize, usize, f64)]) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, name) in nodes.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let n = nodes.len();
        let mut out = Vec::with_capacity(branches.len());
        let mut incident = vec![Vec::new(); n];
        for (id, &(u, v, g)) in branches.iter().enumerate() {
            for k in [u, v] {
                if k >= n {
                    return Err(Error::UnknownEndpoint { branch: id, node: k.to_string() });
                }
            }
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::NonPositiveConductance { branch: id, g });
            }
            incident[u].push(id);
            if u != v {
                incident[v].push(id);
            }
            out.push(Branch { id, u, v, g });
        }
        let net = Network { nodes, index, branches: out, incident };
        if let Some(k) = net.first_unreachable() {
            return Err(Error::Disconnected(net.nodes[k].clone()));
        }
        Ok(net)
    }

    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        let triples: Vec<(&str, &str, f64)> =
            spec.branches.iter().map(|b| (b.u.as_str(), b.v.as_str(), b.g)).collect();
        let nodes: Vec<&str> = spec.nodes.iter().map(String::as_str).collect();
        build_network(&nodes, &triples)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            nodes: self.nodes.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchSpec { u: self.nodes[b.u].clone(), v: self.nodes[b.v].clone(), g: b.g })
                .collect(),
        }
    }

    fn first_unreachable(&self) -> Option<usize> {
        let n = self.nodes.len();
        if n == 0 {
            return None;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            for &b in &self.incident[k] {
                let m = self.branches[b].other(k);
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn name(&self, k: usize) -> &str {
        &self.nodes[k]
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, id: usize) -> &Branch {
        &self.branches[id]
    }

    /// Branch ids incident to `k`; a self-loop appears once.
    pub fn incident(&self, k: usize) -> &[usize] {
        &self.incident[k]
    }

    pub fn node(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn check_node(&self, k: usize) -> Result<usize> {
        if k < self.nodes.len() {
            Ok(k)
        } else {
            Err(Error::NodeIndexOutOfRange(k))
        }
    }

    /// Sum of the conductances incident to `k`, with a self-loop counted once.
    pub fn total_conductance_at(&self, k: usize) -> Result<f64> {
        self.check_node(k)?;
        Ok(self.incident[k].iter().map(|&b| self.branches[b].g).sum())
    }

    /// Sum of every branch conductance, self-loops included.
    pub fn total_conductance(&self) -> f64 {
        self.branches.iter().map(|b| b.g).sum()
    }

    /// Conductance summed over the parallel branches joining `k` and `l`.
    pub fn pair_conductance(&self, k: usize, l: usize) -> f64 {
        self.incident[k]
            .iter()
            .map(|&b| &self.branches[b])
            .filter(|b| b.other(k) == l)
            .map(|b| b.g)
            .sum()
    }

    /// A copy with every conductance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Network {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.g *= factor;
        }
        out
    }

    /// The weighted Laplacian; self-loops do not contribute.
    pub fn laplacian(&self) -> nalgebra::DMatrix<f64> {
        let n = self.node_count();
        let mut lap = nalgebra::DMatrix::zeros(n, n);
        for b in self.branches.iter().filter(|b| !b.is_self_loop()) {
            lap[(b.u, b.u)] += b.g;
            lap[(b.v, b.v)] += b.g;
            lap[(b.u, b.v)] -= b.g;
            lap[(b.v, b.u)] -= b.g;
        }
        lap
    }

    /// Resolves a list of node names into a sorted, deduplicated index set.
    pub fn node_set<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for name in names {
            set.insert(self.node(name.as_ref())?);
        }
        Ok(set.into_iter().collect())
    }

    /// Fuses `fuse_set` into a single supernode placed at index 0 of the child.
    pub fn contract(&self, fuse_set: &[usize]) -> Result<ContractionMap> {
        ContractionMap::new(self, fuse_set)
    }
}

/// Validates a node index set: nonempty, in range, returned sorted and deduplicated.
pub(crate) fn normalize_set(net: &Network, set: &[usize]) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = set.to_vec();
    for &k in &out {
        net.check_node(k)?;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Node voltages held fixed by an external source.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedVoltages {
    assignments: Vec<(usize, f64)>,
}

impl FixedVoltages {
    pub fn new(net: &Network, assignments: &[(usize, f64)]) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        let mut sorted = assignments.to_vec();
        for &(k, _) in &sorted {
            net.check_node(k)?;
        }
        sorted.sort_by_key(|&(k, _)| k);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateAssignment(net.name(w[0].0).to_string()));
            }
        }
        Ok(FixedVoltages { assignments: sorted })
    }

    pub fn from_names<S: AsRef<str>>(net: &Network, assignments: &[(S, f64)]) -> Result<Self> {
        let resolved = assignments
            .iter()
            .map(|(name, v)| Ok((net.node(name.as_ref())?, *v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(net, &resolved)
    }

    /// Assignments sorted by node index.
    pub fn assignments(&self) -> &[(usize, f64)] {
        &self.assignments
    }

    pub fn nodes(&self) -> Vec<usize> {
        self.assignments.iter().map(|&(k, _)| k).collect()
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.assignments
            .binary_search_by_key(&k, |&(node, _)| node)
            .ok()
            .map(|i| self.assignments[i].1)
    }
}

/// Currents injected from outside, one per node, summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedCurrents {
    j: Vec<f64>,
}

impl InjectedCurrents {
    pub fn new(net: &Network, j: Vec<f64>) -> Result<Self> {
        if j.len() != net.node_count() {
            return Err(Error::DimensionMismatch { expected: net.node_count(), got: j.len() });
        }
        let sum: f64 = j.iter().sum();
        let scale = j.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !sum.is_finite() || sum.abs() > 1e-12 * scale {
            return Err(Error::InvalidInjection { sum });
        }
        Ok(InjectedCurrents { j })
    }

    /// Builds an injection from named entries; unnamed nodes get zero.
    pub fn from_names<S: AsRef<str>>(net: &Network, entries: &[(S, f64)]) -> Result<Self> {
        let mut j = vec![0.0; net.node_count()];
        for (name, value) in entries {
            j[net.node(name.as_ref())?] += *value;
        }
        Self::new(net, j)
    }

    pub fn zero(net: &Network) -> Self {
        InjectedCurrents { j: vec![0.0; net.node_count()] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.j
    }

    pub fn is_zero(&self) -> bool {
        self.j.iter().all(|&x| x == 0.0)
    }
}

/// Boundary data for a network problem.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    FixedVoltages(FixedVoltages),
    InjectedCurrents(InjectedCurrents),
}

/// The result of fusing a node set of `parent` into one supernode.
///
/// The supernode sits at index 0 of `child`; the remaining parent nodes follow
/// in their original order. Parallel branches created by the fusion stay
/// distinct.
#[derive(Debug, Clone)]
pub struct ContractionMap {
    pub parent: Network,
    pub child: Network,
    pub fused: Vec<usize>,
    /// Parent node index to child node index.
    pub node_map: Vec<usize>,
    /// Parent branch id to child branch id, `None` when dropped.
    pub branch_map: Vec<Option<usize>>,
    /// Child branch id to parent branch id.
    pub branch_origin: Vec<usize>,
    /// Parent branches with both endpoints in the fused set.
    pub dropped: Vec<usize>,
}

impl ContractionMap {
    fn new(parent: &Network, fuse_set: &[usize]) -> Result<Self> {
        if fuse_set.is_empty() {
            return Err(Error::EmptyFuseSet);
        }
        let fused = normalize_set(parent, fuse_set)?;
        let n = parent.node_count();
        let mut in_fused = vec![false; n];
        for &k in &fused {
            in_fused[k] = true;
        }

        let mut super_name = format!(
            "{{{}}}",
            fused.iter().map(|&k| parent.name(k)).collect::<Vec<_>>().join(",")
        );
        while parent.index.contains_key(&super_name) {
            super_name.push('\'');
        }
        let mut names = vec![super_name];
        let mut node_map = vec![0; n];
        for k in 0..n {
            if !in_fused[k] {
                node_map[k] = names.len();
                names.push(parent.name(k).to_string());
            }
        }

        let mut triples = Vec::new();
        let mut branch_map = vec![None; parent.branch_count()];
        let mut branch_origin = Vec::new();
        let mut dropped = Vec::new();
        for b in parent.branches() {
            if in_fused[b.u] && in_fused[b.v] {
                dropped.push(b.id);
            } else {
                branch_map[b.id] = Some(triples.len());
                branch_origin.push(b.id);
                triples.push((node_map[b.u], node_map[b.v], b.g));
            }
        }
        let child = Network::from_indexed(names, &triples)?;
        Ok(ContractionMap {
            parent: parent.clone(),
            child,
            fused,
            node_map,
            branch_map,
            branch_origin,
            dropped,
        })
    }

    /// Maps child branch ids back to parent branch ids, sorted.
    pub fn lift(&self, child_branches: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = child_branches.iter().map(|&b| self.branch_origin[b]).collect();
        out.sort_unstable();
        out
    }
}
