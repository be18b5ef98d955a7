//! Exhaustive enumeration of spanning trees, separating forests and orchards.
//!
//! A separating forest for a root set R is a spanning forest in which every
//! node is joined to exactly one root. Its weight is the product of its branch
//! conductances. Enumeration walks the branch ids in order, branching on
//! "include" (when the branch joins two components) and "exclude" (when the
//! remaining branches can still finish the forest), so results come out in
//! lexicographic order of their sorted branch ids.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::markov::Chain;
use crate::network::{normalize_set, Network};

/// Default cap on enumerated objects before `TooLarge` is raised.
pub const DEFAULT_LIMIT: usize = 1_000_000;

/// A spanning tree, stored as sorted branch ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    branches: Vec<usize>,
}

impl Tree {
    /// Validates that `branches` form a spanning tree of `net`.
    pub fn from_branches(net: &Network, branches: &[usize]) -> Result<Self> {
        Forest::from_branches(net, branches, &[0])
            .map(|f| Tree { branches: f.branches })
            .map_err(|e| match e {
                Error::NotSeparatingForest(msg) => Error::NotSpanningTree(msg),
                other => other,
            })
    }

    pub(crate) fn from_sorted(branches: Vec<usize>) -> Self {
        Tree { branches }
    }

    pub fn branches(&self) -> &[usize] {
        &self.branches
    }

    pub fn weight(&self, net: &Network) -> f64 {
        product_weight(net, &self.branches)
    }

    /// The same edge set viewed as a forest with the single root `root`.
    pub fn rooted_at(&self, net: &Network, root: usize) -> Result<Forest> {
        Forest::from_branches(net, &self.branches, &[root])
    }
}

/// A member of F_R with its block structure resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    branches: Vec<usize>,
    roots: Vec<usize>,
    block_of: Vec<usize>,
    path_to_root: Vec<Vec<usize>>,
}

impl Forest {
    /// Validates `branches` against the root set and computes blocks and root paths.
    pub fn from_branches(net: &Network, branches: &[usize], roots: &[usize]) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::EmptyRootSet);
        }
        let roots = normalize_set(net, roots)?;
        let n = net.node_count();
        let mut sorted = branches.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != branches.len() {
            return Err(Error::NotSeparatingForest("repeated branch".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &b in &sorted {
            if b >= net.branch_count() {
                return Err(Error::NotSeparatingForest(format!("unknown branch {b}")));
            }
            let br = net.branch(b);
            if br.is_self_loop() {
                return Err(Error::NotSeparatingForest(format!("self-loop {b}")));
            }
            adjacency[br.u].push(b);
            adjacency[br.v].push(b);
        }

        const UNSEEN: usize = usize::MAX;
        let mut block_of = vec![UNSEEN; n];
        let mut parent_branch = vec![UNSEEN; n];
        let mut order = Vec::with_capacity(n);
        for &r in &roots {
            if block_of[r] != UNSEEN {
                return Err(Error::NotSeparatingForest("two roots share a component".into()));
            }
            block_of[r] = r;
            let mut queue = VecDeque::from([r]);
            while let Some(k) = queue.pop_front() {
                order.push(k);
                for &b in &adjacency[k] {
                    if b == parent_branch[k] {
                        continue;
                    }
                    let m = net.branch(b).other(k);
                    if block_of[m] != UNSEEN {
                        return Err(Error::NotSeparatingForest("cycle or joined roots".into()));
                    }
                    block_of[m] = r;
                    parent_branch[m] = b;
                    queue.push_back(m);
                }
            }
        }
        if let Some(k) = block_of.iter().position(|&r| r == UNSEEN) {
            return Err(Error::NotSeparatingForest(format!("node `{}` reaches no root", net.name(k))));
        }
        debug_assert_eq!(sorted.len(), n - roots.len());

        let mut path_to_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &k in &order {
            let b = parent_branch[k];
            if b != UNSEEN {
                let up = net.branch(b).other(k);
                let mut path = Vec::with_capacity(path_to_root[up].len() + 1);
                path.push(b);
                path.extend_from_slice(&path_to_root[up]);
                path_to_root[k] = path;
            }
        }
        Ok(Forest { branches: sorted, roots, block_of, path_to_root })
    }

    pub fn branches(&self) -> &[usize] {
        &self.branches
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// The root whose component contains `k`.
    pub fn block_of(&self, k: usize) -> usize {
        self.block_of[k]
    }

    pub fn block_map(&self) -> &[usize] {
        &self.block_of
    }

    /// Branches from `k` to its root, in walking order.
    pub fn path_to_root(&self, k: usize) -> &[usize] {
        &self.path_to_root[k]
    }

    /// Number of branches between `k` and its root.
    pub fn depth(&self, k: usize) -> usize {
        self.path_to_root[k].len()
    }

    /// Nodes whose root is `root`.
    pub fn block(&self, root: usize) -> Vec<usize> {
        (0..self.block_of.len()).filter(|&k| self.block_of[k] == root).collect()
    }

    pub fn weight(&self, net: &Network) -> f64 {
        product_weight(net, &self.branches)
    }

    /// The branch joining `k` to the next node on its way to the root.
    pub fn parent_branch(&self, k: usize) -> Option<usize> {
        self.path_to_root[k].first().copied()
    }
}

/// A directed edge of an orchard, pointing toward the root of its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub branch: usize,
}

/// A forest with every branch directed toward the root of its component.
/// With a single root it is an arborescence.
#[derive(Debug, Clone, PartialEq)]
pub struct Orchard {
    forest: Forest,
    edges: Vec<DirectedEdge>,
}

impl Orchard {
    pub fn new(net: &Network, forest: Forest) -> Self {
        let edges = (0..net.node_count())
            .filter_map(|k| {
                forest.parent_branch(k).map(|b| DirectedEdge { from: k, to: net.branch(b).other(k), branch: b })
            })
            .collect();
        Orchard { forest, edges }
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn roots(&self) -> &[usize] {
        self.forest.roots()
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn is_arborescence(&self) -> bool {
        self.forest.roots().len() == 1
    }

    /// Product of transition probabilities over the directed edges. Each
    /// edge carries its branch's share `g_b / g_from` of the transition.
    pub fn weight(&self, chain: &Chain) -> f64 {
        self.edges.iter().map(|e| chain.branch_probability(e.branch, e.from)).product()
    }
}

/// The breadth-first spanning tree from node 0, taking the lowest branch id first.
pub fn breadth_first_tree(net: &Network) -> Tree {
    let n = net.node_count();
    let mut seen = vec![false; n];
    let mut branches = Vec::with_capacity(n.saturating_sub(1));
    let mut queue = VecDeque::new();
    if n > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(k) = queue.pop_front() {
        for &b in net.incident(k) {
            let m = net.branch(b).other(k);
            if !seen[m] {
                seen[m] = true;
                branches.push(b);
                queue.push_back(m);
            }
        }
    }
    branches.sort_unstable();
    Tree { branches }
}

fn product_weight(net: &Network, branches: &[usize]) -> f64 {
    branches.iter().map(|&b| net.branch(b).g).product()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut k: usize) -> usize {
        while self.parent[k] != k {
            self.parent[k] = self.parent[self.parent[k]];
            k = self.parent[k];
        }
        k
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

struct BaseSearch<'a> {
    net: &'a Network,
    needed: usize,
    limit: usize,
    out: Vec<Vec<usize>>,
}

impl BaseSearch<'_> {
    fn completable(&self, uf: &UnionFind, from: usize, have: usize) -> bool {
        let mut uf = UnionFind { parent: uf.parent.clone() };
        let mut merges = have;
        for b in &self.net.branches()[from..] {
            if uf.union(b.u, b.v) {
                merges += 1;
                if merges == self.needed {
                    return true;
                }
            }
        }
        merges == self.needed
    }

    fn descend(&mut self, next: usize, chosen: &mut Vec<usize>, uf: &mut UnionFind) -> Result<()> {
        if chosen.len() == self.needed {
            if self.out.len() >= self.limit {
                return Err(Error::TooLarge { limit: self.limit });
            }
            self.out.push(chosen.clone());
            return Ok(());
        }
        if next == self.net.branch_count() {
            return Ok(());
        }
        let b = *self.net.branch(next);
        let (ru, rv) = (uf.find(b.u), uf.find(b.v));
        if ru != rv {
            let mut with = UnionFind { parent: uf.parent.clone() };
            with.union(ru, rv);
            chosen.push(b.id);
            self.descend(next + 1, chosen, &mut with)?;
            chosen.pop();
        }
        if self.completable(uf, next + 1, chosen.len()) {
            self.descend(next + 1, chosen, uf)?;
        }
        Ok(())
    }
}

/// Every separating forest of `roots` as a sorted branch list, in lexicographic order.
fn enumerate_bases(net: &Network, roots: &[usize], limit: usize) -> Result<Vec<Vec<usize>>> {
    let mut uf = UnionFind::new(net.node_count());
    for w in roots.windows(2) {
        uf.union(w[0], w[1]);
    }
    let needed = net.node_count() - roots.len();
    let mut search = BaseSearch { net, needed, limit, out: Vec::new() };
    let mut chosen = Vec::with_capacity(needed);
    search.descend(0, &mut chosen, &mut uf)?;
    let mut out = search.out;
    out.sort();
    Ok(out)
}

/// All spanning trees with their conductance products, lexicographically ordered.
pub fn enumerate_spanning_trees(net: &Network) -> Result<Vec<(Tree, f64)>> {
    enumerate_spanning_trees_limited(net, DEFAULT_LIMIT)
}

pub fn enumerate_spanning_trees_limited(net: &Network, limit: usize) -> Result<Vec<(Tree, f64)>> {
    if net.node_count() == 0 {
        return Ok(Vec::new());
    }
    Ok(enumerate_bases(net, &[0], limit)?
        .into_iter()
        .map(|branches| {
            let w = product_weight(net, &branches);
            (Tree { branches }, w)
        })
        .collect())
}

/// All members of F_R with their conductance products, lexicographically ordered.
pub fn enumerate_separating_forests(net: &Network, roots: &[usize]) -> Result<Vec<(Forest, f64)>> {
    enumerate_separating_forests_limited(net, roots, DEFAULT_LIMIT)
}

pub fn enumerate_separating_forests_limited(
    net: &Network,
    roots: &[usize],
    limit: usize,
) -> Result<Vec<(Forest, f64)>> {
    if roots.is_empty() {
        return Err(Error::EmptyRootSet);
    }
    let roots = normalize_set(net, roots)?;
    enumerate_bases(net, &roots, limit)?
        .into_iter()
        .map(|branches| {
            let f = Forest::from_branches(net, &branches, &roots)?;
            let w = f.weight(net);
            Ok((f, w))
        })
        .collect()
}

/// One orchard per forest of F_R on the chain's network, with its transition-probability weight.
pub fn enumerate_orchards(chain: &Chain, roots: &[usize]) -> Result<Vec<(Orchard, f64)>> {
    let net = chain.network();
    Ok(enumerate_separating_forests(net, roots)?
        .into_iter()
        .map(|(f, _)| {
            let o = Orchard::new(net, f);
            let w = o.weight(chain);
            (o, w)
        })
        .collect())
}

/// Sum of conductance products over F_R.
pub fn forest_weight_sum(net: &Network, roots: &[usize]) -> Result<f64> {
    Ok(enumerate_separating_forests(net, roots)?.iter().map(|(_, w)| w).sum())
}

/// Sum of conductance products over all spanning trees.
pub fn tree_weight_sum(net: &Network) -> Result<f64> {
    Ok(enumerate_spanning_trees(net)?.iter().map(|(_, w)| w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;
    use crate::network::fixtures::*;

    fn ids(list: &[(Tree, f64)]) -> Vec<(Vec<usize>, f64)> {
        list.iter().map(|(t, w)| (t.branches().to_vec(), *w)).collect()
    }

    #[test]
    fn g3_trees() {
        let trees = enumerate_spanning_trees(&g3()).unwrap();
        // branch ids: 0 = (1,2), 1 = (2,3), 2 = (1,3)
        assert_eq!(ids(&trees), vec![(vec![0, 1], 2.0), (vec![0, 2], 3.0), (vec![1, 2], 6.0)]);
        assert_eq!(tree_weight_sum(&g3()).unwrap(), 11.0);
    }

    #[test]
    fn small_trees() {
        assert_eq!(ids(&enumerate_spanning_trees(&g2()).unwrap()), vec![(vec![0], 2.0)]);
        assert_eq!(ids(&enumerate_spanning_trees(&p3()).unwrap()), vec![(vec![0, 1], 1.0)]);
    }

    #[test]
    fn g3_forests() {
        let net = g3();
        let forests = enumerate_separating_forests(&net, &[0, 1]).unwrap();
        assert_eq!(forests.len(), 2);
        assert_eq!(forests[0].0.branches(), &[1]);
        assert_eq!(forests[0].1, 2.0);
        assert_eq!(forests[0].0.block_of(2), 1);
        assert_eq!(forests[1].0.branches(), &[2]);
        assert_eq!(forests[1].1, 3.0);
        assert_eq!(forests[1].0.block_of(2), 0);
        assert_eq!(forest_weight_sum(&net, &[0, 1]).unwrap(), 5.0);

        let all = enumerate_separating_forests(&net, &[0, 1, 2]).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].0.branches().is_empty());
        assert_eq!(all[0].1, 1.0);
    }

    #[test]
    fn p3_rooted_at_middle() {
        let forests = enumerate_separating_forests(&p3(), &[1]).unwrap();
        assert_eq!(forests.len(), 1);
        let f = &forests[0].0;
        assert_eq!(f.branches(), &[0, 1]);
        assert_eq!(f.depth(0), 1);
        assert_eq!(f.depth(1), 0);
        assert_eq!(f.path_to_root(2), &[1]);
    }

    #[test]
    fn single_root_matches_trees() {
        let net = g3();
        for r in 0..3 {
            let forests = enumerate_separating_forests(&net, &[r]).unwrap();
            let trees = enumerate_spanning_trees(&net).unwrap();
            let a: Vec<_> = forests.iter().map(|(f, w)| (f.branches().to_vec(), *w)).collect();
            assert_eq!(a, ids(&trees));
        }
    }

    #[test]
    fn parallel_and_self_loops() {
        let net = build_network(&["a", "b"], &[("a", "b", 1.0), ("a", "a", 7.0), ("a", "b", 2.0)]).unwrap();
        let trees = enumerate_spanning_trees(&net).unwrap();
        assert_eq!(ids(&trees), vec![(vec![0], 1.0), (vec![2], 2.0)]);
    }

    #[test]
    fn limit_trips() {
        let net = g3();
        assert_eq!(enumerate_spanning_trees_limited(&net, 2).unwrap_err(), Error::TooLarge { limit: 2 });
        assert_eq!(enumerate_spanning_trees_limited(&net, 3).unwrap().len(), 3);
    }

    #[test]
    fn forest_validation() {
        let net = g3();
        assert!(Forest::from_branches(&net, &[0, 1, 2], &[0]).is_err());
        assert!(Forest::from_branches(&net, &[0], &[0, 1]).is_err());
        assert!(Forest::from_branches(&net, &[], &[0]).is_err());
        assert_eq!(Forest::from_branches(&net, &[1], &[]).unwrap_err(), Error::EmptyRootSet);
        assert!(matches!(Tree::from_branches(&net, &[0]), Err(Error::NotSpanningTree(_))));
    }

    #[test]
    fn bfs_tree_is_spanning() {
        let net = g3();
        let t = breadth_first_tree(&net);
        assert_eq!(t.branches(), &[0, 2]);
        assert!(Tree::from_branches(&net, t.branches()).is_ok());
    }

    #[test]
    fn orchard_orientation() {
        let net = p3();
        let f = Forest::from_branches(&net, &[0, 1], &[2]).unwrap();
        let o = Orchard::new(&net, f);
        assert!(o.is_arborescence());
        let mut e: Vec<(usize, usize)> = o.edges().iter().map(|e| (e.from, e.to)).collect();
        e.sort();
        assert_eq!(e, vec![(0, 1), (1, 2)]);
    }
}
