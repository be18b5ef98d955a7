//! Random spanning trees and separating forests drawn with probability
//! proportional to their conductance products.
//!
//! Trees come from a loop-erased random walk (Wilson's algorithm) on the
//! network's own chain: from node `k` the walk leaves along an incident branch
//! chosen with probability `g_b / g_k`. Parallel branches compete
//! individually and self-loop steps are erased immediately. Forests of F_R are
//! spanning trees of the network with R fused into one node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::enumeration::{Forest, Tree};
use crate::error::{Error, Result};
use crate::network::{ContractionMap, Network};

/// The generator used by every sampling path.
pub type SampleRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Upper bound on walk steps per sampled tree.
    pub max_walk_steps: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 0, max_walk_steps: 100_000_000 }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig { seed, ..Default::default() }
    }

    pub fn rng(&self) -> SampleRng {
        worker_rng(self.seed, 0)
    }
}

/// Independent stream `worker` of the generator seeded by `seed`.
pub fn worker_rng(seed: u64, worker: usize) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Precomputed walk tables for one network.
#[derive(Debug, Clone)]
pub struct SpanningTreeSampler {
    net: Network,
    steps: Vec<Option<WeightedIndex<f64>>>,
    max_walk_steps: u64,
}

impl SpanningTreeSampler {
    pub fn new(net: &Network, cfg: &SamplerConfig) -> Self {
        let steps = (0..net.node_count())
            .map(|k| {
                let weights: Vec<f64> = net.incident(k).iter().map(|&b| net.branch(b).g).collect();
                WeightedIndex::new(weights).ok()
            })
            .collect();
        SpanningTreeSampler { net: net.clone(), steps, max_walk_steps: cfg.max_walk_steps }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Branch ids of one random spanning tree, sorted.
    pub fn sample_branches<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let n = self.net.node_count();
        let mut in_tree = vec![false; n];
        let mut next = vec![usize::MAX; n];
        let mut steps = 0u64;
        if n > 0 {
            in_tree[0] = true;
        }
        for start in 0..n {
            let mut k = start;
            while !in_tree[k] {
                let table = self.steps[k].as_ref().expect("connected node has an incident branch");
                let b = self.net.incident(k)[table.sample(rng)];
                next[k] = b;
                k = self.net.branch(b).other(k);
                steps += 1;
                if steps > self.max_walk_steps {
                    return Err(Error::WalkBudgetExceeded(self.max_walk_steps));
                }
            }
            let mut k = start;
            while !in_tree[k] {
                in_tree[k] = true;
                k = self.net.branch(next[k]).other(k);
            }
        }
        let mut branches: Vec<usize> = (1..n).map(|k| next[k]).collect();
        branches.sort_unstable();
        Ok(branches)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Tree> {
        let branches = self.sample_branches(rng)?;
        if cfg!(debug_assertions) {
            Tree::from_branches(&self.net, &branches)
        } else {
            Ok(Tree::from_sorted(branches))
        }
    }
}

/// Samples members of F_R by drawing spanning trees of the network with R fused.
#[derive(Debug, Clone)]
pub struct ForestSampler {
    contraction: ContractionMap,
    inner: SpanningTreeSampler,
}

impl ForestSampler {
    pub fn new(net: &Network, roots: &[usize], cfg: &SamplerConfig) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::EmptyRootSet);
        }
        let contraction = net.contract(roots)?;
        let inner = SpanningTreeSampler::new(&contraction.child, cfg);
        Ok(ForestSampler { contraction, inner })
    }

    pub fn roots(&self) -> &[usize] {
        &self.contraction.fused
    }

    pub fn network(&self) -> &Network {
        &self.contraction.parent
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Forest> {
        let child = self.inner.sample_branches(rng)?;
        let lifted = self.contraction.lift(&child);
        Forest::from_branches(&self.contraction.parent, &lifted, &self.contraction.fused)
    }
}

/// Draws branches with probability proportional to conductance, self-loops included.
#[derive(Debug, Clone)]
pub struct BranchSampler {
    index: WeightedIndex<f64>,
}

impl BranchSampler {
    pub fn new(net: &Network) -> Result<Self> {
        let weights: Vec<f64> = net.branches().iter().map(|b| b.g).collect();
        WeightedIndex::new(weights)
            .map(|index| BranchSampler { index })
            .map_err(|_| Error::BadDistribution("network has no branches".into()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

pub fn sample_spanning_tree<R: Rng + ?Sized>(net: &Network, cfg: &SamplerConfig, rng: &mut R) -> Result<Tree> {
    SpanningTreeSampler::new(net, cfg).sample(rng)
}

pub fn sample_separating_forest<R: Rng + ?Sized>(
    net: &Network,
    roots: &[usize],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Forest> {
    ForestSampler::new(net, roots, cfg)?.sample(rng)
}

pub fn sample_branch<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> Result<usize> {
    Ok(BranchSampler::new(net)?.sample(rng))
}
