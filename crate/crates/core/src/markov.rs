//! Reversible Markov chains of conductance networks and the walk quantities
//! expressed through orchards.
//!
//! The chain of a network steps from `k` along branch `b` with probability
//! `g_b / g_k`. Conductances are rescaled so that `sum_k g_k = 1`, which makes
//! `g_k` the stationary probability of `k`. A self-loop contributes once to
//! `g_k` and yields a self-transition; it carries no current.

use nalgebra::DMatrix;

use crate::enumeration::{enumerate_orchards, enumerate_separating_forests, enumerate_spanning_trees, Forest, Orchard};
use crate::error::{Error, Result};
use crate::estimate::{self, EstimateReport, McConfig, Shape};
use crate::network::{normalize_set, Network};
use crate::oracle::{expected_visits, solve_mixed};
use crate::sampler::ForestSampler;

#[derive(Debug, Clone)]
pub struct Chain {
    network: Network,
    transition: DMatrix<f64>,
    conductance: Vec<f64>,
    scale: f64,
}

/// Builds the chain of `net`; `net` itself is left unscaled.
pub fn to_markov_chain(net: &Network) -> Chain {
    let mass: f64 = (0..net.node_count()).map(|k| net.total_conductance_at(k).expect("in range")).sum();
    let scale = 1.0 / mass;
    let network = net.scaled(scale);
    let n = network.node_count();
    let conductance: Vec<f64> = (0..n).map(|k| network.total_conductance_at(k).expect("in range")).collect();
    let mut transition = DMatrix::zeros(n, n);
    for b in network.branches() {
        transition[(b.u, b.v)] += b.g / conductance[b.u];
        if !b.is_self_loop() {
            transition[(b.v, b.u)] += b.g / conductance[b.v];
        }
    }
    Chain { network, transition, conductance, scale }
}

impl Chain {
    pub fn state_count(&self) -> usize {
        self.network.node_count()
    }

    /// The rescaled network the chain was derived from.
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn transition_matrix(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn p(&self, k: usize, l: usize) -> f64 {
        self.transition[(k, l)]
    }

    /// Stationary distribution; equal to the rescaled conductance sums.
    pub fn stationary(&self) -> &[f64] {
        &self.conductance
    }

    pub fn conductance_sum(&self, k: usize) -> f64 {
        self.conductance[k]
    }

    /// Factor applied to the original conductances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Probability of leaving `from` along the specific branch `branch`.
    pub fn branch_probability(&self, branch: usize, from: usize) -> f64 {
        self.network.branch(branch).g / self.conductance[from]
    }
}

/// Antisymmetric matrix of net probability flow between states.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub u: DMatrix<f64>,
}

impl FlowMatrix {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.u[(k, l)]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.u.row_iter().map(|r| r.sum()).collect()
    }
}

fn walk_roles(chain: &Chain, start: usize, roots: &[usize]) -> Result<Vec<usize>> {
    if roots.is_empty() {
        return Err(Error::EmptyRootSet);
    }
    chain.network.check_node(start)?;
    let roots = normalize_set(&chain.network, roots)?;
    if roots.contains(&start) {
        return Err(Error::StartInR(chain.network.name(start).to_string()));
    }
    Ok(roots)
}

/// Expected number of steps for a walk from `start` to first reach `roots`,
/// from orchard weights alone.
pub fn expected_hitting_time(chain: &Chain, start: usize, roots: &[usize]) -> Result<f64> {
    let roots = walk_roles(chain, start, roots)?;
    let denominator: f64 = enumerate_orchards(chain, &roots)?.iter().map(|(_, o)| o).sum();
    let mut q = roots.clone();
    q.push(start);
    let mut numerator = 0.0;
    for (f, _) in enumerate_separating_forests(&chain.network, &q)? {
        for k in f.block(start) {
            let mut rerooted = roots.clone();
            rerooted.push(k);
            let orchard = Orchard::new(&chain.network, Forest::from_branches(&chain.network, f.branches(), &rerooted)?);
            numerator += orchard.weight(chain);
        }
    }
    Ok(numerator / denominator)
}

/// The same hitting time from conductance-weighted forests, before the
/// division by the product of `g_k` outside R that turns it into orchard form.
pub fn expected_hitting_time_by_conductance(chain: &Chain, start: usize, roots: &[usize]) -> Result<f64> {
    let roots = walk_roles(chain, start, roots)?;
    let net = &chain.network;
    let denominator: f64 = enumerate_separating_forests(net, &roots)?.iter().map(|(_, w)| w).sum();
    let mut q = roots.clone();
    q.push(start);
    let numerator: f64 = enumerate_separating_forests(net, &q)?
        .iter()
        .map(|(f, w)| f.block(start).iter().map(|&k| w * chain.conductance[k]).sum::<f64>())
        .sum();
    Ok(numerator / denominator)
}

/// Probability that a walk from `start` first enters `roots` at each root, in index order.
pub fn absorption_distribution(chain: &Chain, start: usize, roots: &[usize]) -> Result<Vec<(usize, f64)>> {
    let roots = walk_roles(chain, start, roots)?;
    let orchards = enumerate_orchards(chain, &roots)?;
    let total: f64 = orchards.iter().map(|(_, o)| o).sum();
    Ok(roots
        .iter()
        .map(|&r| {
            let hit: f64 = orchards.iter().filter(|(o, _)| o.forest().block_of(start) == r).map(|(_, o)| o).sum();
            (r, hit / total)
        })
        .collect())
}

pub fn absorption_probability(chain: &Chain, start: usize, roots: &[usize], target: usize) -> Result<f64> {
    let dist = absorption_distribution(chain, start, roots)?;
    dist.iter()
        .find(|&&(r, _)| r == target)
        .map(|&(_, p)| p)
        .ok_or_else(|| Error::TargetNotFixed(chain.network.name(target).to_string()))
}

/// Fraction of sampled forests in which `start` hangs from each root (roots in index order).
pub fn absorption_estimate(chain: &Chain, start: usize, roots: &[usize], mc: &McConfig) -> Result<EstimateReport> {
    let roots = walk_roles(chain, start, roots)?;
    let sampler = ForestSampler::new(&chain.network, &roots, &mc.sampler_config())?;
    let moments = estimate::run(mc, roots.len(), |rng, out| {
        let reached = sampler.sample(rng)?.block_of(start);
        for (x, &r) in out.iter_mut().zip(&roots) {
            *x = if r == reached { 1.0 } else { 0.0 };
        }
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(Shape::Vector(roots.len()), &moments, mc))
}

fn check_distribution(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::BadDistribution(format!("expected {n} entries, got {}", p.len())));
    }
    if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::BadDistribution("entries must be finite and non-negative".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::BadDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Probability mass carried rootward through each arborescence edge.
pub fn flow_matrix(net: &Network, arborescence: &Orchard, p: &[f64]) -> Result<FlowMatrix> {
    if !arborescence.is_arborescence() {
        return Err(Error::NotArborescence);
    }
    let n = net.node_count();
    check_distribution(p, n)?;
    let forest = arborescence.forest();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(forest.depth(k)));
    let mut mass = p.to_vec();
    let mut u = DMatrix::zeros(n, n);
    for k in order {
        if let Some(b) = forest.parent_branch(k) {
            let up = net.branch(b).other(k);
            u[(k, up)] = mass[k];
            u[(up, k)] = -mass[k];
            mass[up] += mass[k];
        }
    }
    Ok(FlowMatrix { u })
}

/// Expected net transitions between each pair of states as the chain relaxes
/// from `p0` to equilibrium, averaged over arborescences weighted by their
/// transition-probability products.
pub fn equilibrium_flow(chain: &Chain, p0: &[f64]) -> Result<FlowMatrix> {
    let n = chain.state_count();
    check_distribution(p0, n)?;
    let net = &chain.network;
    let mut acc = DMatrix::zeros(n, n);
    let mut total = 0.0;
    for (t, _) in enumerate_spanning_trees(net)? {
        for root in 0..n {
            let a = Orchard::new(net, t.rooted_at(net, root)?);
            let o = a.weight(chain);
            acc += flow_matrix(net, &a, p0)?.u * o;
            total += o;
        }
    }
    Ok(FlowMatrix { u: acc / total })
}

/// Expected visit counts next to the voltages of the matching electrical problem.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitCountReport {
    /// Expected departures from each state before absorption.
    pub visits: Vec<f64>,
    /// Voltages on the rescaled network with R grounded and a unit current into `start`.
    pub voltages: Vec<f64>,
    /// Rescaled conductance sums `g_k`.
    pub conductance: Vec<f64>,
    /// `max_k |e_k - v_k g_k| / max(1, |e_k|)`.
    pub max_rel_error: f64,
    pub holds: bool,
}

/// Checks that expected visits equal voltage times conductance sum, state by state.
pub fn visit_count_identity_check(net: &Network, start: usize, roots: &[usize]) -> Result<VisitCountReport> {
    let chain = to_markov_chain(net);
    let roots = walk_roles(&chain, start, roots)?;
    let visits = expected_visits(&chain, start, &roots)?;
    let grounded: Vec<(usize, f64)> = roots.iter().map(|&r| (r, 0.0)).collect();
    let mut injection = vec![0.0; net.node_count()];
    injection[start] = 1.0;
    let voltages = solve_mixed(&chain.network, &grounded, &injection)?;
    let conductance = chain.conductance.clone();
    let max_rel_error = visits
        .iter()
        .zip(&voltages)
        .zip(&conductance)
        .map(|((e, v), g)| (e - v * g).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(VisitCountReport { visits, voltages, conductance, max_rel_error, holds: max_rel_error <= 1e-9 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;
    use crate::network::fixtures::*;
    use crate::oracle::fundamental_hitting;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn p3_chain() {
        let c = to_markov_chain(&p3());
        assert_eq!(c.stationary(), &[0.25, 0.5, 0.25]);
        assert_eq!((c.p(0, 1), c.p(1, 0), c.p(1, 2), c.p(2, 1)), (1.0, 0.5, 0.5, 1.0));
        assert_eq!(c.p(0, 2), 0.0);
        let g2 = to_markov_chain(&g2());
        assert_eq!((g2.p(0, 1), g2.p(1, 0)), (1.0, 1.0));
    }

    #[test]
    fn self_loop_chain() {
        let net = build_network(&["1", "2", "3"], &[("1", "2", 1.0), ("2", "3", 2.0), ("1", "3", 3.0), ("1", "1", 4.0)])
            .unwrap();
        let c = to_markov_chain(&net);
        assert!(close(c.p(0, 0), 4.0 / 8.0, 1e-15));
        // original network untouched
        assert_eq!(net.branch(3).g, 4.0);
        for k in 0..3 {
            assert!(close(c.transition_matrix().row(k).sum(), 1.0, 1e-12));
            for l in 0..3 {
                assert!((c.stationary()[k] * c.p(k, l) - c.stationary()[l] * c.p(l, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orchard_weights() {
        let c = to_markov_chain(&p3());
        let list = enumerate_orchards(&c, &[2]).unwrap();
        assert_eq!(list.len(), 1);
        assert!(close(list[0].1, 0.5, 1e-15));
        let all = enumerate_orchards(&c, &[0, 1, 2]).unwrap();
        assert_eq!(all[0].1, 1.0);

        let c = to_markov_chain(&g3());
        let list = enumerate_orchards(&c, &[0, 1]).unwrap();
        assert!(close(list[0].1, 2.0 / 5.0, 1e-15));
        assert!(close(list[1].1, 3.0 / 5.0, 1e-15));
    }

    #[test]
    fn hitting_examples() {
        let c = to_markov_chain(&p3());
        assert!(close(expected_hitting_time(&c, 0, &[2]).unwrap(), 4.0, 1e-12));
        let c2 = to_markov_chain(&g2());
        assert!(close(expected_hitting_time(&c2, 0, &[1]).unwrap(), 1.0, 1e-12));
        let c3 = to_markov_chain(&g3());
        let oracle = fundamental_hitting(&c3, 2, &[0, 1]).unwrap().tau;
        assert!(close(expected_hitting_time(&c3, 2, &[0, 1]).unwrap(), oracle, 1e-9));
        assert!(matches!(expected_hitting_time(&c, 2, &[2]), Err(Error::StartInR(_))));
    }

    #[test]
    fn absorption_examples() {
        let c = to_markov_chain(&p3());
        assert!(close(absorption_probability(&c, 1, &[0, 2], 2).unwrap(), 0.5, 1e-12));
        let c3 = to_markov_chain(&g3());
        assert!(close(absorption_probability(&c3, 2, &[0, 1], 0).unwrap(), 0.6, 1e-12));
        assert!(close(absorption_probability(&c3, 2, &[1], 1).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn flow_examples() {
        let net = p3();
        let a = Orchard::new(&net, Forest::from_branches(&net, &[0, 1], &[2]).unwrap());
        let u = flow_matrix(&net, &a, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((u.get(0, 1), u.get(1, 2), u.get(2, 1)), (1.0, 1.0, -1.0));
        let u = flow_matrix(&net, &a, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!((u.get(0, 1), u.get(1, 2)), (0.0, 1.0));
        let u = flow_matrix(&net, &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!(u.u.iter().all(|&x| x == 0.0));

        let orchard = Orchard::new(&net, Forest::from_branches(&net, &[0], &[0, 2]).unwrap());
        assert_eq!(flow_matrix(&net, &orchard, &[1.0, 0.0, 0.0]).unwrap_err(), Error::NotArborescence);
        assert!(matches!(flow_matrix(&net, &a, &[0.5, 0.0, 0.0]), Err(Error::BadDistribution(_))));
    }

    #[test]
    fn two_state_equilibrium() {
        let net = build_network(&["1", "2"], &[("1", "2", 0.25), ("1", "1", 0.3), ("2", "2", 0.2)]).unwrap();
        let c = to_markov_chain(&net);
        assert!(close(c.stationary()[0], 0.55, 1e-15));
        let flow = equilibrium_flow(&c, &[1.0, 0.0]).unwrap();
        assert!((flow.get(0, 1) - 0.45).abs() <= 1e-12);
        let at_rest = equilibrium_flow(&c, &c.stationary().to_vec()).unwrap();
        assert!(at_rest.u.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn visit_identity_p3() {
        let report = visit_count_identity_check(&p3(), 0, &[2]).unwrap();
        assert!(report.holds);
        assert!(close(report.visits[0], 2.0, 1e-12) && close(report.visits[1], 2.0, 1e-12));
        assert!(close(report.voltages[0], 8.0, 1e-12) && close(report.voltages[1], 4.0, 1e-12));
        assert!(matches!(visit_count_identity_check(&p3(), 2, &[2]), Err(Error::StartInR(_))));
    }
}
