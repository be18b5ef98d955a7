//! Network quantities as averages over spanning trees and separating forests.
//!
//! Each relation has an exact engine, which enumerates every tree or forest
//! and takes the conductance-weighted average, and a Monte Carlo engine,
//! which averages the same per-object quantity over sampled objects. Sampled
//! objects already carry the conductance weighting, so the estimators are
//! plain sample means.
//!
//! * injected current at a fixed node from the fixed voltages (`vj_*`)
//! * voltage at a free node from the fixed voltages (`vv_*`)
//! * branch currents from the injected currents (`ji_*`)
//! * node voltages from any current distribution consistent with the
//!   injection (`iv_*`)

use crate::enumeration::{enumerate_separating_forests, enumerate_spanning_trees, forest_weight_sum, tree_weight_sum, Forest, Tree};
use crate::error::{Error, Result};
use crate::estimate::{self, EstimateReport, McConfig, Shape};
use crate::network::{FixedVoltages, InjectedCurrents, Network};
use crate::oracle::{CurrentMatrix, VoltageVector};
use crate::sampler::{BranchSampler, ForestSampler, SpanningTreeSampler};

fn vj_roles(net: &Network, fixed: &FixedVoltages, target: usize) -> Result<Vec<usize>> {
    net.check_node(target)?;
    let q = fixed.nodes();
    if q.len() < 2 {
        return Err(Error::QTooSmall);
    }
    if fixed.get(target).is_none() {
        return Err(Error::TargetNotFixed(net.name(target).to_string()));
    }
    Ok(q.into_iter().filter(|&k| k != target).collect())
}

/// Current injected at `target` when exactly the nodes of `fixed` are held.
pub fn vj_exact(net: &Network, fixed: &FixedVoltages, target: usize) -> Result<f64> {
    let others = vj_roles(net, fixed, target)?;
    let v_target = fixed.get(target).expect("checked");
    let numerator: f64 = enumerate_separating_forests(net, &others)?
        .iter()
        .map(|(h, w)| (v_target - fixed.get(h.block_of(target)).expect("root is fixed")) * w)
        .sum();
    let denominator = forest_weight_sum(net, &fixed.nodes())?;
    Ok(numerator / denominator)
}

/// `vj_exact` for every fixed node, in index order.
pub fn vj_exact_all(net: &Network, fixed: &FixedVoltages) -> Result<Vec<(usize, f64)>> {
    fixed.nodes().into_iter().map(|k| Ok((k, vj_exact(net, fixed, k)?))).collect()
}

/// Per-node injection vector of one (forest, branch) draw: nonzero only at the
/// two roots the branch joins, scaled by total conductance over the length of
/// the root-to-root path it closes.
fn vj_draw(net: &Network, fixed: &FixedVoltages, total_g: f64, f: &Forest, branch: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let b = net.branch(branch);
    let (rk, rl) = (f.block_of(b.u), f.block_of(b.v));
    if rk == rl {
        return;
    }
    let (vk, vl) = (fixed.get(rk).expect("root is fixed"), fixed.get(rl).expect("root is fixed"));
    let path = (1 + f.depth(b.u) + f.depth(b.v)) as f64;
    out[rk] = total_g * (vk - vl) / path;
    out[rl] = total_g * (vl - vk) / path;
}

/// Estimates the injected current at every node (zero off the fixed set).
pub fn vj_estimate_all(net: &Network, fixed: &FixedVoltages, mc: &McConfig) -> Result<EstimateReport> {
    if fixed.assignments().len() < 2 {
        return Err(Error::QTooSmall);
    }
    let forests = ForestSampler::new(net, &fixed.nodes(), &mc.sampler_config())?;
    let branches = BranchSampler::new(net)?;
    let total_g = net.total_conductance();
    let n = net.node_count();
    let moments = estimate::run(mc, n, |rng, out| {
        let f = forests.sample(rng)?;
        let b = branches.sample(rng);
        vj_draw(net, fixed, total_g, &f, b, out);
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(Shape::Vector(n), &moments, mc))
}

pub fn vj_estimate(net: &Network, fixed: &FixedVoltages, target: usize, mc: &McConfig) -> Result<EstimateReport> {
    vj_roles(net, fixed, target)?;
    Ok(vj_estimate_all(net, fixed, mc)?.component(target))
}

fn vv_check(net: &Network, fixed: &FixedVoltages, target: usize) -> Result<()> {
    net.check_node(target)?;
    if fixed.get(target).is_some() {
        return Err(Error::TargetIsRoot(net.name(target).to_string()));
    }
    Ok(())
}

/// Voltages of every node when the nodes of `fixed` are held and all others float.
pub fn vv_exact_all(net: &Network, fixed: &FixedVoltages) -> Result<VoltageVector> {
    let forests = enumerate_separating_forests(net, &fixed.nodes())?;
    let total: f64 = forests.iter().map(|(_, w)| w).sum();
    let mut values = vec![0.0; net.node_count()];
    for (h, w) in &forests {
        for (k, v) in values.iter_mut().enumerate() {
            *v += fixed.get(h.block_of(k)).expect("root is fixed") * w;
        }
    }
    for (k, v) in values.iter_mut().enumerate() {
        *v = fixed.get(k).unwrap_or(*v / total);
    }
    Ok(VoltageVector { values, ground: None })
}

pub fn vv_exact(net: &Network, fixed: &FixedVoltages, target: usize) -> Result<f64> {
    vv_check(net, fixed, target)?;
    Ok(vv_exact_all(net, fixed)?.values[target])
}

/// Estimates every node voltage as the mean root voltage reached in sampled forests.
pub fn vv_estimate_all(net: &Network, fixed: &FixedVoltages, mc: &McConfig) -> Result<EstimateReport> {
    let forests = ForestSampler::new(net, &fixed.nodes(), &mc.sampler_config())?;
    let n = net.node_count();
    let moments = estimate::run(mc, n, |rng, out| {
        let f = forests.sample(rng)?;
        for (k, x) in out.iter_mut().enumerate() {
            *x = fixed.get(f.block_of(k)).expect("root is fixed");
        }
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(Shape::Vector(n), &moments, mc))
}

pub fn vv_estimate(net: &Network, fixed: &FixedVoltages, target: usize, mc: &McConfig) -> Result<EstimateReport> {
    vv_check(net, fixed, target)?;
    Ok(vv_estimate_all(net, fixed, mc)?.component(target))
}

/// Per-branch currents (oriented `u -> v`) of the unique flow on `tree` that routes `j`.
fn tree_branch_currents(net: &Network, tree: &Tree, j: &[f64]) -> Result<Vec<f64>> {
    let rooted = tree.rooted_at(net, 0)?;
    let mut order: Vec<usize> = (0..net.node_count()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(rooted.depth(k)));
    let mut subtree = j.to_vec();
    let mut per_branch = vec![0.0; net.branch_count()];
    for k in order {
        if let Some(b) = rooted.parent_branch(k) {
            let br = net.branch(b);
            let up = br.other(k);
            per_branch[b] = if br.u == k { subtree[k] } else { -subtree[k] };
            subtree[up] += subtree[k];
        }
    }
    Ok(per_branch)
}

/// The flow obtained when every branch off `tree` is opened.
pub fn tree_current_distribution(net: &Network, tree: &Tree, j: &InjectedCurrents) -> Result<CurrentMatrix> {
    if j.as_slice().len() != net.node_count() {
        return Err(Error::DimensionMismatch { expected: net.node_count(), got: j.as_slice().len() });
    }
    Ok(CurrentMatrix::from_branch_currents(net, tree_branch_currents(net, tree, j.as_slice())?))
}

/// Branch currents as the tree-weighted average of tree flows.
pub fn ji_exact(net: &Network, j: &InjectedCurrents) -> Result<CurrentMatrix> {
    let trees = enumerate_spanning_trees(net)?;
    let total: f64 = trees.iter().map(|(_, w)| w).sum();
    let mut acc = vec![0.0; net.branch_count()];
    for (t, w) in &trees {
        for (a, i) in acc.iter_mut().zip(tree_branch_currents(net, t, j.as_slice())?) {
            *a += w * i;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(CurrentMatrix::from_branch_currents(net, acc))
}

/// Node-pair current matrix averaged over sampled trees.
pub fn ji_estimate(net: &Network, j: &InjectedCurrents, mc: &McConfig) -> Result<EstimateReport> {
    let trees = SpanningTreeSampler::new(net, &mc.sampler_config());
    let n = net.node_count();
    let moments = estimate::run(mc, n * n, |rng, out| {
        let t = trees.sample(rng)?;
        let i = tree_current_distribution(net, &t, j)?;
        for k in 0..n {
            for l in 0..n {
                out[k * n + l] = i.get(k, l);
            }
        }
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(Shape::Matrix(n, n), &moments, mc))
}

/// Potential drop from `k` to the next node toward the root along `branch`.
fn branch_drop(net: &Network, currents: &CurrentMatrix, branch: usize, k: usize) -> f64 {
    let b = net.branch(branch);
    let up = b.other(k);
    match &currents.per_branch {
        Some(per_branch) => {
            let i = if b.u == k { per_branch[branch] } else { -per_branch[branch] };
            i / b.g
        }
        None => currents.get(k, up) / net.pair_conductance(k, up),
    }
}

/// Potentials obtained by summing branch voltage drops `i/g` along `tree`
/// from `ground`. The supplied currents need not satisfy the voltage law.
pub fn tree_voltage_vector(net: &Network, tree: &Tree, currents: &CurrentMatrix, ground: usize) -> Result<VoltageVector> {
    net.check_node(ground)?;
    let rooted = tree.rooted_at(net, ground)?;
    let mut order: Vec<usize> = (0..net.node_count()).collect();
    order.sort_by_key(|&k| rooted.depth(k));
    let mut values = vec![0.0; net.node_count()];
    for k in order {
        if let Some(b) = rooted.parent_branch(k) {
            let up = net.branch(b).other(k);
            values[k] = values[up] + branch_drop(net, currents, b, k);
        }
    }
    Ok(VoltageVector { values, ground: Some(ground) })
}

fn check_consistent(net: &Network, currents: &CurrentMatrix) -> Result<()> {
    let n = net.node_count();
    if currents.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: currents.size() });
    }
    let rows = currents.row_sums();
    let total: f64 = rows.iter().sum();
    let scale = currents.matrix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !total.is_finite() || total.abs() > 1e-12 * scale * n as f64 {
        return Err(Error::InconsistentCurrentMatrix(total));
    }
    Ok(())
}

/// Node voltages as the tree-weighted average of tree potentials.
pub fn iv_exact(net: &Network, currents: &CurrentMatrix, ground: usize) -> Result<VoltageVector> {
    check_consistent(net, currents)?;
    net.check_node(ground)?;
    let trees = enumerate_spanning_trees(net)?;
    let total: f64 = trees.iter().map(|(_, w)| w).sum();
    let mut values = vec![0.0; net.node_count()];
    for (t, w) in &trees {
        let vt = tree_voltage_vector(net, t, currents, ground)?;
        for (v, x) in values.iter_mut().zip(&vt.values) {
            *v += w * x;
        }
    }
    values.iter_mut().for_each(|v| *v /= total);
    Ok(VoltageVector { values, ground: Some(ground) })
}

pub fn iv_estimate(net: &Network, currents: &CurrentMatrix, ground: usize, mc: &McConfig) -> Result<EstimateReport> {
    check_consistent(net, currents)?;
    net.check_node(ground)?;
    let trees = SpanningTreeSampler::new(net, &mc.sampler_config());
    let n = net.node_count();
    let moments = estimate::run(mc, n, |rng, out| {
        let t = trees.sample(rng)?;
        out.copy_from_slice(&tree_voltage_vector(net, &t, currents, ground)?.values);
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(Shape::Vector(n), &moments, mc))
}

/// Equivalent conductance between `a` and `b`: tree sum over two-root forest sum.
pub fn equivalent_conductance(net: &Network, a: usize, b: usize) -> Result<f64> {
    net.check_node(a)?;
    net.check_node(b)?;
    if a == b {
        return Err(Error::SameNode);
    }
    Ok(tree_weight_sum(net)? / forest_weight_sum(net, &[a, b])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use nalgebra::DMatrix;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    fn fixed(net: &Network, pairs: &[(usize, f64)]) -> FixedVoltages {
        FixedVoltages::new(net, pairs).unwrap()
    }

    #[test]
    fn vj_examples() {
        let net = g3();
        let q = fixed(&net, &[(0, 1.0), (1, 0.0)]);
        assert!(close(vj_exact(&net, &q, 0).unwrap(), 2.2));
        assert!(close(vj_exact(&net, &q, 1).unwrap(), -2.2));
        let flat = fixed(&net, &[(0, 4.0), (2, 4.0)]);
        assert_eq!(vj_exact(&net, &flat, 2).unwrap(), 0.0);
    }

    #[test]
    fn vj_roles_checked() {
        let net = g3();
        assert_eq!(vj_exact(&net, &fixed(&net, &[(0, 1.0)]), 0).unwrap_err(), Error::QTooSmall);
        assert!(matches!(
            vj_exact(&net, &fixed(&net, &[(0, 1.0), (1, 0.0)]), 2),
            Err(Error::TargetNotFixed(_))
        ));
    }

    #[test]
    fn vj_estimate_degenerate_cases() {
        let g2 = g2();
        let report = vj_estimate(&g2, &fixed(&g2, &[(0, 1.0), (1, 0.0)]), 0, &McConfig::new(1000, 1)).unwrap();
        assert_eq!(report.scalar(), 2.0);
        assert_eq!(report.scalar_error(), 0.0);

        let net = g3();
        let report = vj_estimate(&net, &fixed(&net, &[(0, 2.0), (1, 2.0)]), 0, &McConfig::new(1000, 1)).unwrap();
        assert_eq!((report.scalar(), report.scalar_error()), (0.0, 0.0));
    }

    #[test]
    fn vv_examples() {
        let net = g3();
        assert!(close(vv_exact(&net, &fixed(&net, &[(0, 1.0), (1, 0.0)]), 2).unwrap(), 0.6));
        let p3 = p3();
        assert!(close(vv_exact(&p3, &fixed(&p3, &[(0, 1.0), (2, 0.0)]), 1).unwrap(), 0.5));
        assert!(close(vv_exact(&net, &fixed(&net, &[(1, -3.0)]), 2).unwrap(), -3.0));
        assert!(matches!(vv_exact(&net, &fixed(&net, &[(1, 0.0)]), 1), Err(Error::TargetIsRoot(_))));
    }

    #[test]
    fn vv_estimate_constant_boundary() {
        let net = g3();
        let r = vv_estimate(&net, &fixed(&net, &[(0, 5.0), (1, 5.0)]), 2, &McConfig::new(500, 3)).unwrap();
        assert_eq!((r.scalar(), r.scalar_error()), (5.0, 0.0));
    }

    #[test]
    fn tree_flow_examples() {
        let net = g3();
        let j = InjectedCurrents::new(&net, vec![-1.0, 1.0, 0.0]).unwrap();
        let t = Tree::from_branches(&net, &[1, 2]).unwrap();
        let i = tree_current_distribution(&net, &t, &j).unwrap();
        assert_eq!((i.get(1, 2), i.get(2, 0), i.get(1, 0)), (1.0, 1.0, 0.0));
        let t = Tree::from_branches(&net, &[0, 1]).unwrap();
        let i = tree_current_distribution(&net, &t, &j).unwrap();
        assert_eq!((i.get(1, 0), i.get(1, 2), i.get(2, 0)), (1.0, 0.0, 0.0));
        let i = tree_current_distribution(&net, &t, &InjectedCurrents::zero(&net)).unwrap();
        assert!(i.matrix.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ji_examples() {
        let net = g3();
        let i = ji_exact(&net, &InjectedCurrents::new(&net, vec![-1.0, 1.0, 0.0]).unwrap()).unwrap();
        assert!(close(i.get(1, 0), 5.0 / 11.0));
        assert!(close(i.get(1, 2), 6.0 / 11.0));
        assert!(close(i.get(2, 0), 6.0 / 11.0));
        let g2 = g2();
        let i = ji_exact(&g2, &InjectedCurrents::new(&g2, vec![1.0, -1.0]).unwrap()).unwrap();
        assert!(close(i.get(0, 1), 1.0));
        let i = ji_exact(&net, &InjectedCurrents::zero(&net)).unwrap();
        assert!(i.matrix.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ji_estimate_single_tree_is_exact() {
        let p3 = p3();
        let j = InjectedCurrents::new(&p3, vec![0.3, -1.0, 0.7]).unwrap();
        let r = ji_estimate(&p3, &j, &McConfig::new(100, 5)).unwrap();
        assert!(r.std_error.iter().all(|&s| s == 0.0));
        assert!(close(r.entry(0, 1).0, 0.3));
    }

    fn unit_flow_21(n: usize) -> CurrentMatrix {
        let mut m = DMatrix::zeros(n, n);
        m[(1, 0)] = 1.0;
        m[(0, 1)] = -1.0;
        CurrentMatrix::from_matrix(m)
    }

    #[test]
    fn tree_voltage_examples() {
        let net = g3();
        let i = unit_flow_21(3);
        let t = Tree::from_branches(&net, &[0, 1]).unwrap();
        assert_eq!(tree_voltage_vector(&net, &t, &i, 0).unwrap().values, vec![0.0, 1.0, 1.0]);
        let t = Tree::from_branches(&net, &[1, 2]).unwrap();
        assert_eq!(tree_voltage_vector(&net, &t, &i, 0).unwrap().values, vec![0.0, 0.0, 0.0]);
        let zero = CurrentMatrix::zeros(3);
        assert_eq!(tree_voltage_vector(&net, &t, &zero, 2).unwrap().values, vec![0.0; 3]);
    }

    #[test]
    fn iv_examples() {
        let net = g3();
        let v = iv_exact(&net, &unit_flow_21(3), 0).unwrap();
        assert!(close(v.values[1], 5.0 / 11.0) && close(v.values[2], 2.0 / 11.0) && v.values[0] == 0.0);

        // the same injection routed 2 -> 3 -> 1
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 2)] = 1.0;
        m[(2, 1)] = -1.0;
        m[(2, 0)] = 1.0;
        m[(0, 2)] = -1.0;
        let v = iv_exact(&net, &CurrentMatrix::from_matrix(m), 0).unwrap();
        assert!(close(v.values[1], 5.0 / 11.0) && close(v.values[2], 2.0 / 11.0));

        assert_eq!(iv_exact(&net, &CurrentMatrix::zeros(3), 1).unwrap().values, vec![0.0; 3]);
    }

    #[test]
    fn iv_rejects_unbalanced() {
        let net = g3();
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 0)] = 1.0;
        assert!(matches!(iv_exact(&net, &CurrentMatrix::from_matrix(m), 0), Err(Error::InconsistentCurrentMatrix(_))));
    }

    #[test]
    fn conductance_examples() {
        assert!(close(equivalent_conductance(&g3(), 0, 1).unwrap(), 2.2));
        assert!(close(equivalent_conductance(&g2(), 0, 1).unwrap(), 2.0));
        assert!(close(equivalent_conductance(&p3(), 0, 2).unwrap(), 0.5));
        assert_eq!(equivalent_conductance(&g3(), 1, 1).unwrap_err(), Error::SameNode);
    }
}
