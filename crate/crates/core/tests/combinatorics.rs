mod common;

use std::collections::BTreeMap;

use common::*;
use forest_core::enumeration::{
    enumerate_orchards, enumerate_separating_forests, enumerate_spanning_trees, forest_weight_sum, tree_weight_sum,
};
use forest_core::{to_markov_chain, Forest, Tree};
use rand::Rng;

#[test]
fn forests_match_brute_force() {
    for seed in 0..60 {
        let net = random_network(seed, random_shape(seed, 2, 6, true));
        let mut r = rng(seed + 1000);
        let n = net.node_count();
        let ex = r.random_range(0..n);
        let roots = random_roots(&mut r, n, ex);
        let truth = brute_force_forests(&net, &roots);
        let ours = enumerate_separating_forests(&net, &roots).unwrap();
        let got: Vec<Vec<usize>> = ours.iter().map(|(f, _)| f.branches().to_vec()).collect();
        let want: Vec<Vec<usize>> = truth.iter().map(|(b, _)| b.clone()).collect();
        assert_eq!(got, want, "seed {seed}");
        for ((_, a), (_, b)) in ours.iter().zip(&truth) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }
}

#[test]
fn trees_match_brute_force() {
    for seed in 0..60 {
        let net = random_network(seed, random_shape(seed, 2, 6, true));
        let truth = brute_force_forests(&net, &[0]);
        let ours = enumerate_spanning_trees(&net).unwrap();
        let got: Vec<Vec<usize>> = ours.iter().map(|(t, _)| t.branches().to_vec()).collect();
        let want: Vec<Vec<usize>> = truth.into_iter().map(|(b, _)| b).collect();
        assert_eq!(got, want, "seed {seed}");
    }
}

#[test]
fn contraction_is_a_bijection() {
    for seed in 0..60 {
        let net = random_network(seed, random_shape(seed, 3, 6, true));
        let mut r = rng(seed + 2000);
        let n = net.node_count();
        let ex = r.random_range(0..n);
        let roots = random_roots(&mut r, n, ex);
        let map = net.contract(&roots).unwrap();
        let child_trees = enumerate_spanning_trees(&map.child).unwrap();
        let forests = enumerate_separating_forests(&net, &roots).unwrap();
        assert_eq!(child_trees.len(), forests.len(), "seed {seed}");

        // child tree -> forest
        let mut lifted: Vec<Vec<usize>> = Vec::new();
        for (t, w) in &child_trees {
            let branches = map.lift(t.branches());
            let f = Forest::from_branches(&net, &branches, &roots).unwrap();
            assert!((f.weight(&net) - w).abs() <= 1e-12 * w);
            lifted.push(branches);
        }
        lifted.sort();
        lifted.dedup();
        assert_eq!(lifted.len(), forests.len(), "lift is injective");

        // forest -> child tree
        for (f, _) in &forests {
            let image: Vec<usize> = f.branches().iter().map(|&b| map.branch_map[b].unwrap()).collect();
            let mut sorted = image.clone();
            sorted.sort_unstable();
            Tree::from_branches(&map.child, &sorted).unwrap();
            assert_eq!(map.lift(&sorted), f.branches());
        }
    }
}

#[test]
fn paths_stay_in_blocks() {
    for seed in 0..30 {
        let net = random_network(seed, random_shape(seed, 3, 7, false));
        let mut r = rng(seed + 3000);
        let n = net.node_count();
        let ex = r.random_range(0..n);
        let roots = random_roots(&mut r, n, ex);
        for (f, _) in enumerate_separating_forests(&net, &roots).unwrap() {
            let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
            for k in 0..n {
                *sizes.entry(f.block_of(k)).or_default() += 1;
            }
            for k in 0..n {
                let root = f.block_of(k);
                assert!(roots.contains(&root));
                let path = f.path_to_root(k);
                assert_eq!(path.len(), f.depth(k));
                assert!(f.depth(k) < sizes[&root]);
                assert_eq!(f.depth(k) == 0, k == root);
                // walking the path ends at the root
                let mut at = k;
                for &b in path {
                    at = net.branch(b).other(at);
                }
                assert_eq!(at, root);
            }
        }
    }
}

#[test]
fn forest_sums_shrink_as_roots_grow_on_fixtures() {
    for net in [g2(), g3()] {
        let n = net.node_count();
        let full = forest_weight_sum(&net, &[0]).unwrap();
        assert_eq!(full, tree_weight_sum(&net).unwrap());
        // every chain of root sets grown one node at a time
        for first in 0..n {
            let mut roots = vec![first];
            let mut prev = forest_weight_sum(&net, &roots).unwrap();
            for k in (0..n).filter(|&k| k != first) {
                roots.push(k);
                let next = forest_weight_sum(&net, &roots).unwrap();
                assert!(next <= prev, "{roots:?}: {next} > {prev}");
                prev = next;
            }
            assert_eq!(prev, 1.0);
        }
    }
    // not a general law: on P3 rooting at 3 then adding 1 goes from 1 to 2
    let p3 = p3();
    assert_eq!(forest_weight_sum(&p3, &[2]).unwrap(), 1.0);
    assert_eq!(forest_weight_sum(&p3, &[2, 0]).unwrap(), 2.0);
    let g3 = g3();
    assert_eq!(tree_weight_sum(&g3).unwrap(), 11.0);
    assert_eq!(forest_weight_sum(&g3, &[0, 1]).unwrap(), 5.0);
}

#[test]
fn orchard_weights_rescale_forest_weights() {
    for seed in 0..30 {
        let net = random_network(seed, random_shape(seed, 3, 6, true));
        let chain = to_markov_chain(&net);
        let mut r = rng(seed + 4000);
        let n = net.node_count();
        let ex = r.random_range(0..n);
        let roots = random_roots(&mut r, n, ex);
        let scaled = chain.network();
        for (orchard, o) in enumerate_orchards(&chain, &roots).unwrap() {
            assert_eq!(orchard.edges().len(), n - roots.len());
            assert_eq!(orchard.is_arborescence(), roots.len() == 1);
            let sources: f64 = orchard.edges().iter().map(|e| chain.conductance_sum(e.from)).product();
            let w = orchard.forest().weight(scaled);
            assert!((o * sources - w).abs() <= 1e-12 * w.max(1e-300), "seed {seed}");
        }
    }
}
