#![allow(dead_code)]

use forest_core::{build_network, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn g2() -> Network {
    build_network(&["1", "2"], &[("1", "2", 2.0)]).unwrap()
}

pub fn g3() -> Network {
    build_network(&["1", "2", "3"], &[("1", "2", 1.0), ("2", "3", 2.0), ("1", "3", 3.0)]).unwrap()
}

pub fn p3() -> Network {
    build_network(&["1", "2", "3"], &[("1", "2", 1.0), ("2", "3", 1.0)]).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub nodes: usize,
    /// Branches added on top of a random spanning tree; endpoints may repeat
    /// an existing pair, giving parallel branches.
    pub extra: usize,
    pub self_loops: usize,
}

/// A connected network with conductances uniform in (0.1, 10).
pub fn random_network(seed: u64, shape: Shape) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.nodes;
    let names: Vec<String> = (1..=n).map(|k| format!("n{k}")).collect();
    let mut branches = Vec::new();
    let g = |rng: &mut ChaCha8Rng| rng.random_range(0.1..10.0);
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let c = g(&mut rng);
        branches.push((parent, k, c));
    }
    for _ in 0..shape.extra {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n);
        while v == u {
            v = rng.random_range(0..n);
        }
        let c = g(&mut rng);
        branches.push((u, v, c));
    }
    for _ in 0..shape.self_loops {
        let k = rng.random_range(0..n);
        let c = g(&mut rng);
        branches.push((k, k, c));
    }
    // shuffle so branch ids do not follow construction order
    for i in (1..branches.len()).rev() {
        let j = rng.random_range(0..=i);
        branches.swap(i, j);
    }
    Network::from_indexed(names, &branches).unwrap()
}

/// A random shape with `nodes` in `lo..=hi`.
pub fn random_shape(seed: u64, lo: usize, hi: usize, loops: bool) -> Shape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nodes = rng.random_range(lo..=hi);
    Shape {
        nodes,
        extra: rng.random_range(0..=nodes),
        self_loops: if loops { rng.random_range(0..=2) } else { 0 },
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random nonempty proper subset of `0..n` not containing `exclude`.
pub fn random_roots(rng: &mut ChaCha8Rng, n: usize, exclude: usize) -> Vec<usize> {
    loop {
        let set: Vec<usize> = (0..n).filter(|&k| k != exclude && rng.random_bool(0.4)).collect();
        if !set.is_empty() {
            return set;
        }
    }
}

/// Normwise relative error `max|a - b| / max|b|` (absolute when `b` vanishes).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Separating forests of `roots` by scanning every branch subset of the right
/// size: a subset qualifies when it has no self-loop, no cycle, and puts
/// exactly one root in each component. Returns sorted branch lists with weights.
pub fn brute_force_forests(net: &Network, roots: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let n = net.node_count();
    let m = net.branch_count();
    let size = n - roots.len();
    assert!(m <= 20, "brute force is for small nets");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let chosen: Vec<usize> = (0..m).filter(|&b| mask & (1 << b) != 0).collect();
        if chosen.iter().any(|&b| net.branch(b).is_self_loop()) {
            continue;
        }
        // label propagation to components
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for &b in &chosen {
                let br = net.branch(b);
                let low = label[br.u].min(label[br.v]);
                for k in [br.u, br.v] {
                    if label[k] != low {
                        label[k] = low;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut components: Vec<usize> = label.clone();
        components.sort_unstable();
        components.dedup();
        if components.len() != roots.len() {
            continue;
        }
        let mut root_labels: Vec<usize> = roots.iter().map(|&r| label[r]).collect();
        root_labels.sort_unstable();
        root_labels.dedup();
        if root_labels.len() != roots.len() {
            continue;
        }
        let w = chosen.iter().map(|&b| net.branch(b).g).product();
        out.push((chosen, w));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
