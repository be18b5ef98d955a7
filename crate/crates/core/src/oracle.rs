//! Direct linear-algebra solutions used as ground truth.
//!
//! Everything here goes through dense LU factorization with partial pivoting
//! on reduced Laplacians or absorbing-chain matrices. None of it touches trees
//! or forests, so it can independently check the enumeration and sampling
//! engines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::Chain;
use crate::network::{normalize_set, FixedVoltages, InjectedCurrents, Network};

/// Node potentials in canonical node order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageVector {
    pub values: Vec<f64>,
    /// Node pinned to zero, when the problem was grounded.
    pub ground: Option<usize>,
}

impl VoltageVector {
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }
}

/// Branch currents, aggregated per ordered node pair and optionally per branch.
///
/// `matrix[(k, l)]` is the current flowing from `k` to `l` summed over parallel
/// branches; it is antisymmetric with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentMatrix {
    pub matrix: DMatrix<f64>,
    /// Current per branch id, oriented from `u` to `v`.
    pub per_branch: Option<Vec<f64>>,
}

impl CurrentMatrix {
    pub fn zeros(n: usize) -> Self {
        CurrentMatrix { matrix: DMatrix::zeros(n, n), per_branch: None }
    }

    /// Aggregates per-branch currents into the node-pair matrix.
    pub fn from_branch_currents(net: &Network, per_branch: Vec<f64>) -> Self {
        let n = net.node_count();
        let mut matrix = DMatrix::zeros(n, n);
        for (b, &i) in net.branches().iter().zip(&per_branch) {
            if !b.is_self_loop() {
                matrix[(b.u, b.v)] += i;
                matrix[(b.v, b.u)] -= i;
            }
        }
        CurrentMatrix { matrix, per_branch: Some(per_branch) }
    }

    /// A node-pair matrix without per-branch detail.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        CurrentMatrix { matrix, per_branch: None }
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.matrix[(k, l)]
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Net current leaving each node through its branches.
    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.sum()).collect()
    }
}

fn lu_solve(a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(rhs);
    }
    a.lu().solve(&rhs).ok_or(Error::SingularSystem)
}

/// Solves the network with the voltages of `fixed` held and currents
/// `injection` entering the remaining nodes. Entries of `injection` at fixed
/// nodes are ignored.
pub fn solve_mixed(net: &Network, fixed: &[(usize, f64)], injection: &[f64]) -> Result<Vec<f64>> {
    if fixed.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let n = net.node_count();
    if injection.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: injection.len() });
    }
    let mut values = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(k, v) in fixed {
        net.check_node(k)?;
        is_fixed[k] = true;
        values[k] = v;
    }
    let free: Vec<usize> = (0..n).filter(|&k| !is_fixed[k]).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &k) in free.iter().enumerate() {
        slot[k] = i;
    }
    let m = free.len();
    let mut a = DMatrix::zeros(m, m);
    let mut rhs = DVector::from_iterator(m, free.iter().map(|&k| injection[k]));
    for b in net.branches().iter().filter(|b| !b.is_self_loop()) {
        for (p, q) in [(b.u, b.v), (b.v, b.u)] {
            if is_fixed[p] {
                continue;
            }
            let row = slot[p];
            a[(row, row)] += b.g;
            if is_fixed[q] {
                rhs[row] += b.g * values[q];
            } else {
                a[(row, slot[q])] -= b.g;
            }
        }
    }
    let x = lu_solve(a, rhs)?;
    for (i, &k) in free.iter().enumerate() {
        values[k] = x[i];
    }
    Ok(values)
}

/// Voltages when `fixed` nodes are held and every other node is harmonic.
pub fn solve_dirichlet(net: &Network, fixed: &FixedVoltages) -> Result<VoltageVector> {
    let values = solve_mixed(net, fixed.assignments(), &vec![0.0; net.node_count()])?;
    Ok(VoltageVector { values, ground: None })
}

/// Voltages produced by the injection `j`, with `ground` pinned to zero.
pub fn solve_injected(net: &Network, j: &InjectedCurrents, ground: usize) -> Result<VoltageVector> {
    net.check_node(ground)?;
    let values = solve_mixed(net, &[(ground, 0.0)], j.as_slice())?;
    Ok(VoltageVector { values, ground: Some(ground) })
}

/// Per-branch Ohm's law currents `g_b (v_u - v_v)`; self-loops carry nothing.
pub fn branch_currents(net: &Network, v: &VoltageVector) -> CurrentMatrix {
    let per_branch = net
        .branches()
        .iter()
        .map(|b| if b.is_self_loop() { 0.0 } else { b.g * (v.values[b.u] - v.values[b.v]) })
        .collect();
    CurrentMatrix::from_branch_currents(net, per_branch)
}

/// Injected currents `L v` implied by a voltage vector.
pub fn injected_from_voltages(net: &Network, v: &[f64]) -> Vec<f64> {
    let lap = net.laplacian();
    let x = DVector::from_column_slice(v);
    (lap * x).iter().copied().collect()
}

/// Weighted spanning-tree count via a principal minor of the Laplacian.
pub fn tree_sum_determinant(net: &Network) -> f64 {
    let n = net.node_count();
    if n <= 1 {
        return 1.0;
    }
    let lap = net.laplacian();
    let minor = lap.remove_row(n - 1).remove_column(n - 1);
    minor.lu().determinant()
}

/// Expected absorption time and absorption distribution from the fundamental matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingOracle {
    pub tau: f64,
    /// `(state, probability)` for each state of R, in index order.
    pub absorb: Vec<(usize, f64)>,
}

/// Row `start` of the fundamental matrix `(I - Q)^-1` over the transient states.
fn fundamental_row(chain: &Chain, start: usize, roots: &[usize]) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = chain.state_count();
    let mut in_roots = vec![false; n];
    for &r in roots {
        in_roots[r] = true;
    }
    let transient: Vec<usize> = (0..n).filter(|&k| !in_roots[k]).collect();
    let m = transient.len();
    let p = chain.transition_matrix();
    // (I - Q)^T x = e_start gives x = row `start` of the fundamental matrix.
    let mut a = DMatrix::zeros(m, m);
    for (i, &k) in transient.iter().enumerate() {
        for (j, &l) in transient.iter().enumerate() {
            a[(j, i)] = if i == j { 1.0 } else { 0.0 } - p[(k, l)];
        }
    }
    let pos = transient.iter().position(|&k| k == start).expect("start is transient");
    let mut rhs = DVector::zeros(m);
    rhs[pos] = 1.0;
    let x = lu_solve(a, rhs)?;
    Ok((transient, x.iter().copied().collect()))
}

fn checked_roots(chain: &Chain, start: usize, roots: &[usize]) -> Result<Vec<usize>> {
    if roots.is_empty() {
        return Err(Error::EmptyRootSet);
    }
    chain.network().check_node(start)?;
    normalize_set(chain.network(), roots)
}

/// Hitting time of R from `start` and where the walk is absorbed.
pub fn fundamental_hitting(chain: &Chain, start: usize, roots: &[usize]) -> Result<HittingOracle> {
    let roots = checked_roots(chain, start, roots)?;
    if roots.contains(&start) {
        let absorb = roots.iter().map(|&r| (r, if r == start { 1.0 } else { 0.0 })).collect();
        return Ok(HittingOracle { tau: 0.0, absorb });
    }
    let (transient, row) = fundamental_row(chain, start, &roots)?;
    let p = chain.transition_matrix();
    let tau = row.iter().sum();
    let absorb = roots
        .iter()
        .map(|&r| (r, transient.iter().zip(&row).map(|(&t, &x)| x * p[(t, r)]).sum()))
        .collect();
    Ok(HittingOracle { tau, absorb })
}

/// Expected visits to each state before absorption in R; the absorbing step is not a visit.
pub fn expected_visits(chain: &Chain, start: usize, roots: &[usize]) -> Result<Vec<f64>> {
    let roots = checked_roots(chain, start, roots)?;
    let mut e = vec![0.0; chain.state_count()];
    if roots.contains(&start) {
        return Ok(e);
    }
    let (transient, row) = fundamental_row(chain, start, &roots)?;
    for (&k, &x) in transient.iter().zip(&row) {
        e[k] = x;
    }
    Ok(e)
}
