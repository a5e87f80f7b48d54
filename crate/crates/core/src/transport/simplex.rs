//! Primal transportation simplex on the bipartite spanning-tree basis.
//!
//! Supplies and demands are floats; the basis always holds `m + n - 1`
//! cells (degenerate zero-flow cells included), so dual potentials are
//! well defined at every iteration.

use crate::error::{Error, Result};

pub(crate) struct TransportSolution {
    /// Basic cells `(row, col, flow)`; flows are `>= 0`.
    pub cells: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

struct Tree {
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<f64>,
}

pub(crate) fn solve<C: Fn(usize, usize) -> f64>(
    supply: &[f64],
    demand: &[f64],
    cost: C,
) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParams("empty transport problem".into()));
    }
    let mut cells = northwest_corner(supply, demand);
    let scale = cells
        .iter()
        .map(|&(i, j, _)| cost(i, j).abs())
        .fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;
    let max_iter = 200 * (m + n) * (m + n).max(10);
    let mut degenerate_run = 0usize;
    let mut cursor = 0usize;
    for _ in 0..max_iter {
        let tree = build_tree(m, n, &cells, &cost);
        let reduced = |i: usize, j: usize| cost(i, j) - tree.potential[i] - tree.potential[m + j];
        // Dantzig pricing; after a long degenerate run fall back to the first
        // improving cell in a rotating scan to avoid cycling.
        let entering = if degenerate_run <= m + n {
            let mut best = (-tol, None);
            for i in 0..m {
                for j in 0..n {
                    let r = reduced(i, j);
                    if r < best.0 {
                        best = (r, Some((i, j)));
                    }
                }
            }
            best.1
        } else {
            let total = m * n;
            (0..total)
                .map(|k| (cursor + k) % total)
                .find(|&k| reduced(k / n, k % n) < -tol)
                .map(|k| {
                    cursor = k + 1;
                    (k / n, k % n)
                })
        };
        let Some((ei, ej)) = entering else {
            let total = cells.iter().map(|&(i, j, f)| f * cost(i, j)).sum();
            return Ok(TransportSolution { cells, cost: total });
        };
        // tree path from column node m+ej to row node ei
        let path = tree_path(&tree, m + ej, ei);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &edge) in path.iter().enumerate() {
            if k % 2 == 0 && cells[edge].2 < theta {
                theta = cells[edge].2;
                leaving = edge;
            }
        }
        for (k, &edge) in path.iter().enumerate() {
            let f = &mut cells[edge].2;
            if k % 2 == 0 {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        cells[leaving] = (ei, ej, theta);
    }
    Err(Error::Numerical(
        "transportation simplex hit its iteration limit".into(),
    ))
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<(usize, usize, f64)> {
    let (m, n) = (supply.len(), demand.len());
    let mut cells = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (supply[0], demand[0]);
    loop {
        let f = ra.min(rb).max(0.0);
        cells.push((i, j, f));
        ra -= f;
        rb -= f;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let advance_row = if i == m - 1 {
            false
        } else if j == n - 1 {
            true
        } else {
            ra <= rb
        };
        if advance_row {
            i += 1;
            ra = supply[i];
        } else {
            j += 1;
            rb = demand[j];
        }
    }
    // absorb rounding so the last cell closes both marginals
    if let Some(last) = cells.last_mut() {
        last.2 = (last.2 + ra.min(rb).max(0.0)).max(0.0);
    }
    cells
}

fn build_tree<C: Fn(usize, usize) -> f64>(
    m: usize,
    n: usize,
    cells: &[(usize, usize, f64)],
    cost: &C,
) -> Tree {
    let nodes = m + n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(i, j, _)) in cells.iter().enumerate() {
        adj[i].push(e);
        adj[m + j].push(e);
    }
    let mut tree = Tree {
        parent: vec![usize::MAX; nodes],
        parent_edge: vec![usize::MAX; nodes],
        depth: vec![0; nodes],
        potential: vec![0.0; nodes],
    };
    let mut visited = vec![false; nodes];
    let mut stack = vec![0usize];
    visited[0] = true;
    while let Some(node) = stack.pop() {
        for &e in &adj[node] {
            let (i, j, _) = cells[e];
            let other = if node == i { m + j } else { i };
            if visited[other] {
                continue;
            }
            visited[other] = true;
            tree.parent[other] = node;
            tree.parent_edge[other] = e;
            tree.depth[other] = tree.depth[node] + 1;
            // u_i + v_j = c_ij on basic cells
            tree.potential[other] = cost(i, j) - tree.potential[node];
            stack.push(other);
        }
    }
    tree
}

/// Basic edges on the tree path from `from` to `to`, in walking order.
fn tree_path(tree: &Tree, from: usize, to: usize) -> Vec<usize> {
    let (mut a, mut b) = (from, to);
    let mut head = Vec::new();
    let mut tail = Vec::new();
    while tree.depth[a] > tree.depth[b] {
        head.push(tree.parent_edge[a]);
        a = tree.parent[a];
    }
    while tree.depth[b] > tree.depth[a] {
        tail.push(tree.parent_edge[b]);
        b = tree.parent[b];
    }
    while a != b {
        head.push(tree.parent_edge[a]);
        a = tree.parent[a];
        tail.push(tree.parent_edge[b]);
        b = tree.parent[b];
    }
    tail.reverse();
    head.extend(tail);
    head
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // classic 3x4 instance; optimum 435 confirmed with an external LP solver
        let supply = [15.0, 25.0, 10.0];
        let demand = [5.0, 15.0, 15.0, 15.0];
        let cost = [
            [10.0, 2.0, 20.0, 11.0],
            [12.0, 7.0, 9.0, 20.0],
            [4.0, 14.0, 16.0, 18.0],
        ];
        let sol = solve(&supply, &demand, |i, j| cost[i][j]).unwrap();
        assert!((sol.cost - 435.0).abs() < 1e-9, "{}", sol.cost);
        let mut rows = [0.0; 3];
        let mut cols = [0.0; 4];
        for &(i, j, f) in &sol.cells {
            assert!(f >= 0.0);
            rows[i] += f;
            cols[j] += f;
        }
        assert_eq!(rows, supply);
        assert_eq!(cols, demand);
    }

    #[test]
    fn basis_size_is_spanning() {
        let cells = northwest_corner(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(cells.len(), 4);
        let cells = northwest_corner(&[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(cells.len(), 3);
    }
}
