//! Sparse symmetric storage and an up-looking Cholesky factorization with
//! reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symmetric matrix holding its lower triangle row by row (CSR).
///
/// Row `i` stores columns `j <= i` in increasing order; equivalently,
/// column `i` of the upper triangle in CSC.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Assembles from `(i, j, value)` triplets, either triangle. Duplicates are
    /// summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(i, j, v)| if i >= j { (i, j, v) } else { (j, i, v) })
            .collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < n, "triplet row {i} out of range for order {n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Stored entries (lower triangle including the diagonal).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i` of the lower triangle.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut s = 0.0;
            for (j, a) in self.row(i) {
                s += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += s;
        }
    }

    /// Infinity norm of the full symmetric matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                rows[i] += a.abs();
                if j != i {
                    rows[j] += a.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `P A P^T`, where old index `i` becomes `new_of_old[i]`.
    pub fn permuted(&self, new_of_old: &[usize]) -> SparseSym {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                t.push((new_of_old[i], new_of_old[j], a));
            }
        }
        SparseSym::from_triplets(self.n, &t)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }
}

/// Normwise backward error `|b - A x|_inf / (|A|_inf |x|_inf + |b|_inf)`.
pub fn relative_residual(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let denom = a.norm_inf() * inf_norm(x) + inf_norm(b);
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Reverse Cuthill-McKee ordering; returns `old_of_new`.
pub fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.order();
    let mut adj = a.adjacency();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nb in adj.iter_mut() {
        nb.sort_by_key(|&j| (degree[j], j));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: repeat BFS from the farthest, lowest-degree node.
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..8 {
            let (far, depth) = bfs_farthest(&adj, &degree, start, &mut level);
            if depth <= ecc {
                break;
            }
            ecc = depth;
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

fn bfs_farthest(
    adj: &[Vec<usize>],
    degree: &[usize],
    start: usize,
    level: &mut [usize],
) -> (usize, usize) {
    let mut touched = vec![start];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0usize);
    while let Some(v) = queue.pop_front() {
        let lv = level[v];
        if lv > best.1 || (lv == best.1 && degree[v] < degree[best.0]) {
            best = (v, lv);
        }
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = lv + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    for v in touched {
        level[v] = usize::MAX;
    }
    best
}

/// `P A P^T = L L^T`.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    n: usize,
    /// `old_of_new[k]`: original index of permuted row `k`.
    old_of_new: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Pattern of row `k` of `L` in topological order, written to `stack[top..]`.
fn ereach(
    a: &SparseSym,
    k: usize,
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = a.order();
    let mut top = n;
    mark[k] = k;
    for (i, _) in a.row(k) {
        let mut i = i;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

fn elimination_tree(a: &SparseSym) -> Vec<usize> {
    let n = a.order();
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for k in 0..n {
        for (i, _) in a.row(k) {
            let mut i = i;
            while i != usize::MAX && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == usize::MAX {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

pub fn sparse_cholesky(m: &SparseSym) -> Result<SparseCholesky> {
    let old_of_new = reverse_cuthill_mckee(m);
    let mut new_of_old = vec![0; m.order()];
    for (new, &old) in old_of_new.iter().enumerate() {
        new_of_old[old] = new;
    }
    let a = m.permuted(&new_of_old);
    factor_with_order(&a, old_of_new)
}

/// Factorizes an already ordered matrix.
fn factor_with_order(a: &SparseSym, old_of_new: Vec<usize>) -> Result<SparseCholesky> {
    let n = a.order();
    // Roots point at the sentinel index `n`.
    let parent: Vec<usize> = elimination_tree(a)
        .into_iter()
        .map(|p| if p == usize::MAX { n } else { p })
        .collect();
    let mut mark = vec![usize::MAX; n + 1];
    let mut stack = vec![0usize; n];

    // Column counts from the row patterns.
    let mut counts = vec![1usize; n];
    for k in 0..n {
        let top = ereach_rooted(a, k, &parent, &mut stack, &mut mark);
        for &j in &stack[top..] {
            counts[j] += 1;
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        col_ptr[j + 1] = col_ptr[j] + counts[j];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    let mut next = col_ptr[..n].to_vec();
    let mut x = vec![0.0; n];
    mark.iter_mut().for_each(|m| *m = usize::MAX);

    for k in 0..n {
        let top = ereach_rooted(a, k, &parent, &mut stack, &mut mark);
        for (i, v) in a.row(k) {
            x[i] = v;
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &stack[top..] {
            let lki = x[i] / values[col_ptr[i]];
            x[i] = 0.0;
            for p in col_ptr[i] + 1..next[i] {
                x[row_idx[p]] -= values[p] * lki;
            }
            d -= lki * lki;
            let p = next[i];
            next[i] += 1;
            row_idx[p] = k;
            values[p] = lki;
        }
        if !(d > 0.0) {
            return Err(Error::NotSpd {
                pivot: old_of_new[k],
                value: d,
            });
        }
        let p = next[k];
        next[k] += 1;
        row_idx[p] = k;
        values[p] = d.sqrt();
    }
    Ok(SparseCholesky {
        n,
        old_of_new,
        col_ptr,
        row_idx,
        values,
    })
}

/// `ereach` on a tree whose roots point at the sentinel `n`.
fn ereach_rooted(
    a: &SparseSym,
    k: usize,
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    // Mark the sentinel so that walks stop at the roots.
    let n = a.order();
    mark[n] = k;
    ereach(a, k, parent, stack, mark)
}

impl SparseCholesky {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entries of the factor `L`.
    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.old_of_new.iter().map(|&o| rhs[o]).collect();
        for j in 0..n {
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            y[j] /= self.values[r.start];
            let yj = y[j];
            for p in r.start + 1..r.end {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            let mut s = y[j];
            for p in r.start + 1..r.end {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[r.start];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.old_of_new.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

pub fn sparse_solve(fact: &SparseCholesky, rhs: &[f64]) -> Vec<f64> {
    fact.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::dense::{dense_ldlt_factor, DenseSym};

    fn laplacian_1d(n: usize) -> SparseSym {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
        }
        SparseSym::from_triplets(n, &t)
    }

    #[test]
    fn tridiagonal_known_solution() {
        let a = laplacian_1d(5);
        let f = sparse_cholesky(&a).unwrap();
        let x = sparse_solve(&f, &[1.0; 5]);
        // Dense oracle.
        let d = DenseSym::from_fn(5, |i, j| a.get(i, j));
        let y = dense_ldlt_factor(&d).unwrap().solve(&[1.0; 5]);
        for ((p, q), r) in x.iter().zip(&y).zip([2.5, 4.0, 4.5, 4.0, 2.5]) {
            assert!((p - r).abs() < 1e-13 && (q - r).abs() < 1e-13);
        }
        assert!(relative_residual(&a, &x, &[1.0; 5]) < 1e-15);
    }

    #[test]
    fn permutation_equivariance() {
        let a = SparseSym::from_triplets(
            4,
            &[
                (0, 0, 4.0),
                (1, 1, 5.0),
                (2, 2, 6.0),
                (3, 3, 7.0),
                (1, 0, 1.0),
                (3, 1, -2.0),
                (2, 0, 0.5),
            ],
        );
        let b = [1.0, -2.0, 3.0, 0.25];
        let x = sparse_solve(&sparse_cholesky(&a).unwrap(), &b);
        let new_of_old = [2, 0, 3, 1];
        let pa = a.permuted(&new_of_old);
        let mut pb = [0.0; 4];
        for i in 0..4 {
            pb[new_of_old[i]] = b[i];
        }
        let px = sparse_solve(&sparse_cholesky(&pa).unwrap(), &pb);
        for i in 0..4 {
            assert!((px[new_of_old[i]] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![4.0, 1.0]);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0), (1, 0, 3.0)]);
        assert!(matches!(sparse_cholesky(&a), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn grid_laplacian_and_rcm() {
        let n = 12;
        let id = |i: usize, j: usize| j * n + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
            }
        }
        let a = SparseSym::from_triplets(n * n, &t);
        let order = reverse_cuthill_mckee(&a);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n * n).collect::<Vec<_>>());
        let b: Vec<f64> = (0..n * n).map(|i| (i as f64).sin()).collect();
        let f = sparse_cholesky(&a).unwrap();
        let x = f.solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-15);
        let dense = DenseSym::from_fn(n * n, |i, j| a.get(i, j));
        let y = dense_ldlt_factor(&dense).unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
