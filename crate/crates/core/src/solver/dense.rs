use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are rejected.
pub const PIVOT_TOL: f64 = 1e-14;

/// Symmetric matrix in packed lower-triangular storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSym {
    n: usize,
    packed: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            packed: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a full row-major matrix, reading the lower triangle.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[idx(i, j)] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Infinity norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }
}

/// `A = L D L^T` with unit lower `L`; only succeeds for positive definite `A`.
#[derive(Clone, Debug)]
pub struct Ldlt {
    n: usize,
    /// Strictly lower part of `L`, packed.
    l: Vec<f64>,
    d: Vec<f64>,
}

pub fn dense_ldlt_factor(a: &DenseSym) -> Result<Ldlt> {
    let n = a.n;
    let tol = PIVOT_TOL * a.max_diag();
    let mut l = vec![0.0; n * (n + 1) / 2];
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = a.get(j, j);
        for k in 0..j {
            let ljk = l[idx(j, k)];
            dj -= ljk * ljk * d[k];
        }
        if !(dj > tol) {
            return Err(Error::NotSpd {
                pivot: j,
                value: dj,
            });
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[idx(i, k)] * l[idx(j, k)] * d[k];
            }
            l[idx(i, j)] = s / dj;
        }
    }
    Ok(Ldlt { n, l, d })
}

impl Ldlt {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[idx(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[idx(k, i)] * x[k];
            }
            x[i] = s;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Explicit inverse, one column per unit vector solve.
    pub fn inverse(&self) -> DenseSym {
        let n = self.n;
        let mut inv = DenseSym::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for (i, &v) in col.iter().enumerate().skip(j) {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

pub fn dense_solve(fact: &Ldlt, rhs: &[f64]) -> Vec<f64> {
    fact.solve(rhs)
}

/// General square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// LU with partial pivoting; a pivot below `tol * max|a|` is reported as singular.
    pub fn lu_solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= tol * scale {
                return Err(Error::Singular { column: col });
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                b.swap(col, piv);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                b[r] -= f * b[col];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i * n + j] * b[j];
            }
            b[i] = s / a[i * n + i];
        }
        Ok(b)
    }

    /// Numerical rank by Gaussian elimination with full pivoting.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let n = self.n;
        let mut a = self.data.clone();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut rank = 0;
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        for step in 0..n {
            let mut best = (step, step, 0.0);
            for (ri, &r) in rows.iter().enumerate().skip(step) {
                for (ci, &c) in cols.iter().enumerate().skip(step) {
                    let v = a[r * n + c].abs();
                    if v > best.2 {
                        best = (ri, ci, v);
                    }
                }
            }
            if best.2 <= rel_tol * scale {
                break;
            }
            rows.swap(step, best.0);
            cols.swap(step, best.1);
            let (pr, pc) = (rows[step], cols[step]);
            let p = a[pr * n + pc];
            for &r in &rows[step + 1..] {
                let f = a[r * n + pc] / p;
                for &c in &cols[step..] {
                    a[r * n + c] -= f * a[pr * n + c];
                }
            }
            rank += 1;
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_diagonal() {
        let f = dense_ldlt_factor(&DenseSym::identity(3)).unwrap();
        assert_eq!(dense_solve(&f, &[1.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        let d = DenseSym::from_fn(2, |i, j| if i == j { [2.0, 3.0][i] } else { 0.0 });
        let f = dense_ldlt_factor(&d).unwrap();
        assert_eq!(dense_solve(&f, &[2.0, 3.0]), vec![1.0, 1.0]);
    }

    fn unit_square_bk(nu: f64) -> DenseSym {
        // Edges E, N, W, S of the unit square, Lambda = I, x_K at the centroid.
        let g = [
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
            [-1.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 1.0],
        ];
        DenseSym::from_fn(4, |i, j| 0.25 * g[i][j] + if i == j { nu } else { 0.0 })
    }

    #[test]
    fn penalized_square_residuals() {
        let a = unit_square_bk(1e-9);
        let f = dense_ldlt_factor(&a).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let norm = a.norm_inf();
        for _ in 0..50 {
            let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = dense_solve(&f, &b);
            let ax = a.mul_vec(&x);
            let r = ax
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(r <= 1e-9 * norm * xn.max(1.0), "residual {r}");
        }
    }

    #[test]
    fn singular_gram_matrix_is_rejected() {
        match dense_ldlt_factor(&unit_square_bk(0.0)) {
            Err(Error::NotSpd { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("{other:?}"),
        }
        let indefinite = DenseSym::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(dense_ldlt_factor(&indefinite).is_err());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = DenseSym::from_fn(4, |i, j| {
            if i == j {
                4.0
            } else {
                1.0 / (1 + i + j) as f64
            }
        });
        let inv = dense_ldlt_factor(&a).unwrap().inverse();
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| a.get(i, k) * inv.get(k, j)).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lu_and_rank() {
        let mut m = DenseMatrix::zeros(3);
        for (i, row) in [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [2.0, 0.0, 3.0]]
            .iter()
            .enumerate()
        {
            for (j, v) in row.iter().enumerate() {
                m.add(i, j, *v);
            }
        }
        let x = m.lu_solve(&[3.0, 2.0, 5.0], 1e-14).unwrap();
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(m.rank(1e-12), 3);
        let mut s = DenseMatrix::zeros(2);
        s.add(0, 0, 1.0);
        s.add(0, 1, 2.0);
        s.add(1, 0, 2.0);
        s.add(1, 1, 4.0);
        assert_eq!(s.rank(1e-12), 1);
        assert!(matches!(
            s.lu_solve(&[1.0, 1.0], 1e-12),
            Err(Error::Singular { .. })
        ));
    }
}
