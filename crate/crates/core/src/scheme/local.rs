use crate::error::{Error, Result};
use crate::mesh::{Cell, Mesh};
use crate::problem::CellData;
use crate::solver::{dense_ldlt_factor, DenseSym, Ldlt};

/// Condensed per-cell system.
///
/// With `B` the local flux matrix and `Z = [I; -1^T]` a basis of the vectors
/// with zero sum, the cell contributes `S = Z (Z^T B Z)^{-1} Z^T` to the
/// edge system, and the cell unknown and fluxes follow from
/// `u_K = f_K / b_K + w . u_edges`, `F = S u_edges - w f_K` where
/// `w = B^{-1} 1 / b_K` and `b_K = 1^T B^{-1} 1`.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub cell: usize,
    pub nu: f64,
    /// `B`.
    pub matrix: DenseSym,
    /// Factorization of `Z^T B Z`.
    pub reduced: Ldlt,
    /// `S`, full row-major.
    pub condensed: Vec<f64>,
    /// `w`; sums to one.
    pub weights: Vec<f64>,
    /// `1 / b_K = w^T B w`; zero without penalization.
    pub inv_total: f64,
}

impl LocalSystem {
    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.condensed[i * self.order() + j]
    }

    /// `b_K`, infinite when `nu = 0`.
    pub fn b_total(&self) -> f64 {
        if self.inv_total > 0.0 {
            1.0 / self.inv_total
        } else {
            f64::INFINITY
        }
    }

    /// `b_{K,sigma} = (B^{-1} 1)_sigma`.
    pub fn b_coeffs(&self) -> Vec<f64> {
        let b = self.b_total();
        self.weights.iter().map(|w| w * b).collect()
    }

    /// Cell value and fluxes from the edge values around the cell.
    ///
    /// The fluxes are `F = Z y - f_K e_last` with `(Z^T B Z) y = Z^T (u_edges + f_K B e_last)`,
    /// which is `B^{-1} (u_edges - u_K 1)` obtained by a solve rather than through `S`.
    pub fn recover(&self, traces: &[f64], source: f64) -> (f64, Vec<f64>) {
        let n = self.order();
        let last = n - 1;
        let u = source * self.inv_total
            + self
                .weights
                .iter()
                .zip(traces)
                .map(|(w, t)| w * t)
                .sum::<f64>();
        let mut y: Vec<f64> = (0..last)
            .map(|i| {
                traces[i] - traces[last]
                    + source * (self.matrix.get(i, last) - self.matrix.get(last, last))
            })
            .collect();
        self.reduced.solve_in_place(&mut y);
        let mut fluxes = y.clone();
        fluxes.push(-source - y.iter().sum::<f64>());
        (u, fluxes)
    }
}

/// `B[s, t] = Lambda^{-1} (x_t - x_K) . (x_s - x_K) / m(K) + nu m(K) delta_st`.
pub fn flux_matrix(mesh: &Mesh, cell: &Cell, data: &CellData, nu: f64) -> DenseSym {
    let d: Vec<_> = cell
        .edges
        .iter()
        .map(|&e| mesh.edges[e].barycenter - cell.point)
        .collect();
    let mu = nu * cell.area;
    DenseSym::from_fn(d.len(), |i, j| {
        data.lambda_inv.apply(d[j]).dot(d[i]) / cell.area + if i == j { mu } else { 0.0 }
    })
}

pub fn local_system(mesh: &Mesh, index: usize, data: &CellData, nu: f64) -> Result<LocalSystem> {
    let cell = &mesh.cells[index];
    let n = cell.edges.len();
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::LocalSystem {
            cell: index,
            reason: format!("invalid penalization {nu}"),
        });
    }
    if nu == 0.0 && !cell.is_simplex() {
        return Err(Error::LocalSystem {
            cell: index,
            reason: format!("zero penalization requires a simplicial cell, this one has {n} edges"),
        });
    }
    let b = flux_matrix(mesh, cell, data, nu);
    let last = n - 1;
    let reduced_matrix = DenseSym::from_fn(last, |i, j| {
        b.get(i, j) - b.get(i, last) - b.get(last, j) + b.get(last, last)
    });
    let reduced = dense_ldlt_factor(&reduced_matrix).map_err(|e| Error::LocalSystem {
        cell: index,
        reason: e.to_string(),
    })?;

    // H = (Z^T B Z)^{-1}, column by column.
    let mut h = vec![0.0; last * last];
    let mut col = vec![0.0; last];
    for j in 0..last {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        reduced.solve_in_place(&mut col);
        for i in 0..last {
            h[i * last + j] = col[i];
        }
    }
    let mut s = vec![0.0; n * n];
    for i in 0..last {
        let mut row_sum = 0.0;
        for j in 0..last {
            s[i * n + j] = h[i * last + j];
            row_sum += h[i * last + j];
        }
        s[i * n + last] = -row_sum;
    }
    let mut total = 0.0;
    for j in 0..last {
        let col_sum: f64 = (0..last).map(|i| h[i * last + j]).sum();
        s[last * n + j] = -col_sum;
        total += col_sum;
    }
    s[last * n + last] = total;

    // w = e_last - Z H Z^T B e_last.
    let rhs: Vec<f64> = (0..last)
        .map(|i| b.get(i, last) - b.get(last, last))
        .collect();
    let y = reduced.solve(&rhs);
    let mut weights: Vec<f64> = y.iter().map(|v| -v).collect();
    weights.push(1.0 + y.iter().sum::<f64>());
    let inv_total = if nu == 0.0 {
        0.0
    } else {
        let bw = b.mul_vec(&weights);
        weights
            .iter()
            .zip(&bw)
            .map(|(a, c)| a * c)
            .sum::<f64>()
            .max(0.0)
    };
    Ok(LocalSystem {
        cell: index,
        nu,
        matrix: b,
        reduced,
        condensed: s,
        weights,
        inv_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::mesh::{build_mesh, CellSpec, MeshInput};
    use crate::problem::Sym2;

    fn single_cell(vertices: Vec<Point2>) -> Mesh {
        let n = vertices.len();
        build_mesh(&MeshInput {
            vertices,
            cells: vec![CellSpec {
                vertices: (0..n).collect(),
                point: None,
            }],
            labels: Default::default(),
        })
        .unwrap()
    }

    fn identity_data() -> CellData {
        CellData {
            lambda: Sym2::IDENTITY,
            lambda_inv: Sym2::IDENTITY,
            source: 1.0,
        }
    }

    fn unit_square() -> Mesh {
        single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }

    #[test]
    fn unit_square_flux_matrix() {
        let mesh = unit_square();
        let cell = &mesh.cells[0];
        let b = flux_matrix(&mesh, cell, &identity_data(), 1e-9);
        for (i, &ei) in cell.edges.iter().enumerate() {
            for (j, &ej) in cell.edges.iter().enumerate() {
                let di = mesh.edges[ei].barycenter - cell.point;
                let dj = mesh.edges[ej].barycenter - cell.point;
                let expected = di.dot(dj) + if i == j { 1e-9 } else { 0.0 };
                assert!((b.get(i, j) - expected).abs() < 1e-15);
            }
        }
        // Opposite edges give -1/4, adjacent ones 0.
        let opposite = b.get(0, 2).min(b.get(1, 3));
        assert!((opposite + 0.25).abs() < 1e-15);
    }

    #[test]
    fn condensation_matches_explicit_inverse() {
        let mesh = single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.2),
            Point2::new(1.7, 1.5),
            Point2::new(0.4, 1.2),
            Point2::new(-0.2, 0.6),
        ]);
        let data = CellData {
            lambda: Sym2::new(2.0, 0.5, 1.0),
            lambda_inv: Sym2::new(2.0, 0.5, 1.0).inverse().unwrap(),
            source: 1.0,
        };
        let loc = local_system(&mesh, 0, &data, 0.3).unwrap();
        let binv = dense_ldlt_factor(&loc.matrix).unwrap().inverse();
        let n = loc.order();
        let b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| binv.get(i, j)).sum())
            .collect();
        let bk: f64 = b.iter().sum();
        assert!((loc.b_total() - bk).abs() < 1e-12 * bk);
        for i in 0..n {
            assert!((loc.weights[i] - b[i] / bk).abs() < 1e-13);
            for j in 0..n {
                let s = binv.get(i, j) - b[i] * b[j] / bk;
                assert!((loc.s(i, j) - s).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn zero_penalization_on_triangle() {
        let mesh = single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        let loc = local_system(&mesh, 0, &identity_data(), 0.0).unwrap();
        assert_eq!(loc.b_total(), f64::INFINITY);
        assert!((loc.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // Constant edge values give zero fluxes besides the source share.
        let (u, f) = loc.recover(&[2.0, 2.0, 2.0], 0.0);
        assert!((u - 2.0).abs() < 1e-14);
        assert!(f.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn zero_penalization_on_quad_is_rejected() {
        let mesh = unit_square();
        match local_system(&mesh, 0, &identity_data(), 0.0) {
            Err(Error::LocalSystem { cell, .. }) => assert_eq!(cell, 0),
            other => panic!("{other:?}"),
        }
    }
}
