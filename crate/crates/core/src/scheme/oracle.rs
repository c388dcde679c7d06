//! Direct dense assembly of the full cell/flux system, used as an
//! independent reference for the condensed edge system on small meshes.

use super::policy::PenalizationPolicy;
use super::solution::Solution;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::problem::{CellData, ScalarFn};
use crate::solver::DenseMatrix;

pub const ORACLE_LIMIT: usize = 500;

/// Unknowns: cell values, then cell gradients (x, y per cell), then one flux
/// per incidence. Equations: one per edge linking the cell sides, one flux
/// continuity per interior edge, two gradient/flux relations and one balance
/// per cell.
#[derive(Clone, Debug)]
pub struct OracleSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub num_cells: usize,
    pub offsets: Vec<usize>,
}

impl OracleSystem {
    pub fn order(&self) -> usize {
        self.rhs.len()
    }

    fn grad_index(&self, k: usize) -> usize {
        self.num_cells + 2 * k
    }

    fn flux_index(&self, k: usize, local: usize) -> usize {
        3 * self.num_cells + self.offsets[k] + local
    }
}

pub fn oracle_unknowns(mesh: &Mesh) -> usize {
    3 * mesh.num_cells() + mesh.num_incidences()
}

pub fn assemble_saddle_oracle(
    mesh: &Mesh,
    data: &[CellData],
    policy: &PenalizationPolicy,
    dirichlet: &ScalarFn,
) -> Result<OracleSystem> {
    let n = oracle_unknowns(mesh);
    if n > ORACLE_LIMIT {
        return Err(Error::SizeGuard {
            unknowns: n,
            limit: ORACLE_LIMIT,
        });
    }
    let nc = mesh.num_cells();
    let mut sys = OracleSystem {
        matrix: DenseMatrix::zeros(n),
        rhs: vec![0.0; n],
        num_cells: nc,
        offsets: mesh.incidence_offsets(),
    };
    let mu: Vec<f64> = mesh.cells.iter().map(|c| policy.nu(c) * c.area).collect();
    let local_of = |k: usize, e: usize| mesh.cells[k].edges.iter().position(|&x| x == e).unwrap();
    let mut row = 0;

    // u_K + v_K.(x_s - x_K) + mu_K F_{K,s} is single valued on each edge.
    for (e, edge) in mesh.edges.iter().enumerate() {
        let (k, other) = edge.cells;
        let dk = edge.barycenter - mesh.cells[k].point;
        let gk = sys.grad_index(k);
        let fk = sys.flux_index(k, local_of(k, e));
        sys.matrix.add(row, k, 1.0);
        sys.matrix.add(row, gk, dk.x);
        sys.matrix.add(row, gk + 1, dk.y);
        sys.matrix.add(row, fk, mu[k]);
        match other {
            Some(l) => {
                let dl = edge.barycenter - mesh.cells[l].point;
                let gl = sys.grad_index(l);
                let fl = sys.flux_index(l, local_of(l, e));
                sys.matrix.add(row, l, -1.0);
                sys.matrix.add(row, gl, -dl.x);
                sys.matrix.add(row, gl + 1, -dl.y);
                sys.matrix.add(row, fl, -mu[l]);
            }
            None => sys.rhs[row] = dirichlet(edge.barycenter),
        }
        row += 1;
    }
    // F_{K,s} + F_{L,s} = 0.
    for (e, edge) in mesh.interior_edges().iter().enumerate() {
        let (k, Some(l)) = edge.cells else {
            unreachable!()
        };
        let fk = sys.flux_index(k, local_of(k, e));
        let fl = sys.flux_index(l, local_of(l, e));
        sys.matrix.add(row, fk, 1.0);
        sys.matrix.add(row, fl, 1.0);
        row += 1;
    }
    for (k, cell) in mesh.cells.iter().enumerate() {
        // m(K) Lambda_K v_K - sum_s F_s (x_s - x_K) = 0.
        let lam = data[k].lambda;
        let g = sys.grad_index(k);
        sys.matrix.add(row, g, cell.area * lam.xx);
        sys.matrix.add(row, g + 1, cell.area * lam.xy);
        sys.matrix.add(row + 1, g, cell.area * lam.xy);
        sys.matrix.add(row + 1, g + 1, cell.area * lam.yy);
        for (i, &e) in cell.edges.iter().enumerate() {
            let d = mesh.edges[e].barycenter - cell.point;
            let f = sys.flux_index(k, i);
            sys.matrix.add(row, f, -d.x);
            sys.matrix.add(row + 1, f, -d.y);
            // -sum_s F_s = f_K.
            sys.matrix.add(row + 2, f, -1.0);
        }
        sys.rhs[row + 2] = data[k].source;
        row += 3;
    }
    debug_assert_eq!(row, n);
    Ok(sys)
}

/// Solves the oracle system by dense LU and unpacks it as a [`Solution`].
pub fn solve_saddle_oracle(
    mesh: &Mesh,
    data: &[CellData],
    policy: &PenalizationPolicy,
    dirichlet: &ScalarFn,
) -> Result<Solution> {
    let sys = assemble_saddle_oracle(mesh, data, policy, dirichlet)?;
    let x = sys.matrix.lu_solve(&sys.rhs, 1e-13)?;
    let nc = mesh.num_cells();
    let u = x[..nc].to_vec();
    let grad: Vec<Vec2> = (0..nc)
        .map(|k| Vec2::new(x[nc + 2 * k], x[nc + 2 * k + 1]))
        .collect();
    let fluxes = x[3 * nc..].to_vec();
    let traces = mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let k = edge.cells.0;
            let cell = &mesh.cells[k];
            let i = cell.edges.iter().position(|&x| x == e).unwrap();
            let mu = policy.nu(cell) * cell.area;
            u[k] + grad[k].dot(edge.barycenter - cell.point) + mu * fluxes[sys.offsets[k] + i]
        })
        .collect();
    Ok(Solution {
        u,
        grad,
        traces,
        fluxes,
        offsets: sys.offsets,
    })
}
