use super::local::{local_system, LocalSystem};
use super::policy::PenalizationPolicy;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::par::{self, Execution};
use crate::problem::{CellData, ScalarFn};
use crate::solver::SparseSym;

/// Global system on the interior edge values.
#[derive(Clone, Debug)]
pub struct HybridSystem {
    /// Lower triangle of the symmetric positive definite matrix.
    pub matrix: SparseSym,
    pub rhs: Vec<f64>,
    /// Unknown index of each edge (`None` on the boundary).
    pub unknown_of_edge: Vec<Option<usize>>,
    /// Dirichlet value at the barycenter of each boundary edge, zero elsewhere.
    pub boundary_values: Vec<f64>,
    /// Largest `|M_ij - M_ji|` over the largest entry of `M`.
    pub asymmetry: f64,
    pub locals: Vec<LocalSystem>,
}

impl HybridSystem {
    pub fn num_unknowns(&self) -> usize {
        self.rhs.len()
    }

    /// Edge values from the solution of the system.
    pub fn traces(&self, x: &[f64]) -> Vec<f64> {
        self.unknown_of_edge
            .iter()
            .zip(&self.boundary_values)
            .map(|(u, g)| u.map_or(*g, |i| x[i]))
            .collect()
    }
}

pub fn local_systems(
    mesh: &Mesh,
    data: &[CellData],
    policy: &PenalizationPolicy,
    exec: Execution,
) -> Result<Vec<LocalSystem>> {
    par::map_indexed(exec, mesh.num_cells(), |k| {
        local_system(mesh, k, &data[k], policy.nu(&mesh.cells[k]))
    })
    .into_iter()
    .collect()
}

pub fn assemble_hybrid(
    mesh: &Mesh,
    data: &[CellData],
    policy: &PenalizationPolicy,
    dirichlet: &ScalarFn,
    exec: Execution,
) -> Result<HybridSystem> {
    policy.validate()?;
    let locals = local_systems(mesh, data, policy, exec)?;
    let n = mesh.num_interior_edges;
    let unknown_of_edge: Vec<Option<usize>> = (0..mesh.num_edges())
        .map(|e| (e < n).then_some(e))
        .collect();
    let boundary_values: Vec<f64> = mesh
        .edges
        .iter()
        .map(|e| {
            if e.is_interior() {
                0.0
            } else {
                dirichlet(e.barycenter)
            }
        })
        .collect();

    struct Contribution {
        lower: Vec<(usize, usize, f64)>,
        upper: Vec<(usize, usize, f64)>,
        rhs: Vec<(usize, f64)>,
    }
    let contributions = par::map_indexed(exec, mesh.num_cells(), |k| {
        let cell = &mesh.cells[k];
        let loc = &locals[k];
        let mut c = Contribution {
            lower: Vec::new(),
            upper: Vec::new(),
            rhs: Vec::new(),
        };
        for (i, &ei) in cell.edges.iter().enumerate() {
            let Some(row) = unknown_of_edge[ei] else {
                continue;
            };
            let mut r = loc.weights[i] * data[k].source;
            for (j, &ej) in cell.edges.iter().enumerate() {
                match unknown_of_edge[ej] {
                    Some(col) if col <= row => c.lower.push((row, col, loc.s(i, j))),
                    Some(col) => c.upper.push((col, row, loc.s(i, j))),
                    None => r -= loc.s(i, j) * boundary_values[ej],
                }
            }
            c.rhs.push((row, r));
        }
        c
    });

    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut rhs = vec![0.0; n];
    for c in contributions {
        lower.extend(c.lower);
        upper.extend(c.upper);
        for (i, v) in c.rhs {
            rhs[i] += v;
        }
    }
    // Upper entries were pushed transposed, so both matrices should coincide.
    let upper_diag = lower.iter().filter(|t| t.0 == t.1).copied();
    let upper: Vec<_> = upper.into_iter().chain(upper_diag).collect();
    let matrix = SparseSym::from_triplets(n, &lower);
    let transposed = SparseSym::from_triplets(n, &upper);
    let asymmetry = matrix_difference(&matrix, &transposed);
    Ok(HybridSystem {
        matrix,
        rhs,
        unknown_of_edge,
        boundary_values,
        asymmetry,
        locals,
    })
}

fn matrix_difference(a: &SparseSym, b: &SparseSym) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..a.order() {
        for (j, v) in a.row(i) {
            scale = scale.max(v.abs());
            diff = diff.max((v - b.get(i, j)).abs());
        }
        for (j, v) in b.row(i) {
            diff = diff.max((v - a.get(i, j)).abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
