//! Mixed finite volume discretization: local condensation, the global edge
//! system, recovery of cell unknowns and fluxes, and a dense reference
//! formulation for validation.

mod checks;
mod hybrid;
mod local;
mod oracle;
mod policy;
mod solution;

pub use checks::{check_invariants, InvariantReport};
pub use hybrid::{assemble_hybrid, local_systems, HybridSystem};
pub use local::{flux_matrix, local_system, LocalSystem};
pub use oracle::{
    assemble_saddle_oracle, oracle_unknowns, solve_saddle_oracle, OracleSystem, ORACLE_LIMIT,
};
pub use policy::PenalizationPolicy;
pub use solution::{
    back_substitute, cell_gradient, read_solution_str, write_solution, write_solution_string,
    Solution, SOLUTION_HEADER,
};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::par::Execution;
use crate::problem::{mesh_cell_data, CellData, ProblemCase};
use crate::solver::{prepare_solver, relative_residual, SolveStats, SolverOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOptions {
    pub policy: PenalizationPolicy,
    /// Triangle quadrature order for cell data (1, 2 or 4).
    pub quad_order: usize,
    pub solver: SolverOptions,
    pub exec: Execution,
    /// Starting edge values for the iterative solver.
    pub initial_guess: Option<Vec<f64>>,
    /// Maximum number of refinement steps on the edge system.
    pub max_refinement: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            policy: PenalizationPolicy::default(),
            quad_order: 2,
            solver: SolverOptions::default(),
            exec: Execution::default(),
            initial_guess: None,
            max_refinement: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MfvResult {
    pub solution: Solution,
    pub stats: SolveStats,
    pub cell_data: Vec<CellData>,
    pub nu: Vec<f64>,
    /// Relative asymmetry of the assembled edge matrix.
    pub asymmetry: f64,
    /// Refinement steps accepted after the first solve.
    pub refinement_steps: usize,
    /// `max |F_{K,s} + F_{L,s}|` over interior edges.
    pub flux_defect: f64,
}

impl MfvResult {
    pub fn invariants(&self, mesh: &Mesh) -> InvariantReport {
        check_invariants(mesh, &self.cell_data, &self.nu, &self.solution)
    }
}

pub fn solve_mfv(mesh: &Mesh, case: &ProblemCase, opts: &SchemeOptions) -> Result<MfvResult> {
    let data = mesh_cell_data(mesh, case, opts.quad_order, opts.exec)?;
    solve_with_data(mesh, data, case, opts)
}

/// Same as [`solve_mfv`] with precomputed cell data.
pub fn solve_with_data(
    mesh: &Mesh,
    data: Vec<CellData>,
    case: &ProblemCase,
    opts: &SchemeOptions,
) -> Result<MfvResult> {
    let sys = assemble_hybrid(mesh, &data, &opts.policy, &case.dirichlet, opts.exec)?;
    if let Some(x0) = &opts.initial_guess {
        if x0.len() != sys.num_unknowns() {
            return Err(Error::Config(format!(
                "initial guess has {} entries, the system has {}",
                x0.len(),
                sys.num_unknowns()
            )));
        }
    }
    let solver = prepare_solver(&sys.matrix, &opts.solver)?;
    let (mut x, mut iterations) = solver.solve(&sys.rhs, opts.initial_guess.as_deref())?;
    let mut solution = back_substitute(mesh, &sys.locals, &data, &sys.traces(&x), opts.exec);

    // Iterative refinement with the flux defect of the per-cell recovery as residual.
    let mut defect = flux_defect(mesh, &solution, sys.num_unknowns());
    let mut defect_norm = max_abs(&defect);
    let mut refinement_steps = 0;
    for _ in 0..opts.max_refinement {
        if defect_norm == 0.0 {
            break;
        }
        let (dx, it) = match solver.solve(&defect, None) {
            Ok(r) => r,
            Err(e) => {
                log::debug!("refinement stopped: {e}");
                break;
            }
        };
        iterations += it;
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let trial_solution =
            back_substitute(mesh, &sys.locals, &data, &sys.traces(&trial), opts.exec);
        let trial_defect = flux_defect(mesh, &trial_solution, sys.num_unknowns());
        let trial_norm = max_abs(&trial_defect);
        if trial_norm >= defect_norm && refinement_steps > 0 {
            break;
        }
        let enough = trial_norm > 0.5 * defect_norm;
        x = trial;
        solution = trial_solution;
        defect = trial_defect;
        defect_norm = trial_norm;
        refinement_steps += 1;
        if enough {
            break;
        }
    }
    let stats = SolveStats {
        method: solver.method(),
        unknowns: sys.num_unknowns(),
        matrix_nnz: sys.matrix.nnz(),
        factor_nnz: solver.factor_nnz(),
        iterations,
        residual: relative_residual(&sys.matrix, &x, &sys.rhs),
    };
    log::debug!(
        "{} on {} unknowns: residual {:.3e}, flux defect {:.3e} after {} refinement steps",
        stats.method,
        stats.unknowns,
        stats.residual,
        defect_norm,
        refinement_steps
    );
    let nu = sys.locals.iter().map(|l| l.nu).collect();
    Ok(MfvResult {
        solution,
        stats,
        cell_data: data,
        nu,
        asymmetry: sys.asymmetry,
        refinement_steps,
        flux_defect: defect_norm,
    })
}

/// `-(F_{K,s} + F_{L,s})` for each interior edge, i.e. the residual of the
/// edge system at the current edge values.
fn flux_defect(mesh: &Mesh, sol: &Solution, interior: usize) -> Vec<f64> {
    let mut r = vec![0.0; interior];
    for (k, cell) in mesh.cells.iter().enumerate() {
        for (&e, f) in cell.edges.iter().zip(sol.cell_fluxes(k)) {
            if e < interior {
                r[e] -= f;
            }
        }
    }
    r
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
