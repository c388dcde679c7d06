//! Linear algebra kernels: dense LDL^T for the local cell systems, sparse
//! Cholesky and Jacobi-PCG for the hybrid edge system.

pub mod dense;
pub mod pcg;
pub mod sparse;

pub use dense::{dense_ldlt_factor, dense_solve, DenseMatrix, DenseSym, Ldlt};
pub use pcg::{pcg_solve, PcgResult};
pub use sparse::{
    relative_residual, reverse_cuthill_mckee, sparse_cholesky, sparse_solve, SparseCholesky,
    SparseSym,
};

use crate::error::Result;

/// Systems larger than this go to PCG under [`SolverChoice::Auto`].
pub const DIRECT_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SolverChoice {
    #[default]
    Auto,
    Cholesky,
    Pcg,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub choice: SolverChoice,
    /// PCG stopping tolerance (normwise backward error).
    pub tol: f64,
    /// PCG iteration cap; `0` means `10 n + 100`.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            choice: SolverChoice::Auto,
            tol: 1e-12,
            max_iter: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub method: &'static str,
    pub unknowns: usize,
    pub matrix_nnz: usize,
    pub factor_nnz: usize,
    pub iterations: usize,
    /// Normwise backward error of the returned solution.
    pub residual: f64,
}

/// A solver ready to be applied to several right-hand sides of one matrix.
pub enum PreparedSolver<'a> {
    Direct(SparseCholesky),
    Iterative {
        matrix: &'a SparseSym,
        tol: f64,
        max_iter: usize,
    },
}

impl PreparedSolver<'_> {
    pub fn method(&self) -> &'static str {
        match self {
            PreparedSolver::Direct(_) => "cholesky",
            PreparedSolver::Iterative { .. } => "pcg",
        }
    }

    pub fn factor_nnz(&self) -> usize {
        match self {
            PreparedSolver::Direct(f) => f.factor_nnz(),
            PreparedSolver::Iterative { .. } => 0,
        }
    }

    /// Returns the solution and the number of iterations (zero for the direct path).
    pub fn solve(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, usize)> {
        match self {
            PreparedSolver::Direct(f) => Ok((f.solve(rhs), 0)),
            PreparedSolver::Iterative {
                matrix,
                tol,
                max_iter,
            } => {
                let r = pcg_solve(matrix, rhs, x0, *tol, *max_iter)?;
                Ok((r.x, r.iterations))
            }
        }
    }
}

/// Factorizes (direct path) or records the iteration parameters.
pub fn prepare_solver<'a>(m: &'a SparseSym, opts: &SolverOptions) -> Result<PreparedSolver<'a>> {
    let n = m.order();
    let use_direct = match opts.choice {
        SolverChoice::Auto => n <= DIRECT_LIMIT,
        SolverChoice::Cholesky => true,
        SolverChoice::Pcg => false,
    };
    if use_direct {
        Ok(PreparedSolver::Direct(sparse_cholesky(m)?))
    } else {
        Ok(PreparedSolver::Iterative {
            matrix: m,
            tol: opts.tol,
            max_iter: if opts.max_iter == 0 {
                10 * n + 100
            } else {
                opts.max_iter
            },
        })
    }
}

/// Solves `m x = rhs` with the requested method; always reports the residual.
pub fn solve_spd(
    m: &SparseSym,
    rhs: &[f64],
    opts: &SolverOptions,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats)> {
    let solver = prepare_solver(m, opts)?;
    let (x, iterations) = solver.solve(rhs, x0)?;
    let residual = relative_residual(m, &x, rhs);
    let stats = SolveStats {
        method: solver.method(),
        unknowns: m.order(),
        matrix_nnz: m.nnz(),
        factor_nnz: solver.factor_nnz(),
        iterations,
        residual,
    };
    Ok((x, stats))
}
