use super::solution::Solution;
use crate::mesh::Mesh;
use crate::problem::CellData;

/// Scaled residuals of the discrete relations a solution must satisfy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvariantReport {
    /// `max |F_{K,s} + F_{L,s}| / max(1, max|F|)` over interior edges.
    pub conservation: f64,
    /// `max |sum_s F_{K,s} + f_K| / (|f_K| + max|F|)` over cells.
    pub balance: f64,
    /// `max |m Lambda v - sum_s F_s (x_s - x_K)| / (m |Lambda| |v|)` over cells.
    pub gradient: f64,
    /// `max |u_K + v_K.(x_s - x_K) + nu m F - u_s|` over the largest value
    /// or gradient increment in the solution.
    pub trace: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn check_invariants(
    mesh: &Mesh,
    data: &[CellData],
    nu: &[f64],
    sol: &Solution,
) -> InvariantReport {
    let fmax = sol.max_abs_flux();
    let mut rep = InvariantReport::default();
    let flux_of = |k: usize, e: usize| {
        let i = mesh.cells[k].edges.iter().position(|&x| x == e).unwrap();
        sol.cell_fluxes(k)[i]
    };
    for (e, edge) in mesh.interior_edges().iter().enumerate() {
        let (k, Some(l)) = edge.cells else { continue };
        let r = (flux_of(k, e) + flux_of(l, e)).abs();
        rep.conservation = rep.conservation.max(r / fmax.max(1.0));
    }
    let mut scale = sol
        .u
        .iter()
        .chain(&sol.traces)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for (k, cell) in mesh.cells.iter().enumerate() {
        let f = sol.cell_fluxes(k);
        let sum: f64 = f.iter().sum();
        rep.balance = rep.balance.max(ratio(
            (sum + data[k].source).abs(),
            data[k].source.abs() + fmax,
        ));

        let mut acc = data[k].lambda.apply(sol.grad[k]) * cell.area;
        for (&e, &fs) in cell.edges.iter().zip(f) {
            acc = acc - (mesh.edges[e].barycenter - cell.point) * fs;
        }
        let den = cell.area * data[k].lambda.norm() * sol.grad[k].norm();
        rep.gradient = rep.gradient.max(ratio(acc.norm(), den));
        scale = scale.max(sol.grad[k].norm() * cell.diameter);
    }
    for (k, cell) in mesh.cells.iter().enumerate() {
        let mu = nu[k] * cell.area;
        for (&e, &fs) in cell.edges.iter().zip(sol.cell_fluxes(k)) {
            let d = mesh.edges[e].barycenter - cell.point;
            let r = (sol.u[k] + sol.grad[k].dot(d) + mu * fs - sol.traces[e]).abs();
            rep.trace = rep.trace.max(ratio(r, scale));
        }
    }
    rep
}
