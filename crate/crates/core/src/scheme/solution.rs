use std::fmt::Write as _;
use std::path::Path;

use super::local::LocalSystem;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::par::{self, Execution};
use crate::problem::CellData;

pub const SOLUTION_HEADER: &str = "mfv-sol v1";

/// Discrete solution: cell values, cell gradients, edge values and one flux
/// per (cell, edge) incidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub u: Vec<f64>,
    pub grad: Vec<Vec2>,
    pub traces: Vec<f64>,
    /// Flat per-incidence fluxes; cell `k` owns `offsets[k]..offsets[k + 1]`.
    pub fluxes: Vec<f64>,
    pub offsets: Vec<usize>,
}

impl Solution {
    /// Fluxes of `cell` in the order of `Cell::edges`.
    pub fn cell_fluxes(&self, cell: usize) -> &[f64] {
        &self.fluxes[self.offsets[cell]..self.offsets[cell + 1]]
    }

    pub fn max_abs_flux(&self) -> f64 {
        self.fluxes.iter().fold(0.0, |m, f| m.max(f.abs()))
    }
}

/// `v_K = Lambda_K^{-1} sum_s F_s (x_s - x_K) / m(K)`.
pub fn cell_gradient(mesh: &Mesh, cell: usize, data: &CellData, fluxes: &[f64]) -> Vec2 {
    let c = &mesh.cells[cell];
    let mut acc = Vec2::new(0.0, 0.0);
    for (&e, &f) in c.edges.iter().zip(fluxes) {
        acc += (mesh.edges[e].barycenter - c.point) * f;
    }
    data.lambda_inv.apply(acc) * (1.0 / c.area)
}

/// Recovers cell values, fluxes and gradients from all edge values.
pub fn back_substitute(
    mesh: &Mesh,
    locals: &[LocalSystem],
    data: &[CellData],
    traces: &[f64],
    exec: Execution,
) -> Solution {
    let per_cell = par::map_indexed(exec, mesh.num_cells(), |k| {
        let t: Vec<f64> = mesh.cells[k].edges.iter().map(|&e| traces[e]).collect();
        let (u, fluxes) = locals[k].recover(&t, data[k].source);
        let g = cell_gradient(mesh, k, &data[k], &fluxes);
        (u, g, fluxes)
    });
    let offsets = mesh.incidence_offsets();
    let mut u = Vec::with_capacity(mesh.num_cells());
    let mut grad = Vec::with_capacity(mesh.num_cells());
    let mut fluxes = Vec::with_capacity(mesh.num_incidences());
    for (uk, g, f) in per_cell {
        u.push(uk);
        grad.push(g);
        fluxes.extend(f);
    }
    Solution {
        u,
        grad,
        traces: traces.to_vec(),
        fluxes,
        offsets,
    }
}

pub fn write_solution_string(mesh: &Mesh, sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SOLUTION_HEADER}");
    let _ = writeln!(s, "cells {}", sol.u.len());
    for (k, (u, g)) in sol.u.iter().zip(&sol.grad).enumerate() {
        let _ = writeln!(s, "cell {k} {u:.16e} {:.16e} {:.16e}", g.x, g.y);
    }
    let _ = writeln!(s, "edges {}", sol.traces.len());
    for (e, t) in sol.traces.iter().enumerate() {
        let _ = writeln!(s, "edge {e} {t:.16e}");
    }
    let _ = writeln!(s, "fluxes {}", sol.fluxes.len());
    for (k, cell) in mesh.cells.iter().enumerate() {
        for (&e, f) in cell.edges.iter().zip(sol.cell_fluxes(k)) {
            let _ = writeln!(s, "flux {k} {e} {f:.16e}");
        }
    }
    s
}

pub fn write_solution(path: &Path, mesh: &Mesh, sol: &Solution) -> Result<()> {
    std::fs::write(path, write_solution_string(mesh, sol))?;
    Ok(())
}

/// Parses a solution dump against the mesh it was computed on.
pub fn read_solution_str(mesh: &Mesh, text: &str) -> Result<Solution> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let perr = |line: usize, message: String| Error::Parse { line, message };
    match lines.next() {
        Some((_, l)) if l == SOLUTION_HEADER => {}
        Some((n, l)) => {
            return Err(perr(
                n,
                format!("expected '{SOLUTION_HEADER}', found '{l}'"),
            ))
        }
        None => return Err(perr(0, "empty solution file".into())),
    }
    let mut section = |name: &str,
                       keyword: &str,
                       expected: usize,
                       fields: usize|
     -> Result<Vec<(usize, Vec<f64>)>> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| perr(0, format!("missing '{name}' section")))?;
        let count = l
            .strip_prefix(name)
            .and_then(|r| r.trim().parse::<usize>().ok())
            .ok_or_else(|| perr(n, format!("expected '{name} <count>'")))?;
        if count != expected {
            return Err(perr(
                n,
                format!("{name}: expected {expected} entries, found {count}"),
            ));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = lines
                .next()
                .ok_or_else(|| perr(0, format!("truncated '{name}' section")))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(keyword) {
                return Err(perr(n, format!("expected a '{keyword}' line")));
            }
            let vals: Vec<f64> = it
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(n, e.to_string()))?;
            if vals.len() != fields {
                return Err(perr(n, format!("expected {fields} fields")));
            }
            out.push((n, vals));
        }
        Ok(out)
    };
    let cells = section("cells", "cell", mesh.num_cells(), 4)?;
    let edges = section("edges", "edge", mesh.num_edges(), 2)?;
    let fluxes = section("fluxes", "flux", mesh.num_incidences(), 3)?;
    let offsets = mesh.incidence_offsets();
    let mut sol = Solution {
        u: vec![0.0; mesh.num_cells()],
        grad: vec![Vec2::new(0.0, 0.0); mesh.num_cells()],
        traces: vec![0.0; mesh.num_edges()],
        fluxes: vec![0.0; mesh.num_incidences()],
        offsets,
    };
    for (n, v) in cells {
        let k = index(v[0], mesh.num_cells()).ok_or_else(|| perr(n, "bad cell index".into()))?;
        sol.u[k] = v[1];
        sol.grad[k] = Vec2::new(v[2], v[3]);
    }
    for (n, v) in edges {
        let e = index(v[0], mesh.num_edges()).ok_or_else(|| perr(n, "bad edge index".into()))?;
        sol.traces[e] = v[1];
    }
    for (n, v) in fluxes {
        let k = index(v[0], mesh.num_cells()).ok_or_else(|| perr(n, "bad cell index".into()))?;
        let e = index(v[1], mesh.num_edges()).ok_or_else(|| perr(n, "bad edge index".into()))?;
        let local = mesh.cells[k]
            .edges
            .iter()
            .position(|&x| x == e)
            .ok_or_else(|| perr(n, format!("edge {e} is not an edge of cell {k}")))?;
        sol.fluxes[sol.offsets[k] + local] = v[2];
    }
    Ok(sol)
}

fn index(v: f64, bound: usize) -> Option<usize> {
    (v >= 0.0 && v.fract() == 0.0 && (v as usize) < bound).then_some(v as usize)
}
