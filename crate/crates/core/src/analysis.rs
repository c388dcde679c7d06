//! Error norms against an exact solution and convergence orders.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problem::ProblemCase;
use crate::scheme::Solution;

pub const CSV_HEADER: &str = "case,mesh,cells,h,regul,e2_u,e2_grad,u_min,u_max";
pub const CONVERGENCE_CSV_HEADER: &str =
    "case,mesh,cells,h,regul,e2_u,e2_grad,u_min,u_max,order_u,order_grad";

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// `(sum_K m(K) (u_K - u(x_K))^2)^{1/2}`.
    pub e2_u: f64,
    /// `(sum_K m(K) |v_K - grad u(x_K)|^2)^{1/2}`.
    pub e2_grad: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// `|u_K - u(x_K)| / max_K |u(x_K)|`.
    pub cell_errors: Vec<f64>,
    pub h: f64,
    pub cells: usize,
    pub regularity: f64,
}

/// Sums in a fixed binary tree so the result does not depend on chunking.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

pub fn error_report(mesh: &Mesh, sol: &Solution, case: &ProblemCase) -> Result<ErrorReport> {
    let exact = case
        .exact
        .as_ref()
        .ok_or_else(|| Error::Problem(format!("case '{}' has no exact solution", case.name)))?;
    let n = mesh.num_cells();
    let mut du = Vec::with_capacity(n);
    let mut dg = Vec::with_capacity(n);
    let mut abs_err = Vec::with_capacity(n);
    let mut u_ref_max = 0.0f64;
    for (k, cell) in mesh.cells.iter().enumerate() {
        let ue = (exact.u)(cell.point);
        let ge = (exact.grad)(cell.point);
        let e = sol.u[k] - ue;
        u_ref_max = u_ref_max.max(ue.abs());
        du.push(cell.area * e * e);
        let d = sol.grad[k] - ge;
        dg.push(cell.area * d.dot(d));
        abs_err.push(e.abs());
    }
    let cell_errors = if u_ref_max > 0.0 {
        abs_err.iter().map(|e| e / u_ref_max).collect()
    } else {
        abs_err
    };
    Ok(ErrorReport {
        e2_u: pairwise_sum(&du).sqrt(),
        e2_grad: pairwise_sum(&dg).sqrt(),
        u_min: sol.u.iter().copied().fold(f64::INFINITY, f64::min),
        u_max: sol.u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        cell_errors,
        h: mesh.size,
        cells: n,
        regularity: mesh.regularity,
    })
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() < 2 || h.len() != e.len() {
        return Err(Error::UndefinedOrder(format!(
            "need at least two refinement levels, got {}",
            h.len()
        )));
    }
    if let Some(i) = e.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::UndefinedOrder(format!(
            "zero or invalid error at level {i}"
        )));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedOrder("all mesh sizes are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive levels.
pub fn pairwise_orders(h: &[f64], e: &[f64]) -> Vec<Option<f64>> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(hh, ee)| {
            (ee[0] > 0.0 && ee[1] > 0.0 && hh[0] != hh[1])
                .then(|| (ee[0] / ee[1]).ln() / (hh[0] / hh[1]).ln())
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceTable {
    pub case: String,
    /// `(mesh label, report)`, sorted by decreasing `h`.
    pub rows: Vec<(String, ErrorReport)>,
}

impl ConvergenceTable {
    pub fn new(case: &str) -> Self {
        Self {
            case: case.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, mesh: &str, report: ErrorReport) {
        self.rows.push((mesh.to_string(), report));
        self.rows.sort_by(|a, b| b.1.h.total_cmp(&a.1.h));
    }

    fn column(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.rows.iter().map(|(_, r)| f(r)).collect()
    }

    /// Least-squares `(order_u, order_grad)`.
    pub fn orders(&self) -> Result<(f64, f64)> {
        let h = self.column(|r| r.h);
        Ok((
            fitted_order(&h, &self.column(|r| r.e2_u))?,
            fitted_order(&h, &self.column(|r| r.e2_grad))?,
        ))
    }

    pub fn pairwise(&self) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        let h = self.column(|r| r.h);
        (
            pairwise_orders(&h, &self.column(|r| r.e2_u)),
            pairwise_orders(&h, &self.column(|r| r.e2_grad)),
        )
    }

    /// Rows with pairwise orders against the previous level, then a final
    /// `fit` row with the least-squares orders (or `undefined`).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CONVERGENCE_CSV_HEADER}");
        let (pu, pg) = self.pairwise();
        let fmt = |o: Option<f64>| o.map_or_else(String::new, |v| format!("{v:.4}"));
        for (i, (mesh, r)) in self.rows.iter().enumerate() {
            let (ou, og) = if i == 0 {
                (String::new(), String::new())
            } else {
                (fmt(pu[i - 1]), fmt(pg[i - 1]))
            };
            let _ = writeln!(s, "{},{ou},{og}", csv_row(&self.case, mesh, r));
        }
        match self.orders() {
            Ok((ou, og)) => {
                let _ = writeln!(s, "{},fit,,,,,,,,{ou:.4},{og:.4}", self.case);
            }
            Err(_) => {
                let _ = writeln!(s, "{},fit,,,,,,,,undefined,undefined", self.case);
            }
        }
        s
    }
}

pub fn csv_row(case: &str, mesh: &str, r: &ErrorReport) -> String {
    format!(
        "{case},{mesh},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
        r.cells, r.h, r.regularity, r.e2_u, r.e2_grad, r.u_min, r.u_max
    )
}
