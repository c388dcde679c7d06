use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use mfv_core::analysis::{csv_row, error_report, ConvergenceTable, ErrorReport, CSV_HEADER};
use mfv_core::mesh::{write_mesh, write_mesh_string, Mesh};
use mfv_core::problem::case_by_name;
use mfv_core::scheme::{solve_mfv, write_solution, PenalizationPolicy};
use mfv_core::{Error, Result};

use crate::config::RunConfig;
use crate::meshspec::MeshSpec;

pub fn mesh_summary(mesh: &Mesh) -> String {
    let mut s = String::new();
    let max_edges = mesh.cells.iter().map(|c| c.edges.len()).max().unwrap_or(0);
    let min_area = mesh
        .cells
        .iter()
        .map(|c| c.area)
        .fold(f64::INFINITY, f64::min);
    let _ = writeln!(s, "cells {}", mesh.num_cells());
    let _ = writeln!(
        s,
        "edges {} (interior {}, boundary {})",
        mesh.num_edges(),
        mesh.num_interior_edges,
        mesh.num_boundary_edges()
    );
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    let _ = writeln!(s, "size {:.6e}", mesh.size);
    let _ = writeln!(s, "regul {}", fmt_regularity(mesh.regularity));
    let _ = writeln!(s, "max edges per cell {max_edges}");
    let _ = writeln!(s, "min cell area {min_area:.6e}");
    let _ = writeln!(
        s,
        "simplicial {}",
        if mesh.is_simplicial() { "yes" } else { "no" }
    );
    s
}

fn fmt_regularity(r: f64) -> String {
    if (r - r.round()).abs() <= 1e-9 * r {
        format!("{}", r.round())
    } else {
        format!("{r:.6}")
    }
}

pub fn mesh_gen(
    spec: &MeshSpec,
    point: mfv_core::mesh::PointPolicy,
    out: Option<&Path>,
) -> Result<()> {
    let mesh = spec.build(point)?;
    match out {
        Some(path) => {
            write_mesh(&mesh, path)?;
            print!("{}", mesh_summary(&mesh));
        }
        None => {
            print!("{}", write_mesh_string(&mesh));
            eprint!("{}", mesh_summary(&mesh));
        }
    }
    Ok(())
}

pub fn mesh_inspect(path: &Path) -> Result<()> {
    let mesh = mfv_core::mesh::read_mesh(path)?;
    print!("{}", mesh_summary(&mesh));
    Ok(())
}

pub fn mesh_validate(path: &Path) -> Result<()> {
    let mesh = mfv_core::mesh::read_mesh(path)?;
    println!("valid");
    print!("{}", mesh_summary(&mesh));
    Ok(())
}

fn check_consistency(policy: &PenalizationPolicy, mesh: &Mesh) -> Result<()> {
    if *policy == PenalizationPolicy::Zero && !mesh.is_simplicial() {
        return Err(Error::Config(
            "penalization zero requires a simplicial mesh".into(),
        ));
    }
    Ok(())
}

/// Builds, solves and measures one configuration.
pub fn solve_one(
    cfg: &RunConfig,
    mesh_spec: &MeshSpec,
) -> Result<(Mesh, ErrorReport, mfv_core::scheme::MfvResult)> {
    let case = case_by_name(&cfg.case)?;
    let mesh = mesh_spec.build(cfg.point)?;
    check_consistency(&cfg.policy, &mesh)?;
    let result = solve_mfv(&mesh, &case, &cfg.scheme_options())?;
    let s = &result.stats;
    log::info!(
        "{mesh_spec}: {} cells, {} unknowns, {} (factor nnz {}, {} iterations), backward error {:.2e}",
        mesh.num_cells(),
        s.unknowns,
        s.method,
        s.factor_nnz,
        s.iterations,
        s.residual
    );
    let report = error_report(&mesh, &result.solution, &case)?;
    Ok((mesh, report, result))
}

fn emit(text: &str, csv: Option<&Path>) -> Result<()> {
    match csv {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (mesh, report, result) = solve_one(cfg, &cfg.mesh)?;
    if let Some(path) = &cfg.dump {
        write_solution(path, &mesh, &result.solution)?;
    }
    let text = format!(
        "{CSV_HEADER}\n{}\n",
        csv_row(&cfg.case, &cfg.mesh.to_string(), &report)
    );
    emit(&text, cfg.csv.as_deref())
}

pub fn convergence(cfg: &RunConfig, levels: &[usize], jobs: usize) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::Config(
            "a convergence study needs at least two levels".into(),
        ));
    }
    if cfg.mesh.is_file() {
        return Err(Error::Config(
            "a convergence study needs a generated mesh family".into(),
        ));
    }
    let specs: Vec<MeshSpec> = levels.iter().map(|&n| cfg.mesh.with_n(n)).collect();
    let results: Vec<Mutex<Option<Result<ErrorReport>>>> =
        specs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= specs.len() {
            break;
        }
        let r = solve_one(cfg, &specs[i]).map(|(_, report, _)| report);
        *results[i].lock().unwrap() = Some(r);
    };
    std::thread::scope(|scope| {
        for _ in 1..jobs.clamp(1, specs.len()) {
            scope.spawn(work);
        }
        work();
    });
    let mut table = ConvergenceTable::new(&cfg.case);
    for (spec, slot) in specs.iter().zip(results) {
        let report = slot
            .into_inner()
            .unwrap()
            .expect("every level is visited")?;
        table.push(&spec.to_string(), report);
    }
    emit(&table.to_csv(), cfg.csv.as_deref())
}

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    pub case: &'static str,
    pub mesh: &'static str,
    /// Empty for a single run.
    pub levels: &'static [usize],
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "lepotier-dq4",
        about: "Le Potier case on 40x40 squares",
        case: "lepotier",
        mesh: "squares:40",
        levels: &[],
    },
    Preset {
        name: "lepotier-dq5",
        about: "Le Potier case on 80x80 squares",
        case: "lepotier",
        mesh: "squares:80",
        levels: &[],
    },
    Preset {
        name: "lepotier-dq6",
        about: "Le Potier case on 200x200 squares",
        case: "lepotier",
        mesh: "squares:200",
        levels: &[],
    },
    Preset {
        name: "lepotier-order",
        about: "Le Potier case, squares n = 40, 80",
        case: "lepotier",
        mesh: "squares",
        levels: &[40, 80],
    },
    Preset {
        name: "isotropic-squares",
        about: "isotropic case, squares n = 8, 16, 32, 64",
        case: "isotropic",
        mesh: "squares",
        levels: &[8, 16, 32, 64],
    },
    Preset {
        name: "isotropic-triangles",
        about: "isotropic case, diagonal triangles n = 8, 16, 32",
        case: "isotropic",
        mesh: "triangles:diagonal",
        levels: &[8, 16, 32],
    },
    Preset {
        name: "patch-distorted",
        about: "affine patch on a jittered 8x8 quad mesh",
        case: "patch-affine",
        mesh: "distorted:8:seed=7",
        levels: &[],
    },
    Preset {
        name: "patch-refined",
        about: "affine patch on a locally refined mesh with hanging nodes",
        case: "patch-affine",
        mesh: "refined:4",
        levels: &[],
    },
];

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!(
            "unknown preset '{name}', expected one of {}",
            names.join(", ")
        ))
    })
}

pub fn list_presets() -> String {
    PRESETS
        .iter()
        .map(|p| format!("{:<20} {}\n", p.name, p.about))
        .collect()
}
