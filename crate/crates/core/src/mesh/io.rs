//! Text mesh format `mfv-mesh v1`.
//!
//! ```text
//! mfv-mesh v1
//! vertices <count>
//! <index> <x> <y>
//! cells <count>
//! <index> <v0> <v1> ... [point <x> <y>]
//! labels <count>            (optional section)
//! <cell index> <label text>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written
//! with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::{build_mesh, CellSpec, Mesh, MeshInput};
use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const MESH_HEADER: &str = "mfv-mesh v1";

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let input = mesh.to_input();
    let mut s = String::new();
    writeln!(s, "{MESH_HEADER}").unwrap();
    writeln!(s, "vertices {}", input.vertices.len()).unwrap();
    for (i, p) in input.vertices.iter().enumerate() {
        writeln!(s, "{i} {:.16e} {:.16e}", p.x, p.y).unwrap();
    }
    writeln!(s, "cells {}", input.cells.len()).unwrap();
    for (k, c) in input.cells.iter().enumerate() {
        write!(s, "{k}").unwrap();
        for v in &c.vertices {
            write!(s, " {v}").unwrap();
        }
        if let Some(p) = c.point {
            write!(s, " point {:.16e} {:.16e}", p.x, p.y).unwrap();
        }
        s.push('\n');
    }
    if !input.labels.is_empty() {
        writeln!(s, "labels {}", input.labels.len()).unwrap();
        for (k, l) in &input.labels {
            writeln!(s, "{k} {l}").unwrap();
        }
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_str(&text)
}

pub fn read_mesh_str(text: &str) -> Result<Mesh> {
    build_mesh(&parse_mesh_input(text)?)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing field `{what}`")))?;
    tok.parse()
        .map_err(|_| perr(line, format!("invalid `{what}` field `{tok}`")))
}

/// Parses the file into a raw mesh description, without geometric validation.
pub fn parse_mesh_input(text: &str) -> Result<MeshInput> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, MESH_HEADER)) => {}
        Some((n, other)) => {
            return Err(perr(
                n,
                format!("expected header `{MESH_HEADER}`, found `{other}`"),
            ))
        }
        None => return Err(perr(0, "empty mesh file")),
    }

    let mut input = MeshInput::default();
    let mut seen_vertices = false;
    let mut seen_cells = false;
    while let Some((n, line)) = lines.next() {
        let mut toks = line.split_whitespace();
        let section = toks.next().unwrap_or_default();
        let count: usize = parse_num(toks.next(), n, "count")?;
        if toks.next().is_some() {
            return Err(perr(n, "trailing fields after section count"));
        }
        for expected in 0..count {
            let (ln, body) = lines
                .next()
                .ok_or_else(|| perr(n, format!("section `{section}` ends early")))?;
            let mut toks = body.split_whitespace();
            let index: usize = parse_num(toks.next(), ln, "index")?;
            if section != "labels" && index != expected {
                return Err(perr(
                    ln,
                    format!("expected index {expected}, found {index}"),
                ));
            }
            match section {
                "vertices" => {
                    let x = parse_num(toks.next(), ln, "x")?;
                    let y = parse_num(toks.next(), ln, "y")?;
                    if toks.next().is_some() {
                        return Err(perr(ln, "trailing fields after vertex coordinates"));
                    }
                    input.vertices.push(Point2::new(x, y));
                }
                "cells" => {
                    let mut vertices = Vec::new();
                    let mut point = None;
                    while let Some(t) = toks.next() {
                        if t == "point" {
                            let x = parse_num(toks.next(), ln, "point x")?;
                            let y = parse_num(toks.next(), ln, "point y")?;
                            point = Some(Point2::new(x, y));
                            if toks.next().is_some() {
                                return Err(perr(ln, "trailing fields after cell point"));
                            }
                            break;
                        }
                        let v: usize = parse_num(Some(t), ln, "vertex index")?;
                        if v >= input.vertices.len() {
                            return Err(perr(ln, format!("vertex index {v} out of range")));
                        }
                        vertices.push(v);
                    }
                    if vertices.len() < 3 {
                        return Err(perr(ln, "cell needs at least 3 vertices"));
                    }
                    input.cells.push(CellSpec { vertices, point });
                }
                "labels" => {
                    let label = toks.collect::<Vec<_>>().join(" ");
                    if label.is_empty() {
                        return Err(perr(ln, "missing label text"));
                    }
                    input.labels.insert(index, label);
                }
                other => return Err(perr(n, format!("unknown section `{other}`"))),
            }
        }
        match section {
            "vertices" => seen_vertices = true,
            "cells" => seen_cells = true,
            _ => {}
        }
    }
    if !seen_vertices || !seen_cells {
        return Err(perr(
            0,
            "mesh file needs both `vertices` and `cells` sections",
        ));
    }
    if let Some((&k, _)) = input.labels.iter().find(|(&k, _)| k >= input.cells.len()) {
        return Err(perr(0, format!("label refers to missing cell {k}")));
    }
    Ok(input)
}
