//! Admissible finite volume discretizations of a planar polygonal domain.
//!
//! A [`Mesh`] is built from vertex loops only: edges are discovered by
//! matching collinear overlaps between cell boundaries. When a coarse cell
//! side touches several finer cells, it is split into one edge per neighbour,
//! which is how hanging nodes enter the discretization.

mod build;
pub mod generators;
pub mod io;

use std::collections::BTreeMap;

use crate::geometry::{ConvexPolygon, Point2, Segment, Vec2};

pub use build::build_mesh;
pub use generators::{
    gen_distorted_quads, gen_refined_nonconforming, gen_uniform_squares, gen_uniform_triangles,
    Distortion, PointPolicy, RefineBox, TrianglePattern,
};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};

/// Input description of one control volume.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSpec {
    /// Indices into [`MeshInput::vertices`], forming a convex loop.
    pub vertices: Vec<usize>,
    /// The cell point; the centroid is used when absent.
    pub point: Option<Point2>,
}

/// Raw mesh description, as read from a file or produced by a generator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshInput {
    pub vertices: Vec<Point2>,
    pub cells: Vec<CellSpec>,
    pub labels: BTreeMap<usize, String>,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub polygon: ConvexPolygon,
    /// The cell point `x_K`.
    pub point: Point2,
    /// Edge ids in counterclockwise order around the cell.
    pub edges: Vec<usize>,
    /// Counterclockwise loop of indices into [`Mesh::vertices`].
    pub vertex_ids: Vec<usize>,
    pub area: f64,
    pub diameter: f64,
    pub inradius: f64,
}

impl Cell {
    pub fn is_simplex(&self) -> bool {
        self.edges.len() == 3
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Oriented counterclockwise with respect to `cells[0]`.
    pub segment: Segment,
    /// Barycenter `x_sigma`.
    pub barycenter: Point2,
    pub length: f64,
    /// Unit normal pointing out of `cells[0]`.
    pub normal: Vec2,
    /// Side cells; the second is `None` on the boundary.
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        if self.cells.1.is_some() {
            EdgeKind::Interior
        } else {
            EdgeKind::Boundary
        }
    }

    pub fn is_interior(&self) -> bool {
        self.cells.1.is_some()
    }

    /// The cell on the other side of the edge, if any.
    pub fn neighbor(&self, cell: usize) -> Option<usize> {
        match self.cells {
            (k, Some(l)) if k == cell => Some(l),
            (k, Some(_)) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    pub cells: Vec<Cell>,
    /// Interior edges come first, numbered `0..num_interior_edges`.
    pub edges: Vec<Edge>,
    pub num_interior_edges: usize,
    pub domain_area: f64,
    /// Largest cell diameter.
    pub size: f64,
    /// `max_K max(diam(K)^2 / rho_K^2, card(E_K))`.
    pub regularity: f64,
    pub labels: BTreeMap<usize, String>,
}

impl Mesh {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.len() - self.num_interior_edges
    }

    pub fn interior_edges(&self) -> &[Edge] {
        &self.edges[..self.num_interior_edges]
    }

    /// Unit normal to `edge`, outward to `cell`.
    pub fn normal(&self, cell: usize, edge: usize) -> Vec2 {
        let e = &self.edges[edge];
        if e.cells.0 == cell {
            e.normal
        } else {
            -e.normal
        }
    }

    pub fn is_simplicial(&self) -> bool {
        self.cells.iter().all(Cell::is_simplex)
    }

    /// Number of (cell, edge) incidences.
    pub fn num_incidences(&self) -> usize {
        self.cells.iter().map(|c| c.edges.len()).sum()
    }

    /// Offsets of each cell's first incidence in a flat per-incidence array.
    pub fn incidence_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cells.len() + 1);
        let mut acc = 0;
        off.push(0);
        for c in &self.cells {
            acc += c.edges.len();
            off.push(acc);
        }
        off
    }

    /// The raw description this mesh was built from (with resolved cell points).
    pub fn to_input(&self) -> MeshInput {
        MeshInput {
            vertices: self.vertices.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| CellSpec {
                    vertices: c.vertex_ids.clone(),
                    point: Some(c.point),
                })
                .collect(),
            labels: self.labels.clone(),
        }
    }

    /// Rebuilds the mesh with new cell points (e.g. circumcenters).
    pub fn with_points(&self, points: &[Point2]) -> crate::Result<Mesh> {
        let mut input = self.to_input();
        for (c, p) in input.cells.iter_mut().zip(points) {
            c.point = Some(*p);
        }
        build_mesh(&input)
    }
}
