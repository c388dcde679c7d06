//! Structured mesh families on the unit square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, CellSpec, Mesh, MeshInput};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2};

/// How the cell points `x_K` are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PointPolicy {
    #[default]
    Centroid,
    /// Only meaningful for triangles; the circumcenter must be strictly inside.
    Circumcenter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrianglePattern {
    /// Each square cut along its SW-NE diagonal.
    Diagonal,
    /// Each square cut into four triangles through its center.
    Crisscross,
}

/// An axis-aligned region `[x0, x1] x [y0, y1]` whose base cells are split
/// `factor x factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub factor: usize,
}

/// Vertex displacement applied to a uniform quad grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distortion {
    None,
    /// `x += a sin(2 pi x) sin(2 pi y)`, same displacement on `y`.
    Smooth {
        amplitude: f64,
    },
    /// Interior vertices moved uniformly in `[-a h, a h]^2`, `a` relative to the grid step.
    Jitter {
        amplitude: f64,
        seed: u64,
    },
}

fn grid_vertices(n: usize) -> Vec<Point2> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point2::new(
                if i == n { 1.0 } else { i as f64 * h },
                if j == n { 1.0 } else { j as f64 * h },
            ));
        }
    }
    v
}

fn quad_loops(n: usize) -> Vec<CellSpec> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(CellSpec {
                vertices: vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                point: None,
            });
        }
    }
    cells
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("grid resolution must be at least 1".into()));
    }
    Ok(())
}

/// `n x n` squares on the unit square, cell points at centroids.
pub fn gen_uniform_squares(n: usize) -> Result<Mesh> {
    check_n(n)?;
    build_mesh(&MeshInput {
        vertices: grid_vertices(n),
        cells: quad_loops(n),
        ..Default::default()
    })
}

/// `n x n` squares, each split into triangles.
pub fn gen_uniform_triangles(
    n: usize,
    pattern: TrianglePattern,
    points: PointPolicy,
) -> Result<Mesh> {
    check_n(n)?;
    let mut vertices = grid_vertices(n);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::new();
    let tri = |a, b, c| CellSpec {
        vertices: vec![a, b, c],
        point: None,
    };
    for j in 0..n {
        for i in 0..n {
            let (sw, se, ne, nw) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match pattern {
                TrianglePattern::Diagonal => {
                    cells.push(tri(sw, se, ne));
                    cells.push(tri(sw, ne, nw));
                }
                TrianglePattern::Crisscross => {
                    let c = vertices.len();
                    let (p, q) = (vertices[sw], vertices[ne]);
                    vertices.push(Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)));
                    cells.push(tri(sw, se, c));
                    cells.push(tri(se, ne, c));
                    cells.push(tri(ne, nw, c));
                    cells.push(tri(nw, sw, c));
                }
            }
        }
    }
    let mut input = MeshInput {
        vertices,
        cells,
        ..Default::default()
    };
    if points == PointPolicy::Circumcenter {
        set_circumcenters(&mut input)?;
    }
    build_mesh(&input)
}

/// Circumcenter of a triangle.
pub fn circumcenter(a: Point2, b: Point2, c: Point2) -> Point2 {
    let (ab, ac) = (b - a, c - a);
    let d = 2.0 * ab.cross(ac);
    let (b2, c2) = (ab.dot(ab), ac.dot(ac));
    a + Point2::new(ac.y * b2 - ab.y * c2, ab.x * c2 - ac.x * b2) * (1.0 / d)
}

fn set_circumcenters(input: &mut MeshInput) -> Result<()> {
    let mut bad = Vec::new();
    for (k, cell) in input.cells.iter_mut().enumerate() {
        let [a, b, c] = cell.vertices[..] else {
            bad.push(k);
            continue;
        };
        let (pa, pb, pc) = (input.vertices[a], input.vertices[b], input.vertices[c]);
        let cc = circumcenter(pa, pb, pc);
        let poly = ConvexPolygon::from_any_orientation(vec![pa, pb, pc])?;
        if !poly.contains_strictly(cc) {
            bad.push(k);
        }
        cell.point = Some(cc);
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::validation(
            bad,
            "circumcenter is not strictly inside the triangle",
        ))
    }
}

/// Uniform `base_n x base_n` squares with some regions refined.
///
/// Base cells whose center lies in a box are split `factor x factor`;
/// hanging nodes along region borders are handled by edge discovery.
pub fn gen_refined_nonconforming(base_n: usize, boxes: &[RefineBox]) -> Result<Mesh> {
    check_n(base_n)?;
    let h = 1.0 / base_n as f64;
    let mut factor = vec![1usize; base_n * base_n];
    for b in boxes {
        if b.factor < 2 {
            return Err(Error::Config(format!(
                "refinement factor must be at least 2, got {}",
                b.factor
            )));
        }
        for j in 0..base_n {
            for i in 0..base_n {
                let c = Point2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if c.x > b.x0 && c.x < b.x1 && c.y > b.y0 && c.y < b.y1 {
                    let f = &mut factor[j * base_n + i];
                    if *f != 1 && *f != b.factor {
                        return Err(Error::Config(format!(
                            "refinement regions overlap with conflicting factors {} and {} at base cell ({i}, {j})",
                            *f, b.factor
                        )));
                    }
                    *f = b.factor;
                }
            }
        }
    }
    let mut input = MeshInput::default();
    for j in 0..base_n {
        for i in 0..base_n {
            let f = factor[j * base_n + i];
            let s = h / f as f64;
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            let coord = |base: f64, k: usize| {
                if k == f {
                    base + h
                } else {
                    base + k as f64 * s
                }
            };
            for b in 0..f {
                for a in 0..f {
                    let start = input.vertices.len();
                    input.vertices.extend([
                        Point2::new(coord(x0, a), coord(y0, b)),
                        Point2::new(coord(x0, a + 1), coord(y0, b)),
                        Point2::new(coord(x0, a + 1), coord(y0, b + 1)),
                        Point2::new(coord(x0, a), coord(y0, b + 1)),
                    ]);
                    input.cells.push(CellSpec {
                        vertices: (start..start + 4).collect(),
                        point: None,
                    });
                }
            }
        }
    }
    build_mesh(&input)
}

/// `n x n` quads obtained by moving the vertices of the uniform grid.
pub fn gen_distorted_quads(n: usize, distortion: Distortion) -> Result<Mesh> {
    check_n(n)?;
    let h = 1.0 / n as f64;
    let mut vertices = grid_vertices(n);
    match distortion {
        Distortion::None => {}
        Distortion::Smooth { amplitude } => {
            let tau = 2.0 * std::f64::consts::PI;
            for p in vertices.iter_mut() {
                let s = amplitude * (tau * p.x).sin() * (tau * p.y).sin();
                let on_x_side = p.x == 0.0 || p.x == 1.0;
                let on_y_side = p.y == 0.0 || p.y == 1.0;
                if !on_x_side {
                    p.x += s;
                }
                if !on_y_side {
                    p.y += s;
                }
            }
        }
        Distortion::Jitter { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = amplitude * h;
            for j in 0..=n {
                for i in 0..=n {
                    let (dx, dy) = if a > 0.0 {
                        (rng.gen_range(-a..=a), rng.gen_range(-a..=a))
                    } else {
                        (0.0, 0.0)
                    };
                    if i > 0 && i < n && j > 0 && j < n {
                        let p = &mut vertices[j * (n + 1) + i];
                        p.x += dx;
                        p.y += dy;
                    }
                }
            }
        }
    }
    let cells = quad_loops(n);
    let mut bad = Vec::new();
    for (k, c) in cells.iter().enumerate() {
        let pts = c.vertices.iter().map(|&v| vertices[v]).collect();
        if ConvexPolygon::new(pts).is_err() {
            bad.push(k);
        }
    }
    if !bad.is_empty() {
        return Err(Error::validation(
            bad,
            "distortion produced non-convex quads",
        ));
    }
    build_mesh(&MeshInput {
        vertices,
        cells,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        assert_eq!(gen_uniform_squares(40).unwrap().num_cells(), 1600);
        let m = gen_uniform_squares(1).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.num_interior_edges, 0);
    }

    #[test]
    fn square_count_dq5() {
        assert_eq!(gen_uniform_squares(80).unwrap().num_cells(), 6400);
    }

    #[test]
    fn triangle_counts() {
        let d =
            gen_uniform_triangles(10, TrianglePattern::Diagonal, PointPolicy::Centroid).unwrap();
        assert_eq!(d.num_cells(), 200);
        let c =
            gen_uniform_triangles(10, TrianglePattern::Crisscross, PointPolicy::Centroid).unwrap();
        assert_eq!(c.num_cells(), 400);
        assert!(d.is_simplicial() && c.is_simplicial());
    }

    #[test]
    fn right_triangle_circumcenters_are_rejected() {
        for pattern in [TrianglePattern::Diagonal, TrianglePattern::Crisscross] {
            let err = gen_uniform_triangles(2, pattern, PointPolicy::Circumcenter).unwrap_err();
            assert!(matches!(err, Error::Validation { .. }));
        }
    }

    #[test]
    fn circumcenter_of_equilateral_is_centroid() {
        let (a, b, c) = (
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        );
        let cc = circumcenter(a, b, c);
        assert!((cc.x - 0.5).abs() < 1e-15);
        assert!((cc.y - 3f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn refined_quadrant() {
        let m = gen_refined_nonconforming(
            4,
            &[RefineBox {
                x0: 0.0,
                x1: 0.5,
                y0: 0.0,
                y1: 0.5,
                factor: 2,
            }],
        )
        .unwrap();
        assert_eq!(m.num_cells(), 28);
        assert!(m.cells.iter().any(|c| c.edges.len() > 4));
        assert!((m.domain_area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conflicting_refinement_is_rejected() {
        let b = |x1, factor| RefineBox {
            x0: 0.0,
            x1,
            y0: 0.0,
            y1: 1.0,
            factor,
        };
        assert!(gen_refined_nonconforming(4, &[b(0.5, 2), b(0.75, 3)]).is_err());
        assert!(gen_refined_nonconforming(4, &[b(0.5, 2), b(0.75, 2)]).is_ok());
        assert!(gen_refined_nonconforming(4, &[b(0.5, 1)]).is_err());
    }

    #[test]
    fn zero_distortion_is_uniform() {
        let a = gen_distorted_quads(5, Distortion::None).unwrap();
        let b = gen_uniform_squares(5).unwrap();
        let c = gen_distorted_quads(
            5,
            Distortion::Jitter {
                amplitude: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        for m in [&a, &c] {
            assert_eq!(m.vertices, b.vertices);
            assert_eq!(m.num_edges(), b.num_edges());
        }
    }

    #[test]
    fn jitter_is_deterministic_and_keeps_boundary() {
        let d = Distortion::Jitter {
            amplitude: 0.2,
            seed: 7,
        };
        let a = gen_distorted_quads(8, d).unwrap();
        let b = gen_distorted_quads(8, d).unwrap();
        assert_eq!(a.vertices, b.vertices);
        for e in &a.edges[a.num_interior_edges..] {
            for p in [e.segment.a, e.segment.b] {
                assert!(p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0);
            }
        }
        assert!((a.domain_area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn excessive_distortion_is_rejected() {
        let err = gen_distorted_quads(4, Distortion::Smooth { amplitude: 0.3 }).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
        assert!(gen_distorted_quads(8, Distortion::Smooth { amplitude: 0.05 }).is_ok());
    }
}
