use std::collections::{BTreeMap, HashMap};

use super::{Cell, Edge, Mesh, MeshInput};
use crate::error::{Error, Result};
use crate::geometry::{polygon_inradius, ConvexPolygon, Point2, Segment};

/// Relative tolerance (w.r.t. the domain diameter) for matching vertices and overlaps.
const MATCH_TOL: f64 = 1e-9;

/// Uniform bucket grid over points, for proximity queries.
struct PointGrid {
    origin: Point2,
    bucket: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(origin: Point2, bucket: f64) -> Self {
        Self {
            origin,
            bucket,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.bucket).floor() as i64,
            ((p.y - self.origin.y) / self.bucket).floor() as i64,
        )
    }

    fn insert(&mut self, p: Point2, id: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Ids stored in buckets overlapping the box `[lo, hi]`.
    fn query(&self, lo: Point2, hi: Point2, out: &mut Vec<usize>) {
        out.clear();
        let (i0, j0) = self.key(lo);
        let (i1, j1) = self.key(hi);
        for i in i0..=i1 {
            for j in j0..=j1 {
                if let Some(ids) = self.buckets.get(&(i, j)) {
                    out.extend_from_slice(ids);
                }
            }
        }
    }
}

/// A piece of a cell side between two consecutive canonical vertices.
#[derive(Clone, Copy, Debug)]
struct Piece {
    cell: usize,
    from: usize,
    to: usize,
}

/// Builds and validates an admissible discretization from vertex loops.
pub fn build_mesh(input: &MeshInput) -> Result<Mesh> {
    if input.cells.is_empty() {
        return Err(Error::validation(vec![], "mesh has no cells"));
    }
    for (k, c) in input.cells.iter().enumerate() {
        if let Some(&bad) = c.vertices.iter().find(|&&v| v >= input.vertices.len()) {
            return Err(Error::validation(
                vec![k],
                format!("vertex index {bad} out of range"),
            ));
        }
    }

    // Polygons and cell points.
    let mut polygons = Vec::with_capacity(input.cells.len());
    let mut loops = Vec::with_capacity(input.cells.len());
    let mut bad_cells = Vec::new();
    let mut first_reason = String::new();
    for (k, c) in input.cells.iter().enumerate() {
        let mut ids = c.vertices.clone();
        let pts: Vec<Point2> = ids.iter().map(|&v| input.vertices[v]).collect();
        let poly = ConvexPolygon::from_any_orientation(pts.clone()).inspect(|p| {
            if p.vertices()[0] != pts[0] || p.vertices().get(1) != pts.get(1) {
                ids.reverse();
            }
        });
        match poly {
            Ok(p) => {
                polygons.push(p);
                loops.push(ids);
            }
            Err(e) => {
                if bad_cells.is_empty() {
                    first_reason = e.to_string();
                }
                bad_cells.push(k);
            }
        }
    }
    if !bad_cells.is_empty() {
        return Err(Error::validation(
            bad_cells,
            format!("invalid cell polygon ({first_reason})"),
        ));
    }
    let points: Vec<Point2> = input
        .cells
        .iter()
        .zip(&polygons)
        .map(|(c, p)| c.point.unwrap_or_else(|| p.centroid()))
        .collect();
    let outside: Vec<usize> = points
        .iter()
        .zip(&polygons)
        .enumerate()
        .filter(|(_, (x, p))| !x.is_finite() || !p.contains_strictly(**x))
        .map(|(k, _)| k)
        .collect();
    if !outside.is_empty() {
        return Err(Error::validation(
            outside,
            "cell point does not lie strictly inside its cell",
        ));
    }

    // Domain scale.
    let (mut lo, mut hi) = (
        Point2::new(f64::INFINITY, f64::INFINITY),
        Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for l in &loops {
        for &v in l {
            let p = input.vertices[v];
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let domain_diam = hi.dist(lo);
    let tol = MATCH_TOL * domain_diam;

    // Canonical vertices: merge coincident input vertices.
    let mut canon_of = vec![usize::MAX; input.vertices.len()];
    let mut canon_pts: Vec<Point2> = Vec::new();
    {
        let mut grid = PointGrid::new(lo, 4.0 * tol);
        let mut near = Vec::new();
        for l in &loops {
            for &v in l {
                if canon_of[v] != usize::MAX {
                    continue;
                }
                let p = input.vertices[v];
                let d = Point2::new(tol, tol);
                grid.query(p - d, p + d, &mut near);
                let found = near.iter().copied().find(|&c| canon_pts[c].dist(p) <= tol);
                canon_of[v] = match found {
                    Some(c) => c,
                    None => {
                        canon_pts.push(p);
                        grid.insert(p, canon_pts.len() - 1);
                        canon_pts.len() - 1
                    }
                };
            }
        }
    }

    // Split every cell side at the canonical vertices lying on it.
    let total_area: f64 = polygons.iter().map(|p| p.area()).sum();
    let bucket = (total_area / polygons.len() as f64).sqrt().max(tol);
    let mut grid = PointGrid::new(lo, bucket);
    for (i, &p) in canon_pts.iter().enumerate() {
        grid.insert(p, i);
    }
    let mut pieces: Vec<Piece> = Vec::new();
    // Pieces of each cell, in counterclockwise order.
    let mut cell_pieces: Vec<Vec<usize>> = vec![Vec::new(); loops.len()];
    let mut near = Vec::new();
    for (k, l) in loops.iter().enumerate() {
        let n = l.len();
        for i in 0..n {
            let (ca, cb) = (canon_of[l[i]], canon_of[l[(i + 1) % n]]);
            if ca == cb {
                return Err(Error::validation(vec![k], "cell side collapses to a point"));
            }
            let (a, b) = (canon_pts[ca], canon_pts[cb]);
            let d = b - a;
            let len2 = d.dot(d);
            let box_lo = Point2::new(a.x.min(b.x) - tol, a.y.min(b.y) - tol);
            let box_hi = Point2::new(a.x.max(b.x) + tol, a.y.max(b.y) + tol);
            grid.query(box_lo, box_hi, &mut near);
            let mut splits: Vec<(f64, usize)> = near
                .iter()
                .copied()
                .filter(|&c| c != ca && c != cb)
                .filter_map(|c| {
                    let p = canon_pts[c];
                    let t = (p - a).dot(d) / len2;
                    let off = d.cross(p - a).abs() / len2.sqrt();
                    (t > 0.0 && t < 1.0 && off <= tol).then_some((t, c))
                })
                .collect();
            splits.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = ca;
            for c in splits
                .into_iter()
                .map(|(_, c)| c)
                .chain(std::iter::once(cb))
            {
                cell_pieces[k].push(pieces.len());
                pieces.push(Piece {
                    cell: k,
                    from: prev,
                    to: c,
                });
                prev = c;
            }
        }
    }

    // Match pieces between cells.
    let mut by_key: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, p) in pieces.iter().enumerate() {
        by_key
            .entry((p.from.min(p.to), p.from.max(p.to)))
            .or_default()
            .push(i);
    }
    let mut overlap_cells = Vec::new();
    // Interior pieces grouped by cell pair; boundary pieces listed individually.
    let mut pair_pieces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut boundary_pieces: Vec<usize> = Vec::new();
    for ids in by_key.values() {
        match ids.as_slice() {
            [one] => boundary_pieces.push(*one),
            [p, q] => {
                let (pp, pq) = (pieces[*p], pieces[*q]);
                if pp.cell == pq.cell || pp.from != pq.to {
                    overlap_cells.extend([pp.cell, pq.cell]);
                } else {
                    let key = (pp.cell.min(pq.cell), pp.cell.max(pq.cell));
                    pair_pieces.entry(key).or_default().extend([*p, *q]);
                }
            }
            many => overlap_cells.extend(many.iter().map(|&i| pieces[i].cell)),
        }
    }
    if !overlap_cells.is_empty() {
        overlap_cells.sort_unstable();
        overlap_cells.dedup();
        return Err(Error::validation(
            overlap_cells,
            "overlapping cell interiors",
        ));
    }

    // Boundary must be a single closed loop.
    let mut next_of: HashMap<usize, usize> = HashMap::new();
    let mut pinch = Vec::new();
    for &i in &boundary_pieces {
        let p = pieces[i];
        if next_of.insert(p.from, i).is_some() {
            pinch.push(p.cell);
        }
    }
    let mut incoming: HashMap<usize, usize> = HashMap::new();
    for &i in &boundary_pieces {
        *incoming.entry(pieces[i].to).or_default() += 1;
    }
    for &i in &boundary_pieces {
        let p = pieces[i];
        if incoming.get(&p.from) != Some(&1) || incoming.get(&p.to) != Some(&1) {
            pinch.push(p.cell);
        }
    }
    if !pinch.is_empty() {
        pinch.sort_unstable();
        pinch.dedup();
        return Err(Error::validation(
            pinch,
            "boundary is not a simple closed curve (cells touching at a single point or a gap in the tiling)",
        ));
    }
    let mut visited = vec![false; pieces.len()];
    let mut loop_areas: Vec<(f64, Vec<usize>)> = Vec::new();
    for &start in &boundary_pieces {
        if visited[start] {
            continue;
        }
        let mut area2 = 0.0;
        let mut cells_on_loop = Vec::new();
        let mut cur = start;
        while !visited[cur] {
            visited[cur] = true;
            let p = pieces[cur];
            area2 += (canon_pts[p.from] - lo).cross(canon_pts[p.to] - lo);
            cells_on_loop.push(p.cell);
            cur = next_of[&p.to];
        }
        loop_areas.push((0.5 * area2, cells_on_loop));
    }
    if loop_areas.len() != 1 {
        let mut cells: Vec<usize> = loop_areas
            .iter()
            .filter(|(a, _)| *a < 0.0)
            .flat_map(|(_, c)| c.iter().copied())
            .collect();
        if cells.is_empty() {
            cells = loop_areas
                .iter()
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
        }
        cells.sort_unstable();
        cells.dedup();
        return Err(Error::validation(
            cells,
            format!(
                "gap in the tiling: boundary splits into {} closed curves",
                loop_areas.len()
            ),
        ));
    }
    let domain_area = loop_areas[0].0;
    if (total_area - domain_area).abs() > 1e-10 * domain_area {
        return Err(Error::validation(
            vec![],
            format!("cell areas sum to {total_area}, domain area is {domain_area}"),
        ));
    }

    // Edges: one per neighbouring cell pair, then one per boundary piece.
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_of_piece = vec![usize::MAX; pieces.len()];
    for (&(k, l), ids) in &pair_pieces {
        // Pieces of the lower cell give the orientation.
        let own: Vec<Piece> = ids
            .iter()
            .map(|&i| pieces[i])
            .filter(|p| p.cell == k)
            .collect();
        let a0 = canon_pts[own[0].from];
        let dir = canon_pts[own[0].to] - a0;
        let dlen = dir.norm();
        let u = dir * (1.0 / dlen);
        let (mut tmin, mut tmax, mut sum_len) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for p in &own {
            let (pa, pb) = (canon_pts[p.from], canon_pts[p.to]);
            if u.cross(pa - a0).abs() > tol || u.cross(pb - a0).abs() > tol {
                return Err(Error::validation(
                    vec![k, l],
                    "cells share non-collinear boundary portions",
                ));
            }
            for t in [(pa - a0).dot(u), (pb - a0).dot(u)] {
                tmin = tmin.min(t);
                tmax = tmax.max(t);
            }
            sum_len += pa.dist(pb);
        }
        if (tmax - tmin - sum_len).abs() > tol {
            return Err(Error::validation(
                vec![k, l],
                "intersection of the closures of two cells is not a single segment",
            ));
        }
        let seg = Segment::new(a0 + u * tmin, a0 + u * tmax)?;
        let id = edges.len();
        for &i in ids {
            edge_of_piece[i] = id;
        }
        edges.push(make_edge(seg, k, Some(l)));
    }
    let num_interior_edges = edges.len();
    let mut boundary_sorted = boundary_pieces.clone();
    boundary_sorted.sort_unstable();
    for i in boundary_sorted {
        let p = pieces[i];
        let seg = Segment::new(canon_pts[p.from], canon_pts[p.to])?;
        edge_of_piece[i] = edges.len();
        edges.push(make_edge(seg, p.cell, None));
    }

    // Cells.
    let mut cells = Vec::with_capacity(polygons.len());
    let mut regularity = 0.0f64;
    let mut size = 0.0f64;
    for (k, polygon) in polygons.into_iter().enumerate() {
        let mut cell_edges: Vec<usize> = Vec::new();
        for &pi in &cell_pieces[k] {
            let e = edge_of_piece[pi];
            if cell_edges.last() != Some(&e) {
                cell_edges.push(e);
            }
        }
        if cell_edges.len() > 1 && cell_edges.first() == cell_edges.last() {
            cell_edges.pop();
        }
        let area = polygon.area();
        let diameter = polygon.diameter();
        let inradius = polygon_inradius(&polygon)?;
        let ratio = (diameter / inradius).powi(2);
        regularity = regularity.max(ratio.max(cell_edges.len() as f64));
        size = size.max(diameter);
        cells.push(Cell {
            polygon,
            point: points[k],
            edges: cell_edges,
            vertex_ids: loops[k].clone(),
            area,
            diameter,
            inradius,
        });
    }

    Ok(Mesh {
        vertices: input.vertices.clone(),
        cells,
        edges,
        num_interior_edges,
        domain_area,
        size,
        regularity,
        labels: input.labels.clone(),
    })
}

fn make_edge(segment: Segment, first: usize, second: Option<usize>) -> Edge {
    let d = segment.b - segment.a;
    let length = d.norm();
    Edge {
        barycenter: segment.midpoint(),
        normal: d.perp_cw() * (1.0 / length),
        length,
        segment,
        cells: (first, second),
    }
}
