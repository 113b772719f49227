//! Polygonal meshes: construction with interface extraction, generators for the
//! hybrid and dual-hexagonal families, JSON I/O and shape-regularity audit.
//!
//! Interfaces are the maximal common sub-segments of cell boundaries. A vertex
//! lying in the interior of a neighbouring cell's edge (a hanging node) splits
//! that edge, so every interior interface has exactly two incident cells.

mod audit;
mod generate;
mod grid;
mod io;
mod point;

use std::collections::HashMap;

use serde::Serialize;

pub use audit::{audit_shape, ShapeReport, WorstOffenders};
pub use generate::{generate_dual_hex, generate_hybrid};
pub use io::MeshFile;
pub use point::{orient, BBox, Point};

use crate::error::{Error, Result};
use grid::BucketGrid;

/// Relative tolerance used for geometric coincidence (scaled by the domain diameter).
pub const GEOMETRIC_TOLERANCE: f64 = 1e-12;

/// Relative width below which a gap between cells counts as a coverage defect.
const GAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellGeometry {
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
}

/// Area (shoelace), diameter (max pairwise vertex distance) and area-weighted centroid.
///
/// Returns `None` for polygons with fewer than three vertices or zero/non-finite
/// signed area. Clockwise polygons yield a negative area.
pub fn signed_geometry(poly: &[Point]) -> Option<CellGeometry> {
    if poly.len() < 3 {
        return None;
    }
    let o = poly[0];
    let mut twice_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let p = poly[i] - o;
        let q = poly[(i + 1) % poly.len()] - o;
        let c = p.cross(q);
        twice_area += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    let area = 0.5 * twice_area;
    if !area.is_finite() || area == 0.0 {
        return None;
    }
    let mut diameter: f64 = 0.0;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            diameter = diameter.max(poly[i].dist(poly[j]));
        }
    }
    let centroid = o + Point::new(cx, cy) * (1.0 / (3.0 * twice_area));
    if !diameter.is_finite() || !centroid.is_finite() {
        return None;
    }
    Some(CellGeometry { area, diameter, centroid })
}

/// Geometry of a counter-clockwise polygon; degenerate or clockwise input is an error.
pub fn cell_geometry(poly: &[Point]) -> Result<CellGeometry> {
    match signed_geometry(poly) {
        Some(g) if g.area > 0.0 => Ok(g),
        Some(_) => Err(Error::ClockwiseCell(0)),
        None => Err(Error::DegenerateCell(0)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    /// Counter-clockwise vertex indices into [`Mesh::vertices`].
    pub vertex_ids: Vec<usize>,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    /// Incident interfaces, in boundary traversal order.
    pub interfaces: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InterfaceKind {
    Interior { k1: usize, k2: usize },
    Boundary { k: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct Interface {
    /// Endpoints, ordered counter-clockwise with respect to the first cell.
    pub a: Point,
    pub b: Point,
    pub kind: InterfaceKind,
    /// Unit normal pointing out of the first cell (`k1`, or `k` on the boundary).
    pub normal: Point,
    pub length: f64,
}

impl Interface {
    /// Diameter `h_e`; equal to the length for a straight segment.
    pub fn diameter(&self) -> f64 {
        self.length
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(self.b, 0.5)
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, InterfaceKind::Boundary { .. })
    }

    /// The first cell (`k1` or `k`).
    pub fn primary_cell(&self) -> usize {
        match self.kind {
            InterfaceKind::Interior { k1, .. } => k1,
            InterfaceKind::Boundary { k } => k,
        }
    }

    pub fn cells(&self) -> (usize, Option<usize>) {
        match self.kind {
            InterfaceKind::Interior { k1, k2 } => (k1, Some(k2)),
            InterfaceKind::Boundary { k } => (k, None),
        }
    }

    /// Point at arc-length fraction `t` from `a` to `b`.
    pub fn at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub interfaces: Vec<Interface>,
    /// Characteristic size, the largest cell diameter.
    pub h: f64,
    pub bounds: BBox,
    /// Absolute coincidence tolerance used during construction.
    pub tolerance: f64,
}

impl Mesh {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, k: usize) -> Vec<Point> {
        self.cells[k].vertex_ids.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.interfaces.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.interfaces.len() - self.interior_count()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn perimeter(&self, k: usize) -> f64 {
        let pts = self.cell_points(k);
        (0..pts.len()).map(|i| pts[i].dist(pts[(i + 1) % pts.len()])).sum()
    }

    /// Outward unit normal of interface `e` as seen from cell `k`.
    pub fn outward_normal(&self, e: usize, k: usize) -> Point {
        let iface = &self.interfaces[e];
        if iface.primary_cell() == k {
            iface.normal
        } else {
            -iface.normal
        }
    }

    /// Vertex and cell lists in the mesh file layout.
    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            cells: self.cells.iter().map(|c| c.vertex_ids.clone()).collect(),
        }
    }
}

struct SubSegment {
    cell: usize,
    from: usize,
    to: usize,
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn is_simple(poly: &[Point]) -> bool {
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let c = poly[(i + 2) % m];
        // Fold-back at a vertex: consecutive edges collinear and opposite.
        if orient(a, b, c) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return false;
        }
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_intersect(a, b, poly[j], poly[(j + 1) % m]) {
                return false;
            }
        }
    }
    true
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let m = poly.len();
    let mut j = m - 1;
    for i in 0..m {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Builds a mesh from vertex coordinates and counter-clockwise cell vertex lists.
///
/// Coincident vertices (within the geometric tolerance) are merged; interfaces
/// are extracted and validated.
pub fn build_mesh(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Mesh> {
    if cells.is_empty() {
        return Err(Error::EmptyMesh);
    }
    for (i, p) in vertices.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFiniteVertex(i));
        }
    }
    for (k, c) in cells.iter().enumerate() {
        if let Some(&bad) = c.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::VertexOutOfRange { cell: k, index: bad });
        }
    }
    let mut used = vec![false; vertices.len()];
    for c in &cells {
        for &v in c {
            used[v] = true;
        }
    }
    let bounds = BBox::of(vertices.iter().zip(&used).filter(|(_, &u)| u).map(|(p, _)| *p))
        .ok_or(Error::EmptyMesh)?;
    let diam = bounds.diagonal();
    if !(diam.is_finite() && diam > 0.0) {
        return Err(Error::DegenerateCell(0));
    }
    let tol = GEOMETRIC_TOLERANCE * diam;

    // Weld coincident vertices onto the lowest index.
    let point_boxes: Vec<BBox> = vertices.iter().map(|&p| BBox { min: p, max: p }.expand(tol)).collect();
    let vgrid = BucketGrid::new(bounds.expand(tol), &point_boxes);
    let mut canonical: Vec<usize> = (0..vertices.len()).collect();
    let mut cand = Vec::new();
    for v in 0..vertices.len() {
        if !used[v] {
            continue;
        }
        vgrid.candidates(&point_boxes[v], &mut cand);
        if let Some(&u) = cand
            .iter()
            .find(|&&u| u < v && used[u] && canonical[u] == u && vertices[u].dist(vertices[v]) <= tol)
        {
            canonical[v] = u;
        }
    }

    let mut built: Vec<Cell> = Vec::with_capacity(cells.len());
    for (k, c) in cells.iter().enumerate() {
        let mut ids: Vec<usize> = Vec::with_capacity(c.len());
        for &v in c {
            let v = canonical[v];
            if ids.last() != Some(&v) {
                ids.push(v);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() < 3 {
            return Err(Error::TooFewVertices(k));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NonSimpleCell(k));
        }
        let poly: Vec<Point> = ids.iter().map(|&v| vertices[v]).collect();
        let g = signed_geometry(&poly).ok_or(Error::DegenerateCell(k))?;
        if g.area < 0.0 {
            return Err(Error::ClockwiseCell(k));
        }
        if g.area <= tol * tol {
            return Err(Error::DegenerateCell(k));
        }
        if !is_simple(&poly) {
            return Err(Error::NonSimpleCell(k));
        }
        built.push(Cell {
            vertex_ids: ids,
            area: g.area,
            diameter: g.diameter,
            centroid: g.centroid,
            interfaces: Vec::new(),
        });
    }

    // Split every cell edge at vertices that lie on it (hanging nodes).
    let mut live = vec![false; vertices.len()];
    for c in &built {
        for &v in &c.vertex_ids {
            live[v] = true;
        }
    }
    let mut segments: Vec<SubSegment> = Vec::new();
    let mut cell_segments: Vec<std::ops::Range<usize>> = Vec::with_capacity(built.len());
    let mut on_edge: Vec<(f64, usize)> = Vec::new();
    for (k, c) in built.iter().enumerate() {
        let start = segments.len();
        let m = c.vertex_ids.len();
        for i in 0..m {
            let (a, b) = (c.vertex_ids[i], c.vertex_ids[(i + 1) % m]);
            let (pa, pb) = (vertices[a], vertices[b]);
            let d = pb - pa;
            let len2 = d.dot(d);
            let len = len2.sqrt();
            let query = BBox::of([pa, pb]).unwrap().expand(tol);
            vgrid.candidates(&query, &mut cand);
            on_edge.clear();
            for &v in &cand {
                if v == a || v == b || !live[v] || canonical[v] != v {
                    continue;
                }
                let w = vertices[v] - pa;
                let t = w.dot(d) / len2;
                let dist = d.cross(w).abs() / len;
                if dist <= tol && t * len > tol && (1.0 - t) * len > tol {
                    on_edge.push((t, v));
                }
            }
            on_edge.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = a;
            for &(_, v) in &on_edge {
                segments.push(SubSegment { cell: k, from: prev, to: v });
                prev = v;
            }
            segments.push(SubSegment { cell: k, from: prev, to: b });
        }
        cell_segments.push(start..segments.len());
    }

    let mut by_key: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(segments.len());
    for (s, seg) in segments.iter().enumerate() {
        let key = (seg.from.min(seg.to), seg.from.max(seg.to));
        by_key.entry(key).or_default().push(s);
    }

    let mut interfaces: Vec<Interface> = Vec::new();
    let mut assigned: HashMap<(usize, usize), usize> = HashMap::with_capacity(segments.len());
    for k in 0..built.len() {
        for s in cell_segments[k].clone() {
            let seg = &segments[s];
            let key = (seg.from.min(seg.to), seg.from.max(seg.to));
            if let Some(&e) = assigned.get(&key) {
                built[k].interfaces.push(e);
                continue;
            }
            let (pa, pb) = (vertices[seg.from], vertices[seg.to]);
            let users = &by_key[&key];
            let kind = match users.as_slice() {
                [_] => InterfaceKind::Boundary { k },
                [s1, s2] => {
                    let other = if *s1 == s { &segments[*s2] } else { &segments[*s1] };
                    if other.cell == k || other.from != seg.to || other.to != seg.from {
                        return Err(Error::Coverage {
                            a: pa,
                            b: pb,
                            detail: "segment shared with matching orientation".into(),
                        });
                    }
                    InterfaceKind::Interior { k1: k, k2: other.cell }
                }
                _ => {
                    return Err(Error::Coverage {
                        a: pa,
                        b: pb,
                        detail: format!("segment shared by {} cell edges", users.len()),
                    })
                }
            };
            let d = pb - pa;
            let length = d.norm();
            let e = interfaces.len();
            interfaces.push(Interface {
                a: pa,
                b: pb,
                kind,
                normal: Point::new(d.y / length, -d.x / length),
                length,
            });
            assigned.insert(key, e);
            built[k].interfaces.push(e);
        }
    }

    check_crossings(&vertices, &segments, &interfaces, &assigned, bounds.expand(tol))?;
    check_boundary_coverage(&vertices, &built, &interfaces, bounds)?;

    let h = built.iter().map(|c| c.diameter).fold(0.0, f64::max);
    Ok(Mesh {
        vertices,
        cells: built,
        interfaces,
        h,
        bounds,
        tolerance: tol,
    })
}

/// No two interfaces may cross or overlap away from shared endpoints.
fn check_crossings(
    vertices: &[Point],
    segments: &[SubSegment],
    interfaces: &[Interface],
    assigned: &HashMap<(usize, usize), usize>,
    domain: BBox,
) -> Result<()> {
    let mut ends = vec![(0usize, 0usize); interfaces.len()];
    for seg in segments {
        let key = (seg.from.min(seg.to), seg.from.max(seg.to));
        ends[assigned[&key]] = key;
    }
    let boxes: Vec<BBox> = interfaces.iter().map(|e| BBox::of([e.a, e.b]).unwrap()).collect();
    let grid = BucketGrid::new(domain, &boxes);
    let mut cand = Vec::new();
    for (i, e) in interfaces.iter().enumerate() {
        grid.candidates(&boxes[i], &mut cand);
        for &j in &cand {
            if j <= i {
                continue;
            }
            let (a0, a1) = ends[i];
            let (b0, b1) = ends[j];
            let f = &interfaces[j];
            let shared = [a0, a1].into_iter().find(|v| *v == b0 || *v == b1);
            let hit = match shared {
                // Sharing one endpoint: only a collinear overlap is a defect.
                Some(s) => {
                    let p = vertices[s];
                    let oe = if a0 == s { vertices[a1] } else { vertices[a0] };
                    let of = if b0 == s { vertices[b1] } else { vertices[b0] };
                    orient(p, oe, of) == 0.0 && (oe - p).dot(of - p) > 0.0
                }
                None => segments_intersect(e.a, e.b, f.a, f.b),
            };
            if hit {
                return Err(Error::Coverage {
                    a: e.a,
                    b: e.b,
                    detail: format!("crosses interface ({}, {}) - ({}, {})", f.a.x, f.a.y, f.b.x, f.b.y),
                });
            }
        }
    }
    Ok(())
}

/// The region just outside each boundary interface must not belong to another
/// cell; otherwise cells overlap or leave a sliver gap.
fn check_boundary_coverage(vertices: &[Point], cells: &[Cell], interfaces: &[Interface], bounds: BBox) -> Result<()> {
    let polys: Vec<Vec<Point>> = cells
        .iter()
        .map(|c| c.vertex_ids.iter().map(|&v| vertices[v]).collect())
        .collect();
    let boxes: Vec<BBox> = polys.iter().map(|p| BBox::of(p.iter().copied()).unwrap()).collect();
    let grid = BucketGrid::new(bounds, &boxes);
    let mut cand = Vec::new();
    for e in interfaces {
        let InterfaceKind::Boundary { k } = e.kind else {
            continue;
        };
        let probe = e.midpoint() + e.normal * (GAP_TOLERANCE * e.length);
        let q = BBox { min: probe, max: probe };
        grid.candidates(&q, &mut cand);
        for &c in &cand {
            if c != k && boxes[c].contains(probe) && point_in_polygon(probe, &polys[c]) {
                return Err(Error::Coverage {
                    a: e.a,
                    b: e.b,
                    detail: format!("boundary of cell {k} lies inside cell {c}"),
                });
            }
        }
    }
    Ok(())
}
