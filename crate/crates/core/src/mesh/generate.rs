//! Deterministic mesh families on the unit square.
//!
//! Coordinates are stored on an integer lattice and scaled once, so shared
//! vertices are bit-identical across the cells that use them.

use std::collections::HashMap;

use super::{build_mesh, Mesh, Point};
use crate::error::{Error, Result};

struct Lattice {
    scale: f64,
    ids: HashMap<(i64, i64), usize>,
    points: Vec<Point>,
}

impl Lattice {
    fn new(divisions: i64) -> Self {
        Lattice {
            scale: 1.0 / divisions as f64,
            ids: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn id(&mut self, i: i64, j: i64) -> usize {
        let next = self.points.len();
        let scale = self.scale;
        let points = &mut self.points;
        *self.ids.entry((i, j)).or_insert_with(|| {
            points.push(Point::new(i as f64 * scale, j as f64 * scale));
            next
        })
    }
}

/// Non-conformal triangle/quadrilateral mesh of the unit square.
///
/// The left half is covered by `n/2 x n` squares of side `1/n`, each cut into
/// two triangles along its rising diagonal; the right half by `n x 2n` squares
/// of side `1/(2n)`. Every other right-half vertex on `x = 1/2` is a hanging
/// node. The mesh size is `h = sqrt(2)/n`.
pub fn generate_hybrid(n: usize) -> Result<Mesh> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGenerator(format!("hybrid mesh needs an even n >= 2, got {n}")));
    }
    let n = n as i64;
    // Fine lattice spacing 1/(2n).
    let mut lat = Lattice::new(2 * n);
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n / 2 {
            let v00 = lat.id(2 * i, 2 * j);
            let v10 = lat.id(2 * i + 2, 2 * j);
            let v11 = lat.id(2 * i + 2, 2 * j + 2);
            let v01 = lat.id(2 * i, 2 * j + 2);
            cells.push(vec![v00, v10, v11]);
            cells.push(vec![v00, v11, v01]);
        }
    }
    for j in 0..2 * n {
        for i in 0..n {
            let x = n + i;
            cells.push(vec![lat.id(x, j), lat.id(x + 1, j), lat.id(x + 1, j + 1), lat.id(x, j + 1)]);
        }
    }
    build_mesh(lat.points, cells)
}

/// Centroid dual of the structured `n x n` triangulation of the unit square.
///
/// Each grid square is split along its rising diagonal. Every primal vertex
/// becomes one dual cell bounded by the centroids of its incident triangles;
/// boundary vertices add the midpoints of their boundary edges, and corners
/// add the corner itself. Interior cells are hexagons, boundary cells are
/// quadrilaterals and pentagons. Midpoints replace the straight-through
/// boundary vertex, which would otherwise be a 180-degree polygon corner.
pub fn generate_dual_hex(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidGenerator(format!("dual mesh needs n >= 2, got {n}")));
    }
    let n = n as i64;
    // Lattice spacing 1/(6n): primal vertices at multiples of 6, centroids at
    // thirds of a grid step, edge midpoints at halves.
    let mut lat = Lattice::new(6 * n);
    let mut cells = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for j in 0..=n {
        for i in 0..=n {
            cells.push(dual_cell(&mut lat, n, i, j));
        }
    }
    build_mesh(lat.points, cells)
}

/// Dual polygon around primal vertex (i, j), on the 6n lattice.
fn dual_cell(lat: &mut Lattice, n: i64, i: i64, j: i64) -> Vec<usize> {
    // Items as lattice offsets relative to the primal vertex (6i, 6j).
    let mut items: Vec<(i64, i64)> = Vec::new();
    let inside = |a: i64, b: i64| (0..n).contains(&a) && (0..n).contains(&b);
    // Square (i, j): lower and upper triangles both touch its lower-left corner.
    if inside(i, j) {
        items.push((4, 2));
        items.push((2, 4));
    }
    // Square (i-1, j): only its lower triangle contains the lower-right corner.
    if inside(i - 1, j) {
        items.push((-2, 2));
    }
    // Square (i-1, j-1): both triangles contain the upper-right corner.
    if inside(i - 1, j - 1) {
        items.push((-4, -2));
        items.push((-2, -4));
    }
    // Square (i, j-1): only its upper triangle contains the upper-left corner.
    if inside(i, j - 1) {
        items.push((2, -2));
    }
    let on_x = i == 0 || i == n;
    let on_y = j == 0 || j == n;
    if on_y {
        if i < n {
            items.push((3, 0));
        }
        if i > 0 {
            items.push((-3, 0));
        }
    }
    if on_x {
        if j < n {
            items.push((0, 3));
        }
        if j > 0 {
            items.push((0, -3));
        }
    }
    // Sort counter-clockwise, measuring angles from the outward direction so
    // the boundary wedge is never split.
    let outward = (
        if i == 0 { -1.0 } else if i == n { 1.0 } else { 0.0 },
        if j == 0 { -1.0 } else if j == n { 1.0 } else { 0.0 },
    );
    let base = if outward == (0.0, 0.0) {
        0.0
    } else {
        f64::atan2(outward.1, outward.0)
    };
    let tau = std::f64::consts::TAU;
    items.sort_by(|a, b| {
        let ang = |p: &(i64, i64)| (f64::atan2(p.1 as f64, p.0 as f64) - base).rem_euclid(tau);
        ang(a).total_cmp(&ang(b))
    });
    let mut ids = Vec::with_capacity(items.len() + 1);
    if on_x && on_y {
        ids.push(lat.id(6 * i, 6 * j));
    }
    for (di, dj) in items {
        ids.push(lat.id(6 * i + di, 6 * j + dj));
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::InterfaceKind;

    #[test]
    fn hybrid_two() {
        let m = generate_hybrid(2).unwrap();
        let tris = m.cells.iter().filter(|c| c.vertex_ids.len() == 3).count();
        let quads = m.cells.iter().filter(|c| c.vertex_ids.len() == 4).count();
        assert_eq!((tris, quads), (4, 8));
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        assert!((m.h - 2f64.sqrt() / 2.0).abs() < 1e-15);
        // each left triangle edge on x = 1/2 meets two small quads
        let hanging = m
            .interfaces
            .iter()
            .filter(|e| (e.a.x - 0.5).abs() < 1e-14 && (e.b.x - 0.5).abs() < 1e-14)
            .count();
        assert_eq!(hanging, 4);
    }

    #[test]
    fn hybrid_rejects_odd() {
        assert!(generate_hybrid(3).is_err());
        assert!(generate_hybrid(0).is_err());
    }

    #[test]
    fn hybrid_refinement_halves_h() {
        let a = generate_hybrid(4).unwrap();
        let b = generate_hybrid(8).unwrap();
        assert_eq!(a.h, 2.0 * b.h);
        let c = generate_hybrid(16).unwrap();
        assert!((c.total_area() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dual_counts_and_shapes() {
        let m = generate_dual_hex(8).unwrap();
        assert_eq!(m.num_cells(), 81);
        assert!((m.total_area() - 1.0).abs() < 1e-10);
        for j in 1..8 {
            for i in 1..8 {
                assert_eq!(m.cells[j * 9 + i].vertex_ids.len(), 6);
            }
        }
        let sizes: Vec<usize> = [0usize, 8, 72, 80, 4].iter().map(|&k| m.cells[k].vertex_ids.len()).collect();
        assert_eq!(sizes, vec![5, 4, 4, 5, 5]);
        assert!(generate_dual_hex(1).is_err());
        assert!(m.interfaces.iter().all(|e| match e.kind {
            InterfaceKind::Interior { k1, k2 } => k1 != k2,
            InterfaceKind::Boundary { .. } => true,
        }));
    }
}
