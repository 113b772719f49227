//! Gaussian quadrature on triangles, polygons (by sub-triangulation) and segments.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules, so all weights are positive and any order up to [`MAX_ORDER`] is
//! available.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::mesh::{orient, Interface, Mesh, Point};

pub const MAX_ORDER: usize = 30;

/// A quadrature rule on a reference element.
///
/// Triangle rules live on (0,0), (1,0), (0,1) with weights summing to 1/2;
/// segment rules on [-1, 1] with weights summing to 2 (second coordinate 0).
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Polynomials of total degree up to this are integrated exactly.
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_m(x) and P_m'(x) by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_segment(order: usize) -> QuadRule {
    let m = order / 2 + 1;
    let (x, w) = gauss_legendre(m);
    QuadRule {
        points: x.into_iter().map(|t| [t, 0.0]).collect(),
        weights: w,
        degree: 2 * m - 1,
    }
}

fn build_triangle(order: usize) -> QuadRule {
    // x = s, y = t (1 - s); Jacobian (1 - s) raises the degree in s by one.
    let ms = order.div_ceil(2) + 1;
    let mt = order / 2 + 1;
    let (xs, ws) = gauss_legendre(ms);
    let (xt, wt) = gauss_legendre(mt);
    let mut points = Vec::with_capacity(ms * mt);
    let mut weights = Vec::with_capacity(ms * mt);
    for (a, wa) in xs.iter().zip(&ws) {
        let s = 0.5 * (a + 1.0);
        for (b, wb) in xt.iter().zip(&wt) {
            let t = 0.5 * (b + 1.0);
            points.push([s, t * (1.0 - s)]);
            weights.push(0.25 * wa * wb * (1.0 - s));
        }
    }
    QuadRule {
        points,
        weights,
        degree: (2 * ms - 2).min(2 * mt - 1),
    }
}

fn cached(which: usize, order: usize) -> Result<&'static QuadRule> {
    static RULES: OnceLock<[Vec<QuadRule>; 2]> = OnceLock::new();
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let rules = RULES.get_or_init(|| {
        [
            (0..=MAX_ORDER).map(build_triangle).collect(),
            (0..=MAX_ORDER).map(build_segment).collect(),
        ]
    });
    Ok(&rules[which][order])
}

/// Reference-triangle rule exact to total degree `order`.
pub fn triangle_rule(order: usize) -> Result<&'static QuadRule> {
    cached(0, order)
}

/// Gauss-Legendre rule on [-1, 1] exact to degree `order`.
pub fn segment_rule(order: usize) -> Result<&'static QuadRule> {
    cached(1, order)
}

/// Splits a cell into positively oriented triangles.
///
/// Triangles pass through unchanged; other cells are fanned from the centroid,
/// falling back to ear clipping when the cell is not star-shaped about it.
pub fn triangulate(mesh: &Mesh, cell: usize) -> Result<Vec<[Point; 3]>> {
    let c = mesh.cells.get(cell).ok_or(Error::CellOutOfRange(cell))?;
    let pts = mesh.cell_points(cell);
    triangulate_polygon(&pts, c.centroid).ok_or(Error::Triangulation(cell))
}

pub fn triangulate_polygon(pts: &[Point], centroid: Point) -> Option<Vec<[Point; 3]>> {
    let m = pts.len();
    if m == 3 {
        return Some(vec![[pts[0], pts[1], pts[2]]]);
    }
    let fan: Vec<[Point; 3]> = (0..m).map(|i| [centroid, pts[i], pts[(i + 1) % m]]).collect();
    if fan.iter().all(|t| orient(t[0], t[1], t[2]) > 0.0) {
        return Some(fan);
    }
    ear_clip(pts)
}

fn ear_clip(pts: &[Point]) -> Option<Vec<[Point; 3]>> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::with_capacity(pts.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&i| {
            let (a, b, c) = (pts[idx[(i + m - 1) % m]], pts[idx[i]], pts[idx[(i + 1) % m]]);
            if orient(a, b, c) <= 0.0 {
                return false;
            }
            idx.iter().all(|&j| {
                let p = pts[j];
                p == a || p == b || p == c || !(orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0)
            })
        })?;
        let (a, b, c) = (pts[idx[(ear + m - 1) % m]], pts[idx[ear]], pts[idx[(ear + 1) % m]]);
        out.push([a, b, c]);
        idx.remove(ear);
    }
    let last = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
    if orient(last[0], last[1], last[2]) <= 0.0 {
        return None;
    }
    out.push(last);
    Some(out)
}

/// Physical quadrature points and weights.
#[derive(Debug, Clone, Default)]
pub struct QuadPoints {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadPoints {
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn triangle_points(tri: &[Point; 3], order: usize, out: &mut QuadPoints) -> Result<()> {
    let rule = triangle_rule(order)?;
    let [a, b, c] = *tri;
    let jac = orient(a, b, c);
    for (r, w) in rule.points.iter().zip(&rule.weights) {
        out.points.push(a + (b - a) * r[0] + (c - a) * r[1]);
        out.weights.push(w * jac);
    }
    Ok(())
}

/// Quadrature points over a whole cell.
pub fn cell_points(mesh: &Mesh, cell: usize, order: usize) -> Result<QuadPoints> {
    let mut q = QuadPoints::default();
    for t in triangulate(mesh, cell)? {
        triangle_points(&t, order, &mut q)?;
    }
    Ok(q)
}

/// Quadrature points on the segment from `a` to `b`.
pub fn segment_points(a: Point, b: Point, order: usize) -> Result<QuadPoints> {
    let rule = segment_rule(order)?;
    let half = 0.5 * a.dist(b);
    Ok(QuadPoints {
        points: rule.points.iter().map(|r| a.lerp(b, 0.5 * (r[0] + 1.0))).collect(),
        weights: rule.weights.iter().map(|w| w * half).collect(),
    })
}

pub fn integrate_triangle(tri: &[Point; 3], f: impl FnMut(Point) -> f64, order: usize) -> Result<f64> {
    let mut q = QuadPoints::default();
    triangle_points(tri, order, &mut q)?;
    Ok(q.integrate(f))
}

/// Integral of `f` over a cell, exact for polynomials of total degree `order`.
pub fn integrate_cell(mesh: &Mesh, cell: usize, mut f: impl FnMut(Point) -> f64, order: usize) -> Result<f64> {
    let mut total = 0.0;
    for t in triangulate(mesh, cell)? {
        total += integrate_triangle(&t, &mut f, order)?;
    }
    Ok(total)
}

/// Integral of `f` along an interface, exact for polynomials of degree `order`.
pub fn integrate_edge(iface: &Interface, f: impl FnMut(Point) -> f64, order: usize) -> Result<f64> {
    Ok(segment_points(iface.a, iface.b, order)?.integrate(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    fn square() -> Mesh {
        let v = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn gauss_legendre_low_orders() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rules_are_positive_and_normalized() {
        for p in 0..=MAX_ORDER {
            let t = triangle_rule(p).unwrap();
            assert!(t.weights.iter().all(|&w| w > 0.0));
            assert!((t.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            let s = segment_rule(p).unwrap();
            assert!(s.weights.iter().all(|&w| w > 0.0));
            assert!((s.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            assert!(s.degree >= p && t.degree >= p);
        }
        assert!(matches!(triangle_rule(MAX_ORDER + 1), Err(Error::UnsupportedOrder(_))));
    }

    #[test]
    fn reference_triangle_monomials() {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for p in 0..=12u32 {
            let rule = triangle_rule(p as usize).unwrap();
            for a in 0..=p {
                let b = p - a;
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!(((q - exact) / exact).abs() < 1e-13, "p={p} a={a}");
            }
        }
    }

    #[test]
    fn fan_triangulation() {
        let m = square();
        let tris = triangulate(&m, 0).unwrap();
        assert_eq!(tris.len(), 4);
        for t in &tris {
            assert!((0.5 * orient(t[0], t[1], t[2]) - 0.25).abs() < 1e-15);
        }
        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let tris = triangulate_polygon(&hex, Point::new(0.0, 0.0)).unwrap();
        let area: f64 = tris.iter().map(|t| 0.5 * orient(t[0], t[1], t[2])).sum();
        assert_eq!(tris.len(), 6);
        assert!((area - 3.0 * 3f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn ear_clipping_fallback() {
        // L-shape-like arrow whose centroid sees one edge from behind
        let p = [
            Point::new(0., 0.),
            Point::new(4., 0.),
            Point::new(4., 0.2),
            Point::new(0.2, 0.2),
            Point::new(0.2, 4.),
            Point::new(0., 4.),
        ];
        let g = crate::mesh::cell_geometry(&p).unwrap();
        let tris = triangulate_polygon(&p, g.centroid).unwrap();
        assert_eq!(tris.len(), 4);
        let area: f64 = tris.iter().map(|t| 0.5 * orient(t[0], t[1], t[2])).sum();
        assert!((area - g.area).abs() < 1e-13);
    }

    #[test]
    fn cell_examples() {
        let m = square();
        assert!((integrate_cell(&m, 0, |_| 1.0, 0).unwrap() - 1.0).abs() < 1e-15);
        let v = integrate_cell(&m, 0, |p| p.x * p.x * p.y.powi(3), 5).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-14);
        let tri = [Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 1.)];
        assert!((integrate_triangle(&tri, |p| p.x, 1).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(integrate_cell(&m, 0, |_| 1.0, MAX_ORDER + 1).is_err());
        assert!(matches!(integrate_cell(&m, 3, |_| 1.0, 2), Err(Error::CellOutOfRange(3))));
    }

    #[test]
    fn edge_examples() {
        let m = square();
        let e = &m.interfaces[0];
        assert!((integrate_edge(e, |_| 1.0, 0).unwrap() - 1.0).abs() < 1e-15);
        let t = |p: Point| (p - e.a).norm() / e.length;
        assert!((integrate_edge(e, &t, 1).unwrap() - 0.5).abs() < 1e-15);
        // 3-point rule integrates degree 5
        assert_eq!(segment_rule(5).unwrap().points.len(), 3);
        assert!((integrate_edge(e, |p| t(p).powi(4), 5).unwrap() - 0.2).abs() < 1e-14);
        let long = segment_points(Point::new(0., 0.), Point::new(3., 4.), 0).unwrap();
        assert!((long.integrate(|_| 1.0) - 5.0).abs() < 1e-14);
    }
}
