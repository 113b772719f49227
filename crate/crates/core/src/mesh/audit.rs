//! Shape-regularity audit.
//!
//! Computable witnesses for the mesh assumptions: volume ratio `|K|/h_K^2`,
//! edge-to-cell diameter ratio `h_e/h_K`, and a pyramid check with the apex
//! fixed at the cell centroid. The circumscribed-simplex condition has no
//! computable certificate; it is replaced by a bounding-box overlap count.
//! Both substitutes are flagged as surrogates in the report.

use serde::Serialize;

use super::grid::BucketGrid;
use super::{orient, BBox, Mesh};

#[derive(Debug, Clone, Serialize)]
pub struct WorstOffenders {
    /// Cell attaining `rho_v`.
    pub rho_v_cell: usize,
    /// (interface, cell) attaining `kappa`.
    pub kappa: (usize, usize),
    /// (interface, cell) attaining `sigma_star`.
    pub sigma: (usize, usize),
    /// (interface, cell) attaining `theta0`.
    pub theta: (usize, usize),
    /// Cell whose bounding box meets the most other boxes.
    pub a4_cell: usize,
    /// Up to five cells with the smallest `|K|/h_K^2`, worst first.
    pub smallest_volume_ratio: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    pub rho_v: f64,
    /// Edge measure ratio; identically 1 for straight edges in two dimensions.
    pub rho_e: f64,
    pub kappa: f64,
    pub sigma_star: f64,
    /// Largest angle (radians) between `x_e - A_e` and the outward normal.
    pub theta0: f64,
    pub a4_overlap_proxy: usize,
    /// Cells that are not star-shaped with respect to their centroid.
    pub non_star_shaped: Vec<usize>,
    pub worst: WorstOffenders,
    pub surrogate_checks: Vec<String>,
    pub warnings: Vec<String>,
}

/// Audits `mesh`. Never fails; questionable cells are reported, not rejected.
pub fn audit_shape(mesh: &Mesh) -> ShapeReport {
    let mut rho_v = f64::INFINITY;
    let mut rho_cell = 0;
    let mut ratios: Vec<(usize, f64)> = Vec::with_capacity(mesh.num_cells());
    for (k, c) in mesh.cells.iter().enumerate() {
        let r = c.area / (c.diameter * c.diameter);
        ratios.push((k, r));
        if r < rho_v {
            rho_v = r;
            rho_cell = k;
        }
    }
    ratios.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ratios.truncate(5);

    let mut kappa = (f64::INFINITY, (0, 0));
    let mut sigma = (f64::INFINITY, (0, 0));
    let mut theta = (0.0f64, (0, 0));
    let mut non_star = Vec::new();
    for (k, c) in mesh.cells.iter().enumerate() {
        let apex = c.centroid;
        let pts = mesh.cell_points(k);
        let m = pts.len();
        if (0..m).any(|i| orient(apex, pts[i], pts[(i + 1) % m]) <= 0.0) {
            non_star.push(k);
        }
        for &e in &c.interfaces {
            let iface = &mesh.interfaces[e];
            let r = iface.diameter() / c.diameter;
            if r < kappa.0 {
                kappa = (r, (e, k));
            }
            let n = mesh.outward_normal(e, k);
            let s = (iface.a - apex).dot(n) / c.diameter;
            if s < sigma.0 {
                sigma = (s, (e, k));
            }
            for x in [iface.a, iface.midpoint(), iface.b] {
                let d = x - apex;
                let cos = (d.dot(n) / d.norm()).clamp(-1.0, 1.0);
                let ang = cos.acos();
                if ang > theta.0 {
                    theta = (ang, (e, k));
                }
            }
        }
    }

    let boxes: Vec<BBox> = (0..mesh.num_cells())
        .map(|k| BBox::of(mesh.cell_points(k)).unwrap())
        .collect();
    let grid = BucketGrid::new(mesh.bounds, &boxes);
    let tol = mesh.tolerance;
    let mut overlap = (0usize, 0usize);
    let mut cand = Vec::new();
    for (k, b) in boxes.iter().enumerate() {
        let q = b.expand(tol);
        grid.candidates(&q, &mut cand);
        let count = cand.iter().filter(|&&j| j != k && q.intersects(&boxes[j])).count();
        if count > overlap.0 {
            overlap = (count, k);
        }
    }

    let mut warnings = Vec::new();
    if !non_star.is_empty() {
        warnings.push(format!(
            "{} cell(s) are not star-shaped with respect to their centroid",
            non_star.len()
        ));
    }
    if rho_v < 1e-3 {
        warnings.push(format!("cell {rho_cell} has volume ratio {rho_v:.3e}"));
    }
    if sigma.0 <= 0.0 {
        warnings.push(format!("cell {} has its centroid on or outside an edge line", sigma.1 .1));
    }

    ShapeReport {
        rho_v,
        rho_e: 1.0,
        kappa: kappa.0,
        sigma_star: sigma.0,
        theta0: theta.0,
        a4_overlap_proxy: overlap.0,
        non_star_shaped: non_star,
        worst: WorstOffenders {
            rho_v_cell: rho_cell,
            kappa: kappa.1,
            sigma: sigma.1,
            theta: theta.1,
            a4_cell: overlap.1,
            smallest_volume_ratio: ratios,
        },
        surrogate_checks: vec![
            "pyramid apex fixed at the cell centroid; sample points are edge endpoints and midpoint".into(),
            "circumscribed-simplex overlap replaced by bounding-box overlap count".into(),
        ],
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, generate_dual_hex, Point};

    #[test]
    fn unit_square() {
        let v = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)];
        let r = audit_shape(&build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap());
        assert!((r.rho_v - 0.5).abs() < 1e-15);
        assert!((r.kappa - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((r.sigma_star - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((r.theta0 - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert_eq!(r.a4_overlap_proxy, 0);
        assert!(r.non_star_shaped.is_empty());
    }

    #[test]
    fn sliver_is_worst() {
        let v = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(1., 1e-6),
            Point::new(0., 1.),
        ];
        let m = build_mesh(v, vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        let r = audit_shape(&m);
        assert_eq!(r.worst.rho_v_cell, 0);
        assert!((r.rho_v - 5e-7).abs() < 1e-12, "{}", r.rho_v);
        assert_eq!(r.worst.smallest_volume_ratio[0].0, 0);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn dual_levels_agree() {
        let a = audit_shape(&generate_dual_hex(8).unwrap());
        let b = audit_shape(&generate_dual_hex(16).unwrap());
        assert!((a.kappa / b.kappa - 1.0).abs() < 0.1);
        assert!((a.rho_v / b.rho_v - 1.0).abs() < 0.1);
        assert!(a.kappa > 0.3);
    }
}
