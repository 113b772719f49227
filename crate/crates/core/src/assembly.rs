//! Interior penalty bilinear form and its sparse assembly.
//!
//! For trial `u` and test `v` in the discontinuous space:
//!
//! ```text
//! A(u, v) = sum_K (grad u, grad v)_K
//!         - sum_e <{grad u}, [v]>_e
//!         - delta * sum_e <{grad v}, [u]>_e
//!         + alpha * sum_e 1/h_e <[u], [v]>_e
//! ```
//!
//! where the face sums run over interior and boundary interfaces alike. On an
//! interior interface `[v] = v1 n1 + v2 n2` and `{grad v}` is the mean of both
//! traces; on the boundary `[v] = v n` and `{grad v} = grad v`. Dirichlet data
//! `g` enters the right-hand side consistently, so that the exact solution
//! satisfies `A(u, v) = (f, v) + sum_{e on boundary} (alpha/h_e <g, v> - delta <grad v . n, g>)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{InterfaceKind, Mesh, Point};
use crate::poly_space::{volume_order, DiscreteFunction, DofMap, LocalBasis, MAX_DEGREE};
use crate::quadrature;
use crate::sparse::{CsrMatrix, Triplets};

/// Sign of the transposed consistency term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i32", try_from = "i32")]
pub enum Delta {
    /// delta = 1 (SIPG)
    Symmetric,
    /// delta = 0 (IIPG)
    Incomplete,
    /// delta = -1 (NIPG)
    Nonsymmetric,
}

impl Delta {
    pub fn value(self) -> f64 {
        match self {
            Delta::Symmetric => 1.0,
            Delta::Incomplete => 0.0,
            Delta::Nonsymmetric => -1.0,
        }
    }
}

impl TryFrom<i32> for Delta {
    type Error = Error;
    fn try_from(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Delta::Symmetric),
            0 => Ok(Delta::Incomplete),
            -1 => Ok(Delta::Nonsymmetric),
            _ => Err(Error::InvalidParameter(format!("delta must be -1, 0 or 1, got {v}"))),
        }
    }
}

impl From<Delta> for i32 {
    fn from(d: Delta) -> i32 {
        d.value() as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DGParams {
    pub delta: Delta,
    pub alpha: f64,
    pub degree: usize,
}

impl Default for DGParams {
    fn default() -> Self {
        DGParams {
            delta: Delta::Symmetric,
            alpha: 10.0,
            degree: 1,
        }
    }
}

impl DGParams {
    pub fn new(delta: i32, alpha: f64, degree: usize) -> Result<Self> {
        let p = DGParams {
            delta: Delta::try_from(delta)?,
            alpha,
            degree,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(self.degree));
        }
        Ok(())
    }

    /// Quadrature order on interfaces.
    pub fn edge_order(&self) -> usize {
        2 * self.degree + 3
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Set when the form is symmetric (delta = 1).
    pub symmetric: bool,
    /// Row offsets of the per-cell diagonal blocks.
    pub block_offsets: Vec<usize>,
}

impl SparseSystem {
    /// A system with scalar diagonal blocks.
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, symmetric: bool) -> Self {
        let n = matrix.nrows;
        SparseSystem {
            matrix,
            rhs,
            symmetric,
            block_offsets: (0..=n).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    /// Number of stored nonzero blocks, counting each (cell, cell) pair once.
    pub fn block_count(&self) -> usize {
        let nb = self.block_offsets.len() - 1;
        let mut owner = vec![0usize; self.dim()];
        for b in 0..nb {
            owner[self.block_offsets[b]..self.block_offsets[b + 1]].fill(b);
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for r in 0..self.dim() {
            for (c, _) in self.matrix.row(r) {
                pairs.push((owner[r], owner[c]));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs.len()
    }
}

/// One side of an interface: cell, jump sign and averaging weight.
#[derive(Clone, Copy)]
struct Side {
    cell: usize,
    sign: f64,
    weight: f64,
}

fn sides(kind: InterfaceKind) -> ([Side; 2], usize) {
    match kind {
        InterfaceKind::Interior { k1, k2 } => (
            [
                Side { cell: k1, sign: 1.0, weight: 0.5 },
                Side { cell: k2, sign: -1.0, weight: 0.5 },
            ],
            2,
        ),
        InterfaceKind::Boundary { k } => (
            [Side { cell: k, sign: 1.0, weight: 1.0 }, Side { cell: k, sign: 0.0, weight: 0.0 }],
            1,
        ),
    }
}

/// Assembles the interior penalty system for `-Δu = f` with `u = g` on the boundary.
pub fn assemble(
    mesh: &Mesh,
    params: &DGParams,
    f: impl Fn(Point) -> f64,
    g: impl Fn(Point) -> f64,
) -> Result<SparseSystem> {
    params.validate()?;
    if mesh.num_cells() == 0 {
        return Err(Error::EmptyMesh);
    }
    let dofs = DofMap::new(mesh, params.degree)?;
    let nd = dofs.local_dim();
    let n = dofs.total();
    let bases: Vec<LocalBasis> = (0..mesh.num_cells())
        .map(|k| LocalBasis::new(mesh, k, params.degree))
        .collect::<Result<_>>()?;
    let delta = params.delta.value();
    let vol_order = volume_order(params.degree);
    let edge_order = params.edge_order();
    quadrature::triangle_rule(vol_order)?;
    quadrature::segment_rule(edge_order)?;

    let blocks = mesh.num_cells() + 4 * mesh.interior_count() + mesh.boundary_count();
    let mut trip = Triplets::with_capacity(n, n, blocks * nd * nd);
    let mut rhs = vec![0.0; n];
    let mut vals = vec![0.0; nd];
    let mut grads = vec![[0.0; 2]; nd];
    let mut local = vec![0.0; nd * nd];

    for (k, basis) in bases.iter().enumerate() {
        let q = quadrature::cell_points(mesh, k, vol_order)?;
        local.iter_mut().for_each(|x| *x = 0.0);
        let off = dofs.offsets[k];
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            basis.values(p, &mut vals);
            basis.gradients(p, &mut grads);
            let fv = f(p);
            for i in 0..nd {
                rhs[off + i] += w * fv * vals[i];
                for j in 0..nd {
                    local[i * nd + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        for i in 0..nd {
            for j in 0..nd {
                trip.push(off + i, off + j, local[i * nd + j]);
            }
        }
    }

    let mut side_vals = vec![vec![0.0; nd]; 2];
    let mut side_gn = vec![vec![0.0; nd]; 2];
    let mut block = vec![0.0; 4 * nd * nd];
    for iface in &mesh.interfaces {
        let (sd, ns) = sides(iface.kind);
        let normal = iface.normal;
        let pen = params.alpha / iface.diameter();
        let q = quadrature::segment_points(iface.a, iface.b, edge_order)?;
        block.iter_mut().for_each(|x| *x = 0.0);
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            for s in 0..ns {
                let b = &bases[sd[s].cell];
                b.values(p, &mut side_vals[s]);
                b.gradients(p, &mut grads);
                for i in 0..nd {
                    side_gn[s][i] = grads[i][0] * normal.x + grads[i][1] * normal.y;
                }
            }
            for a in 0..ns {
                for b in 0..ns {
                    let (sa, sb) = (sd[a], sd[b]);
                    let blk = &mut block[(a * 2 + b) * nd * nd..(a * 2 + b + 1) * nd * nd];
                    for i in 0..nd {
                        let va = side_vals[a][i];
                        let ga = side_gn[a][i];
                        for j in 0..nd {
                            let vb = side_vals[b][j];
                            let gb = side_gn[b][j];
                            blk[i * nd + j] += w
                                * (-sb.weight * gb * sa.sign * va - delta * sa.weight * ga * sb.sign * vb
                                    + pen * sa.sign * sb.sign * va * vb);
                        }
                    }
                }
            }
            if ns == 1 {
                let gv = g(p);
                let off = dofs.offsets[sd[0].cell];
                for i in 0..nd {
                    rhs[off + i] += w * (pen * gv * side_vals[0][i] - delta * side_gn[0][i] * gv);
                }
            }
        }
        for a in 0..ns {
            for b in 0..ns {
                let (ra, cb) = (dofs.offsets[sd[a].cell], dofs.offsets[sd[b].cell]);
                let blk = &block[(a * 2 + b) * nd * nd..(a * 2 + b + 1) * nd * nd];
                for i in 0..nd {
                    for j in 0..nd {
                        trip.push(ra + i, cb + j, blk[i * nd + j]);
                    }
                }
            }
        }
    }

    Ok(SparseSystem {
        matrix: trip.into_csr(),
        rhs,
        symmetric: params.delta == Delta::Symmetric,
        block_offsets: dofs.offsets,
    })
}

/// Jump `[v]` of a discrete function at point `p` of interface `e`.
pub fn jump(v: &DiscreteFunction, e: usize, p: Point) -> Result<Point> {
    let iface = &v.mesh.interfaces[e];
    match iface.kind {
        InterfaceKind::Interior { k1, k2 } => {
            let n1 = v.mesh.outward_normal(e, k1);
            let n2 = v.mesh.outward_normal(e, k2);
            Ok(n1 * v.eval(k1, p)? + n2 * v.eval(k2, p)?)
        }
        InterfaceKind::Boundary { k } => Ok(v.mesh.outward_normal(e, k) * v.eval(k, p)?),
    }
}

/// Average `{grad v}` of a discrete function at point `p` of interface `e`.
pub fn average_gradient(v: &DiscreteFunction, e: usize, p: Point) -> Result<Point> {
    let iface = &v.mesh.interfaces[e];
    let g = |k| v.eval_grad(k, p).map(|[x, y]| Point::new(x, y));
    match iface.kind {
        InterfaceKind::Interior { k1, k2 } => Ok((g(k1)? + g(k2)?) * 0.5),
        InterfaceKind::Boundary { k } => g(k),
    }
}

/// Evaluates `A(u, v)` by direct quadrature, without forming the matrix.
pub fn apply_bilinear(u: &DiscreteFunction, v: &DiscreteFunction, params: &DGParams) -> Result<f64> {
    params.validate()?;
    if !u.same_space(v) {
        return Err(Error::MismatchedSpaces);
    }
    let mesh = u.mesh;
    let delta = params.delta.value();
    let vol_order = volume_order(u.degree());
    let mut total = 0.0;
    for k in 0..mesh.num_cells() {
        let q = quadrature::cell_points(mesh, k, vol_order)?;
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            let gu = u.eval_grad(k, p)?;
            let gv = v.eval_grad(k, p)?;
            total += w * (gu[0] * gv[0] + gu[1] * gv[1]);
        }
    }
    for (e, iface) in mesh.interfaces.iter().enumerate() {
        let q = quadrature::segment_points(iface.a, iface.b, 2 * u.degree() + 3)?;
        let pen = params.alpha / iface.diameter();
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            let ju = jump(u, e, p)?;
            let jv = jump(v, e, p)?;
            let au = average_gradient(u, e, p)?;
            let av = average_gradient(v, e, p)?;
            total += w * (-au.dot(jv) - delta * av.dot(ju) + pen * ju.dot(jv));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, generate_dual_hex};

    fn square() -> Mesh {
        let v = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    fn two_squares() -> Mesh {
        let v = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(2., 0.),
            Point::new(0., 1.),
            Point::new(1., 1.),
            Point::new(2., 1.),
        ];
        build_mesh(v, vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]]).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(DGParams::new(2, 10.0, 1).is_err());
        assert!(DGParams::new(1, 0.0, 1).is_err());
        assert!(DGParams::new(1, f64::NAN, 1).is_err());
        assert!(DGParams::new(-1, 0.1, 1).is_ok());
        assert_eq!(DGParams::default(), DGParams::new(1, 10.0, 1).unwrap());
    }

    #[test]
    fn single_cell_degree_zero() {
        let m = square();
        let p = DGParams::new(1, 10.0, 0).unwrap();
        let s = assemble(&m, &p, |_| 1.0, |_| 0.0).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.matrix.get(0, 0) - 40.0).abs() < 1e-13);
        assert!((s.rhs[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn penalty_only_on_piecewise_constant() {
        let m = two_squares();
        let p = DGParams::new(1, 10.0, 0).unwrap();
        let v = DiscreteFunction::from_coeffs(&m, 0, vec![1.0, 0.0]).unwrap();
        // interior jump plus the three boundary edges of the first cell
        let whole = apply_bilinear(&v, &v, &p).unwrap();
        assert!((whole - 40.0).abs() < 1e-12);
        let mut interior_only = 0.0;
        for (e, iface) in m.interfaces.iter().enumerate() {
            if !iface.is_boundary() {
                let q = quadrature::segment_points(iface.a, iface.b, 3).unwrap();
                interior_only += q.integrate(|x| {
                    let j = jump(&v, e, x).unwrap();
                    10.0 / iface.diameter() * j.dot(j)
                });
            }
        }
        assert!((interior_only - 10.0).abs() < 1e-13);
    }

    #[test]
    fn zero_argument() {
        let m = generate_dual_hex(3).unwrap();
        let p = DGParams::default();
        let z = DiscreteFunction::zero(&m, 1).unwrap();
        let v = DiscreteFunction::from_coeffs(&m, 1, (0..z.coeffs.len()).map(|i| (i as f64).sin()).collect()).unwrap();
        assert_eq!(apply_bilinear(&z, &v, &p).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_spaces() {
        let m = square();
        let m2 = square();
        let p = DGParams::default();
        let a = DiscreteFunction::zero(&m, 1).unwrap();
        let b = DiscreteFunction::zero(&m2, 1).unwrap();
        let c = DiscreteFunction::zero(&m, 2).unwrap();
        assert!(matches!(apply_bilinear(&a, &b, &p), Err(Error::MismatchedSpaces)));
        assert!(matches!(apply_bilinear(&a, &c, &p), Err(Error::MismatchedSpaces)));
    }

    #[test]
    fn symmetry_flag_follows_delta() {
        let m = generate_dual_hex(4).unwrap();
        let s = assemble(&m, &DGParams::default(), |_| 0.0, |_| 0.0).unwrap();
        assert!(s.symmetric);
        assert!(s.matrix.max_asymmetry() <= 1e-12 * s.matrix.max_abs());
        let s0 = assemble(&m, &DGParams::new(0, 10.0, 1).unwrap(), |_| 0.0, |_| 0.0).unwrap();
        assert!(!s0.symmetric);
        assert!(s0.matrix.max_asymmetry() > 1e-3 * s0.matrix.max_abs());
    }

    #[test]
    fn block_sparsity() {
        let m = generate_dual_hex(4).unwrap();
        let s = assemble(&m, &DGParams::default(), |_| 0.0, |_| 0.0).unwrap();
        assert_eq!(s.block_count(), m.num_cells() + 2 * m.interior_count());
    }
}
