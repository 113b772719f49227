//! Discontinuous piecewise-polynomial spaces on polygonal meshes.
//!
//! Each cell carries the scaled monomials
//! `((x - x_K)/h_K)^a ((y - y_K)/h_K)^b`, `a + b <= n`, centred at the cell
//! centroid and scaled by the cell diameter, ordered by total degree and then
//! by descending `a`. The scaling keeps local mass matrices equally well
//! conditioned on every cell size.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature;

pub const MAX_DEGREE: usize = 6;

/// Dimension of the polynomials of total degree at most `degree` in two variables.
pub const fn dim_for_degree(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponent pairs (a, b) of the basis in canonical order.
pub fn exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_for_degree(degree));
    for d in 0..=degree {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub cell: usize,
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
}

impl LocalBasis {
    pub fn new(mesh: &Mesh, cell: usize, degree: usize) -> Result<Self> {
        let c = mesh.cells.get(cell).ok_or(Error::CellOutOfRange(cell))?;
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(LocalBasis {
            cell,
            degree,
            center: c.centroid,
            scale: c.diameter,
        })
    }

    pub fn dim(&self) -> usize {
        dim_for_degree(self.degree)
    }

    fn powers(&self, p: Point) -> ([f64; MAX_DEGREE + 1], [f64; MAX_DEGREE + 1]) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let mut px = [1.0; MAX_DEGREE + 1];
        let mut py = [1.0; MAX_DEGREE + 1];
        for k in 1..=self.degree {
            px[k] = px[k - 1] * xi;
            py[k] = py[k - 1] * eta;
        }
        (px, py)
    }

    /// Values of all basis functions at `p`.
    pub fn values(&self, p: Point, out: &mut [f64]) {
        let (px, py) = self.powers(p);
        let mut i = 0;
        for d in 0..=self.degree {
            for a in (0..=d).rev() {
                out[i] = px[a] * py[d - a];
                i += 1;
            }
        }
    }

    /// Gradients of all basis functions at `p`.
    pub fn gradients(&self, p: Point, out: &mut [[f64; 2]]) {
        let (px, py) = self.powers(p);
        let inv = 1.0 / self.scale;
        let mut i = 0;
        for d in 0..=self.degree {
            for a in (0..=d).rev() {
                let b = d - a;
                let gx = if a > 0 { a as f64 * px[a - 1] * py[b] * inv } else { 0.0 };
                let gy = if b > 0 { b as f64 * px[a] * py[b - 1] * inv } else { 0.0 };
                out[i] = [gx, gy];
                i += 1;
            }
        }
    }

    /// Local mass and stiffness matrices integrated with `order`.
    pub fn mass_and_stiffness(&self, mesh: &Mesh, order: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let q = quadrature::cell_points(mesh, self.cell, order)?;
        let mut mass = DMatrix::zeros(n, n);
        let mut stiff = DMatrix::zeros(n, n);
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            self.values(p, &mut v);
            self.gradients(p, &mut g);
            for i in 0..n {
                for j in 0..n {
                    mass[(i, j)] += w * v[i] * v[j];
                    stiff[(i, j)] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        Ok((mass, stiff))
    }
}

/// Global numbering of the discontinuous space; cell `k` owns the contiguous
/// range `offsets[k]..offsets[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub degree: usize,
    pub offsets: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let d = dim_for_degree(degree);
        Ok(DofMap {
            degree,
            offsets: (0..=mesh.num_cells()).map(|k| k * d).collect(),
        })
    }

    pub fn local_dim(&self) -> usize {
        dim_for_degree(self.degree)
    }

    pub fn num_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, cell: usize) -> std::ops::Range<usize> {
        self.offsets[cell]..self.offsets[cell + 1]
    }
}

/// A function in the discontinuous space `V_h`.
#[derive(Debug, Clone)]
pub struct DiscreteFunction<'m> {
    pub mesh: &'m Mesh,
    pub dofs: DofMap,
    pub coeffs: Vec<f64>,
    bases: Vec<LocalBasis>,
}

impl<'m> DiscreteFunction<'m> {
    pub fn zero(mesh: &'m Mesh, degree: usize) -> Result<Self> {
        let dofs = DofMap::new(mesh, degree)?;
        let n = dofs.total();
        Self::from_coeffs(mesh, degree, vec![0.0; n])
    }

    pub fn from_coeffs(mesh: &'m Mesh, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let dofs = DofMap::new(mesh, degree)?;
        if coeffs.len() != dofs.total() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} degrees of freedom",
                coeffs.len(),
                dofs.total()
            )));
        }
        let bases = (0..mesh.num_cells())
            .map(|k| LocalBasis::new(mesh, k, degree))
            .collect::<Result<_>>()?;
        Ok(DiscreteFunction { mesh, dofs, coeffs, bases })
    }

    pub fn degree(&self) -> usize {
        self.dofs.degree
    }

    pub fn basis(&self, cell: usize) -> &LocalBasis {
        &self.bases[cell]
    }

    pub fn local(&self, cell: usize) -> &[f64] {
        &self.coeffs[self.dofs.range(cell)]
    }

    /// Value of the polynomial on `cell` at `p` (the trace from that side on an interface).
    pub fn eval(&self, cell: usize, p: Point) -> Result<f64> {
        let b = self.bases.get(cell).ok_or(Error::CellOutOfRange(cell))?;
        let mut v = [0.0; dim_for_degree(MAX_DEGREE)];
        b.values(p, &mut v);
        Ok(self.local(cell).iter().zip(&v).map(|(c, v)| c * v).sum())
    }

    pub fn eval_grad(&self, cell: usize, p: Point) -> Result<[f64; 2]> {
        let b = self.bases.get(cell).ok_or(Error::CellOutOfRange(cell))?;
        let mut g = [[0.0; 2]; dim_for_degree(MAX_DEGREE)];
        b.gradients(p, &mut g);
        let mut out = [0.0; 2];
        for (c, g) in self.local(cell).iter().zip(&g) {
            out[0] += c * g[0];
            out[1] += c * g[1];
        }
        Ok(out)
    }

    pub fn same_space(&self, other: &DiscreteFunction) -> bool {
        std::ptr::eq(self.mesh, other.mesh) && self.dofs == other.dofs
    }
}

/// Volume quadrature order used for mass-type integrals of degree-`n` functions.
pub fn volume_order(degree: usize) -> usize {
    2 * degree + 2
}

/// L2 projection of `f` onto the degree-`degree` discontinuous space.
pub fn l2_project<'m>(f: impl Fn(Point) -> f64, mesh: &'m Mesh, degree: usize) -> Result<DiscreteFunction<'m>> {
    l2_project_with_order(f, mesh, degree, volume_order(degree))
}

pub fn l2_project_with_order<'m>(
    f: impl Fn(Point) -> f64,
    mesh: &'m Mesh,
    degree: usize,
    order: usize,
) -> Result<DiscreteFunction<'m>> {
    let mut out = DiscreteFunction::zero(mesh, degree)?;
    let n = out.dofs.local_dim();
    let mut v = vec![0.0; n];
    for k in 0..mesh.num_cells() {
        let basis = out.basis(k).clone();
        let q = quadrature::cell_points(mesh, k, order)?;
        let mut mass = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            basis.values(p, &mut v);
            let fv = f(p);
            for i in 0..n {
                rhs[i] += w * fv * v[i];
                for j in 0..n {
                    mass[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let chol = mass.cholesky().ok_or(Error::SingularMass(k))?;
        let c = chol.solve(&rhs);
        let range = out.dofs.range(k);
        out.coeffs[range].copy_from_slice(c.as_slice());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, generate_dual_hex};

    fn square() -> Mesh {
        let v = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn ordering() {
        assert_eq!(exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(dim_for_degree(4), 15);
    }

    #[test]
    fn constant_and_linear_eval() {
        let m = square();
        let mut f = DiscreteFunction::zero(&m, 1).unwrap();
        f.coeffs[0] = 1.0;
        assert_eq!(f.eval(0, Point::new(0.3, 0.9)).unwrap(), 1.0);
        assert_eq!(f.eval_grad(0, Point::new(0.3, 0.9)).unwrap(), [0.0, 0.0]);
        f.coeffs = vec![0.0, 1.0, 0.0];
        let s = 2f64.sqrt();
        assert!((f.eval(0, Point::new(1.0, 0.5)).unwrap() - 0.5 / s).abs() < 1e-15);
        let g = f.eval_grad(0, Point::new(1.0, 0.5)).unwrap();
        assert!((g[0] - 1.0 / s).abs() < 1e-15 && g[1] == 0.0);
        assert!(matches!(f.eval(1, Point::new(0., 0.)), Err(Error::CellOutOfRange(1))));
    }

    #[test]
    fn projection_examples() {
        let m = square();
        for n in 0..=4 {
            let p = l2_project(|_| 3.0, &m, n).unwrap();
            assert!((p.eval(0, Point::new(0.2, 0.7)).unwrap() - 3.0).abs() < 1e-13);
        }
        let p = l2_project(|q| q.x, &m, 0).unwrap();
        assert!((p.coeffs[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_is_orthogonal() {
        let m = generate_dual_hex(4).unwrap();
        let f = |p: Point| (3.0 * p.x).sin() * (1.0 + p.y * p.y);
        let order = 12;
        let q = l2_project_with_order(f, &m, 2, order).unwrap();
        let mut v = vec![0.0; 6];
        for k in 0..m.num_cells() {
            let pts = quadrature::cell_points(&m, k, order).unwrap();
            for i in 0..6 {
                let r = pts.integrate(|p| {
                    q.basis(k).values(p, &mut v);
                    (f(p) - q.eval(k, p).unwrap()) * v[i]
                });
                assert!(r.abs() < 1e-13, "cell {k} basis {i}: {r}");
            }
        }
    }

    #[test]
    fn mass_conditioning_is_scale_free() {
        let cond = |s: f64| {
            let v = vec![Point::new(0., 0.), Point::new(s, 0.), Point::new(s, s), Point::new(0., s)];
            let m = build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap();
            let (mass, _) = LocalBasis::new(&m, 0, 3).unwrap().mass_and_stiffness(&m, 8).unwrap();
            let e = mass.symmetric_eigenvalues();
            e.max() / e.min()
        };
        let a = cond(1.0);
        let b = cond(1e-4);
        assert!(((a - b) / a).abs() < 1e-8);
    }
}
