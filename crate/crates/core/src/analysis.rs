//! Error norms, convergence-rate fitting and discrete surrogates for the
//! inverse-inequality constant and the coercivity penalty threshold.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assembly::Delta;
use crate::error::{Error, Result};
use crate::mesh::{InterfaceKind, Mesh, Point};
use crate::poly_space::{DiscreteFunction, LocalBasis};
use crate::problems::{ExactSolution, Zero};
use crate::quadrature;

/// Quadrature order for error norms.
pub const ERROR_ORDER: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub l2: f64,
    pub h1_broken: f64,
    pub energy: f64,
}

/// Squared pieces of the energy norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormParts {
    pub l2: f64,
    pub grad: f64,
    /// `sum_e h_e ||{grad v}||_e^2`
    pub average: f64,
    /// `sum_e 1/h_e ||[v]||_e^2`, without the penalty factor
    pub jump: f64,
}

impl NormParts {
    pub fn energy(&self, alpha: f64) -> f64 {
        (self.grad + self.average + alpha * self.jump).sqrt()
    }
}

/// Squared norm pieces of `u - u_h`, where `u` is continuous across interfaces.
pub fn error_parts(u_h: &DiscreteFunction, exact: &dyn ExactSolution) -> Result<NormParts> {
    let mesh = u_h.mesh;
    let mut parts = NormParts::default();
    for k in 0..mesh.num_cells() {
        let q = quadrature::cell_points(mesh, k, ERROR_ORDER)?;
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            let d = exact.value(p) - u_h.eval(k, p)?;
            let gu = exact.gradient(p);
            let gh = u_h.eval_grad(k, p)?;
            let (gx, gy) = (gu[0] - gh[0], gu[1] - gh[1]);
            parts.l2 += w * d * d;
            parts.grad += w * (gx * gx + gy * gy);
        }
    }
    for (e, iface) in mesh.interfaces.iter().enumerate() {
        let q = quadrature::segment_points(iface.a, iface.b, ERROR_ORDER)?;
        let he = iface.diameter();
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            let gu = exact.gradient(p);
            let gu = Point::new(gu[0], gu[1]);
            let grad_h = |k| u_h.eval_grad(k, p).map(|[x, y]| Point::new(x, y));
            let (avg, jump) = match iface.kind {
                InterfaceKind::Interior { k1, k2 } => {
                    let avg = gu - (grad_h(k1)? + grad_h(k2)?) * 0.5;
                    let n1 = mesh.outward_normal(e, k1);
                    let n2 = mesh.outward_normal(e, k2);
                    let jump = -(n1 * u_h.eval(k1, p)? + n2 * u_h.eval(k2, p)?);
                    (avg, jump)
                }
                InterfaceKind::Boundary { k } => {
                    let avg = gu - grad_h(k)?;
                    let jump = mesh.outward_normal(e, k) * (exact.value(p) - u_h.eval(k, p)?);
                    (avg, jump)
                }
            };
            parts.average += w * he * avg.dot(avg);
            parts.jump += w / he * jump.dot(jump);
        }
    }
    Ok(parts)
}

/// L2, broken H1 and energy errors of `u_h` against `exact`.
pub fn errors(u_h: &DiscreteFunction, exact: &dyn ExactSolution, alpha: f64) -> Result<ErrorTriple> {
    let parts = error_parts(u_h, exact)?;
    Ok(ErrorTriple {
        l2: parts.l2.sqrt(),
        h1_broken: parts.grad.sqrt(),
        energy: parts.energy(alpha),
    })
}

/// Norms of a discrete function.
pub fn norm_parts(v: &DiscreteFunction) -> Result<NormParts> {
    error_parts(v, &Zero)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub cells: usize,
    pub dofs: usize,
    pub errors: ErrorTriple,
    pub iterations: usize,
}

/// Observed orders per norm; `None` where a rate is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rates {
    pub l2: Option<f64>,
    pub h1: Option<f64>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<Level>,
    /// Rate between level `i - 1` and `i`; the first entry is always empty.
    pub pairwise: Vec<Rates>,
    /// Least-squares slope of `log e` against `log h`.
    pub fitted: Rates,
    /// (level, norm) pairs left out of the fit because the error was zero.
    pub excluded: Vec<(usize, String)>,
}

/// Least-squares slope of `log e` against `log h`, skipping non-positive errors.
pub fn fit_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

fn pair_rate(h0: f64, h1: f64, e0: f64, e1: f64) -> Option<f64> {
    (e0 > 0.0 && e1 > 0.0 && e0.is_finite() && e1.is_finite()).then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

/// Pairwise and least-squares rates for a refinement sequence ordered by decreasing `h`.
pub fn fit_rates(levels: Vec<Level>) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::TooFewLevels(2));
    }
    if levels.iter().any(|l| !(l.h.is_finite() && l.h > 0.0)) {
        return Err(Error::InvalidParameter("mesh sizes must be positive".into()));
    }
    if levels.windows(2).any(|w| w[1].h >= w[0].h) {
        return Err(Error::LevelOrder);
    }
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let get = |f: fn(&ErrorTriple) -> f64| levels.iter().map(|l| f(&l.errors)).collect::<Vec<_>>();
    let (l2, h1, en) = (get(|e| e.l2), get(|e| e.h1_broken), get(|e| e.energy));
    let mut pairwise = vec![Rates::default()];
    for i in 1..levels.len() {
        pairwise.push(Rates {
            l2: pair_rate(h[i - 1], h[i], l2[i - 1], l2[i]),
            h1: pair_rate(h[i - 1], h[i], h1[i - 1], h1[i]),
            energy: pair_rate(h[i - 1], h[i], en[i - 1], en[i]),
        });
    }
    let mut excluded = Vec::new();
    for (name, e) in [("l2", &l2), ("h1", &h1), ("energy", &en)] {
        for (i, v) in e.iter().enumerate() {
            if !(*v > 0.0 && v.is_finite()) {
                excluded.push((i, name.to_string()));
            }
        }
    }
    Ok(ConvergenceReport {
        fitted: Rates {
            l2: fit_slope(&h, &l2),
            h1: fit_slope(&h, &h1),
            energy: fit_slope(&h, &en),
        },
        pairwise,
        excluded,
        levels,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    h: f64,
    cells: usize,
    dofs: usize,
    #[serde(rename = "e_L2")]
    e_l2: f64,
    #[serde(rename = "e_H1")]
    e_h1: f64,
    e_energy: f64,
    #[serde(rename = "rate_L2")]
    rate_l2: Option<f64>,
    #[serde(rename = "rate_H1")]
    rate_h1: Option<f64>,
    rate_energy: Option<f64>,
    iters: usize,
}

impl ConvergenceReport {
    /// CSV with one row per level; the rate columns hold pairwise rates.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (l, r) in self.levels.iter().zip(&self.pairwise) {
            w.serialize(CsvRow {
                h: l.h,
                cells: l.cells,
                dofs: l.dofs,
                e_l2: l.errors.l2,
                e_h1: l.errors.h1_broken,
                e_energy: l.errors.energy,
                rate_l2: r.l2,
                rate_h1: r.h1,
                rate_energy: r.energy,
                iters: l.iterations,
            })
            .expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
    }

    /// Parses a report written by [`to_csv`](Self::to_csv); rates are refitted from the errors.
    pub fn from_csv(text: &str) -> Result<ConvergenceReport> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut levels = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            levels.push(Level {
                h: row.h,
                cells: row.cells,
                dofs: row.dofs,
                errors: ErrorTriple {
                    l2: row.e_l2,
                    h1_broken: row.e_h1,
                    energy: row.e_energy,
                },
                iterations: row.iters,
            });
        }
        fit_rates(levels)
    }
}

/// Discrete inverse-inequality constant of one cell: `h_K sqrt(λ_max)` with
/// `λ_max` the largest eigenvalue of the local stiffness matrix relative to
/// the local mass matrix, found by power iteration.
pub fn inverse_constant(mesh: &Mesh, cell: usize, degree: usize) -> Result<f64> {
    let basis = LocalBasis::new(mesh, cell, degree)?;
    if degree == 0 {
        return Ok(0.0);
    }
    let (mass, stiff) = basis.mass_and_stiffness(mesh, 2 * degree)?;
    let chol = mass.cholesky().ok_or(Error::SingularMass(cell))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::SingularMass(cell))?;
    // Symmetric form L^{-1} K L^{-T} shares the generalized spectrum.
    let b = &linv * &stiff * linv.transpose();
    let n = b.nrows();
    let mut x = DVector::from_fn(n, |i, _| 1.0 / (i as f64 + 1.0));
    x /= x.norm();
    const MAX_ITER: usize = 100_000;
    const TOL: f64 = 1e-10;
    for _ in 0..MAX_ITER {
        let y = &b * &x;
        let lambda = x.dot(&y);
        let res = (&y - &x * lambda).norm();
        if res <= TOL * lambda.abs() {
            return Ok(mesh.cells[cell].diameter * lambda.sqrt());
        }
        let ny = y.norm();
        if ny == 0.0 || !ny.is_finite() {
            return Err(Error::Stagnation(0));
        }
        x = y / ny;
    }
    Err(Error::Stagnation(MAX_ITER))
}

/// Lower bound on the penalty for coercivity: `(1+δ)^2 C_T (1+C_I)^2 / (4 (1-C)^2)`.
pub fn penalty_threshold(c_t: f64, c_i: f64, delta: Delta, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("C must lie in (0, 1), got {c}")));
    }
    if c_t.is_nan() || c_t <= 0.0 || c_i.is_nan() || c_i < 0.0 {
        return Err(Error::InvalidParameter("C_T must be positive and C_I non-negative".into()));
    }
    let one_plus = 1.0 + delta.value();
    let c1 = c_t * (1.0 + c_i).powi(2);
    Ok(one_plus * one_plus * c1 / (4.0 * (1.0 - c) * (1.0 - c)))
}

/// Default trace constant used when none is supplied.
pub const DEFAULT_TRACE_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub per_cell_inverse: Vec<f64>,
    pub inverse_max: f64,
    pub trace_constant: f64,
    pub c1: f64,
    pub delta: Delta,
    pub c: f64,
    /// Heuristic: the trace constant is supplied, not computed.
    pub alpha_min: f64,
}

impl ConstantsReport {
    pub fn compute(mesh: &Mesh, degree: usize, trace_constant: f64, delta: Delta, c: f64) -> Result<Self> {
        let per_cell_inverse = (0..mesh.num_cells())
            .map(|k| inverse_constant(mesh, k, degree))
            .collect::<Result<Vec<_>>>()?;
        let inverse_max = per_cell_inverse.iter().copied().fold(0.0, f64::max);
        let alpha_min = penalty_threshold(trace_constant, inverse_max, delta, c)?;
        Ok(ConstantsReport {
            per_cell_inverse,
            inverse_max,
            trace_constant,
            c1: trace_constant * (1.0 + inverse_max).powi(2),
            delta,
            c,
            alpha_min,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::poly_space::l2_project;
    use crate::problems::Problem;

    fn square(s: f64) -> Mesh {
        let v = vec![Point::new(0., 0.), Point::new(s, 0.), Point::new(s, s), Point::new(0., s)];
        build_mesh(v, vec![vec![0, 1, 2, 3]]).unwrap()
    }

    fn level(h: f64, l2: f64, h1: f64) -> Level {
        Level {
            h,
            cells: 0,
            dofs: 0,
            errors: ErrorTriple { l2, h1_broken: h1, energy: h1 },
            iterations: 0,
        }
    }

    #[test]
    fn simple_rate() {
        let r = fit_rates(vec![level(0.1, 0.1, 0.1), level(0.05, 0.025, 0.05)]).unwrap();
        assert!((r.fitted.l2.unwrap() - 2.0).abs() < 1e-14);
        assert!((r.pairwise[1].h1.unwrap() - 1.0).abs() < 1e-14);
        assert!(r.pairwise[0].l2.is_none());
    }

    #[test]
    fn reference_rate_tables() {
        let h: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0].iter().map(|n| 1.0 / n).collect();
        let t1_h1 = [1.2006, 0.5904, 0.2917, 0.1452, 0.0725];
        let t2_l2 = [0.0461, 0.0129, 0.0034, 0.0009, 0.0002];
        assert!((fit_slope(&h, &t1_h1).unwrap() - 1.0124).abs() < 1e-3);
        // The last entries carry one significant digit, so the fit only
        // reproduces the reference rate loosely.
        assert!((fit_slope(&h, &t2_l2).unwrap() - 1.9393).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(matches!(fit_rates(vec![level(0.1, 1.0, 1.0)]), Err(Error::TooFewLevels(2))));
        assert!(matches!(
            fit_rates(vec![level(0.1, 1.0, 1.0), level(0.1, 0.5, 0.5)]),
            Err(Error::LevelOrder)
        ));
    }

    #[test]
    fn zero_error_is_excluded() {
        let r = fit_rates(vec![level(0.1, 0.1, 0.1), level(0.05, 0.0, 0.05), level(0.025, 0.00625, 0.025)]).unwrap();
        assert!(r.excluded.contains(&(1, "l2".to_string())));
        assert!((r.fitted.l2.unwrap() - 2.0).abs() < 1e-12);
        assert!(r.pairwise[1].l2.is_none());
    }

    #[test]
    fn csv_round_trip() {
        let r = fit_rates(vec![level(0.1, 0.1, 0.3), level(0.05, 0.026, 0.149), level(0.025, 0.0066, 0.075)]).unwrap();
        let text = r.to_csv();
        assert!(text.starts_with("h,cells,dofs,e_L2,e_H1,e_energy,rate_L2,rate_H1,rate_energy,iters\n"));
        assert_eq!(ConvergenceReport::from_csv(&text).unwrap(), r);
    }

    #[test]
    fn zero_approximation_errors() {
        let m = crate::mesh::generate_hybrid(4).unwrap();
        let z = DiscreteFunction::zero(&m, 1).unwrap();
        let e = errors(&z, &Problem::Paper, 10.0).unwrap();
        assert!((e.l2 - 0.5).abs() < 1e-3, "{}", e.l2);
        // |u|_1^2 = (2 pi)^2 / 2
        assert!((e.h1_broken - std::f64::consts::PI * 2f64.sqrt()).abs() < 2e-2, "{}", e.h1_broken);
        let n = norm_parts(&z).unwrap();
        assert_eq!(n, NormParts::default());
    }

    #[test]
    fn polynomial_reproduction() {
        let m = crate::mesh::generate_dual_hex(3).unwrap();
        let u = Problem::Linear { c: 0.3, a: 1.0, b: -2.0 };
        let p = l2_project(|q| u.value(q), &m, 1).unwrap();
        let e = errors(&p, &u, 10.0).unwrap();
        assert!(e.l2 < 1e-12 && e.h1_broken < 1e-12 && e.energy < 1e-11, "{e:?}");
    }

    #[test]
    fn inverse_constant_unit_square() {
        assert_eq!(inverse_constant(&square(1.0), 0, 0).unwrap(), 0.0);
        let c = inverse_constant(&square(1.0), 0, 1).unwrap();
        assert!((c - 24f64.sqrt()).abs() < 1e-8, "{c}");
        let c2 = inverse_constant(&square(0.5), 0, 1).unwrap();
        assert!((c - c2).abs() < 1e-10);
    }

    #[test]
    fn threshold_examples() {
        // C_T (1 + C_I)^2 = 10 with C_T = 10, C_I = 0
        assert!((penalty_threshold(10.0, 0.0, Delta::Symmetric, 0.5).unwrap() - 40.0).abs() < 1e-12);
        assert_eq!(penalty_threshold(10.0, 3.0, Delta::Nonsymmetric, 0.3).unwrap(), 0.0);
        assert!((penalty_threshold(10.0, 0.0, Delta::Incomplete, 0.5).unwrap() - 10.0).abs() < 1e-12);
        assert!(penalty_threshold(10.0, 0.0, Delta::Symmetric, 1.0).is_err());
        assert!(penalty_threshold(10.0, 0.0, Delta::Symmetric, 0.0).is_err());
        let a = penalty_threshold(1.0, 2.0, Delta::Symmetric, 0.5).unwrap();
        assert!(penalty_threshold(1.0, 2.5, Delta::Symmetric, 0.5).unwrap() > a);
        assert!(penalty_threshold(1.0, 2.0, Delta::Symmetric, 0.9).unwrap() > a);
    }

    #[test]
    fn constants_report() {
        let m = crate::mesh::generate_dual_hex(4).unwrap();
        let r = ConstantsReport::compute(&m, 1, DEFAULT_TRACE_CONSTANT, Delta::Symmetric, 0.5).unwrap();
        assert_eq!(r.per_cell_inverse.len(), 25);
        assert!(r.per_cell_inverse.iter().all(|&c| c > 0.0));
        assert!((r.c1 - 10.0 * (1.0 + r.inverse_max).powi(2)).abs() < 1e-9);
    }
}
