//! Manufactured-solution solves and convergence studies over mesh families.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::analysis::{errors, fit_rates, ConvergenceReport, ErrorTriple, Level};
use crate::assembly::{assemble, DGParams};
use crate::error::{Error, Result};
use crate::mesh::{generate_dual_hex, generate_hybrid, Mesh};
use crate::poly_space::{dim_for_degree, DiscreteFunction};
use crate::problems::Problem;
use crate::solver::{default_max_iterations, solve, SolveReport, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hybrid,
    DualHex,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "hybrid" => Some(Family::Hybrid),
            "dualhex" => Some(Family::DualHex),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Hybrid => "hybrid",
            Family::DualHex => "dualhex",
        }
    }

    pub fn generate(self, n: usize) -> Result<Mesh> {
        match self {
            Family::Hybrid => generate_hybrid(n),
            Family::DualHex => generate_dual_hex(n),
        }
    }
}

pub struct Outcome<'m> {
    pub solution: DiscreteFunction<'m>,
    pub report: SolveReport,
    pub errors: ErrorTriple,
}

/// Assembles, solves and measures the error for one manufactured problem.
///
/// Solver breakdown (non-positive curvature) is returned as an error; running
/// out of iterations is not, check `report.converged`.
pub fn solve_problem<'m>(mesh: &'m Mesh, params: &DGParams, problem: &Problem, tol: f64) -> Result<Outcome<'m>> {
    let system = assemble(mesh, params, |p| problem.forcing(p), |p| problem.boundary(p))?;
    let mut report = solve(&system, tol, default_max_iterations(&system))?;
    let coeffs = std::mem::take(&mut report.solution);
    let solution = DiscreteFunction::from_coeffs(mesh, params.degree, coeffs)?;
    let errors = errors(&solution, problem, params.alpha)?;
    Ok(Outcome {
        solution,
        report,
        errors,
    })
}

/// Coefficient layout of a discrete solution: cell `k` owns entries
/// `k * dofs_per_cell .. (k + 1) * dofs_per_cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionData {
    pub degree: usize,
    pub cells: usize,
    pub dofs_per_cell: usize,
    pub basis: String,
    pub coefficients: Vec<f64>,
}

impl SolutionData {
    pub fn from_function(f: &DiscreteFunction) -> Self {
        SolutionData {
            degree: f.degree(),
            cells: f.mesh.num_cells(),
            dofs_per_cell: f.dofs.local_dim(),
            basis: "scaled monomials about the cell centroid, ordered by total degree then descending x-power".into(),
            coefficients: f.coeffs.clone(),
        }
    }

    /// Rebinds the coefficients to `mesh`, checking the layout header.
    pub fn to_function<'m>(&self, mesh: &'m Mesh) -> Result<DiscreteFunction<'m>> {
        if self.cells != mesh.num_cells() || self.dofs_per_cell != dim_for_degree(self.degree) {
            return Err(Error::Dimension("solution layout does not match the mesh".into()));
        }
        DiscreteFunction::from_coeffs(mesh, self.degree, self.coefficients.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub cells: usize,
    pub interfaces: usize,
    pub boundary_interfaces: usize,
    pub h: f64,
}

impl MeshSummary {
    pub fn of(mesh: &Mesh) -> Self {
        MeshSummary {
            cells: mesh.num_cells(),
            interfaces: mesh.interfaces.len(),
            boundary_interfaces: mesh.boundary_count(),
            h: mesh.h,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSummary {
    pub method: crate::solver::Method,
    pub iterations: usize,
    pub relative_residual: f64,
    pub iterated_residual: f64,
    pub converged: bool,
    pub tolerance: f64,
}

/// Contents of a result JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub params: DGParams,
    pub problem: String,
    pub mesh: MeshSummary,
    pub solver: SolverSummary,
    pub errors: ErrorTriple,
    pub solution: SolutionData,
}

impl ResultFile {
    pub fn new(mesh: &Mesh, params: &DGParams, problem: &Problem, tol: f64, out: &Outcome) -> Self {
        ResultFile {
            params: *params,
            problem: problem.name().into(),
            mesh: MeshSummary::of(mesh),
            solver: SolverSummary {
                method: out.report.method,
                iterations: out.report.iterations,
                relative_residual: out.report.relative_residual,
                iterated_residual: out.report.iterated_residual,
                converged: out.report.converged,
                tolerance: tol,
            },
            errors: out.errors,
            solution: SolutionData::from_function(&out.solution),
        }
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let r: ResultFile = serde_json::from_slice(bytes)?;
        r.params.validate()?;
        if r.solution.dofs_per_cell != dim_for_degree(r.solution.degree)
            || r.solution.coefficients.len() != r.solution.cells.saturating_mul(r.solution.dofs_per_cell)
        {
            return Err(Error::Parse("solution layout header disagrees with coefficient count".into()));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub family: Family,
    /// Mesh parameters `n`, coarsest first.
    pub levels: Vec<usize>,
    pub params: DGParams,
    pub problem: Problem,
    pub tol: f64,
}

impl StudyConfig {
    pub fn new(family: Family, levels: Vec<usize>, params: DGParams, problem: Problem) -> Self {
        StudyConfig {
            family,
            levels,
            params,
            problem,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

/// Runs generate, solve and measure for every level, then fits rates.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    run_convergence_with(cfg, |_, _| {})
}

/// Like [`run_convergence`], calling `progress` as each level finishes.
///
/// Levels run on up to `available_parallelism` worker threads; each level is
/// computed independently, so results do not depend on the thread count.
/// `progress` may be called out of level order.
pub fn run_convergence_with(cfg: &StudyConfig, progress: impl Fn(usize, &Level) + Sync) -> Result<ConvergenceReport> {
    if cfg.levels.len() < 2 {
        return Err(Error::TooFewLevels(2));
    }
    if cfg.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::LevelOrder);
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |p| p.get())
        .min(cfg.levels.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Level>>>> = cfg.levels.iter().map(|_| Mutex::new(None)).collect();
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= cfg.levels.len() {
            break;
        }
        // With several workers, finest levels first so the longest job starts earliest.
        let idx = if workers > 1 { cfg.levels.len() - 1 - i } else { i };
        let n = cfg.levels[idx];
        let res = run_level(cfg, n);
        if let Ok(level) = &res {
            progress(n, level);
        }
        *slots[idx].lock().unwrap_or_else(|e| e.into_inner()) = Some(res);
    };
    if workers <= 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    let levels = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every level is visited"))
        .collect::<Result<Vec<_>>>()?;
    fit_rates(levels)
}

fn run_level(cfg: &StudyConfig, n: usize) -> Result<Level> {
    let mesh = cfg.family.generate(n)?;
    let out = solve_problem(&mesh, &cfg.params, &cfg.problem, cfg.tol)?;
    if !out.report.converged {
        return Err(Error::NotConverged {
            level: n,
            residual: out.report.relative_residual,
        });
    }
    Ok(Level {
        h: mesh.h,
        cells: mesh.num_cells(),
        dofs: out.solution.dofs.total(),
        errors: out.errors,
        iterations: out.report.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_levels_rejected() {
        let cfg = StudyConfig::new(Family::DualHex, vec![4, 4], DGParams::default(), Problem::SinSin);
        assert!(matches!(run_convergence(&cfg), Err(Error::LevelOrder)));
        let cfg = StudyConfig::new(Family::DualHex, vec![4], DGParams::default(), Problem::SinSin);
        assert!(matches!(run_convergence(&cfg), Err(Error::TooFewLevels(2))));
    }

    #[test]
    fn result_file_round_trip() {
        let mesh = Family::DualHex.generate(4).unwrap();
        let params = DGParams::default();
        let out = solve_problem(&mesh, &params, &Problem::SinSin, 1e-10).unwrap();
        let file = ResultFile::new(&mesh, &params, &Problem::SinSin, 1e-10, &out);
        let text = serde_json::to_string(&file).unwrap();
        let back = ResultFile::from_json_slice(text.as_bytes()).unwrap();
        let f = back.solution.to_function(&mesh).unwrap();
        assert_eq!(f.coeffs, out.solution.coeffs);
        assert!(out.errors.energy >= out.errors.h1_broken);
    }
}
