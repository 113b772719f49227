use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use ipdg::plot::loglog_svg;
use ipdg::solver::DEFAULT_TOLERANCE;
use ipdg::study::{run_convergence_with, solve_problem, ResultFile};
use ipdg::{audit_shape, DGParams, Error, Family, Mesh, Problem, StudyConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "ipdg", version, about = "Interior penalty DG solver for the Poisson problem on polygonal meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Hybrid,
    Dualhex,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Hybrid => Family::Hybrid,
            FamilyArg::Dualhex => Family::DualHex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    /// u = sin(2 pi x) cos(2 pi y), nonhomogeneous boundary data
    Paper,
    /// u = sin(2 pi x) sin(2 pi y), homogeneous boundary data
    Sinsin,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Problem {
        match p {
            ProblemArg::Paper => Problem::Paper,
            ProblemArg::Sinsin => Problem::SinSin,
        }
    }
}

#[derive(clap::Args)]
struct DgArgs {
    /// Polynomial degree on every cell
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// 1 (SIPG), 0 (IIPG) or -1 (NIPG)
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    delta: i32,
    /// Penalty parameter
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "paper")]
    problem: ProblemArg,
    /// Relative residual tolerance
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
}

impl DgArgs {
    fn params(&self) -> Result<DGParams, Error> {
        DGParams::new(self.delta, self.alpha, self.degree)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh as JSON
    Generate {
        #[arg(value_enum)]
        family: FamilyArg,
        n: usize,
        out: PathBuf,
    },
    /// Solve one manufactured problem and write the result JSON
    Solve {
        mesh: PathBuf,
        #[command(flatten)]
        dg: DgArgs,
        out: PathBuf,
    },
    /// Run a convergence study over mesh levels `n`, coarsest first
    Convergence {
        #[arg(value_enum)]
        family: FamilyArg,
        #[arg(required = true, num_args = 2..)]
        levels: Vec<usize>,
        #[command(flatten)]
        dg: DgArgs,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
    /// Audit mesh shape regularity and write the report JSON
    Audit { mesh: PathBuf, out: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn solver(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: e.to_string(),
        }
    }
}

fn classify(e: Error) -> Failure {
    match e {
        Error::NotPositiveDefinite | Error::NotConverged { .. } | Error::SingularBlock(_) => Failure::solver(e),
        _ => Failure::usage(e),
    }
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let name = path.file_name().ok_or_else(|| Failure::usage(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let res = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    res.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Failure::usage(format!("{}: {e}", path.display()))
    })
}

fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    Mesh::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { family, n, out } => {
            let mesh = Family::from(family).generate(n).map_err(classify)?;
            let json = mesh.to_json_string();
            write_atomic(&out, json.as_bytes())?;
            println!(
                "cells {}  interfaces {} ({} boundary)  h {:.6}",
                mesh.num_cells(),
                mesh.interfaces.len(),
                mesh.boundary_count(),
                mesh.h
            );
        }
        Command::Solve { mesh, dg, out } => {
            let mesh = load_mesh(&mesh)?;
            let params = dg.params().map_err(classify)?;
            let problem = Problem::from(dg.problem);
            let outcome = solve_problem(&mesh, &params, &problem, dg.tol).map_err(classify)?;
            let file = ResultFile::new(&mesh, &params, &problem, dg.tol, &outcome);
            let json = serde_json::to_string_pretty(&file).map_err(Failure::usage)?;
            write_atomic(&out, json.as_bytes())?;
            let r = &outcome.report;
            println!(
                "{:?}: {} iterations, relative residual {:.3e}",
                r.method, r.iterations, r.relative_residual
            );
            let e = &outcome.errors;
            println!("e_L2 {:.6e}  e_H1 {:.6e}  e_energy {:.6e}", e.l2, e.h1_broken, e.energy);
            if !r.converged {
                return Err(Failure::solver(format!(
                    "solver did not converge (relative residual {:.3e}); report written",
                    r.relative_residual
                )));
            }
        }
        Command::Convergence {
            family,
            levels,
            dg,
            csv,
            svg,
        } => {
            let family = Family::from(family);
            let mut cfg = StudyConfig::new(family, levels, dg.params().map_err(classify)?, dg.problem.into());
            cfg.tol = dg.tol;
            let header = std::sync::Once::new();
            let report = run_convergence_with(&cfg, |n, l| {
                header.call_once(|| {
                    println!(
                        "{:>6} {:>10} {:>9} {:>12} {:>12} {:>12} {:>6}",
                        "n", "h", "dofs", "e_L2", "e_H1", "e_energy", "iters"
                    )
                });
                println!(
                    "{n:>6} {:>10.4e} {:>9} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
                    l.h, l.dofs, l.errors.l2, l.errors.h1_broken, l.errors.energy, l.iterations
                );
            })
            .map_err(classify)?;
            let rate = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.4}"));
            println!(
                "fitted rates: L2 {}  H1 {}  energy {}",
                rate(report.fitted.l2),
                rate(report.fitted.h1),
                rate(report.fitted.energy)
            );
            write_atomic(&csv, report.to_csv().as_bytes())?;
            let title = format!("{} meshes, degree {}, delta {}, alpha {}", family.name(), dg.degree, dg.delta, dg.alpha);
            write_atomic(&svg, loglog_svg(&report, &title).as_bytes())?;
        }
        Command::Audit { mesh, out } => {
            let mesh = load_mesh(&mesh)?;
            let report = audit_shape(&mesh);
            let json = serde_json::to_string_pretty(&report).map_err(Failure::usage)?;
            write_atomic(&out, json.as_bytes())?;
            println!(
                "rho_v {:.4}  kappa {:.4}  sigma* {:.4}  theta0 {:.4}",
                report.rho_v, report.kappa, report.sigma_star, report.theta0
            );
            for w in &report.warnings {
                println!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
