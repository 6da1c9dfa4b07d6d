use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use nc_divfree::divfree::assemble_stiffness;
use nc_divfree::harness::{self, checks, ManufacturedCase, StudyConfig};
use nc_divfree::mesh::{Mask, SquareColor, SquareMesh};
use nc_divfree::oracle::solve_mixed;
use nc_divfree::pressure::recover_pressure;
use nc_divfree::solver::{solve_velocity, SolverConfig, SolverError, SolverMethod};
use nc_divfree::Error;

/// Divergence-free P1-nonconforming Stokes solver on square meshes.
#[derive(Parser, Debug)]
#[command(name = "ncdf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Cg,
    Dense,
}

impl From<SolverArg> for SolverMethod {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Cg => SolverMethod::ConjugateGradient,
            SolverArg::Dense => SolverMethod::DenseCholesky,
        }
    }
}

#[derive(clap::Args, Debug)]
struct SolverOpts {
    #[arg(long, value_enum, default_value = "cg")]
    solver: SolverArg,
    /// Relative residual tolerance for CG.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
}

impl SolverOpts {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            method: self.solver.into(),
            tolerance: self.tol,
            max_iterations: self.max_iters,
            ..Default::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the benchmark forcing on one mesh.
    Solve {
        #[arg(long, default_value_t = 8)]
        nx: usize,
        #[arg(long, default_value_t = 8)]
        ny: usize,
        /// Mask file ('1' present, '0' absent, top row first); overrides nx/ny.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Mesh spacing; defaults to 1/max(nx, ny).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        origin_x: f64,
        #[arg(long, default_value_t = 0.0)]
        origin_y: f64,
        #[command(flatten)]
        solver: SolverOpts,
        /// Gauss points per direction for load integrals.
        #[arg(long, default_value_t = 3)]
        quad: usize,
        /// Write pressure, velocity and stiffness matrices into this directory.
        #[arg(long)]
        dump_fields: Option<PathBuf>,
        /// Cross-check against the dense mixed solve.
        #[arg(long)]
        oracle: bool,
    },
    /// Convergence table for the benchmark on the unit square.
    Converge {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        levels: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverOpts,
    },
    /// Run the invariant checks on small meshes.
    Check,
}

/// Largest mesh the dense oracle is allowed to touch.
const ORACLE_LIMIT: usize = 1200;

enum Failure {
    Validation(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(SolverError::InvalidTolerance(_)) => Failure::Validation(e.into()),
            Error::Solver(_) | Error::SingularSystem => Failure::Solver(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.into())
    }
}

fn build_mesh(
    nx: usize,
    ny: usize,
    mask: Option<&Path>,
    h: Option<f64>,
    origin: [f64; 2],
) -> Result<SquareMesh, Failure> {
    let mask = match mask {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading mask {}", path.display()))
                .map_err(Failure::Validation)?;
            Some(text.parse::<Mask>().map_err(Error::from)?)
        }
        None => None,
    };
    let (nx, ny) = mask.as_ref().map_or((nx, ny), |m| (m.nx(), m.ny()));
    let h = h.unwrap_or(1.0 / nx.max(ny).max(1) as f64);
    let mesh = match mask {
        Some(m) => SquareMesh::build_masked_at(&m, h, origin),
        None if origin == [0.0, 0.0] => SquareMesh::build_rectangular(nx, ny, h),
        None => SquareMesh::build_masked_at(&Mask::full(nx, ny), h, origin),
    };
    Ok(mesh.map_err(Error::from)?)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    nx: usize,
    ny: usize,
    mask: Option<&Path>,
    h: Option<f64>,
    origin: [f64; 2],
    config: SolverConfig,
    quad: usize,
    dump: Option<&Path>,
    oracle: bool,
) -> Result<(), Failure> {
    let mesh = build_mesh(nx, ny, mask, h, origin)?;
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let dims = harness::dimensions(&mesh);
    println!(
        "mesh {}x{} h={} squares={} interior vertices={} red={} black={} full={}",
        mesh.nx(),
        mesh.ny(),
        mesh.h(),
        mesh.n_squares(),
        mesh.n_interior_vertices(),
        dims.red,
        dims.black,
        dims.full
    );

    let sol = solve_velocity(&mesh, &f, quad, &config)?;
    let p = recover_pressure(&mesh, &sol.velocity, &f, None, quad).map_err(Error::from)?;
    println!(
        "red: {} iterations, residual {:.3e}; black: {} iterations, residual {:.3e}",
        sol.red.iterations, sol.red.relative_residual, sol.black.iterations, sol.black.relative_residual
    );
    println!(
        "|u_h|_1,h = {:.6e}  max|div_h u_h| = {:.3e}  pressure means red {:.3e} black {:.3e}",
        sol.velocity.seminorm_1h(),
        sol.velocity.div_h().max_abs(),
        p.red_mean(),
        p.black_mean()
    );
    let unit_square = mesh.is_full_rectangle()
        && mesh.origin() == [0.0, 0.0]
        && (mesh.nx() as f64 * mesh.h() - 1.0).abs() < 1e-12
        && (mesh.ny() as f64 * mesh.h() - 1.0).abs() < 1e-12;
    if unit_square {
        let e = harness::error_norms(&mesh, &sol.velocity, &p.pressure, &case, 4);
        println!(
            "errors: u L2 {}  u H1 {}  p L2 {}",
            harness::sci(e.u_l2),
            harness::sci(e.u_h1),
            harness::sci(e.p_l2)
        );
    }

    if oracle {
        if dims.full > ORACLE_LIMIT {
            return Err(Failure::Validation(anyhow::anyhow!(
                "--oracle is limited to meshes with at most {ORACLE_LIMIT} unknowns (this one has {})",
                dims.full
            )));
        }
        let mixed = solve_mixed(&mesh, &f, quad)?;
        let mut diff = sol.velocity.clone();
        diff.axpy(-1.0, &mixed.velocity).map_err(Error::from)?;
        let dp = p
            .values()
            .iter()
            .zip(mixed.pressure.values())
            .map(|(a, b)| (a - b) * (a - b) * mesh.h() * mesh.h())
            .sum::<f64>()
            .sqrt();
        println!("oracle: |u_h - u_mixed|_1,h = {:.3e}  ||p_h - p_mixed||_0 = {:.3e}", diff.seminorm_1h(), dp);
    }

    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("pressure.txt"), p.pressure.dump())?;
        fs::write(dir.join("velocity.txt"), sol.velocity.dump())?;
        fs::write(dir.join("divergence.txt"), sol.velocity.div_h().dump())?;
        for (color, name) in [(SquareColor::Red, "red"), (SquareColor::Black, "black")] {
            fs::write(dir.join(format!("matrix_{name}.txt")), assemble_stiffness(&mesh, color).to_coordinate_text())?;
        }
        println!("fields written to {}", dir.display());
    }
    Ok(())
}

fn converge(levels: &[usize], out: Option<&Path>, config: SolverConfig) -> Result<(), Failure> {
    let study = StudyConfig { solver: config, ..Default::default() };
    let rows = harness::convergence_study(levels, &study)?;
    let csv = harness::to_csv(&rows);
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve { nx, ny, mask, h, origin_x, origin_y, solver, quad, dump_fields, oracle } => solve(
            nx,
            ny,
            mask.as_deref(),
            h,
            [origin_x, origin_y],
            solver.config(),
            quad,
            dump_fields.as_deref(),
            oracle,
        ),
        Command::Converge { levels, out, solver } => converge(&levels, out.as_deref(), solver.config()),
        Command::Check => {
            let outcomes = checks::run_all();
            for c in &outcomes {
                println!("{c}");
            }
            return if outcomes.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
