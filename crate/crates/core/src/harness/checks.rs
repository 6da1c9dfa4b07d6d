//! Quick self-checks of the discretization, cheap enough to run from the CLI.

use crate::divfree::{assemble_curl_form, assemble_stiffness, assemble_stiffness_by_integration};
use crate::harness::ManufacturedCase;
use crate::mesh::{Mask, SquareColor, SquareMesh};
use crate::oracle::{divergence_rank, solve_mixed};
use crate::pressure::recover_pressure;
use crate::solver::{solve_velocity, SolverConfig};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

type Check = fn() -> Result<CheckOutcome, Error>;

pub const L_SHAPE: &str = "11110000\n11110000\n11110000\n11110000\n11111111\n11111111\n11111111\n11111111";

fn max_matrix_gap(mesh: &SquareMesh) -> f64 {
    let mut gap = 0.0f64;
    for color in SquareColor::BOTH {
        let k = assemble_stiffness(mesh, color).to_dense();
        for other in [assemble_stiffness_by_integration(mesh, color), assemble_curl_form(mesh, color)] {
            gap = gap.max((&k - other.to_dense()).abs().max());
        }
    }
    gap
}

fn stencil_check() -> Result<CheckOutcome, Error> {
    let mut gap = 0.0f64;
    for n in [4, 8] {
        gap = gap.max(max_matrix_gap(&SquareMesh::build_rectangular(n, n, 1.0 / n as f64)?));
    }
    gap = gap.max(max_matrix_gap(&SquareMesh::build_masked(&L_SHAPE.parse::<Mask>()?, 0.125)?));
    Ok(outcome("stencil", gap < 1e-12, format!("max |stencil - integrated| = {gap:.2e}")))
}

fn counting_check() -> Result<CheckOutcome, Error> {
    let mut ok = true;
    let mut detail = Vec::new();
    for mesh in [SquareMesh::build_rectangular(8, 8, 0.125)?, SquareMesh::build_masked(&L_SHAPE.parse::<Mask>()?, 0.125)?] {
        let c = mesh.counts();
        let r = divergence_rank(&mesh);
        let fine = c.euler_identity_holds()
            && c.edge_identity_holds()
            && r.rank == mesh.n_squares() - 2
            && r.nullity == mesh.n_interior_squares();
        ok &= fine;
        detail.push(format!("{}x{}: rank {} nullity {}", mesh.nx(), mesh.ny(), r.rank, r.nullity));
    }
    Ok(outcome("counting", ok, detail.join("; ")))
}

fn oracle_check() -> Result<CheckOutcome, Error> {
    let mesh = SquareMesh::build_rectangular(8, 8, 0.125)?;
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let cfg = SolverConfig { tolerance: 1e-13, ..Default::default() };
    let sol = solve_velocity(&mesh, &f, 3, &cfg)?;
    let p = recover_pressure(&mesh, &sol.velocity, &f, None, 3)?;
    let mixed = solve_mixed(&mesh, &f, 3)?;
    let du = sol
        .velocity
        .x
        .coeffs()
        .iter()
        .chain(sol.velocity.y.coeffs())
        .zip(mixed.velocity.x.coeffs().iter().chain(mixed.velocity.y.coeffs()))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let dp = p.values().iter().zip(mixed.pressure.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(outcome("oracle", du < 1e-8 && dp < 1e-8, format!("8x8 max velocity gap {du:.2e}, pressure gap {dp:.2e}")))
}

fn divergence_check() -> Result<CheckOutcome, Error> {
    let mesh = SquareMesh::build_masked(&L_SHAPE.parse::<Mask>()?, 0.125)?;
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let sol = solve_velocity(&mesh, &f, 3, &SolverConfig::default())?;
    let d = sol.velocity.div_h().max_abs();
    Ok(outcome("divergence", d < 1e-12, format!("L-shape max |div_h u_h| = {d:.2e}")))
}

/// Runs every check; an error in one check is reported as its failure.
pub fn run_all() -> Vec<CheckOutcome> {
    let checks: [(&'static str, Check); 4] = [
        ("stencil", stencil_check),
        ("counting", counting_check),
        ("oracle", oracle_check),
        ("divergence", divergence_check),
    ];
    checks
        .into_iter()
        .map(|(name, check)| check().unwrap_or_else(|e| outcome(name, false, e.to_string())))
        .collect()
}
