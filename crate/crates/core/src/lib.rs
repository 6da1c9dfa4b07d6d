//! Locally divergence-free P1-nonconforming finite elements on square meshes.
//!
//! The Stokes velocity is found in the divergence-free subspace spanned by
//! square-centered basis functions, which decouples into one SPD system for
//! the red interior squares and one for the black. The pressure is then
//! recovered square by square with an explicit telescoping sweep.
//!
//! ```
//! use nc_divfree::{harness::ManufacturedCase, mesh::SquareMesh, pressure, solver};
//!
//! let mesh = SquareMesh::build_rectangular(8, 8, 1.0 / 8.0).unwrap();
//! let case = ManufacturedCase::reference();
//! let f = |x: f64, y: f64| case.forcing(x, y);
//! let sol = solver::solve_velocity(&mesh, &f, 3, &solver::SolverConfig::default()).unwrap();
//! assert!(sol.velocity.div_h().max_abs() < 1e-10);
//! let p = pressure::recover_pressure(&mesh, &sol.velocity, &f, None, 3).unwrap();
//! assert!(p.red_mean().abs() < 1e-12);
//! ```

pub mod divfree;
pub mod harness;
pub mod mesh;
pub mod nc_space;
pub mod oracle;
pub mod pressure;
pub mod quadrature;
pub mod solver;

use thiserror::Error;

pub use mesh::{Cell, MeshError, SquareColor, SquareMesh};
pub use solver::SolverError;

/// Errors from field construction, assembly and pressure recovery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("vertex {0} is a boundary vertex")]
    BoundaryVertex(Cell),
    #[error("square {0} is not an interior square")]
    NotInteriorSquare(Cell),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("quadrature order must be at least 1, got {0}")]
    InvalidQuadratureOrder(usize),
    #[error("anchor square {square} is not {expected:?}")]
    AnchorColor { square: Cell, expected: SquareColor },
    #[error("square {0} was not reached by the pressure sweep")]
    UnreachableSquare(Cell),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("saddle-point system is singular")]
    SingularSystem,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
