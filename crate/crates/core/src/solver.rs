//! Sparse SPD storage and the per-color linear solves.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::divfree::{assemble_load, assemble_stiffness, DivFreeCoefficients};
use crate::mesh::{SquareColor, SquareMesh};
use crate::nc_space::NcVectorField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, right-hand side has length {rhs}")]
    DimensionMismatch { matrix: usize, rhs: usize },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {relative_residual:e}, tolerance {tolerance:e})")]
    NotConverged { iterations: usize, relative_residual: f64, tolerance: f64 },
    #[error("Cholesky factorization failed: matrix of dimension {dimension} is not positive definite")]
    NotPositiveDefinite { dimension: usize },
    #[error("dense Cholesky limited to dimension {limit}, got {dimension}")]
    TooLargeForDense { dimension: usize, limit: usize },
    #[error("solver tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("non-positive diagonal entry {value} in row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },
}

/// Symmetric matrix in compressed sparse row form with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpdMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    /// Builds from per-row `(column, value)` lists. Columns within a row are
    /// sorted; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < dim);
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Every stored value equals its transpose partner exactly.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Coordinate text format `row col value`, 0-based, row-major.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Jacobi-preconditioned conjugate gradient.
    #[default]
    ConjugateGradient,
    DenseCholesky,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual `‖Kx − b‖ / ‖b‖` at which CG stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Solve the red and black systems on two threads.
    pub concurrent_colors: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::ConjugateGradient,
            tolerance: 1e-10,
            max_iterations: 200_000,
            concurrent_colors: false,
        }
    }
}

pub const DENSE_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_residual(k: &SparseSpdMatrix, x: &[f64], b: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let r: f64 = kx.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    let nb = dot(b, b).sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Solves `K x = b` for one color block.
pub fn solve_color(
    k: &SparseSpdMatrix,
    b: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    if k.dim() != b.len() {
        return Err(SolverError::DimensionMismatch { matrix: k.dim(), rhs: b.len() });
    }
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(SolverError::InvalidTolerance(config.tolerance));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; b.len()], SolveReport::default()));
    }
    match config.method {
        SolverMethod::ConjugateGradient => conjugate_gradient(k, b, config.tolerance, config.max_iterations),
        SolverMethod::DenseCholesky => dense_cholesky(k, b),
    }
}

fn conjugate_gradient(
    k: &SparseSpdMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let n = k.dim();
    let mut inv_diag = Vec::with_capacity(n);
    for (row, d) in k.diagonal().into_iter().enumerate() {
        if d.is_nan() || d <= 0.0 {
            return Err(SolverError::NonPositiveDiagonal { row, value: d });
        }
        inv_diag.push(1.0 / d);
    }

    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut kp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;

    for it in 1..=max_iterations {
        k.mul_vec_into(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if pkp.is_nan() || pkp <= 0.0 {
            return Err(SolverError::NotPositiveDefinite { dimension: n });
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tolerance {
            // The recursive residual drifts; confirm against the true one.
            let true_rel = relative_residual(k, &x, b);
            if true_rel <= tolerance {
                return Ok((x, SolveReport { iterations: it, relative_residual: true_rel }));
            }
            for (ri, (kxi, bi)) in r.iter_mut().zip(k.mul_vec(&x).iter().zip(b)) {
                *ri = bi - kxi;
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NotConverged { iterations: max_iterations, relative_residual: rel, tolerance })
}

fn dense_cholesky(k: &SparseSpdMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let n = k.dim();
    if n > DENSE_LIMIT {
        return Err(SolverError::TooLargeForDense { dimension: n, limit: DENSE_LIMIT });
    }
    let chol = k.to_dense().cholesky().ok_or(SolverError::NotPositiveDefinite { dimension: n })?;
    let x = chol.solve(&DVector::from_column_slice(b));
    let x: Vec<f64> = x.iter().copied().collect();
    let rel = relative_residual(k, &x, b);
    Ok((x, SolveReport { iterations: 1, relative_residual: rel }))
}

/// Velocity from the divergence-free formulation together with the
/// per-color solver reports.
#[derive(Clone, Debug)]
pub struct VelocitySolution<'m> {
    pub coeffs: DivFreeCoefficients<'m>,
    pub velocity: NcVectorField<'m>,
    pub red: SolveReport,
    pub black: SolveReport,
}

fn solve_one<F>(
    mesh: &SquareMesh,
    f: &F,
    color: SquareColor,
    quad_order: usize,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), crate::Error>
where
    F: Fn(f64, f64) -> [f64; 2] + Sync + ?Sized,
{
    let k = assemble_stiffness(mesh, color);
    let b = assemble_load(mesh, f, color, quad_order)?;
    Ok(solve_color(&k, &b, config)?)
}

/// Solves `(∇u_h, ∇v_h) = (f, v_h)` over the divergence-free subspace as two
/// independent color systems and expands the result.
pub fn solve_velocity<'m, F>(
    mesh: &'m SquareMesh,
    f: &F,
    quad_order: usize,
    config: &SolverConfig,
) -> Result<VelocitySolution<'m>, crate::Error>
where
    F: Fn(f64, f64) -> [f64; 2] + Sync + ?Sized,
{
    let ((red, red_report), (black, black_report)) = if config.concurrent_colors {
        std::thread::scope(|scope| {
            let black = scope.spawn(|| solve_one(mesh, f, SquareColor::Black, quad_order, config));
            let red = solve_one(mesh, f, SquareColor::Red, quad_order, config);
            let black = black.join().expect("black solve panicked");
            Ok::<_, crate::Error>((red?, black?))
        })?
    } else {
        (
            solve_one(mesh, f, SquareColor::Red, quad_order, config)?,
            solve_one(mesh, f, SquareColor::Black, quad_order, config)?,
        )
    };
    let coeffs = DivFreeCoefficients::from_blocks(mesh, red, black)?;
    let velocity = coeffs.expand();
    Ok(VelocitySolution { coeffs, velocity, red: red_report, black: black_report })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Laplacian, tridiagonal (−1, 2, −1).
    fn laplacian(n: usize) -> SparseSpdMatrix {
        SparseSpdMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut row = vec![(i, 2.0)];
                    if i > 0 {
                        row.push((i - 1, -1.0));
                    }
                    if i + 1 < n {
                        row.push((i + 1, -1.0));
                    }
                    row
                })
                .collect(),
        )
    }

    #[test]
    fn csr_basics() {
        let k = SparseSpdMatrix::from_rows(vec![vec![(1, 1.0), (0, 4.0), (1, 1.0)], vec![(0, 2.0), (1, 3.0)]]);
        assert_eq!(k.nnz(), 4);
        assert_eq!(k.get(0, 1), 2.0);
        assert!(k.is_symmetric());
        assert_eq!(k.mul_vec(&[1.0, 1.0]), vec![6.0, 5.0]);
        assert_eq!(k.to_coordinate_text(), "0 0 4e0\n0 1 2e0\n1 0 2e0\n1 1 3e0\n");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let k = laplacian(5);
        for method in [SolverMethod::ConjugateGradient, SolverMethod::DenseCholesky] {
            let cfg = SolverConfig { method, ..Default::default() };
            let (x, _) = solve_color(&k, &[0.0; 5], &cfg).unwrap();
            assert_eq!(x, vec![0.0; 5]);
        }
        let empty = SparseSpdMatrix::from_rows(vec![]);
        assert!(solve_color(&empty, &[], &SolverConfig::default()).unwrap().0.is_empty());
    }

    #[test]
    fn cg_and_cholesky_agree() {
        let k = laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let (x_cg, rep) = solve_color(&k, &b, &SolverConfig::default()).unwrap();
        assert!(rep.relative_residual <= 1e-10);
        let cfg = SolverConfig { method: SolverMethod::DenseCholesky, ..Default::default() };
        let (x_ch, _) = solve_color(&k, &b, &cfg).unwrap();
        for (a, c) in x_cg.iter().zip(&x_ch) {
            assert!((a - c).abs() < 1e-8);
        }
    }

    #[test]
    fn errors_carry_diagnostics() {
        let k = laplacian(100);
        let b = vec![1.0; 100];
        let cfg = SolverConfig { max_iterations: 3, ..Default::default() };
        assert!(matches!(solve_color(&k, &b, &cfg), Err(SolverError::NotConverged { iterations: 3, .. })));

        let indefinite = SparseSpdMatrix::from_rows(vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 2.0), (1, 1.0)]]);
        let cfg = SolverConfig { method: SolverMethod::DenseCholesky, ..Default::default() };
        assert_eq!(
            solve_color(&indefinite, &[1.0, 0.0], &cfg),
            Err(SolverError::NotPositiveDefinite { dimension: 2 })
        );
        assert!(matches!(
            solve_color(&k, &[1.0; 3], &SolverConfig::default()),
            Err(SolverError::DimensionMismatch { matrix: 100, rhs: 3 })
        ));
        let cfg = SolverConfig { tolerance: 0.0, ..Default::default() };
        assert_eq!(solve_color(&k, &b, &cfg), Err(SolverError::InvalidTolerance(0.0)));
    }
}
