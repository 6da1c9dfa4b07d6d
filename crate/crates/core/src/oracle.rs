//! Independent reference computations, deliberately naive.
//!
//! Nothing here uses the 13-point stencil, the color splitting or the
//! telescoping sweep: the Gram entries come from a midpoint-rule sum over
//! pointwise gradients, and the mixed velocity–pressure system is assembled
//! from the vertex hats and solved by dense LU.

use nalgebra::{DMatrix, DVector};

use crate::divfree::basis_function;
use crate::mesh::{Corner, SquareColor, SquareMesh};
use crate::nc_space::{LocalLinear, NcScalarField, NcVectorField, PiecewiseConstField};
use crate::quadrature::SquareRule;
use crate::{Error, FieldError};

/// `n × n` composite midpoint rule for `g(x, y)` over square `q`.
pub fn brute_quadrature(mesh: &SquareMesh, q: usize, n: usize, mut g: impl FnMut(f64, f64) -> f64) -> f64 {
    let h = mesh.h();
    let d = h / n as f64;
    let [cx, cy] = mesh.square_center(q);
    let (x0, y0) = (cx - 0.5 * h, cy - 0.5 * h);
    let mut sum = 0.0;
    for b in 0..n {
        for a in 0..n {
            sum += g(x0 + (a as f64 + 0.5) * d, y0 + (b as f64 + 0.5) * d);
        }
    }
    sum * d * d
}

/// Broken gradient of `u` at `(x, y)` inside square `q` by central
/// differences of the evaluated field.
fn fd_gradient(u: &NcVectorField<'_>, q: usize, x: f64, y: f64, eps: f64) -> [[f64; 2]; 2] {
    let px = u.eval_in_square(q, x + eps, y);
    let mx = u.eval_in_square(q, x - eps, y);
    let py = u.eval_in_square(q, x, y + eps);
    let my = u.eval_in_square(q, x, y - eps);
    let s = 0.5 / eps;
    [[(px[0] - mx[0]) * s, (py[0] - my[0]) * s], [(px[1] - mx[1]) * s, (py[1] - my[1]) * s]]
}

/// `(∇Ψ^Q, ∇Ψ^{Q'})` by `n × n` midpoint quadrature on every square of the
/// mesh, with finite-difference gradients of the expanded basis functions.
pub fn brute_gram_entry(mesh: &SquareMesh, q: usize, q2: usize, n: usize) -> Result<f64, FieldError> {
    let a = basis_function(mesh, q)?;
    let b = basis_function(mesh, q2)?;
    let eps = 1e-3 * mesh.h();
    let mut total = 0.0;
    for s in 0..mesh.n_squares() {
        let touches = |u: &NcVectorField<'_>| u.x.corner_coeffs(s).iter().chain(&u.y.corner_coeffs(s)).any(|&c| c != 0.0);
        if !(touches(&a) && touches(&b)) {
            continue;
        }
        total += brute_quadrature(mesh, s, n, |x, y| {
            let ga = fd_gradient(&a, s, x, y, eps);
            let gb = fd_gradient(&b, s, x, y, eps);
            ga[0][0] * gb[0][0] + ga[0][1] * gb[0][1] + ga[1][0] * gb[1][0] + ga[1][1] * gb[1][1]
        });
    }
    Ok(total)
}

/// Restriction to a square of the scalar hat of one of its corners, fitted
/// from its midpoint values.
fn corner_hat(corner: Corner, h: f64) -> LocalLinear {
    // (left, right, bottom, top) midpoints touched by the corner.
    let m = match corner {
        Corner::RightTop => [0.0, 1.0, 0.0, 1.0],
        Corner::LeftTop => [1.0, 0.0, 0.0, 1.0],
        Corner::LeftBottom => [1.0, 0.0, 1.0, 0.0],
        Corner::RightBottom => [0.0, 1.0, 1.0, 0.0],
    };
    LocalLinear::from_midpoints(m, h)
}

/// `(interior vertex index, hat restriction)` for the interior corners of `q`.
fn hats_on(mesh: &SquareMesh, q: usize) -> Vec<(usize, LocalLinear)> {
    Corner::ALL
        .iter()
        .filter_map(|&c| mesh.interior_vertex_index(mesh.corner_vertex(q, c)).map(|k| (k, corner_hat(c, mesh.h()))))
        .collect()
}

/// Matrix of `v ↦ (div_h v)|_Q` with columns `[x hats, y hats]`.
pub fn divergence_matrix(mesh: &SquareMesh) -> DMatrix<f64> {
    let nv = mesh.n_interior_vertices();
    let mut d = DMatrix::zeros(mesh.n_squares(), 2 * nv);
    for q in 0..mesh.n_squares() {
        for (k, l) in hats_on(mesh, q) {
            d[(q, k)] += l.beta;
            d[(q, nv + k)] += l.gamma;
        }
    }
    d
}

/// Numerical rank by singular values relative to the largest one.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = max * 1e-10 * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > tol).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub nullity: usize,
}

pub fn divergence_rank(mesh: &SquareMesh) -> RankReport {
    let d = divergence_matrix(mesh);
    let rank = numerical_rank(&d);
    RankReport { rows: d.nrows(), cols: d.ncols(), rank, nullity: d.ncols() - rank }
}

#[derive(Clone, Debug)]
pub struct MixedSolution<'m> {
    pub velocity: NcVectorField<'m>,
    pub pressure: PiecewiseConstField<'m>,
}

/// Solves the velocity–pressure saddle-point system on the full
/// `[NC₀]² × P₀` space, removing the two checkerboard pressure modes with
/// zero-mean constraints per color. Dense; meant for small meshes.
pub fn solve_mixed<'m, F>(mesh: &'m SquareMesh, f: &F, quad_order: usize) -> Result<MixedSolution<'m>, Error>
where
    F: Fn(f64, f64) -> [f64; 2] + ?Sized,
{
    if quad_order < 1 {
        return Err(FieldError::InvalidQuadratureOrder(quad_order).into());
    }
    let nv = mesh.n_interior_vertices();
    let nq = mesh.n_squares();
    let n = 2 * nv + nq + 2;
    let h2 = mesh.h() * mesh.h();
    let rule = SquareRule::new(quad_order);
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);

    for q in 0..nq {
        let hats = hats_on(mesh, q);
        for &(a, la) in &hats {
            for &(b, lb) in &hats {
                let g = h2 * (la.beta * lb.beta + la.gamma * lb.gamma);
                m[(a, b)] += g;
                m[(nv + a, nv + b)] += g;
            }
            // −(p, div v) and −(div u, r)
            let p = 2 * nv + q;
            m[(a, p)] -= h2 * la.beta;
            m[(p, a)] -= h2 * la.beta;
            m[(nv + a, p)] -= h2 * la.gamma;
            m[(p, nv + a)] -= h2 * la.gamma;
            rule.for_each_point(mesh, q, |x, y, xh, yh, w| {
                let [fx, fy] = f(x, y);
                let phi = la.eval(xh, yh);
                rhs[a] += w * fx * phi;
                rhs[nv + a] += w * fy * phi;
            });
        }
        let lambda = 2 * nv + nq + if mesh.color(q) == SquareColor::Red { 0 } else { 1 };
        m[(2 * nv + q, lambda)] -= h2;
        m[(lambda, 2 * nv + q)] -= h2;
    }
    // A color with no squares leaves its multiplier decoupled.
    for (k, color) in SquareColor::BOTH.into_iter().enumerate() {
        if (0..nq).all(|q| mesh.color(q) != color) {
            m[(2 * nv + nq + k, 2 * nv + nq + k)] = 1.0;
        }
    }

    let x = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let ux = NcScalarField::from_coeffs(mesh, x.rows(0, nv).iter().copied().collect())?;
    let uy = NcScalarField::from_coeffs(mesh, x.rows(nv, nv).iter().copied().collect())?;
    let pressure = PiecewiseConstField::from_values(mesh, x.rows(2 * nv, nq).iter().copied().collect())?;
    Ok(MixedSolution { velocity: NcVectorField::new(ux, uy)?, pressure })
}
