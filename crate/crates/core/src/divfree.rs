//! The locally divergence-free subspace and its square-centered basis.
//!
//! For an interior square `Q` the basis function `Ψ^Q` combines the vector
//! hats of its four corners with weights `(±½, ±½)`. Its discrete divergence
//! vanishes on every square and its discrete curl is `−4/h` on `Q` and `1/h`
//! on the four diagonal neighbors. Since red and black basis functions have
//! curls on disjoint squares, the Gram matrix splits into one block per color.

use crate::mesh::{Corner, SquareColor, SquareMesh};
use crate::nc_space::{LocalLinear, NcScalarField, NcVectorField};
use crate::quadrature::SquareRule;
use crate::solver::SparseSpdMatrix;
use crate::FieldError;

/// `ψ^V[a, b] = (a ψ^V, b ψ^V)`.
pub fn psi_vab<'m>(mesh: &'m SquareMesh, v: usize, a: f64, b: f64) -> Result<NcVectorField<'m>, FieldError> {
    let psi = NcScalarField::psi_vertex(mesh, v)?;
    let mut x = psi.clone();
    let mut y = psi;
    x.coeffs_mut().iter_mut().for_each(|c| *c *= a);
    y.coeffs_mut().iter_mut().for_each(|c| *c *= b);
    NcVectorField::new(x, y)
}

/// Values of `div_h ψ^V[a,b]` on the four squares around `V`, in
/// counterclockwise order from the square whose left-bottom corner is `V`.
pub fn psi_vab_div(a: f64, b: f64, h: f64) -> [f64; 4] {
    [-(a + b) / h, (a - b) / h, (a + b) / h, (b - a) / h]
}

/// Values of `curl_h ψ^V[a,b]` on the four squares around `V`.
pub fn psi_vab_curl(a: f64, b: f64, h: f64) -> [f64; 4] {
    [(a - b) / h, (a + b) / h, (b - a) / h, -(a + b) / h]
}

/// Vector-hat weight of each corner of `Q` in `Ψ^Q`.
pub const BASIS_CORNER_WEIGHTS: [(Corner, [f64; 2]); 4] = [
    (Corner::RightTop, [0.5, -0.5]),
    (Corner::LeftTop, [0.5, 0.5]),
    (Corner::LeftBottom, [-0.5, 0.5]),
    (Corner::RightBottom, [-0.5, -0.5]),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    /// Lattice offset `(Δi, Δj)` of the coupled square; `Δi + Δj` is even.
    pub offset: (isize, isize),
    pub value: f64,
}

const fn entry(di: isize, dj: isize, value: f64) -> StencilEntry {
    StencilEntry { offset: (di, dj), value }
}

/// Nonzero `(∇Ψ^Q, ∇Ψ^{Q'})` for a fixed `Q`, independent of `h`.
pub const STENCIL: [StencilEntry; 13] = [
    entry(0, 0, 20.0),
    entry(1, 1, -8.0),
    entry(-1, 1, -8.0),
    entry(-1, -1, -8.0),
    entry(1, -1, -8.0),
    entry(2, 0, 2.0),
    entry(-2, 0, 2.0),
    entry(0, 2, 2.0),
    entry(0, -2, 2.0),
    entry(2, 2, 1.0),
    entry(-2, 2, 1.0),
    entry(-2, -2, 1.0),
    entry(2, -2, 1.0),
];

pub fn stencil_value(di: isize, dj: isize) -> Option<f64> {
    STENCIL.iter().find(|e| e.offset == (di, dj)).map(|e| e.value)
}

fn require_interior(mesh: &SquareMesh, q: usize) -> Result<(), FieldError> {
    if mesh.is_interior_square(q) {
        Ok(())
    } else {
        Err(FieldError::NotInteriorSquare(mesh.square_cell(q)))
    }
}

pub fn basis_function(mesh: &SquareMesh, q: usize) -> Result<NcVectorField<'_>, FieldError> {
    require_interior(mesh, q)?;
    let mut u = NcVectorField::zeros(mesh);
    for (corner, [wx, wy]) in BASIS_CORNER_WEIGHTS {
        let k = mesh
            .interior_vertex_index(mesh.corner_vertex(q, corner))
            .expect("corners of an interior square are interior");
        u.x.coeffs_mut()[k] += wx;
        u.y.coeffs_mut()[k] += wy;
    }
    Ok(u)
}

/// Restrictions of `Ψ^Q` to the nine squares of its support, computed from
/// the corner weights without building a global field.
pub fn basis_local_linears(mesh: &SquareMesh, q: usize) -> Result<Vec<(usize, [LocalLinear; 2])>, FieldError> {
    require_interior(mesh, q)?;
    let center = mesh.square_cell(q);
    let weight_at = |v: usize| {
        BASIS_CORNER_WEIGHTS
            .iter()
            .find(|(corner, _)| mesh.corner_vertex(q, *corner) == v)
            .map_or([0.0, 0.0], |&(_, w)| w)
    };
    let h = mesh.h();
    let mut out = Vec::with_capacity(9);
    for dj in 0..3 {
        for di in 0..3 {
            let s = mesh
                .square_at(center.i + di - 1, center.j + dj - 1)
                .expect("an interior square has all eight neighbors");
            let corners = Corner::ALL.map(|c| weight_at(mesh.corner_vertex(s, c)));
            let component = |k: usize| {
                let [rt, lt, lb, rb] = corners.map(|w| w[k]);
                LocalLinear::from_midpoints([lb + lt, rb + rt, lb + rb, lt + rt], h)
            };
            out.push((s, [component(0), component(1)]));
        }
    }
    Ok(out)
}

/// Coefficients in the `Ψ^Q` basis, one per interior square, stored as a
/// red block and a black block.
#[derive(Clone, Debug)]
pub struct DivFreeCoefficients<'m> {
    mesh: &'m SquareMesh,
    red: Vec<f64>,
    black: Vec<f64>,
}

impl<'m> DivFreeCoefficients<'m> {
    pub fn zeros(mesh: &'m SquareMesh) -> Self {
        Self {
            mesh,
            red: vec![0.0; mesh.interior_squares_of(SquareColor::Red).len()],
            black: vec![0.0; mesh.interior_squares_of(SquareColor::Black).len()],
        }
    }

    pub fn from_blocks(mesh: &'m SquareMesh, red: Vec<f64>, black: Vec<f64>) -> Result<Self, FieldError> {
        for (color, block) in [(SquareColor::Red, &red), (SquareColor::Black, &black)] {
            let expected = mesh.interior_squares_of(color).len();
            if block.len() != expected {
                return Err(FieldError::LengthMismatch { expected, found: block.len() });
            }
        }
        Ok(Self { mesh, red, black })
    }

    /// Coefficient per interior square from a function of the square id.
    pub fn from_fn(mesh: &'m SquareMesh, f: impl Fn(usize) -> f64) -> Self {
        let red = mesh.interior_squares_of(SquareColor::Red).iter().map(|&q| f(q)).collect();
        let black = mesh.interior_squares_of(SquareColor::Black).iter().map(|&q| f(q)).collect();
        Self { mesh, red, black }
    }

    pub fn mesh(&self) -> &'m SquareMesh {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.red.len() + self.black.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, color: SquareColor) -> &[f64] {
        match color {
            SquareColor::Red => &self.red,
            SquareColor::Black => &self.black,
        }
    }

    /// Coefficient of interior square `q`.
    pub fn get(&self, q: usize) -> Option<f64> {
        let k = self.mesh.color_block_index(q)?;
        Some(self.block(self.mesh.color(q))[k])
    }

    pub fn max_abs(&self) -> f64 {
        self.red.iter().chain(&self.black).fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `u_h = Σ_Q c_Q Ψ^Q` as a vector-hat field.
    pub fn expand(&self) -> NcVectorField<'m> {
        let mesh = self.mesh;
        let mut u = NcVectorField::zeros(mesh);
        for color in SquareColor::BOTH {
            for (&q, &c) in mesh.interior_squares_of(color).iter().zip(self.block(color)) {
                for (corner, [wx, wy]) in BASIS_CORNER_WEIGHTS {
                    let k = mesh
                        .interior_vertex_index(mesh.corner_vertex(q, corner))
                        .expect("corners of an interior square are interior");
                    u.x.coeffs_mut()[k] += c * wx;
                    u.y.coeffs_mut()[k] += c * wy;
                }
            }
        }
        u
    }
}

/// Same-color interior squares within the 5×5 block around `q`, with their
/// block index and lattice offset.
fn coupled_squares(mesh: &SquareMesh, q: usize) -> impl Iterator<Item = (usize, usize, (isize, isize))> + '_ {
    let c = mesh.square_cell(q);
    (-2isize..=2).flat_map(move |dj| {
        (-2isize..=2).filter_map(move |di| {
            if (di + dj) % 2 != 0 {
                return None;
            }
            let (i, j) = (c.i as isize + di, c.j as isize + dj);
            if i < 0 || j < 0 {
                return None;
            }
            let other = mesh.square_at(i as usize, j as usize)?;
            let k = mesh.color_block_index(other)?;
            Some((other, k, (di, dj)))
        })
    })
}

/// Stiffness block of one color from the 13-point stencil.
pub fn assemble_stiffness(mesh: &SquareMesh, color: SquareColor) -> SparseSpdMatrix {
    let rows = mesh
        .interior_squares_of(color)
        .iter()
        .map(|&q| {
            coupled_squares(mesh, q)
                .filter_map(|(_, k, (di, dj))| stencil_value(di, dj).map(|v| (k, v)))
                .collect()
        })
        .collect();
    SparseSpdMatrix::from_rows(rows)
}

fn assemble_pairwise(
    mesh: &SquareMesh,
    color: SquareColor,
    form: impl Fn(&[(usize, [LocalLinear; 2])], &[(usize, [LocalLinear; 2])]) -> f64,
) -> SparseSpdMatrix {
    let locals: Vec<_> = mesh
        .interior_squares_of(color)
        .iter()
        .map(|&q| basis_local_linears(mesh, q).expect("interior square"))
        .collect();
    let rows = mesh
        .interior_squares_of(color)
        .iter()
        .enumerate()
        .map(|(row, &q)| {
            coupled_squares(mesh, q)
                .filter_map(|(_, k, _)| {
                    let v = form(&locals[row], &locals[k]);
                    (v != 0.0).then_some((k, v))
                })
                .collect()
        })
        .collect();
    SparseSpdMatrix::from_rows(rows)
}

/// Stiffness block by exact per-square integration of the piecewise-constant
/// gradients of the basis functions.
pub fn assemble_stiffness_by_integration(mesh: &SquareMesh, color: SquareColor) -> SparseSpdMatrix {
    let h2 = mesh.h() * mesh.h();
    assemble_pairwise(mesh, color, |a, b| {
        let mut s = 0.0;
        for (sa, la) in a {
            for (sb, lb) in b {
                if sa == sb {
                    for c in 0..2 {
                        s += h2 * (la[c].beta * lb[c].beta + la[c].gamma * lb[c].gamma);
                    }
                }
            }
        }
        s
    })
}

/// Stiffness block from the curl form `(curl_h Ψ^Q, curl_h Ψ^{Q'})`.
pub fn assemble_curl_form(mesh: &SquareMesh, color: SquareColor) -> SparseSpdMatrix {
    let h2 = mesh.h() * mesh.h();
    let curl = |l: &[LocalLinear; 2]| l[1].beta - l[0].gamma;
    assemble_pairwise(mesh, color, |a, b| {
        let mut s = 0.0;
        for (sa, la) in a {
            for (sb, lb) in b {
                if sa == sb {
                    s += h2 * curl(la) * curl(lb);
                }
            }
        }
        s
    })
}

/// `∫ f · Ψ^Q` for every interior square `Q` of `color`, by tensor
/// Gauss–Legendre quadrature with `quad_order` points per direction on each
/// square of the support.
pub fn assemble_load<F>(
    mesh: &SquareMesh,
    f: &F,
    color: SquareColor,
    quad_order: usize,
) -> Result<Vec<f64>, FieldError>
where
    F: Fn(f64, f64) -> [f64; 2] + ?Sized,
{
    if quad_order < 1 {
        return Err(FieldError::InvalidQuadratureOrder(quad_order));
    }
    let rule = SquareRule::new(quad_order);
    mesh.interior_squares_of(color)
        .iter()
        .map(|&q| {
            let locals = basis_local_linears(mesh, q)?;
            Ok(locals
                .iter()
                .map(|(s, [lx, ly])| {
                    rule.integrate(mesh, *s, |x, y, xh, yh| {
                        let [fx, fy] = f(x, y);
                        fx * lx.eval(xh, yh) + fy * ly.eval(xh, yh)
                    })
                })
                .sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> SquareMesh {
        SquareMesh::build_rectangular(n, n, 1.0 / n as f64).unwrap()
    }

    #[test]
    fn psi_vab_tables_match_fields() {
        let m = mesh(5);
        let h = m.h();
        let v = m.vertex_at(2, 3).unwrap();
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (0.3, 2.0), (0.0, 0.0)] {
            let w = psi_vab(&m, v, a, b).unwrap();
            let div = w.div_h();
            let curl = w.curl_h();
            let around = m.squares_around(v).map(Option::unwrap);
            let d = psi_vab_div(a, b, h);
            let c = psi_vab_curl(a, b, h);
            for k in 0..4 {
                assert!((div.get(around[k]) - d[k]).abs() < 1e-12);
                assert!((curl.get(around[k]) - c[k]).abs() < 1e-12);
            }
            for q in (0..m.n_squares()).filter(|q| !around.contains(q)) {
                assert_eq!(div.get(q), 0.0);
                assert_eq!(curl.get(q), 0.0);
            }
        }
        assert_eq!(psi_vab_div(1.0, 1.0, h), [-2.0 / h, 0.0, 2.0 / h, 0.0]);
        assert_eq!(psi_vab_div(1.0, -1.0, h), [0.0, 2.0 / h, 0.0, -2.0 / h]);
        assert_eq!(psi_vab_curl(1.0, -1.0, h), [2.0 / h, 0.0, -2.0 / h, 0.0]);
        let boundary = m.vertex_at(0, 2).unwrap();
        assert!(matches!(psi_vab(&m, boundary, 1.0, 0.0), Err(FieldError::BoundaryVertex(_))));
    }

    #[test]
    fn basis_is_divergence_free_with_curl_pattern() {
        let m = mesh(6);
        let h = m.h();
        for &q in m.interior_squares() {
            let psi = basis_function(&m, q).unwrap();
            assert!(psi.div_h().max_abs() <= 1e-14);
            let curl = psi.curl_h();
            let diag: Vec<usize> = m.diagonal_neighbors(q).iter().map(|(_, s)| s).collect();
            for s in 0..m.n_squares() {
                let expected = if s == q {
                    -4.0 / h
                } else if diag.contains(&s) {
                    1.0 / h
                } else {
                    0.0
                };
                assert_eq!(curl.get(s), expected);
            }
            assert!((psi.seminorm_1h_sq() - 20.0).abs() < 1e-12);
        }
        let boundary_square = m.square_at(0, 3).unwrap();
        assert!(matches!(basis_function(&m, boundary_square), Err(FieldError::NotInteriorSquare(_))));
    }

    #[test]
    fn local_linears_agree_with_global_field() {
        let m = mesh(5);
        let q = m.square_at(2, 2).unwrap();
        let global = basis_function(&m, q).unwrap();
        for (s, l) in basis_local_linears(&m, q).unwrap() {
            assert_eq!(global.local_linear(s), l);
        }
    }

    #[test]
    fn stencil_matrix_shape() {
        let m = mesh(8);
        let k = assemble_stiffness(&m, SquareColor::Red);
        assert_eq!(k.dim(), 18);
        assert!(k.is_symmetric());
        assert!(k.diagonal().iter().all(|&d| d == 20.0));
        assert_eq!(STENCIL.len(), 13);
        assert_eq!(stencil_value(1, 1), Some(-8.0));
        assert_eq!(stencil_value(2, 0), Some(2.0));
        assert_eq!(stencil_value(2, 2), Some(1.0));
        assert_eq!(stencil_value(1, 0), None);
    }

    #[test]
    fn stencil_equals_integration_and_curl_form() {
        let m = mesh(7);
        for color in SquareColor::BOTH {
            let s = assemble_stiffness(&m, color).to_dense();
            let q = assemble_stiffness_by_integration(&m, color).to_dense();
            let c = assemble_curl_form(&m, color).to_dense();
            assert!((&s - &q).amax() <= 1e-12);
            assert!((&s - &c).amax() <= 1e-12);
        }
    }

    #[test]
    fn load_of_constant_forcing_vanishes() {
        let m = mesh(6);
        for color in SquareColor::BOTH {
            assert!(assemble_load(&m, &|_, _| [0.0, 0.0], color, 3).unwrap().iter().all(|&v| v == 0.0));
            let b = assemble_load(&m, &|_, _| [1.5, -2.0], color, 3).unwrap();
            assert!(b.iter().all(|v| v.abs() < 1e-15));
        }
        assert_eq!(
            assemble_load(&m, &|_, _| [1.0, 0.0], SquareColor::Red, 0),
            Err(FieldError::InvalidQuadratureOrder(0))
        );
    }

    #[test]
    fn expand_single_coefficient_is_basis_function() {
        let m = mesh(5);
        let q = m.interior_squares()[3];
        let coeffs = DivFreeCoefficients::from_fn(&m, |s| if s == q { 1.0 } else { 0.0 });
        let u = coeffs.expand();
        let psi = basis_function(&m, q).unwrap();
        assert_eq!(u.x.coeffs(), psi.x.coeffs());
        assert_eq!(u.y.coeffs(), psi.y.coeffs());
        assert_eq!(coeffs.get(q), Some(1.0));
        assert_eq!(coeffs.get(0), None);
    }
}
