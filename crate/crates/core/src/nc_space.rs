//! P1-nonconforming functions with homogeneous boundary values.
//!
//! A scalar field is stored by its coefficients in the vertex hat basis
//! `{ψ^V : V interior}`. The value at the midpoint of an edge is the sum of
//! the coefficients of its interior endpoints, so the midpoint compatibility
//! relation `m_left + m_right = m_bottom + m_top` holds on every square by
//! construction.

use std::fmt::Write as _;

use crate::mesh::{Corner, SquareMesh};
use crate::FieldError;

/// Restriction of a field to one square: `α + β x̂ + γ ŷ` in coordinates
/// relative to the square's center.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalLinear {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LocalLinear {
    /// Fits the linear part from the midpoint values `(left, right, bottom, top)`.
    pub fn from_midpoints(m: [f64; 4], h: f64) -> Self {
        let [left, right, bottom, top] = m;
        Self {
            alpha: 0.25 * (left + right + bottom + top),
            beta: (right - left) / h,
            gamma: (top - bottom) / h,
        }
    }

    pub fn eval(&self, xh: f64, yh: f64) -> f64 {
        self.alpha + self.beta * xh + self.gamma * yh
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.beta, self.gamma]
    }

    /// Values at the midpoints `(left, right, bottom, top)`.
    pub fn midpoints(&self, h: f64) -> [f64; 4] {
        let d = 0.5 * h;
        [
            self.eval(-d, 0.0),
            self.eval(d, 0.0),
            self.eval(0.0, -d),
            self.eval(0.0, d),
        ]
    }
}

fn same_mesh(a: &SquareMesh, b: &SquareMesh) -> Result<(), FieldError> {
    if std::ptr::eq(a, b) {
        Ok(())
    } else {
        Err(FieldError::MeshMismatch)
    }
}

#[derive(Clone, Debug)]
pub struct NcScalarField<'m> {
    mesh: &'m SquareMesh,
    coeffs: Vec<f64>,
}

impl<'m> NcScalarField<'m> {
    pub fn zeros(mesh: &'m SquareMesh) -> Self {
        Self { mesh, coeffs: vec![0.0; mesh.n_interior_vertices()] }
    }

    pub fn from_coeffs(mesh: &'m SquareMesh, coeffs: Vec<f64>) -> Result<Self, FieldError> {
        if coeffs.len() != mesh.n_interior_vertices() {
            return Err(FieldError::LengthMismatch {
                expected: mesh.n_interior_vertices(),
                found: coeffs.len(),
            });
        }
        Ok(Self { mesh, coeffs })
    }

    /// The hat `ψ^V`: 1 at the midpoints of the edges meeting `V`, 0 at all
    /// other midpoints.
    pub fn psi_vertex(mesh: &'m SquareMesh, v: usize) -> Result<Self, FieldError> {
        let k = mesh
            .interior_vertex_index(v)
            .ok_or(FieldError::BoundaryVertex(mesh.vertex_cell(v)))?;
        let mut field = Self::zeros(mesh);
        field.coeffs[k] = 1.0;
        Ok(field)
    }

    /// `π_h v = Σ_V v(V)/2 ψ^V` over the interior vertices.
    pub fn interpolate(mesh: &'m SquareMesh, v: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = mesh
            .interior_vertices()
            .iter()
            .map(|&vid| {
                let [x, y] = mesh.vertex_position(vid);
                0.5 * v(x, y)
            })
            .collect();
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &'m SquareMesh {
        self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn vertex_coeff(&self, v: usize) -> f64 {
        self.mesh.interior_vertex_index(v).map_or(0.0, |k| self.coeffs[k])
    }

    /// Coefficients at the corners of square `q`, in `Corner::ALL` order;
    /// boundary corners contribute 0.
    pub fn corner_coeffs(&self, q: usize) -> [f64; 4] {
        Corner::ALL.map(|c| self.vertex_coeff(self.mesh.corner_vertex(q, c)))
    }

    pub fn midpoint_value(&self, edge: usize) -> f64 {
        let e = self.mesh.edges()[edge];
        self.vertex_coeff(e.a) + self.vertex_coeff(e.b)
    }

    /// Midpoint values `(left, right, bottom, top)` of square `q`.
    pub fn square_midpoints(&self, q: usize) -> [f64; 4] {
        let [rt, lt, lb, rb] = self.corner_coeffs(q);
        [lb + lt, rb + rt, lb + rb, lt + rt]
    }

    pub fn local_linear(&self, q: usize) -> LocalLinear {
        LocalLinear::from_midpoints(self.square_midpoints(q), self.mesh.h())
    }

    pub fn local_linears(&self) -> Vec<LocalLinear> {
        (0..self.mesh.n_squares()).map(|q| self.local_linear(q)).collect()
    }

    /// Evaluates the restriction to square `q` at `(x, y)`.
    pub fn eval_in_square(&self, q: usize, x: f64, y: f64) -> f64 {
        let [cx, cy] = self.mesh.square_center(q);
        self.local_linear(q).eval(x - cx, y - cy)
    }

    /// `|v|²₁,ₕ = Σ_Q h² (β² + γ²)`.
    pub fn seminorm_sq(&self) -> f64 {
        let h2 = self.mesh.h() * self.mesh.h();
        (0..self.mesh.n_squares())
            .map(|q| {
                let l = self.local_linear(q);
                h2 * (l.beta * l.beta + l.gamma * l.gamma)
            })
            .sum()
    }

    pub fn axpy(&mut self, a: f64, other: &NcScalarField<'_>) -> Result<(), FieldError> {
        same_mesh(self.mesh, other.mesh)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NcVectorField<'m> {
    pub x: NcScalarField<'m>,
    pub y: NcScalarField<'m>,
}

impl<'m> NcVectorField<'m> {
    pub fn new(x: NcScalarField<'m>, y: NcScalarField<'m>) -> Result<Self, FieldError> {
        same_mesh(x.mesh, y.mesh)?;
        Ok(Self { x, y })
    }

    pub fn zeros(mesh: &'m SquareMesh) -> Self {
        Self { x: NcScalarField::zeros(mesh), y: NcScalarField::zeros(mesh) }
    }

    /// Component-wise interpolation of a vector function.
    pub fn interpolate(mesh: &'m SquareMesh, v: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        Self {
            x: NcScalarField::interpolate(mesh, |x, y| v(x, y)[0]),
            y: NcScalarField::interpolate(mesh, |x, y| v(x, y)[1]),
        }
    }

    pub fn mesh(&self) -> &'m SquareMesh {
        self.x.mesh
    }

    pub fn local_linear(&self, q: usize) -> [LocalLinear; 2] {
        [self.x.local_linear(q), self.y.local_linear(q)]
    }

    pub fn local_linears(&self) -> Vec<[LocalLinear; 2]> {
        (0..self.mesh().n_squares()).map(|q| self.local_linear(q)).collect()
    }

    pub fn eval_in_square(&self, q: usize, x: f64, y: f64) -> [f64; 2] {
        [self.x.eval_in_square(q, x, y), self.y.eval_in_square(q, x, y)]
    }

    pub fn div_h(&self) -> PiecewiseConstField<'m> {
        let values = (0..self.mesh().n_squares())
            .map(|q| {
                let [lx, ly] = self.local_linear(q);
                lx.beta + ly.gamma
            })
            .collect();
        PiecewiseConstField { mesh: self.mesh(), values }
    }

    pub fn curl_h(&self) -> PiecewiseConstField<'m> {
        let values = (0..self.mesh().n_squares())
            .map(|q| {
                let [lx, ly] = self.local_linear(q);
                ly.beta - lx.gamma
            })
            .collect();
        PiecewiseConstField { mesh: self.mesh(), values }
    }

    pub fn seminorm_1h_sq(&self) -> f64 {
        self.x.seminorm_sq() + self.y.seminorm_sq()
    }

    pub fn seminorm_1h(&self) -> f64 {
        self.seminorm_1h_sq().sqrt()
    }

    /// Broken gradient inner product `Σ_Q ∫_Q ∇u : ∇v`.
    pub fn grad_inner(&self, other: &NcVectorField<'_>) -> Result<f64, FieldError> {
        same_mesh(self.mesh(), other.mesh())?;
        let h2 = self.mesh().h() * self.mesh().h();
        Ok((0..self.mesh().n_squares())
            .map(|q| {
                let a = self.local_linear(q);
                let b = other.local_linear(q);
                h2 * (0..2).map(|c| a[c].beta * b[c].beta + a[c].gamma * b[c].gamma).sum::<f64>()
            })
            .sum())
    }

    pub fn axpy(&mut self, a: f64, other: &NcVectorField<'_>) -> Result<(), FieldError> {
        self.x.axpy(a, &other.x)?;
        self.y.axpy(a, &other.y)
    }

    /// Text dump, one line per square:
    /// `i j alpha_x beta_x gamma_x alpha_y beta_y gamma_y`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for q in 0..self.mesh().n_squares() {
            let c = self.mesh().square_cell(q);
            let [lx, ly] = self.local_linear(q);
            let _ = writeln!(
                out,
                "{} {} {:e} {:e} {:e} {:e} {:e} {:e}",
                c.i, c.j, lx.alpha, lx.beta, lx.gamma, ly.alpha, ly.beta, ly.gamma
            );
        }
        out
    }
}

/// One value per square.
#[derive(Clone, Debug)]
pub struct PiecewiseConstField<'m> {
    mesh: &'m SquareMesh,
    values: Vec<f64>,
}

impl<'m> PiecewiseConstField<'m> {
    pub fn zeros(mesh: &'m SquareMesh) -> Self {
        Self { mesh, values: vec![0.0; mesh.n_squares()] }
    }

    pub fn from_values(mesh: &'m SquareMesh, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != mesh.n_squares() {
            return Err(FieldError::LengthMismatch { expected: mesh.n_squares(), found: values.len() });
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: &'m SquareMesh, f: impl Fn(usize) -> f64) -> Self {
        Self { mesh, values: (0..mesh.n_squares()).map(f).collect() }
    }

    pub fn mesh(&self) -> &'m SquareMesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, q: usize) -> f64 {
        self.values[q]
    }

    pub fn l2_inner(&self, other: &PiecewiseConstField<'_>) -> Result<f64, FieldError> {
        same_mesh(self.mesh, other.mesh)?;
        let h2 = self.mesh.h() * self.mesh.h();
        Ok(h2 * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn l2_norm(&self) -> f64 {
        let h2 = self.mesh.h() * self.mesh.h();
        (h2 * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Text dump, one line per square: `i j value`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (q, v) in self.values.iter().enumerate() {
            let c = self.mesh.square_cell(q);
            let _ = writeln!(out, "{} {} {:e}", c.i, c.j, v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mask;

    fn mesh(n: usize) -> SquareMesh {
        SquareMesh::build_rectangular(n, n, 1.0 / n as f64).unwrap()
    }

    #[test]
    fn psi_vertex_midpoints() {
        let m = mesh(3);
        let v = m.vertex_at(1, 1).unwrap();
        let psi = NcScalarField::psi_vertex(&m, v).unwrap();
        let nonzero: Vec<usize> = (0..m.n_edges()).filter(|&e| psi.midpoint_value(e) != 0.0).collect();
        // Only the four edges having V as an endpoint; the div/curl tables of
        // the vector hats are incompatible with any larger support.
        assert_eq!(nonzero.len(), 4);
        for e in nonzero {
            assert_eq!(psi.midpoint_value(e), 1.0);
            let edge = m.edges()[e];
            assert!(edge.a == v || edge.b == v);
        }
        let corner = m.vertex_at(0, 0).unwrap();
        assert!(matches!(NcScalarField::psi_vertex(&m, corner), Err(FieldError::BoundaryVertex(_))));
    }

    #[test]
    fn sum_of_hats_on_interior_edge_is_two() {
        let m = mesh(4);
        let mut all = NcScalarField::zeros(&m);
        all.coeffs_mut().fill(1.0);
        let e = m.horizontal_edge(1, 2).unwrap();
        assert!(m.is_interior_vertex(m.edges()[e].a) && m.is_interior_vertex(m.edges()[e].b));
        assert_eq!(all.midpoint_value(e), 2.0);
    }

    #[test]
    fn local_linear_examples() {
        assert_eq!(
            LocalLinear::from_midpoints([3.0; 4], 0.5),
            LocalLinear { alpha: 3.0, beta: 0.0, gamma: 0.0 }
        );
        let l = LocalLinear::from_midpoints([0.0, 1.0, 0.5, 0.5], 1.0);
        assert_eq!(l, LocalLinear { alpha: 0.5, beta: 1.0, gamma: 0.0 });
        assert_eq!(l.midpoints(1.0), [0.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn psi_vertex_gradient_signs_per_corner() {
        let m = mesh(4);
        let h = m.h();
        let v = m.vertex_at(2, 2).unwrap();
        let psi = NcScalarField::psi_vertex(&m, v).unwrap();
        // V is the left-bottom, right-bottom, right-top, left-top corner of
        // the four squares around it, in counterclockwise order.
        let expected = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (q, (b, g)) in m.squares_around(v).into_iter().zip(expected) {
            let l = psi.local_linear(q.unwrap());
            assert_eq!((l.beta * h, l.gamma * h), (b, g));
            assert_eq!(l.alpha, 0.5);
        }
        assert!((psi.seminorm_sq() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_midpoint_rule() {
        let m = mesh(6);
        let f = |x: f64, y: f64| (3.0 * x).sin() + y * y - 0.3 * x * y;
        let pi = NcScalarField::interpolate(&m, f);
        for e in m.edges() {
            if m.is_interior_vertex(e.a) && m.is_interior_vertex(e.b) {
                let [xa, ya] = m.vertex_position(e.a);
                let [xb, yb] = m.vertex_position(e.b);
                let idx = m.edges().iter().position(|x| x == e).unwrap();
                let expected = 0.5 * (f(xa, ya) + f(xb, yb));
                assert!((pi.midpoint_value(idx) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bilinear_part_is_annihilated() {
        let m = mesh(5);
        let q = m.square_at(2, 2).unwrap();
        let [cx, cy] = m.square_center(q);
        let pi = NcScalarField::interpolate(&m, |x, y| (x - cx) * (y - cy));
        let l = pi.local_linear(q);
        assert!(l.beta.abs() < 1e-15 && l.gamma.abs() < 1e-15);
    }

    #[test]
    fn linear_functions_reproduced_on_interior_squares() {
        let m = mesh(6);
        let (a, b, c) = (0.7, -1.3, 2.1);
        let pi = NcScalarField::interpolate(&m, |x, y| a + b * x + c * y);
        for &q in m.interior_squares() {
            let l = pi.local_linear(q);
            let [cx, cy] = m.square_center(q);
            assert!((l.beta - b).abs() < 1e-12 && (l.gamma - c).abs() < 1e-12);
            assert!((l.alpha - (a + b * cx + c * cy)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_vector_has_no_div_or_curl_inside() {
        let m = mesh(5);
        let mut u = NcVectorField::zeros(&m);
        u.x.coeffs_mut().fill(0.5);
        u.y.coeffs_mut().fill(-0.25);
        let div = u.div_h();
        let curl = u.curl_h();
        for &q in m.interior_squares() {
            assert_eq!(div.get(q), 0.0);
            assert_eq!(curl.get(q), 0.0);
        }
    }

    #[test]
    fn zero_field_norms() {
        let m = SquareMesh::build_masked(&"110\n111\n111\n".parse::<Mask>().unwrap(), 0.5).unwrap();
        let u = NcVectorField::zeros(&m);
        assert_eq!(u.seminorm_1h(), 0.0);
        assert_eq!(u.div_h().l2_norm(), 0.0);
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let a = mesh(3);
        let b = mesh(3);
        let pa = PiecewiseConstField::zeros(&a);
        let pb = PiecewiseConstField::zeros(&b);
        assert_eq!(pa.l2_inner(&pb), Err(FieldError::MeshMismatch));
        assert!(NcVectorField::new(NcScalarField::zeros(&a), NcScalarField::zeros(&b)).is_err());
    }

    #[test]
    fn dump_formats() {
        let m = mesh(3);
        let p = PiecewiseConstField::from_fn(&m, |q| q as f64);
        let text = p.dump();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().nth(1).unwrap(), "1 0 1e0");
        let u = NcVectorField::zeros(&m);
        assert_eq!(u.dump().lines().next().unwrap().split(' ').count(), 8);
    }
}
