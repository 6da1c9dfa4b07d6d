//! Explicit pressure recovery from a solved divergence-free velocity.
//!
//! Two same-color squares sharing an interior vertex `V` are linked by a
//! vector hat `ψ^V[a,b]` with `(a, b) ∈ {±h/2}²` whose discrete divergence is
//! `+1` on one of them, `−1` on the other and zero elsewhere. Testing the
//! momentum equation with it gives the pressure jump between the two squares,
//! so a breadth-first sweep from one anchor per color determines the pressure
//! up to a constant on each color. Subtracting the red and black means fixes
//! those constants.

use std::collections::VecDeque;

use crate::mesh::{SquareColor, SquareMesh};
use crate::nc_space::{LocalLinear, NcVectorField, PiecewiseConstField};
use crate::quadrature::SquareRule;
use crate::FieldError;

/// Indicator of the squares of one color.
pub fn checkerboard(mesh: &SquareMesh, color: SquareColor) -> PiecewiseConstField<'_> {
    PiecewiseConstField::from_fn(mesh, |q| if mesh.color(q) == color { 1.0 } else { 0.0 })
}

/// Recovered pressure with the intermediate telescoped field and the two
/// mean shifts that were subtracted from it.
#[derive(Clone, Debug)]
pub struct PressureField<'m> {
    pub pressure: PiecewiseConstField<'m>,
    pub telescoped: PiecewiseConstField<'m>,
    pub red_shift: f64,
    pub black_shift: f64,
    pub anchors: [Option<usize>; 2],
}

impl<'m> PressureField<'m> {
    pub fn zeros(mesh: &'m SquareMesh) -> Self {
        Self {
            pressure: PiecewiseConstField::zeros(mesh),
            telescoped: PiecewiseConstField::zeros(mesh),
            red_shift: 0.0,
            black_shift: 0.0,
            anchors: [None, None],
        }
    }

    pub fn values(&self) -> &[f64] {
        self.pressure.values()
    }

    pub fn red_mean(&self) -> f64 {
        color_mean(&self.pressure, SquareColor::Red)
    }

    pub fn black_mean(&self) -> f64 {
        color_mean(&self.pressure, SquareColor::Black)
    }
}

fn color_mean(p: &PiecewiseConstField<'_>, color: SquareColor) -> f64 {
    let mesh = p.mesh();
    let (sum, n) = (0..mesh.n_squares())
        .filter(|&q| mesh.color(q) == color)
        .fold((0.0, 0usize), |(s, n), q| (s + p.get(q), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `(∇u_h, ∇v) − (f, v)`, with the gradient term from the local linear
/// parts and the load term by Gauss quadrature over the support of `v`.
pub fn residual<F>(
    u_h: &NcVectorField<'_>,
    f: &F,
    v: &NcVectorField<'_>,
    quad_order: usize,
) -> Result<f64, FieldError>
where
    F: Fn(f64, f64) -> [f64; 2] + ?Sized,
{
    if !std::ptr::eq(u_h.mesh(), v.mesh()) {
        return Err(FieldError::MeshMismatch);
    }
    if quad_order < 1 {
        return Err(FieldError::InvalidQuadratureOrder(quad_order));
    }
    let mesh = v.mesh();
    let rule = SquareRule::new(quad_order);
    let h2 = mesh.h() * mesh.h();
    let mut total = 0.0;
    for q in 0..mesh.n_squares() {
        let supported = v.x.corner_coeffs(q).iter().chain(&v.y.corner_coeffs(q)).any(|&c| c != 0.0);
        if !supported {
            continue;
        }
        let lu = u_h.local_linear(q);
        let lv = v.local_linear(q);
        for c in 0..2 {
            total += h2 * (lu[c].beta * lv[c].beta + lu[c].gamma * lv[c].gamma);
        }
        total -= rule.integrate(mesh, q, |x, y, xh, yh| {
            let [fx, fy] = f(x, y);
            fx * lv[0].eval(xh, yh) + fy * lv[1].eval(xh, yh)
        });
    }
    Ok(total)
}

/// Weights `(a, b)` of `ψ^V[a,b]` whose divergence is `+1` on the square at
/// position `next` around `V` and `−1` on the diagonally opposite square at
/// position `prev` (positions counterclockwise from the square whose
/// left-bottom corner is `V`).
pub fn telescoping_weights(next: usize, prev: usize, h: f64) -> Option<(f64, f64)> {
    let d = 0.5 * h;
    match (next, prev) {
        (0, 2) => Some((-d, -d)),
        (2, 0) => Some((d, d)),
        (1, 3) => Some((d, -d)),
        (3, 1) => Some((-d, d)),
        _ => None,
    }
}

/// Restriction of the scalar hat `ψ^V` to the square at `position` around `V`.
fn hat_local(position: usize, h: f64) -> LocalLinear {
    let (beta, gamma) = match position {
        0 => (-1.0, -1.0),
        1 => (1.0, -1.0),
        2 => (1.0, 1.0),
        _ => (-1.0, 1.0),
    };
    LocalLinear { alpha: 0.5, beta: beta / h, gamma: gamma / h }
}

/// Per-square load moments `∫ f_c`, `∫ f_c x̂`, `∫ f_c ŷ` for `c = x, y`, so
/// that `∫ f · (l_x, l_y)` for linear `l` is a dot product.
struct LoadMoments(Vec<[[f64; 3]; 2]>);

impl LoadMoments {
    fn new<F>(mesh: &SquareMesh, f: &F, rule: &SquareRule) -> Self
    where
        F: Fn(f64, f64) -> [f64; 2] + ?Sized,
    {
        let moments = (0..mesh.n_squares())
            .map(|q| {
                let mut m = [[0.0; 3]; 2];
                rule.for_each_point(mesh, q, |x, y, xh, yh, w| {
                    let fv = f(x, y);
                    for c in 0..2 {
                        m[c][0] += w * fv[c];
                        m[c][1] += w * fv[c] * xh;
                        m[c][2] += w * fv[c] * yh;
                    }
                });
                m
            })
            .collect();
        Self(moments)
    }

    fn apply(&self, q: usize, component: usize, l: &LocalLinear) -> f64 {
        let [m0, mx, my] = self.0[q][component];
        l.alpha * m0 + l.beta * mx + l.gamma * my
    }
}

/// Telescoping pressure recovery. `anchors` are a red and a black square;
/// by default the lowest-index square of each color.
pub fn recover_pressure<'m, F>(
    mesh: &'m SquareMesh,
    u_h: &NcVectorField<'_>,
    f: &F,
    anchors: Option<(usize, usize)>,
    quad_order: usize,
) -> Result<PressureField<'m>, FieldError>
where
    F: Fn(f64, f64) -> [f64; 2] + ?Sized,
{
    if !std::ptr::eq(mesh, u_h.mesh()) {
        return Err(FieldError::MeshMismatch);
    }
    if quad_order < 1 {
        return Err(FieldError::InvalidQuadratureOrder(quad_order));
    }
    let first_of = |color| (0..mesh.n_squares()).find(|&q| mesh.color(q) == color);
    let anchors = match anchors {
        Some((red, black)) => {
            for (q, color) in [(red, SquareColor::Red), (black, SquareColor::Black)] {
                if q >= mesh.n_squares() {
                    return Err(FieldError::Mesh(crate::MeshError::Inconsistent(format!("no square with id {q}"))));
                }
                if mesh.color(q) != color {
                    return Err(FieldError::AnchorColor { square: mesh.square_cell(q), expected: color });
                }
            }
            [Some(red), Some(black)]
        }
        None => [first_of(SquareColor::Red), first_of(SquareColor::Black)],
    };
    if mesh.n_interior_vertices() == 0 {
        let mut p = PressureField::zeros(mesh);
        p.anchors = anchors;
        return Ok(p);
    }

    let h = mesh.h();
    let h2 = h * h;
    let rule = SquareRule::new(quad_order);
    let moments = LoadMoments::new(mesh, f, &rule);
    let u_local = u_h.local_linears();

    // (∇u_h, ∇ψ^V[a,b]) − (f, ψ^V[a,b]) over the four squares around V.
    let step_residual = |v: usize, a: f64, b: f64| {
        let mut r = 0.0;
        for (position, q) in mesh.squares_around(v).into_iter().enumerate() {
            let q = q.expect("interior vertex has four squares");
            let hat = hat_local(position, h);
            let [ux, uy] = &u_local[q];
            r += h2 * (a * (ux.beta * hat.beta + ux.gamma * hat.gamma) + b * (uy.beta * hat.beta + uy.gamma * hat.gamma));
            r -= a * moments.apply(q, 0, &hat) + b * moments.apply(q, 1, &hat);
        }
        r
    };

    let mut hat = vec![0.0; mesh.n_squares()];
    let mut reached = vec![false; mesh.n_squares()];
    for (color, anchor) in SquareColor::BOTH.into_iter().zip(anchors) {
        let Some(anchor) = anchor else { continue };
        let graph = mesh.same_color_adjacency(color)?;
        let start = graph.node_of(anchor).expect("anchor has the graph's color");
        let mut queue = VecDeque::from([start]);
        reached[anchor] = true;
        while let Some(k) = queue.pop_front() {
            let q = graph.nodes[k];
            for &(m, v) in &graph.adjacency[k] {
                let next = graph.nodes[m];
                if reached[next] {
                    continue;
                }
                let around = mesh.squares_around(v);
                let pos = |s: usize| around.iter().position(|&x| x == Some(s)).expect("square touches vertex");
                let (a, b) = telescoping_weights(pos(next), pos(q), h).expect("same-color squares are diagonal");
                hat[next] = hat[q] + step_residual(v, a, b) / h2;
                reached[next] = true;
                queue.push_back(m);
            }
        }
    }
    if let Some(q) = reached.iter().position(|&r| !r) {
        return Err(FieldError::UnreachableSquare(mesh.square_cell(q)));
    }

    let telescoped = PiecewiseConstField::from_values(mesh, hat)?;
    let red_shift = color_mean(&telescoped, SquareColor::Red);
    let black_shift = color_mean(&telescoped, SquareColor::Black);
    let pressure = PiecewiseConstField::from_fn(mesh, |q| {
        let shift = match mesh.color(q) {
            SquareColor::Red => red_shift,
            SquareColor::Black => black_shift,
        };
        telescoped.get(q) - shift
    });
    Ok(PressureField { pressure, telescoped, red_shift, black_shift, anchors })
}
