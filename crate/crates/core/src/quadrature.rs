//! Tensor Gauss–Legendre quadrature on mesh squares.

use std::f64::consts::PI;

use crate::mesh::SquareMesh;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Tensor rule mapped to one square of a mesh.
#[derive(Clone, Debug)]
pub struct SquareRule {
    rule: GaussLegendre,
}

impl SquareRule {
    pub fn new(order: usize) -> Self {
        Self { rule: GaussLegendre::new(order) }
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    /// Visits every quadrature point of square `q` as `(x, y, x̂, ŷ, weight)`,
    /// with `(x̂, ŷ)` relative to the square's center and the weight already
    /// scaled by the square's area.
    pub fn for_each_point<V>(&self, mesh: &SquareMesh, q: usize, mut visit: V)
    where
        V: FnMut(f64, f64, f64, f64, f64),
    {
        let [cx, cy] = mesh.square_center(q);
        let half = 0.5 * mesh.h();
        let jac = half * half;
        for (&sy, &wy) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let yh = half * sy;
            for (&sx, &wx) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let xh = half * sx;
                visit(cx + xh, cy + yh, xh, yh, wx * wy * jac);
            }
        }
    }

    /// Integrates `g(x, y, x̂, ŷ)` over square `q`.
    pub fn integrate<G>(&self, mesh: &SquareMesh, q: usize, mut g: G) -> f64
    where
        G: FnMut(f64, f64, f64, f64) -> f64,
    {
        let mut sum = 0.0;
        self.for_each_point(mesh, q, |x, y, xh, yh, w| sum += w * g(x, y, xh, yh));
        sum
    }
}
