//! Manufactured solutions, error norms and convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::mesh::{SquareColor, SquareMesh};
use crate::nc_space::{NcVectorField, PiecewiseConstField};
use crate::pressure::recover_pressure;
use crate::quadrature::SquareRule;
use crate::solver::{solve_velocity, SolverConfig};
use crate::Error;

pub mod checks;

/// Stream function value and partial derivatives up to third order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StreamDerivatives {
    pub phi: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub xxx: f64,
    pub xxy: f64,
    pub xyy: f64,
    pub yyy: f64,
}

pub trait StreamFunction: Send + Sync {
    fn derivatives(&self, x: f64, y: f64) -> StreamDerivatives;
}

pub trait PressureFunction: Send + Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> [f64; 2];
}

/// `φ = sin(2πx) sin(3πy) (x³ − x)(y² − y)`, vanishing with its gradient on
/// the boundary of the unit square.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrigPolyStream;

/// `[g, g', g'', g''']` for `g = sin(kπt) w(t)` given `[w, w', w'', w''']`.
fn product_derivatives(k: f64, t: f64, w: [f64; 4]) -> [f64; 4] {
    let a = k * PI;
    let (s, c) = (a * t).sin_cos();
    let sd = [s, a * c, -a * a * s, -a * a * a * c];
    [
        sd[0] * w[0],
        sd[1] * w[0] + sd[0] * w[1],
        sd[2] * w[0] + 2.0 * sd[1] * w[1] + sd[0] * w[2],
        sd[3] * w[0] + 3.0 * sd[2] * w[1] + 3.0 * sd[1] * w[2] + sd[0] * w[3],
    ]
}

impl StreamFunction for TrigPolyStream {
    fn derivatives(&self, x: f64, y: f64) -> StreamDerivatives {
        let a = product_derivatives(2.0, x, [x * x * x - x, 3.0 * x * x - 1.0, 6.0 * x, 6.0]);
        let b = product_derivatives(3.0, y, [y * y - y, 2.0 * y - 1.0, 2.0, 0.0]);
        StreamDerivatives {
            phi: a[0] * b[0],
            x: a[1] * b[0],
            y: a[0] * b[1],
            xx: a[2] * b[0],
            xy: a[1] * b[1],
            yy: a[0] * b[2],
            xxx: a[3] * b[0],
            xxy: a[2] * b[1],
            xyy: a[1] * b[2],
            yyy: a[0] * b[3],
        }
    }
}

/// `p = sin(4πx) e^{πy}`, with zero mean on the unit square.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpSinePressure;

impl PressureFunction for ExpSinePressure {
    fn value(&self, x: f64, y: f64) -> f64 {
        (4.0 * PI * x).sin() * (PI * y).exp()
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let e = (PI * y).exp();
        let (s, c) = (4.0 * PI * x).sin_cos();
        [4.0 * PI * c * e, PI * s * e]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroStream;

impl StreamFunction for ZeroStream {
    fn derivatives(&self, _x: f64, _y: f64) -> StreamDerivatives {
        StreamDerivatives::default()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPressure;

impl PressureFunction for ZeroPressure {
    fn value(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    fn gradient(&self, _x: f64, _y: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// `f = −Δu + ∇p` for `u = (φ_y, −φ_x)`.
pub fn forcing_from<'a>(
    stream: &'a dyn StreamFunction,
    pressure: &'a dyn PressureFunction,
) -> impl Fn(f64, f64) -> [f64; 2] + Sync + 'a {
    move |x, y| {
        let d = stream.derivatives(x, y);
        let [px, py] = pressure.gradient(x, y);
        [-(d.xxy + d.yyy) + px, d.xxx + d.xyy + py]
    }
}

/// Exact Stokes solution `u = (φ_y, −φ_x)`, `p`, and its forcing.
pub struct ManufacturedCase {
    stream: Box<dyn StreamFunction>,
    pressure: Box<dyn PressureFunction>,
}

impl ManufacturedCase {
    pub fn new(stream: impl StreamFunction + 'static, pressure: impl PressureFunction + 'static) -> Self {
        Self { stream: Box::new(stream), pressure: Box::new(pressure) }
    }

    /// The trigonometric-polynomial benchmark on the unit square.
    pub fn reference() -> Self {
        Self::new(TrigPolyStream, ExpSinePressure)
    }

    pub fn zero() -> Self {
        Self::new(ZeroStream, ZeroPressure)
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.stream.derivatives(x, y);
        [d.y, -d.x]
    }

    /// `[[∂x u₁, ∂y u₁], [∂x u₂, ∂y u₂]]`.
    pub fn velocity_gradient(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let d = self.stream.derivatives(x, y);
        [[d.xy, d.yy], [-d.xx, -d.xy]]
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        self.pressure.value(x, y)
    }

    pub fn forcing(&self, x: f64, y: f64) -> [f64; 2] {
        forcing_from(self.stream.as_ref(), self.pressure.as_ref())(x, y)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    /// `‖u − u_h‖₀`
    pub u_l2: f64,
    /// `|u − u_h|₁,ₕ` (broken)
    pub u_h1: f64,
    /// `‖p − p_h‖₀`
    pub p_l2: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.u_l2, self.u_h1, self.p_l2]
    }
}

/// Per-square Gauss quadrature of the velocity, broken-gradient and pressure
/// errors against the exact solution.
pub fn error_norms(
    mesh: &SquareMesh,
    u_h: &NcVectorField<'_>,
    p_h: &PiecewiseConstField<'_>,
    case: &ManufacturedCase,
    quad_order: usize,
) -> ErrorNorms {
    let rule = SquareRule::new(quad_order.max(1));
    let (mut eu, mut eg, mut ep) = (0.0, 0.0, 0.0);
    for q in 0..mesh.n_squares() {
        let [lx, ly] = u_h.local_linear(q);
        let ph = p_h.get(q);
        rule.for_each_point(mesh, q, |x, y, xh, yh, w| {
            let [u1, u2] = case.velocity(x, y);
            let [[u1x, u1y], [u2x, u2y]] = case.velocity_gradient(x, y);
            let d1 = u1 - lx.eval(xh, yh);
            let d2 = u2 - ly.eval(xh, yh);
            eu += w * (d1 * d1 + d2 * d2);
            let g = [u1x - lx.beta, u1y - lx.gamma, u2x - ly.beta, u2y - ly.gamma];
            eg += w * g.iter().map(|v| v * v).sum::<f64>();
            let dp = case.pressure(x, y) - ph;
            ep += w * dp * dp;
        });
    }
    ErrorNorms { u_l2: eu.sqrt(), u_h1: eg.sqrt(), p_l2: ep.sqrt() }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyConfig {
    pub solver: SolverConfig,
    /// Gauss points per direction for the load vector and pressure sweep.
    pub load_quad: usize,
    /// Gauss points per direction for the error norms.
    pub error_quad: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), load_quad: 3, error_quad: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dimensions {
    pub red: usize,
    pub black: usize,
    /// `dim([NC₀]² × M′) = 2 N(interior vertices) + N(squares) − 2`.
    pub full: usize,
}

pub fn dimensions(mesh: &SquareMesh) -> Dimensions {
    Dimensions {
        red: mesh.interior_squares_of(SquareColor::Red).len(),
        black: mesh.interior_squares_of(SquareColor::Black).len(),
        full: mesh.counts().mixed_dimension(),
    }
}

/// Result of solving the reference case on one `n × n` unit-square mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub dims: Dimensions,
    pub errors: ErrorNorms,
    pub cg_iterations: [usize; 2],
}

pub fn run_level(n: usize, config: &StudyConfig) -> Result<LevelResult, Error> {
    let mesh = SquareMesh::build_rectangular(n, n, 1.0 / n as f64)?;
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let sol = solve_velocity(&mesh, &f, config.load_quad, &config.solver)?;
    let p = recover_pressure(&mesh, &sol.velocity, &f, None, config.load_quad)?;
    Ok(LevelResult {
        n,
        dims: dimensions(&mesh),
        errors: error_norms(&mesh, &sol.velocity, &p.pressure, &case, config.error_quad),
        cg_iterations: [sol.red.iterations, sol.black.iterations],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: LevelResult,
    /// Observed orders against the previous row; `None` on the first row.
    pub orders: Option<[f64; 3]>,
    pub seconds: f64,
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)`; `log₂` of the error
/// ratio when the mesh is refined by halving.
pub fn observed_order(e_coarse: f64, e_fine: f64, n_coarse: usize, n_fine: usize) -> f64 {
    (e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

/// Attaches observed orders to consecutive level results.
pub fn with_orders(levels: Vec<(LevelResult, f64)>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (level, seconds) in levels {
        let orders = rows.last().map(|prev| {
            let (a, b) = (prev.level.errors.as_array(), level.errors.as_array());
            [0, 1, 2].map(|k| observed_order(a[k], b[k], prev.level.n, level.n))
        });
        rows.push(ConvergenceRow { level, orders, seconds });
    }
    rows
}

/// Runs the reference case on every level (strictly ascending) and reports
/// errors, orders and wall time.
pub fn convergence_study(levels: &[usize], config: &StudyConfig) -> Result<Vec<ConvergenceRow>, Error> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("levels must be non-empty and strictly ascending: {levels:?}")));
    }
    let mut results = Vec::with_capacity(levels.len());
    for &n in levels {
        let start = std::time::Instant::now();
        let level = run_level(n, config)?;
        results.push((level, start.elapsed().as_secs_f64()));
    }
    Ok(with_orders(results))
}

pub const CSV_HEADER: &str = "mesh,dim_red,dim_black,dim_full,err_u_l2,ord_u_l2,err_u_h1,ord_u_h1,err_p_l2,ord_p_l2,seconds";

/// `1.2345E-3` / `2.1164E+0`: five significant digits, signed exponent.
pub fn sci(v: f64) -> String {
    let s = format!("{v:.4E}");
    match s.split_once('E') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}E+{e}"),
        _ => s,
    }
}

/// CSV table: errors in scientific notation with 5 significant digits,
/// orders with 4 decimals (empty on the first row).
pub fn to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let l = &row.level;
        let e = l.errors.as_array();
        let o = row.orders.map(|o| o.map(|v| format!("{v:.4}"))).unwrap_or_default();
        let _ = writeln!(
            out,
            "{n}x{n},{},{},{},{},{},{},{},{},{},{:.3}",
            l.dims.red,
            l.dims.black,
            l.dims.full,
            sci(e[0]),
            o[0],
            sci(e[1]),
            o[1],
            sci(e[2]),
            o[2],
            row.seconds,
            n = l.n,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_case_has_zero_forcing() {
        let case = ManufacturedCase::zero();
        assert_eq!(case.forcing(0.3, 0.4), [0.0, 0.0]);
        assert_eq!(case.velocity(0.3, 0.4), [0.0, 0.0]);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn forcing_matches_symbolic_values() {
        // Reference values from an independent symbolic differentiation.
        let case = ManufacturedCase::reference();
        let cases = [
            ((0.3, 0.7), [-16.824017337540675941, -22.544162998355408980], [0.45663323623061062062, -0.010656266598132141610], -5.3000764370110379907),
            ((0.125, 5.0 / 9.0), [8.0096379482073821010, 66.743463319976610158], [0.10960984634450162999, 0.26101449967213543694], 5.7277870502990333162),
        ];
        for ((x, y), f, u, p) in cases {
            let got = case.forcing(x, y);
            for k in 0..2 {
                assert!((got[k] - f[k]).abs() <= 1e-12 * f[k].abs(), "{got:?} vs {f:?}");
                assert!((case.velocity(x, y)[k] - u[k]).abs() <= 1e-13);
            }
            assert!((case.pressure(x, y) - p).abs() <= 1e-13);
        }
    }

    #[test]
    fn orders_and_csv() {
        let mk = |n: usize, e: f64| LevelResult {
            n,
            dims: Dimensions { red: 1, black: 1, full: 3 },
            errors: ErrorNorms { u_l2: e * e, u_h1: e, p_l2: e },
            cg_iterations: [0, 0],
        };
        let rows = with_orders(vec![(mk(8, 0.1), 0.5), (mk(16, 0.05), 1.25)]);
        assert!(rows[0].orders.is_none());
        let o = rows[1].orders.unwrap();
        assert!((o[0] - 2.0).abs() < 1e-12 && (o[1] - 1.0).abs() < 1e-12);
        let csv = to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "8x8,1,1,3,1.0000E-2,,1.0000E-1,,1.0000E-1,,0.500");
        assert_eq!(lines[2], "16x16,1,1,3,2.5000E-3,2.0000,5.0000E-2,1.0000,5.0000E-2,1.0000,1.250");
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci(2.11641), "2.1164E+0");
        assert_eq!(sci(5.60912e-2), "5.6091E-2");
        assert_eq!(sci(130050.0), "1.3005E+5");
    }

    #[test]
    fn study_rejects_unsorted_levels() {
        assert!(matches!(convergence_study(&[16, 8], &StudyConfig::default()), Err(Error::InvalidArgument(_))));
        assert!(matches!(convergence_study(&[], &StudyConfig::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dimensions_of_first_levels() {
        let m = SquareMesh::build_rectangular(8, 8, 0.125).unwrap();
        assert_eq!(dimensions(&m), Dimensions { red: 18, black: 18, full: 160 });
    }
}
