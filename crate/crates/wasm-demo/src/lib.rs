//! Browser demo: mask inspection, basis-function curls and a full solve,
//! each returning a grid of per-square values for a canvas heatmap.
//!
//! The `wasm_bindgen` exports are thin wrappers over the plain functions in
//! [`demo`], which are what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod demo {
    use nc_divfree::divfree::{basis_function, stencil_value};
    use nc_divfree::harness::{self, ManufacturedCase};
    use nc_divfree::mesh::{Mask, SquareColor, SquareMesh};
    use nc_divfree::pressure::recover_pressure;
    use nc_divfree::solver::{solve_velocity, SolverConfig};

    /// Per-square values on the mask's bounding grid, row-major with `j = 0`
    /// at the bottom; absent cells hold NaN.
    #[derive(Clone, Debug, PartialEq)]
    pub struct Grid {
        pub nx: usize,
        pub ny: usize,
        pub values: Vec<f64>,
        pub summary: String,
    }

    impl Grid {
        fn from_mesh(mesh: &SquareMesh, value: impl Fn(usize) -> f64, summary: String) -> Self {
            let (nx, ny) = (mesh.nx(), mesh.ny());
            let mut values = vec![f64::NAN; nx * ny];
            for q in 0..mesh.n_squares() {
                let c = mesh.square_cell(q);
                values[c.j * nx + c.i] = value(q);
            }
            Self { nx, ny, values, summary }
        }

        pub fn at(&self, i: usize, j: usize) -> f64 {
            self.values[j * self.nx + i]
        }
    }

    /// Unit-width domain: `h = 1 / max(nx, ny)`.
    pub fn mesh_from_text(text: &str) -> Result<SquareMesh, String> {
        let mask: Mask = text.trim().parse().map_err(|e| format!("{e}"))?;
        let h = 1.0 / mask.nx().max(mask.ny()) as f64;
        SquareMesh::build_masked(&mask, h).map_err(|e| format!("{e}"))
    }

    pub fn square_mask(n: usize) -> String {
        Mask::full(n.max(1), n.max(1)).to_string()
    }

    /// Square kinds: 1/2 red/black boundary, 3/4 red/black interior.
    pub fn inspect(text: &str) -> Result<Grid, String> {
        let mesh = mesh_from_text(text)?;
        let c = mesh.counts();
        let dims = harness::dimensions(&mesh);
        let summary = format!(
            "{} squares, {} interior vertices, {} interior squares ({} red, {} black); velocity-pressure dimension {}",
            mesh.n_squares(),
            c.n_interior_vertices,
            mesh.n_interior_squares(),
            dims.red,
            dims.black,
            dims.full
        );
        Ok(Grid::from_mesh(
            &mesh,
            |q| {
                let red = mesh.color(q) == SquareColor::Red;
                (if mesh.is_interior_square(q) { 3.0 } else { 1.0 }) + if red { 0.0 } else { 1.0 }
            },
            summary,
        ))
    }

    /// `h · curl_h Ψ^Q` for the interior square at `(i, j)`.
    pub fn basis_curl(text: &str, i: usize, j: usize) -> Result<Grid, String> {
        let mesh = mesh_from_text(text)?;
        let q = mesh.square_at(i, j).ok_or_else(|| format!("no square at ({i}, {j})"))?;
        let psi = basis_function(&mesh, q).map_err(|e| format!("{e}"))?;
        let curl = psi.curl_h();
        let h = mesh.h();
        let couplings: Vec<String> = mesh
            .interior_squares_of(mesh.color(q))
            .iter()
            .filter_map(|&s| {
                let c = mesh.square_cell(s);
                let (di, dj) = (c.i as isize - i as isize, c.j as isize - j as isize);
                stencil_value(di, dj).map(|v| format!("({},{}): {v}", c.i, c.j))
            })
            .collect();
        let summary = format!(
            "max |div| = {:.1e}; stiffness row: {}",
            psi.div_h().max_abs(),
            couplings.join(", ")
        );
        Ok(Grid::from_mesh(&mesh, |s| h * curl.get(s), summary))
    }

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Field {
        Pressure,
        Speed,
        Curl,
        PressureError,
    }

    impl std::str::FromStr for Field {
        type Err = String;

        fn from_str(s: &str) -> Result<Self, String> {
            match s {
                "pressure" => Ok(Self::Pressure),
                "speed" => Ok(Self::Speed),
                "curl" => Ok(Self::Curl),
                "pressure-error" => Ok(Self::PressureError),
                _ => Err(format!("unknown field {s:?}")),
            }
        }
    }

    /// Solves the benchmark forcing on the mask and returns one field.
    pub fn solve(text: &str, field: Field) -> Result<Grid, String> {
        let mesh = mesh_from_text(text)?;
        let case = ManufacturedCase::reference();
        let f = |x: f64, y: f64| case.forcing(x, y);
        let sol = solve_velocity(&mesh, &f, 3, &SolverConfig::default()).map_err(|e| format!("{e}"))?;
        let p = recover_pressure(&mesh, &sol.velocity, &f, None, 3).map_err(|e| format!("{e}"))?;
        let mut summary = format!(
            "CG iterations red {} / black {}; max |div u_h| = {:.1e}",
            sol.red.iterations,
            sol.black.iterations,
            sol.velocity.div_h().max_abs()
        );
        if mesh.is_full_rectangle() && mesh.nx() == mesh.ny() {
            let e = harness::error_norms(&mesh, &sol.velocity, &p.pressure, &case, 4);
            summary.push_str(&format!(
                "; errors: u L2 {}, u H1 {}, p L2 {}",
                harness::sci(e.u_l2),
                harness::sci(e.u_h1),
                harness::sci(e.p_l2)
            ));
        }
        let curl = sol.velocity.curl_h();
        Ok(Grid::from_mesh(
            &mesh,
            |q| match field {
                Field::Pressure => p.pressure.get(q),
                Field::Curl => curl.get(q),
                Field::Speed => {
                    let [lx, ly] = sol.velocity.local_linear(q);
                    lx.alpha.hypot(ly.alpha)
                }
                Field::PressureError => {
                    let [x, y] = mesh.square_center(q);
                    (p.pressure.get(q) - case.pressure(x, y)).abs()
                }
            },
            summary,
        ))
    }
}

#[wasm_bindgen]
pub struct Grid(demo::Grid);

#[wasm_bindgen]
impl Grid {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.0.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.0.ny
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.0.summary.clone()
    }
}

fn wrap(r: Result<demo::Grid, String>) -> Result<Grid, JsError> {
    r.map(Grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = squareMask)]
pub fn square_mask(n: usize) -> String {
    demo::square_mask(n)
}

#[wasm_bindgen(js_name = inspectMask)]
pub fn inspect_mask(text: &str) -> Result<Grid, JsError> {
    wrap(demo::inspect(text))
}

#[wasm_bindgen(js_name = basisCurl)]
pub fn basis_curl(text: &str, i: usize, j: usize) -> Result<Grid, JsError> {
    wrap(demo::basis_curl(text, i, j))
}

#[wasm_bindgen(js_name = solveField)]
pub fn solve_field(text: &str, field: &str) -> Result<Grid, JsError> {
    wrap(field.parse().and_then(|f| demo::solve(text, f)))
}
