mod common;

use nc_divfree::divfree::{assemble_load, basis_function};
use nc_divfree::harness::{error_norms, ManufacturedCase};
use nc_divfree::mesh::SquareColor;
use nc_divfree::oracle::{brute_quadrature, solve_mixed};
use nc_divfree::pressure::recover_pressure;
use nc_divfree::solver::{solve_velocity, SolverConfig};

#[test]
fn load_vector_against_midpoint_rule() {
    let mesh = common::unit_square(8);
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    for color in SquareColor::BOTH {
        let gauss = assemble_load(&mesh, &f, color, 6).unwrap();
        for (k, &q) in mesh.interior_squares_of(color).iter().enumerate() {
            let psi = basis_function(&mesh, q).unwrap();
            let midpoint = |n: usize| -> f64 {
                (0..mesh.n_squares())
                    .map(|s| {
                        brute_quadrature(&mesh, s, n, |x, y| {
                            let [fx, fy] = f(x, y);
                            let [ux, uy] = psi.eval_in_square(s, x, y);
                            fx * ux + fy * uy
                        })
                    })
                    .sum()
            };
            // Richardson step removes the O(d²) midpoint error.
            let brute = (4.0 * midpoint(64) - midpoint(32)) / 3.0;
            assert!((gauss[k] - brute).abs() < 1e-7 * (1.0 + brute.abs()), "{q}: {} vs {brute}", gauss[k]);
        }
    }
}

#[test]
fn error_norms_against_midpoint_rule() {
    let mesh = common::unit_square(8);
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let sol = solve_velocity(&mesh, &f, 3, &SolverConfig::default()).unwrap();
    let p = recover_pressure(&mesh, &sol.velocity, &f, None, 3).unwrap();
    let e = error_norms(&mesh, &sol.velocity, &p.pressure, &case, 4);
    let (mut eu, mut ep) = (0.0, 0.0);
    for s in 0..mesh.n_squares() {
        eu += brute_quadrature(&mesh, s, 64, |x, y| {
            let [a, b] = case.velocity(x, y);
            let [c, d] = sol.velocity.eval_in_square(s, x, y);
            (a - c).powi(2) + (b - d).powi(2)
        });
        ep += brute_quadrature(&mesh, s, 64, |x, y| (case.pressure(x, y) - p.pressure.get(s)).powi(2));
    }
    assert!((e.u_l2 - eu.sqrt()).abs() < 1e-3 * e.u_l2, "{} vs {}", e.u_l2, eu.sqrt());
    assert!((e.p_l2 - ep.sqrt()).abs() < 1e-3 * e.p_l2, "{} vs {}", e.p_l2, ep.sqrt());
}

#[test]
fn mixed_solution_error_on_coarse_mesh() {
    let mesh = common::unit_square(8);
    let case = ManufacturedCase::reference();
    let f = |x: f64, y: f64| case.forcing(x, y);
    let m = solve_mixed(&mesh, &f, 3).unwrap();
    let e = error_norms(&mesh, &m.velocity, &m.pressure, &case, 4);
    assert!((e.u_l2 - 5.6091e-2).abs() < 0.02 * 5.6091e-2, "{}", e.u_l2);
}

#[test]
fn mixed_solve_on_l_shape_is_divergence_free() {
    let mesh = common::l_shape(0.125);
    let case = ManufacturedCase::reference();
    let m = solve_mixed(&mesh, &|x, y| case.forcing(x, y), 3).unwrap();
    assert!(m.velocity.div_h().max_abs() < 1e-10);
}
