mod common;

use nc_divfree::divfree::{assemble_curl_form, assemble_stiffness, assemble_stiffness_by_integration};
use nc_divfree::harness::ManufacturedCase;
use nc_divfree::mesh::{Mask, MeshError, SquareColor, SquareMesh};
use nc_divfree::oracle::{divergence_rank, solve_mixed};
use nc_divfree::pressure::recover_pressure;
use nc_divfree::solver::{solve_velocity, SolverConfig};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Rect = (usize, usize, usize, usize);
type MaskSpec = (usize, usize, Vec<Rect>, Vec<(usize, usize)>);

fn rects() -> impl Strategy<Value = MaskSpec> {
    (3usize..=9, 3usize..=9).prop_flat_map(|(nx, ny)| {
        let rect = (0..nx - 1, 0..ny - 1, 2..=nx, 2..=ny);
        let holes = prop::collection::vec((0..nx, 0..ny), 0..3);
        (Just(nx), Just(ny), prop::collection::vec(rect, 1..=4), holes)
    })
}

/// Rectangle union with a few cells knocked out, which exercises every
/// rejection path.
fn mask_of(nx: usize, ny: usize, rs: &[Rect], removed: &[(usize, usize)]) -> Mask {
    let base = common::rect_union(nx, ny, rs);
    Mask::from_fn(nx, ny, |i, j| base.get(i, j) && !removed.contains(&(i, j)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn valid_masks_satisfy_counting_identities((nx, ny, rs, removed) in rects()) {
        let mask = mask_of(nx, ny, &rs, &removed);
        match SquareMesh::build_masked(&mask, 1.0) {
            Ok(mesh) => {
                let c = mesh.counts();
                prop_assert!(c.euler_identity_holds(), "{}", mask);
                prop_assert!(c.edge_identity_holds());
                prop_assert_eq!(c.mixed_dimension(), 2 * mesh.n_interior_vertices() + mesh.n_squares() - 2);
                for color in SquareColor::BOTH {
                    let g = mesh.same_color_adjacency(color).unwrap();
                    prop_assert_eq!(g.reachable_from_first(), g.nodes.len());
                }
            }
            Err(e) => prop_assert!(!matches!(e, MeshError::Inconsistent(_)), "{}", e),
        }
    }

    #[test]
    fn stiffness_assemblies_agree((nx, ny, rs, removed) in rects()) {
        let Ok(mesh) = SquareMesh::build_masked(&mask_of(nx, ny, &rs, &removed), 0.25) else { return Ok(()) };
        for color in SquareColor::BOTH {
            let k = assemble_stiffness(&mesh, color);
            prop_assert!(k.is_symmetric());
            let d = k.to_dense();
            prop_assert!((&d - assemble_stiffness_by_integration(&mesh, color).to_dense()).abs().max() < 1e-12);
            prop_assert!((&d - assemble_curl_form(&mesh, color).to_dense()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn divergence_rank_on_random_domains((nx, ny, rs, removed) in rects()) {
        let Ok(mesh) = SquareMesh::build_masked(&mask_of(nx, ny, &rs, &removed), 1.0) else { return Ok(()) };
        let r = divergence_rank(&mesh);
        prop_assert_eq!(r.rank, mesh.n_squares() - 2);
        prop_assert_eq!(r.nullity, mesh.n_interior_squares());
    }

    #[test]
    fn norm_decomposition_on_random_domains((nx, ny, rs, removed) in rects(), seed in any::<u64>()) {
        let Ok(mesh) = SquareMesh::build_masked(&mask_of(nx, ny, &rs, &removed), 0.1) else { return Ok(()) };
        if mesh.n_interior_vertices() == 0 {
            return Ok(());
        }
        let u = common::random_field(&mesh, &mut ChaCha8Rng::seed_from_u64(seed));
        let s = u.seminorm_1h_sq();
        let gap = s - u.div_h().l2_norm().powi(2) - u.curl_h().l2_norm().powi(2);
        prop_assert!(gap.abs() <= 1e-12 * s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_mixed_solve_on_random_domains((nx, ny, rs, removed) in rects()) {
        let Ok(mesh) = SquareMesh::build_masked(&mask_of(nx, ny, &rs, &removed), 1.0 / 8.0) else { return Ok(()) };
        let case = ManufacturedCase::reference();
        let f = |x: f64, y: f64| case.forcing(x, y);
        let cfg = SolverConfig { tolerance: 1e-13, ..Default::default() };
        let sol = solve_velocity(&mesh, &f, 3, &cfg).unwrap();
        prop_assert!(sol.velocity.div_h().max_abs() < 1e-12);
        let p = recover_pressure(&mesh, &sol.velocity, &f, None, 3).unwrap();
        prop_assert!(p.red_mean().abs() < 1e-12 && p.black_mean().abs() < 1e-12);
        let mixed = solve_mixed(&mesh, &f, 3).unwrap();
        let mut du = sol.velocity.clone();
        du.axpy(-1.0, &mixed.velocity).unwrap();
        prop_assert!(du.seminorm_1h() < 1e-8, "{}", du.seminorm_1h());
        for (a, b) in p.values().iter().zip(mixed.pressure.values()) {
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }
}

#[test]
fn random_masks_hit_every_rejection_kind() {
    // Guards against the generator collapsing onto trivially valid shapes.
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = rects();
    let mut seen = [false; 5];
    for _ in 0..4000 {
        let (nx, ny, rs, removed) = strategy.new_tree(&mut runner).unwrap().current();
        match SquareMesh::build_masked(&mask_of(nx, ny, &rs, &removed), 1.0) {
            Ok(_) => seen[0] = true,
            Err(MeshError::Disconnected { .. }) | Err(MeshError::PinchedVertex { .. }) => seen[1] = true,
            Err(MeshError::Hole { .. }) => seen[2] = true,
            Err(MeshError::InteriorEdgeBoundaryEndpoints { .. }) => seen[3] = true,
            Err(MeshError::DiagonalBoundaryVertices { .. }) | Err(MeshError::FourBoundaryVertices { .. }) => seen[4] = true,
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert_eq!(seen, [true; 5]);
}
