#![allow(dead_code)]

use nc_divfree::harness::checks::L_SHAPE;
use nc_divfree::mesh::{Mask, SquareMesh};
use nc_divfree::nc_space::{NcScalarField, NcVectorField};
use rand::Rng;

/// Union of axis-aligned rectangles `(i0, j0, w, h)` clipped to `nx × ny`.
pub fn rect_union(nx: usize, ny: usize, rects: &[(usize, usize, usize, usize)]) -> Mask {
    Mask::from_fn(nx, ny, |i, j| rects.iter().any(|&(i0, j0, w, h)| i >= i0 && i < i0 + w && j >= j0 && j < j0 + h))
}

/// A blob of 1–4 overlapping rectangles of side ≥ 2 on a small grid; many
/// (not all) of these pass validation.
pub fn random_blob(rng: &mut impl Rng) -> Mask {
    let nx = rng.gen_range(2..=10);
    let ny = rng.gen_range(2..=10);
    let count = rng.gen_range(1..=4);
    let rects: Vec<_> = (0..count)
        .map(|_| {
            let w = rng.gen_range(2..=nx);
            let h = rng.gen_range(2..=ny);
            (rng.gen_range(0..=nx - w), rng.gen_range(0..=ny - h), w, h)
        })
        .collect();
    rect_union(nx, ny, &rects)
}

pub fn l_shape(h: f64) -> SquareMesh {
    SquareMesh::build_masked(&L_SHAPE.parse().unwrap(), h).unwrap()
}

pub fn unit_square(n: usize) -> SquareMesh {
    SquareMesh::build_rectangular(n, n, 1.0 / n as f64).unwrap()
}

pub fn random_field<'m>(mesh: &'m SquareMesh, rng: &mut impl Rng) -> NcVectorField<'m> {
    let n = mesh.n_interior_vertices();
    let mut c = || NcScalarField::from_coeffs(mesh, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let x = c();
    let y = c();
    NcVectorField::new(x, y).unwrap()
}
