//! Seeded small problems shared by the tests and the command line.

use field_core::synth::{affine_eval, random_skew, random_vector};
use field_core::{AaBox, DisplacementField, EnergyParams, Face, GridSpec, HookeTensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solver::{Boundary, Functional, Problem};
use crate::OracleError;

/// Faces between cell layers `plane` and `plane + 1` along `axis`.
pub fn plane_faces(grid: &GridSpec, axis: usize, plane: usize) -> Vec<Face> {
    grid.interior_faces().filter(|f| f.axis == axis && grid.coords(f.cell)[axis] == plane).collect()
}

/// Two rigid motions on either side of the plane `x_axis = x0`, the second
/// shifted by `offset`.
pub fn two_motion_field<R: Rng>(grid: GridSpec, axis: usize, x0: f64, offset: [f64; 3], rng: &mut R) -> DisplacementField {
    let dim = grid.dim;
    let (w1, b1) = (random_skew(rng, dim, 0.3), random_vector(rng, dim, 0.3));
    let (w2, mut b2) = (random_skew(rng, dim, 0.3), random_vector(rng, dim, 0.3));
    for a in 0..dim {
        b2[a] += offset[a];
    }
    DisplacementField::from_fn(grid, |x| if x[axis] < x0 { affine_eval(&w1, &b1, x) } else { affine_eval(&w2, &b2, x) })
        .expect("finite rigid motions")
}

/// Exhaustive-regime instance on a 2D grid with `M ∈ {6, 7, 8}`.
///
/// The outer ring of cells carries two rigid motions that differ across a
/// grid plane; the candidates are that plane and random extra faces, at
/// most 14 in all. Minimization is of `G_0` on the whole square.
pub fn exhaustive_instance(seed: u64) -> Result<(Problem, Vec<Face>), OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(6..=8);
    let grid = GridSpec::small(2, m, 1.0)?;
    let axis = rng.gen_range(0..2);
    let plane = rng.gen_range(m / 2 - 1..=m / 2);
    let x0 = -grid.half_width + (plane + 1) as f64 * grid.h();
    let offset = random_vector(&mut rng, 2, 1.0);
    let field = two_motion_field(grid, axis, x0, offset, &mut rng);
    let mut candidates = plane_faces(&grid, axis, plane);
    let mut others: Vec<Face> = grid.interior_faces().filter(|f| !candidates.contains(f)).collect();
    others.shuffle(&mut rng);
    let extra = rng.gen_range(2..=14 - m);
    candidates.extend(others.into_iter().take(extra));
    let hooke = HookeTensor::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), 2)?;
    let mut params = EnergyParams::standard(hooke, grid);
    params.beta = rng.gen_range(0.02..0.5);
    params.kappa = rng.gen_range(0.01..0.2);
    let boundary = Boundary::Inside { region: AaBox::centered(grid.half_width), field };
    Ok((Problem::new(params, Functional::G0, boundary), candidates))
}

/// Fidelity towards two rigid motions that differ across the vertical mid
/// line of a 2D grid with `M` cells per side; the candidates are that line.
pub fn plane_crack_problem(m: usize, beta: f64, seed: u64) -> Result<(Problem, Vec<Face>), OracleError> {
    let grid = GridSpec::small(2, m, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = two_motion_field(grid, 0, 0.0, [1.0, 0.5, 0.0], &mut rng);
    let mut params = EnergyParams::standard(HookeTensor::new(1.0, 1.0, 2)?, grid);
    params.g = g;
    params.beta = beta;
    params.kappa = 1.0;
    let candidates = plane_faces(&grid, 0, m / 2 - 1);
    Ok((Problem::new(params, Functional::G, Boundary::Free), candidates))
}
