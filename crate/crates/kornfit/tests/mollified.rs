use covering::DyadicCube;
use field_core::synth::{centered_crack, random_skew, random_vector, rigid_field, smooth_sinusoid, with_cracks, with_patches, RigidPatch};
use field_core::{symmetric_gradient, GridSpec, JumpSet, Mollifier};
use kornfit::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn centre_cube(g: &GridSpec, side: usize) -> DyadicCube {
    let a = (g.cells_per_side - side) / 2;
    DyadicCube { level: 0, anchor: [a, a, 0], side }
}

#[test]
fn empty_exceptional_set_without_jumps_has_no_error() {
    let g = GridSpec::unit(2, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = smooth_sinusoid(g, 0.3, 2.0, &mut rng);
    let jumps = JumpSet::empty(g);
    let strain = symmetric_gradient(&u, &jumps).unwrap();
    let cube = centre_cube(&g, 48);
    let fit = extract_exceptional_set(&u, &jumps, &strain, &cube, &FitConfig::default()).unwrap();
    assert!(fit.omega.is_empty());
    let m = mollified_strain_error(&u, &strain, &cube, &fit, &Mollifier::default(), 2.0).unwrap();
    assert!(m.cells > 0);
    assert!(m.ratio < 1e-20, "{}", m.ratio);
}

#[test]
fn rigid_field_has_no_error_for_any_exceptional_set() {
    let g = GridSpec::unit(2, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, b) = (random_skew(&mut rng, 2, 1.0), random_vector(&mut rng, 2, 1.0));
    let u = rigid_field(g, &w, &b);
    let jumps = JumpSet::empty(g);
    let strain = symmetric_gradient(&u, &jumps).unwrap();
    let cube = centre_cube(&g, 24);
    let mut fit = extract_exceptional_set(&u, &jumps, &strain, &cube, &FitConfig::default()).unwrap();
    let mut cells = cube.cells(&g, covering::Enlargement::Double);
    cells.shuffle(&mut rng);
    cells.truncate(40);
    cells.sort_unstable();
    fit.omega.cells = cells;
    let m = mollified_strain_error(&u, &strain, &cube, &fit, &Mollifier::default(), 2.0).unwrap();
    assert!(m.error < 1e-20, "{}", m.error);
}

/// Smooth background plus a centred crack of `faces` faces with a fixed opening.
fn cracked(g: GridSpec, faces: usize) -> field_core::synth::Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = smooth_sinusoid(g, 0.05, 1.0, &mut rng);
    with_cracks(&base, &[centered_crack(&g, faces, [0.02, 0.01, 0.0])]).unwrap()
}

#[test]
fn error_decays_along_a_shrinking_crack_family() {
    let g = GridSpec::unit(2, 256).unwrap();
    let cube = centre_cube(&g, 128);
    let mut points = Vec::new();
    for k in 0..4 {
        let faces = 64 >> (2 * k);
        let syn = cracked(g, faces);
        let strain = symmetric_gradient(&syn.u, &syn.jumps).unwrap();
        let fit = extract_exceptional_set(&syn.u, &syn.jumps, &strain, &cube, &FitConfig::default()).unwrap();
        let m = mollified_strain_error(&syn.u, &strain, &cube, &fit, &Mollifier::default(), 2.0).unwrap();
        points.push((m.jump_ratio, m.ratio));
    }
    println!("(jump ratio, error ratio): {points:?}");
    for w in points.windows(2) {
        assert!(w[1].1 < w[0].1, "{points:?}");
    }
    let pbar = decay_exponent(&points).unwrap();
    println!("empirical exponent {pbar:.3}");
    assert!(pbar > 0.0);
}

#[test]
fn trimmed_inclusion_leaves_only_the_boundary_error() {
    let g = GridSpec::unit(2, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = smooth_sinusoid(g, 0.02, 1.0, &mut rng);
    let patch = RigidPatch { lo: [126, 126, 0], hi: [130, 130, 1], w: random_skew(&mut rng, 2, 1.0), b: random_vector(&mut rng, 2, 1.0) };
    let syn = with_patches(&base, &[patch]).unwrap();
    let strain = symmetric_gradient(&syn.u, &syn.jumps).unwrap();
    let cube = centre_cube(&g, 64);
    let fit = extract_exceptional_set(&syn.u, &syn.jumps, &strain, &cube, &FitConfig::default()).unwrap();
    assert!(fit.omega.cells.len() >= 16 && !fit.contract_violated, "{} {} {} {}", fit.omega.cells.len(), fit.contract_violated, fit.threshold, fit.budget_cells);
    let trimmed = mollified_strain_error(&syn.u, &strain, &cube, &fit, &Mollifier::default(), 2.0).unwrap();
    let mut untrimmed = fit.clone();
    untrimmed.omega.cells.clear();
    let raw = mollified_strain_error(&syn.u, &strain, &cube, &untrimmed, &Mollifier::default(), 2.0).unwrap();
    assert!(trimmed.error < 1e-3 * raw.error, "{} vs {}", trimmed.error, raw.error);
}
