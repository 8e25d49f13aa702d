use covering::*;
use field_core::synth::{random_cracks, random_skew, random_vector, rigid_field, with_cracks};
use field_core::{DisplacementField, Face, GridSpec, JumpSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixed_covering(dim: usize, m: usize, delta: f64, i0: usize, min_side: usize) -> WhitneyCovering {
    let grid = GridSpec::unit(dim, m).unwrap();
    let sel = CrownSelection::fixed(&grid, delta, i0, min_side).unwrap();
    build_covering(&grid, &sel, delta).unwrap()
}

#[test]
fn rigid_input_selects_smallest_index() {
    let grid = GridSpec::unit(2, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = rigid_field(grid, &random_skew(&mut rng, 2, 1.0), &random_vector(&mut rng, 2, 1.0));
    let sel = select_crown(&u, &JumpSet::empty(grid), 1.0 / 32.0, false, 2.0, 4).unwrap();
    assert_eq!(sel.i0, 1);
    assert!(sel.candidates.iter().all(|c| c.admissible));
    assert!(sel.candidates.len() >= 2);
}

#[test]
fn crown_avoids_a_loaded_annulus() {
    // strain concentrated in C^1 ∪ C^2 pushes the choice to a later index
    let grid = GridSpec::unit(2, 512).unwrap();
    let delta = 1.0 / 64.0;
    let u = DisplacementField::from_fn(grid, |x| {
        let t = x[0].abs().max(x[1].abs());
        if t > 61.0 / 64.0 { [x[0] * (t - 61.0 / 64.0), 0.0, 0.0] } else { [0.0; 3] }
    })
    .unwrap();
    let sel = select_crown(&u, &JumpSet::empty(grid), delta, false, 2.0, 2).unwrap();
    assert!(sel.i0 >= 3);
    let chosen = sel.selected();
    assert_eq!(chosen.strain, 0.0);
    assert!(sel.candidates[0].strain > 0.0 && sel.candidates[1].strain > 0.0);
}

#[test]
fn oversized_delta_is_infeasible() {
    let grid = GridSpec::unit(2, 64).unwrap();
    let u = DisplacementField::zeros(grid);
    let err = select_crown(&u, &JumpSet::empty(grid), 0.25, false, 2.0, 4).unwrap_err();
    assert!(matches!(err, CoveringError::CrownInfeasible(_)));
    let err = select_crown(&u, &JumpSet::empty(grid), 0.1, false, 2.0, 8).unwrap_err();
    assert!(matches!(err, CoveringError::GridTooCoarse { .. }));
}

#[test]
fn interior_tiling_count() {
    // N = 4, i0 = 1: Q^2 has half-width 1/2, tiled by 4 x 4 cubes of side 1/4
    let cov = fixed_covering(2, 64, 0.25, 1, 4);
    assert_eq!(cov.level_counts[0], 16);
    assert!(cov.cubes.iter().take(16).all(|q| q.level == 0 && q.side == 8));
    // slab S_1: side-4 cubes filling a 40-cell square around the 32-cell core
    assert_eq!(cov.level_counts[1], 10 * 10 - 8 * 8);
}

#[test]
fn cubes_and_sliver_partition_the_crown_cube() {
    for (dim, m, delta, i0, ms) in [(2, 256, 1.0 / 16.0, 1, 4), (2, 256, 1.0 / 16.0, 2, 1), (3, 64, 1.0 / 16.0, 1, 1), (3, 128, 1.0 / 16.0, 1, 2)] {
        let cov = fixed_covering(dim, m, delta, i0, ms);
        let grid = cov.grid;
        let mut covered = vec![0u8; grid.num_cells()];
        for q in &cov.cubes {
            for c in q.cells(&grid, Enlargement::Base) {
                covered[c] += 1;
            }
        }
        for c in 0..grid.num_cells() {
            let expected = cov.inside[c] && !cov.sliver[c];
            assert_eq!(covered[c] == 1, expected, "cell {c}");
            assert!(covered[c] <= 1);
        }
        let r = cov.radius();
        assert!(r < 1.0 && r > 1.0 - delta.sqrt());
    }
}

#[test]
fn slab_one_has_half_side_cubes() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let h = cov.grid.h();
    for q in cov.cubes.iter().filter(|q| q.level == 1) {
        assert!((q.side_length(&cov.grid) - cov.delta / 2.0).abs() < 1e-15);
        // lies in S_1 = Q_{R − δ/2} \ Q_{R − δ}
        let c = q.center(&cov.grid);
        let t = c[0].abs().max(c[1].abs());
        assert!(t > cov.inner_radius() && t < cov.radius() - cov.delta / 2.0 + h);
    }
}

#[test]
fn empty_jump_set_gives_only_the_sliver() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let grid = cov.grid;
    let cov = classify(cov, &JumpSet::empty(grid), 1e-4);
    assert!(cov.good.iter().all(|g| *g));
    assert_eq!(cov.bad, cov.sliver);
    let per = bad_set_perimeter(&cov, &JumpSet::empty(grid));
    assert_eq!(per.cube_perimeter, 0.0);
}

#[test]
fn one_face_makes_a_fine_cube_bad() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 2);
    let grid = cov.grid;
    let q = *cov.cubes.iter().find(|q| q.level == 2).unwrap();
    let cell = grid.index([q.anchor[0], q.anchor[1], 0]);
    let j = JumpSet::from_faces(grid, [Face { axis: 0, cell }]).unwrap();
    // η δ_q^{n-1} = 0.4 · 2h < h
    let cov = classify(cov, &j, 0.4);
    let k = cov.cubes.iter().position(|c| *c == q).unwrap();
    assert!(!cov.good[k]);
    assert!(cov.cubes.iter().enumerate().filter(|(_, c)| c.level == 0).all(|(i, _)| cov.good[i]));
}

#[test]
fn small_jump_keeps_level_zero_good() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let grid = cov.grid;
    let eta = 0.5;
    // H(J) = 4 h = 1/32 ≤ η δ
    let faces: Vec<Face> = (0..4).map(|j| Face { axis: 0, cell: grid.index([127, 126 + j, 0]) }).collect();
    let jumps = JumpSet::from_faces(grid, faces).unwrap();
    assert!(jumps.measure() <= eta * cov.delta);
    let cov = classify(cov, &jumps, eta);
    assert!(cov.cubes.iter().enumerate().filter(|(_, c)| c.level == 0).all(|(i, _)| cov.good[i]));
}

#[test]
fn perimeter_of_one_and_two_bad_cubes() {
    let mut cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let grid = cov.grid;
    let j = JumpSet::empty(grid);
    cov = classify(cov, &j, 1.0);
    let s = cov.delta;
    let a = 100;
    cov.good[a] = false;
    let one = bad_set_perimeter(&cov, &j);
    assert!((one.cube_perimeter - 4.0 * s).abs() < 1e-12);
    let right = cov.cubes.iter().position(|q| q.anchor == [cov.cubes[a].anchor[0] + 8, cov.cubes[a].anchor[1], 0]).unwrap();
    cov.good[right] = false;
    let two = bad_set_perimeter(&cov, &j);
    assert!((two.cube_perimeter - 6.0 * s).abs() < 1e-12);
}

/// Short random crack segments in the crown `C^{i0} ∪ C^{i0+1}` of `cov`.
fn crown_segments(cov: &WhitneyCovering, count: usize, rng: &mut ChaCha8Rng) -> JumpSet {
    use rand::Rng;
    let grid = cov.grid;
    let l = grid.cells_per_side / 2;
    let outer = cov.radius_cells();
    let inner = outer - 2 * cov.delta_cells;
    let mut jumps = JumpSet::empty(grid);
    while jumps.len() < count {
        let axis = rng.gen_range(0..grid.dim);
        let along = (axis + 1) % grid.dim;
        let mut c = [l; 3];
        for a in 0..grid.dim {
            c[a] = rng.gen_range(l - outer..l + outer - 1);
        }
        let len = rng.gen_range(1..=4);
        for t in 0..len {
            let mut d = c;
            d[along] = (c[along] + t).min(l + outer - 2);
            let t_max = (0..grid.dim).map(|a| (d[a] as i64 - l as i64).abs().max(d[a] as i64 + 1 - l as i64).abs()).max().unwrap();
            if t_max as usize > inner {
                jumps.insert(Face { axis, cell: grid.index(d) }).unwrap();
            }
        }
    }
    jumps
}

#[test]
fn bad_set_perimeter_ratio_is_bounded() {
    let eta = 0.5;
    for (dim, m, ms, delta) in [(2usize, 256usize, 1usize, 1.0 / 16.0), (2, 256, 1, 1.0 / 8.0), (3, 64, 1, 1.0 / 8.0)] {
        let mut worst: f64 = 0.0;
        let mut nontrivial = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cov = fixed_covering(dim, m, delta, 1, ms);
            let jumps = crown_segments(&cov, 8, &mut rng);
            let cov = classify(cov, &jumps, eta);
            let per = bad_set_perimeter(&cov, &jumps);
            if per.cube_perimeter > 0.0 {
                nontrivial += 1;
                worst = worst.max(per.ratio);
            }
        }
        let bound = 2.0 * dim as f64 * 4f64.powi(dim as i32) / eta;
        assert!(nontrivial > 0);
        assert!(worst <= bound, "ratio {worst} exceeds {bound}");
    }
}

#[test]
fn partition_gradient_constant_is_scale_free() {
    let mut constants = Vec::new();
    for delta in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let cov = fixed_covering(2, 256, delta, 1, 2);
        let grid = cov.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cracks = random_cracks(&grid, 3, 10, 0.1, &mut rng);
        let syn = with_cracks(&DisplacementField::zeros(grid), &cracks).unwrap();
        let cov = classify(cov, &syn.jumps, 0.5);
        let pou = partition_of_unity(&cov).unwrap();
        assert!(pou.report.max_sum_error <= 1e-12);
        assert!(pou.report.max_terms <= 2 * 9);
        constants.push(pou.report.gradient_constant);
    }
    // |φ̃′| ≤ max|plateau′| · 12/δ_q per axis; normalising by Σφ̃ ≥ 1 at most
    // doubles it for each overlapping term
    let slope = (0..1000).map(|i| covering::partition::plateau(i as f64 / 1000.0).1.abs()).fold(0.0, f64::max);
    let bound = 2.0 * 9.0 * 12.0 * slope * 2f64.sqrt();
    assert!(constants.iter().all(|c| *c <= bound), "{constants:?} vs {bound}");
    assert!(constants[0] > 0.0);
}

#[test]
fn isolated_good_cube_has_unit_weight() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let grid = cov.grid;
    let mut cov = classify(cov, &JumpSet::empty(grid), 1.0);
    // keep one interior cube and its ring of neighbours good, the rest bad
    let k = 300;
    let centre = cov.cubes[k];
    for (i, q) in cov.cubes.clone().iter().enumerate() {
        if i != k {
            cov.good[i] = false;
            for c in q.cells(&grid, Enlargement::Base) {
                cov.bad[c] = true;
            }
        }
    }
    let pou = partition_of_unity(&cov).unwrap();
    for c in centre.cells(&grid, Enlargement::Base) {
        assert_eq!(pou.weights(c), &[(k as u32, 1.0)]);
    }
}

#[test]
fn overlapping_supports_share_the_weight() {
    let cov = fixed_covering(2, 256, 1.0 / 16.0, 1, 4);
    let grid = cov.grid;
    let cov = classify(cov, &JumpSet::empty(grid), 1.0);
    let pou = partition_of_unity(&cov).unwrap();
    let shared = (0..grid.num_cells()).find(|&c| pou.weights(c).len() == 2).unwrap();
    let w = pou.weights(shared);
    assert!(w.iter().all(|(_, v)| *v > 0.0 && *v < 1.0));
    assert!((w[0].1 + w[1].1 - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn structural_invariants(k in 0usize..3, seed in any::<u64>(), three in any::<bool>()) {
        let (dim, m, ms, delta) = if three {
            (3, 64, [2, 1, 1][k], [1.0 / 8.0, 1.0 / 16.0, 1.0 / 8.0][k])
        } else {
            (2, 256, [4, 2, 1][k], [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0][k])
        };
        let grid = GridSpec::unit(dim, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cracks = random_cracks(&grid, 3, 5, 0.1, &mut rng);
        let syn = with_cracks(&DisplacementField::zeros(grid), &cracks).unwrap();
        let sel = CrownSelection::fixed(&grid, delta, 1, ms).unwrap();
        let cov = classify(build_covering(&grid, &sel, delta).unwrap(), &syn.jumps, 0.5);
        let st = check_structure(&cov);
        prop_assert_eq!(st.ratio_violations, 0);
        prop_assert_eq!(st.overlap_violations, 0);
        prop_assert!(st.min_overlap_ratio >= 4f64.powi(-(dim as i32)));
        prop_assert!(st.sigma_constant <= 2.0 * dim as f64 * 2f64.powi(dim as i32 - 1));
        let pou = partition_of_unity(&cov).unwrap();
        prop_assert!(pou.report.max_sum_error <= 1e-12);
        prop_assert!(pou.report.max_terms <= 2 * 3usize.pow(dim as u32));
    }
}
