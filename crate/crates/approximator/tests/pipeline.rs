use approximator::instances::{shrinking_crack, small_crack_instance};
use approximator::*;
use field_core::synth::{random_skew, random_vector, rigid_field, smooth_sinusoid, two_motion_crack};
use field_core::{energy_g0, norm3, sub3, EnergyParams, GridSpec, HookeTensor, JumpSet, Region};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loose() -> ApproxConfig {
    ApproxConfig { eta: Some(1.0), ..Default::default() }
}

fn params(grid: GridSpec) -> EnergyParams {
    EnergyParams::standard(HookeTensor::new(1.0, 1.0, grid.dim).unwrap(), grid)
}

fn max_diff(a: &field_core::DisplacementField, b: &field_core::DisplacementField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| norm3(&sub3(x, y))).fold(0.0, f64::max)
}

#[test]
fn rigid_input_is_reproduced() {
    for (dim, m) in [(2, 64), (3, 32)] {
        let grid = GridSpec::unit(dim, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        let u = rigid_field(grid, &random_skew(&mut rng, dim, 1.0), &random_vector(&mut rng, dim, 1.0));
        let jumps = JumpSet::empty(grid);
        let p = params(grid);
        let r = approximate(&u, &jumps, &p, &loose()).unwrap();
        assert!(max_diff(&r.u_tilde, &u) <= 1e-12);
        assert!(r.omega_tilde.is_empty());
        assert!(r.new_jump.is_empty());
        let report = verify_properties(&u, &jumps, &r, &p, &VerifyConfig::default()).unwrap();
        for c in &report.checks {
            assert_eq!(c.realized_constant, 0.0, "{c:?}");
        }
        let trace = boundary_trace_check(&u, &r, &TraceConfig::default());
        assert!(trace.pass);
        assert!(trace.points.iter().all(|pt| pt.ratios.iter().all(|&x| x == 0.0)));
    }
}

#[test]
fn smooth_input_has_no_new_jump() {
    let grid = GridSpec::unit(2, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = smooth_sinusoid(grid, 0.05, 2.0, &mut rng);
    let jumps = JumpSet::empty(grid);
    let p = params(grid);
    let r = approximate(&u, &jumps, &p, &loose()).unwrap();
    assert!(r.new_jump.is_empty());
    assert!(r.omega_tilde.is_empty());
    let report = verify_properties(&u, &jumps, &r, &p, &VerifyConfig::default()).unwrap();
    assert!(report.pass, "{:?}", report.failures());
    assert!(report.smoothness.is_finite());
    assert!(report.p3_relative_excess < 0.05);
}

#[test]
fn regime_gate() {
    let grid = GridSpec::unit(2, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (w1, b1) = (random_skew(&mut rng, 2, 1.0), random_vector(&mut rng, 2, 1.0));
    let (w2, b2) = (random_skew(&mut rng, 2, 1.0), random_vector(&mut rng, 2, 1.0));
    let syn = two_motion_crack(grid, 0.5, (&w1, &b1), (&w2, &b2)).unwrap();
    let err = approximate(&syn.u, &syn.jumps, &params(grid), &ApproxConfig::default()).unwrap_err();
    assert!(matches!(err, ApproxError::Regime { .. }));
    assert!(err.to_string().contains("jump too large for approximation regime"));
}

/// Both sides of P1, P2 and P4 recomputed cell by cell.
#[test]
fn two_motion_crack_cross_check() {
    let grid = GridSpec::unit(2, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w1, b1) = (random_skew(&mut rng, 2, 0.5), random_vector(&mut rng, 2, 0.5));
    let (w2, b2) = (random_skew(&mut rng, 2, 0.5), random_vector(&mut rng, 2, 0.5));
    let delta: f64 = 1.0 / 16.0;
    let syn = two_motion_crack(grid, delta * delta, (&w1, &b1), (&w2, &b2)).unwrap();
    let p = params(grid);
    let r = approximate(&syn.u, &syn.jumps, &p, &loose()).unwrap();
    let report = verify_properties(&syn.u, &syn.jumps, &r, &p, &VerifyConfig::default()).unwrap();
    assert!(report.pass, "{:?}", report.failures());

    let h = grid.h();
    let vol = h * h;
    let inner = Region::cube(1.0 - delta.sqrt());
    assert_eq!(r.new_jump.count_in(&inner), 0);
    let new: Vec<_> = grid.interior_faces().filter(|f| r.new_jump.contains(*f) && !syn.jumps.contains(*f)).collect();
    let p2 = report.check("P2").unwrap();
    assert_eq!(p2.lhs, new.len() as f64 * h);

    let omega_cells = (0..grid.num_cells()).filter(|c| r.omega_tilde.binary_search(c).is_ok()).count();
    let p4 = report.check("P4-omega").unwrap();
    assert!((p4.lhs - omega_cells as f64 * vol).abs() <= 1e-15);
    let r_half = r.radius;
    let in_r = |c: usize| grid.center(c).iter().take(2).all(|x| x.abs() < r_half);
    assert!(r.omega_tilde.iter().all(|&c| in_r(c)));
    let mut lp = 0.0;
    for c in 0..grid.num_cells() {
        if r.omega_tilde.binary_search(&c).is_err() {
            lp += norm3(&sub3(r.u_tilde.value(c), syn.u.value(c))).powi(2) * vol;
        }
    }
    let p4lp = report.check("P4-lp").unwrap();
    assert!((p4lp.lhs - lp).abs() <= 1e-12 * (1.0 + lp), "{} vs {lp}", p4lp.lhs);
    for c in 0..grid.num_cells() {
        if !in_r(c) {
            assert_eq!(r.u_tilde.value(c), syn.u.value(c));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let inst = small_crack_instance(2, 128, 3, 1.0).unwrap();
    let a = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
    let b = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
    assert_eq!(a.u_tilde, b.u_tilde);
    assert_eq!(a.new_jump, b.new_jump);
    assert_eq!(a.omega_tilde, b.omega_tilde);
    assert_eq!(a.cubes, b.cubes);
    let ra = verify_properties(&inst.u, &inst.jumps, &a, &inst.params, &VerifyConfig::default()).unwrap();
    let rb = verify_properties(&inst.u, &inst.jumps, &b, &inst.params, &VerifyConfig::default()).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn second_pass_on_smooth_input_stays_within_budget() {
    let grid = GridSpec::unit(2, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = smooth_sinusoid(grid, 0.08, 2.5, &mut rng);
    let jumps = JumpSet::empty(grid);
    let p = params(grid);
    let first = approximate(&u, &jumps, &p, &loose()).unwrap();
    let config = ApproxConfig { delta: Some(first.delta), ..loose() };
    let second = approximate(&first.u_tilde, &first.new_jump, &p, &config).unwrap();
    let e1 = energy_g0(&first.u_tilde, &first.new_jump, &p, &Region::All).unwrap().total();
    let e2 = energy_g0(&second.u_tilde, &second.new_jump, &p, &Region::All).unwrap().total();
    let s = 1.0 / (2.0 * p.p);
    let budget = PropertyLimits::default().p3_energy * first.delta.powf(s) * e1;
    assert!((e2 - e1).abs() < budget, "{e1} -> {e2}, budget {budget}");
}

#[test]
fn constant_ramp_is_the_whole_cube_energy_check() {
    let inst = small_crack_instance(2, 128, 7, 1.0).unwrap();
    let r = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
    let config = VerifyConfig { box_levels: 0, ramp_slopes: vec![0.0], ramp_centres: vec![[0.0; 3]], ..Default::default() };
    let report = verify_properties(&inst.u, &inst.jumps, &r, &inst.params, &config).unwrap();
    let p3 = report.check("P3-energy").unwrap();
    let p5 = report.check("P5").unwrap();
    assert!((p3.lhs - p5.lhs).abs() <= 1e-10 * (1.0 + p3.lhs), "{} vs {}", p3.lhs, p5.lhs);
}

#[test]
fn psi_ramp_shape() {
    let c = [0.0; 3];
    assert_eq!(psi_ramp(&[0.9, 0.9, 0.0], 2, 0.0, &c), 1.0);
    assert_eq!(psi_ramp(&[0.0, 0.0, 0.0], 2, 4.0, &c), 1.0);
    assert_eq!(psi_ramp(&[0.6, 0.0, 0.0], 2, 4.0, &c), 0.0);
    assert!((psi_ramp(&[0.45, 0.0, 0.0], 2, 4.0, &c) - 0.2).abs() < 1e-12);
}

#[test]
fn shrinking_family_excess_decreases() {
    let mut points = Vec::new();
    for k in 0..4 {
        let (inst, delta) = shrinking_crack(256, k, 9).unwrap();
        let config = ApproxConfig { eta: Some(2.0), delta: Some(delta), ..Default::default() };
        let r = approximate(&inst.u, &inst.jumps, &inst.params, &config).unwrap();
        assert_eq!(r.delta, delta);
        let report = verify_properties(&inst.u, &inst.jumps, &r, &inst.params, &VerifyConfig::default()).unwrap();
        assert_eq!(report.check("P2-containment").unwrap().lhs, 0.0);
        points.push((delta, report.p3_relative_excess));
    }
    assert!(points.windows(2).all(|w| w[1].1 < w[0].1), "{points:?}");
    assert!(decay_sweep(&points).unwrap() > 0.0);
}

#[test]
fn trace_near_a_crack_in_the_crown() {
    let inst = small_crack_instance(2, 256, 2, 1.0).unwrap();
    let r = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
    let trace = boundary_trace_check(&inst.u, &r, &TraceConfig::default());
    assert!(trace.pass, "{:?}", trace.points.iter().filter(|p| !p.decays).collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn result_invariants(seed in 0u64..10_000) {
        let inst = small_crack_instance(2, 64, seed, 1.0).unwrap();
        let r = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
        let grid = *inst.u.grid();
        prop_assert!(1.0 - r.delta.sqrt() < r.radius && r.radius < 1.0);
        let in_r = |c: usize| grid.center(c).iter().take(2).all(|x| x.abs() < r.radius);
        for c in 0..grid.num_cells() {
            if !in_r(c) {
                prop_assert_eq!(r.u_tilde.value(c), inst.u.value(c));
            }
        }
        prop_assert!(r.omega_tilde.iter().all(|&c| in_r(c)));
        for f in r.new_jump.difference(&inst.jumps) {
            let (a, b) = grid.face_cells(f);
            prop_assert!(r.covering.bad[a] != r.covering.bad[b]);
        }
        let report = verify_properties(&inst.u, &inst.jumps, &r, &inst.params, &VerifyConfig::default()).unwrap();
        prop_assert_eq!(report.check("P1").unwrap().lhs, 0.0);
        prop_assert!(report.smoothness.is_finite());
    }
}

#[test]
fn crack_across_a_crown_slab_opens_new_faces_on_the_bad_boundary() {
    let inst = approximator::instances::crown_crack_instance(21).unwrap();
    let r = approximate(&inst.u, &inst.jumps, &inst.params, &loose()).unwrap();
    assert!(r.covering.good.iter().any(|g| !g));
    let new = r.new_jump.difference(&inst.jumps);
    assert!(!new.is_empty());
    let report = verify_properties(&inst.u, &inst.jumps, &r, &inst.params, &VerifyConfig::default()).unwrap();
    assert_eq!(report.check("P2-containment").unwrap().lhs, 0.0);
    let p2 = report.check("P2").unwrap();
    assert!(p2.realized_constant > 0.0 && p2.pass, "{p2:?}");
}
