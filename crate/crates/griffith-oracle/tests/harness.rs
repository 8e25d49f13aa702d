use griffith_oracle::*;

fn run(generator: Generator) -> HarnessReport {
    vanishing_jump_harness(&SequenceSpec::new(generator, 4, 3), &HarnessConfig::default()).unwrap()
}

#[test]
fn constant_sequence_is_its_own_limit() {
    let r = run(Generator::Smooth);
    assert!(r.pass);
    for s in &r.semicontinuity {
        assert!((s.limit_energy - s.min_energy).abs() <= 1e-6 * r.reference, "{s:?}");
    }
    assert!(r.levels.iter().all(|l| l.median_residual <= 1e-12 && l.jump_measure == 0.0));
}

#[test]
fn shrinking_crack_sequence() {
    let r = run(Generator::ShrinkingCrack);
    assert!(r.pass, "{r:?}");
    assert_eq!(r.levels.len(), 4);
    assert!(r.levels.iter().all(|l| l.skipped.is_none()));
    assert!(r.surface_decay.iter().all(|d| d.ratio >= 2.0 * (1.0 - 1e-12)));
    let mut buf = Vec::new();
    r.write_levels_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("level,skipped,delta"));
}

#[test]
fn rigid_patch_sequence_absorbs_the_drift() {
    let r = run(Generator::RigidPatches);
    assert!(r.levels.iter().all(|l| l.skipped.is_none()));
    assert!(r.surface_decay.iter().all(|d| d.pass));
    let first = r.levels.first().unwrap().median_residual;
    let last = r.levels.last().unwrap().median_residual;
    assert!(last < first, "{first} -> {last}");
    // drift of size 0.3 flips sign between levels; a_h takes it out
    assert!(r.levels.iter().all(|l| l.median_residual < 1e-3));
    assert!(r.levels.windows(2).all(|w| w[1].omega_cells < w[0].omega_cells));
    // rigid patches on an affine background leave the strain of u_h unchanged
    for t in 0..r.semicontinuity.len() {
        let bulk: Vec<f64> = r.levels.iter().map(|l| l.bulk_in[t]).collect();
        let spread = bulk.iter().fold(0.0f64, |m, b| m.max((b - bulk[0]).abs()));
        assert!(spread <= 1e-12 * bulk[0], "{bulk:?}");
    }
    // what is left is the exceptional set of the last level inside ũ
    for s in &r.semicontinuity {
        assert!(s.limit_energy - s.min_energy <= 1e-5 * r.reference, "{s:?}");
    }
}

#[test]
fn levels_outside_the_regime_are_skipped() {
    let mut config = HarnessConfig::default();
    config.approx.eta = Some(0.7);
    let r = vanishing_jump_harness(&SequenceSpec::new(Generator::ShrinkingCrack, 4, 3), &config).unwrap();
    assert!(r.levels[0].skipped.is_some());
    assert!(r.levels[3].skipped.is_none());
}
