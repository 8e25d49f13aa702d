//! The frozen [`PropertyLimits`] are twice the largest realized constant over
//! the calibration seeds below, rounded up to a power of two. `calibrate`
//! regenerates the maxima; it is ignored because the 3D half takes minutes.
//! The acceptance suite draws its instances from disjoint seeds.

use approximator::instances::{shrinking_crack, suite_instance};
use approximator::*;

const SEEDS_2D: std::ops::Range<u64> = 1000..1040;
const SEEDS_3D: std::ops::Range<u64> = 1000..1012;

fn record(max: &mut [f64; 7], report: &PropertyReport) {
    let names = ["P2", "P3-strain", "P3-energy", "P4-omega", "P4-lp", "P5", "P6"];
    for (k, name) in names.iter().enumerate() {
        if let Some(c) = report.check(name) {
            max[k] = max[k].max(c.realized_constant);
        }
    }
}

fn limit(c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    2f64.powf((2.0 * c).log2().ceil())
}

#[test]
#[ignore]
fn calibrate() {
    let mut max = [0.0f64; 7];
    let config = ApproxConfig { eta: Some(1.0), ..Default::default() };
    for (dim, seeds) in [(2, SEEDS_2D), (3, SEEDS_3D)] {
        for seed in seeds {
            let inst = suite_instance(dim, seed).unwrap();
            let result = approximate(&inst.u, &inst.jumps, &inst.params, &config).unwrap();
            let report = verify_properties(&inst.u, &inst.jumps, &result, &inst.params, &VerifyConfig::default()).unwrap();
            record(&mut max, &report);
        }
    }
    for seed in [1000, 1001] {
        for k in 0..4 {
            let (inst, delta) = shrinking_crack(256, k, seed).unwrap();
            let config = ApproxConfig { eta: Some(2.0), delta: Some(delta), ..Default::default() };
            let result = approximate(&inst.u, &inst.jumps, &inst.params, &config).unwrap();
            let report = verify_properties(&inst.u, &inst.jumps, &result, &inst.params, &VerifyConfig::default()).unwrap();
            record(&mut max, &report);
        }
    }
    let limits: Vec<f64> = max.iter().map(|&c| limit(c)).collect();
    println!("max realized: {max:?}");
    println!("limits: {limits:?}");
}
