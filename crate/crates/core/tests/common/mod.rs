#![allow(dead_code)]

use esg_core::profile::RiskProfile;
use esg_core::StepQuantile;
use proptest::prelude::*;

/// Atoms `(weight, value)` with weights on a 1/1000 grid.
pub fn arb_atoms(max_atoms: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1u32..40, -10.0..10.0f64), 1..=max_atoms).prop_map(|raw| {
        let total: u32 = raw.iter().map(|(w, _)| w).sum();
        // rescale counts so they add up to exactly 1000
        let mut counts: Vec<u32> = raw.iter().map(|(w, _)| (w * 1000 / total).max(1)).collect();
        let sum: u32 = counts.iter().sum();
        if sum < 1000 {
            counts[0] += 1000 - sum;
        } else {
            let mut excess = sum - 1000;
            for c in counts.iter_mut() {
                let take = excess.min(*c - 1);
                *c -= take;
                excess -= take;
            }
        }
        counts
            .iter()
            .zip(&raw)
            .map(|(&c, &(_, v))| (c as f64 / 1000.0, v))
            .collect()
    })
}

pub fn quantile_of(atoms: &[(f64, f64)]) -> StepQuantile {
    let values: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let weights: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    StepQuantile::from_samples(&values, Some(&weights)).unwrap()
}

pub fn arb_quantile(max_atoms: usize) -> impl Strategy<Value = StepQuantile> {
    arb_atoms(max_atoms).prop_map(|a| quantile_of(&a))
}

/// Independent ES: average of the top `1 - p` mass, by a descending sweep.
pub fn oracle_es(atoms: &[(f64, f64)], p: f64) -> f64 {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    if p >= 1.0 {
        return sorted[0].1;
    }
    let mut remaining = 1.0 - p;
    let mut acc = 0.0;
    for (w, v) in sorted {
        let take = w.min(remaining);
        acc += take * v;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    acc / (1.0 - p)
}

pub fn arb_levels(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::btree_set(1u32..1000, 1..=max),
        prop::collection::vec(0.0..3.0f64, max),
        -1.0..1.0f64,
        any::<bool>(),
    )
        .prop_map(|(ks, incs, base, reach_one)| {
            let mut thresholds: Vec<f64> = ks.into_iter().map(|k| k as f64 / 1000.0).collect();
            if reach_one {
                thresholds.push(1.0);
            }
            let mut level = base;
            let levels = (0..thresholds.len())
                .map(|i| {
                    if i > 0 {
                        level += incs[i % incs.len()];
                    }
                    level
                })
                .collect();
            (levels, thresholds)
        })
}

pub fn arb_profile() -> impl Strategy<Value = RiskProfile> {
    prop_oneof![
        arb_levels(5).prop_map(|(l, t)| RiskProfile::piecewise_constant(l, t).unwrap()),
        arb_quantile(6).prop_map(RiskProfile::benchmark_es),
        (0.05..3.0f64).prop_map(|s| RiskProfile::hyperbolic(s).unwrap()),
    ]
}

/// ES-class profiles: benchmarks and constants.
pub fn arb_es_profile() -> impl Strategy<Value = RiskProfile> {
    prop_oneof![
        3 => arb_quantile(8).prop_map(RiskProfile::benchmark_es),
        1 => (-2.0..2.0f64).prop_map(|c| RiskProfile::constant(c).unwrap()),
    ]
}

/// Quantile-space sum of two losses (comonotone coupling on a shared uniform).
pub fn comonotone(a: &StepQuantile, b: &StepQuantile) -> StepQuantile {
    a.comonotone_sum(b)
}
