//! Sample complexity against exact rational arithmetic, and the sampling contracts.

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, RngCore};
use sampled_mip::error::Result;
use sampled_mip::model::{ConstraintId, LinearConstraint, VariableSpec};
use sampled_mip::scenario::{
    build_sampled_problem, empirical_violation, sample_complexity, RobustnessSpec, UncertaintyModel,
};

/// Exact check of `delta >= sum_{l<k} C(n,l) eps^l (1-eps)^(n-l)` with
/// `eps = p/q` and `delta = dn/dd`.
fn tail_ok(n: u64, k: u64, p: u64, q: u64, dn: u64, dd: u64) -> bool {
    let mut sum = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    for l in 0..k.min(n + 1) {
        if l > 0 {
            binom = binom * (n - l + 1) / l;
        }
        sum += &binom * BigUint::from(p).pow(l as u32) * BigUint::from(q - p).pow((n - l) as u32);
    }
    sum * dd <= BigUint::from(dn) * BigUint::from(q).pow(n as u32)
}

fn exact_sample_complexity(k: u64, p: u64, q: u64, dn: u64, dd: u64) -> u64 {
    let mut n = 1;
    while !tail_ok(n, k, p, q, dn, dd) {
        n += 1;
    }
    n
}

#[test]
fn frozen_values_match_exact_oracle() {
    let spec = RobustnessSpec::new(0.1, 1e-6).unwrap();
    for (d_comb, frozen) in [(5, 225), (19, 459), (47, 850)] {
        assert_eq!(exact_sample_complexity(d_comb, 1, 10, 1, 1_000_000), frozen);
        assert_eq!(sample_complexity(&spec, d_comb).unwrap(), frozen, "d_comb = {d_comb}");
    }
}

#[test]
fn rational_grid_matches_exact_oracle() {
    for (p, q) in [(1u64, 20u64), (1, 4), (3, 10)] {
        for (dn, dd) in [(1u64, 100u64), (1, 1000)] {
            for k in [2, 7, 12] {
                let spec = RobustnessSpec::new(p as f64 / q as f64, dn as f64 / dd as f64).unwrap();
                assert_eq!(
                    sample_complexity(&spec, k).unwrap(),
                    exact_sample_complexity(k, p, q, dn, dd),
                    "eps={p}/{q} delta={dn}/{dd} k={k}"
                );
            }
        }
    }
}

#[test]
fn single_term_matches_closed_form_on_grid() {
    let eps = [0.01, 0.05, 0.1, 0.2, 0.3];
    let delta = [1e-2, 1e-4, 1e-6, 1e-9];
    for e in eps {
        for d in delta {
            let spec = RobustnessSpec::new(e, d).unwrap();
            let closed = (d.ln() / (1.0 - e).ln()).ceil() as u64;
            assert_eq!(sample_complexity(&spec, 1).unwrap(), closed, "eps={e} delta={d}");
        }
    }
}

proptest! {
    #[test]
    fn monotone_in_every_argument(e in 0.01f64..0.4, d in 1e-8f64..0.1, k in 1u64..40) {
        let base = sample_complexity(&RobustnessSpec::new(e, d).unwrap(), k).unwrap();
        prop_assert!(sample_complexity(&RobustnessSpec::new(e * 1.5, d).unwrap(), k).unwrap() <= base);
        prop_assert!(sample_complexity(&RobustnessSpec::new(e, d * 2.0).unwrap(), k).unwrap() <= base);
        prop_assert!(sample_complexity(&RobustnessSpec::new(e, d).unwrap(), k + 1).unwrap() >= base);
    }
}

/// `x_0 <= 1 + q` with `q` uniform in `[0, 1]`.
struct Shifted {
    vars: VariableSpec<f64>,
    c: Vec<f64>,
}

impl Shifted {
    fn new() -> Self {
        Self {
            vars: VariableSpec::boxed(1, 0, -10.0, 10.0).unwrap(),
            c: vec![-1.0],
        }
    }
}

impl UncertaintyModel<f64> for Shifted {
    fn dim_q(&self) -> usize {
        1
    }
    fn vars(&self) -> &VariableSpec<f64> {
        &self.vars
    }
    fn objective(&self) -> &[f64] {
        &self.c
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(0.0..1.0)]
    }
    fn instantiate(&self, sample_index: usize, q: &[f64]) -> Result<Vec<LinearConstraint<f64>>> {
        Ok(vec![LinearConstraint::new(ConstraintId::new(sample_index, 0), vec![1.0], 1.0 + q[0])?])
    }
}

#[test]
fn first_blocks_do_not_depend_on_n() {
    let model = Shifted::new();
    let long = build_sampled_problem(&model, 100, 7).unwrap();
    let short = build_sampled_problem(&model, 50, 7).unwrap();
    assert_eq!(long.blocks[..50], short.blocks[..]);
    let other = build_sampled_problem(&model, 50, 8).unwrap();
    assert_ne!(other.blocks, short.blocks);
}

#[test]
fn single_sample_problem() {
    let p = build_sampled_problem(&Shifted::new(), 1, 3).unwrap();
    assert_eq!(p.n_samples(), 1);
    assert_eq!(p.blocks[0].sample_index, 1);
}

#[test]
fn violation_rate_extremes_and_quantile() {
    let model = Shifted::new();
    assert_eq!(empirical_violation(&[0.5], &model, 1000, 1, 1e-8).unwrap(), 0.0);
    assert_eq!(empirical_violation(&[2.5], &model, 1000, 1, 1e-8).unwrap(), 1.0);
    // x = 1.9 is violated whenever q < 0.9.
    let rate = empirical_violation(&[1.9], &model, 10_000, 1, 1e-8).unwrap();
    assert!((rate - 0.9).abs() < 0.02, "rate {rate}");
}
