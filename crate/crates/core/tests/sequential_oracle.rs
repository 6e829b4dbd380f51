//! The sequential loop against a direct solve of the whole sampled problem.

use sampled_mip::mip::MipOptions;
use sampled_mip::model::{ConstraintBlock, ConstraintId, LinearConstraint, SampledProblem, VariableSpec};
use sampled_mip::problems::{make_random_milp, RandomMilpSpec};
use sampled_mip::scenario::build_sampled_problem;
use sampled_mip::sequential::{initial_block_count, solve_direct, solve_sequential, verify, SeqOptions};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn family(seed: u64) -> SampledProblem<f64> {
    let spec = RandomMilpSpec {
        n_rows: 30,
        d_r: 3,
        d_z: 2,
        rho: 0.01,
        seed,
    };
    build_sampled_problem(&make_random_milp::<f64>(&spec).unwrap(), 200, seed + 1000).unwrap()
}

#[test]
fn matches_direct_solve_on_thirty_seeds() {
    let opts = SeqOptions::default();
    let d_comb = 19;
    for seed in 0..30 {
        let problem = family(seed);
        let direct = solve_direct(&problem, &MipOptions::default()).unwrap();
        let (sol, basis, trace) = solve_sequential(&problem, &opts).unwrap();
        let j = direct.objective().unwrap();
        assert!(close(sol.objective, j, 1e-7), "seed {seed}: {} vs {j}", sol.objective);
        assert!(trace.is_strictly_increasing(), "seed {seed}");
        assert!(trace.bases_are_distinct(), "seed {seed}");
        for rec in &trace.records {
            assert!(rec.constraints_in_solve <= opts.r + d_comb, "seed {seed}, t {}", rec.t);
        }
        assert!(basis.len() <= d_comb);
        assert!(verify(&sol.x, &problem, 1, 1e-8).feasible);
    }
}

/// Blocks `x <= 5 - k` for `k` in the given list, one row each.
fn ladder(caps: &[f64]) -> SampledProblem<f64> {
    let vars = VariableSpec::boxed(1, 0, -10.0, 10.0).unwrap();
    let blocks = caps
        .iter()
        .enumerate()
        .map(|(k, cap)| {
            let row = LinearConstraint::new(ConstraintId::new(k + 1, 0), vec![1.0], *cap).unwrap();
            ConstraintBlock::new(k + 1, None, vec![row]).unwrap()
        })
        .collect();
    SampledProblem::new(vars, vec![-1.0], vec![], blocks).unwrap()
}

#[test]
fn verification_returns_smallest_indices() {
    let caps = [9.0, 9.0, 1.0, 9.0, 9.0, 9.0, 1.0, 9.0, 1.0, 9.0];
    let problem = ladder(&caps);
    let two = verify(&[2.0], &problem, 2, 1e-8);
    assert!(!two.feasible);
    assert_eq!(two.violations, vec![3, 7]);
    let all = verify(&[2.0], &problem, 10, 1e-8);
    assert_eq!(all.violations, vec![3, 7, 9]);
    assert!(verify(&[0.5], &problem, 10, 1e-8).feasible);
}

#[test]
fn single_block_needs_no_iteration() {
    let problem = ladder(&[3.0]);
    let (sol, _, trace) = solve_sequential(&problem, &SeqOptions::default()).unwrap();
    assert_eq!(sol.x, vec![3.0]);
    assert_eq!(trace.iterations, 0);
    assert_eq!(trace.records.len(), 1);
}

#[test]
fn tightest_block_is_found_late() {
    let mut caps = vec![5.0; 300];
    caps[250] = 1.5;
    caps[280] = 0.5;
    let problem = ladder(&caps);
    assert_eq!(initial_block_count(&problem), 2);
    for r in [1, 10] {
        let opts = SeqOptions { r, ..Default::default() };
        let (sol, basis, trace) = solve_sequential(&problem, &opts).unwrap();
        assert_eq!(sol.x, vec![0.5]);
        assert_eq!(basis.members(), &[ConstraintId::new(281, 0)]);
        assert!(trace.is_strictly_increasing());
    }
}

#[test]
fn repeated_runs_agree() {
    let problem = family(3);
    let a = solve_sequential(&problem, &SeqOptions::default()).unwrap();
    let b = solve_sequential(&problem, &SeqOptions::default()).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let objectives = |t: &sampled_mip::sequential::SeqTrace<f64>| t.records.iter().map(|r| r.objective).collect::<Vec<_>>();
    assert_eq!(objectives(&a.2), objectives(&b.2));
}
