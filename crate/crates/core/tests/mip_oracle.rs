//! Branch and bound and basis extraction checked against exhaustive search.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampled_mip::mip::{basis_tolerance, find_basis, solve_mip, MipOptions, MipStatus};
use sampled_mip::model::{is_feasible, ConstraintId, LinearConstraint, VariableSpec};
use sampled_mip::scalar::Tolerances;

mod common;
use common::integer_enumeration;

type Rows = Vec<(Vec<f64>, f64)>;

/// Rows around an anchor whose integer components are integral, so the
/// instance is always feasible.
fn random_milp(rng: &mut ChaCha8Rng, d_r: usize, d_z: usize, m: usize, int_hi: f64) -> (Vec<f64>, Rows) {
    let n = d_r + d_z;
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let anchor: Vec<f64> = (0..n)
        .map(|j| {
            if j < d_r {
                rng.random_range(-1.0..1.0)
            } else {
                rng.random_range(0..=int_hi as i64) as f64
            }
        })
        .collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = a.iter().zip(&anchor).map(|(p, q)| p * q).sum::<f64>() + rng.random_range(0.0..1.5);
            (a, b)
        })
        .collect();
    (c, rows)
}

fn to_cons(rows: &[(Vec<f64>, f64)]) -> Vec<LinearConstraint<f64>> {
    rows.iter()
        .enumerate()
        .map(|(k, (a, b))| LinearConstraint::new(ConstraintId::new(1, k), a.clone(), *b).unwrap())
        .collect()
}

fn mixed_box(d_r: usize, d_z: usize, int_hi: f64) -> VariableSpec<f64> {
    let lower = vec![-5.0; d_r].into_iter().chain(vec![0.0; d_z]).collect();
    let upper = vec![5.0; d_r].into_iter().chain(vec![int_hi; d_z]).collect();
    VariableSpec::new(d_r, d_z, lower, upper).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_integer_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let vars = mixed_box(2, 2, 4.0);
    for trial in 0..30 {
        let (c, rows) = random_milp(&mut rng, 2, 2, 15, 4.0);
        let out = solve_mip(&c, &to_cons(&rows), &vars, &MipOptions::default()).unwrap();
        let best = integer_enumeration(&c, &rows, 2, vars.lower(), vars.upper()).unwrap();
        assert_eq!(out.status, MipStatus::Optimal, "trial {trial}");
        let sol = out.solution.unwrap();
        assert!(close(sol.objective, best, 1e-9), "trial {trial}: {} vs {best}", sol.objective);
        assert!(is_feasible(&sol.x, &to_cons(&rows), &vars, &Tolerances::default()).unwrap());
    }
}

#[test]
fn pure_integer_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let vars = mixed_box(0, 3, 4.0);
    for trial in 0..20 {
        let (c, rows) = random_milp(&mut rng, 0, 3, 10, 4.0);
        let out = solve_mip(&c, &to_cons(&rows), &vars, &MipOptions::default()).unwrap();
        let best = integer_enumeration(&c, &rows, 0, vars.lower(), vars.upper()).unwrap();
        assert!(close(out.objective().unwrap(), best, 1e-9), "trial {trial}");
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let vars = mixed_box(3, 2, 4.0);
    let (c, rows) = random_milp(&mut rng, 3, 2, 25, 4.0);
    let cons = to_cons(&rows);
    let a = solve_mip(&c, &cons, &vars, &MipOptions::default()).unwrap();
    let b = solve_mip(&c, &cons, &vars, &MipOptions::default()).unwrap();
    assert_eq!(a, b);
}

/// Exhaustive objective for a subset given as a bitmask over `rows`.
fn subset_objective(c: &[f64], rows: &Rows, mask: u32, vars: &VariableSpec<f64>) -> f64 {
    let sub: Rows = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, r)| r.clone())
        .collect();
    integer_enumeration(c, &sub, vars.d_r(), vars.lower(), vars.upper()).unwrap()
}

#[test]
fn basis_against_exhaustive_subset_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let vars = mixed_box(3, 1, 4.0);
    let d_comb = vars.combinatorial_dimension().unwrap() as usize;
    let opts = MipOptions::default();
    for trial in 0..12 {
        let (c, rows) = random_milp(&mut rng, 3, 1, 8, 4.0);
        let cons = to_cons(&rows);
        let out = solve_mip(&c, &cons, &vars, &opts).unwrap();
        let full = out.objective().unwrap();
        let basis = find_basis(&c, &cons, &vars, &out, &opts).unwrap();

        let mask: u32 = basis.members().iter().map(|id| 1u32 << id.row).sum();
        let j_basis = subset_objective(&c, &rows, mask, &vars);
        assert!(close(j_basis, full, 1e-9), "trial {trial}: basis objective {j_basis} vs {full}");

        // Every member is necessary.
        for id in basis.members() {
            let without = subset_objective(&c, &rows, mask & !(1 << id.row), &vars);
            assert!(without < j_basis - basis_tolerance(j_basis), "trial {trial}: {id} is redundant");
        }

        // No defining set is smaller than the smallest one exhaustive search finds.
        let smallest = (0u32..1 << rows.len())
            .filter(|m| close(subset_objective(&c, &rows, *m, &vars), full, 1e-9))
            .map(u32::count_ones)
            .min()
            .unwrap();
        assert!(basis.len() >= smallest as usize);
        assert!(basis.len() <= d_comb, "trial {trial}: |B| = {} > {d_comb}", basis.len());
    }
}

#[test]
fn continuous_basis_has_at_most_d_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let vars = mixed_box(4, 0, 0.0);
    let opts = MipOptions::default();
    for _ in 0..20 {
        let (c, rows) = random_milp(&mut rng, 4, 0, 20, 0.0);
        let cons = to_cons(&rows);
        let out = solve_mip(&c, &cons, &vars, &opts).unwrap();
        let basis = find_basis(&c, &cons, &vars, &out, &opts).unwrap();
        assert!(basis.len() <= 4);
        let kept: Vec<_> = cons.iter().filter(|k| basis.contains(k.id)).collect();
        let again = solve_mip(&c, &kept, &vars, &opts).unwrap();
        assert!(close(again.objective().unwrap(), out.objective().unwrap(), 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_is_feasible_and_beats_the_anchor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = mixed_box(2, 2, 4.0);
        let (c, rows) = random_milp(&mut rng, 2, 2, 12, 4.0);
        let cons = to_cons(&rows);
        let out = solve_mip(&c, &cons, &vars, &MipOptions::default()).unwrap();
        prop_assert_eq!(out.status, MipStatus::Optimal);
        let sol = out.solution.unwrap();
        prop_assert!(is_feasible(&sol.x, &cons, &vars, &Tolerances::default()).unwrap());
        let best = integer_enumeration(&c, &rows, 2, vars.lower(), vars.upper()).unwrap();
        prop_assert!(close(sol.objective, best, 1e-9));
    }

    #[test]
    fn basis_reproduces_the_optimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = mixed_box(2, 1, 4.0);
        let (c, rows) = random_milp(&mut rng, 2, 1, 14, 4.0);
        let cons = to_cons(&rows);
        let opts = MipOptions::default();
        let out = solve_mip(&c, &cons, &vars, &opts).unwrap();
        let basis = find_basis(&c, &cons, &vars, &out, &opts).unwrap();
        let kept: Vec<_> = cons.iter().filter(|k| basis.contains(k.id)).collect();
        let again = solve_mip(&c, &kept, &vars, &opts).unwrap();
        prop_assert!(close(again.objective().unwrap(), out.objective().unwrap(), 1e-9));
        for id in basis.members() {
            let fewer: Vec<_> = kept.iter().copied().filter(|k| k.id != *id).collect();
            let j = solve_mip(&c, &fewer, &vars, &opts).unwrap().objective().unwrap();
            let jb = again.objective().unwrap();
            prop_assert!(j < jb - basis_tolerance(jb));
        }
    }
}
