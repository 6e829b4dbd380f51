//! LP results checked against brute-force vertex enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampled_mip::lp::{solve_lp, LpOptions, LpStatus};
use sampled_mip::model::{ConstraintId, LinearConstraint};

mod common;
use common::vertex_enumeration;

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (Vec<f64>, Vec<(Vec<f64>, f64)>) {
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // Feasible around a random interior point.
    let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = a.iter().zip(&anchor).map(|(p, q)| p * q).sum::<f64>() + rng.random_range(0.0..2.0);
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

#[test]
fn matches_vertex_enumeration_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for trial in 0..40 {
        let n = 2 + trial % 5; // 2..=6 variables
        let m = 8 + (trial * 7) % 18; // up to 25 constraints
        let (c, rows) = random_lp(&mut rng, n, m);
        let (l, u) = (vec![-3.0; n], vec![3.0; n]);
        let out = solve_lp(&c, &to_cons(&rows), &l, &u, &LpOptions::default()).unwrap();
        let oracle = vertex_enumeration(&c, &rows, &l, &u);
        match oracle {
            None => assert_eq!(out.status, LpStatus::Infeasible, "trial {trial}"),
            Some(best) => {
                assert_eq!(out.status, LpStatus::Optimal, "trial {trial}");
                let obj = out.objective.unwrap();
                assert!(
                    (obj - best).abs() <= 1e-9 * best.abs().max(1.0),
                    "trial {trial}: solver {obj} vs oracle {best}"
                );
                let x = out.x.unwrap();
                for (a, b) in &rows {
                    let s = b - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
                    assert!(s >= -1e-8, "trial {trial}: slack {s}");
                }
            }
        }
    }
}

#[test]
fn five_variables_twenty_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c, rows) = random_lp(&mut rng, 5, 20);
    let (l, u) = (vec![-2.0; 5], vec![2.0; 5]);
    let out = solve_lp(&c, &to_cons(&rows), &l, &u, &LpOptions::default()).unwrap();
    let best = vertex_enumeration(&c, &rows, &l, &u).unwrap();
    assert!((out.objective.unwrap() - best).abs() <= 1e-9 * best.abs().max(1.0));
}

#[test]
fn infeasible_random_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (c, mut rows) = random_lp(&mut rng, 3, 6);
    // x0 >= 2.5 and x0 <= 2 cannot both hold.
    rows.push((vec![-1.0, 0.0, 0.0], -2.5));
    rows.push((vec![1.0, 0.0, 0.0], 2.0));
    let out = solve_lp(&c, &to_cons(&rows), &[-3.0; 3], &[3.0; 3], &LpOptions::default()).unwrap();
    assert_eq!(out.status, LpStatus::Infeasible);
    assert!(vertex_enumeration(&c, &rows, &[-3.0; 3], &[3.0; 3]).is_none());
}

#[test]
fn returned_point_is_lexicographic_minimum_of_optimal_face() {
    // Objective only depends on x0; the optimal face is {x0 = -1} within the box
    // and the other constraints. The lexicographic minimizer pushes x1, then x2, down.
    let rows = vec![
        (vec![0.0, -1.0, -1.0], 0.5),
        (vec![-1.0, 0.0, 0.0], 1.0),
    ];
    let out = solve_lp(&[1.0, 0.0, 0.0], &to_cons(&rows), &[-2.0; 3], &[2.0; 3], &LpOptions::default()).unwrap();
    assert_eq!(out.x.unwrap(), vec![-1.0, -2.0, 1.5]);
}
