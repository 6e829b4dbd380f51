//! Brute-force reference solvers shared by the oracle tests.
#![allow(dead_code)]

/// Gaussian elimination, independent of the solver's factorization.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Minimum of `c.x` over all feasible vertices of `{A x <= b, l <= x <= u}`.
pub fn vertex_enumeration(c: &[f64], rows: &[(Vec<f64>, f64)], l: &[f64], u: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut all: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all.push((e.clone(), u[j]));
        e[j] = -1.0;
        all.push((e, -l[j]));
    }
    let mut best: Option<f64> = None;
    combinations(all.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| all[i].0.clone()).collect();
        let b = idx.iter().map(|&i| all[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            let feasible = all
                .iter()
                .all(|(r, rhs)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9);
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    });
    best
}

/// Minimum of `c.x` over `rows`, the box, and integrality of `x[d_r..]`, by
/// enumerating every integer assignment and solving the continuous rest by
/// vertex enumeration. Returns the objective.
pub fn integer_enumeration(
    c: &[f64],
    rows: &[(Vec<f64>, f64)],
    d_r: usize,
    l: &[f64],
    u: &[f64],
) -> Option<f64> {
    let n = c.len();
    let ints: Vec<usize> = (d_r..n).collect();
    let mut z: Vec<i64> = ints.iter().map(|&j| l[j].ceil() as i64).collect();
    let mut best: Option<f64> = None;
    loop {
        // Substitute the integer values and solve over the continuous part.
        let fixed: f64 = ints.iter().zip(&z).map(|(&j, &v)| c[j] * v as f64).sum();
        let reduced: Vec<(Vec<f64>, f64)> = rows
            .iter()
            .map(|(a, b)| {
                let shift: f64 = ints.iter().zip(&z).map(|(&j, &v)| a[j] * v as f64).sum();
                (a[..d_r].to_vec(), b - shift)
            })
            .collect();
        let value = if d_r == 0 {
            reduced.iter().all(|(_, b)| *b >= -1e-9).then_some(0.0)
        } else {
            // Rows whose continuous part vanished are pure feasibility checks.
            if reduced.iter().any(|(a, b)| a.iter().all(|v| *v == 0.0) && *b < -1e-9) {
                None
            } else {
                let live: Vec<_> = reduced.into_iter().filter(|(a, _)| a.iter().any(|v| *v != 0.0)).collect();
                vertex_enumeration(&c[..d_r], &live, &l[..d_r], &u[..d_r])
            }
        };
        if let Some(v) = value {
            let total = v + fixed;
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
        // Odometer step.
        let mut k = 0;
        loop {
            if k == z.len() {
                return best;
            }
            z[k] += 1;
            if z[k] as f64 <= u[ints[k]] {
                break;
            }
            z[k] = l[ints[k]].ceil() as i64;
            k += 1;
        }
    }
}
