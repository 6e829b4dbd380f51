//! Dense two-phase simplex for `min c.x  s.t.  A x <= b,  l <= x <= u`.
//!
//! The method walks vertices of the primal polyhedron. A vertex is described
//! by a working set of `d` linearly independent active rows (constraints or
//! finite bounds); the dense `d x d` working matrix is refactored at every
//! pivot, and the ratio test scans all rows. Cost per pivot is `O(d^3 + m d)`,
//! which suits the sampled problems here: thousands of rows, a handful of
//! variables.
//!
//! Phase one minimizes a single artificial infeasibility variable `s` over
//! `A x - s <= b`. Phase two prices with Dantzig's rule and falls back to
//! Bland's rule once the pivot count passes `5 (rows + cols)`. An optional
//! lexicographic refinement then minimizes `x_1`, `x_2`, ... over the optimal
//! face so the returned optimizer is unique.

use crate::error::{Error, Result};
use crate::model::LinearConstraint;
use crate::scalar::{dot, norm_inf, Scalar, Tolerances};
use std::borrow::Borrow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome<T> {
    pub status: LpStatus,
    pub x: Option<Vec<T>>,
    pub objective: Option<T>,
    pub pivots: usize,
}

impl<T> LpOutcome<T> {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            x: None,
            objective: None,
            pivots,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpOptions<T> {
    pub tol: Tolerances<T>,
    /// Refine the optimum to the lexicographically smallest optimal point.
    pub lexicographic: bool,
    /// Hard pivot limit; `None` means `50 (rows + cols) + 1000`.
    pub max_pivots: Option<usize>,
}

impl<T: Scalar> Default for LpOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            lexicographic: true,
            max_pivots: None,
        }
    }
}

/// Solves `min c.x` over `cons` and the box `[lower, upper]` (entries may be infinite).
pub fn solve_lp<T: Scalar, C: Borrow<LinearConstraint<T>>>(
    c: &[T],
    cons: &[C],
    lower: &[T],
    upper: &[T],
    opts: &LpOptions<T>,
) -> Result<LpOutcome<T>> {
    let rows: Vec<&[T]> = cons.iter().map(|k| k.borrow().a.as_slice()).collect();
    let rhs: Vec<T> = cons.iter().map(|k| k.borrow().b).collect();
    solve_rows(c, &rows, &rhs, lower, upper, opts)
}

pub(crate) fn solve_rows<T: Scalar>(
    c: &[T],
    rows: &[&[T]],
    rhs: &[T],
    lower: &[T],
    upper: &[T],
    opts: &LpOptions<T>,
) -> Result<LpOutcome<T>> {
    Ok(solve_rows_warm(c, rows, rhs, lower, upper, opts, None)?.outcome)
}

/// An LP result together with the final working set, when there is one.
pub(crate) struct Solved<T> {
    pub outcome: LpOutcome<T>,
    pub working_set: Option<Vec<usize>>,
}

impl<T> From<LpOutcome<T>> for Solved<T> {
    fn from(outcome: LpOutcome<T>) -> Self {
        Self {
            outcome,
            working_set: None,
        }
    }
}

/// Like [`solve_rows`], optionally starting the dual simplex from `warm`, a
/// working set of an earlier solve over the same rows with the same
/// objective (only right-hand sides may differ). Falls back to a cold start
/// when `warm` is unusable. Lexicographic refinement always starts cold.
pub(crate) fn solve_rows_warm<T: Scalar>(
    c: &[T],
    rows: &[&[T]],
    rhs: &[T],
    lower: &[T],
    upper: &[T],
    opts: &LpOptions<T>,
    warm: Option<&[usize]>,
) -> Result<Solved<T>> {
    let n = c.len();
    if lower.len() != n {
        return Err(Error::dim("lower bounds", n, lower.len()));
    }
    if upper.len() != n {
        return Err(Error::dim("upper bounds", n, upper.len()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::dim("constraint coefficients", n, r.len()));
    }
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Ok(LpOutcome::without_point(LpStatus::Infeasible, 0).into());
    }

    let mut bounds = Vec::new();
    for j in 0..n {
        if upper[j].is_finite() {
            bounds.push(Bound::Upper(j, upper[j]));
        }
        if lower[j].is_finite() {
            bounds.push(Bound::Lower(j, lower[j]));
        }
    }
    let max_pivots = opts
        .max_pivots
        .unwrap_or(50 * (rows.len() + bounds.len() + n) + 1000);

    if let (Some(w), false) = (warm, opts.lexicographic) {
        let set = RowSet {
            n,
            augmented: false,
            rows,
            rhs,
            bounds: &bounds,
        };
        let mut eng = Engine::new(&set, opts.tol, max_pivots);
        match eng.dual(c, w.to_vec()) {
            Some(DualEnd::Optimal(v)) => {
                let objective = dot(c, &v.x);
                return Ok(Solved {
                    outcome: LpOutcome {
                        status: LpStatus::Optimal,
                        x: Some(v.x),
                        objective: Some(objective),
                        pivots: eng.pivots,
                    },
                    working_set: Some(v.work),
                });
            }
            Some(DualEnd::Infeasible) => {
                return Ok(LpOutcome::without_point(LpStatus::Infeasible, eng.pivots).into())
            }
            None => {}
        }
    }

    let x0: Vec<T> = (0..n)
        .map(|j| T::zero().max(lower[j]).min(upper[j]))
        .collect();
    let worst = rows
        .iter()
        .zip(rhs)
        .map(|(a, b)| dot(a, &x0) - *b)
        .fold(T::neg_infinity(), T::max);

    let mut pivots = 0;
    let start = if worst > T::zero() {
        let aug = RowSet {
            n,
            augmented: true,
            rows,
            rhs,
            bounds: &bounds,
        };
        let mut eng = Engine::new(&aug, opts.tol, max_pivots);
        let mut obj = vec![T::zero(); n + 1];
        obj[n] = T::one();
        let mut p0 = x0.clone();
        p0.push(worst);
        let v = match eng.crash(&obj, p0)? {
            Walk::Vertex(v) => v,
            Walk::Unbounded => return Err(Error::Subproblem("unbounded in phase one")),
        };
        let v = match eng.optimize(&obj, v, &[])? {
            Walk::Vertex(v) => v,
            Walk::Unbounded => return Err(Error::Subproblem("unbounded in phase one")),
        };
        pivots += eng.pivots;
        if v.x[n] > opts.tol.feasibility {
            return Ok(LpOutcome::without_point(LpStatus::Infeasible, pivots).into());
        }
        v.x[..n].to_vec()
    } else {
        x0
    };

    let set = RowSet {
        n,
        augmented: false,
        rows,
        rhs,
        bounds: &bounds,
    };
    let mut eng = Engine::new(&set, opts.tol, max_pivots.saturating_sub(pivots));
    let v = match eng.crash(c, start)? {
        Walk::Vertex(v) => v,
        Walk::Unbounded => {
            return Ok(LpOutcome::without_point(LpStatus::Unbounded, pivots + eng.pivots).into())
        }
    };
    let mut v = match eng.optimize(c, v, &[])? {
        Walk::Vertex(v) => v,
        Walk::Unbounded => {
            return Ok(LpOutcome::without_point(LpStatus::Unbounded, pivots + eng.pivots).into())
        }
    };
    if opts.lexicographic {
        v = eng.refine_lexicographic(c, v)?;
    }
    pivots += eng.pivots;
    let objective = dot(c, &v.x);
    Ok(Solved {
        outcome: LpOutcome {
            status: LpStatus::Optimal,
            x: Some(v.x),
            objective: Some(objective),
            pivots,
        },
        working_set: Some(v.work),
    })
}

#[derive(Clone, Copy)]
enum Bound<T> {
    Upper(usize, T),
    Lower(usize, T),
}

/// Rows `g_i . v <= h_i` over `v = x` or, in phase one, `v = (x, s)`.
/// Order: constraints, finite bounds, then (phase one only) `-s <= 0`.
struct RowSet<'a, T> {
    n: usize,
    augmented: bool,
    rows: &'a [&'a [T]],
    rhs: &'a [T],
    bounds: &'a [Bound<T>],
}

impl<T: Scalar> RowSet<'_, T> {
    fn dim(&self) -> usize {
        self.n + usize::from(self.augmented)
    }

    fn len(&self) -> usize {
        self.rows.len() + self.bounds.len() + usize::from(self.augmented)
    }

    #[inline]
    fn dot(&self, i: usize, v: &[T]) -> T {
        let mc = self.rows.len();
        if i < mc {
            let s = dot(self.rows[i], &v[..self.n]);
            if self.augmented {
                s - v[self.n]
            } else {
                s
            }
        } else if i < mc + self.bounds.len() {
            match self.bounds[i - mc] {
                Bound::Upper(j, _) => v[j],
                Bound::Lower(j, _) => -v[j],
            }
        } else {
            -v[self.n]
        }
    }

    fn coef(&self, i: usize, out: &mut [T]) {
        out.fill(T::zero());
        let mc = self.rows.len();
        if i < mc {
            out[..self.n].copy_from_slice(self.rows[i]);
            if self.augmented {
                out[self.n] = -T::one();
            }
        } else if i < mc + self.bounds.len() {
            match self.bounds[i - mc] {
                Bound::Upper(j, _) => out[j] = T::one(),
                Bound::Lower(j, _) => out[j] = -T::one(),
            }
        } else {
            out[self.n] = -T::one();
        }
    }

    fn rhs(&self, i: usize) -> T {
        let mc = self.rows.len();
        if i < mc {
            self.rhs[i]
        } else if i < mc + self.bounds.len() {
            match self.bounds[i - mc] {
                Bound::Upper(_, u) => u,
                Bound::Lower(_, l) => -l,
            }
        } else {
            T::zero()
        }
    }
}

struct Vertex<T> {
    work: Vec<usize>,
    x: Vec<T>,
}

enum Walk<T> {
    Vertex(Vertex<T>),
    Unbounded,
}

enum DualEnd<T> {
    Optimal(Vertex<T>),
    Infeasible,
}

struct Engine<'s, 'a, T> {
    set: &'s RowSet<'a, T>,
    tol: Tolerances<T>,
    pivots: usize,
    max_pivots: usize,
}

impl<'s, 'a, T: Scalar> Engine<'s, 'a, T> {
    fn new(set: &'s RowSet<'a, T>, tol: Tolerances<T>, max_pivots: usize) -> Self {
        Self {
            set,
            tol,
            pivots: 0,
            max_pivots,
        }
    }

    fn bump(&mut self) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::PivotLimit {
                pivots: self.max_pivots,
            });
        }
        Ok(())
    }

    /// Blocking row along `p` from `x`: smallest step, exact ties resolved by
    /// the largest directional derivative (or lowest index under Bland).
    fn ratio_test(&self, x: &[T], p: &[T], in_work: &[bool], bland: bool) -> Option<(usize, T)> {
        let mut best: Option<(usize, T, T)> = None;
        for i in 0..self.set.len() {
            if in_work[i] {
                continue;
            }
            let gp = self.set.dot(i, p);
            if gp <= self.tol.pivot {
                continue;
            }
            let slack = (self.set.rhs(i) - self.set.dot(i, x)).max(T::zero());
            let step = slack / gp;
            let better = match best {
                None => true,
                Some((_, s, g)) => step < s || (step == s && !bland && gp > g),
            };
            if better {
                best = Some((i, step, gp));
            }
        }
        best.map(|(i, s, _)| (i, s))
    }

    /// Moves from a feasible point to a vertex without increasing `obj`.
    fn crash(&mut self, obj: &[T], mut x: Vec<T>) -> Result<Walk<T>> {
        let d = self.set.dim();
        let m = self.set.len();
        let mut work = Vec::with_capacity(d);
        let mut in_work = vec![false; m];
        let mut ortho: Vec<Vec<T>> = Vec::with_capacity(d);
        let mut g = vec![T::zero(); d];
        while work.len() < d {
            let mut p: Vec<T> = obj.iter().map(|v| -*v).collect();
            project_out(&mut p, &ortho);
            let scale = norm_inf(obj).max(T::one());
            let mut two_sided = false;
            if norm_inf(&p) <= self.tol.zero * scale {
                two_sided = true;
                let mut found = None;
                for j in 0..d {
                    let mut e = vec![T::zero(); d];
                    e[j] = T::one();
                    project_out(&mut e, &ortho);
                    if norm_inf(&e) > T::lit(1e-3) {
                        found = Some(e);
                        break;
                    }
                }
                p = found.ok_or(Error::NoVertex)?;
            }
            let pn = norm_inf(&p);
            p.iter_mut().for_each(|v| *v /= pn);

            let mut hit = self.ratio_test(&x, &p, &in_work, false);
            if hit.is_none() && two_sided {
                p.iter_mut().for_each(|v| *v = -*v);
                hit = self.ratio_test(&x, &p, &in_work, false);
                if hit.is_none() {
                    return Err(Error::NoVertex);
                }
            }
            let Some((i, step)) = hit else {
                return Ok(Walk::Unbounded);
            };
            for (xj, pj) in x.iter_mut().zip(&p) {
                *xj += step * *pj;
            }
            work.push(i);
            in_work[i] = true;
            self.set.coef(i, &mut g);
            let mut q = g.clone();
            project_out(&mut q, &ortho);
            let qn = dot(&q, &q).sqrt();
            q.iter_mut().for_each(|v| *v /= qn);
            ortho.push(q);
        }
        let lu = self.factor(&work)?;
        let h: Vec<T> = work.iter().map(|&i| self.set.rhs(i)).collect();
        let x = lu.solve(&h);
        Ok(Walk::Vertex(Vertex { work, x }))
    }

    fn factor(&self, work: &[usize]) -> Result<Lu<T>> {
        let d = self.set.dim();
        let mut mat = vec![T::zero(); d * d];
        for (k, &i) in work.iter().enumerate() {
            self.set.coef(i, &mut mat[k * d..(k + 1) * d]);
        }
        Lu::factor(mat, d, self.tol.zero).ok_or(Error::Subproblem("singular working set"))
    }

    /// Multipliers `lambda` with `obj + G_W^T lambda = 0`.
    fn multipliers(&self, lu: &Lu<T>, obj: &[T]) -> Vec<T> {
        let neg: Vec<T> = obj.iter().map(|v| -*v).collect();
        lu.solve_transposed(&neg)
    }

    /// Simplex iterations from a vertex. Rows flagged in `locked` never leave
    /// the working set.
    fn optimize(&mut self, obj: &[T], mut v: Vertex<T>, locked: &[bool]) -> Result<Walk<T>> {
        let d = self.set.dim();
        let m = self.set.len();
        let mut in_work = vec![false; m];
        for &i in &v.work {
            in_work[i] = true;
        }
        let bland_after = 5 * (m + d);
        let opt_tol = {
            let s = norm_inf(obj);
            self.tol.optimality * if s > T::zero() { s } else { T::one() }
        };
        let mut local = 0usize;
        loop {
            let lu = self.factor(&v.work)?;
            let h: Vec<T> = v.work.iter().map(|&i| self.set.rhs(i)).collect();
            v.x = lu.solve(&h);
            let lam = self.multipliers(&lu, obj);
            let bland = local >= bland_after;

            let mut leave: Option<usize> = None;
            for (k, l) in lam.iter().enumerate() {
                let row = v.work[k];
                if *l >= -opt_tol || locked.get(row).copied().unwrap_or(false) {
                    continue;
                }
                leave = match leave {
                    None => Some(k),
                    Some(b) if bland => (row < v.work[b]).then_some(k).or(Some(b)),
                    Some(b) => {
                        if *l < lam[b] || (*l == lam[b] && row < v.work[b]) {
                            Some(k)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            let Some(k) = leave else {
                return Ok(Walk::Vertex(v));
            };

            let mut e = vec![T::zero(); d];
            e[k] = -T::one();
            let mut p = lu.solve(&e);
            let pn = norm_inf(&p);
            p.iter_mut().for_each(|val| *val /= pn);
            let Some((enter, _)) = self.ratio_test(&v.x, &p, &in_work, bland) else {
                return Ok(Walk::Unbounded);
            };
            in_work[v.work[k]] = false;
            in_work[enter] = true;
            v.work[k] = enter;
            local += 1;
            self.bump()?;
        }
    }

    /// Dual simplex from a dual-feasible working set: the most violated row
    /// enters, the leaving row keeps the multipliers nonnegative. `None` when
    /// the start is unusable or the iteration budget runs out.
    fn dual(&mut self, obj: &[T], mut work: Vec<usize>) -> Option<DualEnd<T>> {
        let d = self.set.dim();
        let m = self.set.len();
        if work.len() != d {
            return None;
        }
        let mut in_work = vec![false; m];
        for &i in &work {
            if i >= m || in_work[i] {
                return None;
            }
            in_work[i] = true;
        }
        let opt_tol = {
            let s = norm_inf(obj);
            self.tol.optimality * if s > T::zero() { s } else { T::one() }
        };
        let mut g = vec![T::zero(); d];
        let budget = 5 * (m + d);
        for step in 0..budget {
            let lu = self.factor(&work).ok()?;
            let h: Vec<T> = work.iter().map(|&i| self.set.rhs(i)).collect();
            let x = lu.solve(&h);
            let lam = self.multipliers(&lu, obj);
            if step == 0 && lam.iter().any(|l| *l < -opt_tol) {
                return None;
            }
            let mut enter = None;
            let mut worst = self.tol.feasibility;
            for i in 0..m {
                if in_work[i] {
                    continue;
                }
                let v = self.set.dot(i, &x) - self.set.rhs(i);
                if v > worst {
                    worst = v;
                    enter = Some(i);
                }
            }
            let Some(i) = enter else {
                return Some(DualEnd::Optimal(Vertex { work, x }));
            };
            self.set.coef(i, &mut g);
            let alpha = lu.solve_transposed(&g);
            let mut leave: Option<(usize, T)> = None;
            for (k, a) in alpha.iter().enumerate() {
                if *a <= self.tol.pivot {
                    continue;
                }
                let ratio = lam[k].max(T::zero()) / *a;
                let better = match leave {
                    None => true,
                    Some((b, r)) => ratio < r || (ratio == r && work[k] < work[b]),
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
            let Some((k, _)) = leave else {
                return Some(DualEnd::Infeasible);
            };
            in_work[work[k]] = false;
            in_work[i] = true;
            work[k] = i;
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return None;
            }
        }
        None
    }

    /// Minimizes `x_0`, then `x_1`, ... over the optimal face of `obj`.
    fn refine_lexicographic(&mut self, obj: &[T], mut v: Vertex<T>) -> Result<Vertex<T>> {
        let d = self.set.dim();
        let mut locked = vec![false; self.set.len()];
        let mut prev: Vec<T> = obj.to_vec();
        for k in 0..d {
            let lu = self.factor(&v.work)?;
            let lam = self.multipliers(&lu, &prev);
            let s = norm_inf(&prev);
            let lock_tol = self.tol.optimality * if s > T::zero() { s } else { T::one() };
            for (pos, l) in lam.iter().enumerate() {
                if *l > lock_tol {
                    locked[v.work[pos]] = true;
                }
            }
            if v.work.iter().all(|&i| locked[i]) {
                break;
            }
            let mut e = vec![T::zero(); d];
            e[k] = T::one();
            match self.optimize(&e, v, &locked)? {
                Walk::Vertex(next) => v = next,
                // The optimal face is unbounded in this coordinate; nothing
                // further can be pinned down.
                Walk::Unbounded => return Err(Error::NoVertex),
            }
            prev = e;
        }
        Ok(v)
    }
}

/// Removes the components of `v` along the orthonormal vectors `basis`
/// (classical Gram-Schmidt, applied twice).
fn project_out<T: Scalar>(v: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * *qi;
            }
        }
    }
}

/// Dense LU factorization with partial pivoting, `P A = L U`.
pub(crate) struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub(crate) fn factor(mut a: Vec<T>, n: usize, tiny: T) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, val) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -T::one()), |b, c| if c.1 > b.1 { c } else { b });
            if val <= tiny {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                if f != T::zero() {
                    for j in col + 1..n {
                        let u = a[col * n + j];
                        a[r * n + j] -= f * u;
                    }
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let yj = y[j];
                y[i] -= u * yj;
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }

    /// Solves `A^T y = c`.
    pub(crate) fn solve_transposed(&self, c: &[T]) -> Vec<T> {
        let n = self.n;
        let mut z = c.to_vec();
        // U^T z = c
        for i in 0..n {
            for j in 0..i {
                let u = self.lu[j * n + i];
                let zj = z[j];
                z[i] -= u * zj;
            }
            z[i] /= self.lu[i * n + i];
        }
        // L^T w = z
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = self.lu[j * n + i];
                let zj = z[j];
                z[i] -= l * zj;
            }
        }
        let mut y = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = z[i];
        }
        y
    }
}
