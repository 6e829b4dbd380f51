//! Branch-and-bound over the simplex relaxation, and greedy basis extraction.
//!
//! Search order is fully deterministic: best-first on the relaxation bound
//! (ties by node creation order), branching on the most fractional integer
//! variable (ties by lowest index), and after every branch the floor child is
//! explored immediately. Once the incumbent is known, integers are fixed at
//! its values and the continuous part is re-solved with lexicographic
//! refinement so that the reported point is unique.

use crate::error::{Error, Result};
use crate::lp::{solve_rows, solve_rows_warm, LpOptions, LpStatus};
use crate::model::{Basis, LinearConstraint, Solution, VariableSpec};
use crate::scalar::{Scalar, Tolerances};
use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

pub use crate::lp::LpStatus as MipStatus;

#[derive(Clone, Debug)]
pub struct MipOptions<T> {
    pub tol: Tolerances<T>,
    pub node_limit: usize,
}

impl<T: Scalar> Default for MipOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            node_limit: 1_000_000,
        }
    }
}

impl<T: Scalar> MipOptions<T> {
    fn lp(&self, lexicographic: bool) -> LpOptions<T> {
        LpOptions {
            tol: self.tol,
            lexicographic,
            max_pivots: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipOutcome<T> {
    pub status: MipStatus,
    pub solution: Option<Solution<T>>,
    /// Relaxations solved, including the final polishing solve.
    pub nodes_explored: usize,
}

impl<T: Scalar> MipOutcome<T> {
    pub fn objective(&self) -> Option<T> {
        self.solution.as_ref().map(|s| s.objective)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == MipStatus::Optimal
    }
}

/// Solves `min c.x` subject to `cons`, the bounds of `vars`, and integrality
/// of the last `d_z` variables.
pub fn solve_mip<T: Scalar, C: Borrow<LinearConstraint<T>>>(
    c: &[T],
    cons: &[C],
    vars: &VariableSpec<T>,
    opts: &MipOptions<T>,
) -> Result<MipOutcome<T>> {
    let rows = RowRefs::collect(cons.iter().map(Borrow::borrow));
    solve_row_refs(c, &rows, vars, opts)
}

/// Row-major view of a constraint subset, as the LP engine consumes it.
pub(crate) struct RowRefs<'a, T> {
    a: Vec<&'a [T]>,
    b: Vec<T>,
}

impl<'a, T: Scalar> RowRefs<'a, T> {
    pub(crate) fn collect(cons: impl IntoIterator<Item = &'a LinearConstraint<T>>) -> Self {
        let (a, b) = cons.into_iter().map(|k| (k.a.as_slice(), k.b)).unzip();
        Self { a, b }
    }
}

pub(crate) fn solve_row_refs<T: Scalar>(
    c: &[T],
    rows: &RowRefs<'_, T>,
    vars: &VariableSpec<T>,
    opts: &MipOptions<T>,
) -> Result<MipOutcome<T>> {
    if c.len() != vars.dim() {
        return Err(Error::dim("objective", vars.dim(), c.len()));
    }
    if vars.d_z() == 0 {
        let out = solve_rows(c, &rows.a, &rows.b, vars.lower(), vars.upper(), &opts.lp(true))?;
        return Ok(MipOutcome {
            status: out.status,
            solution: out.x.map(|x| Solution::from_point(c, x)),
            nodes_explored: 1,
        });
    }
    let (lower, upper) = integer_box(vars, &opts.tol)?;
    let mut search = Search::new(c, rows, vars, opts, lower, upper);
    match search.run(None)? {
        Found::Infeasible => Ok(MipOutcome {
            status: MipStatus::Infeasible,
            solution: None,
            nodes_explored: search.nodes,
        }),
        Found::Unbounded => Ok(MipOutcome {
            status: MipStatus::Unbounded,
            solution: None,
            nodes_explored: search.nodes,
        }),
        Found::Point(_, x) => {
            let x = search.polish(x)?;
            Ok(MipOutcome {
                status: MipStatus::Optimal,
                solution: Some(Solution::from_point(c, x)),
                nodes_explored: search.nodes,
            })
        }
    }
}

/// Bounds with the integer ones rounded inward.
fn integer_box<T: Scalar>(vars: &VariableSpec<T>, tol: &Tolerances<T>) -> Result<(Vec<T>, Vec<T>)> {
    let mut lower = vars.lower().to_vec();
    let mut upper = vars.upper().to_vec();
    for j in vars.integer_indices() {
        if !lower[j].is_finite() || !upper[j].is_finite() {
            return Err(Error::InvalidModel(format!(
                "integer variable {j} needs finite bounds"
            )));
        }
        lower[j] = (lower[j] - tol.integrality).ceil();
        upper[j] = (upper[j] + tol.integrality).floor();
    }
    Ok((lower, upper))
}

enum Found<T> {
    Infeasible,
    Unbounded,
    Point(T, Vec<T>),
}

struct Node<T> {
    bound: T,
    id: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    /// Optimal working set of the parent relaxation.
    warm: Option<Vec<usize>>,
}

// Min-heap order on (bound, id).
impl<T: Scalar> Ord for Node<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

struct Search<'r, 'a, T> {
    c: &'r [T],
    rows: &'r RowRefs<'a, T>,
    vars: &'r VariableSpec<T>,
    opts: &'r MipOptions<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    nodes: usize,
}

impl<'r, 'a, T: Scalar> Search<'r, 'a, T> {
    fn new(
        c: &'r [T],
        rows: &'r RowRefs<'a, T>,
        vars: &'r VariableSpec<T>,
        opts: &'r MipOptions<T>,
        lower: Vec<T>,
        upper: Vec<T>,
    ) -> Self {
        Self {
            c,
            rows,
            vars,
            opts,
            lower,
            upper,
            nodes: 0,
        }
    }

    fn prune_gap(&self, v: T) -> T {
        T::lit(1e-9) * v.abs().max(T::one())
    }

    fn most_fractional(&self, x: &[T]) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for j in self.vars.integer_indices() {
            let f = x[j] - x[j].floor();
            let dist = f.min(T::one() - f);
            if dist <= self.opts.tol.integrality {
                continue;
            }
            if best.is_none_or(|(_, d)| dist > d) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Branch and bound. With `stop_below`, only points with objective below
    /// that value are of interest: nodes whose bound reaches it are pruned and
    /// the search returns as soon as one integral point qualifies.
    fn run(&mut self, stop_below: Option<T>) -> Result<Found<T>> {
        let lp_opts = self.opts.lp(false);
        let mut heap: BinaryHeap<Node<T>> = BinaryHeap::new();
        let mut next_id = 0usize;
        let mut incumbent: Option<(T, Vec<T>)> = None;
        let mut dive = Some(Node {
            bound: T::neg_infinity(),
            id: 0,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            warm: None,
        });
        next_id += 1;
        let mut root = true;

        loop {
            let node = match dive.take() {
                Some(n) => n,
                None => match heap.pop() {
                    Some(n) => n,
                    None => break,
                },
            };
            let cutoff = match (&incumbent, stop_below) {
                (Some((v, _)), _) => Some(*v - self.prune_gap(*v)),
                (None, s) => s,
            };
            if cutoff.is_some_and(|cut| node.bound >= cut) {
                continue;
            }
            if self.nodes >= self.opts.node_limit {
                return Err(Error::NodeLimit {
                    limit: self.opts.node_limit,
                    incumbent: incumbent.as_ref().map(|(v, _)| v.as_f64()),
                    incumbent_x: incumbent
                        .as_ref()
                        .map(|(_, x)| x.iter().map(|v| v.as_f64()).collect()),
                });
            }
            self.nodes += 1;
            let solved = solve_rows_warm(
                self.c,
                &self.rows.a,
                &self.rows.b,
                &node.lower,
                &node.upper,
                &lp_opts,
                node.warm.as_deref(),
            )?;
            let out = solved.outcome;
            let (obj, x) = match out.status {
                LpStatus::Infeasible => {
                    root = false;
                    continue;
                }
                // Integers are boxed, so an unbounded relaxation means an
                // unbounded continuous ray exists for any integer choice.
                LpStatus::Unbounded if root => return Ok(Found::Unbounded),
                LpStatus::Unbounded => return Err(Error::Subproblem("unbounded below the root")),
                LpStatus::Optimal => (out.objective.unwrap(), out.x.unwrap()),
            };
            root = false;
            if cutoff.is_some_and(|cut| obj >= cut) {
                continue;
            }
            match self.most_fractional(&x) {
                None => {
                    if stop_below.is_some() {
                        return Ok(Found::Point(obj, x));
                    }
                    incumbent = Some((obj, x));
                }
                Some(j) => {
                    let mut floor = Node {
                        bound: obj,
                        id: next_id,
                        lower: node.lower.clone(),
                        upper: node.upper.clone(),
                        warm: solved.working_set.clone(),
                    };
                    floor.upper[j] = x[j].floor();
                    let mut ceil = Node {
                        bound: obj,
                        id: next_id + 1,
                        lower: node.lower,
                        upper: node.upper,
                        warm: solved.working_set,
                    };
                    ceil.lower[j] = x[j].ceil();
                    next_id += 2;
                    heap.push(ceil);
                    dive = Some(floor);
                }
            }
        }
        Ok(match incumbent {
            Some((v, x)) => Found::Point(v, x),
            None => Found::Infeasible,
        })
    }

    /// Fixes the integers at `x` and returns the lexicographically smallest
    /// optimal completion.
    fn polish(&mut self, x: Vec<T>) -> Result<Vec<T>> {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for j in self.vars.integer_indices() {
            let v = x[j].round();
            lower[j] = v;
            upper[j] = v;
        }
        self.nodes += 1;
        let out = solve_rows(self.c, &self.rows.a, &self.rows.b, &lower, &upper, &self.opts.lp(true))?;
        match out.x {
            Some(p) if out.status == LpStatus::Optimal => Ok(p),
            // Rounding moved the point out of a razor-thin feasible set; the
            // unrounded relaxation point is still integral within tolerance.
            _ => Ok(x),
        }
    }
}

/// The decrease margin used when testing whether a constraint belongs to a basis.
pub fn basis_tolerance<T: Scalar>(j: T) -> T {
    T::lit(1e-9).max(T::lit(1e-9) * j.abs())
}

/// Greedy support-constraint extraction.
///
/// Candidates are scanned in ascending id order against the current, shrinking
/// set: a constraint is dropped unless dropping it lowers the optimum by more
/// than [`basis_tolerance`]. Runs of consecutive candidates are first tested
/// together and split only when the joint removal lowers the optimum; by
/// monotonicity of the optimum under removal this returns exactly the set the
/// one-at-a-time scan would. Rows the scan would drop as implied by an
/// identical later row are removed before any solve.
pub fn find_basis<T: Scalar, C: Borrow<LinearConstraint<T>>>(
    c: &[T],
    cons: &[C],
    vars: &VariableSpec<T>,
    opt: &MipOutcome<T>,
    opts: &MipOptions<T>,
) -> Result<Basis> {
    find_basis_with_shared(c, &[] as &[LinearConstraint<T>], cons, vars, opt, opts)
}

/// [`find_basis`] where the `shared` rows are always present and never
/// candidates for the basis.
pub fn find_basis_with_shared<T, S, C>(
    c: &[T],
    shared: &[S],
    cons: &[C],
    vars: &VariableSpec<T>,
    opt: &MipOutcome<T>,
    opts: &MipOptions<T>,
) -> Result<Basis>
where
    T: Scalar,
    S: Borrow<LinearConstraint<T>>,
    C: Borrow<LinearConstraint<T>>,
{
    let j = match (&opt.status, opt.objective()) {
        (MipStatus::Optimal, Some(j)) => j,
        _ => return Err(Error::InvalidModel("basis requested for a non-optimal outcome".into())),
    };
    let threshold = j - basis_tolerance(j);
    let mut order: Vec<&LinearConstraint<T>> = cons.iter().map(Borrow::borrow).collect();
    order.sort_by_key(|k| k.id);
    let shared: Vec<&LinearConstraint<T>> = shared.iter().map(Borrow::borrow).collect();

    let mut probe = Probe {
        c,
        shared: &shared,
        vars,
        opts,
        threshold,
        int_box: if vars.d_z() > 0 {
            Some(integer_box(vars, &opts.tol)?)
        } else {
            None
        },
    };
    // keep[i]: None = undecided, Some(true) kept, Some(false) dropped.
    let mut keep: Vec<Option<bool>> = vec![None; order.len()];
    // When the scan reaches a row that a later row with the same coefficients
    // implies (equal or tighter right-hand side), that later row is still in
    // the set, so dropping it leaves the optimum unchanged.
    let mut tightest_after: HashMap<Vec<u64>, T> = HashMap::new();
    for (i, row) in order.iter().enumerate().rev() {
        let key: Vec<u64> = row.a.iter().map(|v| v.as_f64().to_bits()).collect();
        match tightest_after.get_mut(&key) {
            Some(b) if *b <= row.b => keep[i] = Some(false),
            Some(b) => *b = row.b,
            None => {
                tightest_after.insert(key, row.b);
            }
        }
    }
    let candidates: Vec<usize> = (0..order.len()).filter(|&i| keep[i].is_none()).collect();
    let mut stack = vec![(0, candidates.len())];
    while let Some((lo, hi)) = stack.pop() {
        if lo >= hi {
            continue;
        }
        let range = &candidates[lo..hi];
        let rest: Vec<&LinearConstraint<T>> = (0..order.len())
            .filter(|i| keep[*i] != Some(false) && range.binary_search(i).is_err())
            .map(|i| order[i])
            .collect();
        if !probe.decreases(&rest)? {
            range.iter().for_each(|&i| keep[i] = Some(false));
        } else if hi - lo == 1 {
            keep[range[0]] = Some(true);
        } else {
            let mid = lo + (hi - lo) / 2;
            // Left half first.
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    let basis = Basis::new(
        order
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k == Some(true))
            .map(|(r, _)| r.id),
    );
    Ok(basis)
}

struct Probe<'p, T> {
    c: &'p [T],
    shared: &'p [&'p LinearConstraint<T>],
    vars: &'p VariableSpec<T>,
    opts: &'p MipOptions<T>,
    threshold: T,
    int_box: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Probe<'_, T> {
    /// Whether the optimum over `shared` plus `rows` falls below the threshold.
    fn decreases(&mut self, rows: &[&LinearConstraint<T>]) -> Result<bool> {
        let refs = RowRefs::collect(self.shared.iter().copied().chain(rows.iter().copied()));
        match &self.int_box {
            None => {
                let out = solve_rows(
                    self.c,
                    &refs.a,
                    &refs.b,
                    self.vars.lower(),
                    self.vars.upper(),
                    &self.opts.lp(false),
                )?;
                Ok(match out.status {
                    LpStatus::Optimal => out.objective.unwrap() < self.threshold,
                    LpStatus::Unbounded => true,
                    LpStatus::Infeasible => false,
                })
            }
            Some((lower, upper)) => {
                let mut search =
                    Search::new(self.c, &refs, self.vars, self.opts, lower.clone(), upper.clone());
                Ok(match search.run(Some(self.threshold))? {
                    Found::Point(..) | Found::Unbounded => true,
                    Found::Infeasible => false,
                })
            }
        }
    }
}
