//! The verify / re-optimize loop over a sampled problem.
//!
//! Starting from a solve over the first few blocks, each iteration scans all
//! blocks for violations of the current candidate, re-solves over the
//! violating blocks plus the current basis, and extracts the new basis. The
//! optimum over the basis never decreases, so the loop cannot revisit a basis
//! and ends at the optimum of the full sampled problem.

use crate::error::{Error, Result};
use crate::mip::{find_basis_with_shared, solve_mip, solve_row_refs, MipOptions, MipOutcome, RowRefs};
use crate::model::{Basis, ConstraintId, LinearConstraint, SampledProblem, Solution};
use crate::scalar::{dot, Scalar};
use rayon::prelude::*;
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationResult {
    pub feasible: bool,
    /// Violating sample indices in ascending order, at most `r` of them.
    pub violations: Vec<usize>,
}

const SCAN_CHUNK: usize = 256;

/// The `r` smallest-index blocks that `x` violates by more than `tol`.
pub fn verify<T: Scalar>(x: &[T], problem: &SampledProblem<T>, r: usize, tol: T) -> VerificationResult {
    let mut violations = Vec::new();
    for chunk in problem.blocks.chunks(SCAN_CHUNK) {
        let hits: Vec<usize> = chunk
            .par_iter()
            .filter(|b| b.rows.iter().any(|row| row.b - dot(&row.a, x) < -tol))
            .map(|b| b.sample_index)
            .collect();
        violations.extend(hits);
        if violations.len() >= r {
            violations.truncate(r);
            break;
        }
    }
    VerificationResult {
        feasible: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug)]
pub struct SeqOptions<T> {
    /// Violating samples collected per verification.
    pub r: usize,
    pub mip: MipOptions<T>,
    /// Abort after this many iterations; `None` means `10 N`.
    pub max_iterations: Option<usize>,
}

impl<T: Scalar> Default for SeqOptions<T> {
    fn default() -> Self {
        Self {
            r: 10,
            mip: MipOptions::default(),
            max_iterations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub t: usize,
    /// Objective of the candidate produced at this iteration.
    pub objective: T,
    pub basis_size: usize,
    /// Violating samples that triggered this iteration's solve (0 at `t = 0`).
    pub violations: usize,
    /// Constraints handed to the solver, counting each violating sample's
    /// block as one constraint and each basis row as one.
    pub constraints_in_solve: usize,
    /// Rows handed to the solver, shared rows excluded.
    pub rows_in_solve: usize,
    pub nodes: usize,
    pub millis: f64,
    /// The solve used the full block after a rejected prediction.
    pub fallback: bool,
    /// The objective failed to increase and the bases were merged.
    pub degenerate: bool,
    pub basis: Basis,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeqTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    /// Solve iterations after the initialization.
    pub iterations: usize,
    pub total_solve_calls: usize,
    pub fallback_count: usize,
    pub wall_time: Duration,
}

impl<T: Scalar> SeqTrace<T> {
    pub fn max_constraints_per_solve(&self) -> usize {
        self.records.iter().map(|r| r.constraints_in_solve).max().unwrap_or(0)
    }

    /// Objectives of consecutive records increase by more than the strict
    /// tolerance.
    pub fn is_strictly_increasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective > w[0].objective + strict_tolerance(w[0].objective))
    }

    /// No basis appears twice.
    pub fn bases_are_distinct(&self) -> bool {
        let mut seen: Vec<&Basis> = self.records.iter().map(|r| &r.basis).collect();
        seen.sort_by(|a, b| a.members().cmp(b.members()));
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// `1e-9 max(1, |J|)`.
pub fn strict_tolerance<T: Scalar>(j: T) -> T {
    T::lit(1e-9) * j.abs().max(T::one())
}

/// Number of leading blocks in the initial solve: `min(d_comb + 1, d + 1, N)`.
pub fn initial_block_count<T: Scalar>(problem: &SampledProblem<T>) -> usize {
    let d_comb = problem
        .vars
        .combinatorial_dimension()
        .map(|v| usize::try_from(v).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    d_comb
        .saturating_add(1)
        .min(problem.dim() + 1)
        .min(problem.n_samples())
}

/// Solves the whole sampled problem in one call.
pub fn solve_direct<T: Scalar>(problem: &SampledProblem<T>, opts: &MipOptions<T>) -> Result<MipOutcome<T>> {
    let rows: Vec<&LinearConstraint<T>> = problem.base.iter().chain(problem.sampled_rows()).collect();
    solve_mip(&problem.c, &rows, &problem.vars, opts)
}

/// Working state shared by the plain and the learned loop.
pub(crate) struct Loop<'p, T> {
    pub problem: &'p SampledProblem<T>,
    pub mip: &'p MipOptions<T>,
    pub trace: SeqTrace<T>,
    pub x: Vec<T>,
    pub objective: T,
    pub basis: Basis,
    started: Instant,
}

/// Result of one `Solve_MIP` call: optimizer, its basis, and the counts.
pub(crate) struct Step<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub basis: Basis,
    pub nodes: usize,
    pub rows: usize,
}

impl<'p, T: Scalar> Loop<'p, T> {
    /// Runs the initialization solve over the first blocks.
    pub fn start(problem: &'p SampledProblem<T>, mip: &'p MipOptions<T>) -> Result<Self> {
        let started = Instant::now();
        let m = initial_block_count(problem);
        let ids: Vec<ConstraintId> = problem.blocks[..m]
            .iter()
            .flat_map(|b| b.rows.iter().map(|r| r.id))
            .collect();
        let step = solve_subset(problem, mip, &ids)?;
        let mut lp = Self {
            problem,
            mip,
            trace: SeqTrace::default(),
            x: step.x.clone(),
            objective: step.objective,
            basis: step.basis.clone(),
            started,
        };
        lp.trace.total_solve_calls = 1;
        lp.push(0, &step, m, false, false, started);
        Ok(lp)
    }

    fn push(&mut self, violations: usize, step: &Step<T>, constraints: usize, fallback: bool, degenerate: bool, since: Instant) {
        self.trace.records.push(IterationRecord {
            t: self.trace.records.len(),
            objective: step.objective,
            basis_size: step.basis.len(),
            violations,
            constraints_in_solve: constraints,
            rows_in_solve: step.rows,
            nodes: step.nodes,
            millis: since.elapsed().as_secs_f64() * 1e3,
            fallback,
            degenerate,
            basis: step.basis.clone(),
        });
    }

    /// Takes `step` as the next iterate and records it. If the objective did
    /// not increase, the old and new bases are merged.
    pub fn advance(&mut self, mut step: Step<T>, violations: usize, constraints: usize, fallback: bool, since: Instant) {
        let degenerate = step.objective <= self.objective + strict_tolerance(self.objective);
        if degenerate {
            log::warn!(
                "objective did not increase at iteration {} ({:e} -> {:e}); merging bases",
                self.trace.records.len(),
                self.objective.as_f64(),
                step.objective.as_f64()
            );
            step.basis = step.basis.union(&self.basis);
        }
        self.trace.iterations += 1;
        self.trace.fallback_count += usize::from(fallback);
        self.push(violations, &step, constraints, fallback, degenerate, since);
        self.x = step.x;
        self.objective = step.objective;
        self.basis = step.basis;
        self.check_basis_size();
    }

    fn check_basis_size(&self) {
        if let Ok(d_comb) = self.problem.vars.combinatorial_dimension() {
            if self.basis.len() as u64 > d_comb {
                log::warn!(
                    "basis has {} members, more than the combinatorial dimension {d_comb}",
                    self.basis.len()
                );
            }
        }
    }

    pub fn guard(&self, max_iterations: Option<usize>) -> Result<()> {
        let limit = max_iterations.unwrap_or(10 * self.problem.n_samples());
        if self.trace.iterations >= limit {
            return Err(Error::IterationLimit(limit));
        }
        Ok(())
    }

    pub fn finish(mut self) -> (Solution<T>, Basis, SeqTrace<T>) {
        self.trace.wall_time = self.started.elapsed();
        let sol = Solution::from_point(&self.problem.c, self.x);
        (sol, self.basis, self.trace)
    }
}

/// Solves over the shared rows plus the rows `ids` and extracts the basis
/// among `ids`.
pub(crate) fn solve_subset<T: Scalar>(
    problem: &SampledProblem<T>,
    mip: &MipOptions<T>,
    ids: &[ConstraintId],
) -> Result<Step<T>> {
    let cons: Vec<&LinearConstraint<T>> = ids
        .iter()
        .map(|id| {
            problem
                .row(*id)
                .ok_or_else(|| Error::InvalidModel(format!("constraint {id} does not exist")))
        })
        .collect::<Result<_>>()?;
    let refs = RowRefs::collect(problem.base.iter().chain(cons.iter().copied()));
    let out = solve_row_refs(&problem.c, &refs, &problem.vars, mip)?;
    let sol = match out.status {
        crate::mip::MipStatus::Optimal => out.solution.clone().unwrap(),
        crate::mip::MipStatus::Infeasible => return Err(Error::Subproblem("infeasible")),
        crate::mip::MipStatus::Unbounded => return Err(Error::Subproblem("unbounded")),
    };
    let basis = find_basis_with_shared(&problem.c, &problem.base, &cons, &problem.vars, &out, mip)?;
    Ok(Step {
        x: sol.x,
        objective: sol.objective,
        basis,
        nodes: out.nodes_explored,
        rows: cons.len(),
    })
}

/// Verify-then-reoptimize with `opts.r` violating samples per iteration.
pub fn solve_sequential<T: Scalar>(
    problem: &SampledProblem<T>,
    opts: &SeqOptions<T>,
) -> Result<(Solution<T>, Basis, SeqTrace<T>)> {
    if opts.r == 0 {
        return Err(Error::InvalidModel("r must be at least 1".into()));
    }
    let mut state = Loop::start(problem, &opts.mip)?;
    let tol = opts.mip.tol.feasibility;
    loop {
        let since = Instant::now();
        let check = verify(&state.x, problem, opts.r, tol);
        if check.feasible {
            break;
        }
        state.guard(opts.max_iterations)?;
        let mut ids: Vec<ConstraintId> = state.basis.members().to_vec();
        for &s in &check.violations {
            ids.extend(problem.blocks[s - 1].rows.iter().map(|r| r.id));
        }
        ids.sort();
        ids.dedup();
        let step = solve_subset(problem, &opts.mip, &ids)?;
        state.trace.total_solve_calls += 1;
        let constraints = check.violations.len() + state.basis.len();
        state.advance(step, check.violations.len(), constraints, false, since);
    }
    Ok(state.finish())
}
