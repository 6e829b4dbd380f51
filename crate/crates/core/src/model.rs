//! Problem data: variables, linear constraints, sampled problems, solutions and bases.

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar, Tolerances};
use std::collections::BTreeSet;
use std::fmt;

/// Identifies a constraint row by the sample that produced it and its row index
/// inside that sample's block. Sample `0` is reserved for deterministic rows
/// shared by every sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId {
    pub sample: usize,
    pub row: usize,
}

impl ConstraintId {
    pub const fn new(sample: usize, row: usize) -> Self {
        Self { sample, row }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.sample, self.row)
    }
}

/// Continuous variables come first, integer variables last.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableSpec<T> {
    d_r: usize,
    d_z: usize,
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> VariableSpec<T> {
    pub fn new(d_r: usize, d_z: usize, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let d = d_r + d_z;
        if d == 0 {
            return Err(Error::InvalidModel("at least one variable is required".into()));
        }
        if lower.len() != d {
            return Err(Error::dim("lower bounds", d, lower.len()));
        }
        if upper.len() != d {
            return Err(Error::dim("upper bounds", d, upper.len()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::InvalidModel(format!(
                    "variable {i} has bounds [{l}, {u}]"
                )));
            }
        }
        Ok(Self {
            d_r,
            d_z,
            lower,
            upper,
        })
    }

    /// Every variable in `[lower, upper]`.
    pub fn boxed(d_r: usize, d_z: usize, lower: T, upper: T) -> Result<Self> {
        let d = d_r + d_z;
        Self::new(d_r, d_z, vec![lower; d], vec![upper; d])
    }

    pub fn d_r(&self) -> usize {
        self.d_r
    }

    pub fn d_z(&self) -> usize {
        self.d_z
    }

    pub fn dim(&self) -> usize {
        self.d_r + self.d_z
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    #[inline]
    pub fn is_integer(&self, i: usize) -> bool {
        i >= self.d_r
    }

    pub fn integer_indices(&self) -> std::ops::Range<usize> {
        self.d_r..self.dim()
    }

    pub fn combinatorial_dimension(&self) -> Result<u64> {
        combinatorial_dimension(self.d_r, self.d_z)
    }
}

/// `(d_R + 1) * 2^d_Z - 1`: the largest possible basis of a mixed-integer
/// problem with `d_r` continuous and `d_z` integer variables.
pub fn combinatorial_dimension(d_r: usize, d_z: usize) -> Result<u64> {
    let overflow = || Error::Overflow { d_r, d_z };
    let pow = u32::try_from(d_z)
        .ok()
        .and_then(|z| 1u64.checked_shl(z))
        .filter(|_| d_z < 64)
        .ok_or_else(overflow)?;
    (d_r as u64)
        .checked_add(1)
        .and_then(|v| v.checked_mul(pow))
        .map(|v| v - 1)
        .ok_or_else(overflow)
}

/// `a . x <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint<T> {
    pub id: ConstraintId,
    pub a: Vec<T>,
    pub b: T,
}

impl<T: Scalar> LinearConstraint<T> {
    pub fn new(id: ConstraintId, a: Vec<T>, b: T) -> Result<Self> {
        if a.iter().all(|v| v.is_zero()) {
            return Err(Error::InvalidModel(format!(
                "constraint {id} has an all-zero coefficient vector"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidModel(format!(
                "constraint {id} has non-finite data"
            )));
        }
        Ok(Self { id, a, b })
    }

    /// `b - a . x`; nonnegative means satisfied.
    pub fn slack(&self, x: &[T]) -> Result<T> {
        if x.len() != self.a.len() {
            return Err(Error::dim("point", self.a.len(), x.len()));
        }
        Ok(self.b - dot(&self.a, x))
    }
}

/// Same as [`LinearConstraint::slack`].
pub fn evaluate_slack<T: Scalar>(con: &LinearConstraint<T>, x: &[T]) -> Result<T> {
    con.slack(x)
}

/// True iff `x` satisfies every constraint and bound within `tol.feasibility`
/// and every integer variable is within `tol.integrality` of an integer.
pub fn is_feasible<T: Scalar>(
    x: &[T],
    cons: &[LinearConstraint<T>],
    vars: &VariableSpec<T>,
    tol: &Tolerances<T>,
) -> Result<bool> {
    if x.len() != vars.dim() {
        return Err(Error::dim("point", vars.dim(), x.len()));
    }
    for (i, v) in x.iter().enumerate() {
        if *v < vars.lower[i] - tol.feasibility || *v > vars.upper[i] + tol.feasibility {
            return Ok(false);
        }
        if vars.is_integer(i) && (*v - v.round()).abs() > tol.integrality {
            return Ok(false);
        }
    }
    for con in cons {
        if con.slack(x)? < -tol.feasibility {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The rows instantiated from a single uncertainty sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintBlock<T> {
    pub sample_index: usize,
    /// The uncertainty realization the rows were built from, when known.
    pub q: Option<Vec<T>>,
    pub rows: Vec<LinearConstraint<T>>,
}

impl<T: Scalar> ConstraintBlock<T> {
    pub fn new(sample_index: usize, q: Option<Vec<T>>, rows: Vec<LinearConstraint<T>>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.id.sample != sample_index) {
            return Err(Error::InvalidModel(format!(
                "row {} placed in block {sample_index}",
                bad.id
            )));
        }
        Ok(Self {
            sample_index,
            q,
            rows,
        })
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, x: &[T], tol: T) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.b - dot(&r.a, x) < -tol)
    }
}

/// Objective `c`, variable domain, deterministic rows shared by all samples,
/// and `N` sampled constraint blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProblem<T> {
    pub vars: VariableSpec<T>,
    pub c: Vec<T>,
    pub base: Vec<LinearConstraint<T>>,
    pub blocks: Vec<ConstraintBlock<T>>,
}

impl<T: Scalar> SampledProblem<T> {
    pub fn new(
        vars: VariableSpec<T>,
        c: Vec<T>,
        base: Vec<LinearConstraint<T>>,
        blocks: Vec<ConstraintBlock<T>>,
    ) -> Result<Self> {
        let d = vars.dim();
        if c.len() != d {
            return Err(Error::dim("objective", d, c.len()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidModel("a sampled problem needs at least one block".into()));
        }
        for (k, block) in blocks.iter().enumerate() {
            if block.sample_index != k + 1 {
                return Err(Error::InvalidModel(format!(
                    "block {} found at position {}; sample indices must be 1..N",
                    block.sample_index,
                    k + 1
                )));
            }
        }
        for row in base.iter().chain(blocks.iter().flat_map(|b| &b.rows)) {
            if row.a.len() != d {
                return Err(Error::dim("constraint coefficients", d, row.a.len()));
            }
        }
        if let Some(bad) = base.iter().find(|r| r.id.sample != 0) {
            return Err(Error::InvalidModel(format!("shared row {} must use sample 0", bad.id)));
        }
        Ok(Self {
            vars,
            c,
            base,
            blocks,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.vars.dim()
    }

    /// Block for a 1-based sample index.
    pub fn block(&self, sample: usize) -> Option<&ConstraintBlock<T>> {
        sample.checked_sub(1).and_then(|k| self.blocks.get(k))
    }

    pub fn row(&self, id: ConstraintId) -> Option<&LinearConstraint<T>> {
        if id.sample == 0 {
            self.base.get(id.row)
        } else {
            self.block(id.sample)?.rows.get(id.row)
        }
    }

    /// Every sampled row (the shared rows excluded).
    pub fn sampled_rows(&self) -> impl Iterator<Item = &LinearConstraint<T>> {
        self.blocks.iter().flat_map(|b| &b.rows)
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        dot(&self.c, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub objective: T,
}

impl<T: Scalar> Solution<T> {
    pub fn from_point(c: &[T], x: Vec<T>) -> Self {
        let objective = dot(c, &x);
        Self { x, objective }
    }
}

/// An ordered, duplicate-free set of constraint ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Basis {
    members: Vec<ConstraintId>,
}

impl Basis {
    pub fn new(ids: impl IntoIterator<Item = ConstraintId>) -> Self {
        let set: BTreeSet<_> = ids.into_iter().collect();
        Self {
            members: set.into_iter().collect(),
        }
    }

    pub fn members(&self) -> &[ConstraintId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ConstraintId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn union(&self, other: &Basis) -> Basis {
        Basis::new(self.members.iter().chain(&other.members).copied())
    }

    /// Row indices relative to their block, in ascending id order.
    pub fn row_pattern(&self) -> Vec<usize> {
        self.members.iter().map(|id| id.row).collect()
    }
}

impl FromIterator<ConstraintId> for Basis {
    fn from_iter<I: IntoIterator<Item = ConstraintId>>(iter: I) -> Self {
        Basis::new(iter)
    }
}
