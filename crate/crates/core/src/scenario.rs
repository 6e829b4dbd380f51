//! Sample complexity of the scenario approach and seeded sampling of
//! uncertainty models into sampled problems.

use crate::error::{Error, Result};
use crate::model::{ConstraintBlock, LinearConstraint, SampledProblem, VariableSpec};
use crate::scalar::{compensated_sum, dot, Scalar};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Accuracy `epsilon` and confidence `delta`, both in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessSpec {
    epsilon: f64,
    delta: f64,
}

impl RobustnessSpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidModel(format!("epsilon = {epsilon} is outside (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidModel(format!("delta = {delta} is outside (0, 1)")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Natural log of `sum_{l < k} C(n, l) eps^l (1 - eps)^(n - l)`.
///
/// Terms follow `T_{l+1} = T_l (n - l) / (l + 1) * eps / (1 - eps)` in log
/// space and are summed relative to the largest one.
pub fn log_binomial_tail(n: u64, k: u64, epsilon: f64) -> f64 {
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    if k > n {
        return 0.0;
    }
    let ratio = (epsilon / (1.0 - epsilon)).ln();
    let mut logs = Vec::with_capacity(k as usize);
    let mut t = n as f64 * (-epsilon).ln_1p();
    logs.push(t);
    for l in 0..k - 1 {
        t += ((n - l) as f64).ln() - ((l + 1) as f64).ln() + ratio;
        logs.push(t);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum = compensated_sum(logs.iter().map(|l| (l - top).exp()));
    (top + sum.ln()).min(0.0)
}

/// Smallest `N` for which the binomial tail with `d_comb` terms is at most `delta`.
pub fn sample_complexity(spec: &RobustnessSpec, d_comb: u64) -> Result<u64> {
    if d_comb == 0 {
        return Err(Error::InvalidModel("combinatorial dimension must be positive".into()));
    }
    let target = spec.delta.ln();
    let ok = |n: u64| log_binomial_tail(n, d_comb, spec.epsilon) <= target;
    let mut hi = d_comb;
    while !ok(hi) {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::Invariant("sample size overflows u64".into()))?;
    }
    // Invariant: ok(hi), !ok(lo) (or lo below the search range).
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A parametric constraint family `F(q)` together with the deterministic
/// part of the problem it belongs to.
pub trait UncertaintyModel<T: Scalar>: Send + Sync {
    fn dim_q(&self) -> usize;

    fn vars(&self) -> &VariableSpec<T>;

    fn objective(&self) -> &[T];

    /// Rows that do not depend on `q`; they are part of every problem.
    fn shared_rows(&self) -> &[LinearConstraint<T>] {
        &[]
    }

    /// One draw of the uncertain parameters.
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<T>;

    /// The rows of `F(q)`, tagged with `sample_index`.
    fn instantiate(&self, sample_index: usize, q: &[T]) -> Result<Vec<LinearConstraint<T>>>;
}

/// Generator for sample `index`: stream `index` of the ChaCha8 key derived from
/// `seed`, so each draw is independent of how many others are taken.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The constraint block for sample `index` (1-based).
pub fn draw_block<T: Scalar, M: UncertaintyModel<T> + ?Sized>(
    model: &M,
    index: usize,
    seed: u64,
) -> Result<ConstraintBlock<T>> {
    let mut rng = sample_rng(seed, index as u64);
    let q = model.sample(&mut rng);
    if q.len() != model.dim_q() {
        return Err(Error::dim("uncertainty sample", model.dim_q(), q.len()));
    }
    let rows = model.instantiate(index, &q)?;
    ConstraintBlock::new(index, Some(q), rows)
}

/// `N` i.i.d. draws from `model`, block `i` built from stream `i`.
pub fn build_sampled_problem<T: Scalar, M: UncertaintyModel<T> + ?Sized>(
    model: &M,
    n: usize,
    seed: u64,
) -> Result<SampledProblem<T>> {
    if n == 0 {
        return Err(Error::InvalidModel("at least one sample is required".into()));
    }
    let blocks = (1..=n)
        .into_par_iter()
        .map(|i| draw_block(model, i, seed))
        .collect::<Result<Vec<_>>>()?;
    SampledProblem::new(
        model.vars().clone(),
        model.objective().to_vec(),
        model.shared_rows().to_vec(),
        blocks,
    )
}

/// Fraction of `m` fresh draws whose rows `x` violates by more than `tol`.
pub fn empirical_violation<T: Scalar, M: UncertaintyModel<T> + ?Sized>(
    x: &[T],
    model: &M,
    m: usize,
    seed: u64,
    tol: T,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidModel("at least one sample is required".into()));
    }
    if x.len() != model.vars().dim() {
        return Err(Error::dim("point", model.vars().dim(), x.len()));
    }
    let violated = (1..=m)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let q = model.sample(&mut rng);
            let rows = model.instantiate(i, &q)?;
            Ok(rows.iter().any(|r| r.b - dot(&r.a, x) < -tol))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(violated.iter().filter(|v| **v).count() as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_closed_form() {
        let spec = RobustnessSpec::new(0.1, 0.01).unwrap();
        assert_eq!(sample_complexity(&spec, 1).unwrap(), 44);
    }

    #[test]
    fn tail_saturates_below_d_comb() {
        assert_eq!(log_binomial_tail(3, 5, 0.2), 0.0);
        assert_eq!(log_binomial_tail(10, 0, 0.2), f64::NEG_INFINITY);
    }

    #[test]
    fn tail_matches_direct_sum() {
        // n = 12, k = 4, eps = 0.3 evaluated term by term.
        let choose = |n: u64, k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let direct: f64 = (0..4).map(|l| choose(12, l) * 0.3f64.powi(l as i32) * 0.7f64.powi(12 - l as i32)).sum();
        assert!((log_binomial_tail(12, 4, 0.3).exp() - direct).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_levels() {
        assert!(RobustnessSpec::new(0.0, 0.1).is_err());
        assert!(RobustnessSpec::new(0.1, 1.0).is_err());
    }

    #[test]
    fn monotone_in_epsilon() {
        let tight = RobustnessSpec::new(0.05, 1e-6).unwrap();
        let loose = RobustnessSpec::new(0.1, 1e-6).unwrap();
        assert!(sample_complexity(&tight, 10).unwrap() > sample_complexity(&loose, 10).unwrap());
    }
}
