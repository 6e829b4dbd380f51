//! Random robust MILP `min c.x  s.t.  A x <= b + b_q` with interval `b_q`.

use crate::error::{Error, Result};
use crate::model::{ConstraintId, LinearConstraint, VariableSpec};
use crate::scalar::Scalar;
use crate::scenario::UncertaintyModel;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomMilpSpec {
    pub n_rows: usize,
    pub d_r: usize,
    pub d_z: usize,
    /// Relative half-width of the right-hand-side interval.
    pub rho: f64,
    pub seed: u64,
}

impl Default for RandomMilpSpec {
    fn default() -> Self {
        Self {
            n_rows: 500,
            d_r: 25,
            d_z: 5,
            rho: 0.01,
            seed: 0,
        }
    }
}

impl RandomMilpSpec {
    /// The small family used throughout the tests and benchmarks.
    pub fn desk(seed: u64) -> Self {
        Self {
            n_rows: 40,
            d_r: 4,
            d_z: 2,
            rho: 0.01,
            seed,
        }
    }
}

/// Half-width of the variable box.
const BOX: f64 = 10.0;
/// Half-width of the box the anchor point is drawn from.
const ANCHOR: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct RandomMilp<T> {
    spec: RandomMilpSpec,
    vars: VariableSpec<T>,
    c: Vec<T>,
    a: Vec<Vec<T>>,
    b: Vec<T>,
    anchor: Vec<T>,
}

/// Builds the model: unit-norm Gaussian rows, an anchor `x0` with integral
/// integer part, and `b = A x0 + margin` with the margin large enough that
/// `x0` stays feasible for every right-hand side in `b (1 +- rho)`.
pub fn make_random_milp<T: Scalar>(spec: &RandomMilpSpec) -> Result<RandomMilp<T>> {
    if spec.n_rows == 0 || spec.d_r + spec.d_z == 0 {
        return Err(Error::InvalidModel("random MILP needs rows and variables".into()));
    }
    if !(0.0..1.0).contains(&spec.rho) {
        return Err(Error::InvalidModel(format!("rho = {} is outside [0, 1)", spec.rho)));
    }
    let d = spec.d_r + spec.d_z;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut a = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let row: Vec<f64> = loop {
            let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-6 {
                break row.into_iter().map(|v| v / norm).collect();
            }
        };
        a.push(row);
    }
    let anchor: Vec<f64> = (0..d)
        .map(|j| {
            let v = rng.random_range(-ANCHOR..ANCHOR);
            if j >= spec.d_r {
                v.round()
            } else {
                v
            }
        })
        .collect();
    let b: Vec<f64> = a
        .iter()
        .map(|row| {
            let ax: f64 = row.iter().zip(&anchor).map(|(p, q)| p * q).sum();
            let margin = rng.random_range(0.1..1.1) + spec.rho * ax.abs() / (1.0 - spec.rho);
            ax + margin
        })
        .collect();
    let c: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();

    let conv = |v: &[f64]| v.iter().map(|x| T::lit(*x)).collect::<Vec<T>>();
    Ok(RandomMilp {
        spec: spec.clone(),
        vars: VariableSpec::boxed(spec.d_r, spec.d_z, T::lit(-BOX), T::lit(BOX))?,
        c: conv(&c),
        a: a.iter().map(|r| conv(r)).collect(),
        b: conv(&b),
        anchor: conv(&anchor),
    })
}

impl<T: Scalar> RandomMilp<T> {
    pub fn spec(&self) -> &RandomMilpSpec {
        &self.spec
    }

    /// A point feasible for every realization.
    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }

    pub fn nominal_rhs(&self) -> &[T] {
        &self.b
    }
}

impl<T: Scalar> UncertaintyModel<T> for RandomMilp<T> {
    fn dim_q(&self) -> usize {
        self.spec.n_rows
    }

    fn vars(&self) -> &VariableSpec<T> {
        &self.vars
    }

    fn objective(&self) -> &[T] {
        &self.c
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<T> {
        let rho = T::lit(self.spec.rho);
        self.b
            .iter()
            .map(|b| T::lit(rng.random_range(-1.0..=1.0)) * rho * b.abs())
            .collect()
    }

    fn instantiate(&self, sample_index: usize, q: &[T]) -> Result<Vec<LinearConstraint<T>>> {
        if q.len() != self.spec.n_rows {
            return Err(Error::dim("uncertainty sample", self.spec.n_rows, q.len()));
        }
        self.a
            .iter()
            .zip(&self.b)
            .zip(q)
            .enumerate()
            .map(|(k, ((row, b), bq))| {
                LinearConstraint::new(ConstraintId::new(sample_index, k), row.clone(), *b + *bq)
            })
            .collect()
    }
}
