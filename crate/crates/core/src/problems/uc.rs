//! Unit commitment with uncertain demand.
//!
//! Variables, generator-major within each group:
//! `P[i][t]` output (continuous), `E[i][t]` cost epigraph (continuous),
//! `U[i][t]` on/off (binary). The quadratic cost `Q P^2 + C P` is replaced by
//! the piecewise-linear interpolant on uniform breakpoints, written as one
//! secant row per segment under `E`. Only the `T` demand rows depend on the
//! uncertainty; everything else is a shared row.

use crate::error::{Error, Result};
use crate::mip::{solve_mip, MipOptions, MipStatus};
use crate::model::{ConstraintId, LinearConstraint, VariableSpec};
use crate::scalar::Scalar;
use crate::scenario::UncertaintyModel;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Encoding of the minimum down-time rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinDownForm {
    /// `U[tau] <= 1 - U[t-1] + U[t]`: a unit switched off at `t` stays off.
    #[default]
    Standard,
    /// `U[tau] <= 1 - U[t-1] - U[t]`. Taken literally this forces every unit
    /// off from the second period on, so any positive demand there is
    /// infeasible.
    Printed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitCommitmentSpec {
    pub n_g: usize,
    pub horizon: usize,
    /// Amplitude of the nominal demand `A sin(2 pi t / 24)`.
    pub demand_amplitude: f64,
    /// Demand uncertainty is uniform in `[-halfwidth, halfwidth]`.
    pub halfwidth: f64,
    pub pwl_segments: usize,
    pub min_down_form: MinDownForm,
    pub seed: u64,
}

impl Default for UnitCommitmentSpec {
    fn default() -> Self {
        Self {
            n_g: 4,
            horizon: 12,
            demand_amplitude: 150.0,
            halfwidth: 1.0,
            pwl_segments: 8,
            min_down_form: MinDownForm::Standard,
            seed: 0,
        }
    }
}

impl UnitCommitmentSpec {
    pub fn desk(seed: u64) -> Self {
        Self {
            n_g: 3,
            horizon: 6,
            pwl_segments: 4,
            seed,
            ..Self::default()
        }
    }
}

/// Per-generator data drawn from the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub p_max: f64,
    pub p_min: f64,
    pub ramp: f64,
    pub q: f64,
    pub c: f64,
    pub min_up: usize,
    pub min_down: usize,
}

impl Generator {
    pub fn cost(&self, p: f64) -> f64 {
        self.q * p * p + self.c * p
    }
}

#[derive(Clone, Debug)]
pub struct UnitCommitment<T> {
    spec: UnitCommitmentSpec,
    generators: Vec<Generator>,
    demand: Vec<f64>,
    vars: VariableSpec<T>,
    c: Vec<T>,
    shared: Vec<LinearConstraint<T>>,
}

impl<T: Scalar> UnitCommitment<T> {
    pub fn spec(&self) -> &UnitCommitmentSpec {
        &self.spec
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Nominal demand per period.
    pub fn nominal_demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn p_index(&self, i: usize, t: usize) -> usize {
        i * self.spec.horizon + t
    }

    pub fn e_index(&self, i: usize, t: usize) -> usize {
        (self.spec.n_g + i) * self.spec.horizon + t
    }

    pub fn u_index(&self, i: usize, t: usize) -> usize {
        (2 * self.spec.n_g + i) * self.spec.horizon + t
    }

    /// The commitment matrix `U[i][t]` of a solution, rounded.
    pub fn commitments(&self, x: &[T]) -> Vec<Vec<bool>> {
        (0..self.spec.n_g)
            .map(|i| {
                (0..self.spec.horizon)
                    .map(|t| x[self.u_index(i, t)].as_f64() > 0.5)
                    .collect()
            })
            .collect()
    }

    /// The true quadratic cost of the outputs in `x`.
    pub fn quadratic_cost(&self, x: &[T]) -> f64 {
        let mut total = 0.0;
        for (i, g) in self.generators.iter().enumerate() {
            for t in 0..self.spec.horizon {
                total += g.cost(x[self.p_index(i, t)].as_f64());
            }
        }
        total
    }

    /// Largest gap between the interpolant and the quadratic over one
    /// generator-period, summed over all of them: `sum Q h^2 / 4`.
    pub fn pwl_error_bound(&self) -> f64 {
        let k = self.spec.pwl_segments as f64;
        self.generators
            .iter()
            .map(|g| g.q * (g.p_max / k).powi(2) / 4.0)
            .sum::<f64>()
            * self.spec.horizon as f64
    }
}

/// Draws the generator fleet and assembles the model. Fails when the fleet
/// cannot meet the worst-case demand under the shared rows.
pub fn make_unit_commitment<T: Scalar>(spec: &UnitCommitmentSpec) -> Result<UnitCommitment<T>> {
    if spec.n_g == 0 || spec.horizon == 0 || spec.pwl_segments == 0 {
        return Err(Error::InvalidModel(
            "unit commitment needs generators, periods and segments".into(),
        ));
    }
    if !(spec.halfwidth >= 0.0) || !(spec.demand_amplitude >= 0.0) {
        return Err(Error::InvalidModel("demand parameters must be nonnegative".into()));
    }
    let (n_g, horizon) = (spec.n_g, spec.horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let generators: Vec<Generator> = (0..n_g)
        .map(|_| {
            let p_max = rng.random_range(1..=115) as f64;
            let p_min = (p_max / 2.0).ceil();
            Generator {
                p_max,
                p_min,
                // P_max / 2 would leave odd-rated units unable to reach P_min
                // from a cold start.
                ramp: p_min,
                q: rng.random_range(1..=50) as f64,
                c: rng.random_range(1..=50) as f64,
                min_up: rng.random_range(1..=horizon),
                min_down: rng.random_range(1..=horizon),
            }
        })
        .collect();
    let demand: Vec<f64> = (1..=horizon)
        .map(|t| (spec.demand_amplitude * (2.0 * std::f64::consts::PI / 24.0 * t as f64).sin()).max(0.0))
        .collect();

    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    let peak = demand.iter().copied().fold(0.0, f64::max) + spec.halfwidth;
    if capacity < peak {
        return Err(Error::InvalidModel(format!(
            "fleet capacity {capacity} is below the worst-case peak demand {peak}"
        )));
    }

    let d_r = 2 * n_g * horizon;
    let d_z = n_g * horizon;
    let mut lower = vec![0.0; d_r + d_z];
    let mut upper = vec![1.0; d_r + d_z];
    for (i, g) in generators.iter().enumerate() {
        for t in 0..horizon {
            upper[i * horizon + t] = g.p_max;
            upper[(n_g + i) * horizon + t] = g.cost(g.p_max);
        }
    }
    let conv = |v: &[f64]| v.iter().map(|x| T::lit(*x)).collect::<Vec<T>>();
    let vars = VariableSpec::new(d_r, d_z, conv(&lower), conv(&upper))?;
    lower.clear();
    let mut c = vec![0.0; d_r + d_z];
    for i in 0..n_g {
        for t in 0..horizon {
            c[(n_g + i) * horizon + t] = 1.0;
        }
    }

    let mut model = UnitCommitment {
        spec: spec.clone(),
        generators,
        demand,
        vars,
        c: conv(&c),
        shared: Vec::new(),
    };
    model.shared = shared_rows(&model)?;

    // Worst case: every period at nominal plus the full halfwidth.
    let worst: Vec<T> = vec![T::lit(spec.halfwidth); horizon];
    let mut rows = model.shared.clone();
    rows.extend(model.instantiate(1, &worst)?);
    // Feasibility only: with a zero objective the first incumbent closes the search.
    let zero = vec![T::zero(); model.vars.dim()];
    let out = solve_mip(&zero, &rows, &model.vars, &MipOptions::default())?;
    if out.status != MipStatus::Optimal {
        return Err(Error::InvalidModel(format!(
            "unit commitment instance (seed {}) cannot meet the worst-case demand",
            spec.seed
        )));
    }
    Ok(model)
}

fn shared_rows<T: Scalar>(m: &UnitCommitment<T>) -> Result<Vec<LinearConstraint<T>>> {
    let d = m.vars.dim();
    let horizon = m.spec.horizon;
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for (i, g) in m.generators.iter().enumerate() {
        for t in 0..horizon {
            let (p, e, u) = (m.p_index(i, t), m.e_index(i, t), m.u_index(i, t));
            // U P_min <= P <= U P_max.
            rows.push((vec![(p, 1.0), (u, -g.p_max)], 0.0));
            rows.push((vec![(p, -1.0), (u, g.p_min)], 0.0));
            // Secants of the cost: slope_k P - E <= Q p_k p_{k+1}.
            let h = g.p_max / m.spec.pwl_segments as f64;
            for k in 0..m.spec.pwl_segments {
                let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
                let slope = g.q * (lo + hi) + g.c;
                rows.push((vec![(p, slope), (e, -1.0)], g.q * lo * hi));
            }
            // Ramp, with a cold start before the first period.
            if t == 0 {
                rows.push((vec![(p, 1.0)], g.ramp));
            } else {
                rows.push((vec![(p, 1.0), (m.p_index(i, t - 1), -1.0)], g.ramp));
            }
        }
        for t in 1..horizon {
            let (now, prev) = (m.u_index(i, t), m.u_index(i, t - 1));
            // Minimum up time: U[tau] >= U[t] - U[t-1].
            for tau in t + 1..horizon.min(t + g.min_up) {
                rows.push((vec![(m.u_index(i, tau), -1.0), (now, 1.0), (prev, -1.0)], 0.0));
            }
            match m.spec.min_down_form {
                MinDownForm::Standard => {
                    for tau in t + 1..horizon.min(t + g.min_down) {
                        rows.push((vec![(m.u_index(i, tau), 1.0), (prev, 1.0), (now, -1.0)], 1.0));
                    }
                }
                MinDownForm::Printed => {
                    for tau in t..horizon.min(t + g.min_down) {
                        let mut a = vec![(m.u_index(i, tau), 1.0), (prev, 1.0)];
                        if tau == t {
                            a[0].1 = 2.0;
                        } else {
                            a.push((now, 1.0));
                        }
                        rows.push((a, 1.0));
                    }
                }
            }
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(k, (entries, b))| {
            let mut a = vec![T::zero(); d];
            for (j, v) in entries {
                a[j] += T::lit(v);
            }
            LinearConstraint::new(ConstraintId::new(0, k), a, T::lit(b))
        })
        .collect()
}

impl<T: Scalar> UncertaintyModel<T> for UnitCommitment<T> {
    fn dim_q(&self) -> usize {
        self.spec.horizon
    }

    fn vars(&self) -> &VariableSpec<T> {
        &self.vars
    }

    fn objective(&self) -> &[T] {
        &self.c
    }

    fn shared_rows(&self) -> &[LinearConstraint<T>] {
        &self.shared
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<T> {
        let w = self.spec.halfwidth;
        (0..self.spec.horizon)
            .map(|_| T::lit(if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }))
            .collect()
    }

    /// `-sum_i P[i][t] <= -(D0[t] + q[t])` for every period.
    fn instantiate(&self, sample_index: usize, q: &[T]) -> Result<Vec<LinearConstraint<T>>> {
        if q.len() != self.spec.horizon {
            return Err(Error::dim("uncertainty sample", self.spec.horizon, q.len()));
        }
        (0..self.spec.horizon)
            .map(|t| {
                let mut a = vec![T::zero(); self.vars.dim()];
                for i in 0..self.spec.n_g {
                    a[self.p_index(i, t)] = -T::one();
                }
                LinearConstraint::new(ConstraintId::new(sample_index, t), a, -(T::lit(self.demand[t]) + q[t]))
            })
            .collect()
    }
}

/// Checks the minimum up and down times of a commitment matrix by
/// simulation: a unit switched on (off) at period `t >= 2` must stay on (off)
/// for `min_up` (`min_down`) periods or until the horizon ends.
pub fn run_lengths_ok(u: &[Vec<bool>], generators: &[Generator]) -> bool {
    u.iter().zip(generators).all(|(row, g)| {
        let horizon = row.len();
        (1..horizon).all(|t| {
            let switched = row[t] != row[t - 1];
            if !switched {
                return true;
            }
            let need = if row[t] { g.min_up } else { g.min_down };
            let until = horizon.min(t + need);
            row[t..until].iter().all(|v| *v == row[t])
        })
    })
}
