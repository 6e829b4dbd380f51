//! Benchmark families: random robust MILPs and unit commitment.

mod milp;
mod uc;

pub use milp::{make_random_milp, RandomMilp, RandomMilpSpec};
pub use uc::{make_unit_commitment, run_lengths_ok, Generator, MinDownForm, UnitCommitment, UnitCommitmentSpec};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::scenario::UncertaintyModel;
use serde::{Deserialize, Serialize};

/// A problem family together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "spec", rename_all = "lowercase")]
pub enum FamilySpec {
    Milp(RandomMilpSpec),
    Uc(UnitCommitmentSpec),
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Milp(_) => "milp",
            FamilySpec::Uc(_) => "uc",
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<Box<dyn UncertaintyModel<T>>> {
        Ok(match self {
            FamilySpec::Milp(s) => Box::new(make_random_milp::<T>(s)?),
            FamilySpec::Uc(s) => Box::new(make_unit_commitment::<T>(s)?),
        })
    }
}
