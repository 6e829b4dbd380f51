//! Sampled robust mixed-integer programs solved directly, by the sequential
//! scenario loop, or with a learned strategy predictor.

pub mod bench;
pub mod error;
pub mod io;
pub mod learn;
pub mod lp;
pub mod mip;
pub mod model;
pub mod scalar;
pub mod scenario;
pub mod problems;
pub mod sequential;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Problem = model::SampledProblem<f64>;
pub type Block = model::ConstraintBlock<f64>;
pub type Constraint = model::LinearConstraint<f64>;
pub type Variables = model::VariableSpec<f64>;
pub type Solution = model::Solution<f64>;
pub type Trace = sequential::SeqTrace<f64>;
pub type SeqOptions = sequential::SeqOptions<f64>;
pub type MipOptions = mip::MipOptions<f64>;
pub type MipOutcome = mip::MipOutcome<f64>;
pub type Classifier = learn::MlpClassifier<f64>;
pub type TrainingSet = learn::TrainingSet<f64>;
