//! Evidential-reasoning (ER) aggregation over attribute hierarchies.
//!
//! Assessments collected on different ordinal scales are turned into belief
//! distributions ([`belief`]), mapped onto a shared scale through rule-based
//! transforms ([`scale`]), and combined bottom-up over an attribute tree
//! ([`hierarchy`], [`engine`]) with weight-discounted Dempster combination.
//! Alternatives are ranked by the expected utility of their root assessment.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the HTTP service live in the `er-mcda` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod belief;
pub mod engine;
mod error;
pub mod hierarchy;
mod id;
mod linalg;
pub mod model;
pub mod scale;

pub use belief::{BeliefDistribution, UtilityInterval};
pub use engine::{combine, evaluate, rank, to_masses, Evaluation, MassAssignment, RankedAlternative};
pub use error::Error;
pub use hierarchy::{Attribute, AttributeKind, AttributeTree, DataBinding, Diagnostic};
pub use id::{AttrId, ScaleId, TransformId};
pub use model::Model;
pub use scale::{GradeScale, ScaleTransform};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Absolute tolerance for "sums to one" style checks on belief vectors.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance for sibling weight sums.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;
