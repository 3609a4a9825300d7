//! Charts, k-vector fields, Lie brackets and sampled sections.
//!
//! A k-vector field `X = (X_1, …, X_k)` is stored componentwise as expressions
//! over a [`DarbouxChart`]. A map `φ: U ⊂ ℝ^k → M` is an integral section of
//! `X` when `∂φ^c/∂t^α = X_α^c ∘ φ`; [`integral_section_residual`] measures
//! how far a sampled [`SectionGrid`] is from satisfying that system.

mod chart;
mod field;
mod grid;

pub use chart::{Coordinate, DarbouxChart};
pub use field::{
    is_integrable, lie_bracket, BracketWitness, IntegrabilityReport, KVectorField, VectorField,
    BRACKET_TOLERANCE,
};
pub(crate) use field::{check_expression, check_parameters};
pub use grid::{
    axis_derivative, integral_section_residual, prolong, Axis, Prolongation, SectionGrid,
    SectionResidual,
};
