//! k-symplectic and k-contact Hamiltonian field theory in Darboux coordinates.

pub mod bridge;
pub mod config;
pub mod error;
pub mod expr;
pub mod fieldsolve;
pub mod gauge;
pub mod geometry;
pub mod io;
pub mod kcontact;
pub mod ksymplectic;
pub mod linalg;
pub mod probe;

pub use error::{Error, Result};
pub use expr::{Binding, Expr, PointBinding};
pub use gauge::{GaugeSpec, TraceConvention};
pub use geometry::{DarbouxChart, KVectorField, SectionGrid, VectorField};
pub use kcontact::KContactSystem;
pub use ksymplectic::KSymplecticSystem;
