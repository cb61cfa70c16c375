//! Conditional Gaussian mixture circuits: terms, semantics, axioms and
//! normal forms.

pub mod diagram;
pub mod dsl;
pub mod linalg;
pub mod exec;
pub mod semantics;
pub mod random;
pub mod axioms;
pub mod normalform;
