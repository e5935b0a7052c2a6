//! Numerical dynamics of weighted composition operators `f -> w * (f o psi)`
//! on function spaces cut out by local conditions: continuous, finitely or
//! infinitely differentiable, holomorphic, and kernels of constant-coefficient
//! differential operators.
//!
//! The toolkit iterates such operators, classifies the growth of their
//! iterate seminorms, tests stable orbits of the symbol, probes (uniform)
//! mean ergodicity through Cesaro means, verifies invariance of the heat
//! kernel under a weight/symbol pair, and evolves the exponential operator
//! series `exp(t C_{w,psi})` with certified truncation.

pub mod dynamics;
pub mod error;
pub mod expr;
pub mod fd;
pub mod funcspace;
pub mod multiindex;
pub mod pdekernel;
pub mod report;
pub mod scenarios;
pub mod semigroup;
pub mod smoothcalc;
pub mod wcomp;

pub mod cli;

pub use error::{CoreError, Result};
pub use multiindex::MultiIndex;
