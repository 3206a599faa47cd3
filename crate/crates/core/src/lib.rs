//! Numerical tools for the Bargmann-Fock space: scaled arithmetic, polar
//! quadrature, the Weierstrass sigma function of the square lattice, sector
//! continuations, lattice Cauchy transforms and weighted polynomial
//! approximation.

pub mod approx;
pub mod divided;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod function;
pub mod lattice;
pub mod quadrature;
pub mod registry;
pub mod scaled;
pub mod sector;
pub mod sigma;
pub mod taylor;

pub use error::{FockError, Result};
pub use function::{EntireFnHandle, EntireFunction, TaylorData};
pub use quadrature::{PolarGrid, QuadratureSpec};
pub use scaled::ScaledComplex;
