//! Exact arithmetic for Artin-Schreier extensions `L = K(λ)` of `K = F_p((t))`,
//! the Galois cohomology `H^1(G, O_L)`, universal Witt-vector polynomials and
//! truncated Witt vectors `W_n(O_L)`, together with a harness that checks the
//! trace and valuation statements about them on seeded samples.

pub mod combinat;
pub mod error;
pub mod extension;
pub mod fp;
pub mod linalg;
pub mod poly;
pub mod series;
pub mod verify;
pub mod wittpoly;
pub mod wittring;

pub use error::{Error, Result};
pub use fp::Fp;
pub use series::{LaurentSeries, Valuation};
