//! Finite-field interactive proof toolkit.

pub mod aqc;
pub mod field;
pub mod harness;
pub mod ipcp;
pub mod linalg;
pub mod poly;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod sumcheck;
pub mod zksumcheck;
pub mod commit;
pub mod ldtest;
pub mod lift;
pub mod nexp;

pub use field::{Fe, Field, Subset};
pub use poly::MultiPoly;
pub use rng::{Coins, RngStream};
