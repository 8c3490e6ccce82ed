//! Rate certification for gradient-driven feedback loops.
//!
//! A linear time-invariant channel (or a network of them) is connected in
//! feedback with the gradient of a strongly convex, smooth field. The crate
//! assembles Zames-Falb multiplier LMIs for an exponential rate, solves them
//! with a built-in interior-point method, bisects on the rate, and simulates
//! the closed loop to check the certificate empirically.

pub mod certify;
pub mod error;
pub mod graph;
pub mod lmi;
pub mod sdp;
pub mod sim;
pub mod ss;
pub mod zf;

pub use error::{Error, Result};
pub use ss::StateSpace;
