//! Ergodicity certification and mixing-time simulation for stochastically
//! modeled mass-action reaction networks.
//!
//! The crate decides from the reaction graph alone whether a network belongs
//! to a class with an exponential convergence bound (see [`certification`]),
//! and provides the numerics to check those claims empirically: the
//! generator and Lyapunov drift scans ([`kinetics`]), tier partitions along
//! growth profiles ([`tiers`]), product-form stationary laws
//! ([`equilibrium`]), exact stochastic simulation ([`simulation`]) and
//! total-variation mixing curves ([`mixing`]).

pub mod certification;
pub mod cli;
pub mod equilibrium;
pub mod graph;
pub mod kinetics;
mod lp;
pub mod mixing;
pub mod network;
pub mod networks;
mod selftest;
pub mod simulation;
pub mod tiers;

pub use lp::Q;
pub use network::{parse_network, Complex, ParseError, Reaction, ReactionNetwork, Species};

/// Copy numbers `x`, one entry per species.
pub type LatticeState = Vec<u32>;
