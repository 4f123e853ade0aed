//! Desk-scale constructions of closed subsets of Cantor space with prescribed
//! Cantor-Bendixson rank, together with the machinery needed to check them:
//! ordinal notations in Cantor normal form, finite-mind-change approximations
//! of binary sequences, prefix-monotone functionals (block encoders, finite
//! products, the phase-interleaved dynamic join, and a transfinite driver),
//! exact dyadic measures induced by those functionals, and a rank engine that
//! cross-checks structural rank formulas against derivative iteration and
//! offset decoders.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure and take
//! explicit evaluation bounds, so concurrent use needs no coordination.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod error;
pub mod functionals;
pub mod measure;
pub mod ordinals;
pub mod streams;
pub mod topology;

/// Default evaluation horizon: the largest index at which bit streams,
/// functional outputs, and point separations are inspected.
pub const DEFAULT_HORIZON: usize = 4096;

/// Default enumeration bound for class point enumerations.
pub const DEFAULT_BOUND: usize = 16;

/// Default prefix depth for rank reports and derivative separation checks.
pub const DEFAULT_DEPTH: usize = 64;

/// Default use bound for preimage counting in induced measures.
pub const DEFAULT_USE_BOUND: usize = 12;
