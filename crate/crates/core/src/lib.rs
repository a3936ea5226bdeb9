//! Exact arithmetic in `Z[1/p] + Z[1/p]√d`, norm equations, S-units, and the
//! order automorphisms of a congruence dimension group built on that ring.

pub mod cli;
pub mod config;
pub mod dimgroup;
pub mod fungroup;
pub mod orderauto;
pub mod pell;
pub mod quad;
pub mod sunits;

mod serde_bigint;
