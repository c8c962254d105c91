//! Exact integer-lattice machinery for norm-one tori attached to quadratic
//! extensions of étale algebras, together with decision procedures for
//! base-point transfer questions at local and global levels.

pub mod abelian;
pub mod arith;
pub mod lattice;
pub mod local;
pub mod global;
pub mod units;
pub mod verdict;
pub mod matrix;
pub mod shimura;
