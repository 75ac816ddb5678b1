//! Exact machinery for class groups, discriminants, and prime counting in
//! elementary abelian extensions of Q.
//!
//! The crate is organized bottom-up:
//!
//! - [`arith`]: scalar number theory (modular arithmetic, factorization,
//!   Kronecker symbols).
//! - [`quadratic_class_groups`]: binary quadratic forms, Gauss composition,
//!   and class-group structure for fundamental discriminants.
//! - [`abelian_fields`]: elementary abelian extensions presented by ray
//!   class data, their characters, conductors, discriminants, and subfield
//!   lattices.
//!
//! All discriminant arithmetic is exact (`BigUint`/`BigInt`); floating
//! point appears only in analytic report columns, never in acceptance
//! decisions.

pub mod arith;
pub mod abelian_fields;
pub mod bound_calculus;
pub mod group_module_algebra;
pub(crate) mod linalg;
pub mod prime_counting;
pub mod quadratic_class_groups;
pub mod torsion_pipeline;
