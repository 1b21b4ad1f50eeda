//! Exact-arithmetic canonical forms for matrices under matrix-algebra
//! similarity.
//!
//! The library reduces a matrix to its unique canonical form under
//! S^-1 M S with S ranging over the invertible elements of a reduced block
//! upper-triangular matrix algebra. On top of the core reduction it
//! provides Weyr canonical forms, problem builders for quivers, posets,
//! simultaneous similarity and module classification, Krull-Schmidt
//! decomposition by permutation, and brute-force oracles over small prime
//! fields.

pub mod algebra;
pub mod belitskii;
pub mod decompose;
pub mod error;
pub mod field;
pub mod json;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod weyr;

pub use algebra::{ClassPairSystem, ReducedAlgebra};
pub use belitskii::{
    are_equivalent, are_equivalent_problem, canonicalize, canonicalize_problem,
    canonicalize_with_space, q_strips, verify_canonical, BoxKind, BoxRecord, QStrips,
    StructuredCanonicalMatrix,
};
pub use decompose::{block_direct_sum, is_indecomposable, krull_schmidt, BlockMatrix, Decomposition};
pub use error::{Error, Result};
pub use field::{ArithOp, FieldElement, FieldSpec};
pub use linalg::{block_view, block_write, BlockIndex, Matrix, StepPartition};
pub use oracle::{enumerate_canonical, enumerate_group, orbit_equivalent, DEFAULT_BUDGET};
pub use problems::{
    kronecker_problem, module_problem, poset_problem, quiver_problem, separated_problem,
    simsim_pack, simsim_problem, simsim_unpack, upper_triangular_problem, BlockClassification,
    ProblemKind, ProblemSpec, ProblemTriple,
};
pub use weyr::{commutant_algebra, is_weyr, weyr_characteristic, weyr_form, WeyrStructure};
