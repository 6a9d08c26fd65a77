//! Exponents, corrections and condition checkers. All logarithms are base 2.

pub mod conditions;
pub mod exponent;
pub mod info;
pub mod union_bound;

pub use conditions::{
    check_necessary, check_sufficient, default_alpha_n, equiprobable_threshold, ConditionKind, ConditionReport, ConditionRow,
    SufficiencyOptions,
};
pub use exponent::{corrections, exponent, Corrections, ExponentResult};
pub use info::{kl_divergence, mutual_information};
pub use union_bound::{union_bound_failure_estimate, union_bound_terms, UnionBoundTerm, UNION_BOUND_MAX_N};
