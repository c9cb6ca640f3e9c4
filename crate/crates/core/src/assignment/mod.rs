//! Centralized combinatorial benchmarks: the optimal weighted permutation,
//! maximum matchings on M-best preference graphs and exact perfect-matching
//! counts.

mod hungarian;
mod matching;
mod permanent;

pub use hungarian::{optimal_permutation, AssignmentResult};
pub use matching::{maximum_matching, Matching, PreferenceGraph};
pub use permanent::{count_perfect_matchings, PERMANENT_MAX_N};
