//! The text-constraint theory: finding string values that give a set of
//! constraints prescribed truth values, with a persistent solution cache.

mod cache;
mod nlsolver;

pub use cache::{cache_lookup, cache_partial_match, fingerprint, CacheEntry, CacheKey, NlCache};
pub use nlsolver::{nlsolve, nlsolve_with, NlOutcome, RunContext, SearchState};
