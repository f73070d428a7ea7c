//! Shared fixtures for the benchmarks.

use origami_entropy::{builtin_surface, check_hypothesis, Family, StratumInfo};

/// Stratum data of a builtin surface.
pub fn stratum(family: Family) -> StratumInfo {
    check_hypothesis(&builtin_surface(family, 0).expect("builtin")).expect("hypothesis holds")
}
