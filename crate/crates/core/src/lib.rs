//! Entropy of square-tiled translation surfaces along their `SL(2,ℝ)` orbit.
//!
//! A surface is given by a pair of gluing permutations ([`surface`]). Its
//! image under a unimodular map `A` has saddle-connection entropy equal to
//! the unique `h` with `f_h(A) = 1/k`, where `f_t` is an exponential sum over
//! a scaled lattice ([`lattice`]). The [`solver`] turns truncations of that
//! sum and a tail bound into certified enclosures, [`orbit`] explores the
//! orbit, and [`oracle`] checks the lattice formulas against ray tracing on
//! the tiling itself.

pub mod error;
pub mod extended;
pub mod lattice;
pub mod numfmt;
pub mod oracle;
pub mod orbit;
pub mod sample;
pub mod solver;
pub mod summation;
pub mod surface;

pub use error::{Error, Result};
pub use lattice::{
    cell_diameter, equilateral_matrix, f_truncated, modular_lattice, reduce_basis,
    smallest_singular_value, tail_bound, theta_sum, LatticeLengths, LatticeSum, UnimodularMap,
};
pub use oracle::{
    count_paths, enumerate_singular_connections, series_identity_check, trace_ray,
    ConnectionRecord, PathCountTable,
};
pub use orbit::{fd_hessian, minimize, orbit_matrix, scan, Chart, GridScan, OrbitPoint, Target};
pub use solver::{
    entropy, entropy_enclosure, solve_monotone_decreasing, EntropyEnclosure, DEFAULT_ROOT_TOL,
};
pub use surface::{
    build_surface, builtin_surface, check_hypothesis, parse_permutation, parse_surface_file,
    Corner, Family, Permutation, SquareTiledSurface, StratumInfo,
};
