//! Self-check suite: tracing oracle, series identity, lattice-sum
//! inequalities and tail-bound soundness.

use origami_entropy::oracle::{check_multiplicities, connection_sum};
use origami_entropy::sample::UnimodularSampler;
use origami_entropy::{
    builtin_surface, check_hypothesis, enumerate_singular_connections, equilateral_matrix,
    f_truncated, modular_lattice, reduce_basis, series_identity_check, theta_sum, Family,
    StratumInfo, UnimodularMap,
};
use rand::Rng;
use rayon::prelude::*;

use crate::CliError;

/// Tolerance for traced sums against `n(k+1)·f`.
pub const ORACLE_TOL: f64 = 1e-12;
/// Terms of the geometric series.
pub const SERIES_TERMS: usize = 60;
pub const BETERMIN_LATTICES: usize = 200;
pub const BETERMIN_TIMES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const BETERMIN_CUTOFF: usize = 60;
pub const TAIL_TRIPLES: usize = 20;
pub const MONTGOMERY_TIMES: [f64; 3] = [1.0, 2.0, 4.0];
/// Grid is `MONTGOMERY_GRID × MONTGOMERY_GRID` per derivative.
pub const MONTGOMERY_GRID: usize = 20;
const MONTGOMERY_STEP: f64 = 1e-4;
const MONTGOMERY_MARGIN: f64 = 1e-8;
const MAX_LISTED: usize = 10;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub max_coeff: usize,
    /// Replaces the stratum's `k` in the multiplicity check.
    pub k_override: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            max_coeff: 3,
            k_override: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    /// Up to ten violating inputs.
    pub violations: Vec<String>,
    pub violation_count: usize,
}

impl CheckResult {
    fn new(name: &'static str, summary: String, violations: Vec<String>) -> Self {
        let violation_count = violations.len();
        CheckResult {
            name,
            passed: violations.is_empty(),
            summary,
            violations: violations.into_iter().take(MAX_LISTED).collect(),
            violation_count,
        }
    }
}

fn stratum(family: Family) -> Result<(origami_entropy::SquareTiledSurface, StratumInfo), CliError> {
    let x = builtin_surface(family, 0)?;
    let info = check_hypothesis(&x)?;
    Ok((x, info))
}

const FAMILIES: [Family; 2] = [Family::L, Family::EW];

/// Exponents above each family's entropy, so that the series converges.
fn series_times(family: Family) -> [f64; 2] {
    match family {
        Family::EW => [6.0, 7.0],
        _ => [5.0, 6.0],
    }
}

/// Runs every check in a fixed order.
pub fn run_verify(opts: &VerifyOptions) -> Result<Vec<CheckResult>, CliError> {
    if opts.max_coeff == 0 {
        return Err(CliError::Validation("max-coeff must be positive".into()));
    }
    Ok(vec![
        multiplicities(opts)?,
        oracle_agreement(opts)?,
        series_identity()?,
        montgomery()?,
        betermin(opts.seed)?,
        tail_soundness(opts.seed)?,
    ])
}

pub fn multiplicities(opts: &VerifyOptions) -> Result<CheckResult, CliError> {
    let e = equilateral_matrix();
    let mut violations = Vec::new();
    let mut pairs = 0;
    for fam in FAMILIES {
        let (x, info) = stratum(fam)?;
        let expected = opts.k_override.unwrap_or(info.k) + 1;
        let recs = enumerate_singular_connections(&x, &e, opts.max_coeff)?;
        let rep = check_multiplicities(&recs, info.n, opts.max_coeff, expected);
        pairs += rep.pairs_checked;
        violations.extend(rep.violations.iter().map(|(vtx, (a, b), n)| {
            format!("{fam} vertex {vtx} holonomy ({a},{b}): {n} connections, expected {expected}")
        }));
    }
    let summary = format!(
        "{pairs} (vertex, holonomy) pairs with max_coeff {}",
        opts.max_coeff
    );
    Ok(CheckResult::new("multiplicities", summary, violations))
}

pub fn oracle_agreement(opts: &VerifyOptions) -> Result<CheckResult, CliError> {
    let e = equilateral_matrix();
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for fam in FAMILIES {
        let (x, info) = stratum(fam)?;
        let recs = enumerate_singular_connections(&x, &e, opts.max_coeff)?;
        let w = info.n_squares() as f64;
        for t in [3.0, 5.0] {
            let traced = connection_sum(&recs, t);
            let lattice = w * f_truncated(&e, info.sigma, t, opts.max_coeff)?.value;
            let diff = (traced - lattice).abs();
            worst = worst.max(diff);
            if !(diff <= ORACLE_TOL) {
                violations.push(format!(
                    "{fam} t={t}: traced {traced:e}, lattice {lattice:e}"
                ));
            }
        }
    }
    let summary = format!("max |traced - n(k+1)f| = {worst:.3e} (tol {ORACLE_TOL:e})");
    Ok(CheckResult::new("oracle-vs-f", summary, violations))
}

pub fn series_identity() -> Result<CheckResult, CliError> {
    let e = equilateral_matrix();
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for fam in FAMILIES {
        let (_, info) = stratum(fam)?;
        for t in series_times(fam) {
            let c = series_identity_check(&info, &e, t, SERIES_TERMS, 30)?;
            worst = worst.max(c.residual);
            // The partial sum misses exactly the remainder `bound`.
            if !((c.residual - c.bound).abs() <= 1e-14 + 1e-9 * c.closed_form) {
                violations.push(format!(
                    "{fam} t={t}: residual {:e} vs remainder {:e}",
                    c.residual, c.bound
                ));
            }
        }
    }
    let summary = format!("{SERIES_TERMS} terms, max residual {worst:.3e}");
    Ok(CheckResult::new("series-identity", summary, violations))
}

pub fn montgomery() -> Result<CheckResult, CliError> {
    let theta = |x: f64, y: f64, t: f64| -> Result<f64, CliError> {
        Ok(theta_sum(&modular_lattice(x, y)?, t, 30)?)
    };
    let n = MONTGOMERY_GRID;
    let h = MONTGOMERY_STEP;
    let cells: Vec<(f64, usize, usize)> = MONTGOMERY_TIMES
        .iter()
        .flat_map(|&t| (0..n).flat_map(move |i| (0..n).map(move |j| (t, i, j))))
        .collect();
    let results: Vec<Result<Vec<String>, CliError>> = cells
        .par_iter()
        .map(|&(t, i, j)| {
            let mut bad = Vec::new();
            let x = (i + 1) as f64 / (n + 1) as f64 * 0.5;
            let y = 0.5 + j as f64 / (n - 1) as f64;
            let dx = (theta(x + h, y, t)? - theta(x - h, y, t)?) / (2.0 * h);
            if !(dx < -MONTGOMERY_MARGIN) {
                bad.push(format!("dF/dx = {dx:e} at x={x}, y={y}, t={t}"));
            }
            let x = i as f64 / (n - 1) as f64 * 0.5;
            let y_min = (1.0 - x * x).sqrt() + 0.02;
            let y = y_min + (1.5 - y_min) * j as f64 / (n - 1) as f64;
            let dy = (theta(x, y + h, t)? - theta(x, y - h, t)?) / (2.0 * h);
            if !(dy > MONTGOMERY_MARGIN) {
                bad.push(format!("dF/dy = {dy:e} at x={x}, y={y}, t={t}"));
            }
            Ok(bad)
        })
        .collect();
    let mut violations = Vec::new();
    for r in results {
        violations.extend(r?);
    }
    let summary = format!(
        "{} sign conditions on a {n}x{n} grid, t in {MONTGOMERY_TIMES:?}",
        2 * cells.len()
    );
    Ok(CheckResult::new("montgomery", summary, violations))
}

pub fn betermin(seed: u64) -> Result<CheckResult, CliError> {
    let e = equilateral_matrix();
    let reference: Vec<f64> = BETERMIN_TIMES
        .iter()
        .map(|&t| f_truncated(&e, 1.0, t, BETERMIN_CUTOFF).map(|s| s.upper()))
        .collect::<Result<_, _>>()?;
    let maps: Vec<UnimodularMap> = UnimodularSampler::new(seed)
        .take(BETERMIN_LATTICES)
        .collect();
    let slacks: Vec<Result<Vec<f64>, CliError>> = maps
        .par_iter()
        .map(|m| {
            let r = reduce_basis(m);
            BETERMIN_TIMES
                .iter()
                .zip(&reference)
                .map(|(&t, &best)| Ok(f_truncated(&r, 1.0, t, BETERMIN_CUTOFF)?.value - best))
                .collect()
        })
        .collect();
    let mut violations = Vec::new();
    let mut min_slack = f64::INFINITY;
    for (idx, (m, s)) in maps.iter().zip(slacks).enumerate() {
        for (&t, slack) in BETERMIN_TIMES.iter().zip(s?) {
            min_slack = min_slack.min(slack);
            if !(slack >= 0.0) {
                violations.push(format!(
                    "lattice {idx} {:?} t={t}: slack {slack:e}",
                    m.entries()
                ));
            }
        }
    }
    let summary = format!(
        "{BETERMIN_LATTICES} lattices (seed {seed}), t in {BETERMIN_TIMES:?}, min slack {min_slack:.6e}"
    );
    Ok(CheckResult::new("betermin", summary, violations))
}

pub fn tail_soundness(seed: u64) -> Result<CheckResult, CliError> {
    let (_, info) = stratum(Family::L)?;
    let mut sampler = UnimodularSampler::new(seed.wrapping_add(0x7a11));
    let mut triples = Vec::with_capacity(TAIL_TRIPLES);
    for _ in 0..TAIL_TRIPLES {
        let m = sampler.next().expect("sampler is infinite");
        let t = sampler.rng().random_range(2.0..8.0);
        let n = sampler.rng().random_range(10..=30usize);
        triples.push((m, t, n));
    }
    let rows: Vec<Result<(f64, f64), CliError>> = triples
        .par_iter()
        .map(|(m, t, n)| {
            let near = f_truncated(m, info.sigma, *t, *n)?;
            let far = f_truncated(m, info.sigma, *t, 4 * n)?;
            Ok((far.value - near.value, near.tail_bound))
        })
        .collect();
    let mut violations = Vec::new();
    for ((m, t, n), row) in triples.iter().zip(rows) {
        let (gap, bound) = row?;
        if !(gap <= bound) {
            violations.push(format!(
                "{:?} t={t} N={n}: f(4N) - f(N) = {gap:e} > E = {bound:e}",
                m.entries()
            ));
        }
    }
    let summary = format!("{TAIL_TRIPLES} (A, t, N) triples against cutoff 4N");
    Ok(CheckResult::new("tail-soundness", summary, violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_k_breaks_multiplicities() {
        let opts = VerifyOptions {
            k_override: Some(5),
            max_coeff: 2,
            ..VerifyOptions::default()
        };
        let r = multiplicities(&opts).unwrap();
        assert!(!r.passed);
        assert!(r.violation_count > 0 && r.violations.len() <= MAX_LISTED);
    }

    #[test]
    fn honest_multiplicities_pass() {
        let opts = VerifyOptions {
            max_coeff: 2,
            ..VerifyOptions::default()
        };
        assert!(multiplicities(&opts).unwrap().passed);
    }
}
