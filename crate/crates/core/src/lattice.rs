//! Unimodular maps, the scaled lattice sums `f_t(A)` and `F_t(L)`, and the
//! constants controlling their truncation error.
//!
//! Lattice points `(a, b) ∈ ℤ²` are visited shell by shell: shell `m` holds
//! the `8m` points with `max(|a|, |b|) = m`, in lexicographic order. Shells
//! are grouped into fixed chunks that may be summed in parallel; partial
//! sums are always recombined in ascending chunk order, so results do not
//! depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// Tolerance on `|det − 1|` accepted at construction.
pub const DET_TOLERANCE: f64 = 1e-12;

/// Shells per parallel work item.
const SHELL_CHUNK: usize = 32;

/// A real 2×2 matrix `(a b; c d)` with determinant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnimodularMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl UnimodularMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Self { a, b, c, d };
        let det = m.det();
        if !(det - 1.0).abs().le(&DET_TOLERANCE) {
            return Err(Error::NotUnimodular { det });
        }
        Ok(m)
    }

    /// Skips the determinant check; for products of maps already known to be unimodular.
    pub(crate) const fn new_unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new_unchecked(1.0, 0.0, 0.0, 1.0)
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new_unchecked(c, -s, s, c)
    }

    /// `(1 s; 0 1)`.
    pub const fn shear(s: f64) -> Self {
        Self::new_unchecked(1.0, s, 0.0, 1.0)
    }

    /// `diag(eᵘ, e⁻ᵘ)`.
    pub fn diag(u: f64) -> Self {
        Self::new_unchecked(u.exp(), 0.0, 0.0, (-u).exp())
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new_unchecked(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::new_unchecked(self.d, -self.b, -self.c, self.a)
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }

    /// Euclidean norm of `A·(a, b)ᵀ`.
    #[inline]
    pub fn norm_of(&self, a: i64, b: i64) -> f64 {
        let (x, y) = self.apply(a as f64, b as f64);
        (x * x + y * y).sqrt()
    }
}

impl Default for UnimodularMap {
    fn default() -> Self {
        Self::identity()
    }
}

/// `c·(1, 1/2; 0, √3/2)` with `c = (2/√3)^{1/2}`; its columns span the
/// unit-covolume triangular lattice.
pub fn equilateral_matrix() -> UnimodularMap {
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let c = (1.0 / half_sqrt3).sqrt();
    UnimodularMap::new_unchecked(c, c * 0.5, 0.0, c * half_sqrt3)
}

/// Smaller singular value of `A`, from the eigenvalues of `AᵀA`.
///
/// The small eigenvalue is taken as `det(AᵀA)/λ_max` to avoid cancellation.
pub fn smallest_singular_value(m: &UnimodularMap) -> f64 {
    let p = m.a * m.a + m.c * m.c;
    let r = m.b * m.b + m.d * m.d;
    let q = m.a * m.b + m.c * m.d;
    let half_trace = 0.5 * (p + r);
    let disc = (0.5 * (p - r)).hypot(q);
    let lambda_max = half_trace + disc;
    let det = m.det();
    (det * det / lambda_max).sqrt()
}

/// Longer diagonal of the image of the square of side `1/σ`.
pub fn cell_diameter(m: &UnimodularMap, sigma: f64) -> f64 {
    m.norm_of(1, 1).max(m.norm_of(1, -1)) / sigma
}

/// Points of shell `m ≥ 1` in lexicographic order.
pub fn shell(m: i64) -> impl Iterator<Item = (i64, i64)> {
    debug_assert!(m >= 1);
    (-m..=m).flat_map(move |a| {
        let step = if a.abs() == m { 1 } else { 2 * m as usize };
        (-m..=m).step_by(step).map(move |b| (a, b))
    })
}

/// All points of `ℤ_N² ∖ {0}` in summation order.
pub fn lattice_points(cutoff: usize) -> impl Iterator<Item = (i64, i64)> {
    (1..=cutoff as i64).flat_map(shell)
}

/// Number of nonzero points with `max(|a|,|b|) ≤ cutoff`.
pub fn point_count(cutoff: usize) -> usize {
    let w = 2 * cutoff + 1;
    w * w - 1
}

#[inline]
fn scaled_length(m: &UnimodularMap, sigma: f64, a: i64, b: i64) -> f64 {
    m.norm_of(a, b) / sigma
}

/// Sums `term(m)` shell accumulators for `m ∈ 1..=cutoff` in fixed chunks.
fn chunked_shell_sum<F>(cutoff: usize, shell_sum: F) -> f64
where
    F: Fn(usize, &mut NeumaierSum) + Sync,
{
    let n_chunks = cutoff.div_ceil(SHELL_CHUNK);
    let chunk = |c: usize| {
        let mut acc = NeumaierSum::new();
        let lo = c * SHELL_CHUNK + 1;
        let hi = ((c + 1) * SHELL_CHUNK).min(cutoff);
        for m in lo..=hi {
            shell_sum(m, &mut acc);
        }
        acc
    };
    let partials: Vec<NeumaierSum> = if n_chunks > 1 {
        (0..n_chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..n_chunks).map(chunk).collect()
    };
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

fn check_sum_args(sigma: f64, t: f64, cutoff: usize) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "decay rate t must be positive, got {t}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if cutoff == 0 {
        return Err(Error::InvalidParameter(
            "cutoff N must be at least 1".into(),
        ));
    }
    Ok(())
}

/// A truncated lattice sum with its certified tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSum {
    pub value: f64,
    pub t: f64,
    pub cutoff: usize,
    pub tail_bound: f64,
}

impl LatticeSum {
    /// Upper end of the enclosure `[value, value + tail_bound]` of the full sum.
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

/// `f_t^{(N)}(A) = Σ exp(−t‖A(a,b)‖/σ)` over `0 < max(|a|,|b|) ≤ N`.
///
/// The tail bound uses the prefactor `σ²`, which equals `n(k+1)` for a
/// surface in the stratum.
pub fn f_truncated(m: &UnimodularMap, sigma: f64, t: f64, cutoff: usize) -> Result<LatticeSum> {
    check_sum_args(sigma, t, cutoff)?;
    let value = chunked_shell_sum(cutoff, |s, acc| {
        for (a, b) in shell(s as i64) {
            acc.add((-t * scaled_length(m, sigma, a, b)).exp());
        }
    });
    Ok(LatticeSum {
        value,
        t,
        cutoff,
        tail_bound: tail_bound_sigma(m, sigma, t, cutoff),
    })
}

/// Bound on `f_t(A) − f_t^{(N)}(A)` for a surface with `n` singularities of
/// cone angle `2π(k+1)`:
/// `2π·n(k+1)·e^{tD}·t⁻²·e^{−tr}·(tr + 1)` with `r = d(A)·N/σ`.
pub fn tail_bound(m: &UnimodularMap, sigma: f64, t: f64, cutoff: usize, n: usize, k: usize) -> f64 {
    let weight = (n * (k + 1)) as f64;
    tail_formula(
        weight,
        smallest_singular_value(m),
        cell_diameter(m, sigma),
        sigma,
        t,
        cutoff,
    )
}

fn tail_bound_sigma(m: &UnimodularMap, sigma: f64, t: f64, cutoff: usize) -> f64 {
    tail_formula(
        sigma * sigma,
        smallest_singular_value(m),
        cell_diameter(m, sigma),
        sigma,
        t,
        cutoff,
    )
}

fn tail_formula(weight: f64, d: f64, diam: f64, sigma: f64, t: f64, cutoff: usize) -> f64 {
    let tr = t * d * cutoff as f64 / sigma;
    // e^{tD}·e^{−tr} combined so neither factor overflows on its own.
    2.0 * std::f64::consts::PI * weight * (t * diam - tr).exp() * (tr + 1.0) / (t * t)
}

/// Scaled lengths `‖A(a,b)‖/σ` stored in summation order, so that `f_t`
/// can be re-evaluated for many `t` without recomputing norms.
#[derive(Clone, Debug)]
pub struct LatticeLengths {
    lengths: Vec<f64>,
    /// `shell_end[m]` is the number of points in shells `1..=m`.
    shell_end: Vec<usize>,
    sigma: f64,
    d: f64,
    diam: f64,
}

impl LatticeLengths {
    pub fn new(m: &UnimodularMap, sigma: f64, cutoff: usize) -> Result<Self> {
        check_sum_args(sigma, 1.0, cutoff)?;
        let mut lengths = Vec::with_capacity(point_count(cutoff));
        let mut shell_end = Vec::with_capacity(cutoff + 1);
        shell_end.push(0);
        for s in 1..=cutoff as i64 {
            lengths.extend(shell(s).map(|(a, b)| scaled_length(m, sigma, a, b)));
            shell_end.push(lengths.len());
        }
        Ok(Self {
            lengths,
            shell_end,
            sigma,
            d: smallest_singular_value(m),
            diam: cell_diameter(m, sigma),
        })
    }

    pub fn cutoff(&self) -> usize {
        self.shell_end.len() - 1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Lengths of the points in shells `1..=cutoff`.
    pub fn lengths(&self, cutoff: usize) -> &[f64] {
        &self.lengths[..self.shell_end[cutoff.min(self.cutoff())]]
    }

    /// `f_t^{(N)}` at the stored cutoff; bitwise equal to [`f_truncated`].
    pub fn f(&self, t: f64) -> f64 {
        self.f_at(t, self.cutoff())
    }

    /// `f_t^{(N')}` for any `N' ≤ N`.
    pub fn f_at(&self, t: f64, cutoff: usize) -> f64 {
        let cutoff = cutoff.min(self.cutoff());
        chunked_shell_sum(cutoff, |s, acc| {
            for &l in &self.lengths[self.shell_end[s - 1]..self.shell_end[s]] {
                acc.add((-t * l).exp());
            }
        })
    }

    /// Tail bound at the stored cutoff with prefactor `weight = n(k+1)`.
    pub fn tail(&self, t: f64, weight: f64) -> f64 {
        tail_formula(weight, self.d, self.diam, self.sigma, t, self.cutoff())
    }
}

/// `F_t(L) = Σ exp(−t‖p‖²)` over `p = A(a,b)`, `max(|a|,|b|) ≤ N`, origin included.
pub fn theta_sum(m: &UnimodularMap, t: f64, cutoff: usize) -> Result<f64> {
    check_sum_args(1.0, t, cutoff)?;
    let rest = chunked_shell_sum(cutoff, |s, acc| {
        for (a, b) in shell(s as i64) {
            let r = m.norm_of(a, b);
            acc.add((-t * r * r).exp());
        }
    });
    let mut acc = NeumaierSum::new();
    acc.add(1.0);
    acc.add(rest);
    Ok(acc.value())
}

/// The lattice `(ℤ + zℤ)/√y` for `z = x + iy`, as the map with columns
/// `(1, 0)/√y` and `(x, y)/√y`.
pub fn modular_lattice(x: f64, y: f64) -> Result<UnimodularMap> {
    if !(y > 0.0 && y.is_finite() && x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "modular lattice needs y > 0, got y = {y}"
        )));
    }
    let s = y.sqrt();
    Ok(UnimodularMap::new_unchecked(1.0 / s, x / s, 0.0, s))
}

/// Lagrange–Gauss reduction of the columns of `A`.
///
/// Returns `A·U` for some `U ∈ SL(2,ℤ)` whose first column is a shortest
/// lattice vector and whose second column is shortest among the vectors
/// completing it to a positively oriented basis. The lattice is unchanged.
pub fn reduce_basis(m: &UnimodularMap) -> UnimodularMap {
    let (mut b1, mut b2) = ((m.a, m.c), (m.b, m.d));
    let dot = |u: (f64, f64), v: (f64, f64)| u.0 * v.0 + u.1 * v.1;
    for _ in 0..1000 {
        let mu = (dot(b1, b2) / dot(b1, b1)).round();
        b2 = (b2.0 - mu * b1.0, b2.1 - mu * b1.1);
        if dot(b2, b2) < dot(b1, b1) {
            // (b1, b2) -> (b2, -b1) keeps the orientation.
            (b1, b2) = (b2, (-b1.0, -b1.1));
        } else {
            break;
        }
    }
    UnimodularMap::new_unchecked(b1.0, b2.0, b1.1, b2.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const C_EQ: f64 = 1.074_569_931_823_542;

    #[test]
    fn det_check() {
        assert!(UnimodularMap::new(2.0, 0.0, 0.0, 0.5).is_ok());
        assert!(matches!(
            UnimodularMap::new(2.0, 0.0, 0.0, 1.0),
            Err(Error::NotUnimodular { .. })
        ));
        assert!(UnimodularMap::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn equilateral_basics() {
        let e = equilateral_matrix();
        assert!((e.det() - 1.0).abs() < 1e-15);
        let mut norms: Vec<f64> = lattice_points(2).map(|(a, b)| e.norm_of(a, b)).collect();
        norms.sort_by(f64::total_cmp);
        for n in &norms[..6] {
            assert!((n - C_EQ).abs() < 1e-14, "{n}");
        }
        assert!(norms[6] > C_EQ * 1.5);
    }

    #[test]
    fn singular_values() {
        assert_eq!(smallest_singular_value(&UnimodularMap::identity()), 1.0);
        assert!((smallest_singular_value(&UnimodularMap::diag(2f64.ln())) - 0.5).abs() < 1e-15);
        let d = smallest_singular_value(&equilateral_matrix());
        assert!((d - 0.759836).abs() < 5e-7, "{d}");
        assert!((d - C_EQ / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diameters() {
        let id = UnimodularMap::identity();
        assert!((cell_diameter(&id, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((cell_diameter(&id, 3f64.sqrt()) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let dd = cell_diameter(&equilateral_matrix(), 3f64.sqrt());
        assert!((dd - 1.07457).abs() < 5e-6, "{dd}");
    }

    #[test]
    fn shells_partition_the_box() {
        let pts: Vec<_> = lattice_points(4).collect();
        assert_eq!(pts.len(), point_count(4));
        let mut sorted = pts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), pts.len());
        assert!(!pts.contains(&(0, 0)));
        let s2: Vec<_> = shell(2).collect();
        assert_eq!(s2.len(), 16);
        assert!(s2.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identity_first_shell() {
        let f = f_truncated(&UnimodularMap::identity(), 1.0, 1.0, 1).unwrap();
        let expect = 4.0 * (-1f64).exp() + 4.0 * (-(2f64.sqrt())).exp();
        assert!((f.value - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        let id = UnimodularMap::identity();
        assert!(f_truncated(&id, 1.0, 0.0, 3).is_err());
        assert!(f_truncated(&id, 1.0, -1.0, 3).is_err());
        assert!(f_truncated(&id, 1.0, 1.0, 0).is_err());
        assert!(modular_lattice(0.0, 0.0).is_err());
    }

    #[test]
    fn cached_lengths_match_direct_sum_bitwise() {
        let m = UnimodularMap::shear(0.3).mul(&UnimodularMap::diag(0.2));
        let cache = LatticeLengths::new(&m, 3f64.sqrt(), 70).unwrap();
        for t in [1.0, 3.3, 7.0] {
            let direct = f_truncated(&m, 3f64.sqrt(), t, 70).unwrap();
            assert_eq!(cache.f(t).to_bits(), direct.value.to_bits());
            let smaller = f_truncated(&m, 3f64.sqrt(), t, 40).unwrap();
            assert_eq!(cache.f_at(t, 40).to_bits(), smaller.value.to_bits());
            assert!((cache.tail(t, 3.0) - direct.tail_bound).abs() <= 1e-15 * direct.tail_bound);
        }
    }

    #[test]
    fn headline_sum_is_one_half() {
        let f = f_truncated(
            &equilateral_matrix(),
            3f64.sqrt(),
            4.349_345_046_141_503,
            100,
        )
        .unwrap();
        assert!((f.value - 0.5).abs() < 1e-12, "{}", f.value);
        assert!(f.tail_bound < 1e-70, "{}", f.tail_bound);
    }

    #[test]
    fn tail_decreases_in_cutoff() {
        let e = equilateral_matrix();
        let s = 3f64.sqrt();
        assert!(tail_bound(&e, s, 4.35, 20, 1, 2) < tail_bound(&e, s, 4.35, 10, 1, 2));
    }

    #[test]
    fn theta_limits() {
        let e = equilateral_matrix();
        assert!((theta_sum(&e, 50.0, 10).unwrap() - 1.0).abs() < 1e-15);
        let sq = theta_sum(&UnimodularMap::identity(), std::f64::consts::PI, 30).unwrap();
        let tri = theta_sum(&e, std::f64::consts::PI, 30).unwrap();
        assert!(sq > tri);
    }

    #[test]
    fn modular_lattice_cases() {
        assert_eq!(
            modular_lattice(0.0, 1.0).unwrap(),
            UnimodularMap::identity()
        );
        let z = modular_lattice(0.5, 3f64.sqrt() / 2.0).unwrap();
        assert!((z.det() - 1.0).abs() < 1e-15);
        let sorted = |m: &UnimodularMap| {
            let mut v: Vec<f64> = lattice_points(3).map(|(a, b)| m.norm_of(a, b)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        for (x, y) in sorted(&z).iter().zip(sorted(&equilateral_matrix())) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_recovers_short_basis() {
        let e = equilateral_matrix();
        // Scramble by an integer matrix of determinant one.
        let u = UnimodularMap::new_unchecked(5.0, 7.0, 2.0, 3.0);
        let r = reduce_basis(&e.mul(&u));
        assert!((r.det() - 1.0).abs() < 1e-12);
        assert!((r.norm_of(1, 0) - C_EQ).abs() < 1e-12);
        assert!((r.norm_of(0, 1) - C_EQ).abs() < 1e-12);
    }
}
