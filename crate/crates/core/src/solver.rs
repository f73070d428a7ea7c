//! Certified solves of `f_h(A) = 1/k`.
//!
//! Both `f^{(N)}` and `f^{(N)} + E^{(N)}` are decreasing in `t` where it
//! matters, and `f^{(N)} ≤ f ≤ f^{(N)} + E^{(N)}`. The lower end of a bracket
//! for the first equation and the upper end of a bracket for the second
//! therefore enclose the true entropy. Brackets are reported outward, so
//! the enclosure stays valid even when the refinement stops early.

use crate::error::{Error, Result};
use crate::lattice::{f_truncated, point_count, LatticeLengths, UnimodularMap};
use crate::surface::StratumInfo;

pub const DEFAULT_ROOT_TOL: f64 = 1e-13;
/// Cap on doublings/halvings while bracketing, and on refinement steps.
pub const MAX_STEPS: usize = 200;
/// Cutoffs tried by [`entropy`], in order.
pub const CUTOFF_LADDER: [usize; 8] = [25, 50, 100, 200, 400, 800, 1600, 3200];

/// Above this many points the lengths are recomputed per evaluation
/// instead of being cached.
const CACHE_LIMIT: usize = 4_000_000;

/// A bracket `[lo, hi]` with `g(lo) ≥ target > g(hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Brackets the crossing of a decreasing `g` with `target` to width `root_tol`.
///
/// The bracket is grown geometrically from `t_seed` and then refined by the
/// Illinois variant of regula falsi on `ln g − ln target`, falling back to
/// bisection whenever a step fails to halve the bracket.
pub fn bracket_root<G>(mut g: G, target: f64, t_seed: f64, root_tol: f64) -> Result<Bracket>
where
    G: FnMut(f64) -> f64,
{
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::NonPositiveTarget(target));
    }
    if !(t_seed > 0.0 && t_seed.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "seed must be positive, got {t_seed}"
        )));
    }
    if !(root_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "root_tol must be positive, got {root_tol}"
        )));
    }
    let log_target = target.ln();
    let mut evaluations = 0;
    let mut phi = |t: f64| {
        evaluations += 1;
        let v = g(t);
        if v.is_nan() {
            f64::NAN
        } else {
            v.ln() - log_target
        }
    };

    let mut a = t_seed;
    let mut fa = phi(a);
    if fa.is_nan() {
        return Err(Error::InvalidParameter(format!("function is NaN at {a}")));
    }
    let (mut lo, mut flo, mut hi, mut fhi);
    let mut steps = 0;
    if fa >= 0.0 {
        loop {
            let b = 2.0 * a;
            let fb = phi(b);
            steps += 1;
            if fb < 0.0 {
                (lo, flo, hi, fhi) = (a, fa, b, fb);
                break;
            }
            if steps >= MAX_STEPS || !b.is_finite() || fb.is_nan() {
                return Err(Error::BracketNotFound {
                    seed: t_seed,
                    steps,
                });
            }
            (a, fa) = (b, fb);
        }
    } else {
        loop {
            let b = 0.5 * a;
            let fb = phi(b);
            steps += 1;
            if fb >= 0.0 {
                (lo, flo, hi, fhi) = (b, fb, a, fa);
                break;
            }
            if steps >= MAX_STEPS || b == 0.0 || fb.is_nan() {
                return Err(Error::BracketNotFound {
                    seed: t_seed,
                    steps,
                });
            }
            (a, fa) = (b, fb);
        }
    }

    // Which end was retained on the previous step (-1 lo, +1 hi, 0 none).
    let mut last_kept = 0i8;
    let mut force_bisect = false;
    let mut width_before = hi - lo;
    let mut iter = 0;
    while hi - lo > root_tol {
        if iter >= MAX_STEPS {
            return Err(Error::IterationCap { cap: MAX_STEPS });
        }
        iter += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let mut x = if force_bisect || !flo.is_finite() || !fhi.is_finite() {
            mid
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = mid;
        }
        // Keep the step away from the ends so the far side can close in.
        let guard = 0.25 * root_tol;
        x = x.clamp(lo + guard, hi - guard);
        let fx = phi(x);
        if fx.is_nan() {
            return Err(Error::InvalidParameter(format!("function is NaN at {x}")));
        }
        if fx >= 0.0 {
            lo = x;
            flo = fx;
            if last_kept == 1 {
                fhi *= 0.5;
            }
            last_kept = 1;
        } else {
            hi = x;
            fhi = fx;
            if last_kept == -1 {
                flo *= 0.5;
            }
            last_kept = -1;
        }
        let width = hi - lo;
        if force_bisect {
            force_bisect = false;
        } else if width > 0.5 * width_before {
            force_bisect = true;
        }
        width_before = width;
    }
    Ok(Bracket {
        lo,
        hi,
        evaluations,
    })
}

/// Root of a strictly decreasing `g` at `target`; midpoint of the final bracket.
pub fn solve_monotone_decreasing<G>(g: G, target: f64, t_seed: f64, root_tol: f64) -> Result<f64>
where
    G: FnMut(f64) -> f64,
{
    bracket_root(g, target, t_seed, root_tol).map(|b| b.midpoint())
}

/// Certified interval containing the entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyEnclosure {
    pub h_lo: f64,
    pub h_hi: f64,
    pub cutoff: usize,
    pub root_tol: f64,
    pub evaluations: usize,
}

impl EntropyEnclosure {
    pub fn width(&self) -> f64 {
        self.h_hi - self.h_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.h_lo + self.h_hi)
    }

    pub fn contains(&self, h: f64) -> bool {
        self.h_lo <= h && h <= self.h_hi
    }

    /// Leading significant digits shared by the two bounds.
    pub fn agreeing_digits(&self) -> u32 {
        let a = format!("{:.20e}", self.h_lo);
        let b = format!("{:.20e}", self.h_hi);
        let (ma, ea) = a.split_once('e').unwrap_or((&a, ""));
        let (mb, eb) = b.split_once('e').unwrap_or((&b, ""));
        if ea != eb {
            return 0;
        }
        ma.chars()
            .zip(mb.chars())
            .filter(|(c, _)| *c != '.')
            .take_while(|(x, y)| x == y)
            .count() as u32
    }

    /// Intersection with an enclosure computed at a smaller cutoff.
    fn tightened_by(mut self, previous: &EntropyEnclosure) -> Self {
        self.h_lo = self.h_lo.max(previous.h_lo);
        self.h_hi = self.h_hi.min(previous.h_hi);
        self.evaluations += previous.evaluations;
        self
    }
}

/// Evaluates `f^{(N)}` either from cached lengths or directly.
enum SumEvaluator<'a> {
    Cached(LatticeLengths),
    Direct {
        m: &'a UnimodularMap,
        sigma: f64,
        cutoff: usize,
    },
}

impl<'a> SumEvaluator<'a> {
    fn new(m: &'a UnimodularMap, sigma: f64, cutoff: usize) -> Result<Self> {
        if point_count(cutoff) <= CACHE_LIMIT {
            Ok(Self::Cached(LatticeLengths::new(m, sigma, cutoff)?))
        } else {
            Ok(Self::Direct { m, sigma, cutoff })
        }
    }

    fn f_and_tail(&self, t: f64, weight: f64) -> (f64, f64) {
        match self {
            Self::Cached(c) => (c.f(t), c.tail(t, weight)),
            Self::Direct { m, sigma, cutoff } => match f_truncated(m, *sigma, t, *cutoff) {
                Ok(s) => (s.value, s.tail_bound / (sigma * sigma) * weight),
                Err(_) => (f64::NAN, f64::NAN),
            },
        }
    }
}

/// Encloses `h(AX)` between the roots of `f^{(N)} = 1/k` and `f^{(N)} + E^{(N)} = 1/k`.
pub fn entropy_enclosure(
    x: &StratumInfo,
    m: &UnimodularMap,
    cutoff: usize,
    root_tol: f64,
) -> Result<EntropyEnclosure> {
    let eval = SumEvaluator::new(m, x.sigma, cutoff)?;
    let weight = x.n_squares() as f64;
    let target = x.target();
    let lower = bracket_root(
        |t| eval.f_and_tail(t, weight).0,
        target,
        4.0 * x.sigma,
        root_tol,
    )?;
    let upper = bracket_root(
        |t| {
            let (f, e) = eval.f_and_tail(t, weight);
            f + e
        },
        target,
        lower.hi,
        root_tol,
    )?;
    Ok(EntropyEnclosure {
        h_lo: lower.lo,
        h_hi: upper.hi.max(lower.hi),
        cutoff,
        root_tol,
        evaluations: lower.evaluations + upper.evaluations,
    })
}

/// Enclosure of width at most `width_goal`, raising the cutoff along
/// [`CUTOFF_LADDER`]. Enclosures are intersected as the cutoff grows, and
/// the climb stops early once a larger cutoff no longer narrows them.
pub fn entropy(x: &StratumInfo, m: &UnimodularMap, width_goal: f64) -> Result<EntropyEnclosure> {
    entropy_with_tol(x, m, width_goal, DEFAULT_ROOT_TOL)
}

pub fn entropy_with_tol(
    x: &StratumInfo,
    m: &UnimodularMap,
    width_goal: f64,
    root_tol: f64,
) -> Result<EntropyEnclosure> {
    if !(width_goal > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "width goal must be positive, got {width_goal}"
        )));
    }
    let mut best: Option<EntropyEnclosure> = None;
    let mut last_err = None;
    for &cutoff in &CUTOFF_LADDER {
        let enc = match entropy_enclosure(x, m, cutoff, root_tol) {
            Ok(e) => e,
            // A tail bound that grows with t has no crossing yet; a larger
            // cutoff shrinks it.
            Err(e @ Error::BracketNotFound { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (enc, stalled) = match &best {
            Some(prev) => {
                let e = enc.tightened_by(prev);
                let stalled = e.width() >= prev.width();
                (e, stalled)
            }
            None => (enc, false),
        };
        if enc.width() <= width_goal {
            return Ok(enc);
        }
        best = Some(enc);
        // The tail is already below root resolution; more terms cannot help.
        if stalled {
            break;
        }
    }
    match best {
        Some(b) => Err(Error::WidthGoalNotMet {
            goal: width_goal,
            best: Box::new(b),
        }),
        None => Err(last_err.unwrap_or(Error::IterationCap {
            cap: CUTOFF_LADDER.len(),
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::equilateral_matrix;
    use crate::surface::{builtin_surface, check_hypothesis, Family};

    fn l_shape() -> StratumInfo {
        check_hypothesis(&builtin_surface(Family::L, 0).unwrap()).unwrap()
    }

    #[test]
    fn exponential_root() {
        let t = solve_monotone_decreasing(|t| (-t).exp(), 0.5, 4.0, 1e-13).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn two_term_root() {
        let g = |t: f64| 4.0 * (-t).exp() + 4.0 * (-(2f64.sqrt()) * t).exp();
        let t = solve_monotone_decreasing(g, 1.0, 4.0, 1e-14).unwrap();
        assert!(t > 1.0 && t < 2.0);
        assert!((g(t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_is_outward() {
        let g = |t: f64| (-t).exp();
        let b = bracket_root(g, 0.5, 100.0, 1e-10).unwrap();
        assert!(g(b.lo) >= 0.5 && g(b.hi) < 0.5);
        assert!(b.width() <= 1e-10);
    }

    #[test]
    fn rejects_bad_target_and_nonconforming_g() {
        assert!(matches!(
            solve_monotone_decreasing(|t| (-t).exp(), 0.0, 1.0, 1e-12),
            Err(Error::NonPositiveTarget(_))
        ));
        assert!(matches!(
            bracket_root(|_| 2.0, 1.0, 1.0, 1e-12),
            Err(Error::BracketNotFound { .. })
        ));
    }

    #[test]
    fn headline_enclosure() {
        let enc =
            entropy_enclosure(&l_shape(), &equilateral_matrix(), 100, DEFAULT_ROOT_TOL).unwrap();
        assert!(enc.h_lo <= enc.h_hi);
        assert!(enc.width() <= 1e-10);
        assert!(
            enc.contains(4.349_345_046_141_502_9)
                || (enc.midpoint() - 4.349_345_046_141_503).abs() < 1e-12
        );
        assert!(enc.agreeing_digits() >= 12);
    }

    #[test]
    fn coarser_cutoff_contains_finer() {
        let x = l_shape();
        let e = equilateral_matrix();
        let e5 = entropy_enclosure(&x, &e, 5, DEFAULT_ROOT_TOL).unwrap();
        let e10 = entropy_enclosure(&x, &e, 10, DEFAULT_ROOT_TOL).unwrap();
        assert!(e5.h_lo <= e10.h_lo && e10.h_hi <= e5.h_hi, "{e5:?} {e10:?}");
    }

    #[test]
    fn infinite_goal_stops_at_first_rung() {
        let enc = entropy(&l_shape(), &equilateral_matrix(), f64::INFINITY).unwrap();
        assert_eq!(enc.cutoff, 25);
    }

    #[test]
    fn wollmilchsau_targets_one() {
        let x = check_hypothesis(&builtin_surface(Family::EW, 0).unwrap()).unwrap();
        let enc = entropy(&x, &equilateral_matrix(), 1e-8).unwrap();
        let f = f_truncated(&equilateral_matrix(), x.sigma, enc.h_lo, enc.cutoff).unwrap();
        assert!((f.value - 1.0).abs() < 1e-10);
    }
}
