//! Entropy enclosures in extended precision.
//!
//! The same sums and bounds as the double-precision path, carried out with
//! [`astro_float::BigFloat`] at [`WORKING_BITS`] bits. Terms below
//! `2^{-(WORKING_BITS + 64)}` are summed in `f64` instead, which changes
//! nothing at the working precision and skips most of the expensive `exp`
//! calls. Roots are found by Newton's method on `f − 1/k`, seeded from the
//! double-precision enclosure, then certified by sign checks on either side.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{cell_diameter, lattice_points, smallest_singular_value, UnimodularMap};
use crate::solver::{entropy_enclosure, DEFAULT_ROOT_TOL};
use crate::surface::StratumInfo;

pub const WORKING_BITS: usize = 192;
/// Significant digits rendered for extended results.
pub const DISPLAY_DIGITS: usize = 32;

const RM: RoundingMode = RoundingMode::ToEven;
const TERMS_PER_TASK: usize = 512;
const NEWTON_CAP: usize = 30;

fn consts() -> Result<Consts> {
    Consts::new().map_err(|e| Error::Extended(format!("{e:?}")))
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, WORKING_BITS)
}

fn check(x: BigFloat) -> Result<BigFloat> {
    if x.is_nan() || x.is_inf() {
        Err(Error::Extended(format!(
            "non-finite intermediate: {:?}",
            x.err()
        )))
    } else {
        Ok(x)
    }
}

/// A unimodular matrix with `BigFloat` entries.
#[derive(Clone, Debug)]
pub struct ExtendedMatrix {
    pub a: BigFloat,
    pub b: BigFloat,
    pub c: BigFloat,
    pub d: BigFloat,
}

impl ExtendedMatrix {
    /// Exact conversion of a double-precision map.
    pub fn from_map(m: &UnimodularMap) -> Self {
        Self {
            a: big(m.a),
            b: big(m.b),
            c: big(m.c),
            d: big(m.d),
        }
    }

    /// The equilateral matrix evaluated at working precision.
    pub fn equilateral() -> Self {
        let p = WORKING_BITS;
        let half_sqrt3 = BigFloat::from(3i64)
            .sqrt(p, RM)
            .div(&BigFloat::from(2i64), p, RM);
        let c = BigFloat::from(1i64).div(&half_sqrt3, p, RM).sqrt(p, RM);
        Self {
            b: c.div(&BigFloat::from(2i64), p, RM),
            d: c.mul(&half_sqrt3, p, RM),
            a: c,
            c: BigFloat::from(0i64),
        }
    }

    pub fn to_map(&self) -> Result<UnimodularMap> {
        UnimodularMap::new(
            to_f64(&self.a)?,
            to_f64(&self.b)?,
            to_f64(&self.c)?,
            to_f64(&self.d)?,
        )
    }
}

/// Nearest `f64` via the decimal rendering (the crate has no direct conversion).
pub fn to_f64(x: &BigFloat) -> Result<f64> {
    let mut cc = consts()?;
    let s = x
        .format(Radix::Dec, RM, &mut cc)
        .map_err(|e| Error::Extended(format!("{e:?}")))?;
    s.parse::<f64>()
        .map_err(|_| Error::Extended(format!("cannot read back {s:?}")))
}

/// Scaled lengths at working precision, paired with their `f64` values.
struct ExtendedLengths {
    lengths: Vec<(BigFloat, f64)>,
}

impl ExtendedLengths {
    fn new(m: &ExtendedMatrix, sigma: &BigFloat, cutoff: usize) -> Result<Self> {
        let p = WORKING_BITS;
        let points: Vec<(i64, i64)> = lattice_points(cutoff).collect();
        let lengths = points
            .par_chunks(TERMS_PER_TASK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&(a, b)| {
                        let (ab, bb) = (BigFloat::from(a), BigFloat::from(b));
                        let x = m.a.mul(&ab, p, RM).add(&m.b.mul(&bb, p, RM), p, RM);
                        let y = m.c.mul(&ab, p, RM).add(&m.d.mul(&bb, p, RM), p, RM);
                        let r2 = x.mul(&x, p, RM).add(&y.mul(&y, p, RM), p, RM);
                        let l = check(r2.sqrt(p, RM).div(sigma, p, RM))?;
                        let lf = to_f64_fast(&l);
                        Ok((l, lf))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(Self { lengths })
    }

    /// `(Σ e^{−tℓ}, Σ ℓ e^{−tℓ})` at working precision.
    fn f_and_slope(&self, t: &BigFloat) -> Result<(BigFloat, BigFloat)> {
        let p = WORKING_BITS;
        let tf = to_f64_fast(t);
        let prune = (WORKING_BITS as f64 + 64.0) * std::f64::consts::LN_2;
        let neg_t = t.neg();
        let partials = self
            .lengths
            .par_chunks(TERMS_PER_TASK)
            .map(|chunk| {
                let mut cc = consts()?;
                let mut f = BigFloat::from(0i64);
                let mut s = BigFloat::from(0i64);
                let (mut f_small, mut s_small) = (0.0f64, 0.0f64);
                for (l, lf) in chunk {
                    if tf * lf > prune {
                        let e = (-tf * lf).exp();
                        f_small += e;
                        s_small += lf * e;
                        continue;
                    }
                    let e = neg_t.mul(l, p, RM).exp(p, RM, &mut cc);
                    s = s.add(&l.mul(&e, p, RM), p, RM);
                    f = f.add(&e, p, RM);
                }
                f = f.add(&big(f_small), p, RM);
                s = s.add(&big(s_small), p, RM);
                Ok((f, s))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut f = BigFloat::from(0i64);
        let mut s = BigFloat::from(0i64);
        for (pf, ps) in &partials {
            f = f.add(pf, p, RM);
            s = s.add(ps, p, RM);
        }
        Ok((check(f)?, check(s)?))
    }
}

/// Rough `f64` value for pruning decisions; exactness is not needed.
fn to_f64_fast(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((words, _, sign, exp, _)) if !x.is_zero() => {
            let top = *words.last().unwrap_or(&0) as f64;
            let word_bits = (std::mem::size_of_val(&words[0]) * 8) as i32;
            let v = top * 2f64.powi(exp - word_bits);
            if sign.is_negative() {
                -v
            } else {
                v
            }
        }
        _ => 0.0,
    }
}

/// Extended-precision enclosure of the entropy.
#[derive(Clone, Debug)]
pub struct ExtendedEnclosure {
    pub h_lo: BigFloat,
    pub h_hi: BigFloat,
    pub cutoff: usize,
    pub evaluations: usize,
}

impl ExtendedEnclosure {
    pub fn h_lo_digits(&self, digits: usize) -> Result<String> {
        format_significant(&self.h_lo, digits)
    }

    pub fn h_hi_digits(&self, digits: usize) -> Result<String> {
        format_significant(&self.h_hi, digits)
    }

    pub fn width(&self) -> Result<f64> {
        to_f64(&self.h_hi.sub(&self.h_lo, WORKING_BITS, RM))
    }
}

/// The equation `f(t) (+ E(t)) = target` at working precision.
struct Equation<'a> {
    lengths: &'a ExtendedLengths,
    target: BigFloat,
    weight: f64,
    d: f64,
    diam: f64,
    sigma: f64,
    cutoff: usize,
    with_tail: bool,
    evaluations: usize,
}

impl Equation<'_> {
    fn tail(&self, t: f64) -> f64 {
        let tr = t * self.d * self.cutoff as f64 / self.sigma;
        2.0 * std::f64::consts::PI * self.weight * (t * self.diam - tr).exp() * (tr + 1.0) / (t * t)
    }

    /// Returns `(g(t) − target, g(t), −g'(t))` where the tail's own
    /// derivative is left out of the slope.
    fn eval(&mut self, t: &BigFloat) -> Result<(BigFloat, BigFloat, BigFloat)> {
        let p = WORKING_BITS;
        self.evaluations += 1;
        let (mut f, s) = self.lengths.f_and_slope(t)?;
        if self.with_tail {
            // Rounded up so the tail is never understated.
            let e = self.tail(to_f64_fast(t)) * (1.0 + 1e-12);
            f = f.add(&big(e), p, RM);
        }
        Ok((f.sub(&self.target, p, RM), f, s))
    }

    fn newton(&mut self, seed: f64) -> Result<BigFloat> {
        let p = WORKING_BITS;
        let mut t = big(seed);
        let tol = big(2f64.powi(-(WORKING_BITS as i32) + 40) * seed.max(1.0));
        for _ in 0..NEWTON_CAP {
            let (r, _f, s) = self.eval(&t)?;
            // t ← t + (f − target)/(Σ ℓ e^{−tℓ})
            let step = check(r.div(&s, p, RM))?;
            t = t.add(&step, p, RM);
            if step.abs().cmp(&tol).is_some_and(|c| c <= 0) {
                return Ok(t);
            }
        }
        Err(Error::IterationCap { cap: NEWTON_CAP })
    }

    /// Moves from `t` by `margin` in `direction` until the residual has the
    /// sign that makes the point a valid bound.
    fn certify(&mut self, t: &BigFloat, margin: f64, lower: bool) -> Result<BigFloat> {
        let p = WORKING_BITS;
        let mut m = margin;
        for _ in 0..12 {
            let candidate = if lower {
                t.sub(&big(m), p, RM)
            } else {
                t.add(&big(m), p, RM)
            };
            let (r, _, _) = self.eval(&candidate)?;
            let ok = if lower {
                !r.is_negative()
            } else {
                r.is_negative()
            };
            if ok {
                return Ok(candidate);
            }
            m *= 16.0;
        }
        Err(Error::Extended(
            "could not certify the extended bracket".into(),
        ))
    }
}

/// Extended-precision counterpart of [`entropy_enclosure`].
pub fn extended_entropy_enclosure(
    x: &StratumInfo,
    m: &ExtendedMatrix,
    cutoff: usize,
) -> Result<ExtendedEnclosure> {
    let p = WORKING_BITS;
    let approx = m.to_map()?;
    let seed = entropy_enclosure(x, &approx, cutoff, DEFAULT_ROOT_TOL)?;
    let sigma_big = BigFloat::from(x.n_squares() as i64).sqrt(p, RM);
    let lengths = ExtendedLengths::new(m, &sigma_big, cutoff)?;
    let target = BigFloat::from(1i64).div(&BigFloat::from(x.k as i64), p, RM);
    let mut eq = Equation {
        lengths: &lengths,
        target,
        weight: x.n_squares() as f64,
        d: smallest_singular_value(&approx),
        diam: cell_diameter(&approx, x.sigma),
        sigma: x.sigma,
        cutoff,
        with_tail: false,
        evaluations: 0,
    };
    let margin = 2f64.powi(-(WORKING_BITS as i32) + 40) * seed.h_lo;

    let root_lo = eq.newton(seed.h_lo)?;
    let h_lo = eq.certify(&root_lo, margin, true)?;

    eq.with_tail = true;
    let root_hi = if eq.tail(seed.h_hi) < 2f64.powi(-(WORKING_BITS as i32) - 8) {
        root_lo
    } else {
        eq.newton(seed.h_hi)?
    };
    let h_hi = eq.certify(&root_hi, margin, false)?;

    Ok(ExtendedEnclosure {
        h_lo,
        h_hi,
        cutoff,
        evaluations: eq.evaluations,
    })
}

/// Positional decimal rendering rounded half-up to `digits` significant digits.
pub fn format_significant(x: &BigFloat, digits: usize) -> Result<String> {
    let mut cc = consts()?;
    let s = x
        .format(Radix::Dec, RM, &mut cc)
        .map_err(|e| Error::Extended(format!("{e:?}")))?;
    crate::numfmt::round_decimal_string(&s, digits)
        .ok_or_else(|| Error::Extended(format!("unexpected rendering {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_entries() {
        let e = ExtendedMatrix::equilateral().to_map().unwrap();
        let d = crate::lattice::equilateral_matrix();
        for (x, y) in e.entries().iter().zip(d.entries()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn fast_conversion_is_close() {
        for x in [4.349, 1e-30, 123456.0, -0.75] {
            let y = to_f64_fast(&big(x));
            assert!((y - x).abs() <= 1e-15 * x.abs(), "{x} {y}");
        }
    }
}
