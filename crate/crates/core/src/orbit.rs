//! The `(s, u)` slice of the orbit through a base surface.
//!
//! A point `(s, u)` stands for `diag(eᵘ, e⁻ᵘ)·(1 s; 0 1)·base`. Grid scans,
//! finite-difference derivatives and a compass search all work with the
//! midpoint of the entropy enclosure and carry the width alongside.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{f_truncated, UnimodularMap};
use crate::numfmt::sig17;
use crate::solver::{entropy, EntropyEnclosure};
use crate::surface::StratumInfo;

/// Cutoff used when differentiating `f_t` at a fixed `t`.
pub const F_TARGET_CUTOFF: usize = 100;
/// Enclosure width used for entropy values inside derivatives and searches.
pub const INNER_WIDTH: f64 = 1e-12;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const EVALUATION_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub s: f64,
    pub u: f64,
    pub base: UnimodularMap,
}

impl OrbitPoint {
    pub fn new(s: f64, u: f64, base: UnimodularMap) -> Self {
        Self { s, u, base }
    }

    pub fn matrix(&self) -> UnimodularMap {
        orbit_matrix(self)
    }
}

/// `diag(eᵘ, e⁻ᵘ)·(1 s; 0 1)·base`.
pub fn orbit_matrix(p: &OrbitPoint) -> UnimodularMap {
    UnimodularMap::diag(p.u)
        .mul(&UnimodularMap::shear(p.s))
        .mul(&p.base)
}

/// Enclosure midpoint, falling back to the best enclosure when the width
/// goal is out of reach.
fn entropy_value(x: &StratumInfo, m: &UnimodularMap, width_goal: f64) -> Result<EntropyEnclosure> {
    match entropy(x, m, width_goal) {
        Err(Error::WidthGoalNotMet { best, .. }) => Ok(*best),
        other => other,
    }
}

/// Entropy enclosures over a rectangular `(s, u)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridScan {
    pub s_values: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `entropies[iu][is]`; `NaN` where the cell failed.
    pub entropies: Vec<Vec<f64>>,
    pub widths: Vec<Vec<f64>>,
    pub width_goal: f64,
    /// `(is, iu, message)` for each failed cell.
    pub failures: Vec<(usize, usize, String)>,
}

impl GridScan {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn value(&self, is: usize, iu: usize) -> f64 {
        self.entropies[iu][is]
    }

    /// Index `(is, iu)` of the smallest entropy, ignoring failed cells.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (iu, row) in self.entropies.iter().enumerate() {
            for (is, &h) in row.iter().enumerate() {
                if h.is_nan() {
                    continue;
                }
                if best.map_or(true, |(_, _, b)| h < b) {
                    best = Some((is, iu, h));
                }
            }
        }
        best.map(|(is, iu, _)| (is, iu))
    }

    /// Whether the minimum is attained at exactly one cell.
    pub fn argmin_is_strict(&self) -> bool {
        let Some((is, iu)) = self.argmin() else {
            return false;
        };
        let min = self.value(is, iu);
        self.entropies
            .iter()
            .flatten()
            .filter(|&&h| h == min)
            .count()
            == 1
    }

    /// Largest `|h(s,u) − h(−s,u)|` over grid columns mirrored about `s = 0`.
    pub fn mirror_defect(&self) -> Option<f64> {
        let n = self.s_values.len();
        let mut worst: Option<f64> = None;
        for is in 0..n {
            let js = n - 1 - is;
            if (self.s_values[is] + self.s_values[js]).abs() > 1e-12 {
                return None;
            }
            for row in &self.entropies {
                let d = (row[is] - row[js]).abs();
                worst = Some(worst.map_or(d, |w: f64| w.max(d)));
            }
        }
        worst
    }

    /// CSV with header `s,u,h_mid,h_width`, `u` in the outer loop.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,u,h_mid,h_width\n");
        for (iu, &u) in self.u_values.iter().enumerate() {
            for (is, &s) in self.s_values.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    sig17(s),
                    sig17(u),
                    sig17(self.entropies[iu][is]),
                    sig17(self.widths[iu][is]),
                ));
            }
        }
        out
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} grid has non-finite values"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "{name} grid is not ascending"
        )));
    }
    Ok(())
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Enclosures at every grid point. Cells are independent and written back
/// by index; a failed cell is recorded and the scan continues.
pub fn scan(
    x: &StratumInfo,
    base: &UnimodularMap,
    s_grid: &[f64],
    u_grid: &[f64],
    width_goal: f64,
) -> Result<GridScan> {
    check_grid("s", s_grid)?;
    check_grid("u", u_grid)?;
    let ns = s_grid.len();
    let cells: Vec<Result<EntropyEnclosure>> = (0..ns * u_grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = OrbitPoint::new(s_grid[idx % ns], u_grid[idx / ns], *base);
            entropy(x, &orbit_matrix(&p), width_goal)
        })
        .collect();

    let mut entropies = vec![vec![f64::NAN; ns]; u_grid.len()];
    let mut widths = vec![vec![f64::NAN; ns]; u_grid.len()];
    let mut failures = Vec::new();
    for (idx, cell) in cells.into_iter().enumerate() {
        let (is, iu) = (idx % ns, idx / ns);
        match cell {
            Ok(enc) => {
                entropies[iu][is] = enc.midpoint();
                widths[iu][is] = enc.width();
            }
            Err(e) => failures.push((is, iu, e.to_string())),
        }
    }
    Ok(GridScan {
        s_values: s_grid.to_vec(),
        u_values: u_grid.to_vec(),
        entropies,
        widths,
        width_goal,
        failures,
    })
}

/// Coordinates in which derivatives are taken.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chart {
    /// `(s, u)` around the base point.
    Orbit,
    /// `(ρ, θ)`: length of the first basis vector and the angle to the
    /// second, around the base point's values. The lattice is
    /// `(ρ, cos θ/(ρ sin θ); 0, 1/ρ)` up to rotation.
    LengthAngle,
}

/// The function being differentiated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// Midpoint of the entropy enclosure.
    Entropy,
    /// `f_t^{(N)}` at fixed `t`, with `N` = [`F_TARGET_CUTOFF`].
    F { t: f64 },
}

/// Finite-difference derivatives at the base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdResult {
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    pub step: f64,
    pub evaluations: usize,
}

impl FdResult {
    pub fn determinant(&self) -> f64 {
        let h = &self.hessian;
        h[0][0] * h[1][1] - h[0][1] * h[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.hessian[0][0] + self.hessian[1][1]
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient[0].hypot(self.gradient[1])
    }

    /// Eigenvalues of the symmetrised Hessian, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let h = &self.hessian;
        let off = 0.5 * (h[0][1] + h[1][0]);
        let mean = 0.5 * (h[0][0] + h[1][1]);
        let r = (0.5 * (h[0][0] - h[1][1])).hypot(off);
        [mean - r, mean + r]
    }
}

/// `(ρ, θ)` of a basis: first column length and angle to the second column.
pub fn length_angle(m: &UnimodularMap) -> (f64, f64) {
    let (x1, y1) = (m.a, m.c);
    let (x2, y2) = (m.b, m.d);
    let rho = x1.hypot(y1);
    let theta = (x1 * y2 - y1 * x2).atan2(x1 * x2 + y1 * y2);
    (rho, theta)
}

/// Upper-triangular representative of the lattice with coordinates `(ρ, θ)`.
pub fn length_angle_matrix(rho: f64, theta: f64) -> UnimodularMap {
    let (sin, cos) = theta.sin_cos();
    UnimodularMap::new_unchecked(rho, cos / (rho * sin), 0.0, 1.0 / rho)
}

fn chart_matrix(chart: Chart, base: &UnimodularMap, dx: f64, dy: f64) -> UnimodularMap {
    match chart {
        Chart::Orbit => orbit_matrix(&OrbitPoint::new(dx, dy, *base)),
        Chart::LengthAngle => {
            let (rho, theta) = length_angle(base);
            length_angle_matrix(rho + dx, theta + dy)
        }
    }
}

/// Central first and second differences at the base point of `chart`.
pub fn fd_hessian(
    x: &StratumInfo,
    base: &UnimodularMap,
    target: Target,
    chart: Chart,
    step: f64,
) -> Result<FdResult> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    if let Target::F { t } = target {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fixed t must be positive, got {t}"
            )));
        }
    }
    let eval = |i: i32, j: i32| -> Result<f64> {
        let m = chart_matrix(chart, base, i as f64 * step, j as f64 * step);
        match target {
            Target::Entropy => Ok(entropy_value(x, &m, INNER_WIDTH)?.midpoint()),
            Target::F { t } => Ok(f_truncated(&m, x.sigma, t, F_TARGET_CUTOFF)?.value),
        }
    };
    let offsets: [(i32, i32); 9] = [
        (0, 0),
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];
    let vals: Vec<f64> = offsets
        .par_iter()
        .map(|&(i, j)| eval(i, j))
        .collect::<Result<_>>()?;
    let [f00, fp0, fm0, f0p, f0m, fpp, fpm, fmp, fmm] = vals[..] else {
        unreachable!()
    };
    let h = step;
    let gx = (fp0 - fm0) / (2.0 * h);
    let gy = (f0p - f0m) / (2.0 * h);
    let hxx = (fp0 - 2.0 * f00 + fm0) / (h * h);
    let hyy = (f0p - 2.0 * f00 + f0m) / (h * h);
    let hxy = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    Ok(FdResult {
        gradient: [gx, gy],
        hessian: [[hxx, hxy], [hxy, hyy]],
        step,
        evaluations: offsets.len(),
    })
}

/// Outcome of [`minimize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeResult {
    pub point: OrbitPoint,
    pub entropy: f64,
    pub evaluations: usize,
    pub final_step: f64,
}

/// Compass search on the enclosure midpoint, halving the step when no
/// axis neighbour improves, until the step drops below `stop_tol`.
pub fn minimize(
    x: &StratumInfo,
    start: OrbitPoint,
    stop_tol: f64,
    initial_step: f64,
) -> Result<MinimizeResult> {
    if start.s.abs() > 3.0 || start.u.abs() > 1.5 {
        return Err(Error::InvalidParameter(format!(
            "start ({}, {}) outside |s| <= 3, |u| <= 1.5",
            start.s, start.u
        )));
    }
    if !(stop_tol > 0.0) || !(initial_step > 0.0) {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let mut evaluations = 0usize;
    let mut objective = |s: f64, u: f64| -> Result<f64> {
        if evaluations >= EVALUATION_CAP {
            return Err(Error::IterationCap {
                cap: EVALUATION_CAP,
            });
        }
        evaluations += 1;
        let m = orbit_matrix(&OrbitPoint::new(s, u, start.base));
        Ok(entropy_value(x, &m, INNER_WIDTH)?.midpoint())
    };

    let (mut s, mut u) = (start.s, start.u);
    let mut best = objective(s, u)?;
    let mut step = initial_step;
    while step >= stop_tol {
        let mut moved = false;
        for (ds, du) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let (cs, cu) = (s + ds * step, u + du * step);
            let h = objective(cs, cu)?;
            if h < best {
                (s, u, best) = (cs, cu, h);
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(MinimizeResult {
        point: OrbitPoint::new(s, u, start.base),
        entropy: best,
        evaluations,
        final_step: step,
    })
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
    fn orbit_matrix_cases() {
        let e = equilateral_matrix();
        assert_eq!(orbit_matrix(&OrbitPoint::new(0.0, 0.0, e)), e);
        let sh = orbit_matrix(&OrbitPoint::new(1.0, 0.0, UnimodularMap::identity()));
        assert_eq!(sh, UnimodularMap::shear(1.0));
        let m = orbit_matrix(&OrbitPoint::new(0.2, 0.05, e));
        assert!((m.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_angle_chart_reproduces_equilateral() {
        let (rho, theta) = length_angle(&equilateral_matrix());
        assert!((theta - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        let m = length_angle_matrix(rho, theta);
        for (a, b) in m.entries().iter().zip(equilateral_matrix().entries()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-0.5, 0.5, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -0.5);
        assert_eq!(g[20], 0.5);
        assert_eq!(g[10], 0.0);
        assert_eq!(linspace(0.3, 1.0, 1), vec![0.3]);
    }

    #[test]
    fn single_cell_scan_matches_solver() {
        let x = l_shape();
        let e = equilateral_matrix();
        let sc = scan(&x, &e, &[0.0], &[0.0], 1e-10).unwrap();
        let enc = entropy(&x, &e, 1e-10).unwrap();
        assert_eq!(sc.value(0, 0), enc.midpoint());
        assert_eq!(sc.to_csv().lines().count(), 2);
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let x = l_shape();
        let e = equilateral_matrix();
        assert!(scan(&x, &e, &[], &[0.0], 1e-10).is_err());
        assert!(scan(&x, &e, &[0.1, 0.0], &[0.0], 1e-10).is_err());
    }

    #[test]
    fn minimize_at_minimum_stays_put() {
        let x = l_shape();
        let r = minimize(
            &x,
            OrbitPoint::new(0.0, 0.0, equilateral_matrix()),
            1e-6,
            0.05,
        )
        .unwrap();
        assert_eq!((r.point.s, r.point.u), (0.0, 0.0));
    }

    #[test]
    fn minimize_rejects_far_start() {
        let x = l_shape();
        let start = OrbitPoint::new(3.5, 0.0, equilateral_matrix());
        assert!(matches!(
            minimize(&x, start, 1e-6, 0.1),
            Err(Error::InvalidParameter(_))
        ));
    }
}
