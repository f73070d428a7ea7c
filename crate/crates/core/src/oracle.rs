//! Geometric cross-checks that never touch the lattice-sum formulas.
//!
//! Rays are traced on the unit-square tiling in integer arithmetic: a
//! segment of primitive direction `(p, q)` crosses vertical and horizontal
//! grid lines in an order fixed by comparing `i·|q|` with `j·|p|`, and each
//! crossing moves to a neighbouring square through `h`, `v` or their
//! inverses. When a ray reaches a vertex before its end it continues with
//! angle exactly `π` on its clockwise side.
//!
//! Quadrants around a vertex are numbered counterclockwise, `Q1 = 0` being
//! the cell whose lower-left corner is the vertex. A ray always has its
//! current cell on its left.

use crate::error::{Error, Result};
use crate::lattice::{f_truncated, lattice_points, smallest_singular_value, UnimodularMap};
use crate::surface::{check_hypothesis, Corner, SquareTiledSurface, StratumInfo};

/// Largest accepted bucket width in [`count_paths`].
pub const MAX_BUCKET: f64 = 0.05;

/// Vertex classes of all `4N` corners, computed by merging corners that
/// coincide across glued edges.
#[derive(Clone, Debug)]
pub struct CornerClasses {
    /// `class[4·square + corner_index]`, classes numbered by their smallest
    /// lower-left square.
    class: Vec<usize>,
    n_classes: usize,
}

fn corner_index(c: Corner) -> usize {
    match c {
        Corner::LowerLeft => 0,
        Corner::LowerRight => 1,
        Corner::UpperLeft => 2,
        Corner::UpperRight => 3,
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

impl CornerClasses {
    pub fn new(x: &SquareTiledSurface) -> Self {
        let n = x.n_squares();
        let (h, v) = (x.h(), x.v());
        let id = |s: usize, c: Corner| 4 * s + corner_index(c);
        let mut parent: Vec<usize> = (0..4 * n).collect();
        for s in 0..n {
            union(
                &mut parent,
                id(s, Corner::LowerRight),
                id(h.apply(s), Corner::LowerLeft),
            );
            union(
                &mut parent,
                id(s, Corner::UpperRight),
                id(h.apply(s), Corner::UpperLeft),
            );
            union(
                &mut parent,
                id(s, Corner::UpperLeft),
                id(v.apply(s), Corner::LowerLeft),
            );
            union(
                &mut parent,
                id(s, Corner::UpperRight),
                id(v.apply(s), Corner::LowerRight),
            );
        }
        let mut label = vec![usize::MAX; 4 * n];
        let mut n_classes = 0;
        for s in 0..n {
            let r = find(&mut parent, id(s, Corner::LowerLeft));
            if label[r] == usize::MAX {
                label[r] = n_classes;
                n_classes += 1;
            }
        }
        let class = (0..4 * n)
            .map(|i| {
                let r = find(&mut parent, i);
                label[r]
            })
            .collect();
        Self { class, n_classes }
    }

    pub fn class(&self, square: usize, corner: Corner) -> usize {
        self.class[4 * square + corner_index(corner)]
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Squares with the given corner at vertex class `vertex`, ascending.
    pub fn squares_at(&self, vertex: usize, corner: Corner) -> Vec<usize> {
        (0..self.class.len() / 4)
            .filter(|&s| self.class(s, corner) == vertex)
            .collect()
    }
}

/// Quadrant (0..4, counterclockwise from `Q1`) occupied by a square whose
/// given corner is the vertex.
pub fn quadrant_of_corner(c: Corner) -> u8 {
    match c {
        Corner::LowerLeft => 0,
        Corner::LowerRight => 1,
        Corner::UpperRight => 2,
        Corner::UpperLeft => 3,
    }
}

/// The corner at the vertex of a square occupying quadrant `q`.
pub fn corner_of_quadrant(q: u8) -> Corner {
    match q % 4 {
        0 => Corner::LowerLeft,
        1 => Corner::LowerRight,
        2 => Corner::UpperRight,
        _ => Corner::UpperLeft,
    }
}

/// First cell entered by a ray of direction `(p, q)` leaving a vertex.
fn start_cell(p: i64, q: i64) -> (i64, i64) {
    let x0 = if p < 0 || (p == 0 && q > 0) { -1 } else { 0 };
    let y0 = if q < 0 || (q == 0 && p < 0) { -1 } else { 0 };
    (x0, y0)
}

fn quadrant_of_cell(cell: (i64, i64)) -> u8 {
    match cell {
        (0, 0) => 0,
        (-1, 0) => 1,
        (-1, -1) => 2,
        (0, -1) => 3,
        _ => unreachable!("cell {cell:?} is not adjacent to the origin"),
    }
}

/// Quadrant of the first cell a ray of direction `(p, q)` enters.
pub fn direction_quadrant(p: i64, q: i64) -> u8 {
    quadrant_of_cell(start_cell(p, q))
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    (a, b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// End state of a traced ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceResult {
    pub end_vertex: usize,
    pub end_square: usize,
    pub end_corner: Corner,
    /// Displacement accumulated cell by cell; equals the requested vector.
    pub displacement: (i64, i64),
    /// Euclidean length in square units.
    pub length: f64,
    /// Vertices passed through before the end.
    pub vertices_crossed: usize,
}

/// Follows the straight segment of displacement `(a, b)` from a corner.
///
/// The start square must lie on the left of the outgoing ray, i.e. occupy
/// the quadrant that the direction enters first; otherwise the corner
/// does not bound this direction's sector and `CornerMismatch` is returned.
pub fn trace_ray(
    x: &SquareTiledSurface,
    classes: &CornerClasses,
    start: (usize, Corner),
    direction: (i64, i64),
) -> Result<TraceResult> {
    let (a, b) = direction;
    if (a, b) == (0, 0) {
        return Err(Error::DegenerateDirection);
    }
    if start.0 >= x.n_squares() {
        return Err(Error::InvalidParameter(format!(
            "square {} out of range",
            start.0 + 1
        )));
    }
    let g = gcd(a, b);
    let (p, q) = (a / g, b / g);
    let q_out = direction_quadrant(p, q);
    if quadrant_of_corner(start.1) != q_out {
        return Err(Error::CornerMismatch { a, b });
    }
    let (h, v) = (x.h(), x.v());
    let (h_inv, v_inv) = (h.inverse(), v.inverse());
    let (x0, y0) = start_cell(p, q);
    let (ap, aq) = (p.abs(), q.abs());

    let mut square = start.0;
    // Absolute lower-left of the current cell, origin at the start vertex.
    let (mut cx, mut cy) = (x0, y0);
    let mut vertices_crossed = 0;

    for seg in 0..g {
        // Crossings of x = const (i) and y = const (j) strictly inside the segment.
        let (mut i, mut j) = (1i64, 1i64);
        while i < ap || j < aq {
            let vertical_next = j >= aq || (i < ap && i * aq < j * ap);
            if vertical_next {
                if p > 0 {
                    square = h.apply(square);
                    cx += 1;
                } else {
                    square = h_inv.apply(square);
                    cx -= 1;
                }
                i += 1;
            } else {
                if q > 0 {
                    square = v.apply(square);
                    cy += 1;
                } else {
                    square = v_inv.apply(square);
                    cy -= 1;
                }
                j += 1;
            }
        }
        if seg + 1 == g {
            break;
        }
        // Intermediate vertex: turn clockwise through π from the incoming cell.
        vertices_crossed += 1;
        let vx = (seg + 1) * p;
        let vy = (seg + 1) * q;
        let q_in = quadrant_of_cell((cx - vx, cy - vy));
        let steps = (q_in + 4 - q_out) % 4;
        let mut qc = q_in;
        for _ in 0..steps {
            match qc {
                0 => {
                    square = v_inv.apply(square);
                    cy -= 1;
                }
                3 => {
                    square = h_inv.apply(square);
                    cx -= 1;
                }
                2 => {
                    square = v.apply(square);
                    cy += 1;
                }
                _ => {
                    square = h.apply(square);
                    cx += 1;
                }
            }
            qc = (qc + 3) % 4;
        }
        debug_assert_eq!((cx - vx, cy - vy), (x0, y0));
    }

    let end_corner = Corner::from_offset(a - cx, b - cy)
        .ok_or_else(|| Error::InvalidParameter(format!("ray for ({a},{b}) lost its cell")))?;
    let (ox, oy) = end_corner.offset();
    Ok(TraceResult {
        end_vertex: classes.class(square, end_corner),
        end_square: square,
        end_corner,
        displacement: (cx + ox, cy + oy),
        length: ((a * a + b * b) as f64).sqrt(),
        vertices_crossed,
    })
}

/// A singular connection found by tracing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectionRecord {
    pub start_vertex: usize,
    pub start_square: usize,
    pub holonomy: (i64, i64),
    /// `‖A(a,b)‖/σ`.
    pub length: f64,
    pub end_vertex: usize,
    /// Position of the start square among the `k+1` squares with the same
    /// corner at the start vertex.
    pub sector: usize,
    /// Whether the traced displacement equals the holonomy.
    pub closed: bool,
}

/// Traces every `(a, b)` with `0 < max(|a|,|b|) ≤ max_coeff` from every corner
/// of every square, keeping the corners that bound the direction's sector.
pub fn enumerate_singular_connections(
    x: &SquareTiledSurface,
    m: &UnimodularMap,
    max_coeff: usize,
) -> Result<Vec<ConnectionRecord>> {
    let info = check_hypothesis(x)?;
    let classes = CornerClasses::new(x);
    let sectors: Vec<Vec<Vec<usize>>> = (0..classes.n_classes())
        .map(|vtx| {
            (0..4)
                .map(|q| classes.squares_at(vtx, corner_of_quadrant(q)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for (a, b) in lattice_points(max_coeff) {
        let g = gcd(a, b);
        let quadrant = direction_quadrant(a / g, b / g);
        let corner = corner_of_quadrant(quadrant);
        let length = m.norm_of(a, b) / info.sigma;
        for square in 0..x.n_squares() {
            for c in Corner::ALL {
                match trace_ray(x, &classes, (square, c), (a, b)) {
                    Ok(tr) => {
                        debug_assert_eq!(c, corner);
                        let start_vertex = classes.class(square, c);
                        let sector = sectors[start_vertex][quadrant as usize]
                            .iter()
                            .position(|&s| s == square)
                            .expect("start square is in its own sector list");
                        out.push(ConnectionRecord {
                            start_vertex,
                            start_square: square,
                            holonomy: (a, b),
                            length,
                            end_vertex: tr.end_vertex,
                            sector,
                            closed: tr.displacement == (a, b),
                        });
                    }
                    Err(Error::CornerMismatch { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(out)
}

/// Result of the multiplicity check.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityReport {
    pub expected: usize,
    /// `(vertex, holonomy, count)` for every pair whose count differs.
    pub violations: Vec<(usize, (i64, i64), usize)>,
    pub pairs_checked: usize,
}

impl MultiplicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every `(vertex, holonomy)` pair in range carries exactly
/// `expected` connections with distinct sectors.
pub fn check_multiplicities(
    records: &[ConnectionRecord],
    n_vertices: usize,
    max_coeff: usize,
    expected: usize,
) -> MultiplicityReport {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<(usize, (i64, i64)), Vec<usize>> = BTreeMap::new();
    for r in records {
        counts
            .entry((r.start_vertex, r.holonomy))
            .or_default()
            .push(r.sector);
    }
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    for vtx in 0..n_vertices {
        for hol in lattice_points(max_coeff) {
            pairs_checked += 1;
            let mut sectors = counts.get(&(vtx, hol)).cloned().unwrap_or_default();
            let n = sectors.len();
            sectors.sort_unstable();
            sectors.dedup();
            if n != expected || sectors.len() != n {
                violations.push((vtx, hol, n));
            }
        }
    }
    MultiplicityReport {
        expected,
        violations,
        pairs_checked,
    }
}

/// `Σ exp(−t·length)` over records, in record order.
pub fn connection_sum(records: &[ConnectionRecord], t: f64) -> f64 {
    records
        .iter()
        .map(|r| (-t * r.length).exp())
        .collect::<crate::summation::NeumaierSum>()
        .value()
}

/// Counts of saddle-connection paths by total length.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCountTable {
    pub delta: f64,
    pub t_max: f64,
    /// `counts[j]`: paths whose bucketed length is `j·δ`.
    pub counts: Vec<f64>,
    /// First-generation counts (single singular connections).
    pub seed: Vec<f64>,
}

impl PathCountTable {
    pub fn bucket_length(&self, j: usize) -> f64 {
        j as f64 * self.delta
    }

    /// Running totals of [`Self::counts`].
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.counts
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn seed_total(&self) -> f64 {
        self.seed.iter().sum()
    }

    /// Least-squares slope of `ln(cumulative count)` against length over
    /// buckets with lengths in `[lo, hi]`.
    pub fn slope_fit(&self, lo: f64, hi: f64) -> Option<f64> {
        let cum = self.cumulative();
        let pts: Vec<(f64, f64)> = cum
            .iter()
            .enumerate()
            .map(|(j, &c)| (self.bucket_length(j), c))
            .filter(|&(l, c)| l >= lo && l <= hi && c > 0.0)
            .map(|(l, c)| (l, c.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }

    /// Slope over `[T_max/2, T_max]`.
    pub fn growth_rate(&self) -> Option<f64> {
        self.slope_fit(0.5 * self.t_max, self.t_max)
    }
}

/// Path counts with the continuation weight `k` of the stratum.
pub fn count_paths(
    x: &StratumInfo,
    m: &UnimodularMap,
    t_max: f64,
    delta: f64,
) -> Result<PathCountTable> {
    count_paths_weighted(x, m, t_max, delta, x.k as f64)
}

/// Path counts where each junction contributes `weight` continuations.
///
/// With histogram `H` of lattice lengths, the counts satisfy
/// `T[j] = n(k+1)·H[j] + weight·Σᵢ H[i]·T[j−i]`.
pub fn count_paths_weighted(
    x: &StratumInfo,
    m: &UnimodularMap,
    t_max: f64,
    delta: f64,
    weight: f64,
) -> Result<PathCountTable> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "T_max must be positive, got {t_max}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bucket width must be positive, got {delta}"
        )));
    }
    if delta > MAX_BUCKET {
        return Err(Error::BucketTooCoarse(delta));
    }
    let n_buckets = (t_max / delta).round() as usize + 1;
    let cutoff = (x.sigma * t_max / smallest_singular_value(m)).ceil() as usize;
    let mut hist = vec![0.0f64; n_buckets];
    for (a, b) in lattice_points(cutoff.max(1)) {
        let l = m.norm_of(a, b) / x.sigma;
        if l <= t_max {
            let j = ((l / delta).round() as usize).clamp(1, n_buckets - 1);
            hist[j] += 1.0;
        }
    }
    let nonzero: Vec<(usize, f64)> = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(i, &c)| (i, c))
        .collect();
    let w0 = x.n_squares() as f64;
    let seed: Vec<f64> = hist.iter().map(|h| w0 * h).collect();
    let mut counts = seed.clone();
    if weight != 0.0 {
        for j in 0..n_buckets {
            let mut acc = 0.0;
            for &(i, c) in &nonzero {
                if i > j {
                    break;
                }
                acc += c * counts[j - i];
            }
            counts[j] += weight * acc;
        }
    }
    Ok(PathCountTable {
        delta,
        t_max,
        counts,
        seed,
    })
}

/// Outcome of comparing the geometric series with its closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesCheck {
    pub f: f64,
    pub partial: f64,
    pub closed_form: f64,
    pub residual: f64,
    /// `n(k+1)·f·(kf)^{m_max}/(1 − kf)`.
    pub bound: f64,
}

/// `|Σ_{m=1}^{m_max} n(k+1)·f·(kf)^{m−1} − n(k+1)·f/(1 − kf)|` with
/// `f = f_t^{(N)}(A)`.
pub fn series_identity_check(
    x: &StratumInfo,
    m: &UnimodularMap,
    t: f64,
    m_max: usize,
    cutoff: usize,
) -> Result<SeriesCheck> {
    let f = f_truncated(m, x.sigma, t, cutoff)?.value;
    let k = x.k as f64;
    let kf = k * f;
    if kf >= 1.0 {
        return Err(Error::SeriesDiverges { kf });
    }
    let w = x.n_squares() as f64;
    let mut partial = crate::summation::NeumaierSum::new();
    let mut term = w * f;
    for _ in 0..m_max {
        partial.add(term);
        term *= kf;
    }
    let partial = partial.value();
    let closed_form = w * f / (1.0 - kf);
    Ok(SeriesCheck {
        f,
        partial,
        closed_form,
        residual: (partial - closed_form).abs(),
        bound: w * f * kf.powi(m_max as i32) / (1.0 - kf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::equilateral_matrix;
    use crate::surface::{builtin_surface, Family};

    #[test]
    fn corner_classes_match_commutator_cycles() {
        for (fam, k) in [
            (Family::L, 0),
            (Family::EW, 0),
            (Family::O, 4),
            (Family::G, 3),
        ] {
            let x = builtin_surface(fam, k).unwrap();
            let cc = CornerClasses::new(&x);
            assert_eq!(cc.n_classes(), x.vertex_cycles().len());
            for s in 0..x.n_squares() {
                for c in Corner::ALL {
                    assert_eq!(cc.class(s, c), x.corner_class(s, c), "{fam} {s} {c:?}");
                }
            }
        }
    }

    #[test]
    fn start_cells() {
        assert_eq!(direction_quadrant(1, 0), 0);
        assert_eq!(direction_quadrant(0, 1), 1);
        assert_eq!(direction_quadrant(-1, 0), 2);
        assert_eq!(direction_quadrant(0, -1), 3);
        assert_eq!(direction_quadrant(2, 3), 0);
        assert_eq!(direction_quadrant(-2, 3), 1);
        assert_eq!(direction_quadrant(-2, -3), 2);
        assert_eq!(direction_quadrant(2, -3), 3);
    }

    #[test]
    fn l_shape_horizontal_unit() {
        let x = builtin_surface(Family::L, 0).unwrap();
        let cc = CornerClasses::new(&x);
        let r = trace_ray(&x, &cc, (0, Corner::LowerLeft), (1, 0)).unwrap();
        assert_eq!(r.end_vertex, 0);
        assert_eq!(r.length, 1.0);
        assert_eq!(r.displacement, (1, 0));
    }

    #[test]
    fn l_shape_diagonals() {
        let x = builtin_surface(Family::L, 0).unwrap();
        let cc = CornerClasses::new(&x);
        for s in 0..3 {
            let r = trace_ray(&x, &cc, (s, Corner::LowerLeft), (1, 1)).unwrap();
            assert_eq!(r.end_vertex, 0);
            assert!((r.length - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn wollmilchsau_knight_move() {
        let x = builtin_surface(Family::EW, 0).unwrap();
        let cc = CornerClasses::new(&x);
        let r = trace_ray(&x, &cc, (0, Corner::LowerLeft), (2, 1)).unwrap();
        assert_eq!(r.displacement, (2, 1));
        assert!((r.length - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_corner_and_zero_direction() {
        let x = builtin_surface(Family::L, 0).unwrap();
        let cc = CornerClasses::new(&x);
        assert!(matches!(
            trace_ray(&x, &cc, (0, Corner::UpperRight), (1, 1)),
            Err(Error::CornerMismatch { .. })
        ));
        assert!(matches!(
            trace_ray(&x, &cc, (0, Corner::LowerLeft), (0, 0)),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn non_primitive_rays_pass_vertices() {
        let x = builtin_surface(Family::EW, 0).unwrap();
        let cc = CornerClasses::new(&x);
        let r = trace_ray(&x, &cc, (0, Corner::LowerLeft), (3, 3)).unwrap();
        assert_eq!(r.vertices_crossed, 2);
        assert_eq!(r.displacement, (3, 3));
        let r = trace_ray(&x, &cc, (0, Corner::LowerRight), (0, 4)).unwrap();
        assert_eq!(r.vertices_crossed, 3);
    }

    #[test]
    fn l_shape_multiplicities() {
        let x = builtin_surface(Family::L, 0).unwrap();
        let recs = enumerate_singular_connections(&x, &equilateral_matrix(), 3).unwrap();
        let rep = check_multiplicities(&recs, 1, 3, 3);
        assert!(rep.passed(), "{:?}", rep.violations);
        assert!(recs.iter().all(|r| r.closed));
        let bad = check_multiplicities(&recs, 1, 3, 4);
        assert!(!bad.passed());
    }

    #[test]
    fn series_remainder_cases() {
        let x = check_hypothesis(&builtin_surface(Family::L, 0).unwrap()).unwrap();
        let e = equilateral_matrix();
        // At t = 5, kf ≈ 0.628 and the remainder after 50 terms is ≈ 1.97e-10.
        let c = series_identity_check(&x, &e, 5.0, 50, 100).unwrap();
        assert!((c.residual - c.bound).abs() <= 1e-14, "{c:?}");
        let c = series_identity_check(&x, &e, 5.0, 60, 100).unwrap();
        assert!(c.residual < 1e-10, "{c:?}");
        let one = series_identity_check(&x, &e, 5.0, 1, 100).unwrap();
        let kf = x.k as f64 * one.f;
        let expect = x.n_squares() as f64 * one.f * kf / (1.0 - kf);
        assert!((one.residual - expect).abs() <= 1e-14 * expect);
        assert!(matches!(
            series_identity_check(&x, &e, 4.0, 50, 100),
            Err(Error::SeriesDiverges { .. })
        ));
    }

    #[test]
    fn coarse_buckets_rejected() {
        let x = check_hypothesis(&builtin_surface(Family::L, 0).unwrap()).unwrap();
        assert!(matches!(
            count_paths(&x, &equilateral_matrix(), 4.0, 0.1),
            Err(Error::BucketTooCoarse(_))
        ));
    }
}
