//! Square-tiled surfaces from permutation pairs.
//!
//! A surface on `N` unit squares is encoded by two permutations of the
//! square labels: `h` sends a square to its right neighbour and `v` to the
//! square above it. Labels are 1-based in text and 0-based in memory.
//!
//! Vertex classes are the cycles of the commutator `h∘v∘h⁻¹∘v⁻¹` (rightmost
//! applied first). The commutator walks clockwise around the lower-left
//! corner of a square, so a cycle of length `m` collects the `m` squares
//! whose lower-left corner sits at one vertex of cone angle `2πm`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A bijection of `{0, .., degree-1}`; composition applies the right operand first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Self {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from 0-based images, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::EmptyPermutation);
        }
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n {
                return Err(Error::ElementOutOfRange {
                    element: i + 1,
                    degree: n,
                    column: 0,
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::RepeatedElement {
                    element: i + 1,
                    column: 0,
                });
            }
        }
        Ok(Self { images })
    }

    /// Product of disjoint cycles given with 1-based labels.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self> {
        if degree == 0 {
            return Err(Error::EmptyPermutation);
        }
        let mut images: Vec<usize> = (0..degree).collect();
        let mut seen = vec![false; degree];
        for cycle in cycles {
            for (pos, &label) in cycle.iter().enumerate() {
                if label == 0 || label > degree {
                    return Err(Error::ElementOutOfRange {
                        element: label,
                        degree,
                        column: 0,
                    });
                }
                if std::mem::replace(&mut seen[label - 1], true) {
                    return Err(Error::RepeatedElement {
                        element: label,
                        column: 0,
                    });
                }
                let next = cycle[(pos + 1) % cycle.len()];
                images[label - 1] = next - 1;
            }
        }
        Ok(Self { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a 0-based label.
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.degree(), rhs.degree(), "degree mismatch in compose");
        Self {
            images: rhs.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    /// `π ∘ self ∘ π⁻¹`, i.e. the same permutation after relabelling by `π`.
    pub fn conjugate_by(&self, pi: &Self) -> Self {
        pi.compose(self).compose(&pi.inverse())
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// All cycles (including fixed points), each starting at its smallest
    /// element, ordered by that element. Labels are 0-based.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation with 1-based labels; fixed points omitted, identity is `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for cycle in self.cycles().into_iter().filter(|c| c.len() > 1) {
            any = true;
            f.write_str("(")?;
            for (pos, i) in cycle.iter().enumerate() {
                if pos > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", i + 1)?;
            }
            f.write_str(")")?;
        }
        if !any {
            f.write_str("()")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{}]{}", self.degree(), self)
    }
}

/// Parses cycle notation such as `"(1,2)(3,4)"` over `{1..degree}`.
///
/// Elements may be separated by commas or whitespace; omitted elements are
/// fixed points and the empty string (or `()`) is the identity. Columns in
/// errors are 1-based character offsets.
pub fn parse_permutation(text: &str, degree: usize) -> Result<Permutation> {
    if degree == 0 {
        return Err(Error::EmptyPermutation);
    }
    let mut images: Vec<usize> = (0..degree).collect();
    let mut seen = vec![false; degree];
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;

    let malformed = |column: usize, message: &str| Error::Malformed {
        column,
        message: message.to_owned(),
    };

    while pos < chars.len() {
        let ch = chars[pos];
        if ch.is_whitespace() {
            pos += 1;
            continue;
        }
        if ch != '(' {
            return Err(malformed(
                pos + 1,
                &format!("expected '(' but found {ch:?}"),
            ));
        }
        let open = pos;
        pos += 1;
        let mut cycle: Vec<usize> = Vec::new();
        let mut expect_element = true;
        loop {
            let Some(&c) = chars.get(pos) else {
                return Err(malformed(open + 1, "unclosed '('"));
            };
            match c {
                ')' => {
                    if !cycle.is_empty() && expect_element {
                        return Err(malformed(pos + 1, "trailing separator"));
                    }
                    pos += 1;
                    break;
                }
                ',' => {
                    if expect_element {
                        return Err(malformed(pos + 1, "unexpected ','"));
                    }
                    expect_element = true;
                    pos += 1;
                }
                c if c.is_whitespace() => {
                    pos += 1;
                }
                c if c.is_ascii_digit() => {
                    let start = pos;
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        pos += 1;
                    }
                    let digits: String = chars[start..pos].iter().collect();
                    let element: usize = digits
                        .parse()
                        .map_err(|_| malformed(start + 1, "number too large"))?;
                    if element == 0 || element > degree {
                        return Err(Error::ElementOutOfRange {
                            element,
                            degree,
                            column: start + 1,
                        });
                    }
                    if std::mem::replace(&mut seen[element - 1], true) {
                        return Err(Error::RepeatedElement {
                            element,
                            column: start + 1,
                        });
                    }
                    cycle.push(element - 1);
                    expect_element = false;
                    // Whitespace alone may also separate elements.
                    while pos < chars.len() && chars[pos].is_whitespace() {
                        pos += 1;
                    }
                    if chars.get(pos).is_some_and(|c| c.is_ascii_digit()) {
                        expect_element = true;
                    }
                }
                other => {
                    return Err(malformed(
                        pos + 1,
                        &format!("unexpected character {other:?}"),
                    ));
                }
            }
        }
        for (i, &label) in cycle.iter().enumerate() {
            images[label] = cycle[(i + 1) % cycle.len()];
        }
    }
    Ok(Permutation { images })
}

/// One of the four corners of a unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corner {
    LowerLeft,
    LowerRight,
    UpperLeft,
    UpperRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::LowerLeft,
        Corner::LowerRight,
        Corner::UpperLeft,
        Corner::UpperRight,
    ];

    /// Corner at offset `(dx, dy) ∈ {0,1}²` from the lower-left of the square.
    pub fn from_offset(dx: i64, dy: i64) -> Option<Corner> {
        match (dx, dy) {
            (0, 0) => Some(Corner::LowerLeft),
            (1, 0) => Some(Corner::LowerRight),
            (0, 1) => Some(Corner::UpperLeft),
            (1, 1) => Some(Corner::UpperRight),
            _ => None,
        }
    }

    pub fn offset(self) -> (i64, i64) {
        match self {
            Corner::LowerLeft => (0, 0),
            Corner::LowerRight => (1, 0),
            Corner::UpperLeft => (0, 1),
            Corner::UpperRight => (1, 1),
        }
    }
}

/// A connected square-tiled surface with its vertex data.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareTiledSurface {
    h: Permutation,
    v: Permutation,
    vertex_cycles: Vec<Vec<usize>>,
    /// Vertex class of the lower-left corner of each square.
    lower_left_class: Vec<usize>,
    cone_multipliers: Vec<usize>,
    genus: usize,
}

impl SquareTiledSurface {
    pub fn n_squares(&self) -> usize {
        self.h.degree()
    }

    pub fn h(&self) -> &Permutation {
        &self.h
    }

    pub fn v(&self) -> &Permutation {
        &self.v
    }

    /// Commutator cycles, 0-based square labels; one per vertex class.
    pub fn vertex_cycles(&self) -> &[Vec<usize>] {
        &self.vertex_cycles
    }

    /// Cone angle of vertex class `i` is `2π · cone_multipliers()[i]`.
    pub fn cone_multipliers(&self) -> &[usize] {
        &self.cone_multipliers
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Side length of a square is `1/σ` once the surface has unit area.
    pub fn area_scale(&self) -> f64 {
        (self.n_squares() as f64).sqrt()
    }

    /// Vertex class at the given corner of a 0-based square.
    pub fn corner_class(&self, square: usize, corner: Corner) -> usize {
        let s = match corner {
            Corner::LowerLeft => square,
            Corner::LowerRight => self.h.apply(square),
            Corner::UpperLeft => self.v.apply(square),
            Corner::UpperRight => self.h.apply(self.v.apply(square)),
        };
        self.lower_left_class[s]
    }

    /// Relabels squares by `pi` (conjugating both gluings).
    pub fn relabel(&self, pi: &Permutation) -> Result<Self> {
        build_surface(self.h.conjugate_by(pi), self.v.conjugate_by(pi))
    }

    /// `squares: N` / `h: ...` / `v: ...` text form.
    pub fn to_file_string(&self) -> String {
        format!(
            "squares: {}\nh: {}\nv: {}\n",
            self.n_squares(),
            self.h,
            self.v
        )
    }
}

/// Builds the surface glued by `h` (horizontal) and `v` (vertical).
pub fn build_surface(h: Permutation, v: Permutation) -> Result<SquareTiledSurface> {
    if h.degree() != v.degree() {
        return Err(Error::DegreeMismatch {
            h: h.degree(),
            v: v.degree(),
        });
    }
    let n = h.degree();
    if n == 0 {
        return Err(Error::EmptyPermutation);
    }

    let orbits = count_orbits(&h, &v);
    if orbits != 1 {
        return Err(Error::Disconnected { orbits });
    }

    let commutator = h.compose(&v).compose(&h.inverse()).compose(&v.inverse());
    let vertex_cycles = commutator.cycles();
    let mut lower_left_class = vec![0; n];
    for (class, cycle) in vertex_cycles.iter().enumerate() {
        for &s in cycle {
            lower_left_class[s] = class;
        }
    }
    let cone_multipliers: Vec<usize> = vertex_cycles.iter().map(Vec::len).collect();
    let excess: usize = cone_multipliers.iter().map(|m| m - 1).sum();
    debug_assert_eq!(excess % 2, 0, "commutator is an even permutation");
    let genus = excess / 2 + 1;

    Ok(SquareTiledSurface {
        h,
        v,
        vertex_cycles,
        lower_left_class,
        cone_multipliers,
        genus,
    })
}

fn count_orbits(h: &Permutation, v: &Permutation) -> usize {
    let n = h.degree();
    let mut seen = vec![false; n];
    let mut orbits = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        orbits += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in [h.apply(i), v.apply(i)] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    orbits
}

/// Stratum data of a surface whose singularities share one cone angle `2π(k+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StratumInfo {
    /// Common cone multiplier minus one.
    pub k: usize,
    /// Number of singularities.
    pub n: usize,
    pub genus: usize,
    /// `√(n(k+1))`.
    pub sigma: f64,
}

impl StratumInfo {
    /// `n(k+1)`, the number of squares.
    pub fn n_squares(&self) -> usize {
        self.n * (self.k + 1)
    }

    /// Right-hand side of `f_h(A) = 1/k`.
    pub fn target(&self) -> f64 {
        1.0 / self.k as f64
    }
}

/// Accepts surfaces whose vertices are all singular with a common cone angle.
pub fn check_hypothesis(surface: &SquareTiledSurface) -> Result<StratumInfo> {
    let m = surface.cone_multipliers();
    let first = m[0];
    if m.iter().any(|&x| x != first) {
        return Err(Error::MixedConeAngles {
            multipliers: m.to_vec(),
        });
    }
    if first == 1 {
        return Err(Error::NoSingularities);
    }
    let k = first - 1;
    let n = m.len();
    debug_assert_eq!(n * (k + 1), surface.n_squares());
    Ok(StratumInfo {
        k,
        n,
        genus: surface.genus(),
        sigma: surface.area_scale(),
    })
}

/// Named families of square-tiled surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `h=(1,..,2k)`, `v=(1,2)(3,4)..(2k-1,2k)`.
    O,
    /// Staircase on `2k-1` squares.
    St,
    /// Staircase on `2k` squares.
    G,
    /// Eierlegende Wollmilchsau.
    EW,
    /// Three-square L.
    L,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::O => "O",
            Family::St => "St",
            Family::G => "G",
            Family::EW => "EW",
            Family::L => "L",
        }
    }

    /// Whether the family is indexed by `k`.
    pub fn takes_k(self) -> bool {
        matches!(self, Family::O | Family::St | Family::G)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" | "o" => Ok(Family::O),
            "St" | "st" | "ST" => Ok(Family::St),
            "G" | "g" => Ok(Family::G),
            "EW" | "ew" | "Ew" => Ok(Family::EW),
            "L" | "l" => Ok(Family::L),
            _ => Err(Error::UnknownFamily(s.to_owned())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds a named surface; `k` is ignored by `EW` and `L`.
pub fn builtin_surface(family: Family, k: usize) -> Result<SquareTiledSurface> {
    if family.takes_k() && k < 2 {
        return Err(Error::FamilyParameter {
            family: family.name(),
            k,
            min: 2,
        });
    }
    let pairs = |range: std::ops::Range<usize>, step_start: usize| -> Vec<[usize; 2]> {
        range
            .step_by(2)
            .map(|i| [i + step_start, i + step_start + 1])
            .collect()
    };
    let (degree, h_cycles, v_cycles): (usize, Vec<Vec<usize>>, Vec<Vec<usize>>) = match family {
        Family::O => (
            2 * k,
            vec![(1..=2 * k).collect()],
            pairs(0..2 * k, 1).iter().map(|p| p.to_vec()).collect(),
        ),
        Family::St => (
            2 * k - 1,
            pairs(0..2 * k - 2, 1).iter().map(|p| p.to_vec()).collect(),
            pairs(0..2 * k - 2, 2).iter().map(|p| p.to_vec()).collect(),
        ),
        Family::G => (
            2 * k,
            pairs(0..2 * k, 1).iter().map(|p| p.to_vec()).collect(),
            pairs(0..2 * k - 2, 2).iter().map(|p| p.to_vec()).collect(),
        ),
        Family::EW => (
            8,
            vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]],
            vec![vec![1, 6], vec![2, 5], vec![3, 8], vec![4, 7]],
        ),
        Family::L => (3, vec![vec![1, 2]], vec![vec![1, 3]]),
    };
    let as_slices = |c: &[Vec<usize>]| -> Vec<Vec<usize>> { c.to_vec() };
    let hc = as_slices(&h_cycles);
    let vc = as_slices(&v_cycles);
    let h_refs: Vec<&[usize]> = hc.iter().map(Vec::as_slice).collect();
    let v_refs: Vec<&[usize]> = vc.iter().map(Vec::as_slice).collect();
    let h = Permutation::from_cycles(degree, &h_refs)?;
    let v = Permutation::from_cycles(degree, &v_refs)?;
    build_surface(h, v)
}

/// Parses the three-line surface description (`squares:`, `h:`, `v:`).
///
/// Blank lines and `#` comments are ignored; keys may appear in any order.
pub fn parse_surface_file(text: &str) -> Result<SquareTiledSurface> {
    let mut squares: Option<(usize, usize)> = None;
    let mut h_line: Option<(usize, String)> = None;
    let mut v_line: Option<(usize, String)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(Error::SurfaceFile {
                line: line_no,
                message: format!("expected `key: value`, got {line:?}"),
            });
        };
        let value = value.trim();
        match key.trim() {
            "squares" => {
                let n = value.parse::<usize>().map_err(|_| Error::SurfaceFile {
                    line: line_no,
                    message: format!("invalid square count {value:?}"),
                })?;
                squares = Some((line_no, n));
            }
            "h" => h_line = Some((line_no, value.to_owned())),
            "v" => v_line = Some((line_no, value.to_owned())),
            other => {
                return Err(Error::SurfaceFile {
                    line: line_no,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
    }

    let missing = |name: &str| Error::SurfaceFile {
        line: text.lines().count() + 1,
        message: format!("missing `{name}:` line"),
    };
    let (_, n) = squares.ok_or_else(|| missing("squares"))?;
    let (h_no, h_text) = h_line.ok_or_else(|| missing("h"))?;
    let (v_no, v_text) = v_line.ok_or_else(|| missing("v"))?;
    let at_line = |line: usize| {
        move |e: Error| Error::SurfaceFile {
            line,
            message: e.to_string(),
        }
    };
    let h = parse_permutation(&h_text, n).map_err(at_line(h_no))?;
    let v = parse_permutation(&v_text, n).map_err(at_line(v_no))?;
    build_surface(h, v)
}
