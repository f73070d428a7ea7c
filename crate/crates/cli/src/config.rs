//! Run configuration: flat `key=value` files overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use origami_entropy::{
    build_surface, builtin_surface, equilateral_matrix, parse_permutation, parse_surface_file,
    Error as CoreError, Family, SquareTiledSurface, UnimodularMap,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where the surface comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceSource {
    Builtin {
        family: String,
        k: usize,
    },
    File {
        path: PathBuf,
    },
    Inline {
        squares: usize,
        h: String,
        v: String,
    },
}

impl SurfaceSource {
    pub fn load(&self) -> Result<SquareTiledSurface, CliError> {
        match self {
            SurfaceSource::Builtin { family, k } => {
                let fam: Family = family.parse()?;
                Ok(builtin_surface(fam, *k)?)
            }
            SurfaceSource::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read {}: {e}", path.display()))
                })?;
                Ok(parse_surface_file(&text)?)
            }
            SurfaceSource::Inline { squares, h, v } => {
                let h = parse_permutation(h, *squares).map_err(|e| field_error("h", e))?;
                let v = parse_permutation(v, *squares).map_err(|e| field_error("v", e))?;
                Ok(build_surface(h, v)?)
            }
        }
    }
}

fn field_error(field: &str, e: CoreError) -> CliError {
    CliError::Validation(format!("{field}: {e}"))
}

/// Base point of the orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseSpec {
    Equilateral,
    Identity,
    Matrix([f64; 4]),
}

impl BaseSpec {
    pub fn matrix(&self) -> Result<UnimodularMap, CliError> {
        match *self {
            BaseSpec::Equilateral => Ok(equilateral_matrix()),
            BaseSpec::Identity => Ok(UnimodularMap::identity()),
            BaseSpec::Matrix([a, b, c, d]) => Ok(UnimodularMap::new(a, b, c, d)?),
        }
    }
}

impl FromStr for BaseSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "equilateral" => Ok(BaseSpec::Equilateral),
            "identity" => Ok(BaseSpec::Identity),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                if parts.len() != 4 {
                    return Err(CliError::Validation(format!(
                        "base must be equilateral, identity or a,b,c,d; got {other:?}"
                    )));
                }
                let mut m = [0.0; 4];
                for (slot, p) in m.iter_mut().zip(&parts) {
                    *slot = parse_finite("base", p)?;
                }
                Ok(BaseSpec::Matrix(m))
            }
        }
    }
}

/// Evenly spaced grid `lo:hi:n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        origami_entropy::orbit::linspace(self.lo, self.hi, self.n)
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(CliError::Validation(format!(
                "grid must be lo:hi:n, got {s:?}"
            )));
        };
        let grid = GridSpec {
            lo: parse_finite("grid lo", lo)?,
            hi: parse_finite("grid hi", hi)?,
            n: parse_value("grid n", n)?,
        };
        if grid.n == 0 {
            return Err(CliError::Validation("grid needs at least one point".into()));
        }
        if grid.n > 1 && grid.lo > grid.hi {
            return Err(CliError::Validation(format!(
                "grid bounds reversed in {s:?}"
            )));
        }
        Ok(grid)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Entropy,
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Orbit,
    LengthAngle,
}

/// Everything a command needs. Serialized into JSON reports so that a run
/// can be replayed from its own output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub surface: SurfaceSource,
    pub base: BaseSpec,
    pub s: f64,
    pub u: f64,
    pub s_range: Option<GridSpec>,
    pub u_range: Option<GridSpec>,
    /// Fixed truncation `N`; when absent the cutoff is raised until `width` is met.
    pub cutoff: Option<usize>,
    pub width: f64,
    pub root_tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub precision: Precision,
    pub seed: u64,
    pub target: TargetKind,
    /// `t` for the `f` target; defaults to the entropy at the base point.
    pub t: Option<f64>,
    pub chart: ChartKind,
    pub step: Option<f64>,
    pub stop_tol: f64,
    pub max_coeff: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: SurfaceSource::Builtin {
                family: "L".into(),
                k: 2,
            },
            base: BaseSpec::Equilateral,
            s: 0.0,
            u: 0.0,
            s_range: None,
            u_range: None,
            cutoff: None,
            width: 1e-10,
            root_tol: origami_entropy::DEFAULT_ROOT_TOL,
            format: Format::Plain,
            out: None,
            precision: Precision::Double,
            seed: 0,
            target: TargetKind::Entropy,
            t: None,
            chart: ChartKind::Orbit,
            step: None,
            stop_tol: 1e-6,
            max_coeff: 3,
        }
    }
}

/// Raw settings before the surface source is resolved.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    surface: Option<String>,
    k: Option<usize>,
    squares: Option<usize>,
    h: Option<String>,
    v: Option<String>,
}

impl RunConfig {
    /// Builds a config from `key=value` pairs applied in order. Later pairs
    /// win, so file entries followed by flag entries give flag precedence.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = RunConfig::default();
        let mut src = Overrides::default();
        for (key, value) in pairs {
            cfg.set(&mut src, key, value)?;
        }
        cfg.surface = resolve_surface(src)?;
        Ok(cfg)
    }

    fn set(&mut self, src: &mut Overrides, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "surface" => src.surface = Some(value.to_owned()),
            "k" => src.k = Some(parse_value("k", value)?),
            "squares" => src.squares = Some(parse_value("squares", value)?),
            "h" => src.h = Some(value.to_owned()),
            "v" => src.v = Some(value.to_owned()),
            "base" => self.base = value.parse()?,
            "s" => self.s = parse_finite("s", value)?,
            "u" => self.u = parse_finite("u", value)?,
            "s-range" => self.s_range = Some(value.parse()?),
            "u-range" => self.u_range = Some(value.parse()?),
            "N" | "n" | "cutoff" => {
                let n: usize = parse_value("N", value)?;
                if n == 0 {
                    return Err(CliError::Validation("N must be positive".into()));
                }
                self.cutoff = Some(n);
            }
            "width" => self.width = parse_positive("width", value)?,
            "tol" | "root-tol" => self.root_tol = parse_positive("tol", value)?,
            "format" => {
                self.format = match value {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    "plain" => Format::Plain,
                    _ => return Err(bad_choice("format", value, "json, csv, plain")),
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "precision" => {
                self.precision = match value {
                    "double" => Precision::Double,
                    "extended" => Precision::Extended,
                    _ => return Err(bad_choice("precision", value, "double, extended")),
                }
            }
            "seed" => self.seed = parse_value("seed", value)?,
            "target" => {
                self.target = match value {
                    "entropy" => TargetKind::Entropy,
                    "f" => TargetKind::F,
                    _ => return Err(bad_choice("target", value, "entropy, f")),
                }
            }
            "t" => self.t = Some(parse_positive("t", value)?),
            "chart" => {
                self.chart = match value {
                    "orbit" => ChartKind::Orbit,
                    "length-angle" => ChartKind::LengthAngle,
                    _ => return Err(bad_choice("chart", value, "orbit, length-angle")),
                }
            }
            "step" => self.step = Some(parse_positive("step", value)?),
            "stop-tol" => self.stop_tol = parse_positive("stop-tol", value)?,
            "max-coeff" => {
                self.max_coeff = parse_value("max-coeff", value)?;
                if self.max_coeff == 0 {
                    return Err(CliError::Validation("max-coeff must be positive".into()));
                }
            }
            _ => return Err(CliError::Validation(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }
}

fn resolve_surface(src: Overrides) -> Result<SurfaceSource, CliError> {
    let inline = src.h.is_some() || src.v.is_some() || src.squares.is_some();
    match (src.surface, inline) {
        (Some(_), true) => Err(CliError::Validation(
            "give either --surface or --squares/--h/--v, not both".into(),
        )),
        (None, true) => match (src.squares, src.h, src.v) {
            (Some(squares), Some(h), Some(v)) => Ok(SurfaceSource::Inline { squares, h, v }),
            _ => Err(CliError::Validation(
                "an inline surface needs --squares, --h and --v".into(),
            )),
        },
        (Some(name), false) => surface_from_name(&name, src.k),
        (None, false) => Ok(SurfaceSource::Builtin {
            family: "L".into(),
            k: src.k.unwrap_or(2),
        }),
    }
}

/// `L`, `EW`, `O:3` (or `O` with `--k 3`), else a path to a surface file.
fn surface_from_name(name: &str, k: Option<usize>) -> Result<SurfaceSource, CliError> {
    let (fam, inline_k) = match name.split_once(':') {
        Some((f, k)) => (f, Some(k)),
        None => (name, None),
    };
    if let Ok(family) = fam.parse::<Family>() {
        let k = match inline_k {
            Some(text) => parse_value("k", text)?,
            None => k.unwrap_or(2),
        };
        return Ok(SurfaceSource::Builtin {
            family: family.name().to_owned(),
            k,
        });
    }
    if Path::new(name).is_file() {
        return Ok(SurfaceSource::File { path: name.into() });
    }
    Err(CliError::Validation(format!(
        "{name:?} is neither a surface family (O, St, G, EW, L) nor a readable file"
    )))
}

/// Pairs from a flat `key=value` file; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "config line {}: expected key=value, got {line:?}",
                i + 1
            )));
        };
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(pairs)
}

fn parse_value<T: FromStr>(name: &str, s: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("invalid {name}: {s:?}")))
}

fn parse_finite(name: &str, s: &str) -> Result<f64, CliError> {
    let x: f64 = parse_value(name, s)?;
    if !x.is_finite() {
        return Err(CliError::Validation(format!(
            "{name} must be finite, got {s}"
        )));
    }
    Ok(x)
}

fn parse_positive(name: &str, s: &str) -> Result<f64, CliError> {
    let x = parse_finite(name, s)?;
    if x <= 0.0 {
        return Err(CliError::Validation(format!(
            "{name} must be positive, got {s}"
        )));
    }
    Ok(x)
}

fn bad_choice(name: &str, got: &str, allowed: &str) -> CliError {
    CliError::Validation(format!("{name} must be one of {allowed}; got {got:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_pairs_win() {
        let cfg = RunConfig::from_pairs([("s", "0.1"), ("s", "0.2"), ("surface", "O:3")]).unwrap();
        assert_eq!(cfg.s, 0.2);
        assert_eq!(
            cfg.surface,
            SurfaceSource::Builtin {
                family: "O".into(),
                k: 3
            }
        );
    }

    #[test]
    fn grids_and_bases() {
        let g: GridSpec = "-0.5:0.5:21".parse().unwrap();
        assert_eq!((g.lo, g.hi, g.n), (-0.5, 0.5, 21));
        assert!("0:1:0".parse::<GridSpec>().is_err());
        assert!("0:inf:3".parse::<GridSpec>().is_err());
        assert!("1:0:3".parse::<GridSpec>().is_err());
        assert_eq!("identity".parse::<BaseSpec>().unwrap(), BaseSpec::Identity);
        assert_eq!(
            "2,0,0,0.5".parse::<BaseSpec>().unwrap(),
            BaseSpec::Matrix([2.0, 0.0, 0.0, 0.5])
        );
    }

    #[test]
    fn exactly_one_surface_source() {
        let both = RunConfig::from_pairs([("surface", "L"), ("squares", "3")]);
        assert!(matches!(both, Err(CliError::Validation(_))));
        let partial = RunConfig::from_pairs([("squares", "3"), ("h", "(1,2)")]);
        assert!(partial.is_err());
        let cfg =
            RunConfig::from_pairs([("squares", "3"), ("h", "(1,2)"), ("v", "(1,3)")]).unwrap();
        assert!(cfg.surface.load().is_ok());
    }

    #[test]
    fn config_file_syntax() {
        let pairs = parse_config_file("# run\nsurface = EW\n\nwidth=1e-8 # loose\n").unwrap();
        assert_eq!(
            pairs,
            vec![
                ("surface".into(), "EW".into()),
                ("width".into(), "1e-8".into())
            ]
        );
        assert!(parse_config_file("surface EW").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let cfg = RunConfig::from_pairs([("s-range", "-1:1:5"), ("base", "1,1,0,1")]).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
