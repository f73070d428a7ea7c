//! The six subcommands.

use origami_entropy::extended::{extended_entropy_enclosure, ExtendedMatrix, DISPLAY_DIGITS};
use origami_entropy::orbit::{self, FdResult};
use origami_entropy::solver::entropy_with_tol;
use origami_entropy::{
    check_hypothesis, entropy_enclosure, fd_hessian, orbit_matrix, Chart, EntropyEnclosure,
    OrbitPoint, SquareTiledSurface, StratumInfo, Target, UnimodularMap,
};
use serde_json::{json, Value};

use crate::config::{BaseSpec, ChartKind, Precision, RunConfig, TargetKind};
use crate::report::{decimal, digits17, num, Report};
use crate::verify::{run_verify, VerifyOptions};
use crate::{CliError, Outcome, EXIT_NUMERICAL};

/// Truncation used by extended precision when `N` is not given.
pub const EXTENDED_DEFAULT_CUTOFF: usize = 100;
/// Difference step of `hessian` when none is given.
pub const HESSIAN_DEFAULT_STEP: f64 = 1e-4;
/// Initial compass step of `minimize` when none is given.
pub const MINIMIZE_DEFAULT_STEP: f64 = 0.1;

fn done(cfg: &RunConfig, report: Report) -> Outcome {
    Outcome {
        body: report.render(cfg),
        notes: Vec::new(),
        exit_code: 0,
    }
}

fn stratum(cfg: &RunConfig) -> Result<(SquareTiledSurface, StratumInfo), CliError> {
    let x = cfg.surface.load()?;
    let info = check_hypothesis(&x)?;
    Ok((x, info))
}

fn point(cfg: &RunConfig) -> Result<OrbitPoint, CliError> {
    Ok(OrbitPoint::new(cfg.s, cfg.u, cfg.base.matrix()?))
}

fn cycle_text(cycle: &[usize]) -> String {
    let labels: Vec<String> = cycle.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", labels.join(","))
}

fn angle_text(multiplier: usize) -> String {
    format!("{}π", 2 * multiplier)
}

pub fn info(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let x = cfg.surface.load()?;
    let classes: Vec<String> = x.vertex_cycles().iter().map(|c| cycle_text(c)).collect();
    let angles: Vec<String> = x
        .cone_multipliers()
        .iter()
        .map(|&m| angle_text(m))
        .collect();
    let stratum = check_hypothesis(&x);

    let mut plain = format!(
        "squares={}\nh={}\nv={}\nvertex classes: {}\ncone angles: {}\n",
        x.n_squares(),
        x.h(),
        x.v(),
        classes.join(" "),
        angles.join(" ")
    );
    let stratum_json = match &stratum {
        Ok(s) => {
            plain.push_str(&format!(
                "genus={} k={} n={} sigma={}\n",
                s.genus,
                s.k,
                s.n,
                digits17(s.sigma)
            ));
            json!({ "k": s.k, "n": s.n, "sigma": num(s.sigma) })
        }
        Err(e) => {
            plain.push_str(&format!("genus={}\nstratum: none ({e})\n", x.genus()));
            Value::Null
        }
    };
    let report = Report::new()
        .field("squares", x.n_squares())
        .field("h", x.h().to_string())
        .field("v", x.v().to_string())
        .field("vertex_classes", classes)
        .field(
            "cone_angles_over_pi",
            x.cone_multipliers()
                .iter()
                .map(|m| 2 * m)
                .collect::<Vec<_>>(),
        )
        .field("genus", x.genus())
        .field("stratum", stratum_json)
        .plain(plain);
    Ok(done(cfg, report))
}

fn double_enclosure(
    cfg: &RunConfig,
    x: &StratumInfo,
    m: &UnimodularMap,
) -> Result<EntropyEnclosure, CliError> {
    Ok(match cfg.cutoff {
        Some(n) => entropy_enclosure(x, m, n, cfg.root_tol)?,
        None => entropy_with_tol(x, m, cfg.width, cfg.root_tol)?,
    })
}

pub fn entropy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, x) = stratum(cfg)?;
    let p = point(cfg)?;
    let m = orbit_matrix(&p);
    let report = match cfg.precision {
        Precision::Double => {
            let e = double_enclosure(cfg, &x, &m)?;
            let plain = format!(
                "h_lo={}\nh_hi={}\nN={}\nwidth={:.3e}\ndigits={}\n",
                digits17(e.h_lo),
                digits17(e.h_hi),
                e.cutoff,
                e.width(),
                e.agreeing_digits()
            );
            Report::new()
                .field("h_lo", num(e.h_lo))
                .field("h_hi", num(e.h_hi))
                .field("N", e.cutoff)
                .field("width", num(e.width()))
                .field("digits", e.agreeing_digits())
                .field("target", num(x.target()))
                .field("evaluations", e.evaluations)
                .plain(plain)
        }
        Precision::Extended => {
            let cutoff = cfg.cutoff.unwrap_or(EXTENDED_DEFAULT_CUTOFF);
            let exact_equilateral =
                cfg.base == BaseSpec::Equilateral && cfg.s == 0.0 && cfg.u == 0.0;
            let em = if exact_equilateral {
                ExtendedMatrix::equilateral()
            } else {
                ExtendedMatrix::from_map(&m)
            };
            let e = extended_entropy_enclosure(&x, &em, cutoff)?;
            let lo = e.h_lo_digits(DISPLAY_DIGITS)?;
            let hi = e.h_hi_digits(DISPLAY_DIGITS)?;
            let digits = shared_digits(&lo, &hi);
            let width = e.width()?;
            let plain =
                format!("h_lo={lo}\nh_hi={hi}\nN={cutoff}\nwidth={width:.3e}\ndigits={digits}\n");
            Report::new()
                .field("h_lo", decimal(&lo))
                .field("h_hi", decimal(&hi))
                .field("N", cutoff)
                .field("width", num(width))
                .field("digits", digits)
                .field("target", num(x.target()))
                .field("evaluations", e.evaluations)
                .plain(plain)
        }
    };
    Ok(done(cfg, report))
}

/// Leading significant digits two positional decimals share.
pub fn shared_digits(a: &str, b: &str) -> usize {
    let sig = |s: &str| -> Vec<u8> {
        s.bytes()
            .filter(u8::is_ascii_digit)
            .skip_while(|&c| c == b'0')
            .collect()
    };
    let point = |s: &str| s.find('.').unwrap_or(s.len());
    if point(a) != point(b) {
        return 0;
    }
    sig(a)
        .iter()
        .zip(sig(b).iter())
        .take_while(|(x, y)| x == y)
        .count()
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, x) = stratum(cfg)?;
    let base = cfg.base.matrix()?;
    let s_values = cfg.s_range.map_or_else(|| vec![cfg.s], |g| g.values());
    let u_values = cfg.u_range.map_or_else(|| vec![cfg.u], |g| g.values());
    let grid = orbit::scan(&x, &base, &s_values, &u_values, cfg.width)?;
    let csv = grid.to_csv();

    let argmin = grid
        .argmin()
        .map(|(is, iu)| (s_values[is], u_values[iu], grid.value(is, iu)));
    let summary = match argmin {
        Some((s, u, h)) => format!(
            "argmin s={} u={} h={} strict={}",
            digits17(s),
            digits17(u),
            digits17(h),
            grid.argmin_is_strict()
        ),
        None => "argmin none".to_owned(),
    };
    let mirror = grid.mirror_defect();
    let summary = match mirror {
        Some(d) => format!("{summary} mirror_defect={d:.3e}"),
        None => summary,
    };
    let cells: Vec<Value> = u_values
        .iter()
        .enumerate()
        .flat_map(|(iu, &u)| {
            let grid = &grid;
            s_values.iter().enumerate().map(move |(is, &s)| {
                json!({
                    "s": num(s),
                    "u": num(u),
                    "h_mid": num(grid.entropies[iu][is]),
                    "h_width": num(grid.widths[iu][is]),
                })
            })
        })
        .collect();
    let failures: Vec<String> = grid
        .failures
        .iter()
        .map(|(is, iu, msg)| format!("cell s={} u={}: {msg}", s_values[*is], u_values[*iu]))
        .collect();
    let report = Report::new()
        .field("cells", cells)
        .field(
            "argmin",
            argmin.map_or(Value::Null, |(s, u, h)| {
                json!({ "s": num(s), "u": num(u), "h": num(h), "strict": grid.argmin_is_strict() })
            }),
        )
        .field("mirror_defect", mirror.map_or(Value::Null, num))
        .field("failures", failures.clone())
        .plain(format!("{csv}# {summary}\n"))
        .csv(csv);
    let mut out = done(cfg, report);
    out.notes.push(summary);
    if !failures.is_empty() {
        out.notes.extend(failures);
        out.exit_code = EXIT_NUMERICAL;
    }
    Ok(out)
}

fn fd_json(r: &FdResult) -> Vec<(&'static str, Value)> {
    let [g0, g1] = r.gradient;
    let [[a, b], [c, d]] = r.hessian;
    let [e0, e1] = r.eigenvalues();
    vec![
        ("gradient", json!([num(g0), num(g1)])),
        ("gradient_norm", num(r.gradient_norm())),
        ("hessian", json!([[num(a), num(b)], [num(c), num(d)]])),
        ("determinant", num(r.determinant())),
        ("trace", num(r.trace())),
        ("eigenvalues", json!([num(e0), num(e1)])),
        ("step", num(r.step)),
    ]
}

pub fn hessian(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, x) = stratum(cfg)?;
    let m = orbit_matrix(&point(cfg)?);
    let target = match cfg.target {
        TargetKind::Entropy => Target::Entropy,
        TargetKind::F => {
            let t = match cfg.t {
                Some(t) => t,
                None => double_enclosure(cfg, &x, &m)?.midpoint(),
            };
            Target::F { t }
        }
    };
    let chart = match cfg.chart {
        ChartKind::Orbit => Chart::Orbit,
        ChartKind::LengthAngle => Chart::LengthAngle,
    };
    let step = cfg.step.unwrap_or(HESSIAN_DEFAULT_STEP);
    let r = fd_hessian(&x, &m, target, chart, step)?;
    let mut report = Report::new();
    if let Target::F { t } = target {
        report = report.field("t", num(t));
    }
    for (k, v) in fd_json(&r) {
        report = report.field(k, v);
    }
    Ok(done(cfg, report))
}

pub fn minimize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, x) = stratum(cfg)?;
    let start = point(cfg)?;
    let step = cfg.step.unwrap_or(MINIMIZE_DEFAULT_STEP);
    let r = orbit::minimize(&x, start, cfg.stop_tol, step)?;
    let report = Report::new()
        .field("s", num(r.point.s))
        .field("u", num(r.point.u))
        .field("entropy", num(r.entropy))
        .field("evaluations", r.evaluations)
        .field("final_step", num(r.final_step));
    Ok(done(cfg, report))
}

/// Runs the suite; `opts.seed` and `opts.max_coeff` are taken from `cfg`.
pub fn verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Outcome, CliError> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        max_coeff: cfg.max_coeff,
        ..opts.clone()
    };
    let results = run_verify(&opts)?;
    let mut plain = String::new();
    let mut rows = String::from("check,status,violations,summary\n");
    let mut checks = Vec::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        plain.push_str(&format!("{status} {:<16} {}\n", r.name, r.summary));
        for v in &r.violations {
            plain.push_str(&format!("    {v}\n"));
        }
        rows.push_str(&format!(
            "{},{status},{},\"{}\"\n",
            r.name,
            r.violation_count,
            r.summary.replace('"', "\"\"")
        ));
        checks.push(json!({
            "name": r.name,
            "passed": r.passed,
            "summary": r.summary,
            "violation_count": r.violation_count,
            "violations": r.violations,
        }));
    }
    let all = results.iter().all(|r| r.passed);
    let report = Report::new()
        .field("passed", all)
        .field("checks", checks)
        .plain(plain)
        .csv(rows);
    let mut out = done(cfg, report);
    if !all {
        out.exit_code = EXIT_NUMERICAL;
        out.notes.extend(
            results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| format!("check {} failed", r.name)),
        );
    }
    Ok(out)
}
