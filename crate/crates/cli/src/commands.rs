use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;

use hodgeloc::fixtures;
use hodgeloc::hodge::intersection_pattern;
use hodgeloc::locus::{
    enumerate_classes, enumerate_sample_classes, locus_equations, orbit_locus_solve, project_exact, project_offset,
    ray_points, solution_set, verify_thm25, LocusSystem,
};
use hodgeloc::matrix::vec_is_zero;
use hodgeloc::nilpotent::{check_weight_filtration, cone_weight_filtration, weight_filtration};
use hodgeloc::orbits::{decay_check, is_polarized_orbit, limiting_mhs_report, NilpotentOrbit, VariationSample};
use hodgeloc::par::Execution;
use hodgeloc::scalar::{float_tolerance, parse_gaussian, parse_rational, set_float_tolerance};
use hodgeloc::sl2::{graded_norm_check, norm_asymptotics_check, Sl2Rep};
use hodgeloc::{Field, Filtration, GaussRat, Matrix, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::document::VariationDocument;
use crate::error::{invalid, CliError, CliResult};
use crate::report::{to_value, Provenance, ReportDocument};

/// What a command prints and whether its checks passed.
pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl From<ReportDocument> for Output {
    fn from(r: ReportDocument) -> Self {
        Output {
            text: r.to_json(),
            passed: r.passed,
        }
    }
}

struct Ctx {
    seed: u64,
    exec: Execution,
    echo: Value,
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid("--tol", "tolerance must be positive and finite"));
        }
        set_float_tolerance(tol);
    }
    let ctx = Ctx {
        seed: cli.seed,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
        echo: cli.echo(),
    };
    let report = match &cli.command {
        Command::Wf(a) => wf(a, &ctx)?,
        Command::MhsCheck(a) => mhs_check(a, &ctx)?,
        Command::Bigrading(a) => bigrading(a, &ctx)?,
        Command::OrbitCheck(a) => orbit_check(a, &ctx)?,
        Command::LimitingMhs(a) => limiting(a, &ctx)?,
        Command::Locus(a) => locus(a, &ctx)?,
        Command::Enumerate(a) => enumerate(a, &ctx)?,
        Command::Project(a) => project(a, &ctx)?,
        Command::Verify25(a) => verify25(a, &ctx)?,
        Command::Asymptotics(a) => asymptotics(a, &ctx)?,
        Command::Fixtures(a) => return fixtures_cmd(a),
    };
    Ok(report.into())
}

// ---------------------------------------------------------------------------
// inputs

/// Fixture names accepted by `--fixture`.
pub fn fixture_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = fixtures::standard_suite().iter().map(|f| f.name).collect();
    names.extend(["rank2_family", "projection_family"]);
    names
}

fn named_fixture(name: &str) -> CliResult<(VariationSample, Option<Sl2Rep>)> {
    match name {
        "rank2_family" => Ok((fixtures::rank2_family(), None)),
        "projection_family" => Ok((fixtures::projection_family().0, None)),
        _ => {
            let rep = fixtures::by_name(name).ok_or_else(|| {
                invalid(
                    "--fixture",
                    format!("unknown fixture {name:?}; known: {}", fixture_names().join(", ")),
                )
            })?;
            Ok((VariationSample::unperturbed(rep.to_orbit()?), Some(rep)))
        }
    }
}

struct Loaded {
    sample: VariationSample,
    rep: Option<Sl2Rep>,
}

impl Loaded {
    fn orbit(&self) -> &NilpotentOrbit {
        &self.sample.orbit
    }
}

fn load(src: &InputArgs) -> CliResult<Loaded> {
    match (&src.input, &src.fixture) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let sample = VariationDocument::from_json(&text)?.to_sample()?;
            Ok(Loaded { sample, rep: None })
        }
        (None, Some(name)) => {
            let (sample, rep) = named_fixture(name)?;
            // fixtures pass through their document so both paths agree
            let sample = VariationDocument::from_sample(&sample).to_sample()?;
            Ok(Loaded { sample, rep })
        }
        _ => Err(invalid("input", "exactly one of --input or --fixture is required")),
    }
}

fn split(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn gaussian_list(text: &str, what: &str, len: usize) -> CliResult<Vec<GaussRat>> {
    let z: Vec<GaussRat> = split(text)
        .map(parse_gaussian)
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(what, e))?;
    if z.len() != len {
        return Err(invalid(what, format!("expected {len} coordinates, found {}", z.len())));
    }
    Ok(z)
}

fn rational_list(text: &str, what: &str, len: usize) -> CliResult<Vec<Rational>> {
    let v: Vec<Rational> = split(text)
        .map(parse_rational)
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(what, e))?;
    if v.len() != len {
        return Err(invalid(what, format!("expected {len} entries, found {}", v.len())));
    }
    Ok(v)
}

fn integer_list(text: &str, what: &str, len: usize) -> CliResult<Vec<i64>> {
    let v: Vec<i64> = split(text)
        .map(|s| s.parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(what, e))?;
    if v.len() != len {
        return Err(invalid(what, format!("expected {len} entries, found {}", v.len())));
    }
    Ok(v)
}

fn float_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = split(text)
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(what, e))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(what, "entries must be finite"));
    }
    Ok(v)
}

fn depth_list(text: &str) -> CliResult<Vec<u32>> {
    let bad = |e: &dyn ToString| invalid("--depths", e.to_string());
    let depths: Vec<u32> = match text.split_once("..=") {
        Some((a, b)) => {
            let a: u32 = a.trim().parse().map_err(|e| bad(&e))?;
            let b: u32 = b.trim().parse().map_err(|e| bad(&e))?;
            (a..=b).collect()
        }
        None => split(text)
            .map(|s| s.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(&e))?,
    };
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("--depths", "depths must be nonempty and increasing"));
    }
    Ok(depths)
}

fn matrix_json(text: &str) -> CliResult<Matrix<Rational>> {
    let rows: Vec<Vec<Value>> = serde_json::from_str(text)?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid("--matrix", "expected a nonempty square matrix"));
    }
    let entry = |x: &Value| match x {
        Value::String(s) => parse_rational(s).map_err(|e| invalid("--matrix", e)),
        Value::Number(k) if k.is_i64() => Ok(Rational::from_i64(k.as_i64().expect("checked"))),
        other => Err(invalid("--matrix", format!("entry {other} is not a rational string"))),
    };
    let parsed: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(entry).collect::<CliResult<_>>())
        .collect::<CliResult<_>>()?;
    Ok(Matrix::from_rows(parsed, n)?)
}

// ---------------------------------------------------------------------------
// rendering

fn row_strings<T: Field>(rows: &[Vec<T>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

fn point_strings(z: &[GaussRat]) -> Vec<String> {
    z.iter().map(|c| c.to_string()).collect()
}

/// Steps of a filtration from the first nonzero (or proper) one to the
/// first that is everything, keyed by index.
fn dump_filtration<T: Field>(f: &Filtration<T>) -> BTreeMap<i32, Vec<Vec<String>>> {
    let (lo, hi) = f.range();
    let first = (lo + 1).min(hi - 1);
    (first..=hi)
        .map(|k| (k, row_strings(&f.get(k).basis_vectors())))
        .collect()
}

fn dims<T: Field>(f: &Filtration<T>) -> BTreeMap<i32, usize> {
    let (lo, hi) = f.range();
    let first = (lo + 1).min(hi - 1);
    (first..=hi).map(|k| (k, f.get(k).dim())).collect()
}

fn linear_text(coeffs: &[Rational]) -> String {
    let zero = <Rational as Field>::zero();
    let one = <Rational as Field>::one();
    let mut out = String::new();
    for (j, c) in coeffs.iter().enumerate().filter(|(_, c)| **c != zero) {
        let negative = *c < zero;
        let mag = if negative { -c.clone() } else { c.clone() };
        out.push_str(match (out.is_empty(), negative) {
            (true, true) => "-",
            (true, false) => "",
            (false, true) => " - ",
            (false, false) => " + ",
        });
        if mag != one {
            out.push_str(&format!("{mag}*"));
        }
        out.push_str(&format!("z{}", j + 1));
    }
    out
}

fn monomial_text(degree: &[u32]) -> String {
    degree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0)
        .map(|(j, &d)| {
            if d == 1 {
                format!("s{}", j + 1)
            } else {
                format!("s{}^{d}", j + 1)
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

#[derive(Serialize)]
struct EquationDump {
    coordinate: usize,
    linear: Vec<String>,
    series: Vec<Value>,
    text: String,
}

fn equation_dumps(system: &LocusSystem) -> Vec<EquationDump> {
    system
        .nontrivial()
        .into_iter()
        .map(|a| {
            let e = &system.equations[a];
            let mut text = linear_text(&e.linear);
            for t in &e.series {
                if !text.is_empty() {
                    text.push_str(" + ");
                }
                text.push_str(&format!("({})*{}", t.coeff, monomial_text(&t.degree)));
            }
            EquationDump {
                coordinate: a,
                linear: e.linear.iter().map(|x| x.to_string()).collect(),
                series: e
                    .series
                    .iter()
                    .map(|t| json!({ "degree": t.degree, "coeff": t.coeff.to_string() }))
                    .collect(),
                text: format!("{text} = 0"),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// commands

fn wf(a: &WfArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let gens = match &a.matrix {
        Some(m) => vec![matrix_json(m)?],
        None => load(&a.source)?.orbit().generators().to_vec(),
    };
    if gens.is_empty() {
        return Err(invalid("N", "the variation has no generators"));
    }
    let mut report = ReportDocument::new(ctx.echo.clone());
    if a.cone {
        let cone = cone_weight_filtration(&gens, ctx.seed)?;
        let samples: Vec<Vec<String>> = row_strings(&cone.samples);
        report.check("lambda independence", true, Some(json!({ "samples": samples })));
        Ok(report.results(json!({
            "steps": dump_filtration(&cone.filtration),
            "dims": dims(&cone.filtration),
            "note": "W(sum lambda_j N_j) agrees for every sampled lambda: the filtration does not depend on lambda in the open cone",
        })))
    } else {
        let n = gens
            .get(a.index)
            .ok_or_else(|| invalid("--index", format!("only {} generators", gens.len())))?;
        let w = weight_filtration(n)?;
        let axioms = check_weight_filtration(n, &w);
        report.check(
            "weight filtration axioms",
            axioms.is_ok(),
            axioms.err().map(|e| json!(e.to_string())),
        );
        Ok(report.results(json!({ "steps": dump_filtration(&w), "dims": dims(&w) })))
    }
}

fn mhs_check(a: &InputArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(a)?;
    let orbit = loaded.orbit();
    let w = orbit.limiting_weight_filtration()?;
    let r = hodgeloc::hodge::is_mhs(&w, orbit.limiting_filtration());
    let mut report = ReportDocument::new(ctx.echo.clone());
    report.check("W defined over Q", r.w_rational, None);
    for g in &r.graded {
        report.check(
            format!("Gr^W_{} pure of weight {}", g.k, g.k),
            g.pure,
            g.detail.as_ref().map(|d| json!(d)),
        );
    }
    Ok(report.results(json!({ "weight_dims": dims(&w), "mhs": r })))
}

fn bigrading(a: &InputArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(a)?;
    let orbit = loaded.orbit();
    let b = orbit.limiting_bigrading()?;
    let w = orbit.limiting_weight_filtration()?;
    let pieces: Vec<Value> = b
        .indices()
        .into_iter()
        .map(|(p, q)| {
            let s = b.piece(p, q);
            json!({ "p": p, "q": q, "dim": s.dim(), "basis": row_strings(&s.basis_vectors()) })
        })
        .collect();
    let total: usize = b.indices().iter().map(|&(p, q)| b.piece(p, q).dim()).sum();
    let split = b.verify_splitting(&w, orbit.limiting_filtration());
    let pattern: Vec<Value> = intersection_pattern(&w, orbit.limiting_filtration())?
        .into_iter()
        .map(|((k, p), d)| json!({ "w": k, "p": p, "dim": d }))
        .collect();
    let mut report = ReportDocument::new(ctx.echo.clone());
    report.check("pieces span V", total == orbit.rank(), None);
    report.check(
        "I^{p,q} split W and F",
        split.is_ok(),
        split.err().map(|e| json!(e.to_string())),
    );
    Ok(report.results(json!({ "pieces": pieces, "intersection_pattern": pattern })))
}

fn orbit_check(a: &OrbitCheckArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let orbit = loaded.orbit();
    let r = orbit.r();
    let samples: Vec<Vec<GaussRat>> = if a.points.is_empty() {
        [1, 2, 4, 8]
            .iter()
            .map(|&n| vec![GaussRat::from_ints(0, n); r])
            .collect()
    } else {
        a.points
            .iter()
            .map(|p| gaussian_list(p, "--at", r))
            .collect::<CliResult<_>>()?
    };
    let out = is_polarized_orbit(orbit, a.y_threshold, &samples);
    let mut report = ReportDocument::new(ctx.echo.clone());
    for s in out.samples.iter().filter(|s| s.considered) {
        let failures = s.report.as_ref().map(|r| r.failures.clone()).unwrap_or_default();
        report.check(
            format!("polarized at z = ({})", s.z.join(", ")),
            s.passed,
            (!failures.is_empty()).then(|| json!(failures)),
        );
    }
    Ok(report.results(out))
}

fn limiting(a: &InputArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(a)?;
    let r = limiting_mhs_report(loaded.orbit());
    let mut report = ReportDocument::new(ctx.echo.clone());
    report.check("limiting mixed Hodge structure", r.mhs.passed, None);
    for p in &r.primitive {
        report.check(
            format!("primitive part P_{} polarized", p.ell),
            p.report.passed(),
            (!p.report.passed()).then(|| json!(p.report.failures)),
        );
    }
    report.check(
        "all limiting checks",
        r.passed(),
        (!r.passed()).then(|| json!(r.failures)),
    );
    Ok(report.results(r))
}

fn locus(a: &LocusArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let orbit = loaded.orbit();
    let v = integer_list(&a.class, "--class", orbit.rank())?;
    let system = locus_equations(&loaded.sample, &v)?;
    let (reduced, _) = system.linear_part().rref();
    let reduced: Vec<String> = reduced
        .row_vecs()
        .iter()
        .filter(|r| !vec_is_zero(r))
        .map(|r| format!("{} = 0", linear_text(r)))
        .collect();
    let mut results = json!({
        "class": v,
        "full_space": system.is_empty(),
        "equations": equation_dumps(&system),
        "linear_reduced": reduced,
    });
    if system.is_empty() {
        results["note"] = json!("locus: full space");
    }
    let mut report = ReportDocument::new(ctx.echo.clone());
    if a.solve {
        let sol = orbit_locus_solve(orbit, &v)?;
        report.check(
            "class is Hodge on the solution set",
            sol.verified_at.is_some(),
            sol.verified_at.as_ref().map(|z| json!(point_strings(z))),
        );
        results["solution"] = json!({
            "dim": sol.dim(),
            "r": sol.r,
            "basis": row_strings(&sol.basis),
        });
    }
    Ok(report.results(results))
}

fn enumerate(a: &EnumerateArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let orbit = loaded.orbit();
    let r = orbit.r();
    let z = gaussian_list(&a.at, "--at", r)?;
    if a.k < 0 {
        return Err(invalid("--K", "the norm bound must be nonnegative"));
    }
    let hits = if loaded.sample.gamma.is_empty() {
        enumerate_classes(orbit, &z, a.k, ctx.exec)?
    } else {
        let s =
            a.s.as_deref()
                .ok_or_else(|| invalid("--s", "a document with a series needs exact values of s"))?;
        let s = gaussian_list(s, "--s", r)?;
        enumerate_sample_classes(&loaded.sample, &z, &s, a.k, ctx.exec)?
    };
    let rows: Vec<Value> = hits
        .iter()
        .map(|h| {
            let special = !solution_set(orbit, &h.v)?.is_full();
            Ok(json!({
                "v": h.v,
                "q_norm": h.q_norm,
                "in_w0": h.in_w0,
                "special": special,
                "witness": h.limiting_witness,
            }))
        })
        .collect::<CliResult<_>>()?;
    let special = rows.iter().filter(|r| r["special"] == json!(true)).count();
    Ok(ReportDocument::new(ctx.echo.clone()).results(json!({
        "z": point_strings(&z),
        "K": a.k,
        "count": rows.len(),
        "special_count": special,
        "note": "special classes have a proper orbit locus: they are Hodge only on a sublocus through this point",
        "rows": rows,
    })))
}

fn project(a: &ProjectArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let orbit = loaded.orbit();
    let v = integer_list(&a.class, "--class", orbit.rank())?;
    let z = gaussian_list(&a.at, "--at", orbit.r())?;
    let exact = project_exact(orbit, &v, &z)?;
    let zeros: Vec<_> = z.iter().map(|_| hodgeloc::Cf64::new(0.0, 0.0).0).collect();
    let float = project_offset(orbit, &v, &z, &zeros)?;
    let on_locus = solution_set(orbit, &v)?.contains(&exact);
    let mut report = ReportDocument::new(ctx.echo.clone());
    report.check("projection lies on the orbit locus", on_locus, None);
    Ok(report.results(json!({
        "class": v,
        "z": point_strings(&z),
        "projected": point_strings(&exact),
        "float": float,
    })))
}

fn verify25(a: &Verify25Args, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let orbit = loaded.orbit();
    let r = orbit.r();
    let mut report = ReportDocument::new(ctx.echo.clone());
    let limit = limiting_mhs_report(orbit);
    report.check(
        "polarization of the limiting mixed Hodge structure",
        limit.passed(),
        (!limit.passed()).then(|| json!(limit.failures)),
    );
    if !limit.passed() {
        return Ok(report.results(json!({ "stage": "polarization", "limiting": limit })));
    }
    let base = match &a.ray {
        Some(t) => gaussian_list(t, "--ray", r)?,
        None => vec![GaussRat::zero(); r],
    };
    let direction = match &a.direction {
        Some(t) => rational_list(t, "--direction", r)?,
        None => vec![Rational::one(); r],
    };
    if direction.iter().any(|d| *d <= Rational::zero()) {
        return Err(invalid("--direction", "every coordinate must be positive"));
    }
    if !(a.alpha.is_finite() && a.alpha > 0.0) {
        return Err(invalid("--alpha", "must be positive"));
    }
    let depths = depth_list(&a.depths)?;
    let stable_by = a.stable_by.unwrap_or(*depths.last().expect("nonempty"));
    let points = ray_points(&base, &direction, &depths);
    let t = verify_thm25(orbit, &points, a.k, a.alpha, ctx.exec)?;
    report.check(
        format!("hit set stable by depth {stable_by}"),
        t.stabilizes_by(stable_by),
        t.stable_from.map(|d| json!({ "stable_from": d })),
    );
    report.check("persistent classes lie in W_0", t.all_in_w0, None);
    report.check(
        "persistent classes have exact limiting witnesses",
        t.all_witnessed_exactly,
        None,
    );
    Ok(report.results(json!({
        "stage": "enumeration",
        "base": point_strings(&base),
        "direction": direction.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "persistent_count": t.persistent.len(),
        "transient_count": t.transient.len(),
        "harness": t,
    })))
}

fn default_grid(d: usize) -> Vec<f64> {
    // τ_1 = t^d runs over 2, 4, …, 256
    (1..=8).map(|k| 2f64.powf(k as f64 / d as f64)).collect()
}

fn x0_list(a: &AsymptoticsArgs, d: usize) -> CliResult<Vec<f64>> {
    match &a.x0 {
        Some(t) => {
            let x = float_list(t, "--x0")?;
            if x.len() != d {
                return Err(invalid("--x0", format!("expected {d} entries")));
            }
            Ok(x)
        }
        None => Ok((0..d).map(|j| 0.5 / (j + 1) as f64).collect()),
    }
}

fn asymptotics(a: &AsymptoticsArgs, ctx: &Ctx) -> CliResult<ReportDocument> {
    let loaded = load(&a.source)?;
    let mut report = ReportDocument::new(ctx.echo.clone());
    let tolerance = float_tolerance();
    match a.mode {
        AsymptoticsMode::Decay => {
            let r = loaded.orbit().r();
            let base: Vec<_> = match &a.ray {
                Some(t) => gaussian_list(t, "--ray", r)?.iter().map(|c| c.to_c64()).collect(),
                None => vec![GaussRat::zero().to_c64(); r],
            };
            let direction = match &a.direction {
                Some(t) => float_list(t, "--direction")?,
                None => vec![1.0; r],
            };
            let grid = match &a.grid {
                Some(t) => float_list(t, "--grid")?,
                None => (0..=12).map(|k| 2.0 + 0.5 * k as f64).collect(),
            };
            let d = decay_check(&loaded.sample, &base, &direction, &grid, ctx.exec)?;
            let mut constants = BTreeMap::new();
            if let (Some(e), Some(b), Some(rms)) = (d.exponent, d.intercept, d.rms_residual) {
                constants.insert("exponent".to_string(), e);
                constants.insert("log_constant".to_string(), b);
                constants.insert("rms_residual".to_string(), rms);
            }
            let ok = d.exact_match || d.exponent.is_some_and(|e| e >= 2.0 * PI * (1.0 - a.fit_tol));
            report.check(
                "distance decays at least like exp(-2 pi inf y)",
                ok,
                Some(json!({ "exact_match": d.exact_match, "exponent": d.exponent, "target": 2.0 * PI })),
            );
            report.provenance = Some(Provenance {
                tolerance,
                grid,
                constants,
            });
            Ok(report.results(d))
        }
        AsymptoticsMode::Norm | AsymptoticsMode::Graded => {
            let rep = loaded
                .rep
                .as_ref()
                .ok_or_else(|| invalid("--fixture", "norm asymptotics need an sl(2) fixture"))?;
            let d = rep.factors();
            let x0 = x0_list(a, d)?;
            let grid = match &a.grid {
                Some(t) => float_list(t, "--grid")?,
                None => default_grid(d),
            };
            let mut constants = BTreeMap::new();
            let value = if a.mode == AsymptoticsMode::Norm {
                let n = rep.rank();
                let mut vectors: Vec<Vec<Rational>> = (0..n)
                    .map(|i| (0..n).map(|j| Rational::from_i64((i == j) as i64)).collect())
                    .collect();
                vectors.push(vec![Rational::one(); n]);
                let r = norm_asymptotics_check(rep, &vectors, &x0, &grid, ctx.exec)?;
                constants.insert("min_ratio".into(), r.min_ratio);
                constants.insert("max_ratio".into(), r.max_ratio);
                for b in &r.bands {
                    constants.insert(format!("band_c(tau1<={})", b.tau_max), b.c);
                }
                let variation = r.variation(16.0, 256.0);
                report.check(
                    "band constant stable from tau1 = 16 to 256",
                    variation.is_some_and(|v| v < a.band_tol),
                    Some(json!({ "variation": variation })),
                );
                to_value(r)
            } else {
                let text = a
                    .vector
                    .as_deref()
                    .ok_or_else(|| invalid("--vector", "the graded mode needs a vector"))?;
                let v = rational_list(text, "--vector", rep.rank())?;
                let r = graded_norm_check(rep, &v, &x0, &grid, ctx.exec)?;
                constants.insert("slope".into(), r.slope);
                let full = r.full_exponent_variation(16.0, 256.0);
                let half = r.half_exponent_variation(16.0, 256.0);
                report.check(
                    "ratio times tau1^l stable from tau1 = 16 to 256",
                    full.is_some_and(|x| x < a.band_tol),
                    Some(json!({ "variation": full, "level": r.level })),
                );
                let mut value = to_value(&r);
                value["half_exponent_variation"] = json!(half);
                value
            };
            report.provenance = Some(Provenance {
                tolerance,
                grid,
                constants,
            });
            Ok(report.results(value))
        }
    }
}

fn fixtures_cmd(a: &FixturesArgs) -> CliResult<Output> {
    let names: Vec<&str> = match &a.name {
        Some(n) => vec![n.as_str()],
        None => fixture_names(),
    };
    let mut docs = BTreeMap::new();
    for name in names {
        let (sample, _) = named_fixture(name)?;
        docs.insert(name.to_string(), VariationDocument::from_sample(&sample));
    }
    if let Some(dir) = &a.out_dir {
        let io = |source| CliError::Io {
            path: dir.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        for (name, doc) in &docs {
            fs::write(dir.join(format!("{name}.json")), doc.to_json() + "\n").map_err(io)?;
        }
    }
    let text = match (&a.name, docs.values().next()) {
        (Some(_), Some(doc)) => doc.to_json(),
        _ => serde_json::to_string_pretty(&docs)?,
    };
    Ok(Output { text, passed: true })
}
