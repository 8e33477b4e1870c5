//! Command-line front end. Exit status: 0 success, 1 failed verification or
//! runtime error, 2 usage error.

use std::cell::RefCell;
use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cylinder::{decompose_cylinders, primed_edge_list};
use crate::derivation::{
    derivability_closure, derive_via_diagrams, ksl, sandwich_equivalence_check, sandwiched, Pipeline, Stage, Topology,
    Word,
};
use crate::error::{Error, Result};
use crate::flow::{derive_geometric, derive_geometric_any, random_trajectory, trace, Start, Trajectory};
use crate::geometry::{Point, Tolerance};
use crate::guide::{build_vertex_guide, verify_reassembly_with};
use crate::letter::{Alphabet, Letter};
use crate::precise::{extended_requested, Extended};
use crate::render::{render_svg, RenderOptions};
use crate::surface::{auxiliary_edges, build_surface, Polygon, Surface, SurfaceJson};
use crate::torus::{
    derived_between, spell_torus, torus_derive_geometric, torus_derive_rule,
    torus_periodic, torus_trace, TorusWord,
};
use crate::trig::{identity_sum, telescoping_identity};
use crate::veech::shear_modulus;

#[derive(Parser, Debug)]
#[command(name = "oddgon", version, about = "Cutting sequences and derivation on double regular odd-gons")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Number of sides (odd, 5..=99).
    #[arg(long, global = true, default_value_t = 5)]
    pub n: usize,
    /// Pass/fail tolerance (defaults depend on the check).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Corner tolerance for trajectories.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub delta: f64,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Sample count for randomised checks.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output path, or one of json|dot|svg|text to pick the format.
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    Svg,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Ksl,
    Diagram,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolygonArg {
    Upper,
    Lower,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusAction {
    Trace,
    Derive,
}

#[derive(Args, Debug, Clone)]
pub struct StartArgs {
    /// Start edge (S3 or C); the start is at parameter --t along it.
    #[arg(long)]
    pub edge: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Start polygon for an interior start at (--x, --y).
    #[arg(long, value_enum)]
    pub polygon: Option<PolygonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub crossings: usize,
    /// Same as --format json.
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Vertices, edges and identifications of the double n-gon.
    Surface {
        #[arg(long)]
        auxiliary: bool,
        #[arg(long)]
        primed: bool,
    },
    /// Cutting sequence of a straight trajectory.
    Trace(StartArgs),
    /// Derive a letter sequence by the sandwich rule or the diagram pipeline.
    Derive {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        cyclic: bool,
        #[arg(long, value_enum, default_value_t = Method::Ksl)]
        method: Method,
        /// Iterate the derivation and report the orbit.
        #[arg(long)]
        closure: bool,
    },
    /// Derive a traced trajectory by the primed edges it crosses.
    DeriveGeometric(StartArgs),
    /// Transition diagram at one pipeline stage.
    Diagram {
        #[arg(long, default_value = "arrows")]
        stage: String,
    },
    /// Vertex generator guide.
    Guide,
    /// Run numeric and combinatorial checks and report them as JSON.
    Verify {
        #[arg(long, default_value = "identities,moduli,reassembly,equivalence,geometric")]
        checks: String,
    },
    /// Square torus baseline.
    Torus {
        #[arg(value_enum)]
        action: TorusAction,
        /// Rational slope p/q (periodic orbit, one period reported).
        #[arg(long)]
        slope: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        x: f64,
        #[arg(long, default_value_t = 0.1234)]
        y: f64,
        #[arg(long, default_value_t = 40)]
        crossings: usize,
    },
    /// SVG picture of the surface, optionally with a trajectory.
    Render {
        #[command(flatten)]
        start: StartArgs,
        #[arg(long)]
        auxiliary: bool,
        #[arg(long)]
        primed: bool,
        #[arg(long)]
        guide: bool,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(output) => {
            let code = if output.pass { 0 } else { 1 };
            if let Err(e) = deliver(&cli.global, &output.body, out) {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Usage(_)
                | Error::Parse(_)
                | Error::InvalidPath { .. }
                | Error::UnsupportedSurface(_)
                | Error::IndexOutOfRange { .. } => 2,
                _ => 1,
            }
        }
    }
}

struct Output {
    body: String,
    pass: bool,
}

impl Output {
    fn ok(body: String) -> Output {
        Output { body, pass: true }
    }
}

fn is_format_word(s: &str) -> bool {
    matches!(s, "json" | "dot" | "svg" | "text")
}

fn deliver(g: &GlobalArgs, body: &str, out: &mut dyn Write) -> std::io::Result<()> {
    match g.out.as_deref() {
        Some(path) if !is_format_word(path) => std::fs::write(path, body),
        _ => out.write_all(body.as_bytes()),
    }
}

fn format_of(g: &GlobalArgs, default: Format) -> Format {
    match g.out.as_deref() {
        Some("json") => Format::Json,
        Some("dot") => Format::Dot,
        Some("svg") => Format::Svg,
        Some("text") => Format::Text,
        _ => g.format.unwrap_or(default),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Usage(e.to_string()))
}

fn tolerance(g: &GlobalArgs) -> Tolerance {
    Tolerance { corner: g.delta, ..Tolerance::default() }
}

fn execute(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Surface { auxiliary, primed } => {
            let s = build_surface(g.n)?;
            let mut extra = Vec::new();
            if *auxiliary {
                extra.extend(auxiliary_edges(&s));
            }
            if *primed {
                extra.extend(primed_edge_list(&s)?);
            }
            Ok(Output::ok(to_json(&SurfaceJson::new(&s, &extra))?))
        }
        Command::Trace(args) => {
            let s = build_surface(g.n)?;
            let tr = traced(&s, args, g)?;
            let json = args.json || format_of(g, Format::Text) == Format::Json;
            if json {
                Ok(Output::ok(to_json(&trajectory_json(&s, &tr))?))
            } else {
                Ok(Output::ok(s.alphabet().spell(&sides(&tr.letters())) + "\n"))
            }
        }
        Command::Derive { seq, cyclic, method, closure } => derive_command(g, seq, *cyclic, *method, *closure),
        Command::DeriveGeometric(args) => {
            let s = build_surface(g.n)?;
            let tr = traced(&s, args, g)?;
            Ok(Output::ok(to_json(&derive_geometric_json(&s, &tr, tolerance(g))?)?))
        }
        Command::Diagram { stage } => {
            let s = build_surface(g.n)?;
            let d = Pipeline::new(&s)?.diagram(Stage::parse(stage)?);
            match format_of(g, Format::Json) {
                Format::Dot => Ok(Output::ok(d.to_dot())),
                _ => Ok(Output::ok(to_json(&d.to_json())?)),
            }
        }
        Command::Guide => Ok(Output::ok(to_json(&build_vertex_guide(g.n)?)?)),
        Command::Verify { checks } => verify(g, checks),
        Command::Torus { action, slope, theta, x, y, crossings } => {
            torus_command(g, *action, slope.as_deref(), *theta, Point::new(*x, *y), *crossings)
        }
        Command::Render { start, auxiliary, primed, guide } => {
            let s = build_surface(g.n)?;
            let tr = if start.theta.is_some() { Some(traced(&s, start, g)?) } else { None };
            let opts = RenderOptions { auxiliary: *auxiliary, primed: *primed, guide: *guide };
            Ok(Output::ok(render_svg(&s, tr.as_ref(), opts)?))
        }
    }
}

fn sides(letters: &[usize]) -> Vec<Letter> {
    letters.iter().map(|&k| Letter::Side(k)).collect()
}

fn parse_sides(alphabet: &Alphabet, text: &str) -> Result<Vec<usize>> {
    alphabet
        .parse(text)?
        .into_iter()
        .map(|l| match l {
            Letter::Side(k) => Ok(k),
            other => Err(Error::Parse(alphabet.name(other))),
        })
        .collect()
}

fn traced(s: &Surface, args: &StartArgs, g: &GlobalArgs) -> Result<Trajectory> {
    let theta = args.theta.ok_or_else(|| Error::Usage("--theta is required".into()))?;
    let start = match (&args.edge, args.polygon) {
        (Some(edge), None) => {
            let ks = parse_sides(&s.alphabet(), edge)?;
            let [k] = ks[..] else { return Err(Error::Usage(format!("--edge expects one edge, got '{edge}'"))) };
            Start::Edge { edge: k, t: args.t.unwrap_or(0.5) }
        }
        (None, Some(p)) => {
            let (x, y) = args.x.zip(args.y).ok_or_else(|| Error::Usage("--polygon needs --x and --y".into()))?;
            let polygon = match p {
                PolygonArg::Upper => Polygon::Upper,
                PolygonArg::Lower => Polygon::Lower,
            };
            Start::Point { polygon, point: Point::new(x, y) }
        }
        _ => return Err(Error::Usage("give either --edge [--t] or --polygon --x --y".into())),
    };
    trace(s, start, theta, args.crossings, tolerance(g))
}

#[derive(Serialize)]
struct TrajectoryJson {
    n: usize,
    start: Start,
    theta: f64,
    letters: Vec<String>,
    periodic: bool,
    period: Option<usize>,
}

fn trajectory_json(s: &Surface, tr: &Trajectory) -> TrajectoryJson {
    let period = tr.period();
    TrajectoryJson {
        n: s.n(),
        start: tr.start,
        theta: tr.theta,
        letters: s.alphabet().names(&sides(&tr.letters())),
        periodic: period.is_some(),
        period,
    }
}

fn derive_geometric_json(s: &Surface, tr: &Trajectory, tol: Tolerance) -> Result<Value> {
    let (normal, derived) = derive_geometric_any(s, tr, tol)?;
    let ab = s.alphabet();
    let letters = tr.letters();
    let l = letters.len();
    let interior = if l >= 2 { 1..l - 1 } else { 0..0 };
    let aligned = derived.aligned(interior.clone());
    let rule: Vec<(usize, usize)> = sandwiched(&letters, Topology::Window).into_iter().map(|i| (i, letters[i])).collect();
    Ok(json!({
        "n": s.n(),
        "theta": tr.theta,
        "normalized_theta": normal.theta,
        "letters": ab.names(&sides(&letters)),
        "derived": ab.names(&sides(&derived.letters)),
        "aligned": aligned.iter().map(|&(i, k)| json!([i, ab.name(Letter::Side(k))])).collect::<Vec<_>>(),
        "interior_matches_ksl": aligned == rule,
    }))
}

#[derive(Serialize)]
struct WordJson {
    n: Option<usize>,
    method: String,
    topology: Topology,
    input: String,
    output: String,
    letters: Vec<String>,
    status: String,
}

fn derive_command(g: &GlobalArgs, seq: &str, cyclic: bool, method: Method, closure: bool) -> Result<Output> {
    let s = build_surface(g.n)?;
    let ab = s.alphabet();
    let letters = parse_sides(&ab, seq)?;
    let topology = if cyclic { Topology::Cyclic } else { Topology::Window };
    let word = Word { letters: letters.clone(), topology };
    let spell = |w: &[usize]| ab.spell(&sides(w));
    if closure {
        let c = derivability_closure(&word, 64);
        let body = json!({
            "n": g.n,
            "orbit": c.orbit.iter().map(|w| spell(&w.canonical().letters)).collect::<Vec<_>>(),
            "status": c.status,
        });
        return Ok(Output::ok(to_json(&body)?));
    }
    let derived = match method {
        Method::Ksl => ksl(&word),
        Method::Diagram => derive_via_diagrams(&word, &Pipeline::new(&s)?)?,
    }
    .canonical();
    let output = spell(&derived.letters);
    if format_of(g, Format::Text) == Format::Json {
        let body = WordJson {
            n: Some(g.n),
            method: format!("{method:?}").to_lowercase(),
            topology,
            input: spell(&letters),
            output: output.clone(),
            letters: ab.names(&sides(&derived.letters)),
            status: if derived.is_empty() { "empty" } else { "ok" }.into(),
        };
        Ok(Output::ok(to_json(&body)?))
    } else {
        Ok(Output::ok(output + "\n"))
    }
}

fn parse_slope(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::Usage(format!("--slope expects p/q, got '{text}'"));
    let (p, q) = text.split_once('/').ok_or_else(bad)?;
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok((p, q))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn torus_word_json(method: &str, input: &TorusWord, output: &TorusWord) -> WordJson {
    let (input, output) = (input.canonical(), output.canonical());
    WordJson {
        n: None,
        method: method.into(),
        topology: input.topology,
        input: spell_torus(&input.letters),
        output: spell_torus(&output.letters),
        letters: output.letters.iter().map(|l| l.to_string()).collect(),
        status: if output.is_empty() { "empty" } else { "ok" }.into(),
    }
}

fn torus_command(
    g: &GlobalArgs,
    action: TorusAction,
    slope: Option<&str>,
    theta: Option<f64>,
    start: Point,
    crossings: usize,
) -> Result<Output> {
    let (input, derived) = match (slope, theta) {
        (Some(sl), None) => {
            let (p, q) = parse_slope(sl)?;
            let d = gcd(p, q);
            if !(p < q) {
                return Err(Error::Usage("torus slopes must lie in [0, 1)".into()));
            }
            let (p, q) = (p / d, q / d);
            if p == 0 {
                let t = torus_trace(start, 0.0, crossings, g.delta)?;
                let d = torus_derive_geometric(&t, g.delta)?;
                (Word::cyclic(t.letters()), Word::cyclic(d.letters()))
            } else {
                torus_periodic(p, q, g.delta)?
            }
        }
        (None, Some(th)) => {
            let t = torus_trace(start, th, crossings, g.delta)?;
            let derived = if action == TorusAction::Derive {
                let d = torus_derive_geometric(&t, g.delta)?;
                Word::window(derived_between(&t, &d, g.delta))
            } else {
                Word::window(Vec::new())
            };
            (t.window(), derived)
        }
        _ => return Err(Error::Usage("give exactly one of --slope p/q or --theta".into())),
    };
    let body = match action {
        TorusAction::Trace => torus_word_json("trace", &input, &input),
        TorusAction::Derive => {
            let rule = torus_derive_rule(&input);
            let mut j = serde_json::to_value(torus_word_json("geometric", &input, &derived))
                .map_err(|e| Error::Usage(e.to_string()))?;
            j["rule"] = json!(spell_torus(&rule.canonical().letters));
            j["rule_matches_geometric"] = json!(rule == derived);
            return Ok(Output::ok(to_json(&j)?));
        }
    };
    Ok(Output::ok(to_json(&body)?))
}

const ALL_CHECKS: [&str; 5] = ["identities", "moduli", "reassembly", "equivalence", "geometric"];

fn verify(g: &GlobalArgs, checks: &str) -> Result<Output> {
    let names: Vec<&str> = checks.split(',').map(str::trim).filter(|c| !c.is_empty()).collect();
    if let Some(bad) = names.iter().find(|c| !ALL_CHECKS.contains(c)) {
        return Err(Error::Usage(format!("unknown check '{bad}' (valid: {})", ALL_CHECKS.join(","))));
    }
    build_surface(g.n)?;
    let extended = extended_requested();
    let results: Vec<(String, Result<Value>)> = names
        .par_iter()
        .enumerate()
        .map(|(i, &name)| (name.to_string(), run_check(g, name, g.seed.wrapping_add(i as u64), extended)))
        .collect();
    let mut map = serde_json::Map::new();
    let mut pass = true;
    for (name, r) in results {
        let v = r?;
        pass &= v["pass"].as_bool().unwrap_or(false);
        map.insert(name, v);
    }
    let body = json!({
        "n": g.n,
        "tol": g.tol,
        "seed": g.seed,
        "precision": if extended { "extended" } else { "double" },
        "pass": pass,
        "checks": Value::Object(map),
    });
    Ok(Output { body: to_json(&body)?, pass })
}

fn run_check(g: &GlobalArgs, name: &str, seed: u64, extended: bool) -> Result<Value> {
    let n = g.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "identities" => {
            let tol = g.tol.unwrap_or(1e-10);
            let samples = g.samples.unwrap_or(1000);
            let mut max_dev: f64 = 0.0;
            for _ in 0..samples {
                let theta = rng.gen_range(0.01..std::f64::consts::PI - 0.01);
                let k = rng.gen_range(1..=12);
                let (a, b) = telescoping_identity(theta, k)?;
                let (c, d) = identity_sum(theta, k)?;
                max_dev = max_dev.max((a - b).abs()).max((c - d).abs());
            }
            Ok(json!({ "pass": max_dev < tol, "samples": samples, "max_dev": max_dev }))
        }
        "moduli" => {
            let tol = g.tol.unwrap_or(1e-10);
            let s = build_surface(n)?;
            let want = if extended { Extended::new().shear_modulus(n) } else { shear_modulus(n) };
            let moduli: Vec<f64> = decompose_cylinders(&s).iter().map(|c| c.modulus).collect();
            let max_dev = moduli.iter().map(|m| (m - want).abs()).fold(0.0, f64::max);
            Ok(json!({ "pass": max_dev < tol, "max_dev": max_dev, "moduli": moduli, "expected": want }))
        }
        "reassembly" => {
            let tol = g.tol.unwrap_or(1e-8);
            let report = if extended {
                let ext = RefCell::new(Extended::new());
                let f = |fam, k| ext.borrow_mut().sheared_vertex(fam, n, k).1;
                verify_reassembly_with(n, tol, Some(&f))?
            } else {
                verify_reassembly_with(n, tol, None)?
            };
            Ok(json!({
                "pass": report.pass,
                "max_residual": report.max_residual,
                "worst_vertex": report.worst_vertex,
                "y_bit_identical": report.y_bit_identical,
            }))
        }
        "equivalence" => {
            let s = build_surface(n)?;
            let fragments: Vec<Vec<usize>> = if n == 7 { heptagon_fragments() } else { Vec::new() };
            let r = sandwich_equivalence_check(&s, 10, g.samples.unwrap_or(10_000), 30, &fragments, &mut rng)?;
            serde_json::to_value(r).map_err(|e| Error::Usage(e.to_string()))
        }
        "geometric" => {
            let s = build_surface(n)?;
            let samples = g.samples.unwrap_or(200);
            let mut mismatches = 0;
            let mut first: Option<Value> = None;
            for _ in 0..samples {
                let tr = random_trajectory(&s, &mut rng, 80, tolerance(g));
                let letters = tr.letters();
                let d = derive_geometric(&s, &tr)?;
                let got = d.aligned(1..letters.len() - 1);
                let want: Vec<(usize, usize)> =
                    sandwiched(&letters, Topology::Window).into_iter().map(|i| (i, letters[i])).collect();
                if got != want {
                    mismatches += 1;
                    first.get_or_insert(json!({ "theta": tr.theta, "start": tr.start, "letters": letters }));
                }
            }
            Ok(json!({ "pass": mismatches == 0, "trajectories": samples, "mismatches": mismatches, "first_mismatch": first }))
        }
        _ => unreachable!("check names are validated"),
    }
}

/// The twelve three-letter heptagon fragments whose middle letter is either
/// sandwiched (first six) or not.
pub fn heptagon_fragments() -> Vec<Vec<usize>> {
    ["GBG", "CGC", "FCF", "FDF", "CFC", "GCG", "BGC", "GCF", "CFD", "DFC", "FCG", "CGB"]
        .iter()
        .map(|f| f.bytes().map(|b| (b - b'A' + 1) as usize).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("oddgon").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn derive_examples() {
        assert_eq!(run_str(&["derive", "--seq", "BECE", "--cyclic", "--n", "5"]).1, "BC\n");
        let (code, out, _) = run_str(&["derive", "--seq", "ABC", "--cyclic", "--n", "5", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["status"], "empty");
        assert_eq!(v["output"], "");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["bogus"]).0, 2);
        assert_eq!(run_str(&["derive", "--seq", "AC", "--n", "5", "--method", "diagram"]).0, 2);
        assert_eq!(run_str(&["verify", "--checks", "nonsense"]).0, 2);
        assert_eq!(run_str(&["surface", "--n", "6"]).0, 2);
    }

    #[test]
    fn diagram_out_alias() {
        let (code, out, _) = run_str(&["diagram", "--n", "5", "--stage", "primed", "--out", "dot"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("digraph primed"));
    }
}
