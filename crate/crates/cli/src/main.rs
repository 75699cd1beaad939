use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use orbirig::cellmodel::{CellModel, ModelError};
use orbirig::charpair::{CharPairError, CharacteristicPair};
use orbirig::lensoracle::{verify_lens_proposition, LensError};
use orbirig::properiso::{classify, decide, ClassificationReport};
use orbirig::selfcheck::{commutator_calculus, lens_properties, pontryagin_axioms, SuiteReport};

/// Homotopy classification of 4-dimensional cell models and toric orbifolds.
#[derive(Parser, Debug)]
#[command(name = "orbirig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariants of a characteristic pair given as JSON.
    Analyze { path: PathBuf },
    /// Decide proper isomorphism and homotopy equivalence of two models.
    Decide {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 3)]
        bound: u32,
    },
    /// Classify every model with the given shape and entries of A in a range.
    Classify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        g: u64,
        /// Inclusive range for the entries of A, written lo..hi.
        #[arg(long = "a-range", value_parser = parse_range, allow_hyphen_values = true)]
        a_range: (i64, i64),
        /// Keep only models with even diagonal and a toric witness class.
        #[arg(long)]
        toric_only: bool,
        #[arg(long, default_value_t = 3)]
        bound: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here; a matching report already there is reused.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the cohomology and Postnikov squares of a lens space.
    LensVerify {
        #[arg(long)]
        b: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, default_value_t = 3)]
        s_max: u32,
    },
    /// Run the built-in invariant suites.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower end {lo:?}: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper end {hi:?}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Domain(_) => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<CharPairError> for Failure {
    fn from(e: CharPairError) -> Self {
        match &e {
            CharPairError::Invalid(report) => Failure::Input(format!(
                "invalid characteristic pair: {}",
                serde_json::to_string(report).unwrap_or_else(|_| e.to_string())
            )),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<LensError> for Failure {
    fn from(e: LensError) -> Self {
        match e {
            LensError::Internal(_) => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct AnalyzeOutput {
    m: usize,
    n: usize,
    g: u128,
    r: u32,
    vertex_dets: Vec<u128>,
    special_vertex: Option<usize>,
}

fn analyze(path: &Path) -> CmdResult {
    let pair = CharacteristicPair::from_json(&read(path)?)?;
    let inv = pair.invariants()?;
    let special_vertex = if inv.g % 2 == 0 {
        match pair.find_special_vertex()? {
            Some(v) => Some(v),
            None => {
                return Err(Failure::Internal(format!(
                    "no special vertex although g = {} is even",
                    inv.g
                )))
            }
        }
    } else {
        None
    };
    let out = AnalyzeOutput {
        m: inv.m,
        n: inv.n,
        g: inv.g,
        r: inv.r,
        vertex_dets: inv.vertex_dets,
        special_vertex,
    };
    println!("{}", to_json(&out)?);
    Ok(())
}

fn decide_cmd(a: &Path, b: &Path, bound: u32) -> CmdResult {
    let x = CellModel::from_json(&read(a)?)?;
    let xp = CellModel::from_json(&read(b)?)?;
    let verdict = decide(&x, &xp, bound)?;
    println!("{}", to_json(&verdict)?);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ClassifyParams {
    n: usize,
    g: u64,
    a_range: (i64, i64),
    toric_only: bool,
    bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Summary {
    model_count: usize,
    pi_class_count: usize,
    he_class_count: usize,
    max_h: usize,
    /// `h = 1` everywhere for odd `g`, `h ≤ 2` otherwise.
    h_bound_holds: bool,
    /// `h = 1` everywhere; the expected outcome for toric families.
    all_h_one: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ClassifyOutput {
    params: ClassifyParams,
    summary: Summary,
    #[serde(flatten)]
    report: ClassificationReport,
}

fn family(p: &ClassifyParams) -> Result<Vec<CellModel>, Failure> {
    if p.g == 0 {
        return Err(Failure::Input("g must be positive".into()));
    }
    let (lo, hi) = p.a_range;
    let slots: Vec<(usize, usize)> = (0..p.n).flat_map(|j| (j..p.n).map(move |k| (j, k))).collect();
    let span = (hi - lo + 1) as u128;
    let c_mod = if p.g % 2 == 0 { 2 * p.g } else { p.g };
    let total = span
        .checked_pow(slots.len() as u32)
        .and_then(|x| x.checked_mul((p.g as u128).checked_pow(p.n as u32)?))
        .and_then(|x| x.checked_mul(c_mod as u128));
    match total {
        Some(t) if t <= 2_000_000 => {}
        _ => {
            return Err(Failure::Input(
                "enumeration too large; narrow --a-range or lower --n".into(),
            ))
        }
    }
    let mut out = Vec::new();
    // toric witnesses live in the 2-primary part, so odd g has none
    if p.toric_only && p.g % 2 == 1 {
        return Ok(out);
    }
    let mut a_vals = vec![lo; slots.len()];
    loop {
        let mut a = vec![vec![0i64; p.n]; p.n];
        for (&(j, k), &v) in slots.iter().zip(&a_vals) {
            a[j][k] = v;
        }
        let mut b = vec![0i64; p.n];
        loop {
            for c in 0..c_mod as i64 {
                let m = CellModel::from_rows(p.n, p.g, a.clone(), b.clone(), c)?;
                if !p.toric_only || (m.has_even_diagonal() && m.toric_witness_exists()?) {
                    out.push(m);
                }
            }
            if !odometer(&mut b, 0, p.g as i64 - 1) {
                break;
            }
        }
        if !odometer(&mut a_vals, lo, hi) {
            break;
        }
    }
    Ok(out)
}

// Advances `v` as a little-endian counter with digits in lo..=hi.
fn odometer(v: &mut [i64], lo: i64, hi: i64) -> bool {
    for d in v.iter_mut() {
        if *d < hi {
            *d += 1;
            return true;
        }
        *d = lo;
    }
    false
}

fn run_classify(params: ClassifyParams) -> Result<ClassifyOutput, Failure> {
    let models = family(&params)?;
    if models.is_empty() {
        return Err(Failure::Input("no models in the requested range".into()));
    }
    let report = classify(&models, params.bound)?;
    let max_h = report.h_values.iter().copied().max().unwrap_or(0);
    let limit = if params.g % 2 == 1 { 1 } else { 2 };
    let summary = Summary {
        model_count: report.models.len(),
        pi_class_count: report.pi_classes.len(),
        he_class_count: report.he_classes.len(),
        max_h,
        h_bound_holds: max_h <= limit,
        all_h_one: max_h == 1,
    };
    Ok(ClassifyOutput {
        params,
        summary,
        report,
    })
}

#[derive(Serialize)]
struct CsvRow {
    model: usize,
    n: usize,
    g: u64,
    #[serde(rename = "A")]
    a: String,
    b: String,
    c: i64,
    pi_class: usize,
    he_class: usize,
    h: usize,
}

fn to_csv(out: &ClassifyOutput) -> Result<String, Failure> {
    let r = &out.report;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, m) in r.models.iter().enumerate() {
        let pi = r
            .pi_class_of(i)
            .ok_or_else(|| Failure::Internal(format!("model {i} has no class")))?;
        let he = r
            .he_class_of(i)
            .ok_or_else(|| Failure::Internal(format!("model {i} has no class")))?;
        w.serialize(CsvRow {
            model: i,
            n: m.n(),
            g: m.g(),
            a: serde_json::to_string(m.a()).map_err(|e| Failure::Internal(e.to_string()))?,
            b: serde_json::to_string(m.b()).map_err(|e| Failure::Internal(e.to_string()))?,
            c: m.c(),
            pi_class: pi,
            he_class: he,
            h: r.h_values[pi],
        })
        .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Internal(e.to_string()))
}

fn cached(path: &Path, params: &ClassifyParams) -> Option<ClassifyOutput> {
    let text = fs::read_to_string(path).ok()?;
    let out: ClassifyOutput = serde_json::from_str(&text).ok()?;
    (out.params == *params).then_some(out)
}

fn classify_cmd(params: ClassifyParams, format: Format, out: Option<&Path>) -> CmdResult {
    // the cache is the JSON report; a CSV --out is always recomputed
    let reuse = match (out, format) {
        (Some(path), Format::Json) => cached(path, &params),
        _ => None,
    };
    let result = match reuse {
        Some(r) => {
            eprintln!("reusing {}", out.map(Path::display).expect("cache path").to_string());
            r
        }
        None => run_classify(params)?,
    };
    let text = match format {
        Format::Json => to_json(&result)? + "\n",
        Format::Csv => to_csv(&result)?,
    };
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn lens_verify(b: u64, a: i64, s_max: u32) -> CmdResult {
    let report = verify_lens_proposition(b, a, s_max)?;
    println!("{}", to_json(&report)?);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Internal("lens verification failed".into()))
    }
}

#[derive(Serialize)]
struct SuiteLine<'a> {
    name: &'a str,
    cases: u64,
    failures: usize,
    passed: bool,
}

fn selftest(seed: u64, quick: bool) -> CmdResult {
    let suites: Vec<SuiteReport> = if quick {
        vec![
            pontryagin_axioms(seed, 100),
            commutator_calculus(&[2], &[0, 2, -2]),
            lens_properties(seed, true),
        ]
    } else {
        vec![
            pontryagin_axioms(seed, 1000),
            commutator_calculus(&[2, 4, 6], &[0, 2, -2]),
            lens_properties(seed, false),
        ]
    };
    let lines: Vec<SuiteLine> = suites
        .iter()
        .map(|s| SuiteLine {
            name: &s.name,
            cases: s.cases,
            failures: s.failures.len(),
            passed: s.passed(),
        })
        .collect();
    println!("{}", to_json(&lines)?);
    match suites.iter().find(|s| !s.passed()) {
        None => Ok(()),
        Some(s) => Err(Failure::Internal(format!(
            "suite {} failed: {}",
            s.name,
            s.failures.first().map(String::as_str).unwrap_or("no cases ran")
        ))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Analyze { path } => analyze(&path),
        Command::Decide { a, b, bound } => decide_cmd(&a, &b, bound),
        Command::Classify {
            n,
            g,
            a_range,
            toric_only,
            bound,
            format,
            out,
        } => classify_cmd(
            ClassifyParams {
                n,
                g,
                a_range,
                toric_only,
                bound,
            },
            format,
            out.as_deref(),
        ),
        Command::LensVerify { b, a, s_max } => lens_verify(b, a, s_max),
        Command::Selftest { seed, quick } => selftest(seed, quick),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(msg) | Failure::Internal(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
