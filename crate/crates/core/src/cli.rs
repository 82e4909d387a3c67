//! Command-line front end. `run` is the whole program minus process exit.

use std::fs;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::eval::{eval_instantiated, EvalOptions, Instantiation};
use crate::monoid::{normalize_checked, word_eq, Word, WordEq};
use crate::polyfun::{CompMode, Orientation, PolyFun};
use crate::prederiv::{self, GermCore, PreDeriv};
use crate::rational::{fmt_q, parse_q, Q};
use crate::relations::{check_all, check_relation, check_word_relation, RelationReport};
use crate::tangent;
use crate::term::{classify, has_left_nested_comp, max_augment, parse_term, signature, Env, Term};

pub const DEFAULT_SEED: u64 = 20240611;

/// Exit status for malformed input, type errors and failed guards.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit status when a verification reports a failure.
pub const EXIT_VERIFY: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "intdiff",
    version,
    about = "Exact integro-differential word calculus"
)]
pub struct Cli {
    /// Emit JSON instead of text (errors included).
    #[arg(long, global = true)]
    pub json: bool,
    /// Declarations file: `name : <box>` for opaques, `name = <polyfun>` for smooth names.
    #[arg(long, global = true, value_name = "FILE")]
    pub env: Option<String>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Parse a term and print it back.
    Parse { term: String },
    /// Signature and continuity class of a term.
    Typecheck {
        term: String,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
    },
    /// Normal form of a word.
    NormalizeWord { word: String },
    /// Decide equality of two words.
    WordEq {
        a: String,
        b: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Right-associate every composition chain.
    NormalizeTerm { term: String },
    /// Evaluate a term to a polynomial function.
    Eval {
        term: String,
        /// `name=<polyfun>` assignment for an opaque leaf; repeatable.
        #[arg(long = "assign", value_name = "NAME=POLY")]
        assign: Vec<String>,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "ftc")]
        orientation: Orient,
    },
    /// Randomized exact verification of the relation catalogue.
    CheckRelations(CheckArgs),
    /// Pre-derivation queries.
    Prederiv {
        #[command(subcommand)]
        op: PreOp,
    },
    /// Sample the combing field of the sphere; CSV plus a summary line.
    CombSphere {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = tangent::DEFAULT_EPS)]
        eps: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Restrict to these rule ids; repeatable.
    #[arg(long = "rule")]
    pub rules: Vec<String>,
    #[arg(long, value_enum, default_value = "ftc")]
    pub orientation: Orient,
    /// Also check the defining relations of the word monoid.
    #[arg(long)]
    pub words: bool,
    /// JSON report path; written on failure, or always when given.
    #[arg(long, value_name = "FILE")]
    pub report: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum PreOp {
    /// `D(w)` for a scalar polynomial `w`.
    Apply {
        d: String,
        w: String,
    },
    /// Push-forward along a pointed map.
    PreDiff {
        f: String,
        d: String,
    },
    EvalSmooth {
        d: String,
    },
    ChainCheck {
        f: String,
        d: String,
    },
    /// Vanishing directions of a core.
    Vanishing {
        core: String,
    },
    Canonical {
        core: String,
        u: String,
    },
    KernelTest {
        d: String,
    },
    /// Iterated-integral witness for direction `u` and index `ell`.
    Witness {
        l: usize,
        ell: usize,
        u: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Strict,
    Permissive,
}

impl From<Mode> for CompMode {
    fn from(m: Mode) -> CompMode {
        match m {
            Mode::Strict => CompMode::Strict,
            Mode::Permissive => CompMode::Permissive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Orient {
    Ftc,
    Swapped,
}

impl From<Orient> for Orientation {
    fn from(o: Orient) -> Orientation {
        match o {
            Orient::Ftc => Orientation::Ftc,
            Orient::Swapped => Orientation::Swapped,
        }
    }
}

/// What a command produced: text, its JSON form, and whether a check failed.
struct Output {
    text: String,
    json: Value,
    failed: bool,
}

impl Output {
    fn ok(text: String, json: Value) -> Output {
        Output {
            text,
            json,
            failed: false,
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stderr: &'a mut dyn Write,
    stdin_used: bool,
}

impl Io<'_> {
    /// `-` reads stdin (once).
    fn text(&mut self, arg: &str) -> Result<String> {
        if arg != "-" {
            return Ok(arg.to_string());
        }
        if self.stdin_used {
            return Err(Error::Invalid("stdin can be read only once".into()));
        }
        self.stdin_used = true;
        let mut s = String::new();
        self.stdin
            .read_to_string(&mut s)
            .map_err(|e| Error::Invalid(format!("reading stdin: {e}")))?;
        Ok(s.trim().to_string())
    }

    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.stderr, "{msg}");
    }
}

fn load_env(path: Option<&str>) -> Result<Env> {
    match path {
        None => Ok(Env::default()),
        Some(p) => {
            let src = fs::read_to_string(p)
                .map_err(|e| Error::Invalid(format!("reading env `{p}`: {e}")))?;
            Env::parse(&src)
        }
    }
}

fn parse_vector(s: &str) -> Result<Vec<Q>> {
    let body = s
        .trim()
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected `(a, b, ...)`, got `{s}`")))?;
    if body.trim().is_empty() {
        return Ok(vec![]);
    }
    body.split(',').map(|c| parse_q(c.trim())).collect()
}

fn fmt_vector(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_q).collect();
    format!("({})", parts.join(", "))
}

fn vector_json(v: &[Q]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(fmt_q(x))).collect())
}

fn term_json(t: &Term) -> Value {
    serde_json::to_value(t.to_json()).expect("serializable")
}

fn poly_json(f: &PolyFun) -> Value {
    serde_json::to_value(f.to_json()).expect("serializable")
}

fn report_json(r: &[RelationReport]) -> Value {
    serde_json::to_value(r).expect("serializable")
}

fn parse_assignments(items: &[String]) -> Result<Instantiation> {
    items
        .iter()
        .map(|a| {
            let (name, poly) = a
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected NAME=POLY, got `{a}`")))?;
            Ok((name.trim().to_string(), poly.parse()?))
        })
        .collect()
}

fn dispatch(cli: &Cli, io: &mut Io) -> Result<Output> {
    let env = || load_env(cli.env.as_deref());
    match &cli.cmd {
        Cmd::Parse { term } => {
            let t = parse_term(&io.text(term)?, &env()?)?;
            Ok(Output::ok(t.to_string(), term_json(&t)))
        }
        Cmd::Typecheck { term, mode } => {
            let t = parse_term(&io.text(term)?, &env()?)?;
            let sig = signature(&t, (*mode).into())?;
            let class = classify(&t);
            Ok(Output::ok(
                format!("{sig} {class}"),
                json!({ "dom": sig.dom, "cod": sig.cod, "class": class }),
            ))
        }
        Cmd::NormalizeWord { word } => {
            let w: Word = io.text(word)?.parse()?;
            let (nf, complete) = normalize_checked(&w);
            if !complete {
                io.note("warning: class search hit its cap; result is the best form found");
            }
            Ok(Output::ok(
                nf.to_string(),
                json!({ "input": w, "normal_form": nf, "complete": complete }),
            ))
        }
        Cmd::WordEq { a, b, seed } => {
            let (wa, wb): (Word, Word) = (io.text(a)?.parse()?, io.text(b)?.parse()?);
            io.note(&format!("seed={seed}"));
            let r = word_eq(&wa, &wb, *seed);
            let js = match &r {
                WordEq::Equal => json!({ "result": "Equal" }),
                WordEq::NotEqual(f) => json!({ "result": "NotEqual", "witness": poly_json(f) }),
                WordEq::Unknown => json!({ "result": "Unknown" }),
            };
            Ok(Output {
                text: r.to_string(),
                json: js,
                failed: r == WordEq::Unknown,
            })
        }
        Cmd::NormalizeTerm { term } => {
            let t = parse_term(&io.text(term)?, &env()?)?;
            let n = max_augment(&t);
            debug_assert!(!has_left_nested_comp(&n));
            Ok(Output::ok(n.to_string(), term_json(&n)))
        }
        Cmd::Eval {
            term,
            assign,
            mode,
            orientation,
        } => {
            let t = parse_term(&io.text(term)?, &env()?)?;
            let opts = EvalOptions {
                mode: (*mode).into(),
                orientation: (*orientation).into(),
            };
            let f = eval_instantiated(&t, &parse_assignments(assign)?, opts)?;
            Ok(Output::ok(f.to_string(), poly_json(&f)))
        }
        Cmd::CheckRelations(args) => check_relations(args, io),
        Cmd::Prederiv { op } => prederiv_op(op, io),
        Cmd::CombSphere { n, grid, eps, out } => {
            let rep = tangent::comb_sweep(*n, *grid, *eps)?;
            let summary = rep.summary();
            let js = json!({
                "n": rep.n, "grid": rep.grid, "eps": rep.eps,
                "vanishing_radius": rep.vanishing_radius,
                "min_projection": rep.min_projection,
                "min_certificate": rep.min_certificate,
                "points": rep.samples.len(),
            });
            let text = match out {
                Some(p) => {
                    fs::write(p, rep.csv())
                        .map_err(|e| Error::Invalid(format!("writing `{p}`: {e}")))?;
                    summary
                }
                None => {
                    io.note(&summary);
                    rep.csv().trim_end().to_string()
                }
            };
            Ok(Output::ok(text, js))
        }
    }
}

fn check_relations(args: &CheckArgs, io: &mut Io) -> Result<Output> {
    io.note(&format!("seed={}", args.seed));
    let o: Orientation = args.orientation.into();
    let mut reports = if args.rules.is_empty() {
        check_all(args.trials, args.seed, o)
    } else {
        args.rules
            .iter()
            .map(|r| check_relation(r, args.trials, args.seed, o))
            .collect::<Result<Vec<_>>>()?
    };
    if args.words {
        for r in crate::monoid::relations() {
            reports.push(check_word_relation(r.name, args.trials, args.seed, o)?);
        }
    }
    let failed = reports.iter().any(|r| !r.verified());
    if failed || args.report.is_some() {
        let path = args.report.as_deref().unwrap_or("relations-report.json");
        let body = serde_json::to_string_pretty(&reports).expect("serializable");
        fs::write(path, body).map_err(|e| Error::Invalid(format!("writing `{path}`: {e}")))?;
        io.note(&format!("report written to {path}"));
    }
    let text: Vec<String> = reports.iter().map(RelationReport::line).collect();
    Ok(Output {
        text: text.join("\n"),
        json: report_json(&reports),
        failed,
    })
}

fn prederiv_op(op: &PreOp, io: &mut Io) -> Result<Output> {
    let pd = |io: &mut Io, s: &str| -> Result<PreDeriv> { io.text(s)?.parse() };
    let pf = |io: &mut Io, s: &str| -> Result<PolyFun> { io.text(s)?.parse() };
    Ok(match op {
        PreOp::Apply { d, w } => {
            let (d, w) = (pd(io, d)?, pf(io, w)?);
            let gs = prederiv::apply(&d, &w)?;
            let text: Vec<String> = gs.iter().map(ToString::to_string).collect();
            Output::ok(
                text.join("\n"),
                Value::Array(gs.iter().map(poly_json).collect()),
            )
        }
        PreOp::PreDiff { f, d } => {
            let (f, d) = (pf(io, f)?, pd(io, d)?);
            let r = prederiv::pre_diff(&f, &d)?;
            Output::ok(r.to_string(), json!({ "prederiv": r.to_string() }))
        }
        PreOp::EvalSmooth { d } => {
            let v = prederiv::eval_smooth(&pd(io, d)?);
            Output::ok(fmt_vector(&v), vector_json(&v))
        }
        PreOp::ChainCheck { f, d } => {
            let (f, d) = (pf(io, f)?, pd(io, d)?);
            let ok = prederiv::chain_check(&f, &d)?;
            Output {
                text: ok.to_string(),
                json: json!({ "holds": ok }),
                failed: !ok,
            }
        }
        PreOp::Vanishing { core } => {
            let z = GermCore::new(pf(io, core)?)?;
            let basis = prederiv::vanishing_space(&z);
            let text: Vec<String> = basis.iter().map(|b| fmt_vector(b)).collect();
            Output::ok(
                format!("{{{}}}", text.join(", ")),
                Value::Array(basis.iter().map(|b| vector_json(b)).collect()),
            )
        }
        PreOp::Canonical { core, u } => {
            let z = GermCore::new(pf(io, core)?)?;
            let v = prederiv::canonical_direction(&z, &parse_vector(u)?)?;
            Output::ok(fmt_vector(&v), vector_json(&v))
        }
        PreOp::KernelTest { d } => {
            let ok = prederiv::smooth_kernel_test(&pd(io, d)?);
            Output::ok(ok.to_string(), json!({ "in_kernel": ok }))
        }
        PreOp::Witness { l, ell, u } => {
            let u = parse_vector(u)?;
            let f = prederiv::nontriviality_witness(*l, *ell, &u)?;
            let ok =
                u.len() == *l && f.components()[0] == prederiv::nontriviality_product(*l, *ell, &u);
            Output {
                text: f.to_string(),
                json: json!({ "witness": poly_json(&f), "matches_product": ok }),
                failed: !ok,
            }
        }
    })
}

fn error_json(e: &Error) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

/// Runs the program on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, S>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_DOMAIN } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let mut io = Io {
        stdin,
        stderr,
        stdin_used: false,
    };
    match dispatch(&cli, &mut io) {
        Ok(out) => {
            let _ = if cli.json {
                writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string(&out.json).expect("serializable")
                )
            } else {
                writeln!(stdout, "{}", out.text)
            };
            if out.failed {
                EXIT_VERIFY
            } else {
                0
            }
        }
        Err(e) => {
            let _ = if cli.json {
                writeln!(stdout, "{}", error_json(&e))
            } else {
                writeln!(io.stderr, "error: {e}")
            };
            EXIT_DOMAIN
        }
    }
}
