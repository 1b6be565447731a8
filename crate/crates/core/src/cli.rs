//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 success, 2 unreadable or non-unitary input, 3 synthesis
//! failure, 4 verification below threshold.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::cartan::{kak_decompose, local_invariants};
use crate::error::Error;
use crate::gates::{builtin_gates, lookup};
use crate::json::sig12;
use crate::matrix::{c, parse_unitary_json, BasisState, StateVec4, Unitary4, CONSTRUCTION_TOL, INGEST_TOL};
use crate::optimize::compile_optimized;
use crate::photonic::{compile, surface_count, transmission, ComponentCatalog, CnotImpl, ElementKind, Recipe};
use crate::sim::{apply_state, simulate_unitary, verify};
use crate::synth::{cnot_class, synth_u4};

/// Reports with fidelity below `1 − VERIFY_SLACK` exit with code 4.
pub const VERIFY_SLACK: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SYNTHESIS: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "photonic-u4", version, about = "Compile two-qubit polarization/OAM unitaries into optical recipes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weyl coordinates, CNOT class and local invariants of a unitary.
    Classify(Source),
    /// Synthesize and lower a unitary to an optical recipe.
    Compile(CompileArgs),
    /// Check a recipe against a target unitary.
    Verify {
        #[arg(long)]
        recipe: PathBuf,
        /// Built-in gate name or unitary JSON file.
        #[arg(long)]
        target: String,
    },
    /// Apply a recipe to an input state.
    Simulate {
        #[arg(long)]
        recipe: PathBuf,
        /// h+, h-, v+, v-, or a JSON array of four [re, im] pairs.
        #[arg(long, default_value = "h+")]
        state: String,
    },
    /// List the built-in gates.
    Gates,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "auto", value_parser = parse_impl)]
    cnot_impl: CnotImpl,
    #[arg(long, default_value_t = 0.01)]
    reflectance: f64,
    /// Override a surface count, e.g. `--surfaces hwp=3` (repeatable).
    #[arg(long, value_name = "KIND=N")]
    surfaces: Vec<String>,
    /// Write the recipe JSON here; without it the JSON goes to stdout
    /// and the table to stderr.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Skip the surface-reduction pass (faster, usually more surfaces).
    #[arg(long)]
    no_optimize: bool,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in gate (see `gates`).
    #[arg(long)]
    gate: Option<String>,
    /// Unitary JSON file: {"matrix": [[[re, im] x 4] x 4]}.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn parse_impl(s: &str) -> Result<CnotImpl, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_INPUT, message: e.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

fn load_unitary(source: &Source, err: &mut dyn Write) -> Result<Unitary4, Failure> {
    if let Some(name) = &source.gate {
        return lookup(name)
            .map(|g| g.unitary)
            .ok_or_else(|| Failure::input(format!("unknown gate {name:?}; run `photonic-u4 gates` for the list")));
    }
    let path = source.input.as_ref().expect("clap enforces exactly one source");
    load_unitary_file(path, err)
}

fn load_unitary_file(path: &PathBuf, err: &mut dyn Write) -> Result<Unitary4, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let ingested = parse_unitary_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if let Some(dev) = ingested.reorthonormalized {
        let _ = writeln!(
            err,
            "note: {} deviates from unitarity by {dev:.3e} (> {CONSTRUCTION_TOL:.0e}); replaced by the nearest unitary",
            path.display()
        );
    }
    Ok(ingested.unitary)
}

fn load_recipe(path: &PathBuf) -> Result<Recipe, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Recipe::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_state(s: &str, err: &mut dyn Write) -> Result<StateVec4, Failure> {
    if let Some(b) = BasisState::parse(s) {
        return Ok(StateVec4::basis(b));
    }
    let pairs: Vec<[f64; 2]> = serde_json::from_str(s)
        .map_err(|_| Failure::input(format!("state {s:?} is neither h+, h-, v+, v- nor a JSON array of [re, im] pairs")))?;
    if pairs.len() != 4 || pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Failure::input("a custom state needs four finite [re, im] pairs"));
    }
    let amps: [_; 4] = std::array::from_fn(|i| c(pairs[i][0], pairs[i][1]));
    let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let deviation = (norm2 - 1.0).abs();
    if deviation > INGEST_TOL {
        return Err(Failure::input(Error::NotNormalized { deviation, tolerance: INGEST_TOL }));
    }
    if deviation > CONSTRUCTION_TOL {
        let _ = writeln!(err, "note: state norm^2 deviates from 1 by {deviation:.3e}; renormalized");
    }
    StateVec4::normalized(amps.map(|z| z / norm2.sqrt())).map_err(Failure::input)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn cmd_gates(out: &mut dyn Write) -> CmdResult {
    for g in builtin_gates() {
        let _ = writeln!(out, "{:<14} {}", g.name, g.description);
    }
    Ok(EXIT_OK)
}

fn cmd_classify(source: &Source, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let u = load_unitary(source, err)?;
    let kak = kak_decompose(&u).map_err(|e| Failure { code: EXIT_SYNTHESIS, message: e.to_string() })?;
    let class = cnot_class(&kak.coords).map_err(|e| Failure { code: EXIT_SYNTHESIS, message: e.to_string() })?;
    let inv = local_invariants(&u);
    let report = json!({
        "coords": kak.coords,
        "cnot_class": class.count(),
        "local_invariants": { "g1": [sig12(inv.g1.re), sig12(inv.g1.im)], "g2": sig12(inv.g2) },
    });
    let _ = writeln!(out, "{}", pretty(&report));
    Ok(EXIT_OK)
}

fn build_catalog(reflectance: f64, overrides: &[String]) -> Result<ComponentCatalog, Failure> {
    let mut catalog = ComponentCatalog::with_reflectance(reflectance).map_err(Failure::input)?;
    for o in overrides {
        let (kind, n) = o.split_once('=').ok_or_else(|| Failure::input(format!("--surfaces expects KIND=N, got {o:?}")))?;
        let kind = ElementKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(kind.trim()))
            .ok_or_else(|| Failure::input(format!("unknown element kind {kind:?}")))?;
        let n: u32 = n.trim().parse().map_err(|_| Failure::input(format!("surface count {n:?} is not a nonnegative integer")))?;
        catalog.set_surfaces(kind, n);
    }
    Ok(catalog)
}

/// Human-readable recipe listing with a summary trailer.
pub fn recipe_table(r: &Recipe) -> String {
    let mut s = format!("{:>3}  {:<18} {:>16} {:>14} {:>8}\n", "#", "element", "param (rad)", "param (deg)", "surfaces");
    for (i, e) in r.elements.iter().enumerate() {
        let (rad, deg) = match e.parameter() {
            Some(p) => (format!("{}", sig12(p)), format!("{}", sig12(p.to_degrees()))),
            None => ("-".into(), "-".into()),
        };
        s += &format!(
            "{:>3}  {:<18} {:>16} {:>14} {:>8}\n",
            i + 1,
            e.kind().name(),
            rad,
            deg,
            r.catalog.surfaces_of(e.kind())
        );
    }
    s += &format!("CNOTs: {}\n", r.cnot_count());
    s += &format!("surfaces: {}\n", surface_count(r));
    s += &format!("transmission: {} (reflectance {})\n", sig12(transmission(r)), sig12(r.catalog.reflectance));
    s
}

fn cmd_compile(args: &CompileArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let how = args.cnot_impl;
    let catalog = build_catalog(args.reflectance, &args.surfaces)?;
    let u = load_unitary(&args.source, err)?;
    let synth_failure = |e: Error| Failure { code: EXIT_SYNTHESIS, message: format!("synthesis failed: {e}") };
    let circuit = synth_u4(&u).map_err(synth_failure)?;
    let recipe = if !args.no_optimize {
        compile_optimized(&circuit, how, &catalog)
    } else {
        compile(&circuit, how, &catalog)
    }
    .map_err(synth_failure)?;
    if recipe.numerically_synthesized {
        let _ = writeln!(err, "note: part of this circuit came from the numeric fallback fit");
    }
    let text = recipe.to_json();
    let table = recipe_table(&recipe);
    match &args.output {
        Some(path) => {
            fs::write(path, text + "\n").map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            let _ = write!(out, "{table}");
        }
        None => {
            let _ = writeln!(out, "{text}");
            let _ = write!(err, "{table}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(recipe: &PathBuf, target: &str, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let r = load_recipe(recipe)?;
    let u = match lookup(target) {
        Some(g) => g.unitary,
        None => load_unitary_file(&PathBuf::from(target), err)?,
    };
    let report = verify(&r, &u);
    let _ = writeln!(out, "{}", report.to_json());
    Ok(if report.fidelity >= 1.0 - VERIFY_SLACK { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_simulate(recipe: &PathBuf, state: &str, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let r = load_recipe(recipe)?;
    let s = parse_state(state, err)?;
    let result = apply_state(&r, &s);
    let amplitudes: serde_json::Map<String, serde_json::Value> = BasisState::ALL
        .iter()
        .map(|b| {
            let z = result.amplitude(*b);
            (b.label().to_string(), json!([sig12(z.re), sig12(z.im)]))
        })
        .collect();
    let probabilities: serde_json::Map<String, serde_json::Value> = BasisState::ALL
        .iter()
        .map(|b| (b.label().to_string(), json!(sig12(result.amplitude(*b).norm_sqr()))))
        .collect();
    debug_assert!(simulate_unitary(&r).deviation() < 1e-10);
    let _ = writeln!(out, "{}", pretty(&json!({ "amplitudes": amplitudes, "probabilities": probabilities })));
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gates => cmd_gates(out),
        Command::Classify(source) => cmd_classify(source, out, err),
        Command::Compile(args) => cmd_compile(args, out, err),
        Command::Verify { recipe, target } => cmd_verify(recipe, target, out, err),
        Command::Simulate { recipe, state } => cmd_simulate(recipe, state, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
