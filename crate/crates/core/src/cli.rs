//! The `neron` command-line tool.
//!
//! Every command reads one or more graph files and writes `key=value`
//! lines on stdout. With several files each report is preceded by a
//! `file=<path>` line, and reports appear in argument order whatever
//! `--jobs` is.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::alignment::{is_aligned, join, neron_verdict};
use crate::cartier::{
    decompose, is_t_cartier, realize, witness_base, witness_divisor, CartierError, Realization, VertexLabelling,
};
use crate::graph::{parse_graph, tokenize, ChartModel, LabelledGraph, ParseError, Violation};
use crate::labels::{Label, PrimeBasis, TraitValuation};
use crate::specialization::{specialize, Generization};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "neron", version, about = "Alignment and Cartier divisor analysis of labelled dual graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide alignment and report a witness cycle if there is one.
    CheckAlign(GraphArgs),
    /// Decide whether the jacobian has a Neron model.
    Neron(GraphArgs),
    /// Contract edges that become units when only the kept primes vanish.
    Specialize {
        /// Comma-separated primes that still vanish; empty keeps none.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        keep: Vec<String>,
        #[command(flatten)]
        graphs: GraphArgs,
    },
    /// Count and list the r-strata of the chart x_1 ... x_l = b.
    Strata {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        r: usize,
        /// Ambient dimension; defaults to l.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pretty: bool,
    },
    /// Check a vertex labelling for divisibility along a trait.
    Tcartier(LabelledArgs),
    /// Realize a labelling as the pullback of a global divisor.
    Realize {
        #[command(flatten)]
        args: LabelledArgs,
        #[arg(long)]
        base: Option<String>,
    },
    /// Write a labelling on an aligned graph as a sum of elementary pieces.
    Decompose {
        #[command(flatten)]
        args: LabelledArgs,
        #[arg(long)]
        base: Option<String>,
    },
    /// Build the obstruction labelling of a non-aligned graph.
    Witness {
        #[arg(long = "trait", value_name = "TRAIT")]
        trait_: String,
        #[command(flatten)]
        graphs: GraphArgs,
    },
    /// Render a graph in DOT.
    ExportDot {
        #[arg(long)]
        labelling: Option<PathBuf>,
        #[command(flatten)]
        graphs: GraphArgs,
    },
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    pretty: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

#[derive(Debug, Args)]
struct LabelledArgs {
    /// Orders of the basis primes, e.g. `p=1,q=2`.
    #[arg(long = "trait", value_name = "TRAIT")]
    trait_: String,
    #[arg(long)]
    labelling: PathBuf,
    #[command(flatten)]
    graphs: GraphArgs,
}

/// Result of one file or one command.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, stderr: String::new(), code: EXIT_OK }
    }

    fn with_code(stdout: String, code: i32) -> Self {
        Outcome { stdout, stderr: String::new(), code }
    }

    fn error(code: i32, message: String) -> Self {
        Outcome { stdout: String::new(), stderr: format!("error: {message}\n"), code }
    }
}

/// Internal failures outrank input errors, which outrank negative verdicts.
fn severity(code: i32) -> u8 {
    match code {
        EXIT_INTERNAL => 3,
        EXIT_USAGE => 2,
        EXIT_NEGATIVE => 1,
        _ => 0,
    }
}

/// Runs the tool on `argv` (including the program name) and writes its
/// streams. Returns the exit code.
pub fn run<O: Write, E: Write>(argv: &[String], stdout: &mut O, stderr: &mut E) -> i32 {
    let outcome = execute(argv);
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stderr.write_all(outcome.stderr.as_bytes());
    outcome.code
}

/// Like [`run`], collecting the streams.
pub fn execute(argv: &[String]) -> Outcome {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return if e.use_stderr() {
                Outcome { stdout: String::new(), stderr: rendered, code }
            } else {
                Outcome::ok(rendered)
            };
        }
    };
    match cli.command {
        Command::CheckAlign(g) => batch(&g, |_, graph| Ok(check_align(graph, g.pretty))),
        Command::Neron(g) => batch(&g, |_, graph| Ok(neron(graph, g.pretty))),
        Command::Specialize { keep, graphs } => {
            let keep: Vec<String> = keep.into_iter().filter(|k| !k.is_empty()).collect();
            batch(&graphs, |_, graph| specialize_cmd(graph, &keep))
        }
        Command::Strata { l, r, n, pretty } => strata(l, r, n.unwrap_or(l), pretty),
        Command::Tcartier(a) => {
            let labelling = match read_file(&a.labelling) {
                Ok(t) => t,
                Err(o) => return o,
            };
            batch(&a.graphs, |_, graph| {
                let (t, m) = trait_and_labelling(graph, &a.trait_, &a.labelling, &labelling)?;
                Ok(tcartier(graph, &t, &m, a.graphs.pretty))
            })
        }
        Command::Realize { args: a, base } => {
            let labelling = match read_file(&a.labelling) {
                Ok(t) => t,
                Err(o) => return o,
            };
            batch(&a.graphs, |_, graph| {
                let (t, m) = trait_and_labelling(graph, &a.trait_, &a.labelling, &labelling)?;
                let v0 = base_vertex(graph, base.as_deref())?;
                Ok(realize_cmd(graph, &t, &m, v0, a.graphs.pretty))
            })
        }
        Command::Decompose { args: a, base } => {
            let labelling = match read_file(&a.labelling) {
                Ok(t) => t,
                Err(o) => return o,
            };
            batch(&a.graphs, |_, graph| {
                let (t, m) = trait_and_labelling(graph, &a.trait_, &a.labelling, &labelling)?;
                let v0 = base_vertex(graph, base.as_deref())?;
                Ok(decompose_cmd(graph, &t, &m, v0, a.graphs.pretty))
            })
        }
        Command::Witness { trait_, graphs } => batch(&graphs, |_, graph| {
            let t = parse_trait(&trait_, graph.basis())?;
            Ok(witness_cmd(graph, &t, graphs.pretty))
        }),
        Command::ExportDot { labelling, graphs } => {
            let text = match labelling.as_deref().map(read_file).transpose() {
                Ok(t) => t,
                Err(o) => return o,
            };
            batch(&graphs, |_, graph| {
                let m = match (&labelling, &text) {
                    (Some(path), Some(text)) => {
                        Some(VertexLabelling::parse(text, graph).map_err(|e| located(path, &e))?)
                    }
                    _ => None,
                };
                Ok(Outcome::ok(export_dot(graph, m.as_ref())))
            })
        }
    }
}

fn read_file(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path)
        .map_err(|e| Outcome::error(EXIT_USAGE, format!("{}: cannot read: {e}", path.display())))
}

fn located(path: &Path, e: &ParseError) -> Outcome {
    Outcome::error(EXIT_USAGE, format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
}

/// Parses and validates one graph file; validation failures point at the
/// offending edge line when there is one.
fn load_graph(path: &Path) -> Result<LabelledGraph, Outcome> {
    let text = read_file(path)?;
    let graph = parse_graph(&text).map_err(|e| located(path, &e))?;
    if let Some(v) = graph.validate().into_iter().next() {
        let (line, column) = match &v {
            Violation::UnitEdgeLabel { edge } | Violation::BasisMismatch { edge } => edge_label_position(&text, edge),
            _ => (1, 1),
        };
        let message = match &v {
            Violation::Disconnected { components } => format!("graph is disconnected ({components} components)"),
            _ => v.clone().into_error().to_string(),
        };
        let e = ParseError { line, column, message };
        return Err(located(path, &e));
    }
    Ok(graph)
}

fn edge_label_position(text: &str, id: &str) -> (usize, usize) {
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize(line);
        if toks.len() == 5 && toks[0].text == "edge" && toks[1].text == id {
            return (i + 1, toks[4].column);
        }
    }
    (1, 1)
}

fn parse_trait(text: &str, basis: &PrimeBasis) -> Result<TraitValuation, Outcome> {
    TraitValuation::parse(text, basis)
        .map_err(|e| Outcome::error(EXIT_USAGE, format!("--trait:1:{}: {}", e.offset + 1, e.message)))
}

fn trait_and_labelling(
    graph: &LabelledGraph,
    trait_text: &str,
    path: &Path,
    labelling: &str,
) -> Result<(TraitValuation, VertexLabelling), Outcome> {
    let t = parse_trait(trait_text, graph.basis())?;
    let m = VertexLabelling::parse(labelling, graph).map_err(|e| located(path, &e))?;
    Ok((t, m))
}

/// The named base vertex, or the least vertex id.
fn base_vertex(graph: &LabelledGraph, base: Option<&str>) -> Result<usize, Outcome> {
    match base {
        Some(id) => {
            graph.vertex(id).ok_or_else(|| Outcome::error(EXIT_USAGE, format!("--base: unknown vertex `{id}`")))
        }
        None => Ok(graph.vertices_by_id()[0]),
    }
}

fn batch<F>(args: &GraphArgs, per_file: F) -> Outcome
where
    F: Fn(&Path, &LabelledGraph) -> Result<Outcome, Outcome> + Sync,
{
    let one = |path: &PathBuf| -> Outcome {
        match load_graph(path).and_then(|g| per_file(path, &g)) {
            Ok(o) | Err(o) => o,
        }
    };
    let results: Vec<Outcome> = if args.jobs > 1 && args.files.len() > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.into()).build() {
            Ok(pool) => pool.install(|| args.files.par_iter().map(one).collect()),
            Err(e) => return Outcome::error(EXIT_INTERNAL, format!("cannot start worker pool: {e}")),
        }
    } else {
        args.files.iter().map(one).collect()
    };
    if results.len() == 1 {
        return results.into_iter().next().expect("one result");
    }
    let mut out = Outcome::default();
    for (path, r) in args.files.iter().zip(results) {
        let _ = writeln!(out.stdout, "file={}", path.display());
        out.stdout += &r.stdout;
        out.stderr += &r.stderr;
        if severity(r.code) > severity(out.code) {
            out.code = r.code;
        }
    }
    out
}

/// `key=value` lines as `key: value`.
fn prettify(kv: &str) -> String {
    kv.lines()
        .map(|l| match l.split_once('=') {
            Some((k, v)) => format!("{k}: {v}\n"),
            None => format!("{l}\n"),
        })
        .collect()
}

fn render(kv: String, pretty: bool) -> String {
    if pretty {
        prettify(&kv)
    } else {
        kv
    }
}

fn check_align(graph: &LabelledGraph, pretty: bool) -> Outcome {
    let report = is_aligned(graph);
    let text = if pretty { report.to_pretty(graph) } else { report.to_kv(graph) };
    Outcome::with_code(text, if report.is_aligned() { EXIT_OK } else { EXIT_NEGATIVE })
}

fn neron(graph: &LabelledGraph, pretty: bool) -> Outcome {
    let v = neron_verdict(graph);
    let text = if pretty { format!("{}.\n{}", v.statement(), v.report.to_pretty(graph)) } else { v.to_kv(graph) };
    Outcome::with_code(text, if v.model_exists() { EXIT_OK } else { EXIT_NEGATIVE })
}

/// The target graph followed by the morphism as comment lines, so the
/// whole output re-parses as a graph file.
fn specialize_cmd(graph: &LabelledGraph, keep: &[String]) -> Result<Outcome, Outcome> {
    let q = Generization::new(graph.basis().clone(), keep)
        .map_err(|e| Outcome::error(EXIT_USAGE, format!("--keep: {e}")))?;
    let (target, morphism) = specialize(graph, &q).map_err(|e| Outcome::error(EXIT_USAGE, e.to_string()))?;
    if !target.is_valid() || !morphism.is_well_formed() {
        return Err(Outcome::error(EXIT_INTERNAL, "specialisation produced an invalid graph".into()));
    }
    let mut out = target.to_text();
    out += "# morphism\n";
    for line in morphism.to_text().lines() {
        let _ = writeln!(out, "# {line}");
    }
    Ok(Outcome::ok(out))
}

fn strata(l: usize, r: usize, n: usize, pretty: bool) -> Outcome {
    let basis = PrimeBasis::new(["b"]).expect("one prime");
    let b = Label::parse("b", &basis).expect("label b");
    let Some(chart) = ChartModel::new(n, l, b) else {
        return Outcome::error(EXIT_USAGE, format!("need 1 <= l <= n, got l={l} n={n}"));
    };
    let count: BigUint = chart.strata_count(r);
    let list = chart.enumerate_strata(r);
    if BigUint::from(list.len()) != count {
        return Outcome::error(EXIT_INTERNAL, "stratum enumeration disagrees with the count".into());
    }
    let mut out = format!("count={count}\n");
    for s in &list {
        let coords: Vec<String> = s.iter().map(|c| format!("x{c}")).collect();
        let _ = writeln!(out, "stratum={}", coords.join(","));
    }
    Outcome::ok(render(out, pretty))
}

fn cartier_failure(e: CartierError) -> Outcome {
    match e {
        CartierError::NotTCartier
        | CartierError::NotAligned
        | CartierError::InfiniteOrd
        | CartierError::GraphIsAligned => Outcome::error(EXIT_NEGATIVE, e.to_string()),
        CartierError::Postcondition(_) => Outcome::error(EXIT_INTERNAL, e.to_string()),
        _ => Outcome::error(EXIT_USAGE, e.to_string()),
    }
}

fn tcartier(graph: &LabelledGraph, t: &TraitValuation, m: &VertexLabelling, pretty: bool) -> Outcome {
    let report = match is_t_cartier(graph, t, m) {
        Ok(r) => r,
        Err(e) => return cartier_failure(e),
    };
    let mut out = format!("t-cartier={}\n", if report.is_t_cartier() { "yes" } else { "no" });
    if !report.is_t_cartier() {
        let ids = report.violations.iter().map(|&e| graph.edges()[e].id.as_str());
        let _ = writeln!(out, "violations={}", join(ids));
    }
    let code = if report.is_t_cartier() { EXIT_OK } else { EXIT_NEGATIVE };
    Outcome::with_code(render(out, pretty), code)
}

fn realize_cmd(graph: &LabelledGraph, t: &TraitValuation, m: &VertexLabelling, v0: usize, pretty: bool) -> Outcome {
    match realize(graph, t, m, v0) {
        Ok(Realization::Realizable(d)) => {
            let out = format!("realizable=yes\nbase={}\n{}", graph.vertices()[v0], d.to_text(graph));
            Outcome::ok(render(out, pretty))
        }
        Ok(Realization::NotRealizable) => {
            let out = format!("realizable=no\nbase={}\n", graph.vertices()[v0]);
            Outcome::with_code(render(out, pretty), EXIT_NEGATIVE)
        }
        Err(e) => cartier_failure(e),
    }
}

fn decompose_cmd(graph: &LabelledGraph, t: &TraitValuation, m: &VertexLabelling, v0: usize, pretty: bool) -> Outcome {
    match decompose(graph, t, m, v0) {
        Ok(pieces) => {
            let mut out = format!("base={}\npieces={}\n", graph.vertices()[v0], pieces.len());
            for p in &pieces {
                out += &p.to_text(graph);
                out.push('\n');
            }
            Outcome::ok(render(out, pretty))
        }
        Err(e) => cartier_failure(e),
    }
}

fn witness_cmd(graph: &LabelledGraph, t: &TraitValuation, pretty: bool) -> Outcome {
    let report = is_aligned(graph);
    let m = match witness_divisor(graph, t, &report) {
        Ok(m) => m,
        Err(e) => return cartier_failure(e),
    };
    let base = witness_base(graph, &report).expect("non-aligned graphs have a witness");
    let pivot = report.witness.as_ref().expect("witness").cycle.vertices[0];
    match realize(graph, t, &m, base) {
        Ok(Realization::NotRealizable) => {}
        Ok(Realization::Realizable(_)) => {
            return Outcome::error(EXIT_INTERNAL, "obstruction labelling is realizable".into());
        }
        Err(e) => return Outcome::error(EXIT_INTERNAL, format!("obstruction labelling rejected: {e}")),
    }
    let mut out = format!(
        "d={}\npivot={}\nbase={}\nrealizable=no\n",
        m.get(pivot),
        graph.vertices()[pivot],
        graph.vertices()[base]
    );
    out += &m.to_text(graph);
    Outcome::ok(render(out, pretty))
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering: nodes in file order, then edges in file order; with a
/// labelling, nodes read `v1 [m=2]`.
pub fn export_dot(graph: &LabelledGraph, m: Option<&VertexLabelling>) -> String {
    let mut out = String::from("graph dual {\n");
    for (v, id) in graph.vertices().iter().enumerate() {
        let label = match m {
            Some(m) => format!("{id} [m={}]", m.get(v)),
            None => id.clone(),
        };
        let _ = writeln!(out, "  {} [label={}];", dot_id(id), dot_id(&label));
    }
    for e in graph.edges() {
        let _ = writeln!(
            out,
            "  {} -- {} [id={}, label={}];",
            dot_id(&graph.vertices()[e.ends.0]),
            dot_id(&graph.vertices()[e.ends.1]),
            dot_id(&e.id),
            dot_id(&e.label.display(graph.basis()).to_string())
        );
    }
    out += "}\n";
    out
}
