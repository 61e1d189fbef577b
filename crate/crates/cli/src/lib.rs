//! Command-line pipeline over the limit-machine library: encode graphs as
//! rooted k-trees, mark them, estimate measures, build the machine, and run
//! the verification suite. Every command is deterministic given its seed;
//! the pipeline writes byte-identical artifacts on reruns.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use folim_core::decompose::{
    encode_as_rooted_ktree, exact_tree_decomposition, parse_decomposition, DecompError,
    DEFAULT_NODE_BUDGET,
};
use folim_core::graph::{
    format_ktree, parse_graph_file, parse_ktree, parse_plain_graph, GraphError, GraphFile,
    PlainGraph, RootedKTree,
};
use folim_core::hintikka::{type_histogram, HintikkaError, TypeInterner};
use folim_core::limit::{build_machine, BuildParams, LimitError, LimitMachine};
use folim_core::logic::{parse_formula, stone_pairing_with, LogicError, ParseError};
use folim_core::sequence::{
    check_null_partitioned, estimate_measures, mark_null_partition, mark_type_stability,
    ratio_from_string, ratio_to_string, GraphSequence, MeasuresFile, Rational, SequenceError,
    DEFAULT_GROWTH_FACTOR, DEFAULT_MARK_CAP, DEFAULT_WINDOW,
};
use folim_core::verify::{run_suite, CheckReport, SuiteConfig};

/// Exit codes: 0 pass, 1 check failure, 2 input error, 3 instability or
/// timeout.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Instability(String),
    #[error("checks failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Instability(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        match e {
            LogicError::Budget { .. } => CliError::Instability(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<DecompError> for CliError {
    fn from(e: DecompError) -> Self {
        match e {
            DecompError::Timeout { .. } => CliError::Instability(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::MarkCap { .. } => CliError::Instability(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<HintikkaError> for CliError {
    fn from(e: HintikkaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LimitError> for CliError {
    fn from(e: LimitError) -> Self {
        match e {
            LimitError::Unstable(_)
            | LimitError::NoImportantPath { .. }
            | LimitError::MissingTemplates { .. } => CliError::Instability(e.to_string()),
            LimitError::BadMachine(_) | LimitError::BadMeasures(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, content).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_epsilon(s: &str) -> Result<Rational, CliError> {
    ratio_from_string(s).ok_or_else(|| CliError::Input(format!("bad fraction `{s}`")))
}

fn parse_color(s: &str) -> Result<folim_core::graph::EdgeColor, CliError> {
    match s {
        "kept" => Ok(folim_core::graph::EdgeColor::Kept),
        "fill" => Ok(folim_core::graph::EdgeColor::Fill),
        other => Err(CliError::Input(format!(
            "bad color `{other}` (expected kept or fill)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Command definitions
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "folim",
    about = "First-order limits of bounded tree-width graphs",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Encode a plain graph as a 2-edge-colored rooted k-tree.
    Encode {
        #[arg(long)]
        k: usize,
        /// Use this tree decomposition instead of the exact solver.
        #[arg(long)]
        decomp: Option<PathBuf>,
        /// Node budget for the exact solver.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        graph: PathBuf,
    },
    /// Print the d-Hintikka type histogram of a graph.
    Types {
        #[arg(long, default_value_t = 3)]
        depth: u8,
        graph: PathBuf,
    },
    /// Evaluate a Stone pairing exactly (or by sampling when over budget).
    Stone {
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
        /// Sampling fallback: number of samples.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        graph: PathBuf,
    },
    /// Greedily mark a sequence until residual components are small.
    Mark {
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 1)]
        radius: u32,
        #[arg(long, default_value_t = DEFAULT_MARK_CAP)]
        cap: usize,
        /// Depth for the mark-type stabilization report.
        #[arg(long, default_value_t = 3)]
        depth: u8,
        /// Directory for the marked graphs.
        #[arg(long)]
        out: PathBuf,
        graphs: Vec<PathBuf>,
    },
    /// Estimate discrete and limit measures over a marked sequence.
    Measures {
        #[arg(long, default_value_t = 3)]
        depth: u8,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_GROWTH_FACTOR)]
        growth: u64,
        #[arg(long)]
        json: bool,
        graphs: Vec<PathBuf>,
    },
    /// Limit machine construction and sampling.
    #[command(subcommand)]
    Limit(LimitCommand),
    /// Run the verification suite against a machine file.
    Verify {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        walk_len: u32,
        /// Restrict derived mass-transport checks to one edge color.
        #[arg(long)]
        color_filter: Option<String>,
    },
    /// Full pipeline: encode, mark, measure, build, verify.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
pub enum LimitCommand {
    /// Build a machine from measures and the graphs behind them.
    Build {
        #[arg(long)]
        measures: PathBuf,
        #[arg(long, num_args = 1..)]
        graphs: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        depth: u8,
        #[arg(long, default_value_t = 6)]
        path_bound: u8,
        #[arg(long, default_value_t = 8)]
        template_cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample vertices from a machine.
    Sample {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
pub struct PipelineArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: u8,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value = "1/4")]
    pub epsilon: String,
    #[arg(long, default_value_t = DEFAULT_GROWTH_FACTOR)]
    pub growth: u64,
    #[arg(long, default_value_t = DEFAULT_MARK_CAP)]
    pub cap: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub path_bound: u8,
    #[arg(long, default_value_t = 8)]
    pub template_cap: usize,
    #[arg(long, default_value_t = 16)]
    pub walk_len: u32,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub budget: u64,
    /// Restrict derived mass-transport checks to one edge color.
    #[arg(long)]
    pub color_filter: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    pub graphs: Vec<PathBuf>,
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode {
            k,
            decomp,
            budget,
            out,
            graph,
        } => {
            let g = parse_plain_graph(&read(&graph)?)?;
            let text = encode_one(&g, k, decomp.as_deref(), budget)?;
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Types { depth, graph } => {
            let t = load_ktree(&graph)?;
            let mut interner = TypeInterner::new();
            let hist = type_histogram(&t, depth, &mut interner);
            let mut lines: Vec<(String, u64)> = hist
                .into_iter()
                .map(|(ty, c)| (interner.fingerprint_hex(ty), c))
                .collect();
            lines.sort();
            for (fp, count) in lines {
                println!("{fp} {count}");
            }
            Ok(())
        }
        Command::Stone {
            formula,
            budget,
            samples,
            seed,
            graph,
        } => {
            let t = load_ktree(&graph)?;
            let f = parse_formula(&formula)?;
            let sampling = samples.map(|s| (s, seed));
            let result = stone_pairing_with(&t, &f, budget, sampling)?;
            let kind = if result.exact {
                "exact".to_string()
            } else {
                format!("estimate from {} samples", result.tuples)
            };
            println!("{} ({kind})", ratio_to_string(&result.value));
            Ok(())
        }
        Command::Mark {
            epsilon,
            radius,
            cap,
            depth,
            out,
            graphs,
        } => {
            let seq = load_sequence(&graphs)?;
            let eps = parse_epsilon(&epsilon)?;
            let (marked, plan) = mark_null_partition(&seq, eps, radius, cap)?;
            for (i, g) in marked.graphs().iter().enumerate() {
                write(&out.join(format!("marked_{i:03}.ktree")), &format_ktree(g))?;
            }
            let mut interner = TypeInterner::new();
            let stability = mark_type_stability(&marked, depth, &mut interner)?;
            let report = serde_json::json!({
                "plan": plan,
                "mark_type_stability": stability,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("plan serializes")
            );
            Ok(())
        }
        Command::Measures {
            depth,
            window,
            growth,
            json,
            graphs,
        } => {
            let seq = load_sequence(&graphs)?;
            let mut interner = TypeInterner::new();
            let (est, _) = estimate_measures(&seq, depth, window, growth, &mut interner)?;
            let file = est.to_file(&interner);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&file).expect("measures serialize")
                );
            } else {
                let table = &file.tables[depth as usize - 1];
                for entry in &table.entries {
                    println!(
                        "{} nu={} mu={} variation={}",
                        entry.chain.last().unwrap(),
                        entry.nu,
                        entry.mu,
                        entry.variation
                    );
                }
            }
            Ok(())
        }
        Command::Limit(cmd) => match cmd {
            LimitCommand::Build {
                measures,
                graphs,
                depth,
                path_bound,
                template_cap,
                out,
            } => {
                let expected: MeasuresFile = serde_json::from_str(&read(&measures)?)
                    .map_err(|e| CliError::Input(format!("bad measures file: {e}")))?;
                let seq = load_sequence(&graphs)?;
                let machine = build_from_measures(
                    &seq,
                    &expected,
                    depth,
                    &BuildParams {
                        path_bound,
                        template_cap,
                    },
                )?;
                write(&out, &machine.to_json())?;
                Ok(())
            }
            LimitCommand::Sample { machine, n, seed } => {
                let machine = LimitMachine::from_json(&read(&machine)?)?;
                let mut rng = folim_core::rng_util::derive_rng(seed, 0x73616d70);
                for _ in 0..n {
                    let v = machine.sample_vertex(&mut rng)?;
                    println!("{}", v.render(&machine));
                }
                Ok(())
            }
        },
        Command::Verify {
            machine,
            suite,
            n,
            seed,
            walk_len,
            color_filter,
        } => {
            if suite != "all" {
                return Err(CliError::Input(format!("unknown suite `{suite}`")));
            }
            let machine = LimitMachine::from_json(&read(&machine)?)?;
            let cfg = SuiteConfig {
                samples: n,
                walk_len,
                template_cap: machine.template_cap,
                seed,
                color_filter: color_filter.as_deref().map(parse_color).transpose()?,
            };
            let reports = run_suite(&machine, &cfg);
            print_reports(&reports)
        }
        Command::Pipeline(args) => {
            let outcome = run_pipeline(&args)?;
            print_reports(&outcome.reports)
        }
    }
}

fn print_reports(reports: &[CheckReport]) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for report in reports {
        println!("{}", report.line());
        if !report.passed() {
            failed.push(report.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}

fn load_ktree(path: &Path) -> Result<RootedKTree, CliError> {
    Ok(parse_ktree(&read(path)?)?)
}

fn load_sequence(paths: &[PathBuf]) -> Result<GraphSequence, CliError> {
    if paths.is_empty() {
        return Err(CliError::Input("no graph files given".into()));
    }
    let mut graphs = Vec::with_capacity(paths.len());
    for p in paths {
        graphs.push(parse_ktree(&read(p)?)?);
    }
    Ok(GraphSequence::new(graphs)?)
}

fn encode_one(
    g: &PlainGraph,
    k: usize,
    decomp: Option<&Path>,
    budget: u64,
) -> Result<String, CliError> {
    let td = match decomp {
        Some(path) => parse_decomposition(&read(path)?)?,
        None => exact_tree_decomposition(g, k, budget)?,
    };
    let t = encode_as_rooted_ktree(g, &td, k)?;
    Ok(format_ktree(&t))
}

/// Rebuilds measures from the graphs and insists they match the supplied
/// file before constructing the machine.
fn build_from_measures(
    seq: &GraphSequence,
    expected: &MeasuresFile,
    depth: u8,
    params: &BuildParams,
) -> Result<LimitMachine, CliError> {
    if expected.depth != depth {
        return Err(CliError::Input(format!(
            "measures file has depth {}, requested {depth}",
            expected.depth
        )));
    }
    let mut interner = TypeInterner::new();
    let (est, trie) = estimate_measures(
        seq,
        depth,
        expected.window,
        expected.growth_factor,
        &mut interner,
    )?;
    let recomputed = est.to_file(&interner);
    if &recomputed != expected {
        return Err(CliError::Input(
            "measures file does not match the supplied graphs".into(),
        ));
    }
    Ok(build_machine(seq, &est, &trie, &interner, params)?)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, serde::Serialize)]
pub struct PipelineOutcome {
    pub mark_counts: Vec<usize>,
    pub reports: Vec<CheckReport>,
}

/// Runs the whole pipeline and writes artifacts under `out`:
/// `ktrees/` (marked encodings), `measures.json`, `machine.json`, and
/// `reports/`. All randomness flows from the single seed.
pub fn run_pipeline(args: &PipelineArgs) -> Result<PipelineOutcome, CliError> {
    if args.graphs.is_empty() {
        return Err(CliError::Input("no graph files given".into()));
    }
    if args.depth == 0 || args.window < 2 || args.n == 0 || args.k == 0 {
        return Err(CliError::Input(
            "depth, k, and sample count must be positive; window at least 2".into(),
        ));
    }
    let eps = parse_epsilon(&args.epsilon)?;
    let color_filter = args.color_filter.as_deref().map(parse_color).transpose()?;

    // Encode.
    let mut encoded = Vec::with_capacity(args.graphs.len());
    for path in &args.graphs {
        let g = match parse_graph_file(&read(path)?)? {
            GraphFile::Plain(g) => g,
            GraphFile::KTree(_) => {
                return Err(CliError::Input(format!(
                    "{}: pipeline input must be plain graphs",
                    path.display()
                )))
            }
        };
        let td = exact_tree_decomposition(&g, args.k, args.budget)?;
        encoded.push(encode_as_rooted_ktree(&g, &td, args.k)?);
    }
    let seq = GraphSequence::new(encoded)?;

    // Mark.
    let (marked, plan) = mark_null_partition(&seq, eps, args.depth as u32, args.cap)?;
    for (i, g) in marked.graphs().iter().enumerate() {
        write(
            &args.out.join("ktrees").join(format!("g{i:03}.ktree")),
            &format_ktree(g),
        )?;
    }
    let mut interner = TypeInterner::new();
    let null_report = check_null_partitioned(&marked, eps, plan.mark_counts[0] as u32)?;
    let stability = mark_type_stability(&marked, args.depth, &mut interner)?;
    let marking_report = serde_json::json!({
        "plan": plan,
        "null_partition": null_report,
        "mark_type_stability": stability,
    });
    write(
        &args.out.join("reports").join("marking.json"),
        &serde_json::to_string_pretty(&marking_report).expect("report serializes"),
    )?;

    // Measures.
    let (est, trie) = estimate_measures(&marked, args.depth, args.window, args.growth, &mut interner)?;
    let measures_file = est.to_file(&interner);
    write(
        &args.out.join("measures.json"),
        &serde_json::to_string_pretty(&measures_file).expect("measures serialize"),
    )?;

    // Machine.
    let machine = build_machine(
        &marked,
        &est,
        &trie,
        &interner,
        &BuildParams {
            path_bound: args.path_bound,
            template_cap: args.template_cap,
        },
    )?;
    write(&args.out.join("machine.json"), &machine.to_json())?;

    // Residuality diagnostic on an atomic type realized everywhere.
    let residual = {
        let d = 2u8.min(args.depth);
        let table = est.table(d);
        let mut pick = None;
        for (chain, nu) in &table.nu {
            if let folim_core::sequence::NuValue::Finite(c) = nu {
                if *c >= 1
                    && (0..marked.len()).all(|g| trie.count_in(g, chain[d as usize - 1]) == *c)
                {
                    pick = Some(chain[d as usize - 1]);
                    break;
                }
            }
        }
        pick.map(|ty| folim_core::verify::residuality_diagnostic(&marked, &trie, ty, args.depth as u32))
    };
    if let Some(Ok(residual)) = &residual {
        write(
            &args.out.join("reports").join("residuality.json"),
            &serde_json::to_string_pretty(residual).expect("report serializes"),
        )?;
    }

    // Verify.
    let cfg = SuiteConfig {
        samples: args.n,
        walk_len: args.walk_len,
        template_cap: args.template_cap,
        seed: args.seed,
        color_filter,
    };
    let reports = run_suite(&machine, &cfg);
    write(
        &args.out.join("reports").join("checks.json"),
        &serde_json::to_string_pretty(&reports).expect("reports serialize"),
    )?;
    Ok(PipelineOutcome {
        mark_counts: plan.mark_counts,
        reports,
    })
}

// ---------------------------------------------------------------------------
// Small helpers shared with tests
// ---------------------------------------------------------------------------

/// Writes a plain graph file for a path P_n; used by tests and docs.
pub fn plain_path_text(n: usize) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "graph {n}");
    for v in 1..n {
        let _ = writeln!(s, "e {} {v}", v - 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 1);
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Instability("x".into()).exit_code(), 3);
    }

    #[test]
    fn error_mapping() {
        let e: CliError = DecompError::Timeout { budget: 1 }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = DecompError::Infeasible { k: 2 }.into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = LimitError::EmptySupport.into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = LimitError::Unstable("x".into()).into();
        assert_eq!(e.exit_code(), 3);
    }
}
