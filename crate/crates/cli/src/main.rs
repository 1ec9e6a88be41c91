use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use treerep::evaluation::EvalReport;
use treerep::io;
use treerep::metric::{delta_hyperbolicity, DeltaMode};
use treerep::refinement::{build_path_system, refine_weights, PairSelection};
use treerep::tree::{bfs_apsp, tree_metric, Graph, Restrict};
use treerep::treerep::seed_sequence;
use treerep::{
    average_distortion, map_score, mst_complete, mst_prim, neighbor_join, normalize_max, optimal_scale,
    random_tree_metric, sample_hyperboloid, sarkar_embed, treerep_best, treerep_with, Criterion, DistanceMatrix,
    Scale, TreeRepConfig, WeightedTree,
};

#[derive(Parser)]
#[command(name = "treerep", version, about = "Fit, evaluate and embed tree metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree from a distance matrix or a graph.
    Fit(FitArgs),
    /// Score a tree against a reference metric.
    Eval(EvalArgs),
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Place a tree in the Poincaré disk.
    Embed(EmbedArgs),
    /// Refit the edge weights of a tree by least squares.
    Refine(RefineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Treerep,
    Nj,
    Mst,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum InputKind {
    Dist,
    Edges,
}

#[derive(Clone, Copy, ValueEnum)]
enum Select {
    Best,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    None,
    Optimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaArg {
    Exact,
    Fixed,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "treerep")]
    algo: Algo,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "dist")]
    input_kind: InputKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Equality tolerance; for graph inputs it applies to the max-normalised metric.
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value = "best")]
    select: Select,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Tree output path.
    #[arg(long)]
    out: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    delta: Option<DeltaArg>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum, default_value = "dist")]
    truth_kind: InputKind,
    /// Graph for MAP; defaults to the truth graph when it is an edge list.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    scale: ScaleArg,
    #[arg(long, value_enum)]
    delta: Option<DeltaArg>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random tree metric from the clique-and-BFS generator.
    Tree {
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Distance matrix output.
        #[arg(long)]
        out: PathBuf,
        /// Also write the generating tree.
        #[arg(long)]
        tree_out: Option<PathBuf>,
    },
    /// Random points on the hyperboloid.
    Hyperboloid {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// `auto` for a tree center, otherwise a node name.
    #[arg(long, default_value = "auto")]
    root: String,
    /// Accepted for uniformity; the construction is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum, default_value = "dist")]
    truth_kind: InputKind,
    /// `all` or a number of sampled pairs.
    #[arg(long, default_value = "all")]
    samples: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nonneg: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treerep: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Gen(g) => gen(g),
        Command::Embed(a) => embed(a),
        Command::Refine(a) => refine(a),
    }
}

/// A reference metric, plus the graph it came from for edge-list inputs.
struct Input {
    d: DistanceMatrix,
    graph: Option<Graph>,
}

fn load(path: &Path, kind: InputKind) -> Result<Input> {
    let ctx = || format!("reading {}", path.display());
    Ok(match kind {
        InputKind::Dist => Input {
            d: io::read_distance_matrix(path).with_context(ctx)?,
            graph: None,
        },
        InputKind::Edges => {
            let g = io::read_edge_list(path).with_context(ctx)?.largest_component();
            let d = bfs_apsp(&g).with_context(ctx)?;
            Input { d, graph: Some(g) }
        }
    })
}

fn load_tree(path: &Path, labels: Option<&[String]>) -> Result<WeightedTree> {
    let t = io::read_tree(path).with_context(|| format!("reading {}", path.display()))?;
    match labels {
        Some(l) => t.relabel_to(l).with_context(|| format!("matching {} to the reference", path.display())),
        None => Ok(t),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    io::write_file(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit_report(report: &EvalReport, path: Option<&Path>) -> Result<()> {
    let json = report.to_json();
    match path {
        Some(p) => write(p, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn delta_of(d: &DistanceMatrix, mode: Option<DeltaArg>) -> Result<Option<f64>> {
    let mode = match mode {
        None => return Ok(None),
        Some(DeltaArg::Exact) => DeltaMode::Exact,
        Some(DeltaArg::Fixed) => DeltaMode::FixedBase(0),
    };
    Ok(Some(delta_hyperbolicity(d, mode)?.delta))
}

/// Fills the quality fields of `report` for tree `t` against `input`.
fn score(report: &mut EvalReport, t: &WeightedTree, input: &Input, graph: Option<&Graph>, scale: Scale) -> Result<()> {
    let start = Instant::now();
    let learned = tree_metric(t, Restrict::Data)?;
    report.alpha = match optimal_scale(&learned, &input.d) {
        Ok(a) => a,
        Err(treerep::Error::AllZero) => 1.0,
        Err(e) => return Err(e.into()),
    };
    report.avg_distortion = average_distortion(&learned, &input.d, scale).context("average distortion")?;
    if let Some(g) = graph {
        report.map = Some(map_score(g, &learned).context("MAP")?);
    }
    report.n_input = input.d.n();
    report.n_tree_nodes = t.node_count();
    report.elapsed_ms.insert("eval".into(), ms(start));
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let mut report = EvalReport {
        seed: a.seed,
        runs: a.runs,
        ..EvalReport::default()
    };
    let start = Instant::now();
    let input = load(&a.input, a.input_kind)?;
    report.elapsed_ms.insert("load".into(), ms(start));

    let start = Instant::now();
    let tree = match a.algo {
        Algo::Treerep => fit_treerep(&a, &input)?,
        Algo::Nj => neighbor_join(&input.d)?,
        Algo::Mst => match &input.graph {
            Some(g) => mst_prim(g)?,
            None => {
                eprintln!("treerep: warning: mst on a distance matrix uses the complete graph");
                mst_complete(&input.d)?
            }
        },
    };
    report.elapsed_ms.insert("fit".into(), ms(start));
    write(&a.out, &io::format_tree(&tree))?;

    score(&mut report, &tree, &input, input.graph.as_ref(), Scale::None)?;
    let start = Instant::now();
    report.delta = delta_of(&input.d, a.delta)?;
    if report.delta.is_some() {
        report.elapsed_ms.insert("delta".into(), ms(start));
    }
    emit_report(&report, a.report.as_deref())
}

fn fit_treerep(a: &FitArgs, input: &Input) -> Result<WeightedTree> {
    // graph metrics are fitted at unit diameter and scaled back to hops
    let (d, back) = match &input.graph {
        Some(_) if input.d.max() > 0.0 => (normalize_max(&input.d)?, input.d.max()),
        _ => (input.d.clone(), 1.0),
    };
    let config = TreeRepConfig {
        seed: a.seed,
        tol: a.tol,
        threads: a.threads,
        trace: false,
    };
    let tree = match a.select {
        Select::First => treerep_with(&d, &config)?.tree,
        Select::Best => {
            let criterion = match &input.graph {
                Some(g) => Criterion::Map(g),
                None => Criterion::AvgDistortion,
            };
            treerep_best(&d, &seed_sequence(a.seed, a.runs), criterion, &config)?.tree
        }
    };
    if back == 1.0 {
        return Ok(tree);
    }
    let weights: Vec<f64> = tree.weights().iter().map(|w| w * back).collect();
    Ok(tree.with_weights(&weights)?)
}

fn eval(a: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let input = load(&a.truth, a.truth_kind)?;
    let tree = load_tree(&a.tree, input.d.labels())?;
    if tree.data_count() != input.d.n() {
        bail!(
            "tree has {} data points but the reference has {}",
            tree.data_count(),
            input.d.n()
        );
    }
    let graph = match &a.graph {
        Some(p) => {
            let g = io::read_edge_list(p).with_context(|| format!("reading {}", p.display()))?;
            Some(match input.d.labels() {
                Some(l) => reorder_graph(&g, l)?,
                None => g,
            })
        }
        None => input.graph.clone(),
    };
    let mut report = EvalReport {
        runs: 1,
        ..EvalReport::default()
    };
    report.elapsed_ms.insert("load".into(), ms(start));
    let scale = match a.scale {
        ScaleArg::None => Scale::None,
        ScaleArg::Optimal => Scale::Optimal,
    };
    score(&mut report, &tree, &input, graph.as_ref(), scale)?;
    report.delta = delta_of(&input.d, a.delta)?;
    emit_report(&report, a.report.as_deref())
}

/// Renumbers a graph's nodes to follow `labels`.
fn reorder_graph(g: &Graph, labels: &[String]) -> Result<Graph> {
    let index: std::collections::HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut out = Graph::new();
    for l in labels {
        out.add_node(l.clone());
    }
    for &(u, v, w) in g.edges() {
        let find = |x: usize| {
            index
                .get(g.names()[x].as_str())
                .copied()
                .with_context(|| format!("graph node {} is not in the reference", g.names()[x]))
        };
        out.add_edge(find(u)?, find(v)?, w)?;
    }
    Ok(out)
}

fn gen(g: GenCommand) -> Result<()> {
    match g {
        GenCommand::Tree {
            depth,
            seed,
            out,
            tree_out,
        } => {
            let (t, d) = random_tree_metric(depth, seed)?;
            write(&out, &io::format_distance_matrix(&d))?;
            if let Some(p) = tree_out {
                write(&p, &io::format_tree(&t))?;
            }
        }
        GenCommand::Hyperboloid { n, k, scale, seed, out } => {
            let d = sample_hyperboloid(n, k, scale, seed)?;
            write(&out, &io::format_distance_matrix(&d))?;
        }
    }
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let t = load_tree(&a.tree, None)?;
    let root = match a.root.as_str() {
        "auto" => None,
        name => Some(
            (0..t.node_count())
                .find(|&v| t.node_name(v) == name)
                .with_context(|| format!("--root {name}: no such node"))?,
        ),
    };
    let e = sarkar_embed(&t, a.tau, root)?;
    write(&a.out, &io::format_embedding(&t, &e))
}

fn refine(a: RefineArgs) -> Result<()> {
    let input = load(&a.truth, a.truth_kind)?;
    let tree = load_tree(&a.tree, input.d.labels())?;
    let pairs = match a.samples.as_str() {
        "all" => PairSelection::All,
        k => PairSelection::Sample {
            k: k.parse()
                .with_context(|| format!("--samples expects 'all' or a count, got {k:?}"))?,
            seed: a.seed,
        },
    };
    let start = Instant::now();
    let ps = build_path_system(&tree, pairs)?;
    let r = refine_weights(&tree, &input.d, &ps, a.nonneg)?;
    let elapsed = ms(start);
    write(&a.out, &io::format_tree(&r.tree))?;
    let summary = serde_json::json!({
        "residual_before": r.residual_before,
        "residual_after": r.residual_after,
        "rank_deficient": r.rank_deficient,
        "iterations": r.iterations,
        "kept_input": r.kept_input,
        "pairs": ps.len(),
        "seed": a.seed,
        "elapsed_ms": { "refine": elapsed },
    });
    let text = serde_json::to_string_pretty(&summary)?;
    match &a.report {
        Some(p) => write(p, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
