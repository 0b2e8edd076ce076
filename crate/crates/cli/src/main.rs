//! Command-line front end for directed and bipartite co-clustering.
//!
//! Five subcommands: `cluster` a graph from an edge list, score node
//! `movement` between sending and receiving roles, `simulate` parameter
//! sweeps over synthetic models, evaluate theoretical `bounds` for a model,
//! and print `scree` values for rank selection. Every output embeds the
//! fully resolved configuration, and identical invocations produce identical
//! bytes.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 bad usage or
//! unreadable input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use disim::eval::{theorem_bounds, BoundConstants};
use disim::graph::{load_edge_list, GraphKind, LoadOptions, LoadedGraph};
use disim::laplacian::{build_laplacian, TauPolicy};
use disim::model::{population_objects, BlockModel};
use disim::pipeline::{
    clustering_csv, clustering_json, disim as run_disim, movement_scores, DisimOptions,
};
use disim::spectral::truncated_svd_with;
use disim::sweep::{run_sweep, sweep_csv, SweepSpec};
use disim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "disim",
    version,
    about = "Spectral co-clustering of directed and bipartite graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Co-cluster a graph by sending and receiving behavior.
    Cluster(ClusterArgs),
    /// Score how far each node's sending role sits from its receiving role.
    Movement(MovementArgs),
    /// Sweep a synthetic model family and record misclustering rates.
    Simulate(SimulateArgs),
    /// Evaluate the theoretical error bounds implied by a model.
    Bounds(BoundsArgs),
    /// Print leading singular values of the rescaled adjacency.
    Scree(ScreeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list: one `source target [weight]` line per edge; `#` comments.
    #[arg(long)]
    graph: PathBuf,
    /// Treat sources and targets as disjoint node sets.
    #[arg(long)]
    bipartite: bool,
    /// Expect a weight as the third field of every line.
    #[arg(long)]
    weighted: bool,
}

fn parse_tau(s: &str) -> std::result::Result<TauPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Cluster count for both sides.
    #[arg(long, conflicts_with_all = ["k_rows", "k_cols"])]
    k: Option<usize>,
    /// Sending-side cluster count (with --k-cols).
    #[arg(long, requires = "k_cols")]
    k_rows: Option<usize>,
    /// Receiving-side cluster count (with --k-rows).
    #[arg(long, requires = "k_rows")]
    k_cols: Option<usize>,
    /// Degree regularizer: "auto" (average degree) or a fixed value.
    #[arg(long, default_value = "auto", value_parser = parse_tau)]
    tau: TauPolicy,
    /// Cluster raw singular vector rows instead of normalizing them first.
    #[arg(long)]
    no_project: bool,
    /// Stack both sides and run a single k-means with shared centroids.
    #[arg(long)]
    stacked: bool,
    /// Cluster only nodes with embedding row norm above eta*sqrt(k/n).
    #[arg(long)]
    leverage_eta: Option<f64>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Omit nodes with in-degree below this from the report (never from the
    /// clustering).
    #[arg(long)]
    min_in: Option<f64>,
    /// Omit nodes with out-degree below this from the report.
    #[arg(long)]
    min_out: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MovementArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Cluster count (and embedding width) for both roles.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "auto", value_parser = parse_tau)]
    tau: TauPolicy,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sweep description (JSON).
    #[arg(long)]
    sweep: PathBuf,
    /// Override the seed recorded in the sweep file.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent grid cells (defaults to the core count).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Model description (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Failure probability the bounds hold up to.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Override the sending-side constant.
    #[arg(long)]
    c0: Option<f64>,
    /// Override the receiving-side constant.
    #[arg(long)]
    c1: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScreeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// How many leading singular values to print.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value = "auto", value_parser = parse_tau)]
    tau: TauPolicy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::EmptyGraph(_)
        | Error::InvalidArgument(_)
        | Error::SizeCap(_)
        | Error::Io(_) => 2,
        Error::NonConvergence { .. } | Error::Serialization(_) => 1,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Movement(a) => cmd_movement(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Scree(a) => cmd_scree(a),
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, body).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", p.display()),
                ))
            })
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Malformed user-supplied JSON is an input error, not a runtime one.
fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        origin: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn load_graph(args: &GraphArgs) -> Result<LoadedGraph> {
    let opts = LoadOptions {
        kind: if args.bipartite {
            GraphKind::Bipartite
        } else {
            GraphKind::Directed
        },
        weighted: args.weighted,
        ..LoadOptions::default()
    };
    load_edge_list(&args.graph, &opts)
}

fn config_comment<T: Serialize>(cfg: &T) -> Result<String> {
    Ok(format!("# config={}\n", serde_json::to_string(cfg)?))
}

fn json_document<T: Serialize>(cfg: &T, result: serde_json::Value) -> Result<String> {
    let doc = serde_json::json!({
        "config": serde_json::to_value(cfg)?,
        "result": result,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

#[derive(Serialize)]
struct ClusterConfig {
    command: &'static str,
    graph: String,
    bipartite: bool,
    weighted: bool,
    k_rows: usize,
    k_cols: usize,
    tau_policy: String,
    /// Regularizer actually applied.
    tau: f64,
    project: bool,
    stacked: bool,
    leverage_eta: Option<f64>,
    restarts: usize,
    seed: u64,
    min_in: Option<f64>,
    min_out: Option<f64>,
    format: &'static str,
}

/// Which report lines survive the degree thresholds. The clustering itself
/// always sees every node; these only prune the listing.
fn report_masks(
    lg: &LoadedGraph,
    min_in: Option<f64>,
    min_out: Option<f64>,
) -> (Vec<bool>, Vec<bool>) {
    let out_deg = lg.graph.out_degrees();
    let in_deg = lg.graph.in_degrees();
    match lg.graph.kind() {
        GraphKind::Directed => {
            let keep: Vec<bool> = (0..lg.graph.n_rows())
                .map(|i| {
                    min_out.is_none_or(|t| out_deg[i] >= t)
                        && min_in.is_none_or(|t| in_deg[i] >= t)
                })
                .collect();
            (keep.clone(), keep)
        }
        GraphKind::Bipartite => (
            (0..lg.graph.n_rows())
                .map(|i| min_out.is_none_or(|t| out_deg[i] >= t))
                .collect(),
            (0..lg.graph.n_cols())
                .map(|j| min_in.is_none_or(|t| in_deg[j] >= t))
                .collect(),
        ),
    }
}

/// Drops the body lines of excluded nodes; line order mirrors node order
/// (rows first for bipartite graphs).
fn filter_csv_body(body: &str, keep_rows: &[bool], keep_cols: &[bool], kind: GraphKind) -> String {
    let mut lines = body.lines();
    let mut s = String::new();
    if let Some(header) = lines.next() {
        s.push_str(header);
        s.push('\n');
    }
    let keep: Vec<&bool> = match kind {
        GraphKind::Directed => keep_rows.iter().collect(),
        GraphKind::Bipartite => keep_rows.iter().chain(keep_cols.iter()).collect(),
    };
    for (line, keep) in lines.zip(keep) {
        if *keep {
            s.push_str(line);
            s.push('\n');
        }
    }
    s
}

fn filter_json_nodes(doc: &mut serde_json::Value, keep_rows: &[bool], keep_cols: &[bool]) {
    for (field, keep) in [("rows", keep_rows), ("cols", keep_cols)] {
        if let Some(arr) = doc.get_mut(field).and_then(|v| v.as_array_mut()) {
            let mut it = keep.iter();
            arr.retain(|_| *it.next().unwrap_or(&true));
        }
    }
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let (k_rows, k_cols) = match (args.k, args.k_rows, args.k_cols) {
        (Some(k), None, None) => (k, k),
        (None, Some(r), Some(c)) => (r, c),
        _ => {
            return Err(Error::InvalidArgument(
                "pass --k, or --k-rows together with --k-cols".into(),
            ))
        }
    };
    let lg = load_graph(&args.graph)?;
    let opts = DisimOptions {
        tau: match args.tau {
            TauPolicy::Auto => None,
            TauPolicy::Fixed(t) => Some(t),
        },
        project: !args.no_project,
        stacked: args.stacked,
        leverage_eta: args.leverage_eta,
        restarts: args.restarts,
        seed: args.seed,
        ..DisimOptions::default()
    };
    let cc = run_disim(&lg.graph, k_rows, k_cols, &opts)?;
    let cfg = ClusterConfig {
        command: "cluster",
        graph: args.graph.graph.display().to_string(),
        bipartite: args.graph.bipartite,
        weighted: args.graph.weighted,
        k_rows,
        k_cols,
        tau_policy: args.tau.to_string(),
        tau: cc.variant.tau,
        project: cc.variant.projected,
        stacked: cc.variant.stacked,
        leverage_eta: args.leverage_eta,
        restarts: args.restarts,
        seed: args.seed,
        min_in: args.min_in,
        min_out: args.min_out,
        format: args.output.format.name(),
    };
    let (keep_rows, keep_cols) = report_masks(&lg, args.min_in, args.min_out);
    let body = match args.output.format {
        Format::Csv => {
            let csv = clustering_csv(&cc, &lg.row_labels, &lg.col_labels)?;
            format!(
                "{}{}",
                config_comment(&cfg)?,
                filter_csv_body(&csv, &keep_rows, &keep_cols, cc.kind)
            )
        }
        Format::Json => {
            let mut doc: serde_json::Value =
                serde_json::from_str(&clustering_json(&cc, &lg.row_labels, &lg.col_labels)?)?;
            filter_json_nodes(&mut doc, &keep_rows, &keep_cols);
            json_document(&cfg, doc)?
        }
    };
    emit(&args.output.out, &body)
}

#[derive(Serialize)]
struct MovementConfig {
    command: &'static str,
    graph: String,
    weighted: bool,
    k: usize,
    tau_policy: String,
    tau: f64,
    restarts: usize,
    seed: u64,
    format: &'static str,
}

fn cmd_movement(args: MovementArgs) -> Result<()> {
    if args.graph.bipartite {
        return Err(Error::InvalidArgument(
            "movement compares two roles of one node set; bipartite graphs have none".into(),
        ));
    }
    let lg = load_graph(&args.graph)?;
    let opts = DisimOptions {
        tau: match args.tau {
            TauPolicy::Auto => None,
            TauPolicy::Fixed(t) => Some(t),
        },
        restarts: args.restarts,
        seed: args.seed,
        ..DisimOptions::default()
    };
    let cc = run_disim(&lg.graph, args.k, args.k, &opts)?;
    let movement = movement_scores(&cc.embedding, cc.variant.k)?;
    let cfg = MovementConfig {
        command: "movement",
        graph: args.graph.graph.display().to_string(),
        weighted: args.graph.weighted,
        k: args.k,
        tau_policy: args.tau.to_string(),
        tau: cc.variant.tau,
        restarts: args.restarts,
        seed: args.seed,
        format: args.output.format.name(),
    };
    let body = match args.output.format {
        Format::Csv => {
            let mut s = config_comment(&cfg)?;
            s.push_str("label,row_cluster,col_cluster,movement_score\n");
            for i in 0..movement.scores.len() {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    lg.row_labels[i],
                    fmt_cluster(cc.row_labels[i]),
                    fmt_cluster(cc.col_labels[i]),
                    movement.scores[i]
                ));
            }
            s
        }
        Format::Json => {
            let nodes: Vec<serde_json::Value> = (0..movement.scores.len())
                .map(|i| {
                    serde_json::json!({
                        "label": lg.row_labels[i],
                        "row_cluster": cc.row_labels[i],
                        "col_cluster": cc.col_labels[i],
                        "movement": movement.scores[i],
                    })
                })
                .collect();
            json_document(
                &cfg,
                serde_json::json!({
                    "k": movement.k,
                    "sigma": cc.embedding.sigma,
                    "nodes": nodes,
                }),
            )?
        }
    };
    emit(&args.output.out, &body)
}

fn fmt_cluster(l: Option<usize>) -> String {
    l.map_or_else(|| "unassigned".to_string(), |v| v.to_string())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        // Ignore failure: the pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let mut spec: SweepSpec = parse_json(&args.sweep)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let outcome = run_sweep(&spec)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let body = match args.output.format {
        Format::Csv => sweep_csv(&outcome)?,
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&outcome)?),
    };
    emit(&args.output.out, &body)
}

#[derive(Serialize)]
struct BoundsConfig {
    command: &'static str,
    model: String,
    epsilon: f64,
    c0: f64,
    c1: f64,
    /// Seed recorded in the model file, if any; the bounds themselves are
    /// deterministic.
    model_seed: Option<u64>,
    format: &'static str,
}

fn flatten_scalars(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_scalars(&key, val, out);
            }
        }
        serde_json::Value::Array(_) | serde_json::Value::Null => {}
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<()> {
    let model: BlockModel = parse_json(&args.model)?;
    let po = population_objects(&model)?;
    let mut constants = BoundConstants::default();
    if let Some(c0) = args.c0 {
        constants.c0 = c0;
    }
    if let Some(c1) = args.c1 {
        constants.c1 = c1;
    }
    let report = theorem_bounds(&po, args.epsilon, constants)?;
    let cfg = BoundsConfig {
        command: "bounds",
        model: args.model.display().to_string(),
        epsilon: args.epsilon,
        c0: constants.c0,
        c1: constants.c1,
        model_seed: model.seed(),
        format: args.output.format.name(),
    };
    let body = match args.output.format {
        Format::Csv => {
            let mut s = config_comment(&cfg)?;
            s.push_str("key,value\n");
            let mut pairs = Vec::new();
            flatten_scalars("", &serde_json::to_value(&report)?, &mut pairs);
            for (k, v) in pairs {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
        Format::Json => json_document(&cfg, serde_json::to_value(&report)?)?,
    };
    emit(&args.output.out, &body)
}

#[derive(Serialize)]
struct ScreeConfig {
    command: &'static str,
    graph: String,
    bipartite: bool,
    weighted: bool,
    requested: usize,
    emitted: usize,
    tau_policy: String,
    tau: f64,
    seed: u64,
    format: &'static str,
}

fn cmd_scree(args: ScreeArgs) -> Result<()> {
    let lg = load_graph(&args.graph)?;
    let lap = build_laplacian(
        &lg.graph,
        match args.tau {
            TauPolicy::Auto => None,
            TauPolicy::Fixed(t) => Some(t),
        },
    )?;
    let min_dim = lg.graph.n_rows().min(lg.graph.n_cols());
    let k = args.count.min(min_dim);
    if args.count > min_dim {
        eprintln!("warning: only {min_dim} singular values exist; truncating");
    }
    let sigma = if k == 0 {
        Vec::new()
    } else {
        truncated_svd_with(&lap.matrix, k, 1e-8, 500, args.seed, 10)?.sigma
    };
    let cfg = ScreeConfig {
        command: "scree",
        graph: args.graph.graph.display().to_string(),
        bipartite: args.graph.bipartite,
        weighted: args.graph.weighted,
        requested: args.count,
        emitted: k,
        tau_policy: args.tau.to_string(),
        tau: lap.tau,
        seed: args.seed,
        format: args.output.format.name(),
    };
    let body = match args.output.format {
        Format::Csv => {
            let mut s = config_comment(&cfg)?;
            s.push_str("rank,value\n");
            for (i, v) in sigma.iter().enumerate() {
                s.push_str(&format!("{},{}\n", i + 1, v));
            }
            s
        }
        Format::Json => json_document(&cfg, serde_json::json!({ "values": sigma }))?,
    };
    emit(&args.output.out, &body)
}
