use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use layerscope::export::{self, RETRACT_SCHEMA};
use layerscope::layer_points::{global_branch_points, global_layer_points, PointKind};
use layerscope::metric::{self, farthest_point_sample, load_coordinates, load_distance_matrix};
use layerscope::stability::{self, Outcome, Parameters};
use layerscope::{FiniteMetricSpace, GammaPoset, Metric, MetricError, Scalar, StepClustering, Subsample};

#[derive(Parser)]
#[command(name = "layerscope", version, about = "Degree-Rips clusterings, layer points and retract checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the degree-Rips clustering and its Gamma poset.
    Cluster(ClusterArgs),
    /// List layer or branch points.
    LayerPoints(LayerPointArgs),
    /// Check the retract conditions for a subsample.
    RetractCheck(RetractArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// CSV of coordinates: an optional header, then `label,x1,..,xd` rows.
    #[arg(long)]
    points: Option<PathBuf>,
    /// CSV distance matrix with a header row of labels.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    input: Input,
    /// Metric for `--points` input.
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args)]
struct ClusteringChoice {
    /// Largest degree of the bifiltration.
    #[arg(long, default_value_t = 2)]
    kmax: usize,
    /// Use the single-axis degree-k slice instead of the bifiltration.
    #[arg(long, conflicts_with = "kmax")]
    degree: Option<usize>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    choice: ClusteringChoice,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct LayerPointArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    choice: ClusteringChoice,
    /// Global points (the default).
    #[arg(long, conflicts_with = "slice")]
    global: bool,
    /// Points of the slices along axis `i` (1-based).
    #[arg(long, value_name = "I")]
    slice: Option<usize>,
    /// Branch points instead of layer points.
    #[arg(long)]
    branch: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Corollary {
    Main,
    Smallparam,
    Truncation,
    XyNote,
}

#[derive(Args)]
struct RetractArgs {
    #[command(flatten)]
    common: Common,
    /// Sample as comma-separated 0-based indices into Y.
    #[arg(long, conflicts_with_all = ["subsample_file", "farthest"])]
    subsample: Option<String>,
    /// Sample as a file of labels, one per line or comma-separated.
    #[arg(long, conflicts_with = "farthest")]
    subsample_file: Option<PathBuf>,
    /// Sample this many points by farthest-point sampling.
    #[arg(long, value_name = "N")]
    farthest: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    c: Option<Scalar>,
    #[arg(long)]
    eps: Option<Scalar>,
    #[arg(long)]
    delta: Option<Scalar>,
    #[arg(long, value_enum, default_value = "main")]
    corollary: Corollary,
    /// Use every gap (`M = U`) instead of the least merge index.
    #[arg(long)]
    force_m: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", &e.to_string(), None),
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(kind_of(&e), &format!("{e:#}"), witness_of(&e)),
    }
}

fn fail(kind: &str, message: &str, witness: Option<Value>) -> ExitCode {
    let mut doc = export::error_json(kind, message.trim());
    if let Some(w) = witness {
        doc["witness"] = w;
    }
    let _ = io::stderr().write_all(export::to_pretty(&doc).as_bytes());
    ExitCode::from(2)
}

/// The offending indices of a metric validation error.
fn witness_of(e: &anyhow::Error) -> Option<Value> {
    let w = match e.downcast_ref::<MetricError>()? {
        MetricError::TriangleViolation { i, j, k } => json!({ "i": i, "j": j, "k": k }),
        MetricError::Asymmetric { i, j } | MetricError::NegativeEntry { i, j } => json!({ "i": i, "j": j }),
        MetricError::NonzeroDiagonal { i } => json!({ "i": i }),
        MetricError::NotSquare { row, found, expected } => json!({ "row": row, "found": found, "expected": expected }),
        _ => return None,
    };
    Some(w)
}

fn kind_of(e: &anyhow::Error) -> &'static str {
    if e.downcast_ref::<io::Error>().is_some() {
        "io"
    } else if e.downcast_ref::<MetricError>().is_some() {
        "input"
    } else {
        "validation"
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::LayerPoints(args) => cmd_layer_points(args),
        Command::RetractCheck(args) => cmd_retract_check(args),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn load(common: &Common) -> Result<FiniteMetricSpace> {
    let space = match (&common.input.points, &common.input.matrix) {
        (Some(path), _) => load_coordinates(open(path)?, common.metric)?,
        (_, Some(path)) => load_distance_matrix(open(path)?)?,
        _ => bail!("one of --points or --matrix is required"),
    };
    Ok(space)
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn build(z: &FiniteMetricSpace, choice: &ClusteringChoice) -> Result<StepClustering> {
    Ok(match choice.degree {
        Some(k) => StepClustering::degree_rips_slice(z, k)?,
        None => StepClustering::from_degree_rips(z, choice.kmax)?,
    })
}

fn cmd_cluster(args: ClusterArgs) -> Result<u8> {
    let z = load(&args.common)?;
    let h = build(&z, &args.choice)?;
    let g = GammaPoset::new(h.clone());
    let text = match args.format {
        Format::Json => export::to_pretty(&export::clustering_json(&h, z.labels(), Some(&g))),
        Format::Dot => export::gamma_dot(&g, z.labels()),
    };
    emit(&args.common, &text)?;
    Ok(0)
}

fn cmd_layer_points(args: LayerPointArgs) -> Result<u8> {
    let z = load(&args.common)?;
    let g = GammaPoset::new(build(&z, &args.choice)?);
    let (kind, set) = if args.branch {
        (PointKind::Branch, global_branch_points(&g))
    } else {
        (PointKind::Layer, global_layer_points(&g))
    };
    let axis = match args.slice {
        Some(0) => bail!("--slice is 1-based"),
        Some(i) if i > g.dims() => bail!("--slice {i} but the clustering has {} axes", g.dims()),
        Some(i) => Some(i - 1),
        None => None,
    };
    let ids = axis.map_or(&set.global, |a| &set.slices[a]);
    let text = match args.format {
        Format::Json => export::to_pretty(&export::layer_points_json(&g, ids, kind, axis, z.labels())),
        Format::Dot => export::layer_points_dot(&g, ids, z.labels()),
    };
    emit(&args.common, &text)?;
    Ok(0)
}

fn parse_indices(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().with_context(|| format!("bad subsample index {s:?}")))
        .collect()
}

fn indices_from_labels(y: &FiniteMetricSpace, text: &str) -> Result<Vec<usize>> {
    text.split([',', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty() && !s.starts_with('#'))
        .map(|s| y.labels().iter().position(|l| l == s).with_context(|| format!("unknown label {s:?} in subsample file")))
        .collect()
}

fn subsample<'a>(y: &'a FiniteMetricSpace, args: &RetractArgs) -> Result<Subsample<'a>> {
    let x = if let Some(list) = &args.subsample {
        Subsample::new(y, parse_indices(list)?)?
    } else if let Some(path) = &args.subsample_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Subsample::new(y, indices_from_labels(y, &text)?)?
    } else if let Some(n) = args.farthest {
        farthest_point_sample(y, n, args.seed)?
    } else {
        Subsample::full(y)
    };
    Ok(x)
}

/// Unset values follow the closed-form defaults: `ε = N_k`,
/// `c = max(0, N_k - ε)`, `δ = max(2h, N_k - ε)`.
fn parameters(x: &Subsample<'_>, args: &RetractArgs) -> Result<Parameters> {
    let n_k = metric::density_radius(x, args.k)?;
    let h = metric::directional_hausdorff(x);
    let epsilon = args.eps.unwrap_or(n_k);
    let floor = (n_k - epsilon).max(Scalar::ZERO);
    Ok(Parameters {
        k: args.k,
        c: args.c.unwrap_or(floor),
        epsilon,
        delta: args.delta.unwrap_or(h.times(2).max(floor)),
        force_m: args.force_m,
    })
}

fn cmd_retract_check(args: RetractArgs) -> Result<u8> {
    let y = load(&args.common)?;
    let x = subsample(&y, &args)?;
    let (body, outcome): (Value, Outcome) = match args.corollary {
        Corollary::Main => {
            let params = parameters(&x, &args)?;
            let r = stability::check_main_theorem(&x, &params)?;
            (serde_json::to_value(&r)?, r.outcome)
        }
        Corollary::Smallparam => {
            let r = stability::check_smallparam(&x, args.k, args.force_m)?;
            (serde_json::to_value(&r)?, r.outcome)
        }
        Corollary::Truncation => {
            let c = args.c.unwrap_or(Scalar::ZERO);
            let r = stability::check_truncation_iso(&x.induced(), c, args.force_m)?;
            (serde_json::to_value(&r)?, r.outcome)
        }
        Corollary::XyNote => {
            let induced = x.induced();
            let params = parameters(&Subsample::full(&induced), &args)?;
            let r = stability::check_k_positive_note(&induced, &params)?;
            (serde_json::to_value(r)?, r.outcome)
        }
    };
    let corollary = args.corollary.to_possible_value().expect("no skipped variants").get_name().to_string();
    let labels: Vec<&str> = x.indices().iter().map(|&i| y.label(i)).collect();
    let doc = json!({
        "corollary": corollary,
        "sample": { "indices": x.indices(), "labels": labels },
        "points": y.len(),
        "report": body,
        "outcome": outcome,
        "exit_code": outcome.exit_code(),
    });
    emit(&args.common, &export::to_pretty(&export::with_schema(RETRACT_SCHEMA, &doc)))?;
    Ok(outcome.exit_code() as u8)
}
