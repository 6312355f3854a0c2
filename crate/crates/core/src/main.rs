use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pe_forge::compare::{compare_csv, score_embedding};
use pe_forge::io::{self, PeMeta};
use pe_forge::opt::{optimize_bias, ObjectiveWeights, OptConfig, Schedule};
use pe_forge::pesi::pesi_report;
use pe_forge::three_cell::{self, DatasetSpec, Task};
use pe_forge::{
    apply_bias, cosine_field, embed, make_frequencies, Error, GridShape, OrderKind,
};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pe-forge", version, about = "Patch orders, positional embeddings and their structural metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a patch order as CSV.
    GenOrder(GenOrderArgs),
    /// Embed an order with sinusoidal positional embeddings.
    GenPe(GenPeArgs),
    /// Render one center's similarity map as PGM (plus raw CSV).
    Simmap(SimmapArgs),
    /// Score an embedding CSV with the structural-integrity metrics.
    Pesi(PesiArgs),
    /// Three-cell synthetic benchmark.
    #[command(name = "three-cell", subcommand)]
    ThreeCell(ThreeCellCommand),
    /// Search for a context bias that improves the metric objective.
    Optimize(OptimizeArgs),
    /// Metric table over several orders / embeddings.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenOrderArgs {
    #[arg(long)]
    kind: OrderKindArg,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OrderKindArg {
    Zigzag,
    Hilbert,
    Gilbert,
}

impl From<OrderKindArg> for OrderKind {
    fn from(k: OrderKindArg) -> Self {
        match k {
            OrderKindArg::Zigzag => OrderKind::Zigzag,
            OrderKindArg::Hilbert => OrderKind::Hilbert,
            OrderKindArg::Gilbert => OrderKind::Gilbert,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct GenPeArgs {
    #[arg(long)]
    order: PathBuf,
    #[arg(long = "dmodel")]
    d_model: usize,
    #[arg(long, default_value_t = 10_000.0)]
    base: f64,
    /// Multiplier applied to positions before embedding.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimmapArgs {
    #[arg(long)]
    pe: PathBuf,
    /// Center cell as ROW,COL.
    #[arg(long, value_parser = parse_center)]
    center: (usize, usize),
    #[arg(long)]
    out: PathBuf,
    /// Raw similarity CSV; defaults to the PGM path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PesiArgs {
    #[arg(long)]
    pe: PathBuf,
    #[arg(long, default_value_t = 60)]
    buckets: usize,
    /// Bucket counts for the directed-monotonicity sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,15,30,60")]
    sweep: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ThreeCellCommand {
    /// Generate images, manifest.csv and spec.json.
    Gen(ThreeCellGenArgs),
    /// Re-check a generated dataset against its manifest.
    Verify(ThreeCellVerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct ThreeCellGenArgs {
    #[arg(long, required_unless_present = "from_spec")]
    count: Option<usize>,
    #[arg(long, required_unless_present = "from_spec")]
    task: Option<TaskArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regenerate from an existing spec.json (overrides count/task/seed).
    #[arg(long)]
    from_spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TaskArg {
    Distance,
    Orientation,
    Area,
    Vecsum,
    Sixclass,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Distance => Task::Distance,
            TaskArg::Orientation => Task::Orientation,
            TaskArg::Area => Task::Area,
            TaskArg::Vecsum => Task::VectorSum,
            TaskArg::Sixclass => Task::SixClass,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct ThreeCellVerifyArgs {
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    order: PathBuf,
    #[arg(long = "dmodel")]
    d_model: usize,
    #[arg(long, default_value_t = 10_000.0)]
    base: f64,
    /// Objective weights MU,MD,ASU.
    #[arg(long, default_value = "1,0,0", value_parser = parse_weights)]
    weights: [f64; 3],
    #[arg(long, default_value_t = 60)]
    buckets: usize,
    #[arg(long, default_value_t = 2_000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "anneal", value_parser = parse_schedule)]
    schedule: Schedule,
    #[arg(long, default_value_t = 0.5)]
    proposal_scale: f64,
    /// Output files BIAS_CSV,TRACE_CSV.
    #[arg(long, value_parser = parse_out_pair)]
    out: (PathBuf, PathBuf),
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long, default_value_t = 14)]
    width: usize,
    #[arg(long, default_value_t = 14)]
    height: usize,
    #[arg(long = "dmodel", default_value_t = 768)]
    d_model: usize,
    #[arg(long, default_value_t = 10_000.0)]
    base: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 60)]
    buckets: usize,
    /// Static orders to embed and score.
    #[arg(long, value_delimiter = ',', default_value = "zigzag,gilbert")]
    methods: Vec<OrderKindArg>,
    /// LABEL=PATH bias files applied on top of the gilbert order.
    #[arg(long, value_parser = parse_labeled)]
    bias: Vec<(String, PathBuf)>,
    /// LABEL=PATH embedding CSVs scored as-is.
    #[arg(long, value_parser = parse_labeled)]
    pe: Vec<(String, PathBuf)>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_center(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    let r = r.trim().parse().map_err(|_| format!("invalid row `{r}`"))?;
    let c = c.trim().parse().map_err(|_| format!("invalid col `{c}`"))?;
    Ok((r, c))
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [mu, md, asu] = parts[..] else {
        return Err("expected MU,MD,ASU".into());
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid weight `{v}`"));
    Ok([num(mu)?, num(md)?, num(asu)?])
}

fn parse_out_pair(s: &str) -> Result<(PathBuf, PathBuf), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.into(), b.into())),
        _ => Err("expected BIAS_CSV,TRACE_CSV".into()),
    }
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    s.parse()
}

fn parse_labeled(s: &str) -> Result<(String, PathBuf), String> {
    let (label, path) = s.split_once('=').ok_or("expected LABEL=PATH")?;
    if label.is_empty() || label.contains(',') {
        return Err("label must be non-empty and contain no commas".into());
    }
    Ok((label.to_string(), PathBuf::from(path)))
}

fn output_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Records the fully resolved configuration next to the outputs.
fn write_run_json<T: Serialize>(dir: &Path, subcommand: &str, args: &T, extra: serde_json::Value) -> Result<(), Error> {
    let value = json!({
        "tool": "pe-forge",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "args": args,
        "resolved": extra,
    });
    io::write_json(&dir.join("run.json"), &value)
}

fn shape_json(shape: GridShape) -> serde_json::Value {
    json!({ "width": shape.width(), "height": shape.height() })
}

fn gen_order(args: &GenOrderArgs) -> Result<(), Error> {
    let shape = GridShape::new(args.width, args.height)?;
    let order = OrderKind::from(args.kind).build(shape)?;
    io::write_atomic(&args.out, io::write_order_csv(&order).as_bytes())?;
    write_run_json(&output_dir(&args.out), "gen-order", args, json!({ "grid": shape_json(shape) }))
}

fn gen_pe(args: &GenPeArgs) -> Result<(), Error> {
    let order = io::parse_order_csv(&io::read_text(&args.order)?)?;
    let freqs = make_frequencies(args.d_model, args.base)?;
    check_scale(args.scale)?;
    let emb = embed(&order.scaled(args.scale), &freqs);
    let meta = PeMeta {
        base: Some(args.base),
        scale: Some(args.scale),
    };
    io::write_atomic(&args.out, io::write_pe_csv(&emb, &meta).as_bytes())?;
    write_run_json(&output_dir(&args.out), "gen-pe", args, json!({ "grid": shape_json(order.shape()) }))
}

fn check_scale(scale: f64) -> Result<(), Error> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")))
    }
}

fn simmap(args: &SimmapArgs) -> Result<(), Error> {
    let (emb, _) = io::parse_pe_csv(&io::read_text(&args.pe)?)?;
    let field = cosine_field(&emb)?;
    let shape = field.shape();
    let (row, col) = args.center;
    if !shape.contains(row, col) {
        return Err(Error::CenterOutOfGrid { row, col });
    }
    let center = shape.cell(row, col);
    io::write_atomic(&args.out, &io::encode_similarity_pgm(&field, center))?;
    let csv = args.csv.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    io::write_atomic(&csv, io::similarity_map_csv(&field, center).as_bytes())?;
    write_run_json(&output_dir(&args.out), "simmap", args, json!({ "csv": csv, "grid": shape_json(shape) }))
}

fn pesi(args: &PesiArgs) -> Result<(), Error> {
    let (emb, meta) = io::parse_pe_csv(&io::read_text(&args.pe)?)?;
    let field = cosine_field(&emb)?;
    let report = pesi_report(&field, args.buckets, &args.sweep)?;
    let value = json!({
        "m_u": report.m_u,
        "m_d": report.m_d,
        "n_buckets": report.n_buckets,
        "a_su": report.a_su,
        "sweep": report.sweep,
        "config": {
            "d_model": emb.d_model(),
            "base": meta.base,
            "scale": meta.scale,
            "grid": shape_json(emb.shape()),
        },
        "warnings": report.warnings,
        "skipped_buckets": report.skipped_buckets,
        "single_bucket_residual": report.single_bucket_residual,
        "per_center_rho": report.per_center_rho,
    });
    io::write_json(&args.out, &value)?;
    write_run_json(&output_dir(&args.out), "pesi", args, json!({}))
}

fn three_cell_gen(args: &ThreeCellGenArgs) -> Result<(), Error> {
    let spec = match &args.from_spec {
        Some(path) => io::read_json::<DatasetSpec>(path)?,
        None => DatasetSpec::new(
            args.task.expect("clap enforces --task").into(),
            args.count.expect("clap enforces --count"),
            args.seed,
        ),
    };
    let rows = three_cell::gen_dataset(&spec, &args.out)?;
    write_run_json(&args.out, "three-cell gen", args, json!({ "spec": spec, "written": rows.len() }))
}

fn three_cell_verify(args: &ThreeCellVerifyArgs) -> Result<bool, Error> {
    let check = three_cell::verify_dataset(&args.dir)?;
    println!("{}", serde_json::to_string_pretty(&check).expect("serializable"));
    Ok(check.is_clean())
}

fn optimize(args: &OptimizeArgs) -> Result<(), Error> {
    let order = io::parse_order_csv(&io::read_text(&args.order)?)?;
    let freqs = make_frequencies(args.d_model, args.base)?;
    let weights = ObjectiveWeights::new(args.weights[0], args.weights[1], args.weights[2], args.buckets)?;
    let cfg = OptConfig {
        iterations: args.iters,
        seed: args.seed,
        proposal_scale: args.proposal_scale,
        schedule: args.schedule,
        ..OptConfig::default()
    };
    let result = optimize_bias(&order, &freqs, &weights, &cfg)?;
    let (bias_path, trace_path) = (&args.out.0, &args.out.1);
    io::write_atomic(bias_path, io::write_bias_csv(&result.bias).as_bytes())?;
    io::write_atomic(trace_path, io::write_trace_csv(&result.trace).as_bytes())?;
    write_run_json(
        &output_dir(bias_path),
        "optimize",
        args,
        json!({
            "weights": weights,
            "config": cfg,
            "grid": shape_json(order.shape()),
            "j_initial": result.j_initial,
            "j_best": result.j_best,
            "accepted": result.accepted,
            "initial_temperature": result.initial_temperature,
        }),
    )
}

fn compare(args: &CompareArgs) -> Result<(), Error> {
    let shape = GridShape::new(args.width, args.height)?;
    let freqs = make_frequencies(args.d_model, args.base)?;
    check_scale(args.scale)?;
    if args.buckets == 0 {
        return Err(Error::InvalidBucketCount);
    }
    let mut rows = Vec::new();
    for &kind in &args.methods {
        let kind = OrderKind::from(kind);
        let order = kind.build(shape)?;
        rows.push(score_embedding(kind.name(), &embed(&order.scaled(args.scale), &freqs), args.buckets)?);
    }
    for (label, path) in &args.bias {
        let bias = io::parse_bias_csv(&io::read_text(path)?, shape)?;
        let order = apply_bias(&pe_forge::gilbert_order(shape), &bias)?;
        rows.push(score_embedding(label, &embed(&order.scaled(args.scale), &freqs), args.buckets)?);
    }
    for (label, path) in &args.pe {
        let (emb, _) = io::parse_pe_csv(&io::read_text(path)?)?;
        rows.push(score_embedding(label, &emb, args.buckets)?);
    }
    io::write_atomic(&args.out, compare_csv(&rows).as_bytes())?;
    write_run_json(&output_dir(&args.out), "compare", args, json!({ "rows": rows.len() }))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Json { .. } => EXIT_IO,
        Error::Invariant(_) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::GenOrder(a) => gen_order(&a)?,
        Command::GenPe(a) => gen_pe(&a)?,
        Command::Simmap(a) => simmap(&a)?,
        Command::Pesi(a) => pesi(&a)?,
        Command::ThreeCell(ThreeCellCommand::Gen(a)) => three_cell_gen(&a)?,
        Command::ThreeCell(ThreeCellCommand::Verify(a)) => {
            if !three_cell_verify(&a)? {
                return Ok(EXIT_INTERNAL);
            }
        }
        Command::Optimize(a) => optimize(&a)?,
        Command::Compare(a) => compare(&a)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
