//! Command-line frontend: compute diagrams, run the optimization and
//! regression studies, extract features, run gradient attacks, and verify
//! the numeric oracles. Every run writes plot-ready CSVs plus a manifest
//! that pins the resolved configuration.

mod io;
mod manifest;
mod selftest;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use topograd::experiments::{
    self, gradient_attack, optimize_point_cloud, optimize_scalar_field, regularized_regression,
    shape_dataset, shape_image, topo_features, train_classifier, BetaKind, FiltrationKind,
    OptimizationConfig, Penalty, RegressionProblem, ShapeClass, WeightedLoss,
};
use topograd::filtration::FieldShape;
use topograd::{lower_star, reduce, rips_filtration, weak_alpha_filtration, Direction, TieBreak};

use io::ImageFormat;
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "topograd",
    version,
    about = "Differentiable persistent homology: diagrams, losses, gradients and experiments"
)]
struct Cli {
    /// RNG seed; identical invocations produce identical outputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for all output files.
    #[arg(long, global = true, default_value = "topograd_out")]
    out_dir: PathBuf,

    /// Format for image outputs.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a persistence diagram of a point cloud or image.
    Persistence(PersistenceArgs),
    /// Gradient-descend a diagram loss over points or pixels.
    Optimize(OptimizeArgs),
    /// Regularized-regression study with classical and topological penalties.
    Regress(RegressArgs),
    /// Extract the 400 directional persistence features of an image.
    Features(FeaturesArgs),
    /// Gradient attack on a topological-feature classifier.
    Attack(AttackArgs),
    /// Run the built-in numeric oracle suites.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum FormatArg {
    Csv,
    Pgm,
}

impl FormatArg {
    fn image(self) -> ImageFormat {
        match self {
            FormatArg::Csv => ImageFormat::Csv,
            FormatArg::Pgm => ImageFormat::Pgm,
        }
    }

    fn ext(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Pgm => "pgm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum FiltrationArg {
    Rips,
    WeakAlpha,
    LowerStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum DirectionArg {
    Sub,
    Super,
}

impl DirectionArg {
    fn direction(self) -> Direction {
        match self {
            DirectionArg::Sub => Direction::Sublevel,
            DirectionArg::Super => Direction::Superlevel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum TieBreakArg {
    Deterministic,
    Random,
}

impl TieBreakArg {
    fn tie_break(self, seed: u64) -> TieBreak {
        match self {
            TieBreakArg::Deterministic => TieBreak::Deterministic,
            TieBreakArg::Random => TieBreak::Seeded(seed),
        }
    }
}

#[derive(Args, Serialize)]
struct PersistenceArgs {
    /// Points CSV (rips/weak-alpha) or image PGM/CSV (lower-star).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    filtration: FiltrationArg,
    /// Largest homology dimension to report.
    #[arg(long, default_value_t = 1)]
    max_dim: usize,
    /// Rips edge-length cutoff (default: point-set diameter).
    #[arg(long)]
    threshold: Option<f64>,
    /// Sublevel or superlevel sweep for lower-star filtrations.
    #[arg(long, value_enum, default_value_t = DirectionArg::Sub)]
    direction: DirectionArg,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    filtration: FiltrationArg,
    /// Loss terms, e.g. "E(2,0,2;PD0)" or
    /// "-E(2,1,1;PD1)*0.5" (repeatable; minus means increase).
    #[arg(long = "loss", required = true)]
    losses: Vec<String>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Step size (default 1e-2 for point clouds, 1e-1 for images).
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    #[arg(long)]
    backtracking: bool,
    #[arg(long, value_enum, default_value_t = TieBreakArg::Deterministic)]
    tie_break: TieBreakArg,
    #[arg(long)]
    threshold: Option<f64>,
    /// Rips clique dimension (default: largest loss dimension).
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Super)]
    direction: DirectionArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum BetaArg {
    /// Entries i.i.d. from {1, 2, 3}.
    ThreeValues,
    /// Entries i.i.d. from {-1, 0, 1}.
    ThreeValuesSigned,
    Sawtooth,
    Boxcar,
    CircleImage,
}

#[derive(Args, Serialize)]
struct RegressArgs {
    #[arg(long, value_enum)]
    beta: BetaArg,
    /// Penalty names (repeatable): l1, l2, tv, tv2, top1, top2,
    /// top1-level, top2-level, image-topo.
    #[arg(long = "penalty", required = true)]
    penalties: Vec<String>,
    /// Training-set sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "60")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    p: usize,
    /// Number of seeds to average over.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 400)]
    iters: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

#[derive(Args, Serialize)]
struct FeaturesArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum ShapeArg {
    Disk,
    Annulus,
    TwoDisks,
}

impl ShapeArg {
    fn class(self) -> ShapeClass {
        match self {
            ShapeArg::Disk => ShapeClass::Disk,
            ShapeArg::Annulus => ShapeClass::Annulus,
            ShapeArg::TwoDisks => ShapeClass::TwoDisks,
        }
    }
}

#[derive(Args, Serialize)]
struct AttackArgs {
    /// Image to attack; omit to synthesize one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Class of the synthesized victim image.
    #[arg(long, value_enum)]
    synthetic: Option<ShapeArg>,
    /// Target class index, or "same-as-prediction".
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
    /// Training images per class for the victim classifier.
    #[arg(long, default_value_t = 20)]
    train_per_class: usize,
    /// Side length of synthesized images.
    #[arg(long, default_value_t = 16)]
    image_size: usize,
}

#[derive(Args, Serialize)]
struct SelftestArgs {
    /// Smaller instance counts.
    #[arg(long)]
    quick: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    let started = Instant::now();
    match run(&cli, started) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: &Cli, started: Instant) -> Result<()> {
    match &cli.command {
        Command::Persistence(args) => cmd_persistence(cli, args, started),
        Command::Optimize(args) => cmd_optimize(cli, args, started),
        Command::Regress(args) => cmd_regress(cli, args, started),
        Command::Features(args) => cmd_features(cli, args, started),
        Command::Attack(args) => cmd_attack(cli, args, started),
        Command::Selftest(args) => selftest::run(cli.seed, args.quick),
    }
}

fn finish<C: Serialize>(
    cli: &Cli,
    command: &str,
    config: &C,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
) -> Result<()> {
    RunManifest::new(command, cli.seed, config, &inputs, &outputs, started)?
        .write(&cli.out_dir)?;
    for o in &outputs {
        println!("wrote {}", o.display());
    }
    Ok(())
}

fn parse_losses(raw: &[String]) -> Result<Vec<WeightedLoss>> {
    raw.iter()
        .map(|s| s.parse::<WeightedLoss>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn cmd_persistence(cli: &Cli, args: &PersistenceArgs, started: Instant) -> Result<()> {
    let diagram = match args.filtration {
        FiltrationArg::Rips => {
            let cloud = io::read_points(&args.input)?;
            let threshold = args.threshold.unwrap_or_else(|| cloud.diameter().max(1e-12));
            let f = rips_filtration(&cloud, args.max_dim, threshold)?;
            reduce(&f, args.max_dim)?
        }
        FiltrationArg::WeakAlpha => {
            let cloud = io::read_points(&args.input)?;
            let f = weak_alpha_filtration(&cloud)?;
            reduce(&f, args.max_dim.min(f.complex().max_dimension()))?
        }
        FiltrationArg::LowerStar => {
            let image = io::read_image(&args.input)?;
            let complex = std::sync::Arc::new(image.complex()?);
            let f = lower_star(complex, &image, args.direction.direction())?;
            reduce(&f, args.max_dim.min(f.complex().max_dimension()))?
        }
    };
    let out = cli.out_dir.join("diagram.csv");
    io::write_diagram(&out, &diagram)?;
    finish(
        cli,
        "persistence",
        args,
        vec![args.input.clone()],
        vec![out],
        started,
    )
}

fn cmd_optimize(cli: &Cli, args: &OptimizeArgs, started: Instant) -> Result<()> {
    let losses = parse_losses(&args.losses)?;
    let max_loss_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let kind = match args.filtration {
        FiltrationArg::Rips => FiltrationKind::Rips {
            max_hom_dim: args.max_dim.unwrap_or(max_loss_dim),
            threshold: args.threshold,
        },
        FiltrationArg::WeakAlpha => FiltrationKind::WeakAlpha,
        FiltrationArg::LowerStar => FiltrationKind::LowerStar {
            direction: args.direction.direction(),
        },
    };
    let mut cfg = OptimizationConfig::new(losses, kind);
    cfg.steps = args.steps;
    cfg.seed = cli.seed;
    cfg.tie_break = args.tie_break.tie_break(cli.seed);
    cfg.backtracking = args.backtracking;
    cfg.snapshot_every = args.snapshot_every;
    if let Some(lr) = args.lr {
        cfg.step_size = lr;
    }

    let mut outputs = Vec::new();
    match args.filtration {
        FiltrationArg::LowerStar => {
            let image = io::read_image(&args.input)?;
            let t = optimize_scalar_field(&image, &cfg)?;
            for (step, snap) in &t.snapshots {
                let p = cli
                    .out_dir
                    .join(format!("image_{step:06}.{}", cli.format.ext()));
                io::write_image(&p, snap, cli.format.image())?;
                outputs.push(p);
            }
            let fin = cli.out_dir.join(format!("final.{}", cli.format.ext()));
            io::write_image(&fin, &t.final_state, cli.format.image())?;
            outputs.push(fin);
            let curve = cli.out_dir.join("loss_curve.csv");
            io::write_loss_curve(&curve, &t.losses)?;
            outputs.push(curve);
        }
        _ => {
            let cloud = io::read_points(&args.input)?;
            let t = optimize_point_cloud(&cloud, &cfg)?;
            for (step, snap) in &t.snapshots {
                let p = cli.out_dir.join(format!("points_{step:06}.csv"));
                io::write_points(&p, snap)?;
                outputs.push(p);
            }
            let fin = cli.out_dir.join("final.csv");
            io::write_points(&fin, &t.final_state)?;
            outputs.push(fin);
            let curve = cli.out_dir.join("loss_curve.csv");
            io::write_loss_curve(&curve, &t.losses)?;
            outputs.push(curve);
            if t.degenerate_edge_events > 0 {
                eprintln!(
                    "warning: {} zero-length controller edges skipped",
                    t.degenerate_edge_events
                );
            }
        }
    }
    finish(
        cli,
        "optimize",
        args,
        vec![args.input.clone()],
        outputs,
        started,
    )
}

fn resolve_penalty(name: &str, p: usize) -> Result<Penalty> {
    if name.trim().eq_ignore_ascii_case("image-topo") {
        let side = (p as f64).sqrt().round() as usize;
        if side * side != p {
            bail!("image-topo penalty needs a square weight count, got p = {p}");
        }
        return Ok(Penalty::ImageTopo {
            rows: side,
            cols: side,
        });
    }
    name.parse::<Penalty>().map_err(|e| anyhow!("{e}"))
}

fn cmd_regress(cli: &Cli, args: &RegressArgs, started: Instant) -> Result<()> {
    let (beta_kind, p) = match args.beta {
        BetaArg::ThreeValues => (BetaKind::ThreeValues([1.0, 2.0, 3.0]), args.p),
        BetaArg::ThreeValuesSigned => (BetaKind::ThreeValues([-1.0, 0.0, 1.0]), args.p),
        BetaArg::Sawtooth => (BetaKind::Sawtooth, args.p),
        BetaArg::Boxcar => (BetaKind::Boxcar, args.p),
        BetaArg::CircleImage => {
            let side = (args.p as f64).sqrt().round() as usize;
            if side * side != args.p {
                bail!("circle-image needs a square p, got {}", args.p);
            }
            (
                BetaKind::CircleImage {
                    rows: side,
                    cols: side,
                },
                args.p,
            )
        }
    };
    let penalties: Vec<Penalty> = args
        .penalties
        .iter()
        .map(|s| resolve_penalty(s, p))
        .collect::<Result<_>>()?;

    let mut rows = String::from("n,penalty,seeds,mean_mse_pred,mean_mse_beta,mean_cv_lambda\n");
    for &n in &args.n_list {
        for penalty in &penalties {
            let runs: Vec<(f64, f64, f64)> = (0..args.seeds)
                .map(|s| {
                    let data = experiments::synth_regression(
                        beta_kind,
                        n,
                        p,
                        args.noise,
                        cli.seed.wrapping_add(s),
                    )?;
                    let mut problem =
                        RegressionProblem::new(data, *penalty, cli.seed.wrapping_add(s));
                    problem.folds = args.folds;
                    problem.gd_iters = args.iters;
                    let r = regularized_regression(&problem)?;
                    Ok((r.mse_pred, r.mse_beta, r.cv_lambda))
                })
                .collect::<Result<_>>()?;
            let m = runs.len() as f64;
            let mean = |f: fn(&(f64, f64, f64)) -> f64| runs.iter().map(f).sum::<f64>() / m;
            rows.push_str(&format!(
                "{},{},{},{},{},{}\n",
                n,
                penalty,
                runs.len(),
                io::fmt_float(mean(|r| r.0)),
                io::fmt_float(mean(|r| r.1)),
                io::fmt_float(mean(|r| r.2)),
            ));
        }
    }
    let out = cli.out_dir.join("mse_table.csv");
    io::write_atomic(&out, &rows)?;
    finish(cli, "regress", args, vec![], vec![out], started)
}

fn cmd_features(cli: &Cli, args: &FeaturesArgs, started: Instant) -> Result<()> {
    let image = io::read_image(&args.input)?;
    let features = topo_features(&image)?;
    let row: Vec<String> = features.iter().map(|&f| io::fmt_float(f)).collect();
    let out = cli.out_dir.join("features.csv");
    io::write_atomic(&out, &(row.join(",") + "\n"))?;
    finish(
        cli,
        "features",
        args,
        vec![args.input.clone()],
        vec![out],
        started,
    )
}

#[derive(Serialize)]
struct AttackSummary {
    success: bool,
    steps_taken: usize,
    initial_prediction: usize,
    final_prediction: usize,
    target: usize,
    train_accuracy: f64,
    losses: Vec<f64>,
}

fn cmd_attack(cli: &Cli, args: &AttackArgs, started: Instant) -> Result<()> {
    let size = args.image_size;
    let (image, inputs) = match (&args.input, args.synthetic) {
        (Some(path), _) => (io::read_image(path)?, vec![path.clone()]),
        (None, Some(shape)) => (
            shape_image(shape.class(), size, size, cli.seed ^ 0xa77ac4)?,
            vec![],
        ),
        (None, None) => bail!("provide --input or --synthetic"),
    };
    let FieldShape::Grid { rows, cols } = image.shape() else {
        bail!("attack needs a grid image");
    };

    let (train_images, labels) = shape_dataset(args.train_per_class, rows, cols, cli.seed)?;
    let features = experiments::attack::extract_features(&train_images)?;
    let model = train_classifier(&features, &labels, 3, 300, 0.5)?;
    let train_accuracy = features
        .iter()
        .zip(&labels)
        .filter(|(f, &l)| model.predict(f) == l)
        .count() as f64
        / labels.len() as f64;

    let initial_prediction = model.predict(&topo_features(&image)?);
    let target = match args.target.trim() {
        "same-as-prediction" => initial_prediction,
        s => s
            .parse::<usize>()
            .with_context(|| format!("bad target '{s}'"))?,
    };
    let result = gradient_attack(&model, &image, target, args.step_size, args.steps)?;

    let img_out = cli
        .out_dir
        .join(format!("attacked.{}", cli.format.ext()));
    io::write_image(&img_out, &result.image, cli.format.image())?;
    let summary = AttackSummary {
        success: result.success,
        steps_taken: result.steps_taken,
        initial_prediction,
        final_prediction: result.final_prediction,
        target,
        train_accuracy,
        losses: result.losses,
    };
    let sum_out = cli.out_dir.join("attack_summary.json");
    io::write_atomic(&sum_out, &serde_json::to_string_pretty(&summary)?)?;
    println!(
        "attack: target={target} success={} steps={} (train acc {:.1}%)",
        result.success,
        result.steps_taken,
        100.0 * train_accuracy
    );
    finish(
        cli,
        "attack",
        args,
        inputs,
        vec![img_out, sum_out],
        started,
    )
}
