//! Command-line front end: data generation, fitting, per-point posteriors,
//! iso-probability sweeps, calibration tables and oracle validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use isoposterior::calibration::{build_calibration_table, isotonic_fit};
use isoposterior::classifiers::WeightedTrainer;
use isoposterior::dataset::{gen_gaussian, load_dataset, save_dataset};
use isoposterior::isocurves::{default_levels, level_range, read_curve_csv, sweep_isocurves};
use isoposterior::oracle::{compare_with_oracle, GaussianOracle};
use isoposterior::svg::{calibration_svg, isocurve_svg};
use isoposterior::{
    ClassifierKind, Error, EstimatorConfig, GaussianSpec, Grid2D, LabeledDataset,
    PosteriorEstimator, Result, TrainConfig, Trainer,
};

#[derive(Parser)]
#[command(name = "isoposterior", version, about = "Class posteriors by classifier reweighting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a two-Gaussian dataset and write it as CSV.
    Gen(GenArgs),
    /// Train a classifier at the original weights and write it as JSON.
    Fit(FitArgs),
    /// Estimate the posterior at one point.
    Posterior(PosteriorArgs),
    /// Sweep iso-probability curves over a 2-D grid (CSV + SVG).
    Isocurves(IsocurvesArgs),
    /// Score-vs-probability table from an iso-curve sweep (CSV + SVG).
    Calibrate(CalibrateArgs),
    /// Compare per-point estimates with the closed-form Gaussian posterior.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// JSON file with GaussianSpec fields; omitted fields take defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "logreg")]
    classifier: ClassifierKind,
    /// JSON file with optional `train` and `estimator` sections. Flags given
    /// on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    svm_max_iter: Option<usize>,
    #[arg(long)]
    logreg_max_iter: Option<usize>,
    #[arg(long)]
    logreg_tolerance: Option<f64>,
    #[arg(long)]
    tree_min_leaf_weight: Option<f64>,
    #[arg(long)]
    tree_ccp_alpha: Option<f64>,
    #[arg(long)]
    tree_cv_folds: Option<usize>,
    #[arg(long)]
    theta_lo: Option<f64>,
    #[arg(long)]
    theta_hi: Option<f64>,
    #[arg(long)]
    theta_tolerance: Option<f64>,
    #[arg(long)]
    score_tolerance: Option<f64>,
    #[arg(long)]
    scan_points: Option<usize>,
    /// Train SVMs on the support vectors of the unweighted model only.
    /// Defaults to true for per-point svm estimates (`posterior`,
    /// `validate`) and false everywhere else.
    #[arg(long)]
    filter_support_vectors: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    train: TrainConfig,
    estimator: EstimatorConfig,
}

#[derive(Debug, Clone, Serialize)]
struct Resolved {
    classifier: ClassifierKind,
    train: TrainConfig,
    estimator: EstimatorConfig,
    filter_support_vectors: bool,
}

impl ModelArgs {
    /// `estimator` selects the per-point default for support-vector
    /// filtering (on for svm); fits and sweeps default to the full data.
    fn resolve(&self, estimator: bool) -> Result<Resolved> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str::<FileConfig>(&read_text(path)?)?,
            None => FileConfig::default(),
        };
        let t = &mut cfg.train;
        set(&mut t.svm_c, self.svm_c);
        set(&mut t.svm_max_iter, self.svm_max_iter);
        set(&mut t.logreg_max_iter, self.logreg_max_iter);
        set(&mut t.logreg_tolerance, self.logreg_tolerance);
        set(&mut t.tree_min_leaf_weight, self.tree_min_leaf_weight);
        set(&mut t.tree_cv_folds, self.tree_cv_folds);
        if self.tree_ccp_alpha.is_some() {
            t.tree_ccp_alpha = self.tree_ccp_alpha;
        }
        let e = &mut cfg.estimator;
        set(&mut e.theta_bracket.0, self.theta_lo);
        set(&mut e.theta_bracket.1, self.theta_hi);
        set(&mut e.theta_tolerance, self.theta_tolerance);
        set(&mut e.score_tolerance, self.score_tolerance);
        set(&mut e.degeneracy_scan_points, self.scan_points);
        if self.filter_support_vectors.is_some() {
            e.filter_support_vectors = self.filter_support_vectors;
        }
        let filter = e
            .filter_support_vectors
            .unwrap_or(estimator && self.classifier == ClassifierKind::Svm);
        e.filter_support_vectors = Some(filter);
        cfg.train.validate()?;
        cfg.estimator.validate()?;
        Ok(Resolved {
            classifier: self.classifier,
            train: cfg.train,
            estimator: cfg.estimator,
            filter_support_vectors: filter,
        })
    }
}

impl Resolved {
    fn trainer(&self) -> Trainer {
        Trainer::new(self.classifier, self.train.clone())
    }

    fn estimator(&self, data: &LabeledDataset) -> Result<PosteriorEstimator<Trainer>> {
        PosteriorEstimator::for_classifier(&self.trainer(), data, self.estimator.clone())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid nodes per axis, `NXxNY`.
    #[arg(long, default_value = "201x201")]
    grid: String,
    /// Fraction of the data extent added on each side of the bounding box.
    #[arg(long, default_value_t = 0.2)]
    margin: f64,
    /// Explicit `lo,hi` for the first coordinate.
    #[arg(long, allow_hyphen_values = true)]
    x_range: Option<String>,
    /// Explicit `lo,hi` for the second coordinate.
    #[arg(long, allow_hyphen_values = true)]
    y_range: Option<String>,
}

impl GridArgs {
    fn build(&self, data: &LabeledDataset) -> Result<Grid2D> {
        let (nx, ny) = parse_grid_size(&self.grid)?;
        let bounds = data.bounding_box();
        if bounds.len() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: bounds.len(),
            });
        }
        let auto = Grid2D::around(&bounds, self.margin, nx, ny)?;
        let x = match &self.x_range {
            Some(s) => parse_pair(s, "x-range")?,
            None => auto.x_range,
        };
        let y = match &self.y_range {
            Some(s) => parse_pair(s, "y-range")?,
            None => auto.y_range,
        };
        Grid2D::new(x, y, nx, ny)
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PosteriorArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Query point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Also write the estimate to this JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LevelArgs {
    /// Comma-separated levels, or `start:end:step`. Default 0.05:0.95:0.05.
    #[arg(long)]
    levels: Option<String>,
}

impl LevelArgs {
    fn levels(&self) -> Result<Vec<f64>> {
        match &self.levels {
            None => Ok(default_levels()),
            Some(s) if s.contains(':') => {
                let parts = parse_list(&s.replace(':', ","), "levels")?;
                if parts.len() != 3 {
                    return Err(Error::Domain("levels range must be start:end:step".into()));
                }
                level_range(parts[0], parts[1], parts[2])
            }
            Some(s) => parse_list(s, "levels"),
        }
    }
}

#[derive(Args)]
struct IsocurvesArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    levels: LevelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Curve CSV path; the SVG is written next to it with extension `.svg`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for the per-level sweep (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    levels: LevelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Table CSV path; the SVG is written next to it with extension `.svg`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset CSV. Without `--spec` the oracle uses the default Gaussians.
    #[arg(long)]
    data: Option<PathBuf>,
    /// GaussianSpec JSON. Without `--data` the dataset is generated from it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Test grid nodes per axis over the data bounding box, `NXxNY`.
    #[arg(long, default_value = "21x21")]
    grid: String,
    /// Curve CSV from `isocurves`; sampled vertices are re-estimated and
    /// compared with their level.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Vertices sampled per level from `--curves`.
    #[arg(long, default_value_t = 5)]
    per_level: usize,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool_version: &'static str,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

struct Run<'a> {
    command: &'a str,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<String>,
}

impl Run<'_> {
    /// Writes `<artifact>.manifest.json` for every artifact.
    fn manifests(&self, outputs: &[&Path]) -> Result<()> {
        let manifest = Manifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config: self.config.clone(),
            seed: self.seed,
            inputs: self.inputs.clone(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        for out in outputs {
            let mut name = out.as_os_str().to_owned();
            name.push(".manifest.json");
            write_text(Path::new(&name), &text)?;
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    match parse_list(s, what)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Domain(format!("{what} must be lo,hi"))),
    }
}

fn parse_grid_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Domain(format!("grid must be NXxNY, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}

fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::Domain("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn load_spec(path: Option<&Path>) -> Result<GaussianSpec> {
    let spec = match path {
        Some(p) => serde_json::from_str::<GaussianSpec>(&read_text(p)?)?,
        None => GaussianSpec::default(),
    };
    spec.cholesky()?;
    Ok(spec)
}

fn gen(args: GenArgs) -> Result<()> {
    let mut spec = load_spec(args.spec.as_deref())?;
    set(&mut spec.seed, args.seed);
    let data = gen_gaussian(&spec)?;
    save_dataset(&data, &args.out)?;
    Run {
        command: "gen",
        config: serde_json::to_value(&spec)?,
        seed: Some(spec.seed),
        inputs: args.spec.iter().map(|p| p.display().to_string()).collect(),
    }
    .manifests(&[&args.out])?;
    eprintln!("wrote {} points to {}", data.len(), args.out.display());
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let cfg = args.model.resolve(false)?;
    let data = load_dataset(&args.data)?;
    let (trainer, train_data) = cfg.trainer().prepare(&data, cfg.filter_support_vectors)?;
    let model = trainer.train(&train_data, &train_data.original_weights())?;
    write_text(&args.out, &serde_json::to_string_pretty(&model)?)?;
    Run {
        command: "fit",
        config: serde_json::to_value(&cfg)?,
        seed: None,
        inputs: vec![args.data.display().to_string()],
    }
    .manifests(&[&args.out])?;
    Ok(())
}

fn posterior(args: PosteriorArgs) -> Result<()> {
    let cfg = args.model.resolve(true)?;
    let data = load_dataset(&args.data)?;
    let x = parse_list(&args.point, "point")?;
    let est = cfg.estimator(&data)?.estimate(&x)?;
    let mut doc = serde_json::to_value(&est)?;
    doc["point"] = json!(x);
    doc["classifier"] = json!(cfg.classifier);
    doc["filter_support_vectors"] = json!(cfg.filter_support_vectors);
    let text = serde_json::to_string_pretty(&doc)?;
    println!("{text}");
    if let Some(out) = &args.out {
        write_text(out, &text)?;
        Run {
            command: "posterior",
            config: serde_json::to_value(&cfg)?,
            seed: None,
            inputs: vec![args.data.display().to_string()],
        }
        .manifests(&[out])?;
    }
    Ok(())
}

fn isocurves(args: IsocurvesArgs) -> Result<()> {
    let cfg = args.model.resolve(false)?;
    let data = load_dataset(&args.data)?;
    let levels = args.levels.levels()?;
    let grid = args.grid.build(&data)?;
    let (trainer, train_data) = cfg.trainer().prepare(&data, cfg.filter_support_vectors)?;
    let set = with_jobs(args.jobs, || sweep_isocurves(&trainer, &train_data, &levels, &grid))?;
    set.write_csv(create(&args.out)?)?;
    let svg = svg_path(&args.out);
    let title = format!("{} iso-probability curves", cfg.classifier);
    write_text(&svg, &isocurve_svg(&set, Some(&data), &title))?;
    for c in set.curves.iter().filter(|c| c.error.is_some()) {
        eprintln!("level {}: {}", c.level, c.error.as_deref().unwrap_or(""));
    }
    Run {
        command: "isocurves",
        config: json!({ "model": cfg, "levels": levels, "grid": grid }),
        seed: None,
        inputs: vec![args.data.display().to_string()],
    }
    .manifests(&[&args.out, &svg])?;
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let cfg = args.model.resolve(false)?;
    if cfg.classifier == ClassifierKind::Tree {
        return Err(Error::Domain(
            "calibration tables need a score-based classifier (svm or logreg)".into(),
        ));
    }
    let data = load_dataset(&args.data)?;
    let levels = args.levels.levels()?;
    let grid = args.grid.build(&data)?;
    let (trainer, train_data) = cfg.trainer().prepare(&data, cfg.filter_support_vectors)?;
    let model = trainer.train(&train_data, &train_data.original_weights())?;
    let set = with_jobs(args.jobs, || sweep_isocurves(&trainer, &train_data, &levels, &grid))?;
    let table = build_calibration_table(&model, &set)?;
    for level in &table.omitted_levels {
        eprintln!("level {level}: empty contour, row omitted");
    }
    let map = if table.rows.is_empty() {
        None
    } else {
        Some(isotonic_fit(&table.pairs(), None)?)
    };
    table.write_csv(create(&args.out)?)?;
    let svg = svg_path(&args.out);
    let title = format!("{} raw score vs estimated posterior", cfg.classifier);
    write_text(&svg, &calibration_svg(&table, map.as_ref(), &title))?;
    Run {
        command: "calibrate",
        config: json!({
            "model": cfg,
            "levels": levels,
            "grid": grid,
            "resolution": table.resolution,
            "strictly_increasing": table.is_strictly_increasing(),
        }),
        seed: None,
        inputs: vec![args.data.display().to_string()],
    }
    .manifests(&[&args.out, &svg])?;
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let cfg = args.model.resolve(true)?;
    let spec = load_spec(args.spec.as_deref())?;
    let (data, seed) = match &args.data {
        Some(p) => (load_dataset(p)?, None),
        None => (gen_gaussian(&spec)?, Some(spec.seed)),
    };
    // The estimator reads priors off the data, so the oracle does too.
    let oracle = GaussianOracle::with_prior(&spec, data.positive_proportion())?;
    let (nx, ny) = parse_grid_size(&args.grid)?;
    let grid = Grid2D::around(&data.bounding_box(), 0.0, nx, ny)?;
    let points: Vec<Vec<f64>> = grid.nodes().map(|p| p.to_vec()).collect();

    let report = with_jobs(args.jobs, || {
        let est = cfg.estimator(&data)?;
        let grid_report = compare_with_oracle(&est, &oracle, &points)?;
        let curve_report = match &args.curves {
            Some(path) => Some(curve_consistency(&est, &oracle, path, args.per_level)?),
            None => None,
        };
        Ok((grid_report, curve_report))
    })?;
    let (grid_report, curve_report) = report;
    let doc = json!({
        "classifier": cfg.classifier,
        "filter_support_vectors": cfg.filter_support_vectors,
        "pi_plus": data.positive_proportion(),
        "grid": grid,
        "mae": grid_report.mae,
        "max_error": grid_report.max_error,
        "n_points": grid_report.n_points,
        "clamped": grid_report.clamped,
        "degenerate": grid_report.degenerate,
        "points": grid_report.points,
        "curves": curve_report,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match &args.out {
        Some(out) => {
            write_text(out, &text)?;
            let mut inputs: Vec<String> = args.data.iter().chain(&args.spec).chain(&args.curves)
                .map(|p| p.display().to_string())
                .collect();
            inputs.sort();
            Run {
                command: "validate",
                config: json!({ "model": cfg, "spec": spec, "grid": grid }),
                seed,
                inputs,
            }
            .manifests(&[out])?;
            eprintln!(
                "mae {:.4}  max {:.4}  over {} points",
                grid_report.mae, grid_report.max_error, grid_report.n_points
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Re-estimates evenly sampled vertices of each level read from a curve CSV.
fn curve_consistency<T: WeightedTrainer>(
    est: &PosteriorEstimator<T>,
    oracle: &GaussianOracle,
    path: &Path,
    per_level: usize,
) -> Result<Value> {
    use rayon::prelude::*;
    let vertices = read_curve_csv(create_reader(path)?)?;
    let mut by_level: Vec<(f64, Vec<[f64; 2]>)> = Vec::new();
    for v in vertices {
        match by_level.last_mut() {
            Some((level, pts)) if *level == v.level => pts.push(v.point),
            _ => by_level.push((v.level, vec![v.point])),
        }
    }
    let mut samples = Vec::new();
    for (level, pts) in &by_level {
        let take = per_level.min(pts.len());
        for k in 0..take {
            samples.push((*level, pts[((2 * k + 1) * pts.len()) / (2 * take)]));
        }
    }
    let rows: Vec<Value> = samples
        .par_iter()
        .map(|(level, p)| {
            let e = est.estimate(p)?;
            Ok(json!({
                "level": level,
                "x": p,
                "estimate": e.probability,
                "truth": oracle.true_posterior(p)?,
                "deviation": (e.probability - level).abs(),
                "status": e.status,
            }))
        })
        .collect::<Result<_>>()?;
    let devs: Vec<f64> = rows.iter().filter_map(|r| r["deviation"].as_f64()).collect();
    let n = devs.len().max(1) as f64;
    Ok(json!({
        "n_vertices": rows.len(),
        "mean_deviation": devs.iter().sum::<f64>() / n,
        "max_deviation": devs.iter().copied().fold(0.0, f64::max),
        "vertices": rows,
    }))
}

fn create_reader(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Posterior(a) => posterior(a),
        Command::Isocurves(a) => isocurves(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
