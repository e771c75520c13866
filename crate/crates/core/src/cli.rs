//! `pfbi` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::bridge::{LatentPoint, Path};
use crate::dataset::{fmt_num, load_paths, paths_to_csv, write_file, LatentDataset};
use crate::discriminator::{evaluate, load_net, save_net, train, DiscriminatorNet, PriorSpec, Scorer, TrainConfig};
use crate::error::Error;
use crate::exec::Execution;
use crate::kernel::{KernelParams, TimeGrid};
use crate::method::{GaussianSampler, LinearSampler, PathSampler, SmcPathSampler};
use crate::metrics::{evaluate_method, mean_score, ReportRow, ScoreMode, REPORT_HEADER};
use crate::mvn::RngState;
use crate::smc::{SmcSampler, WeightSchedule};
use crate::synthdata::{generate, SynthKind, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pfbi", version, about = "Discriminator-guided stochastic interpolation in latent space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic latent dataset.
    Gen(GenArgs),
    /// Train a discriminator separating dataset points from prior samples.
    Train(TrainArgs),
    /// Sample interpolation paths between two latent points.
    Interp(InterpArgs),
    /// Score interpolation methods over many endpoint pairs.
    Eval(EvalArgs),
    /// Export plot-ready CSVs (scatter, path polylines, discriminator heat grid).
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Arc,
    Ellipse,
    Shell,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Latent dimension (arc and ellipse are 2-D).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Arc span in degrees.
    #[arg(long, default_value_t = 270.0)]
    pub span_deg: f64,
    #[arg(long, default_value_t = 0.5)]
    pub axis_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Expected input dimension; checked against the data file.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 200, 500])]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long = "train-steps", default_value_t = 2000)]
    pub train_steps: usize,
    /// Fraction of dataset rows held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct BridgeArgs {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub particles: usize,
    /// Discriminator weights (required for smc).
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    /// Constant gamma; defaults to 1/Δ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Resample only when ESS < threshold * N (off by default).
    #[arg(long = "ess-threshold")]
    pub ess_threshold: Option<f64>,
    /// Average this many Gaussian bridge draws per returned path.
    #[arg(long = "mean-of", default_value_t = 1)]
    pub mean_of: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Linear,
    Gaussian,
    Smc,
}

#[derive(Debug, Args)]
pub struct InterpArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub bridge: BridgeArgs,
    /// Start point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "from_row")]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "to_row")]
    pub to: Option<String>,
    /// Dataset supplying endpoint rows and the score comparison.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "from-row", requires = "data")]
    pub from_row: Option<usize>,
    #[arg(long = "to-row", requires = "data")]
    pub to_row: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairMode {
    /// Two distinct uniformly chosen rows.
    Random,
    /// A uniformly chosen row and the row farthest from it.
    Opposite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CliScoreMode {
    Interior,
    Midpoint,
}

impl From<CliScoreMode> for ScoreMode {
    fn from(m: CliScoreMode) -> Self {
        match m {
            CliScoreMode::Interior => ScoreMode::InteriorAverage,
            CliScoreMode::Midpoint => ScoreMode::Midpoint,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Linear, Method::Gaussian, Method::Smc])]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub bridge: BridgeArgs,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long = "pair-mode", value_enum, default_value_t = PairMode::Opposite)]
    pub pair_mode: PairMode,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long = "score-mode", value_enum, default_value_t = CliScoreMode::Interior)]
    pub score_mode: CliScoreMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Path CSV files to export as polylines.
    #[arg(long)]
    pub paths: Vec<PathBuf>,
    /// Discriminator for the heat grid.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long = "grid-res", default_value_t = 50)]
    pub grid_res: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Lib(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match run(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: &Command, out: &mut dyn Write) -> CliResult<()> {
    let _ = writeln!(out, "# config: {cmd:?}");
    let mut report = String::new();
    match cmd {
        Command::Gen(a) => cmd_gen(a, &mut report)?,
        Command::Train(a) => cmd_train(a, &mut report)?,
        Command::Interp(a) => cmd_interp(a, &mut report)?,
        Command::Eval(a) => cmd_eval(a, &mut report)?,
        Command::Plotdata(a) => cmd_plotdata(a, &mut report)?,
    }
    let _ = out.write_all(report.as_bytes());
    Ok(())
}

fn summarize(data: &LatentDataset, out: &mut String) {
    let n = data.len() as f64;
    let norms: Vec<f64> = data.points().iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mean = norms.iter().sum::<f64>() / n;
    let (lo, hi) = norms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    let _ = writeln!(out, "points: {}  dim: {}  |z| mean {mean:.6} min {lo:.6} max {hi:.6}", data.len(), data.dim());
}

pub fn cmd_gen(a: &GenArgs, out: &mut String) -> CliResult<()> {
    let span = a.span_deg.to_radians();
    let start = std::f64::consts::FRAC_PI_2 + (std::f64::consts::TAU - span) / 2.0;
    let kind = match a.kind {
        Kind::Arc => SynthKind::Arc { radius: a.radius, start, span },
        Kind::Ellipse => SynthKind::Ellipse { radius: a.radius, axis_ratio: a.axis_ratio, start, span },
        Kind::Shell => SynthKind::GaussianShell,
    };
    let spec = SynthSpec { kind, dim: a.dim, n_points: a.n, noise_sigma: a.sigma, seed: a.seed };
    let data = generate(&spec).map_err(|e| match e {
        Error::DimensionMismatch { .. } => usage(format!("{} datasets are 2-dimensional", format!("{:?}", a.kind).to_lowercase())),
        e => e.into(),
    })?;
    data.save(&a.out)?;
    summarize(&data, out);
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

pub fn cmd_train(a: &TrainArgs, out: &mut String) -> CliResult<()> {
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(usage("--holdout must lie in [0, 1)"));
    }
    let data = LatentDataset::load(&a.data)?;
    if let Some(d) = a.dim {
        if d != data.dim() {
            return Err(Error::DimensionMismatch { expected: d, found: data.dim() }.into());
        }
    }
    let mut rng = RngState::new(a.seed, 0xda7a);
    let mut idx: Vec<usize> = (0..data.len()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    let n_hold = ((data.len() as f64) * a.holdout).floor() as usize;
    let n_hold = n_hold.min(data.len() - 1);
    let (hold_idx, train_idx) = idx.split_at(n_hold);
    let pick = |ix: &[usize]| ix.iter().map(|&i| data.points()[i].clone()).collect::<Vec<_>>();
    let train_set = LatentDataset::new(pick(train_idx))?;
    let prior = PriorSpec::new(data.dim())?;
    let cfg = TrainConfig { batch_size: a.batch, steps: a.train_steps, learning_rate: a.lr, seed: a.seed, ..TrainConfig::default() };
    let net = train(&train_set, &prior, &cfg, &a.hidden)?;
    save_net(&net, &a.out)?;

    let neg = |n: usize, stream: u64| {
        let mut r = RngState::new(a.seed, stream);
        (0..n.max(1)).map(|_| LatentPoint::new(prior.sample(&mut r))).collect::<Vec<_>>()
    };
    let tr = evaluate(&net, train_set.points(), &neg(train_set.len(), 0xe1))?;
    let _ = writeln!(out, "train loss {:.6}  auc {:.6}  accuracy {:.6}", tr.loss, tr.auc, tr.accuracy);
    if n_hold > 0 {
        let pos = pick(hold_idx);
        let ho = evaluate(&net, &pos, &neg(pos.len(), 0xe2))?;
        let _ = writeln!(out, "held-out loss {:.6}  auc {:.6}  accuracy {:.6}", ho.loss, ho.auc, ho.accuracy);
    }
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

fn parse_point(s: &str) -> CliResult<LatentPoint> {
    let coords = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("bad coordinate `{v}` in `{s}`"))))
        .collect::<CliResult<Vec<f64>>>()?;
    let p = LatentPoint::new(coords);
    if !p.is_finite() {
        return Err(usage(format!("non-finite coordinate in `{s}`")));
    }
    Ok(p)
}

struct Setup {
    params: KernelParams,
    grid: TimeGrid,
    schedule: WeightSchedule,
}

fn setup(b: &BridgeArgs) -> CliResult<Setup> {
    let params = KernelParams::new(b.alpha, b.beta)?;
    let grid = TimeGrid::equidistant(b.horizon, b.steps)?;
    let schedule = match b.gamma {
        Some(g) => WeightSchedule::constant(&grid, g, b.xi)?,
        None if b.xi == 0.0 => WeightSchedule::proportional(&grid),
        None => WeightSchedule::constant(&grid, b.steps as f64 / b.horizon, b.xi)?,
    };
    if b.particles == 0 {
        return Err(usage("--particles must be at least 1"));
    }
    Ok(Setup { params, grid, schedule })
}

fn load_scorer(b: &BridgeArgs, dim: usize) -> CliResult<DiscriminatorNet> {
    let path = b.net.as_ref().ok_or_else(|| usage("--net is required for the smc method"))?;
    let net = load_net(path)?;
    if net.input_dim() != dim {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), found: dim }.into());
    }
    Ok(net)
}

fn smc_sampler(s: &Setup, b: &BridgeArgs) -> CliResult<SmcSampler> {
    Ok(SmcSampler::new(&s.params, &s.grid, s.schedule.clone(), b.particles)?.with_ess_threshold(b.ess_threshold)?)
}

fn build_method<'a>(
    method: Method,
    s: &Setup,
    b: &BridgeArgs,
    net: Option<&'a DiscriminatorNet>,
) -> CliResult<Box<dyn PathSampler + 'a>> {
    Ok(match method {
        Method::Linear => Box::new(LinearSampler::new(&s.grid)),
        Method::Gaussian => Box::new(GaussianSampler::new(&s.params, &s.grid)?.with_mean_of(b.mean_of)),
        Method::Smc => {
            let net: &'a dyn Scorer = net.ok_or_else(|| usage("--net is required for the smc method"))?;
            Box::new(SmcPathSampler::new(smc_sampler(s, b)?, net))
        }
    })
}

pub fn cmd_interp(a: &InterpArgs, out: &mut String) -> CliResult<()> {
    let s = setup(&a.bridge)?;
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let data = a.data.as_ref().map(LatentDataset::load).transpose()?;
    let endpoint = |coords: &Option<String>, row: Option<usize>, which: &str| -> CliResult<LatentPoint> {
        match (coords, row, &data) {
            (Some(c), _, _) => parse_point(c),
            (None, Some(r), Some(d)) => d
                .get(r)
                .cloned()
                .ok_or_else(|| CliError::Lib(Error::parse(r + 2, format!("row {r} out of range ({} rows)", d.len())))),
            _ => Err(usage(format!("give --{which} coordinates or --{which}-row with --data"))),
        }
    };
    let z0 = endpoint(&a.from, a.from_row, "from")?;
    let zt = endpoint(&a.to, a.to_row, "to")?;
    if z0.dim() != zt.dim() {
        return Err(Error::DimensionMismatch { expected: z0.dim(), found: zt.dim() }.into());
    }
    let net = match a.method {
        Method::Smc => Some(load_scorer(&a.bridge, z0.dim())?),
        _ => None,
    };
    let method = build_method(a.method, &s, &a.bridge, net.as_ref())?;
    let base = RngState::from_seed(a.bridge.seed);
    let paths = (0..a.samples).map(|i| method.sample(&z0, &zt, &base.substream(i as u64, 0))).collect::<crate::Result<Vec<Path>>>()?;
    write_file(&a.out, &paths_to_csv(&paths)?)?;
    let _ = writeln!(out, "wrote {} path(s) of {} points to {}", paths.len(), s.grid.len(), a.out.display());

    if let Some(data) = &data {
        if data.dim() == z0.dim() {
            let avg = |ps: &[Path]| -> CliResult<f64> {
                let total = ps.iter().map(|p| mean_score(p, data, ScoreMode::InteriorAverage)).sum::<crate::Result<f64>>()?;
                Ok(total / ps.len() as f64)
            };
            let own = avg(&paths)?;
            let _ = writeln!(out, "{} mean score {own:.6}", method.name());
            if a.method == Method::Smc {
                let g = GaussianSampler::new(&s.params, &s.grid)?;
                let gp = (0..a.samples).map(|i| g.sample(&z0, &zt, &base.substream(i as u64, 0))).collect::<crate::Result<Vec<Path>>>()?;
                let gs = avg(&gp)?;
                let verdict = if own < gs { "beats" } else { "does not beat" };
                let _ = writeln!(out, "gaussian mean score {gs:.6}; smc {verdict} gaussian");
            }
        }
    }
    Ok(())
}

/// Endpoint pairs drawn from dataset rows.
pub fn choose_pairs(data: &LatentDataset, n: usize, mode: PairMode, rng: &mut RngState) -> CliResult<Vec<(LatentPoint, LatentPoint)>> {
    if data.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: data.len() }.into());
    }
    let rows = data.points();
    Ok((0..n)
        .map(|_| {
            let i = rng.random_range(0..data.len());
            let j = match mode {
                PairMode::Opposite => data.farthest_from(i),
                PairMode::Random => {
                    let j = rng.random_range(0..data.len() - 1);
                    if j >= i {
                        j + 1
                    } else {
                        j
                    }
                }
            };
            (rows[i].clone(), rows[j].clone())
        })
        .collect())
}

pub fn cmd_eval(a: &EvalArgs, out: &mut String) -> CliResult<()> {
    let s = setup(&a.bridge)?;
    if a.pairs == 0 || a.repeats == 0 {
        return Err(usage("--pairs and --repeats must be at least 1"));
    }
    let data = LatentDataset::load(&a.data)?;
    let net = if a.methods.contains(&Method::Smc) { Some(load_scorer(&a.bridge, data.dim())?) } else { None };
    let mut pair_rng = RngState::new(a.bridge.seed, 0x9a15);
    let pairs = choose_pairs(&data, a.pairs, a.pair_mode, &mut pair_rng)?;
    let base = RngState::new(a.bridge.seed, 0xe7a1);

    let mut csv = format!("{REPORT_HEADER}\n");
    let mut scored = Vec::new();
    for &m in &a.methods {
        let method = build_method(m, &s, &a.bridge, net.as_ref())?;
        let r = evaluate_method(method.as_ref(), &pairs, &data, a.repeats, a.score_mode.into(), &base, Execution::default())?;
        let row = ReportRow {
            method: method.name().to_string(),
            horizon: a.bridge.horizon,
            alpha: a.bridge.alpha,
            beta: a.bridge.beta,
            particles: method.particles(),
            report: r,
        };
        let _ = writeln!(
            out,
            "{:<9} mean {:.6} ({:.6})  smoothness {:.6} ({:.6})  variability {:.6}",
            row.method, r.mean_score, r.mean_std, r.smoothness, r.smoothness_std, r.variability
        );
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
        scored.push((row.method.clone(), r.mean_score));
    }
    write_file(&a.out, &csv)?;
    scored.sort_by(|x, y| x.1.total_cmp(&y.1));
    let order = scored.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(" < ");
    let _ = writeln!(out, "mean score ordering: {order}");
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

/// Parses an evaluation report written by `eval`.
pub fn parse_report(text: &str) -> crate::Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == REPORT_HEADER => {}
        _ => return Err(Error::parse(1, "missing report header")),
    }
    lines.filter(|l| !l.trim().is_empty()).map(|l| ReportRow::parse_csv_line(l, 0)).collect()
}

fn bounds(points: &[LatentPoint]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    for c in 0..2 {
        let pad = 0.1 * (hi[c] - lo[c]).max(1e-9);
        lo[c] -= pad;
        hi[c] += pad;
    }
    (lo, hi)
}

/// Cell centres of a `res x res` lattice over the padded bounding box, row-major in y then x.
pub fn heat_grid(net: &DiscriminatorNet, data: &LatentDataset, res: usize) -> crate::Result<Vec<[f64; 3]>> {
    if data.dim() != 2 || net.input_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: if data.dim() != 2 { data.dim() } else { net.input_dim() } });
    }
    let (lo, hi) = bounds(data.points());
    let cell = [(hi[0] - lo[0]) / res as f64, (hi[1] - lo[1]) / res as f64];
    let coords: Vec<[f64; 2]> = (0..res)
        .flat_map(|iy| (0..res).map(move |ix| [lo[0] + (ix as f64 + 0.5) * cell[0], lo[1] + (iy as f64 + 0.5) * cell[1]]))
        .collect();
    let refs: Vec<&[f64]> = coords.iter().map(|c| c.as_slice()).collect();
    let scores = crate::discriminator::score_points(net, &refs, Execution::default());
    Ok(coords.iter().zip(scores).map(|(c, s)| [c[0], c[1], s]).collect())
}

pub fn cmd_plotdata(a: &PlotArgs, out: &mut String) -> CliResult<()> {
    if a.grid_res == 0 {
        return Err(usage("--grid-res must be at least 1"));
    }
    let data = LatentDataset::load(&a.data)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let d = data.dim();
    let cols = (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");

    let mut scatter = format!("{cols}\n");
    for p in data.points() {
        scatter.push_str(&p.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(","));
        scatter.push('\n');
    }
    write_to(&a.out, "scatter.csv", &scatter)?;
    let _ = writeln!(out, "scatter.csv: {} rows", data.len());

    if !a.paths.is_empty() {
        let mut poly = format!("path,t,{cols}\n");
        let mut id = 0usize;
        for file in &a.paths {
            for p in load_paths(file)? {
                if p.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: p.dim() }.into());
                }
                for (t, z) in p.grid().times().iter().zip(p.points()) {
                    let _ = write!(poly, "{id},{}", fmt_num(*t));
                    for v in z.iter() {
                        let _ = write!(poly, ",{}", fmt_num(*v));
                    }
                    poly.push('\n');
                }
                let _ = writeln!(out, "paths.csv: path {id} with {} rows", p.points().len());
                id += 1;
            }
        }
        write_to(&a.out, "paths.csv", &poly)?;
    }

    if let Some(net_path) = &a.net {
        let net = load_net(net_path)?;
        let cells = heat_grid(&net, &data, a.grid_res)?;
        let mut heat = String::from("x,y,score\n");
        for c in &cells {
            let _ = writeln!(heat, "{},{},{}", fmt_num(c[0]), fmt_num(c[1]), fmt_num(c[2]));
        }
        write_to(&a.out, "heat.csv", &heat)?;
        let _ = writeln!(out, "heat.csv: {} cells", cells.len());
    }
    Ok(())
}

fn write_to(dir: &FsPath, name: &str, contents: &str) -> CliResult<()> {
    Ok(write_file(&dir.join(name), contents)?)
}
