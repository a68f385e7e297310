//! Command implementations behind the `rawbench` binary. Every command
//! writes only inside its `--out` directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rawbench_core::augment::{augment_indexed, AugmentConfig, AugmentSample, BlurSample};
use rawbench_core::bench::{load_inputs, run_bench, BenchInputs, BenchManifest, BenchResult, DepthSource, ImageSource};
use rawbench_core::corruption::{apply_corruption_with, CorruptionKind, CorruptionRanges, CorruptionSpec, DepthMap, SideInputs, SnowLayer};
use rawbench_core::fit::{fit_problem, FitConfig, FitProblem};
use rawbench_core::io::{self, RgbMode};
use rawbench_core::isp::develop::develop_stages;
use rawbench_core::isp::params::IspParams;
use rawbench_core::metrics::{build_report, normalize_scores, render_table, ScoreScale};
use rawbench_core::raw::{demosaic_bilinear, visualize_raw};
use rawbench_core::{BayerImage, Error, LinearRgbImage};

pub const USAGE_EXIT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rawbench", version, about = "RAW ISP, corruption benchmark and robustness tooling")]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "RAWBENCH_SEED")]
    pub seed: Option<u64>,
    /// Worker threads across images (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Develop a RAW file with ISP parameters.
    Develop(DevelopArgs),
    /// Apply one corruption, or all of them with --sweep.
    Corrupt(CorruptArgs),
    /// Emit augmented variants and their sampled coefficients.
    Augment(AugmentArgs),
    /// Execute a benchmark manifest.
    Bench(BenchArgs),
    /// Fit ISP parameters so a RAW file develops into a target image.
    Fit(FitArgs),
    /// Write a grayscale preview of a RAW mosaic.
    Visualize(VisualizeArgs),
    /// Compute CD/rCD tables from evaluation records.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Linear16,
    Display8,
}

#[derive(Debug, Args)]
pub struct ImageOut {
    /// Output encoding for RGB images.
    #[arg(long = "output-mode", value_enum)]
    pub mode: Option<OutputMode>,
    /// Display gamma for display8 output.
    #[arg(long, default_value_t = io::rgb::DEFAULT_DISPLAY_GAMMA)]
    pub gamma: f64,
}

impl ImageOut {
    fn resolve(&self, default: OutputMode) -> RgbMode {
        match self.mode.unwrap_or(default) {
            OutputMode::Linear16 => RgbMode::Linear16Ppm,
            OutputMode::Display8 => RgbMode::Display8Ppm { gamma: self.gamma },
        }
    }
}

#[derive(Debug, Args)]
pub struct DevelopArgs {
    /// RAW container (.pgm with a .json sidecar).
    #[arg(long)]
    pub raw: PathBuf,
    /// Sidecar path, defaults to the .pgm path with a .json extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// ISP parameter document; defaults to the zero-vector parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Blur kernel size (odd).
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Also write the I2..I5 intermediates as linear 16-bit PPM.
    #[arg(long)]
    pub dump_stages: bool,
    #[command(flatten)]
    pub image: ImageOut,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// RGB image (.ppm/.pgm) or RAW container (.pgm with sidecar, see --raw).
    #[arg(long)]
    pub input: PathBuf,
    /// Treat --input as a RAW container and demosaic it.
    #[arg(long)]
    pub raw: bool,
    /// Corruption spec document.
    #[arg(long, conflicts_with_all = ["kind", "sweep"])]
    pub spec: Option<PathBuf>,
    /// Corruption kind; parameters are sampled from --seed.
    #[arg(long, conflicts_with = "sweep")]
    pub kind: Option<CorruptionKind>,
    /// Apply all 17 kinds into --out with a replayable manifest.
    #[arg(long)]
    pub sweep: bool,
    /// Sampling ranges document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Depth map file (P5/P6), or `procedural`.
    #[arg(long)]
    pub depth: Option<String>,
    /// Directory holding flare.ppm, snow_mask.pgm and snow_flakes.pgm.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[command(flatten)]
    pub image: ImageOut,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Treat --input as a RAW container and demosaic it.
    #[arg(long)]
    pub raw: bool,
    /// Augmentation config document.
    #[arg(long = "augment-config", alias = "config")]
    pub config: Option<PathBuf>,
    /// Number of variants.
    #[arg(short = 'n', long, default_value_t = 8)]
    pub count: usize,
    #[command(flatten)]
    pub image: ImageOut,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Skip writing corrupted images; only the hash list is written.
    #[arg(long)]
    pub hashes_only: bool,
    #[command(flatten)]
    pub image: ImageOut,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub raw: PathBuf,
    /// Target RGB image, read as linear values.
    #[arg(long)]
    pub target: PathBuf,
    /// Fit config document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    #[arg(long)]
    pub raw: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Auto,
    Fraction,
    Percent,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Records as CSV (`method,condition,score`) or JSON.
    #[arg(long)]
    pub records: PathBuf,
    /// Reference method name.
    #[arg(long)]
    pub reference: String,
    #[arg(long, value_enum, default_value_t = ScaleArg::Auto)]
    pub scale: ScaleArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => USAGE_EXIT,
            CliError::Core(e) => e.exit_code(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{}: {e}", e.code()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Paths written by a command, relative to `--out`.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub stdout: String,
}

struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    fn create(root: &Path) -> CliResult<Self> {
        if root.exists() && !root.is_dir() {
            return Err(CliError::Usage(format!("--out {} is not a directory", root.display())));
        }
        fs::create_dir_all(root).map_err(|e| Error::Io {
            path: root.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Joins a bare file name; anything with separators is refused.
    fn path(&mut self, name: &str) -> PathBuf {
        assert!(!name.contains(['/', '\\']) && name != ".." && !name.is_empty(), "bad output name {name}");
        let p = self.root.join(name);
        self.written.push(PathBuf::from(name));
        p
    }

    fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::Io { path: p, source: e })?;
        Ok(())
    }

    fn finish(self, stdout: String) -> Outcome {
        Outcome {
            written: self.written,
            stdout,
        }
    }
}

fn require_file(flag: &str, p: &Path) -> CliResult<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} {} does not exist", p.display())))
    }
}

fn read_bayer(pgm: &Path, sidecar: Option<&Path>) -> CliResult<BayerImage> {
    let side = sidecar.map_or_else(|| io::sidecar_path_for(pgm), Path::to_path_buf);
    Ok(io::read_raw(pgm, &side)?)
}

fn read_input(p: &Path, raw: bool) -> CliResult<LinearRgbImage> {
    require_file("--input", p)?;
    Ok(if raw { demosaic_bilinear(&read_bayer(p, None)?) } else { io::read_rgb(p)? })
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let seed = cli.seed;
    let jobs = cli.jobs;
    match cli.command {
        Command::Develop(a) => cmd_develop(&a),
        Command::Corrupt(a) => cmd_corrupt(&a, seed.unwrap_or(0), jobs),
        Command::Augment(a) => cmd_augment(&a, seed.unwrap_or(0), jobs),
        Command::Bench(a) => cmd_bench(&a, jobs),
        Command::Fit(a) => cmd_fit(&a, seed),
        Command::Visualize(a) => cmd_visualize(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

pub fn cmd_develop(a: &DevelopArgs) -> CliResult<Outcome> {
    require_file("--raw", &a.raw)?;
    if let Some(p) = &a.params {
        require_file("--params", p)?;
    }
    let bayer = read_bayer(&a.raw, a.sidecar.as_deref())?;
    let params: IspParams = match &a.params {
        Some(p) => io::read_json(p)?,
        None => IspParams::default(),
    };
    let stages = develop_stages(&bayer, &params, a.kernel_size)?;
    let mut out = OutDir::create(&a.out)?;
    io::write_rgb(&stages.i5, &out.path("developed.ppm"), a.image.resolve(OutputMode::Display8))?;
    if a.dump_stages {
        for (name, img) in [("i2", &stages.i2), ("i3", &stages.i3), ("i4", &stages.i4), ("i5", &stages.i5)] {
            io::write_rgb(img, &out.path(&format!("{name}.ppm")), RgbMode::Linear16Ppm)?;
        }
        let gains = serde_json::json!({ "wb_gains": stages.wb_gains });
        out.text("stages.json", &io::to_versioned_string(&gains)?)?;
    }
    Ok(out.finish(String::new()))
}

fn load_depth(arg: Option<&str>, img: &LinearRgbImage) -> CliResult<Option<DepthMap>> {
    match arg {
        None => Ok(None),
        Some("procedural") => Ok(Some(DepthMap::procedural(img.width(), img.height()))),
        Some(p) => {
            let p = Path::new(p);
            require_file("--depth", p)?;
            let g = io::read_gray(p)?;
            Ok(Some(DepthMap::new(g.width(), g.height(), g.data().to_vec())?))
        }
    }
}

struct Assets {
    flare: Option<LinearRgbImage>,
    snow: Option<SnowLayer>,
}

fn load_assets(dir: Option<&Path>) -> CliResult<Assets> {
    let Some(dir) = dir else {
        return Ok(Assets { flare: None, snow: None });
    };
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("--assets {} is not a directory", dir.display())));
    }
    let flare_p = dir.join("flare.ppm");
    let flare = flare_p.is_file().then(|| io::read_rgb(&flare_p)).transpose()?;
    let (mask_p, flakes_p) = (dir.join("snow_mask.pgm"), dir.join("snow_flakes.pgm"));
    let snow = match (mask_p.is_file(), flakes_p.is_file()) {
        (false, false) => None,
        (true, true) => {
            let (m, f) = (io::read_gray(&mask_p)?, io::read_gray(&flakes_p)?);
            Some(SnowLayer::new(m.width(), m.height(), m.data().to_vec(), f.data().to_vec())?)
        }
        _ => {
            return Err(CliError::Usage(format!(
                "--assets {} needs both snow_mask.pgm and snow_flakes.pgm",
                dir.display()
            )))
        }
    };
    Ok(Assets { flare, snow })
}

pub fn cmd_corrupt(a: &CorruptArgs, seed: u64, jobs: usize) -> CliResult<Outcome> {
    if a.spec.is_none() && a.kind.is_none() && !a.sweep {
        return Err(CliError::Usage("one of --spec, --kind or --sweep is required".into()));
    }
    if let Some(p) = &a.spec {
        require_file("--spec", p)?;
    }
    if let Some(p) = &a.config {
        require_file("--config", p)?;
    }
    let x = read_input(&a.input, a.raw)?;
    let ranges: CorruptionRanges = match &a.config {
        Some(p) => io::read_json(p)?,
        None => CorruptionRanges::default(),
    };
    ranges.validate()?;
    let depth = load_depth(a.depth.as_deref(), &x)?;
    let assets = load_assets(a.assets.as_deref())?;
    let side = SideInputs {
        depth: depth.as_ref(),
        flare: assets.flare.as_ref(),
        snow: assets.snow.as_ref(),
    };
    let mode = a.image.resolve(OutputMode::Linear16);

    if a.sweep {
        return corrupt_sweep(a, &x, depth, assets, ranges, seed, jobs, mode);
    }
    let spec = match (&a.spec, a.kind) {
        (Some(p), _) => io::read_json::<CorruptionSpec>(p)?,
        (None, Some(kind)) => CorruptionSpec::sampled(kind, seed),
        (None, None) => unreachable!("checked above"),
    };
    let (y, params) = apply_corruption_with(&spec, &x, &side, &ranges)?;
    let mut out = OutDir::create(&a.out)?;
    io::write_rgb(&y, &out.path("corrupted.ppm"), mode)?;
    let resolved = CorruptionSpec {
        params: Some(params),
        ..spec
    };
    out.text("spec.json", &io::to_versioned_string(&resolved)?)?;
    let hash = y.content_hash();
    out.text("hash.txt", &format!("{hash}\n"))?;
    Ok(out.finish(format!("{}\t{}\t{hash}\n", resolved.kind, resolved.seed)))
}

#[allow(clippy::too_many_arguments)]
fn corrupt_sweep(
    a: &CorruptArgs,
    x: &LinearRgbImage,
    depth: Option<DepthMap>,
    assets: Assets,
    ranges: CorruptionRanges,
    seed: u64,
    jobs: usize,
    mode: RgbMode,
) -> CliResult<Outcome> {
    let abs = fs::canonicalize(&a.input).map_err(|e| Error::Io {
        path: a.input.clone(),
        source: e,
    })?;
    let src = abs.to_string_lossy().into_owned();
    let mut images = BTreeMap::new();
    images.insert("input".to_string(), if a.raw { ImageSource::Raw(src) } else { ImageSource::Rgb(src) });
    let depth_src = match a.depth.as_deref() {
        None => None,
        Some("procedural") => Some(DepthSource::Procedural),
        Some(p) => Some(DepthSource::File(
            fs::canonicalize(p)
                .map_err(|e| Error::Io {
                    path: p.into(),
                    source: e,
                })?
                .to_string_lossy()
                .into_owned(),
        )),
    };
    let mut manifest = BenchManifest::sweep(seed, images, depth_src);
    manifest.ranges = Some(ranges);
    if assets.flare.is_some() {
        let p = a.assets.as_ref().expect("flare implies assets").join("flare.ppm");
        manifest.flare = Some(fs::canonicalize(&p).unwrap_or(p).to_string_lossy().into_owned());
    }
    let inputs = BenchInputs {
        images: [("input".to_string(), x.clone())].into(),
        depth: depth.map(|d| [("input".to_string(), d)].into()).unwrap_or_default(),
        flare: assets.flare,
    };
    let results = run_bench(&manifest, &inputs, jobs)?;
    // pin seeds and sampled parameters so the manifest replays exactly
    for (e, r) in manifest.entries.iter_mut().zip(&results) {
        e.seed = Some(r.seed);
        e.params = Some(r.params.clone());
    }
    let mut out = OutDir::create(&a.out)?;
    out.text("manifest.json", &io::to_versioned_string(&manifest)?)?;
    write_results(&mut out, &results, Some(mode))
}

fn write_results(out: &mut OutDir, results: &[BenchResult], mode: Option<RgbMode>) -> CliResult<Outcome> {
    let mut lines = String::new();
    for r in results {
        if let Some(mode) = mode {
            let name = format!("{:04}_{}_{}.ppm", r.index, file_stem(&r.image_id), r.kind);
            io::write_rgb(&r.image, &out.path(&name), mode)?;
        }
        lines.push_str(&r.hash_line());
        lines.push('\n');
    }
    out.text("hashes.tsv", &lines)?;
    let written = std::mem::take(&mut out.written);
    Ok(Outcome { written, stdout: lines })
}

pub fn cmd_bench(a: &BenchArgs, jobs: usize) -> CliResult<Outcome> {
    require_file("--manifest", &a.manifest)?;
    let manifest: BenchManifest = io::read_json(&a.manifest)?;
    manifest.validate()?;
    let base = a.manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let inputs = load_inputs(&manifest, &base)?;
    let results = run_bench(&manifest, &inputs, jobs)?;
    let mut out = OutDir::create(&a.out)?;
    let mode = (!a.hashes_only).then(|| a.image.resolve(OutputMode::Linear16));
    write_results(&mut out, &results, mode)
}

fn sample_row(i: usize, s: &AugmentSample) -> Vec<String> {
    let f = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:?}"));
    let (omega, dark) = s.brightness.map_or((None, String::new()), |b| (Some(b.omega), b.dark.to_string()));
    let chroma = s.chroma.map_or([None; 3], |w| w.map(Some));
    let (blur, size, width, angle, long, short, sigma) = match &s.quality {
        None => (String::new(), String::new(), None, None, None, None, None),
        Some(q) => {
            let (name, w, an, l, sh) = match q.blur {
                BlurSample::Iso { width } => ("iso", Some(width), None, None, None),
                BlurSample::Aniso {
                    angle,
                    long_axis,
                    short_axis,
                } => ("aniso", None, Some(angle), Some(long_axis), Some(short_axis)),
            };
            (name.to_string(), q.kernel_size.to_string(), w, an, l, sh, Some(q.noise_sigma))
        }
    };
    vec![
        i.to_string(),
        s.branch.as_str().to_string(),
        f(omega),
        dark,
        f(chroma[0]),
        f(chroma[1]),
        f(chroma[2]),
        blur,
        size,
        f(width),
        f(angle),
        f(long),
        f(short),
        f(sigma),
    ]
}

const AUGMENT_HEADER: [&str; 14] = [
    "index",
    "branch",
    "omega",
    "dark",
    "omega_r",
    "omega_g",
    "omega_b",
    "blur",
    "kernel_size",
    "blur_width",
    "blur_angle",
    "blur_long_axis",
    "blur_short_axis",
    "noise_sigma",
];

pub fn cmd_augment(a: &AugmentArgs, seed: u64, jobs: usize) -> CliResult<Outcome> {
    if let Some(p) = &a.config {
        require_file("--augment-config", p)?;
    }
    let x = read_input(&a.input, a.raw)?;
    let cfg: AugmentConfig = match &a.config {
        Some(p) => io::read_json(p)?,
        None => AugmentConfig::default(),
    };
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("--jobs {jobs}: {e}")))?;
    let results: Vec<(LinearRgbImage, AugmentSample)> = pool.install(|| {
        (0..a.count)
            .into_par_iter()
            .map(|i| augment_indexed(&x, &cfg, seed, i as u64))
            .collect::<rawbench_core::Result<_>>()
    })?;
    let mut out = OutDir::create(&a.out)?;
    let mode = a.image.resolve(OutputMode::Linear16);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AUGMENT_HEADER).expect("in-memory csv write");
    for (i, (img, s)) in results.iter().enumerate() {
        io::write_rgb(img, &out.path(&format!("aug_{i:05}.ppm")), mode)?;
        w.write_record(sample_row(i, s)).expect("in-memory csv write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8");
    out.text("coefficients.csv", &csv)?;
    Ok(out.finish(String::new()))
}

pub fn cmd_fit(a: &FitArgs, seed: Option<u64>) -> CliResult<Outcome> {
    require_file("--raw", &a.raw)?;
    require_file("--target", &a.target)?;
    if let Some(p) = &a.config {
        require_file("--config", p)?;
    }
    let bayer = read_bayer(&a.raw, None)?;
    let target = io::read_rgb(&a.target)?;
    let mut cfg: FitConfig = match &a.config {
        Some(p) => io::read_json(p)?,
        None => FitConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let problem = FitProblem::new(&bayer, &target, &cfg)?;
    let outcome = fit_problem(&problem, &cfg)?;
    let mut out = OutDir::create(&a.out)?;
    out.text("best_params.json", &io::to_versioned_string(&outcome.params)?)?;
    let trace = out.path("trace.csv");
    io::write_trace_csv(&outcome.trace, &trace)?;
    let summary = serde_json::json!({
        "loss": outcome.loss,
        "evaluations": outcome.trace.len(),
        "search_vector": outcome.search_vector,
        "seed": cfg.seed,
    });
    out.text("summary.json", &io::to_versioned_string(&summary)?)?;
    Ok(out.finish(format!("loss\t{:?}\tevaluations\t{}\n", outcome.loss, outcome.trace.len())))
}

pub fn cmd_visualize(a: &VisualizeArgs) -> CliResult<Outcome> {
    require_file("--raw", &a.raw)?;
    let bayer = read_bayer(&a.raw, None)?;
    let mut out = OutDir::create(&a.out)?;
    io::write_gray8(&visualize_raw(&bayer), &out.path("preview.pgm"))?;
    Ok(out.finish(String::new()))
}

pub fn cmd_report(a: &ReportArgs) -> CliResult<Outcome> {
    require_file("--records", &a.records)?;
    let mut records = io::read_records(&a.records)?;
    let scale = match a.scale {
        ScaleArg::Auto => ScoreScale::Auto,
        ScaleArg::Fraction => ScoreScale::Fraction,
        ScaleArg::Percent => ScoreScale::Percent,
    };
    normalize_scores(&mut records, scale);
    let report = build_report(&records, &a.reference)?;
    let table = render_table(&report);
    let mut out = OutDir::create(&a.out)?;
    out.text("report.json", &io::to_versioned_string(&report)?)?;
    out.text("report.txt", &table)?;
    Ok(out.finish(table))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            0
        }
        Err(e) => {
            eprintln!("rawbench: {e}");
            e.exit_code()
        }
    }
}
