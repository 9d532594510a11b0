//! The `vff` command-line tool.
//!
//! ```text
//! vff <synth|degrade|fit|sample|eval|bench> [flags]
//! ```
//!
//! Every command accepts `--config FILE` (`key=value` lines naming flags) and
//! `--threads N`. Exit codes: 0 success, 1 runtime or domain error, 2 usage
//! error.

pub mod bench;
pub mod config;
pub mod report;
pub mod synth;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use vff::fit::{init_bank, BankInitConfig, BankStrategy, BorderMode, FitConfig, RefineConfig};
use vff::io::{self, BitDepth, FrameRate};
use vff::pipeline::{bicubic_downsample, evaluate, temporal_subsample, EvalOptions, PsfPolicy};
use vff::sample::{sample_grid, sample_grid_blended, SampleSpec};
use vff::{fit_video, refine_bank, FieldGrid, PsfSpec, VideoBuffer};

use crate::bench::{run_bench, BenchConfig};
use crate::synth::{Pattern, Scene, SynthSpec};

pub const SUBCOMMANDS: [&str; 6] = ["synth", "degrade", "fit", "sample", "eval", "bench"];

#[derive(Debug, Parser)]
#[command(name = "vff", version, about = "Video Fourier Fields: fit, resample and evaluate video")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic clip with analytic ground truth.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Bicubic spatial downsampling and keyframe subsampling.
    #[command(args_override_self = true)]
    Degrade(DegradeArgs),
    /// Fit a field to a video and save it.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Render a saved field at new spatial and temporal rates.
    #[command(args_override_self = true)]
    Sample(SampleArgs),
    /// Score a prediction against a reference.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Time fitting and both samplers on a synthetic patch.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

/// Output encoding options shared by commands that write video.
#[derive(Debug, Args)]
pub struct VideoOut {
    /// PNG sample depth.
    #[arg(long, default_value_t = 8, value_parser = parse_depth)]
    pub bit_depth: u32,
    /// Y4M frame rate as `num[:den]`.
    #[arg(long, default_value = "30:1", value_parser = parse_rate)]
    pub fps: FrameRate,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub pattern: Pattern,
    /// Clip size `TxHxW`.
    #[arg(long, default_value = "16x64x64", value_parser = parse_dims)]
    pub dims: [usize; 3],
    /// Pixels per frame `vx,vy`.
    #[arg(long, default_value = "1,0", value_parser = parse_pair, allow_hyphen_values = true)]
    pub velocity: [f64; 2],
    /// Pixels per frame squared `ax,ay`.
    #[arg(long, default_value = "0,0", value_parser = parse_pair, allow_hyphen_values = true)]
    pub acceleration: [f64; 2],
    /// Radians per frame.
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    pub angular_rate: f64,
    /// Cycles per pixel `fx,fy` (snapped so the pattern tiles the frame).
    #[arg(long, default_value = "0.0625,0.03125", value_parser = parse_pair, allow_hyphen_values = true)]
    pub frequency: [f64; 2],
    #[arg(long, default_value_t = 1)]
    pub components: usize,
    #[arg(long, default_value_t = 0.4)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 8.0)]
    pub period: f64,
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory of PNG frames, or a `.y4m` file.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub video: VideoOut,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    pub sscale: f64,
    #[arg(long, default_value_t = 8.0)]
    pub tscale: f64,
    #[arg(long, default_value = io::DEFAULT_PATTERN)]
    pub pattern: String,
    #[command(flatten)]
    pub video: VideoOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    StratifiedRandom,
    AxisGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BorderArg {
    Clamp,
    Reflect,
    Truncate,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Field file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long = "basis", default_value_t = 512)]
    pub n_basis: usize,
    /// Frequency ceiling in rad/sample, one value or `wx,wy,wt` (default 4 pi).
    #[arg(long, value_parser = parse_omega)]
    pub omega_max: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "stratified-random")]
    pub strategy: StrategyArg,
    /// Window extents `wt,wy,wx` (odd).
    #[arg(long, default_value = "5,9,9", value_parser = parse_window)]
    pub window: [usize; 3],
    #[arg(long, default_value_t = 1e-3)]
    pub ridge: f64,
    /// Gaussian window weighting width in samples, or `none`.
    #[arg(long, default_value = "3", value_parser = parse_weight)]
    pub weight_sigma: Weight,
    #[arg(long, value_enum, default_value = "clamp")]
    pub border: BorderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Frequency refinement iterations on the input clip (0 disables).
    #[arg(long, default_value_t = 0)]
    pub refine_iterations: usize,
    #[arg(long, default_value = io::DEFAULT_PATTERN)]
    pub pattern: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight(pub Option<f64>);

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub sscale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tscale: f64,
    /// `auto`, `point`, or `sx,sy,st` (`inf` for point sampling on an axis).
    #[arg(long, default_value = "auto", value_parser = parse_psf)]
    pub psf: PsfArg,
    /// Bandwidth constant for `--psf auto`.
    #[arg(long, default_value_t = vff::pipeline::DEFAULT_NU)]
    pub nu: f64,
    /// Cross-fade width across voxel faces (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub blend: f64,
    #[command(flatten)]
    pub video: VideoOut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfArg {
    Auto,
    Manual(PsfSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Psnr,
    Ssim,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "psnr,ssim")]
    pub metrics: Vec<Metric>,
    /// Compute PSNR on BT.601 luma instead of RGB.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub luma: bool,
    /// Label frames `0, r, 2r, ...` as keyframes and report split means.
    #[arg(long)]
    pub split_keyframes: Option<usize>,
    /// Write the machine-readable report here (`-` for stdout instead of text).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = io::DEFAULT_PATTERN)]
    pub pattern: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "14x80x80", value_parser = parse_dims)]
    pub patch: [usize; 3],
    #[arg(long, default_value_t = 4.0)]
    pub sscale: f64,
    #[arg(long, default_value_t = 8.0)]
    pub tscale: f64,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[arg(long = "basis", default_value_t = 512)]
    pub n_basis: usize,
    #[arg(long, default_value_t = vff::pipeline::DEFAULT_NU)]
    pub nu: f64,
    /// Output frames rendered by the naive sampler (time is extrapolated).
    #[arg(long, default_value_t = 2)]
    pub naive_frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the machine-readable report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split('x').collect();
    let [t, h, w] = parts[..] else { return Err(format!("expected TxHxW, got {s:?}")) };
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let dims = [p(t)?, p(h)?, p(w)?];
    if dims.contains(&0) {
        return Err("dims must be nonzero".into());
    }
    Ok(dims)
}

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))).collect()
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    match floats(s)?[..] {
        [a, b] => Ok([a, b]),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn parse_omega(s: &str) -> Result<[f64; 3], String> {
    match floats(s)?[..] {
        [a] => Ok([a; 3]),
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("expected one or three numbers, got {s:?}")),
    }
}

fn parse_window(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> =
        s.split(',').map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("expected wt,wy,wx, got {s:?}")),
    }
}

fn parse_weight(s: &str) -> Result<Weight, String> {
    if s == "none" {
        return Ok(Weight(None));
    }
    s.parse::<f64>().map(|v| Weight(Some(v))).map_err(|e| e.to_string())
}

fn parse_depth(s: &str) -> Result<u32, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err(format!("bit depth must be 8 or 16, got {s:?}")),
    }
}

fn parse_rate(s: &str) -> Result<FrameRate, String> {
    let (n, d) = s.split_once(':').unwrap_or((s, "1"));
    let n = n.parse::<u32>().map_err(|e| e.to_string())?;
    let d = d.parse::<u32>().map_err(|e| e.to_string())?;
    FrameRate::new(n, d).map_err(|e| e.to_string())
}

fn parse_psf(s: &str) -> Result<PsfArg, String> {
    match s {
        "auto" => Ok(PsfArg::Auto),
        "point" => Ok(PsfArg::Manual(PsfSpec::point())),
        _ => match floats(s)?[..] {
            [x, y, t] => PsfSpec::new(x, y, t).map(PsfArg::Manual).map_err(|e| e.to_string()),
            _ => Err(format!("expected auto, point or sx,sy,st, got {s:?}")),
        },
    }
}

fn is_y4m(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
}

/// Reads a `.y4m` file or a directory of PNG frames.
pub fn read_video(path: &Path, pattern: &str) -> vff::Result<VideoBuffer> {
    if is_y4m(path) {
        io::read_y4m(path)
    } else {
        io::read_png_sequence(path, pattern)
    }
}

/// Writes a `.y4m` file or a directory of PNG frames.
pub fn write_video(video: &VideoBuffer, path: &Path, out: &VideoOut) -> vff::Result<()> {
    if is_y4m(path) {
        io::write_y4m(video, path, out.fps)
    } else {
        io::write_png_sequence(video, path, BitDepth::try_from(out.bit_depth)?)
    }
}

fn dims_str(d: [usize; 3]) -> String {
    format!("{}x{}x{}", d[0], d[1], d[2])
}

pub fn cmd_synth(a: &SynthArgs) -> anyhow::Result<()> {
    let spec = SynthSpec {
        pattern: a.pattern,
        dims: a.dims,
        velocity: a.velocity,
        acceleration: a.acceleration,
        angular_rate: a.angular_rate,
        frequency: a.frequency,
        components: a.components,
        amplitude: a.amplitude,
        period: a.period,
        radius: a.radius,
        seed: a.seed,
    };
    let scene = Scene::new(&spec).map_err(|e| vff::Error::Config(e.to_string()))?;
    let video = scene.render();
    write_video(&video, &a.output, &a.video)?;
    let sidecar = if is_y4m(&a.output) {
        let mut p = a.output.clone().into_os_string();
        p.push(".txt");
        PathBuf::from(p)
    } else {
        a.output.join("description.txt")
    };
    std::fs::write(&sidecar, scene.describe()).with_context(|| format!("writing {}", sidecar.display()))?;
    println!("wrote {} {} frames to {}", a.pattern.name(), dims_str(a.dims), a.output.display());
    Ok(())
}

pub fn cmd_degrade(a: &DegradeArgs) -> anyhow::Result<()> {
    let input = read_video(&a.input, &a.pattern)?;
    let kept = temporal_subsample(&input, a.tscale)?;
    let out = bicubic_downsample(&kept, a.sscale)?;
    write_video(&out, &a.output, &a.video)?;
    println!("input {} -> output {} ({} frames)", dims_str(input.dims()), dims_str(out.dims()), out.frames());
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> anyhow::Result<()> {
    let video = read_video(&a.input, &a.pattern)?;
    let mut bank_cfg = BankInitConfig {
        n_basis: a.n_basis,
        strategy: match a.strategy {
            StrategyArg::StratifiedRandom => BankStrategy::StratifiedRandom,
            StrategyArg::AxisGrid => BankStrategy::AxisGrid,
        },
        seed: a.seed,
        ..Default::default()
    };
    if let Some(w) = a.omega_max {
        bank_cfg.omega_max = w;
    }
    let fit_cfg = FitConfig {
        window: a.window,
        ridge_lambda: a.ridge,
        sample_weight_sigma: a.weight_sigma.0,
        border_mode: match a.border {
            BorderArg::Clamp => BorderMode::Clamp,
            BorderArg::Reflect => BorderMode::Reflect,
            BorderArg::Truncate => BorderMode::Truncate,
        },
    };
    let mut bank = init_bank(&bank_cfg)?;
    if a.refine_iterations > 0 {
        let refine = RefineConfig { iterations: a.refine_iterations, ..Default::default() };
        bank = refine_bank(std::slice::from_ref(&video), &bank, &fit_cfg, &refine)?;
    }
    let grid: FieldGrid = fit_video(&video, &bank, &fit_cfg)?;
    io::save_field(&grid, &a.output)?;
    println!(
        "fit {} voxels, N={}, C={} -> {}",
        dims_str(grid.dims()),
        grid.n_basis(),
        grid.channels(),
        a.output.display()
    );
    Ok(())
}

pub fn cmd_sample(a: &SampleArgs) -> anyhow::Result<()> {
    let grid = io::load_field(&a.field)?;
    let spec = SampleSpec::new(grid.dims(), a.sscale, a.tscale)?;
    let policy = match a.psf {
        PsfArg::Auto => PsfPolicy::Auto { nu: a.nu },
        PsfArg::Manual(p) => PsfPolicy::Manual(p),
    };
    let psf = policy.resolve(a.sscale, a.tscale)?;
    let out = if a.blend > 0.0 {
        sample_grid_blended(&grid, &spec, &psf, a.blend)?
    } else {
        sample_grid(&grid, &spec, &psf)?
    };
    write_video(&out.clamp01(), &a.output, &a.video)?;
    println!("sampled {} -> {} (psf sigma {:?})", dims_str(grid.dims()), dims_str(spec.out_dims()), psf.sigma());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let pred = read_video(&a.pred, &a.pattern)?;
    let reference = read_video(&a.reference, &a.pattern)?;
    let opts = EvalOptions {
        psnr: a.metrics.contains(&Metric::Psnr),
        ssim: a.metrics.contains(&Metric::Ssim),
        on_luma: a.luma,
        keyframe_interval: a.split_keyframes,
    };
    let report = evaluate(&pred, &reference, &opts)?;
    let json = report::eval_json(&report, a.luma);
    let json_text = serde_json::to_string_pretty(&json)? + "\n";
    match &a.report {
        Some(p) if p.as_os_str() == "-" => print!("{json_text}"),
        Some(p) => {
            std::fs::write(p, &json_text).with_context(|| format!("writing {}", p.display()))?;
            print!("{}", report::eval_text(&report));
        }
        None => print!("{}", report::eval_text(&report)),
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> anyhow::Result<()> {
    let cfg = BenchConfig {
        patch: a.patch,
        sscale: a.sscale,
        tscale: a.tscale,
        repeat: a.repeat,
        n_basis: a.n_basis,
        nu: a.nu,
        naive_frames: a.naive_frames,
        seed: a.seed,
    };
    let report = run_bench(&cfg)?;
    print!("{}", report.to_text());
    if let Some(p) = &a.report {
        let text = serde_json::to_string_pretty(&report.to_json())? + "\n";
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Degrade(a) => cmd_degrade(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn one_line(e: &anyhow::Error) -> String {
    e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ").replace('\n', " ")
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code. Diagnostics go to stderr as a single line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::expand_config(args, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("vff: error: {}", one_line(&e));
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("vff: error: {first} (see vff --help)");
            return EXIT_USAGE;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("vff: error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // A pool that is already initialised (e.g. in tests) keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("vff: error: {}", one_line(&e));
            let usage = e.downcast_ref::<vff::Error>().is_some_and(|v| matches!(v, vff::Error::Config(_)));
            if usage {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}
