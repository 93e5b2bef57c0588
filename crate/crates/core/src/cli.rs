//! The `perturbshield` command line.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rayon::prelude::*;

use crate::edge::{canny_auto_with, EdgeMap};
use crate::pipeline::{defend, l2_distance, luminance, parse_kernels, Defense, PipelineConfig};
use crate::raster::{load, save};
use crate::sweep::{run_sweep, SweepAxis, SweepReport, SweepRow, SweepValue};
use crate::{Error, Result};

/// Extensions picked up when an input is a directory.
pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pgm"];

#[derive(Debug, Parser)]
#[command(
    name = "perturbshield",
    version,
    about = "Edge-guided smoothing and color reduction against adversarial perturbation"
)]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "PERTURBSHIELD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a full defense on images.
    Defend(DefendCmd),
    /// Write the binary edge mask and soft edge map of each image.
    Edges(EdgesCmd),
    /// Edge-guided adaptive Gaussian smoothing only.
    Smooth(SmoothCmd),
    /// K-means color reduction, optionally after (adaptive) Gaussian smoothing.
    Reduce(ReduceCmd),
    /// Fixed baseline defenses.
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Sweep lambda_v, alpha or the kernel set and report per-image metrics as CSV.
    Sweep(SweepCmd),
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Input images or directories of images (png, ppm, pgm)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Output directory; file names mirror the inputs
    #[arg(short, long)]
    pub output: PathBuf,

    /// Write a per-image CSV report here
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Write 0 in the `ms` column so reports are reproducible
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EdgeArgs {
    #[arg(long, default_value_t = 670.0)]
    pub lambda_v: f64,

    /// Blur applied to the edge mask to get the soft map
    #[arg(long, default_value_t = 7)]
    pub soft_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SmoothArgs {
    #[arg(long, default_value_t = 2)]
    pub alpha: u8,

    /// Kernel sizes as a range (3-9) or a list (3,5,7)
    #[arg(long, default_value = "3-9")]
    pub kernels: String,
}

#[derive(Debug, Clone, Args)]
pub struct ColorArgs {
    #[arg(long, default_value_t = 128)]
    pub colors: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Subsampling stride of the fast variants
    #[arg(long, default_value_t = 4)]
    pub sample_stride: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, default_value_t = 4)]
    pub bits: u8,

    #[arg(long, default_value_t = 75)]
    pub quality: u8,

    #[arg(long, default_value_t = 3)]
    pub median_size: usize,

    #[arg(long, default_value_t = 5)]
    pub gaussian_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = Defense::FastAdaptiveGk)]
    pub defense: Defense,

    #[command(flatten)]
    pub edge: EdgeArgs,

    #[command(flatten)]
    pub smooth: SmoothArgs,

    #[command(flatten)]
    pub color: ColorArgs,

    #[command(flatten)]
    pub baseline: BaselineArgs,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            defense: self.defense,
            lambda_v: self.edge.lambda_v,
            alpha: self.smooth.alpha,
            kernels: parse_kernels(&self.smooth.kernels)?,
            colors: self.color.colors,
            bits: self.baseline.bits,
            quality: self.baseline.quality,
            median_size: self.baseline.median_size,
            gaussian_size: self.baseline.gaussian_size,
            seed: self.color.seed,
            soft_size: self.edge.soft_size,
            sample_stride: self.color.sample_stride,
        })
    }
}

#[derive(Debug, Args)]
pub struct DefendCmd {
    #[command(flatten)]
    pub io: IoArgs,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Also write `<stem>_mask.pgm` and `<stem>_soft.pgm`
    #[arg(long)]
    pub dump_maps: bool,
}

#[derive(Debug, Args)]
pub struct EdgesCmd {
    #[command(flatten)]
    pub io: IoArgs,

    #[command(flatten)]
    pub edge: EdgeArgs,
}

#[derive(Debug, Args)]
pub struct SmoothCmd {
    #[command(flatten)]
    pub io: IoArgs,

    #[command(flatten)]
    pub edge: EdgeArgs,

    #[command(flatten)]
    pub smooth: SmoothArgs,

    #[arg(long)]
    pub dump_maps: bool,
}

#[derive(Debug, Args)]
pub struct ReduceCmd {
    #[command(flatten)]
    pub io: IoArgs,

    /// kmeans, gk_means, fast_gk_means, adaptive_gk or fast_adaptive_gk
    #[arg(long, default_value_t = Defense::Kmeans)]
    pub variant: Defense,

    #[command(flatten)]
    pub color: ColorArgs,

    #[command(flatten)]
    pub edge: EdgeArgs,

    #[command(flatten)]
    pub smooth: SmoothArgs,

    #[arg(long)]
    pub dump_maps: bool,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCmd {
    /// Keep the top `--bits` bits of every sample
    Bitdepth {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 4)]
        bits: u8,
    },
    /// JPEG-style DCT quantization round trip
    Jpeg {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 75)]
        quality: u8,
    },
    Median {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 3)]
        median_size: usize,
    },
    Gaussian {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 5)]
        gaussian_size: usize,
    },
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    /// Directory (or files) of reference images
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    #[arg(long)]
    pub axis: SweepAxis,

    /// Sweep points; numeric axes also take start:end:step. Defaults to the
    /// axis's standard range.
    #[arg(long, num_args = 1..)]
    pub values: Vec<String>,

    /// CSV destination (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub no_timing: bool,

    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// What to do with each image of a batch.
#[derive(Clone, Debug)]
pub enum Job {
    Defend(PipelineConfig),
    /// Edge maps only.
    Edges {
        lambda_v: f64,
        soft_size: usize,
    },
}

#[derive(Clone, Debug, Default)]
pub struct BatchOptions {
    pub dump_maps: bool,
    pub timing: bool,
}

#[derive(Debug, Default)]
pub struct BatchSummary {
    pub processed: usize,
    pub failed: Vec<(PathBuf, String)>,
    pub report: SweepReport,
}

impl BatchSummary {
    pub fn success(&self) -> bool {
        self.failed.is_empty() && self.processed > 0
    }
}

fn has_image_extension(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Expands directories (non-recursively, sorted by name) and keeps plain
/// files as given.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && has_image_extension(f))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("no input images found".into()));
    }
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| file_name(p))
}

fn write_maps(edges: &EdgeMap, out_dir: &Path, input: &Path) -> Result<()> {
    let s = stem(input);
    save(edges.mask(), out_dir.join(format!("{s}_mask.pgm")))?;
    save(edges.soft(), out_dir.join(format!("{s}_soft.pgm")))
}

fn process_one(input: &Path, out_dir: &Path, job: &Job, opts: &BatchOptions) -> Result<SweepRow> {
    let name = file_name(input);
    let img = load(input)?;
    match job {
        Job::Edges {
            lambda_v,
            soft_size,
        } => {
            let start = Instant::now();
            let edges = canny_auto_with(&luminance(&img)?, *lambda_v, *soft_size)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            write_maps(&edges, out_dir, input)?;
            Ok(SweepRow {
                param: "edges".into(),
                filename: name,
                l2_to_input: 0.0,
                distinct_colors: img.distinct_colors(),
                edge_fraction: edges.edge_fraction(),
                ms: if opts.timing { ms } else { 0.0 },
            })
        }
        Job::Defend(cfg) => {
            let start = Instant::now();
            let out = defend(&img, cfg)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let dest = out_dir.join(&name);
            if cfg.defense == Defense::None {
                // keep the exact bytes, not a re-encoding
                fs::copy(input, &dest).map_err(|e| Error::io(&dest, e))?;
            } else {
                save(&out.image, &dest)?;
            }
            match (&out.edges, opts.dump_maps) {
                (Some(edges), true) => write_maps(edges, out_dir, input)?,
                (None, true) => warn!("{name}: {} computes no edge maps", cfg.defense),
                _ => {}
            }
            Ok(SweepRow {
                param: cfg.defense.to_string(),
                filename: name,
                l2_to_input: l2_distance(&out.image, &img)?,
                distinct_colors: out.image.distinct_colors(),
                edge_fraction: out.edges.as_ref().map_or(0.0, EdgeMap::edge_fraction),
                ms: if opts.timing { ms } else { 0.0 },
            })
        }
    }
}

/// Processes every input, skipping (and recording) the ones that fail.
pub fn run_batch(
    inputs: &[PathBuf],
    out_dir: &Path,
    job: &Job,
    opts: &BatchOptions,
) -> Result<BatchSummary> {
    let files = collect_inputs(inputs)?;
    if let Job::Defend(cfg) = job {
        // fail fast on a bad kernel set or alpha rather than once per file
        if cfg.defense.uses_edges() {
            cfg.kernel_bank()?;
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = files.iter().map(|f| !seen.insert(file_name(f))).collect();

    let results: Vec<Result<SweepRow>> = files
        .par_iter()
        .zip(duplicate.par_iter())
        .map(|(f, &dup)| {
            if dup {
                return Err(Error::param(
                    "inputs",
                    format!("another input already writes {}", file_name(f)),
                ));
            }
            process_one(f, out_dir, job, opts)
        })
        .collect();

    let mut summary = BatchSummary::default();
    for (f, r) in files.iter().zip(results) {
        match r {
            Ok(row) => {
                info!(
                    "{}: l2 {:.3}, {} colors, edge fraction {:.4}",
                    row.filename, row.l2_to_input, row.distinct_colors, row.edge_fraction
                );
                summary.processed += 1;
                summary.report.rows.push(row);
            }
            Err(e) => {
                error!("{}: {e}", f.display());
                summary.failed.push((f.clone(), e.to_string()));
            }
        }
    }
    Ok(summary)
}

fn write_report(report: &SweepReport, dest: Option<&Path>) -> Result<()> {
    match dest {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            report.write_csv(f)
        }
        None => report.write_csv(io::stdout().lock()),
    }
}

fn batch(io_args: &IoArgs, job: Job, dump_maps: bool) -> Result<bool> {
    let opts = BatchOptions {
        dump_maps,
        timing: !io_args.no_timing,
    };
    let summary = run_batch(&io_args.inputs, &io_args.output, &job, &opts)?;
    if let Some(p) = &io_args.report {
        write_report(&summary.report, Some(p))?;
    }
    info!(
        "{} processed, {} failed",
        summary.processed,
        summary.failed.len()
    );
    Ok(summary.success())
}

fn single(defense: Defense, f: impl FnOnce(&mut PipelineConfig)) -> Job {
    let mut cfg = PipelineConfig::with_defense(defense);
    f(&mut cfg);
    Job::Defend(cfg)
}

fn sweep(cmd: &SweepCmd) -> Result<bool> {
    let cfg = cmd.pipeline.config()?;
    let values: Vec<SweepValue> = if cmd.values.is_empty() {
        cmd.axis.default_values()
    } else {
        let mut v = Vec::new();
        for s in &cmd.values {
            v.extend(cmd.axis.parse_values(s)?);
        }
        v
    };
    let files = collect_inputs(&cmd.inputs)?;
    let images = files
        .iter()
        .map(|f| Ok((file_name(f), load(f)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = run_sweep(&images, &values, &cfg, !cmd.no_timing)?;
    write_report(&report, cmd.out.as_deref())?;
    Ok(true)
}

/// Executes a parsed command line. `Ok(false)` means some file failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Defend(c) => batch(&c.io, Job::Defend(c.pipeline.config()?), c.dump_maps),
        Command::Edges(c) => batch(
            &c.io,
            Job::Edges {
                lambda_v: c.edge.lambda_v,
                soft_size: c.edge.soft_size,
            },
            true,
        ),
        Command::Smooth(c) => {
            let kernels = parse_kernels(&c.smooth.kernels)?;
            let job = single(Defense::AdaptiveGaussian, |cfg| {
                cfg.lambda_v = c.edge.lambda_v;
                cfg.soft_size = c.edge.soft_size;
                cfg.alpha = c.smooth.alpha;
                cfg.kernels = kernels;
            });
            batch(&c.io, job, c.dump_maps)
        }
        Command::Reduce(c) => {
            if c.variant.variant().is_none() {
                return Err(Error::param(
                    "variant",
                    format!("`{}` is not a color-reduction variant", c.variant),
                ));
            }
            let kernels = parse_kernels(&c.smooth.kernels)?;
            let job = single(c.variant, |cfg| {
                cfg.colors = c.color.colors;
                cfg.seed = c.color.seed;
                cfg.sample_stride = c.color.sample_stride;
                cfg.lambda_v = c.edge.lambda_v;
                cfg.soft_size = c.edge.soft_size;
                cfg.alpha = c.smooth.alpha;
                cfg.kernels = kernels;
            });
            batch(&c.io, job, c.dump_maps)
        }
        Command::Baseline(b) => match b {
            BaselineCmd::Bitdepth { io, bits } => {
                batch(io, single(Defense::BitDepth, |c| c.bits = *bits), false)
            }
            BaselineCmd::Jpeg { io, quality } => {
                batch(io, single(Defense::Jpeg, |c| c.quality = *quality), false)
            }
            BaselineCmd::Median { io, median_size } => batch(
                io,
                single(Defense::Median, |c| c.median_size = *median_size),
                false,
            ),
            BaselineCmd::Gaussian { io, gaussian_size } => batch(
                io,
                single(Defense::Gaussian, |c| c.gaussian_size = *gaussian_size),
                false,
            ),
        },
        Command::Sweep(c) => sweep(c),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("could not size the worker pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            error!("{e}");
            1
        }
    }
}
