//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compose::ComposeParams;
use crate::entropy::NoiseModel;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig};
use crate::filters::{FilterParams, SimilarityMeasure};
use crate::leafseg::EdgeParams;
use crate::pbt::render_mean_colors;
use crate::pipeline::{self, Params};
use crate::quadtree::{decompose, DecompParams};
use crate::raster::{LabelMap, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(u64),
}

fn parse_k(s: &str) -> std::result::Result<KChoice, String> {
    if s == "auto" {
        return Ok(KChoice::Auto);
    }
    match s.parse::<u64>() {
        Ok(k) if k >= 1 => Ok(KChoice::Fixed(k)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Preset {
    /// α=1, β1=8, β2=3, t=0.994
    #[default]
    Eval,
    /// β1=8, β2=10, α=20, t=0.994
    Figures,
}

impl Preset {
    pub fn filter(self) -> FilterParams {
        match self {
            Preset::Eval => FilterParams::EVAL,
            Preset::Figures => FilterParams::FIGURES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    Cosine,
    Dice,
    Jaccard,
    Overlap,
}

impl From<Measure> for SimilarityMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Cosine => SimilarityMeasure::Cosine,
            Measure::Dice => SimilarityMeasure::Dice,
            Measure::Jaccard => SimilarityMeasure::Jaccard,
            Measure::Overlap => SimilarityMeasure::Overlap,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hintseg", version, about = "Hierarchical image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment an image and write labels, a mean-color render and the tree
    Segment {
        #[command(flatten)]
        common: PipelineArgs,
        #[command(flatten)]
        cut: CutArgs,
    },
    /// Write the weighted boundary map of the initial segmentation
    Boundaries {
        #[command(flatten)]
        common: PipelineArgs,
    },
    /// Write the probability tree as JSON
    Tree {
        #[command(flatten)]
        common: PipelineArgs,
        /// Also write the quadtree decomposition
        #[arg(long)]
        quadtree: bool,
    },
    /// Score a segmentation; prints `q,h_r,h_l,e`
    Eval {
        input: PathBuf,
        labels: PathBuf,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Directory for eval.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the smallest k ≥ 3 leaving no chaos leaves
    AutoK {
        #[command(flatten)]
        common: PipelineArgs,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct CutArgs {
    /// Merge segments whose boundary confidence is at most this value
    #[arg(long)]
    pub t_visual: Option<f64>,
    /// Number of segments to display
    #[arg(long)]
    pub n_visual: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    pub input: PathBuf,
    /// Dominant-segment count, or `auto`
    #[arg(long, default_value = "3", value_parser = parse_k)]
    pub k: KChoice,
    #[arg(long, default_value_t = 0.998)]
    pub a: f64,
    #[arg(long = "kprime", default_value_t = 3)]
    pub k_prime: u64,
    #[arg(long, default_value_t = 3)]
    pub l: usize,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t)]
    pub preset: Preset,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub similarity: Option<Measure>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub low: f64,
    #[arg(long, default_value_t = 0.2)]
    pub high: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VisualCut {
    Threshold(f64),
    Count(usize),
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub k: KChoice,
    pub params: Params,
    pub visual: Option<VisualCut>,
    pub out: PathBuf,
}

impl PipelineArgs {
    pub fn resolve(&self, visual: Option<VisualCut>) -> Result<RunConfig> {
        let base = self.preset.filter();
        let filter = FilterParams {
            beta1: self.beta1.unwrap_or(base.beta1),
            beta2: self.beta2.unwrap_or(base.beta2),
            alpha: self.alpha.unwrap_or(base.alpha),
            t: self.t.unwrap_or(base.t),
            measure: self.similarity.map(Into::into).unwrap_or(base.measure),
        };
        filter.validate()?;
        let k = match self.k {
            KChoice::Fixed(k) => k,
            KChoice::Auto => 3,
        };
        let decomp = DecompParams::new(NoiseModel::new(k, self.a, self.k_prime)?, self.l, self.bins)?;
        let edges = EdgeParams {
            sigma: self.sigma,
            low: self.low,
            high: self.high,
        };
        if !(edges.sigma > 0.0 && 0.0 < edges.low && edges.low <= edges.high && edges.high <= 1.0) {
            return Err(Error::InvalidArgument("need sigma > 0 and 0 < low <= high <= 1".into()));
        }
        if let Some(VisualCut::Threshold(t)) = visual {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("t-visual must lie in [0, 1], got {t}")));
            }
        }
        Ok(RunConfig {
            input: self.input.clone(),
            k: self.k,
            params: Params {
                decomp,
                compose: ComposeParams { filter, edges },
            },
            visual,
            out: self.out.clone(),
        })
    }
}

pub fn chaos_leaves(img: &Raster, decomp: &DecompParams, k: u64) -> Result<usize> {
    Ok(decompose(img, &decomp.with_k(k))?.count_leaves().1)
}

/// Smallest `k` in `[3, mn]` whose decomposition has no chaos leaves, or
/// `mn` when none does. Relies on the chaos count never rising with `k`.
pub fn find_optimization_point(img: &Raster, decomp: &DecompParams) -> Result<u64> {
    let cap = ((img.width() * img.height()) as u64).max(3);
    let mut lo = 3u64;
    if chaos_leaves(img, decomp, lo)? == 0 {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        if hi >= cap {
            return Ok(cap);
        }
        hi = (hi * 2).min(cap);
        if chaos_leaves(img, decomp, hi)? == 0 {
            break;
        }
        lo = hi;
    }
    // invariant: chaos(lo) > 0, chaos(hi) == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if chaos_leaves(img, decomp, mid)? == 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn prepare(common: &PipelineArgs, visual: Option<VisualCut>) -> Result<(RunConfig, Raster)> {
    let mut cfg = common.resolve(visual)?;
    let img = Raster::load(&cfg.input)?;
    if cfg.k == KChoice::Auto {
        let k = find_optimization_point(&img, &cfg.params.decomp)?;
        cfg.params.decomp = cfg.params.decomp.with_k(k);
    }
    fs::create_dir_all(&cfg.out)?;
    Ok((cfg, img))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Segment { common, cut } => {
            let visual = match (cut.t_visual, cut.n_visual) {
                (Some(t), None) => VisualCut::Threshold(t),
                (None, Some(n)) => VisualCut::Count(n),
                _ => unreachable!("clap enforces exactly one cut"),
            };
            let (cfg, img) = prepare(&common, Some(visual))?;
            let seg = pipeline::run(&img, &cfg.params)?;
            let grouping = match visual {
                VisualCut::Threshold(t) => seg.pbt.cut_by_threshold(t),
                VisualCut::Count(n) => seg.pbt.cut_by_count(n)?,
            };
            let labels = grouping.apply(&seg.graph.labels)?;
            labels.save(cfg.out.join("labels.pgm"))?;
            render_mean_colors(&img, &labels)?.save(cfg.out.join("render.ppm"))?;
            write_text(&cfg.out.join("tree.json"), &seg.pbt.to_json()?)?;
            writeln!(stdout, "{}", labels.count())?;
        }
        Command::Boundaries { common } => {
            let (cfg, img) = prepare(&common, None)?;
            let seg = pipeline::run(&img, &cfg.params)?;
            seg.graph.save_boundary_pgm(cfg.out.join("boundaries.pgm"))?;
            writeln!(stdout, "{}", seg.graph.boundaries.len())?;
        }
        Command::Tree { common, quadtree } => {
            let (cfg, img) = prepare(&common, None)?;
            let seg = pipeline::run(&img, &cfg.params)?;
            write_text(&cfg.out.join("tree.json"), &seg.pbt.to_json()?)?;
            if quadtree {
                write_text(&cfg.out.join("quadtree.json"), &seg.tree.to_json()?)?;
            }
        }
        Command::Eval { input, labels, bins, out } => {
            let cfg = EvalConfig {
                bins,
                ..EvalConfig::default()
            };
            crate::entropy::Histogram::new(bins)?;
            let img = Raster::load(&input)?;
            let labels = LabelMap::load(&labels)?;
            let report = evaluate(&img, &labels, &cfg)?;
            writeln!(stdout, "{}", report.csv_line())?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                write_text(&dir.join("eval.json"), &serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::AutoK { common } => {
            let cfg = common.resolve(None)?;
            let img = Raster::load(&cfg.input)?;
            writeln!(stdout, "{}", find_optimization_point(&img, &cfg.params.decomp)?)?;
        }
    }
    Ok(())
}

/// Exit status for an error: 2 for unusable arguments, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "hintseg: {e}");
            exit_code(&e)
        }
    }
}

pub fn run() -> i32 {
    run_with(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::three_bands;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("hintseg").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parse_k_values() {
        assert_eq!(parse_k("auto"), Ok(KChoice::Auto));
        assert_eq!(parse_k("7"), Ok(KChoice::Fixed(7)));
        assert!(parse_k("0").is_err());
        assert!(parse_k("x").is_err());
    }

    #[test]
    fn presets_and_overrides() {
        let cli = Cli::try_parse_from(["hintseg", "boundaries", "in.ppm", "--preset", "figures", "--alpha", "5"]).unwrap();
        let Command::Boundaries { common } = cli.command else { panic!() };
        let cfg = common.resolve(None).unwrap();
        assert_eq!(cfg.params.compose.filter.beta2, 10.0);
        assert_eq!(cfg.params.compose.filter.alpha, 5.0);
        assert_eq!(cfg.params.decomp, DecompParams::default());
    }

    #[test]
    fn bad_flags_exit_2() {
        assert_eq!(call(&["segment", "x.ppm"]).0, 2);
        assert_eq!(call(&["segment", "x.ppm", "--t-visual", "0.5", "--n-visual", "2"]).0, 2);
        assert_eq!(call(&["boundaries", "x.ppm", "--k", "many"]).0, 2);
        assert_eq!(call(&["boundaries", "x.ppm", "--t", "2"]).0, 2);
        assert_eq!(call(&["bogus"]).0, 2);
    }

    #[test]
    fn missing_input_exits_1() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.ppm");
        let (code, _, err) = call(&["auto-k", missing.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.starts_with("hintseg:"));
    }

    #[test]
    fn auto_k_on_bands() {
        let img = three_bands(64, 64);
        assert_eq!(find_optimization_point(&img, &DecompParams::default()).unwrap(), 3);
    }

    #[test]
    fn auto_k_on_flat() {
        let img = Raster::filled(8, 8, [5, 5, 5]).unwrap();
        assert_eq!(find_optimization_point(&img, &DecompParams::default()).unwrap(), 3);
    }
}
