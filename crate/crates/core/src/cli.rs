//! The `hitomi` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 when a command fails.
//! Diagnostics go to standard error; data goes to files or standard output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::time_pipeline;
use crate::error::{Error, Result};
use crate::eval::{evaluate, parse_sweep, pr_svg, write_report_csv, EvalConfig, ReportRow};
use crate::formats::{read_annotations, read_frame, write_annotations, write_detections, write_frame, BBox};
use crate::mlp::{load_dataset, load_model, save_dataset, save_model, train, TrainConfig};
use crate::pipeline::{configure_threads, run_staged, threads_from_env, ClothingMap, PipelineParams};
use crate::radiometry::{compute_wb, WbCoefficients};
use crate::synth::{
    builtin_illuminant, builtin_library, generate_training_set, random_sar_scene, render_scene, DatasetConfig,
    MaterialSignature, SarSceneConfig, SceneSpec,
};

#[derive(Parser, Debug)]
#[command(name = "hitomi", version, about = "Shape-agnostic person-presence detection from multispectral frames")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the pixel classifier on a spectral dataset directory.
    Train(TrainArgs),
    /// Detect clothing regions in one frame or a directory of frames.
    Detect(DetectArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Time each pipeline stage.
    Bench(BenchArgs),
    /// Render a synthetic scene or training set.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 2)]
    patience: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    /// Per-epoch loss log as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WbArgs {
    /// White-balance sidecar (`{"gains":[...],"target":t}`).
    #[arg(long, conflicts_with = "wb_region")]
    wb: Option<PathBuf>,
    /// White plate rectangle `x,y,w,h`, balanced per frame.
    #[arg(long, value_parser = parse_region)]
    wb_region: Option<BBox>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    /// An HMC1 frame or a directory of `*.hmc` frames.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    #[command(flatten)]
    wb: WbArgs,
    /// Write initial, denoised and closed masks as PGM images here.
    #[arg(long)]
    dump_maps: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    dets: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    iou: f64,
    #[arg(long, default_value_t = 0.01)]
    conf: f64,
    /// Report CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pr_svg: Option<PathBuf>,
    /// IoU thresholds `start:stop:step`, one report row each.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value = "hitomi")]
    model: String,
    #[arg(long, default_value = "all")]
    scene: String,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    wb: WbArgs,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    /// Timing CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scene spec to render.
    #[arg(long, group = "source")]
    scene: Option<PathBuf>,
    /// Render a random cluttered outdoor scene from this seed.
    #[arg(long, group = "source")]
    sar: Option<u64>,
    /// Dataset config; writes a training directory to `--out`.
    #[arg(long, group = "source")]
    dataset: Option<PathBuf>,
    /// Frame file, or dataset directory with `--dataset`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Material library (JSON array); the builtin library when omitted.
    #[arg(long)]
    library: Option<PathBuf>,
    /// Frame id written into ground truth; the output file stem by default.
    #[arg(long)]
    frame_id: Option<String>,
    /// With `--sar`, also save the generated scene spec.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

fn parse_region(s: &str) -> std::result::Result<BBox, String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("expected x,y,w,h: {e}"))?;
    match v[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(BBox::new(x, y, w, h)),
        _ => Err("expected x,y,w,h with positive w and h".into()),
    }
}

/// Dataset file: a [`DatasetConfig`] plus illuminant, seed and an optional
/// material subset.
#[derive(Debug, Deserialize)]
struct DatasetFile {
    #[serde(flatten)]
    config: DatasetConfig,
    #[serde(default = "daylight")]
    illuminant: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    materials: Option<Vec<String>>,
}

fn daylight() -> String {
    "daylight".into()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_library(path: Option<&Path>) -> Result<Vec<MaterialSignature>> {
    let Some(path) = path else {
        return Ok(builtin_library());
    };
    let lib: Vec<MaterialSignature> = read_json(path)?;
    for m in &lib {
        m.validate()?;
    }
    Ok(lib)
}

fn load_params(path: Option<&Path>) -> Result<PipelineParams> {
    let p = match path {
        Some(p) => read_json(p)?,
        None => PipelineParams::default(),
    };
    p.validate()?;
    Ok(p)
}

fn frame_id_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn input_frames(input: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hmc"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format(format!("no .hmc frames in {}", input.display())));
    }
    Ok(paths)
}

fn resolve_wb(args: &WbArgs, frame: &crate::formats::MultibandFrame) -> Result<WbCoefficients> {
    if let Some(p) = &args.wb {
        return WbCoefficients::load(p);
    }
    if let Some(r) = args.wb_region {
        return compute_wb(frame, r);
    }
    Ok(WbCoefficients::identity(frame.bands()))
}

fn save_pgm(map: &ClothingMap, path: &Path) -> Result<()> {
    use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
    use image::ImageEncoder;
    let img = map.to_gray_image();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PnmEncoder::new(std::io::BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::L8)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let cfg = TrainConfig {
        seed: a.seed,
        max_epochs: a.epochs,
        learning_rate: a.lr,
        patience: a.patience,
        batch_size: a.batch_size,
        ..TrainConfig::default()
    };
    let (model, log) = train(&ds, &cfg)?;
    save_model(&model, &a.out)?;
    if let Some(p) = &a.log {
        let mut w = csv::Writer::from_path(p).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        for e in &log.epochs {
            w.serialize(e).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    if let Some(best) = log.best() {
        eprintln!(
            "trained {} epochs; best epoch {} val_loss {:.6} val_acc {:.4}",
            log.epochs.len(),
            best.epoch,
            best.val_loss,
            best.val_accuracy
        );
    }
    Ok(())
}

fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let params = load_params(a.params.as_deref())?;
    if let Some(d) = &a.dump_maps {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut all = Vec::new();
    for path in input_frames(&a.input)? {
        let frame = read_frame(&path)?;
        let wb = resolve_wb(&a.wb, &frame)?;
        let id = frame_id_of(&path);
        let trace = run_staged(&id, &frame, &wb, &model, &params, |_| {})?;
        if let Some(d) = &a.dump_maps {
            save_pgm(&trace.initial, &d.join(format!("{id}_initial.pgm")))?;
            save_pgm(&trace.denoised, &d.join(format!("{id}_denoised.pgm")))?;
            save_pgm(&trace.closed, &d.join(format!("{id}_closed.pgm")))?;
        }
        eprintln!("{id}: {} boxes", trace.detections.len());
        all.extend(trace.detections.boxes);
    }
    write_detections(&all, &a.out)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let dets = crate::eval::ingest_external_detections(&a.dets)?;
    let gts = read_annotations(&a.gt)?;
    let base = EvalConfig {
        iou_threshold: a.iou,
        confidence_floor: a.conf,
        ..EvalConfig::default()
    };
    let thresholds = match &a.sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![a.iou],
    };
    let mut rows = Vec::new();
    let mut curve = None;
    for t in thresholds {
        let r = evaluate(&dets, &gts, &EvalConfig { iou_threshold: t, ..base.clone() })?;
        rows.push(ReportRow::new(&a.model, &a.scene, &r));
        if (t - a.iou).abs() < 1e-12 || curve.is_none() {
            curve = Some(r.pr_points);
        }
    }
    if let (Some(p), Some(points)) = (&a.pr_svg, &curve) {
        write_text(p, &pr_svg(&[(a.model.as_str(), points.as_slice())]))?;
    }
    match &a.out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            write_report_csv(&rows, f)
        }
        None => write_report_csv(&rows, std::io::stdout().lock()),
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let frame = read_frame(&a.input)?;
    let model = load_model(&a.model)?;
    let wb = resolve_wb(&a.wb, &frame)?;
    let params = load_params(a.params.as_deref())?;
    let r = time_pipeline(&frame, &wb, &model, &params, a.iters, a.warmup)?;
    eprintln!(
        "{}x{}: {:.3} ms/frame ({:.1} fps) over {} iterations",
        r.width, r.height, r.total_mean_ms, r.fps, r.iterations
    );
    match &a.out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            r.write_csv(f)
        }
        None => r.write_csv(std::io::stdout().lock()),
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let library = load_library(a.library.as_deref())?;
    if let Some(d) = &a.dataset {
        let file: DatasetFile = read_json(d)?;
        let illuminant = builtin_illuminant(&file.illuminant)?;
        let materials = match &file.materials {
            Some(names) => names
                .iter()
                .map(|n| crate::synth::find_material(&library, n).cloned())
                .collect::<Result<Vec<_>>>()?,
            None => library.into_iter().filter(|m| m.name != crate::synth::WHITE_REFERENCE).collect(),
        };
        let ds = generate_training_set(&materials, &illuminant, &file.config, &TrainConfig::default(), file.seed)?;
        save_dataset(&ds, &a.out)?;
        eprintln!("{} samples, {} labels", ds.len(), ds.labels.len());
        return Ok(());
    }
    let spec: SceneSpec = match (&a.scene, a.sar) {
        (Some(p), _) => read_json(p)?,
        (None, Some(seed)) => {
            let (spec, plate) = random_sar_scene(&SarSceneConfig::default(), &library, seed);
            eprintln!("white plate at {},{},{},{}", plate.x, plate.y, plate.w, plate.h);
            spec
        }
        _ => return Err(Error::Spec("synth needs --scene, --sar or --dataset".into())),
    };
    if let Some(p) = &a.spec_out {
        let text = serde_json::to_string_pretty(&spec).map_err(|e| Error::Format(e.to_string()))?;
        write_text(p, &text)?;
    }
    let id = a.frame_id.clone().unwrap_or_else(|| frame_id_of(&a.out));
    let scene = render_scene(&spec, &library, &id)?;
    write_frame(&scene.frame, &a.out)?;
    if let Some(g) = &a.gt {
        write_annotations(&scene.ground_truth, g)?;
    }
    eprintln!("{id}: {} ground-truth boxes", scene.ground_truth.len());
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    configure_threads(threads_from_env());
    let res = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            2
        }
    }
}
