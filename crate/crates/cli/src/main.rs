use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use partgrasp::datagen::TemplateKind;
use partgrasp::metrics::{high_quality_ratio, threshold_sweep, QUALITY_WEIGHT};
use partgrasp::train::write_usage_csv;
use partgrasp::{
    derive_seed, evaluate, generate_corpus, load_dataset, load_trained, save_dataset, GraspModel, HandMesh, MeshSolid,
    RunConfig, RunLayout, SampleOptions, TriMesh, Vec3,
};

#[derive(Parser)]
#[command(name = "partgrasp", version, about = "Part-decomposed grasp generation pipeline")]
struct Cli {
    /// Root for relative paths.
    #[arg(long, global = true, env = "PARTGRASP_DATA", default_value = ".")]
    data_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic object/grasp corpus.
    Datagen(DatagenArgs),
    /// Train the quantized model, then the prior on its index sequences.
    Train(TrainArgs),
    /// Sample grasps for one object from a trained run.
    Sample(SampleArgs),
    /// Score grasp meshes against their objects.
    Evaluate(EvaluateArgs),
    /// Export dataset meshes or codebook usage.
    #[command(subcommand)]
    Export(ExportCommand),
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    objects: Option<usize>,
    #[arg(long)]
    grasps_per_object: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_template)]
    template: Option<TemplateKind>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Continue from the checkpoint in `out` when one exists.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    /// Training output directory.
    #[arg(long)]
    run: PathBuf,
    /// Object mesh (`.obj`) or point file (`x y z` per line).
    #[arg(long)]
    object: PathBuf,
    #[arg(long, default_value_t = 4)]
    num: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0.0)]
    mask_ratio: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of `<object>__<k>.obj` hand meshes.
    #[arg(long)]
    grasps: PathBuf,
    /// Directory of `<object>.obj` meshes.
    #[arg(long)]
    objects: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Supplies `train.tau` and `sim`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Displacement bound (cm) for the high-quality curve.
    #[arg(long, default_value_t = 2.0)]
    disp_threshold: f64,
    /// Largest penetration threshold (cm³) of the curve.
    #[arg(long, default_value_t = 10.0)]
    curve_max: f64,
    #[arg(long, default_value_t = 50)]
    curve_steps: usize,
}

#[derive(Subcommand)]
enum ExportCommand {
    /// Write object and ground-truth grasp meshes in `evaluate` layout.
    Dataset {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Export only the first N objects.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Codebook usage histograms as `book,index,count`.
    Usage {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_template(s: &str) -> std::result::Result<TemplateKind, String> {
    match s {
        "standard" => Ok(TemplateKind::Standard),
        "toy" => Ok(TemplateKind::Toy),
        _ => Err(format!("unknown template {s:?} (standard, toy)")),
    }
}

struct Paths {
    root: PathBuf,
}

impl Paths {
    fn get(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

fn load_config(paths: &Paths, config: Option<&Path>) -> Result<RunConfig> {
    match config {
        Some(p) => {
            let p = paths.get(p);
            RunConfig::load(&p).with_context(|| format!("reading config {}", p.display()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn cmd_datagen(paths: &Paths, args: &DatagenArgs) -> Result<()> {
    let mut cfg = load_config(paths, args.config.as_deref())?.datagen;
    cfg.objects = args.objects.unwrap_or(cfg.objects);
    cfg.grasps_per_object = args.grasps_per_object.unwrap_or(cfg.grasps_per_object);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.template = args.template.unwrap_or(cfg.template);
    let start = Instant::now();
    let data = generate_corpus(&cfg)?;
    let out = paths.get(&args.out);
    if let Some(dir) = out.parent() {
        std::fs::create_dir_all(dir)?;
    }
    save_dataset(&data, &out)?;
    info!("{} grasps on {} objects in {:.1}s", data.len(), data.objects.len(), start.elapsed().as_secs_f64());
    println!("wrote {} samples to {}", data.len(), out.display());
    Ok(())
}

fn cmd_train(paths: &Paths, args: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(paths, args.config.as_deref())?;
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    let data_path = paths.get(&args.data);
    let data = load_dataset(&data_path).with_context(|| format!("loading dataset {}", data_path.display()))?;
    let out = paths.get(&args.out);
    let summary = partgrasp::run_training(&cfg, &data, &out, args.resume)?;
    if let (Some(first), Some(last)) = (summary.history.first(), summary.history.last()) {
        println!("L_v {:.6} -> {:.6} over {} epochs", first.vertices, last.vertices, summary.history.len());
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let c: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if c.len() != 3 {
            bail!("{}:{}: expected 3 coordinates", path.display(), i + 1);
        }
        out.push([c[0], c[1], c[2]]);
    }
    Ok(out)
}

fn is_obj(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"))
}

fn object_cloud(path: &Path, points: usize, seed: u64) -> Result<Vec<Vec3>> {
    if is_obj(path) {
        let mesh = TriMesh::read_obj(BufReader::new(File::open(path)?))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
        Ok(mesh.sample_surface(points, &mut rng))
    } else {
        read_points(path)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    object: String,
    seed: u64,
    temperature: f64,
    mask_ratio: f64,
    grasps: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    object_index: usize,
    parts: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Timing {
    grasps: usize,
    batch_seconds: f64,
}

fn cmd_sample(paths: &Paths, args: &SampleArgs) -> Result<()> {
    let run = paths.get(&args.run);
    let layout = RunLayout::new(&run);
    let cfg = RunConfig::load(&layout.config()).with_context(|| format!("no run config in {}", run.display()))?;
    let (model, prior) = load_trained(&run)?;
    let object = paths.get(&args.object);
    let points = if cfg.train.train_points > 0 { cfg.train.train_points } else { cfg.datagen.cloud_points };
    let cloud = object_cloud(&object, points, args.seed)?;
    let stem = object.file_stem().and_then(|s| s.to_str()).context("object path has no file name")?.to_string();
    let out = paths.get(&args.out);
    std::fs::create_dir_all(&out)?;

    let start = Instant::now();
    let grasps = (0..args.num)
        .map(|k| {
            let opts =
                SampleOptions { temperature: args.temperature, mask_ratio: args.mask_ratio, seed: derive_seed(args.seed, k as u64) };
            model.generate_grasp(&prior, &cloud, &opts)
        })
        .collect::<partgrasp::Result<Vec<_>>>()?;
    let batch_seconds = start.elapsed().as_secs_f64();

    let mut entries = Vec::with_capacity(grasps.len());
    for (k, g) in grasps.iter().enumerate() {
        let file = format!("{stem}__{k:03}.obj");
        g.mesh.write_obj(BufWriter::new(File::create(out.join(&file))?))?;
        entries.push(ManifestEntry {
            file,
            object_index: g.indices.object,
            parts: g.indices.parts.clone(),
            params: g.params.to_vec(),
        });
    }
    let manifest = Manifest {
        object: args.object.display().to_string(),
        seed: args.seed,
        temperature: args.temperature,
        mask_ratio: args.mask_ratio,
        grasps: entries,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    std::fs::write(
        out.join("timing.json"),
        serde_json::to_string_pretty(&Timing { grasps: grasps.len(), batch_seconds })?,
    )?;
    let distinct: std::collections::BTreeSet<_> = grasps.iter().map(|g| g.indices.parts.clone()).collect();
    println!("wrote {} grasps ({} distinct index sequences) to {}", grasps.len(), distinct.len(), out.display());
    Ok(())
}

fn obj_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| is_obj(p));
    files.sort();
    Ok(files)
}

/// Report row. Per-grasp rows leave the aggregate-only columns empty; the
/// footer row has `file = "aggregate"` and the contact ratio in percent.
#[derive(Serialize)]
struct ReportRow {
    file: String,
    object: String,
    contact: f64,
    penetration_cm3: f64,
    displacement_cm: f64,
    quality_index: f64,
    entropy: Option<f64>,
    cluster_size: Option<f64>,
    runtime_s: Option<f64>,
}

fn cmd_evaluate(paths: &Paths, args: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(paths, args.config.as_deref())?;
    let grasp_dir = paths.get(&args.grasps);
    let object_dir = paths.get(&args.objects);
    let objects: BTreeMap<String, PathBuf> = obj_files(&object_dir)?
        .into_iter()
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();

    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for g in obj_files(&grasp_dir)? {
        let name = g.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        match name.rsplit_once("__").filter(|(stem, _)| objects.contains_key(*stem)) {
            Some((stem, _)) => pairs.push((g.clone(), stem.to_string())),
            None => unmatched.push(g.display().to_string()),
        }
    }
    if !unmatched.is_empty() {
        bail!("grasp files without a matching object in {}: {}", object_dir.display(), unmatched.join(", "));
    }
    if pairs.is_empty() {
        bail!("no grasp meshes in {}", grasp_dir.display());
    }

    let mut solids = BTreeMap::new();
    for (_, stem) in &pairs {
        if !solids.contains_key(stem) {
            let mesh = TriMesh::read_obj(BufReader::new(File::open(&objects[stem])?))?;
            let solid =
                MeshSolid::new(mesh).with_context(|| format!("object {} is not a closed mesh", objects[stem].display()))?;
            solids.insert(stem.clone(), solid);
        }
    }
    let hands = pairs
        .iter()
        .map(|(p, _)| {
            let h = HandMesh::read_obj(BufReader::new(File::open(p)?))?;
            if h.joints.is_empty() {
                bail!("{} has no keypoint records", p.display());
            }
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    let runtime = std::fs::read_to_string(grasp_dir.join("timing.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<Timing>(&t).ok())
        .map_or(0.0, |t| t.batch_seconds);

    let refs: Vec<(&HandMesh, &MeshSolid)> = hands.iter().zip(&pairs).map(|(h, (_, s))| (h, &solids[s])).collect();
    let (rows, report) = evaluate(&refs, cfg.train.tau, &cfg.sim, args.seed, runtime)?;

    let out = paths.get(&args.out);
    let mut w = csv::Writer::from_writer(File::create(&out)?);
    for ((path, stem), m) in pairs.iter().zip(&rows) {
        w.serialize(ReportRow {
            file: path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string(),
            object: stem.clone(),
            contact: if m.contact { 1.0 } else { 0.0 },
            penetration_cm3: m.penetration_volume,
            displacement_cm: m.displacement,
            quality_index: m.quality_index,
            entropy: None,
            cluster_size: None,
            runtime_s: None,
        })?;
    }
    w.serialize(ReportRow {
        file: "aggregate".into(),
        object: String::new(),
        contact: report.contact_ratio,
        penetration_cm3: report.penetration_volume,
        displacement_cm: report.grasp_disp,
        quality_index: report.quality_index,
        entropy: Some(report.entropy),
        cluster_size: Some(report.cluster_size),
        runtime_s: Some(report.runtime_s),
    })?;
    w.flush()?;

    if let Some(curve_path) = &args.curve {
        let per: Vec<(f64, f64)> = rows.iter().map(|r| (r.penetration_volume, r.displacement)).collect();
        let curve = high_quality_ratio(&per, &threshold_sweep(args.curve_max, args.curve_steps), args.disp_threshold)?;
        let mut w = csv::Writer::from_writer(File::create(paths.get(curve_path))?);
        for p in curve {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    println!(
        "contact {:.1}%  penetration {:.3} cm3  disp {:.3} cm  entropy {:.3}  cluster {:.3}  Q {:.3} (a = {QUALITY_WEIGHT})",
        report.contact_ratio,
        report.penetration_volume,
        report.grasp_disp,
        report.entropy,
        report.cluster_size,
        report.quality_index
    );
    Ok(())
}

fn cmd_export(paths: &Paths, cmd: &ExportCommand) -> Result<()> {
    match cmd {
        ExportCommand::Dataset { data, out, limit } => {
            let data = load_dataset(&paths.get(data))?;
            let out = paths.get(out);
            std::fs::create_dir_all(out.join("objects"))?;
            std::fs::create_dir_all(out.join("grasps"))?;
            let template = data.template.build();
            let layer = partgrasp::HandLayer::new(&template, partgrasp::DType::F64, &partgrasp::Device::Cpu)?;
            let n = limit.unwrap_or(data.objects.len()).min(data.objects.len());
            let mut counts = vec![0usize; n];
            for (i, o) in data.objects.iter().take(n).enumerate() {
                o.mesh.write_obj(BufWriter::new(File::create(out.join("objects").join(format!("object_{i:03}.obj")))?))?;
            }
            for g in data.grasps.iter().filter(|g| g.object < n) {
                let mesh = partgrasp::hand::forward_with_layer(&g.params, &layer)?;
                let k = counts[g.object];
                counts[g.object] += 1;
                let file = out.join("grasps").join(format!("object_{:03}__{k:03}.obj", g.object));
                mesh.write_obj(BufWriter::new(File::create(file)?))?;
            }
            println!("exported {n} objects and {} grasps to {}", counts.iter().sum::<usize>(), out.display());
        }
        ExportCommand::Usage { run, out } => {
            let model = GraspModel::load(&RunLayout::new(&paths.get(run)).checkpoint(), partgrasp::DType::F32)?;
            write_usage_csv(&model, &paths.get(out))?;
            println!("wrote {}", paths.get(out).display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let paths = Paths { root: cli.data_root };
    match &cli.command {
        Command::Datagen(a) => cmd_datagen(&paths, a),
        Command::Train(a) => cmd_train(&paths, a),
        Command::Sample(a) => cmd_sample(&paths, a),
        Command::Evaluate(a) => cmd_evaluate(&paths, a),
        Command::Export(c) => cmd_export(&paths, c),
    }
}
