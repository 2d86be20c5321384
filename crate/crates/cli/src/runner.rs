//! Layer x learning-rate sweeps, ablation curves and file validation.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use frameprobe::dataset::{split_targets, LayerEmbeddings};
use frameprobe::metrics::{random_baseline, select_best};
use frameprobe::probe::{evaluate_head, train_head, train_probe, TrainConfig};
use frameprobe::recurrent::{train_esn, BiLstmConfig, EsnConfig, LstmParams};
use frameprobe::sidecar::SavedHead;
use frameprobe::store::{layer_from_path, load_manifest, Container, DatasetManifest};
use frameprobe::{Error, HeadKind, Pooling, Result, Split, SweepResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AblationConfig, ExperimentConfig};
use crate::plot::{ablation_plot, emit_plot, sweep_plot};
use crate::report::{AblationRow, AblationTable, MetricName, ReportTable, Transform};

pub const REPORT_FILE: &str = "report.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const LAYER_PLOT_FILE: &str = "layers.svg";
pub const BEST_HEAD_FILE: &str = "best_head.prbh";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io_at(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io_at(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} {} does not exist", path.display())))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io_at(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}

/// Trains one head on one layer and scores it on dev and test.
pub fn train_cell(
    config: &ExperimentConfig,
    manifest: &DatasetManifest,
    emb: &LayerEmbeddings,
    learning_rate: f64,
) -> Result<(SweepResult, SavedHead)> {
    let train = emb.examples(manifest, Split::Train)?;
    let dev = emb.examples(manifest, Split::Dev)?;
    let test = emb.examples(manifest, Split::Test)?;
    let classes = manifest.label_space.num_classes();
    let train_config = TrainConfig {
        learning_rate,
        weight_decay: config.weight_decay,
        epochs: config.epochs,
        batch_size: config.batch_size,
        seed: config.seed,
        pooling: config.head.pooling().unwrap_or(Pooling::TimeAveraged),
    };
    let (head, dev_metric) = match config.head {
        HeadKind::LinearTa | HeadKind::LinearTwa => {
            let (trained, _) = train_probe(&train, &dev, &manifest.label_space, &train_config)?;
            let dev_metric = trained.dev_metric;
            (SavedHead::Probe(trained.head()), dev_metric)
        }
        HeadKind::Esn => {
            let esn = EsnConfig {
                seed: config.seed,
                ..config.esn
            };
            let model = train_esn(&train, classes, &esn)?;
            let dev_metric = evaluate_head(&model, &dev)?;
            (SavedHead::Esn(model), dev_metric)
        }
        HeadKind::Bilstm => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let init = LstmParams::init(&config.bilstm, emb.dim, classes, &mut rng)?;
            let (trained, _) = train_head(init, &train, &dev, &train_config, &mut rng)?;
            (SavedHead::Bilstm(trained.head), trained.dev_metric)
        }
    };
    let test_metric = evaluate_head(&head, &test)?;
    Ok((
        SweepResult {
            layer: emb.layer,
            learning_rate,
            head: config.head,
            dev_metric,
            test_metric,
        },
        head,
    ))
}

#[derive(Serialize)]
struct HashInput<'a> {
    format: &'static str,
    head: HeadKind,
    epochs: usize,
    batch_size: usize,
    weight_decay: f64,
    seed: u64,
    esn: Option<&'a EsnConfig>,
    bilstm: Option<&'a BiLstmConfig>,
    manifest_sha256: &'a str,
}

/// Digest of every setting that can change a cell's result, apart from
/// the layer's embeddings and the learning rate.
pub fn config_hash(config: &ExperimentConfig, manifest_sha256: &str) -> String {
    let input = HashInput {
        format: "frameprobe-cell/1",
        head: config.head,
        epochs: config.epochs,
        batch_size: config.batch_size,
        weight_decay: config.weight_decay,
        seed: config.seed,
        esn: (config.head == HeadKind::Esn).then_some(&config.esn),
        bilstm: (config.head == HeadKind::Bilstm).then_some(&config.bilstm),
        manifest_sha256,
    };
    let json = serde_json::to_string(&input).expect("serializable");
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CachedCell {
    result: SweepResult,
    container_sha256: String,
}

fn cell_stem(layer: u32, lr: f64) -> String {
    format!("layer{layer:02}_lr{lr}")
}

fn load_cached(dir: &Path, layer: u32, lr: f64, container_sha256: &str) -> Option<SweepResult> {
    let stem = cell_stem(layer, lr);
    let text = std::fs::read_to_string(dir.join(format!("{stem}.json"))).ok()?;
    let cell: CachedCell = serde_json::from_str(&text).ok()?;
    let usable = cell.container_sha256 == container_sha256
        && cell.result.layer == layer
        && cell.result.learning_rate.to_bits() == lr.to_bits()
        && dir.join(format!("{stem}.prbh")).is_file();
    usable.then_some(cell.result)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerFile {
    pub layer: u32,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub format: &'static str,
    pub tool_version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub manifest: FileRecord,
    pub containers: Vec<LayerFile>,
    pub cells: usize,
    pub cells_trained: usize,
    pub cells_reused: usize,
    pub best: SweepResult,
    pub random_baseline: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: ReportTable,
    pub cells_trained: usize,
    pub cells_reused: usize,
    pub report_path: PathBuf,
    pub run_manifest_path: PathBuf,
    pub plot_path: PathBuf,
    pub best_head_path: PathBuf,
}

struct Inputs {
    manifest: DatasetManifest,
    manifest_sha256: String,
    layers: Vec<(LayerEmbeddings, LayerFile)>,
}

fn load_inputs(config: &ExperimentConfig) -> Result<Inputs> {
    config.validate()?;
    require_file(&config.manifest, "manifest")?;
    for path in &config.containers {
        require_file(path, "container")?;
    }
    let mut seen = BTreeSet::new();
    for path in &config.containers {
        let layer = layer_from_path(path).ok_or_else(|| {
            Error::Validation(format!("container {} has no layer<N> in its file name", path.display()))
        })?;
        if !seen.insert(layer) {
            return Err(Error::Validation(format!("layer {layer} is listed twice")));
        }
    }
    let manifest = load_manifest(&config.manifest)?;
    manifest.require_splits()?;
    let manifest_sha256 = sha256_file(&config.manifest)?;
    let mut layers = Vec::with_capacity(config.containers.len());
    for path in &config.containers {
        let emb = LayerEmbeddings::load(path)?;
        emb.check_covers(&manifest)?;
        let file = LayerFile {
            layer: emb.layer,
            path: path.clone(),
            sha256: sha256_file(path)?,
        };
        layers.push((emb, file));
    }
    layers.sort_by_key(|(e, _)| e.layer);
    Ok(Inputs {
        manifest,
        manifest_sha256,
        layers,
    })
}

fn pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Random baseline of the test split.
pub fn baseline_for(manifest: &DatasetManifest) -> Result<f64> {
    random_baseline(&manifest.label_space, &split_targets(manifest, Split::Test))
}

/// Trains every (layer, learning rate) cell not already cached, then writes
/// the report, the run manifest, the per-layer plot and the best head.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    let inputs = load_inputs(config)?;
    let hash = config_hash(config, &inputs.manifest_sha256);
    let cache_dir = config.output_dir.join("cache").join(&hash);
    create_dir(&cache_dir)?;

    let lrs = config.effective_learning_rates();
    let cells: Vec<(usize, f64)> = (0..inputs.layers.len())
        .flat_map(|li| lrs.iter().map(move |&lr| (li, lr)))
        .collect();
    let outcomes: Vec<Result<(SweepResult, bool)>> = pool(config)?.install(|| {
        cells
            .par_iter()
            .map(|&(li, lr)| {
                let (emb, file) = &inputs.layers[li];
                if let Some(r) = load_cached(&cache_dir, emb.layer, lr, &file.sha256) {
                    return Ok((r, false));
                }
                let (result, head) = train_cell(config, &inputs.manifest, emb, lr)?;
                let stem = cell_stem(emb.layer, lr);
                head.save(&cache_dir.join(format!("{stem}.prbh")))?;
                let cached = CachedCell {
                    result,
                    container_sha256: file.sha256.clone(),
                };
                write_json(&cached, &cache_dir.join(format!("{stem}.json")))?;
                Ok((result, true))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(cells.len());
    let mut trained = 0;
    for o in outcomes {
        let (r, fresh) = o?;
        trained += usize::from(fresh);
        rows.push(r);
    }
    let best_row = select_best(&rows)?;
    let best = rows.iter().position(|r| *r == best_row).expect("selected from rows");
    let table = ReportTable {
        metric: MetricName::for_task(inputs.manifest.label_space.task_kind),
        rows,
        best,
        baseline: baseline_for(&inputs.manifest)?,
    };

    let out = &config.output_dir;
    let report_path = out.join(REPORT_FILE);
    table.write(&report_path)?;
    let best_head_path = out.join(BEST_HEAD_FILE);
    let cached_head = cache_dir.join(format!("{}.prbh", cell_stem(best_row.layer, best_row.learning_rate)));
    std::fs::copy(&cached_head, &best_head_path).map_err(|e| Error::io_at(&cached_head, e))?;
    let plot_path = out.join(LAYER_PLOT_FILE);
    let (spec, series) = sweep_plot(&table, &format!("{} on {}", config.head, inputs.manifest.dataset_name));
    emit_plot(&spec, &series, &plot_path)?;
    let run = RunManifest {
        format: "frameprobe-run/1",
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config_hash: hash,
        config: config.clone(),
        manifest: FileRecord {
            path: config.manifest.clone(),
            sha256: inputs.manifest_sha256.clone(),
        },
        containers: inputs.layers.iter().map(|(_, f)| f.clone()).collect(),
        cells: table.rows.len(),
        cells_trained: trained,
        cells_reused: table.rows.len() - trained,
        best: best_row,
        random_baseline: table.baseline,
    };
    let run_manifest_path = out.join(RUN_MANIFEST_FILE);
    write_json(&run, &run_manifest_path)?;
    Ok(SweepOutcome {
        cells_reused: table.rows.len() - trained,
        table,
        cells_trained: trained,
        report_path,
        run_manifest_path,
        plot_path,
        best_head_path,
    })
}

pub fn format_level(level: f64) -> String {
    format!("{level}")
}

/// Expands the `{kind}`, `{level}` and `{layer}` placeholders; the layer
/// is zero-padded to two digits.
pub fn ablation_container(template: &str, transform: Transform, level: f64, layer: u32) -> PathBuf {
    PathBuf::from(
        template
            .replace("{kind}", transform.as_str())
            .replace("{level}", &format_level(level))
            .replace("{layer}", &format!("{layer:02}")),
    )
}

fn missing_ablation_error(ab: &AblationConfig, transform: Transform, missing: &[(f64, PathBuf)]) -> Error {
    let audio = ab
        .audio_dir
        .as_ref()
        .map_or("<audio_dir>".to_string(), |p| p.display().to_string());
    let model = ab.model.clone().unwrap_or_else(|| "<model>".into());
    let mut msg = format!("missing ablated embeddings for {} at layer {}:", transform.as_str(), ab.layer);
    for (level, path) in missing {
        let dir = path.parent().unwrap_or(Path::new(".")).display().to_string();
        let augment = match transform {
            Transform::Noise => format!(
                "--snr {} --noise-dir {}",
                format_level(*level),
                ab.noise_dir
                    .as_ref()
                    .map_or("<noise_dir>".to_string(), |p| p.display().to_string())
            ),
            Transform::Pitch => format!("--pitch {}", format_level(*level)),
        };
        msg.push_str(&format!(
            "\n  {}: expected {}\n    create it with:\n      frameprobe augment --input {audio} --out {dir}/audio {augment}\n      extract --model {model} --layers {} --out {dir} {dir}/audio",
            format_level(*level),
            path.display(),
            ab.layer
        ));
    }
    Error::Validation(msg)
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub table: AblationTable,
    pub report_path: PathBuf,
    pub plot_path: PathBuf,
}

/// One metric per ablation level at the configured layer. Each level gets
/// the full learning-rate grid; the rate with the best dev metric is kept.
pub fn run_ablation(config: &ExperimentConfig, transform: Transform, levels: Option<Vec<f64>>) -> Result<AblationOutcome> {
    config.validate()?;
    let ab = config
        .ablation
        .as_ref()
        .ok_or_else(|| Error::Validation("config has no [ablation] table".into()))?;
    let levels = levels.unwrap_or_else(|| match transform {
        Transform::Noise => ab.noise_snr_db.clone(),
        Transform::Pitch => ab.pitch_factors.clone(),
    });
    if levels.is_empty() {
        return Err(Error::Validation("no ablation levels given".into()));
    }
    if transform == Transform::Pitch && levels.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::Validation("pitch factors must lie in (0, 1]".into()));
    }
    require_file(&config.manifest, "manifest")?;
    let paths: Vec<(f64, PathBuf)> = levels
        .iter()
        .map(|&l| (l, ablation_container(&ab.containers, transform, l, ab.layer)))
        .collect();
    let missing: Vec<(f64, PathBuf)> = paths.iter().filter(|(_, p)| !p.is_file()).cloned().collect();
    if !missing.is_empty() {
        return Err(missing_ablation_error(ab, transform, &missing));
    }
    let manifest = load_manifest(&config.manifest)?;
    manifest.require_splits()?;
    let mut embeddings = Vec::with_capacity(paths.len());
    for (_, path) in &paths {
        let mut emb = LayerEmbeddings::from_sequences(ab.layer, Container::load(path)?.sequences)?;
        emb.layer = ab.layer;
        emb.check_covers(&manifest)?;
        embeddings.push(emb);
    }
    let lrs = config.effective_learning_rates();
    let cells: Vec<(usize, f64)> = (0..levels.len())
        .flat_map(|i| lrs.iter().map(move |&lr| (i, lr)))
        .collect();
    let results: Vec<Result<SweepResult>> = pool(config)?.install(|| {
        cells
            .par_iter()
            .map(|&(i, lr)| train_cell(config, &manifest, &embeddings[i], lr).map(|(r, _)| r))
            .collect()
    });
    let results: Vec<SweepResult> = results.into_iter().collect::<Result<_>>()?;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let best = select_best(&results[i * lrs.len()..(i + 1) * lrs.len()])?;
            Ok(AblationRow {
                level,
                learning_rate: best.learning_rate,
                dev_metric: best.dev_metric,
                test_metric: best.test_metric,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = AblationTable {
        metric: MetricName::for_task(manifest.label_space.task_kind),
        transform,
        layer: ab.layer,
        head: config.head,
        rows,
        baseline: baseline_for(&manifest)?,
    };
    create_dir(&config.output_dir)?;
    let report_path = config.output_dir.join(format!("ablation_{}.csv", transform.as_str()));
    table.write(&report_path)?;
    let plot_path = config.output_dir.join(format!("ablation_{}.svg", transform.as_str()));
    let (spec, series) = ablation_plot(
        &table,
        &format!("{} with {} (layer {})", manifest.dataset_name, transform.as_str(), ab.layer),
    );
    emit_plot(&spec, &series, &plot_path)?;
    Ok(AblationOutcome {
        table,
        report_path,
        plot_path,
    })
}

/// Checks a manifest and any number of containers, alone and against each
/// other. Returns one human-readable line per file.
pub fn validate_files(manifest: Option<&Path>, containers: &[PathBuf]) -> Result<Vec<String>> {
    if manifest.is_none() && containers.is_empty() {
        return Err(Error::InvalidArgument("nothing to validate".into()));
    }
    let mut lines = Vec::new();
    let manifest = match manifest {
        Some(path) => {
            let m = load_manifest(path)?;
            let counts = m.split_counts();
            lines.push(format!(
                "{}: {} records, {} labels ({:?}), split {}",
                path.display(),
                counts.total(),
                m.label_space.num_classes(),
                m.label_space.task_kind,
                counts.ratio()
            ));
            Some(m)
        }
        None => None,
    };
    let mut dim = None;
    for path in containers {
        let c = Container::load(path)?;
        let layer = layer_from_path(path).unwrap_or(0);
        let emb = LayerEmbeddings::from_sequences(layer, c.sequences)?;
        if let Some(m) = &manifest {
            emb.check_covers(m)?;
        }
        if !emb.is_empty() {
            match dim {
                None => dim = Some(emb.dim),
                Some(d) if d != emb.dim => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: emb.dim,
                    })
                }
                Some(_) => {}
            }
        }
        lines.push(format!(
            "{}: layer {}, {} sequences, dim {}, stride {} ms",
            path.display(),
            layer,
            emb.len(),
            c.header.dim,
            c.header.frame_stride_us as f64 / 1000.0
        ));
    }
    Ok(lines)
}

/// Metric of a saved head on one split.
pub fn evaluate_saved(head: &SavedHead, manifest: &DatasetManifest, emb: &LayerEmbeddings, split: Split) -> Result<f64> {
    if !emb.is_empty() && emb.dim != head.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: head.input_dim(),
            found: emb.dim,
        });
    }
    evaluate_head(head, &emb.examples(manifest, split)?)
}
