use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frameprobe::audio::WindowingConfig;
use frameprobe::dataset::LayerEmbeddings;
use frameprobe::sidecar::SavedHead;
use frameprobe::store::load_manifest;
use frameprobe::synth::{generate, SynthConfig, SynthKind};
use frameprobe::{Error, HeadKind, Result, Split};
use frameprobe_cli::commands::{augment, segment, Augmentation};
use frameprobe_cli::plot::{ablation_plot, emit_plot, sweep_plot};
use frameprobe_cli::report::{AnyReport, Transform};
use frameprobe_cli::runner::{baseline_for, evaluate_saved, run_ablation, run_sweep, validate_files};
use frameprobe_cli::{exit_code, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "frameprobe", version, about = "Probe frozen speech-encoder embeddings layer by layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML)
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    head: Option<HeadKind>,
    /// Comma-separated learning-rate grid
    #[arg(long, value_delimiter = ',')]
    lr: Option<Vec<f64>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per physical core)
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            output_dir: self.output.clone(),
            head: self.head,
            learning_rates: self.lr.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            workers: self.workers,
        });
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every (layer, learning rate) cell and report the best
    Sweep(ConfigArgs),
    /// Metric curve over noise or pitch ablation levels at one layer
    Ablate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        transform: Transform,
        /// Comma-separated levels (SNR dB or pitch factors); defaults from config
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Option<Vec<f64>>,
    },
    /// Score a saved head on one split of a layer's embeddings
    Evaluate {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        container: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Random baseline of a manifest's test split
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render a report CSV as an SVG line chart
    Plot {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Check a manifest and embedding containers
    Validate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        containers: Vec<PathBuf>,
    },
    /// Write a seeded synthetic dataset (manifest + containers)
    Synth {
        #[arg(long, default_value = "separable")]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        examples: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        /// Comma-separated layer indices
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<u32>>,
        /// Class signal strength at the last layer
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Add noise at an SNR or lower the pitch of WAV files
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "pitch")]
        snr: Option<f64>,
        #[arg(long)]
        noise_dir: Option<PathBuf>,
        #[arg(long)]
        pitch: Option<f64>,
        #[arg(long, default_value_t = 16_000)]
        rate: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cut an annotated long recording into labeled windows
    Segment {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        window: f64,
        #[arg(long)]
        hop: f64,
        #[arg(long, default_value_t = 0.5)]
        min_overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let out = run_sweep(&cfg)?;
            let best = out.table.best_row();
            println!(
                "{} cells ({} trained, {} reused); best layer {} lr {} dev {} test {}; random {}",
                out.table.rows.len(),
                out.cells_trained,
                out.cells_reused,
                best.layer,
                best.learning_rate,
                best.dev_metric,
                best.test_metric,
                out.table.baseline
            );
            println!("report: {}", out.report_path.display());
        }
        Command::Ablate {
            config,
            transform,
            levels,
        } => {
            let cfg = config.load()?;
            let out = run_ablation(&cfg, transform, levels)?;
            for r in &out.table.rows {
                println!("{} {}: test {}", transform.as_str(), r.level, r.test_metric);
            }
            println!("report: {}", out.report_path.display());
        }
        Command::Evaluate {
            head,
            manifest,
            container,
            split,
        } => {
            let head = SavedHead::load(&head)?;
            let manifest = load_manifest(&manifest)?;
            let emb = LayerEmbeddings::load(&container)?;
            let metric = evaluate_saved(&head, &manifest, &emb, parse_split(&split)?)?;
            println!("{metric}");
        }
        Command::Baseline { manifest } => {
            println!("{}", baseline_for(&load_manifest(&manifest)?)?);
        }
        Command::Plot { report, out, title } => {
            let title = title.unwrap_or_else(|| {
                report
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let (spec, series) = match AnyReport::read(&report)? {
                AnyReport::Sweep(t) => sweep_plot(&t, &title),
                AnyReport::Ablation(t) => ablation_plot(&t, &title),
            };
            emit_plot(&spec, &series, &out)?;
        }
        Command::Validate {
            manifest,
            containers,
        } => {
            for line in validate_files(manifest.as_deref(), &containers)? {
                println!("ok {line}");
            }
        }
        Command::Synth {
            kind,
            out,
            seed,
            examples,
            dim,
            frames,
            layers,
            separation,
        } => {
            let mut cfg = match kind {
                SynthKind::Separable => SynthConfig::separable(seed),
                SynthKind::Needle => SynthConfig::needle(seed),
                SynthKind::Multilabel => SynthConfig::multilabel(seed),
            };
            cfg.examples = examples.unwrap_or(cfg.examples);
            cfg.dim = dim.unwrap_or(cfg.dim);
            cfg.frames = frames.unwrap_or(cfg.frames);
            cfg.layers = layers.unwrap_or(cfg.layers);
            cfg.separation = separation.unwrap_or(cfg.separation);
            let written = generate(&cfg)?.write(&out)?;
            println!("{}", written.manifest.display());
            for c in written.containers {
                println!("{}", c.display());
            }
        }
        Command::Augment {
            input,
            out,
            snr,
            noise_dir,
            pitch,
            rate,
            seed,
        } => {
            let aug = match (snr, pitch) {
                (Some(snr_db), None) => Augmentation::Noise { snr_db },
                (None, Some(factor)) => Augmentation::Pitch { factor },
                _ => return Err(Error::InvalidArgument("give exactly one of --snr or --pitch".into())),
            };
            let log = augment(&input, &out, aug, noise_dir.as_deref(), rate, seed)?;
            println!("{} files written to {}", log.len(), out.display());
        }
        Command::Segment {
            wav,
            annotations,
            window,
            hop,
            min_overlap,
            out,
        } => {
            let cfg = WindowingConfig {
                window_s: window,
                hop_s: hop,
                min_overlap_fraction: min_overlap,
            };
            let recs = segment(&wav, &annotations, &cfg, &out)?;
            println!("{} windows written to {}", recs.len(), Path::new(&out).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
