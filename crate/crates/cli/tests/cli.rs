use std::path::Path;
use std::process::{Command, Output};

use frameprobe::store::{write_container, DatasetManifest, ExampleRecord, FrameEmbeddingSequence, LabelSpace, Split, TaskKind};
use ndarray::Array2;

fn frameprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frameprobe")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_validate_sweep_plot_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = frameprobe(&["synth", "--kind", "separable", "--out", s(&data), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let m = data.join("manifest.jsonl");
    let l0 = data.join("layer00.prbe");
    let l1 = data.join("layer01.prbe");
    let out = frameprobe(&["validate", "--manifest", s(&m), s(&l0), s(&l1)]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("split 6:2:2"), "{stdout}");
    assert_eq!(stdout.lines().count(), 3);

    let config = tmp.path().join("exp.toml");
    std::fs::write(
        &config,
        "manifest = \"data/manifest.jsonl\"\ncontainers = [\"data/layer00.prbe\", \"data/layer01.prbe\"]\nepochs = 3\nbatch_size = 8\n",
    )
    .unwrap();
    let run = tmp.path().join("run");
    let out = frameprobe(&["sweep", "--config", s(&config), "--output", s(&run), "--lr", "0.001,0.01", "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(run.join("report.csv")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("cell,")).count(), 4);

    let svg = tmp.path().join("fig.svg");
    let out = frameprobe(&["plot", s(&run.join("report.csv")), "--out", s(&svg)]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let best = run.join("best_head.prbh");
    let out = frameprobe(&["evaluate", "--head", s(&best), "--manifest", s(&m), "--container", s(&l1)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metric: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&metric));

    let out = frameprobe(&["baseline", "--manifest", s(&m)]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.5");
}

#[test]
fn invalid_inputs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("layer00.prbe");
    std::fs::write(&bad, b"PRBE\x01\x00\x00\x00junk").unwrap();
    let out = frameprobe(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let config = tmp.path().join("exp.toml");
    std::fs::write(&config, "manifest = \"m.jsonl\"\ncontainers = [\"layer03.prbe\"]\n").unwrap();
    let out = frameprobe(&["sweep", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let space = LabelSpace {
        task_kind: TaskKind::SingleLabelClassification,
        label_names: vec!["a".into(), "b".into()],
    };
    let splits = [Split::Train, Split::Train, Split::Dev, Split::Dev, Split::Test, Split::Test];
    let records = splits
        .iter()
        .enumerate()
        .map(|(i, &split)| ExampleRecord {
            example_id: format!("e{i}"),
            labels: vec![i % 2],
            split,
            duration_s: 0.04,
        })
        .collect();
    DatasetManifest::new("blowup", space, records)
        .unwrap()
        .write(&tmp.path().join("m.jsonl"))
        .unwrap();
    let seqs: Vec<FrameEmbeddingSequence> = (0..6)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            FrameEmbeddingSequence::new(format!("e{i}"), 0, Array2::from_elem((2, 3), sign * 1e30f32), 20.0).unwrap()
        })
        .collect();
    write_container(&seqs, &tmp.path().join("layer00.prbe")).unwrap();
    let config = tmp.path().join("exp.toml");
    std::fs::write(
        &config,
        "manifest = \"m.jsonl\"\ncontainers = [\"layer00.prbe\"]\nlearning_rates = [1e300]\nepochs = 5\nbatch_size = 1\n",
    )
    .unwrap();
    let out = frameprobe(&["sweep", "--config", s(&config), "--workers", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn augment_and_segment_subcommands() {
    use frameprobe::audio::{save_wav, AudioBuffer};
    let tmp = tempfile::tempdir().unwrap();
    let audio = tmp.path().join("audio");
    std::fs::create_dir(&audio).unwrap();
    save_wav(&AudioBuffer::tone(1000.0, 0.4, 0.5, 16_000), &audio.join("a.wav")).unwrap();
    let out_dir = tmp.path().join("pitch");
    let out = frameprobe(&["augment", "--input", s(&audio), "--out", s(&out_dir), "--pitch", "0.25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("a.wav").is_file());

    let noise = tmp.path().join("noise");
    std::fs::create_dir(&noise).unwrap();
    save_wav(&AudioBuffer::tone(2500.0, 0.2, 0.2, 8000), &noise.join("hum.wav")).unwrap();
    let noisy = tmp.path().join("noisy");
    let out = frameprobe(&[
        "augment", "--input", s(&audio), "--out", s(&noisy), "--snr", "-10", "--noise-dir", s(&noise),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = frameprobe(&["augment", "--input", s(&audio), "--out", s(&noisy)]);
    assert_eq!(out.status.code(), Some(2));

    let ann = tmp.path().join("a.txt");
    std::fs::write(&ann, "0.1 0.3 2\n").unwrap();
    let seg = tmp.path().join("seg");
    let out = frameprobe(&[
        "segment", "--wav", s(&audio.join("a.wav")), "--annotations", s(&ann), "--window", "0.2", "--hop", "0.1",
        "--out", s(&seg),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(seg.join("segments.jsonl")).unwrap().lines().count(), 4);
}
