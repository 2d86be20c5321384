use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frameprobe::audio::{pitch_shift_rate, resample, AudioBuffer};
use frameprobe::head::{SequenceHead, Target};
use frameprobe::metrics::average_precision;
use frameprobe::probe::ProbeHead;
use frameprobe::recurrent::{esn_init, esn_states, BiLstmConfig, EsnConfig, LstmParams};
use frameprobe::store::{read_container, write_container, FrameEmbeddingSequence};
use frameprobe::Pooling;
use frameprobe_bench::{random_frames, random_scores};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pooling_heads(c: &mut Criterion) {
    let frames = random_frames(50, 1024, 1);
    let mut group = c.benchmark_group("probe_step");
    for pooling in [Pooling::TimeAveraged, Pooling::TimeWeighted] {
        let head = ProbeHead::init(pooling, 10, 1024, &mut ChaCha8Rng::seed_from_u64(2));
        let mut grads = head.zero_gradients();
        group.bench_function(BenchmarkId::from_parameter(pooling.short_name()), |b| {
            b.iter(|| head.accumulate_gradients(black_box(frames.view()), &Target::Class(3), &mut grads))
        });
    }
    group.finish();
}

fn bilstm(c: &mut Criterion) {
    let frames = random_frames(50, 64, 3);
    let cfg = BiLstmConfig {
        hidden_size: 32,
        num_layers: 2,
        ..Default::default()
    };
    let head = LstmParams::init(&cfg, 64, 10, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let mut grads = head.zero_gradients();
    c.bench_function("bilstm_bptt_t50_h32", |b| {
        b.iter(|| head.accumulate_gradients(black_box(frames.view()), &Target::Class(1), &mut grads))
    });
}

fn esn(c: &mut Criterion) {
    let frames = random_frames(50, 256, 5);
    let reservoir = esn_init(
        &EsnConfig {
            reservoir_size: 512,
            ..Default::default()
        },
        256,
    )
    .unwrap();
    c.bench_function("esn_states_t50_n512", |b| b.iter(|| esn_states(black_box(frames.view()), &reservoir)));
}

fn metrics(c: &mut Criterion) {
    let (scores, positives) = random_scores(10_000, 6);
    c.bench_function("average_precision_10k", |b| {
        b.iter(|| average_precision(black_box(&scores), black_box(&positives)))
    });
}

fn audio(c: &mut Criterion) {
    let tone = AudioBuffer::tone(1000.0, 0.5, 1.0, 44_100);
    c.bench_function("resample_44k1_to_16k_1s", |b| b.iter(|| resample(black_box(&tone), 16_000)));
    let tone16 = AudioBuffer::tone(1000.0, 0.5, 1.0, 16_000);
    c.bench_function("pitch_shift_half_1s", |b| b.iter(|| pitch_shift_rate(black_box(&tone16), 0.5)));
}

fn container(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("layer07.prbe");
    let seqs: Vec<FrameEmbeddingSequence> = (0..100)
        .map(|i| FrameEmbeddingSequence::new(format!("ex{i}"), 7, random_frames(50, 1024, i), 20.0).unwrap())
        .collect();
    write_container(&seqs, &path).unwrap();
    c.bench_function("read_container_100x50x1024", |b| b.iter(|| read_container(black_box(&path))));
}

criterion_group!(benches, pooling_heads, bilstm, esn, metrics, audio, container);
criterion_main!(benches);
