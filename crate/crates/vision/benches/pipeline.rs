use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swarm_core::{Exec, GridPosition};
use swarm_vision::*;

fn scene() -> SceneSpec {
    let mut s = synthetic_sequence(&SequenceConfig { frames: 1, ..Default::default() }, 11).remove(0);
    s.swarm = Some(Disk { center: GridPosition::new(150.0, 150.0), diameter_um: 120.0 });
    s
}

fn render_and_compress(c: &mut Criterion) {
    let s = scene();
    let hi = render_frame(&s, 1, Exec::Parallel);
    let mut g = c.benchmark_group("frame");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let name = format!("{exec:?}");
        g.bench_with_input(BenchmarkId::new("render", &name), &exec, |b, &e| b.iter(|| render_frame(&s, 1, e)));
        g.bench_with_input(BenchmarkId::new("compress", &name), &exec, |b, &e| b.iter(|| compress(&hi, e)));
    }
    g.finish();
}

/// compress + threshold + blur + track, one frame per iteration.
fn tracking_chain(c: &mut Criterion) {
    let s = scene();
    let frames: Vec<FrameHi> = (0..4).map(|i| render_frame(&s, i, Exec::Parallel)).collect();
    let first = compress(&frames[0], Exec::Parallel);
    let t = otsu_threshold([&first]);
    let cfg = PipelineConfig::default();
    let (p, d) = detect(&first, t, &cfg).expect("swarm visible");
    let mut g = c.benchmark_group("chain");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::new("compress_threshold_blur_track", format!("{exec:?}")), &exec, |b, &e| {
            let mut ts = TrackerState::init(&first, p, d, &cfg.tracker);
            let mut i = 0;
            b.iter(|| {
                let lo = compress(&frames[i % frames.len()], e);
                let bin = blur(&threshold(&lo, t), cfg.blur);
                ts = track(&ts, &lo);
                i += 1;
                (bin, ts.confidence)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, render_and_compress, tracking_chain);
criterion_main!(benches);
