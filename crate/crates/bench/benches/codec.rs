use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use calibcodec::calibration::{detect_boundary, encode_block};
use calibcodec::codec::{EntropyParams, FrameCodec};
use calibcodec::entropy_tables::build_tables;
use calibcodec::latent_source::generate;
use calibcodec::pgc::{self, PgcConfig};
use calibcodec::range_coder::{decode_sequence, encode_sequence};
use calibcodec::rng::Philox;
use calibcodec::{Dims, Epsilon, Profile, QuantIndex, SigmaGrid, SkipConfig, SymbolAlphabet};

fn codec() -> FrameCodec {
    FrameCodec::new(SigmaGrid::default(), SymbolAlphabet::default()).unwrap()
}

fn tables(c: &mut Criterion) {
    let grid = SigmaGrid::default();
    c.bench_function("build_tables", |b| {
        b.iter(|| build_tables(black_box(&grid), SymbolAlphabet::default()).unwrap())
    });
}

fn range_coder(c: &mut Criterion) {
    let codec = codec();
    let t = codec.tables();
    let rng = Philox::new(1);
    let n = 100_000u64;
    let levels: Vec<QuantIndex> = (0..n).map(|i| QuantIndex((rng.uniform(i, 0) * 32.0) as u8)).collect();
    let syms: Vec<u16> = (0..n)
        .map(|i| {
            let theta = codec.grid().lut_theta(levels[i as usize]);
            let r = (rng.normal(i, 1) * theta).round().clamp(-32.0, 32.0) as i32;
            t.alphabet().symbol_of(r).unwrap()
        })
        .collect();
    let stream = encode_sequence(&syms, &levels, t).unwrap();

    let mut g = c.benchmark_group("range_coder");
    g.throughput(Throughput::Elements(n));
    g.bench_function("encode", |b| {
        b.iter(|| encode_sequence(black_box(&syms), &levels, t).unwrap())
    });
    g.bench_function("decode", |b| {
        b.iter(|| decode_sequence(black_box(&stream), syms.len(), &levels, t).unwrap())
    });
    g.finish();
}

fn calibration(c: &mut Criterion) {
    let codec = codec();
    let dims = Dims::new(192, 48, 80).unwrap();
    let frame = generate(2, dims, &Profile::default()).unwrap();
    let index = EntropyParams::from_frame(&frame, codec.grid()).unwrap().index;

    let mut g = c.benchmark_group("detect_boundary");
    g.throughput(Throughput::Elements(dims.len() as u64));
    for e in [1e-4f32, 1e-2] {
        let eps = Epsilon::new(e).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(e), &eps, |b, &eps| {
            b.iter(|| encode_block(&detect_boundary(black_box(&index), dims, eps, codec.grid()).unwrap()))
        });
    }
    g.finish();

    let small = &index[..48 * 80];
    let mut g = c.benchmark_group("pgc");
    g.throughput(Throughput::Elements(small.len() as u64));
    g.bench_function("loss", |b| {
        b.iter(|| pgc::pgc_loss(black_box(small), &PgcConfig::default()))
    });
    g.bench_function("rectify_200", |b| {
        b.iter(|| pgc::rectify(black_box(small), &PgcConfig::default(), 200, 0.05, 31.0).unwrap())
    });
    g.finish();
}

fn frame(c: &mut Criterion) {
    let codec = codec();
    let dims = Dims::new(192, 48, 80).unwrap();
    let frame = generate(3, dims, &Profile::default()).unwrap();
    let params = EntropyParams::from_frame(&frame, codec.grid()).unwrap();
    let eps = Some(Epsilon::new(1e-4).unwrap());
    let (coded, _) = codec.encode(&frame.y, &params, eps, SkipConfig::NONE).unwrap();

    let mut g = c.benchmark_group("frame_192x48x80");
    g.sample_size(10);
    g.throughput(Throughput::Elements(dims.len() as u64));
    g.bench_function("encode", |b| {
        b.iter(|| {
            codec
                .encode(black_box(&frame.y), &params, eps, SkipConfig::NONE)
                .unwrap()
        })
    });
    g.bench_function("decode", |b| {
        b.iter(|| codec.decode(black_box(&coded), &params).unwrap())
    });
    g.finish();
}

criterion_group!(benches, tables, range_coder, calibration, frame);
criterion_main!(benches);
