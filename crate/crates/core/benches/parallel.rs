use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use approx_mlp::datapath::{run_dataset, NetworkModel};
use approx_mlp::dataset::{Example, FeatureVector};
use approx_mlp::error_metrics::summarize_all;
use approx_mlp::fixedpoint::SignMag8;
use approx_mlp::mac_neuron::NeuronParams;
use approx_mlp::sweep::run_sweep;
use approx_mlp::{Execution, MultConfig};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn weight(rng: &mut impl Rng) -> SignMag8 {
    SignMag8::encode(rng.random_range(-127..=127)).unwrap()
}

fn synthetic_model(rng: &mut impl Rng) -> NetworkModel {
    let mut layer = |n: usize, fan_in: usize, act_shift: u8| -> Vec<NeuronParams> {
        (0..n)
            .map(|_| NeuronParams {
                weights: (0..fan_in).map(|_| weight(rng)).collect(),
                bias: weight(rng),
                bias_shift: 6,
                act_shift,
            })
            .collect()
    };
    let hidden = layer(30, 62, 9);
    let output = layer(10, 30, 0);
    NetworkModel {
        feature_indices: (0..62).collect(),
        hidden,
        output,
    }
}

fn synthetic_images(rng: &mut impl Rng, n: usize) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let mut fv = FeatureVector::zeros();
            for v in fv.0.iter_mut() {
                *v = SignMag8::positive(rng.random_range(0..=127));
            }
            Example {
                features: fv,
                label: rng.random_range(0..10),
            }
        })
        .collect()
}

fn bench_metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("error_metrics");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| summarize_all(black_box(exec))));
    }
    g.finish();
}

fn bench_inference(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = synthetic_model(&mut rng);
    let images = synthetic_images(&mut rng, 2000);
    let mut g = c.benchmark_group("run_dataset_2000");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_dataset(&model, black_box(&images), MultConfig::MOST_APPROXIMATE, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = synthetic_model(&mut rng);
    let images = synthetic_images(&mut rng, 500);
    let mut g = c.benchmark_group("sweep_500");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep(&model, black_box(&images), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_metrics, bench_inference, bench_sweep);
criterion_main!(benches);
