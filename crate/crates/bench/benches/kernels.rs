use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::{dvector, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use ccmaes::dmp_env::Dmp;
use ccmaes::optimizer::{
    compute_advantages, default_hyperparameters, fit_baseline, recombination_weights,
    update_distribution, GenerationBatch,
};
use ccmaes::surrogate::{kernel_width, rank_costs, train_ranking_svm, ContextStats};
use ccmaes::{FeatureMap, SearchDistribution};

fn sorted_sphere_batch(
    dist: &SearchDistribution,
    lambda: usize,
    rng: &mut ChaCha12Rng,
) -> GenerationBatch {
    let mut batch = GenerationBatch::new();
    for _ in 0..lambda {
        let s = dvector![rng.gen_range(1.0..2.0)];
        let theta = dist
            .sample_parameters(&FeatureMap::Identity.apply(&s), rng)
            .unwrap();
        let ret = -theta.norm_squared();
        batch.push_real(s, theta, ret);
    }
    let baseline = fit_baseline(&batch, FeatureMap::Quadratic, 1e-8).unwrap();
    compute_advantages(&mut batch, &baseline).unwrap();
    batch.sort_by_advantage();
    batch
}

fn bench_distribution_update(c: &mut Criterion) {
    let lambda = 50;
    let n = 20;
    let weights = recombination_weights(lambda, lambda / 2).unwrap();
    let hyper = default_hyperparameters(lambda, n, 1, &weights).unwrap();
    let dist = SearchDistribution::new(FeatureMap::Identity, 1, n, 1.0).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let batch = sorted_sphere_batch(&dist, lambda, &mut rng);
    c.bench_function("distribution_update_lambda50_n20", |b| {
        b.iter(|| update_distribution(black_box(&dist), &batch, &hyper, FeatureMap::Identity))
    });
}

fn bench_ranking_svm(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let mut values: Vec<f64> = (0..200).map(|_| rng.gen_range(-3.0..3.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let features: Vec<DVector<f64>> = values
        .iter()
        .map(|&v| dvector![v, v * v + rng.gen_range(-0.1..0.1)])
        .collect();
    let width = kernel_width(&features).unwrap();
    let costs = rank_costs(features.len(), 1.0).unwrap();
    c.bench_function("ranking_svm_train_n200_iter100", |b| {
        b.iter(|| {
            train_ranking_svm(
                black_box(features.clone()),
                &costs,
                width,
                100,
                ContextStats::identity(0),
            )
        })
    });
}

fn bench_dmp_rollout(c: &mut Criterion) {
    let dmp = Dmp::default();
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let weights: Vec<f64> = (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect();
    c.bench_function("dmp_rollout_101_steps", |b| {
        b.iter(|| dmp.rollout(black_box(&weights)))
    });
}

criterion_group!(
    benches,
    bench_distribution_update,
    bench_ranking_svm,
    bench_dmp_rollout
);
criterion_main!(benches);
