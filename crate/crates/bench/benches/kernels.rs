use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracxy_bench::{half_vortex_pair, ring_measure};
use fracxy_core::{energy_fn_eps, flat_norm, gradient_fn_eps, relax, PotentialSpec, RelaxationConfig};

fn energy(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy_fn_eps");
    for k in [32u32, 64, 128] {
        let eps = 1.0 / k as f64;
        let phi = half_vortex_pair(eps);
        let spec = PotentialSpec::new(2, eps).unwrap();
        let whole = phi.domain().whole();
        g.bench_with_input(BenchmarkId::from_parameter(k), &phi, |b, phi| b.iter(|| energy_fn_eps(phi, &spec, &whole)));
    }
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient_fn_eps");
    for k in [32u32, 64, 128] {
        let eps = 1.0 / k as f64;
        let phi = half_vortex_pair(eps);
        let spec = PotentialSpec::new(2, eps).unwrap();
        let frozen = phi.domain().boundary_mask().to_vec();
        g.bench_with_input(BenchmarkId::from_parameter(k), &phi, |b, phi| b.iter(|| gradient_fn_eps(phi, &spec, &frozen)));
    }
    g.finish();
}

fn relaxation(c: &mut Criterion) {
    let mut g = c.benchmark_group("relax");
    g.sample_size(10);
    let eps = 1.0 / 16.0;
    let phi = half_vortex_pair(eps);
    let spec = PotentialSpec::new(2, eps).unwrap();
    let frozen = phi.domain().boundary_mask().to_vec();
    let cfg = RelaxationConfig { max_iters: 200, ..RelaxationConfig::default() };
    g.bench_function("pair_16", |b| b.iter(|| relax(&phi, &spec, &frozen, &cfg).unwrap()));
    g.finish();
}

fn flat(c: &mut Criterion) {
    let mut g = c.benchmark_group("flat_norm");
    for k in [4usize, 8, 16] {
        let mu = ring_measure(k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &mu, |b, mu| b.iter(|| flat_norm(mu).unwrap()));
    }
    g.finish();
}

criterion_group!(kernels, energy, gradient, relaxation, flat);
criterion_main!(kernels);
