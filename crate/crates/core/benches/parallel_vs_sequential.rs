use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracop::atoms::{build_atom, AtomSpec};
use fracop::exactlin::FamilySpec;
use fracop::kernelops::KernelParams;
use fracop::oplab::{apply_tr, lq_norm_tr, NormOptions};
use fracop::quadrature::QuadOptions;
use fracop::Exec;

fn batch_apply(c: &mut Criterion) {
    let params = KernelParams::new(FamilySpec::canonical(&[1, 1]), 0.5).unwrap();
    let atom = build_atom(&AtomSpec::new(2, 1.0, vec![0.0, 0.0], 1.0, 1).unwrap()).unwrap();
    let xs: Vec<Vec<f64>> = (0..64)
        .map(|i| {
            let a = i as f64 * 0.37;
            vec![2.0 * a.cos(), 1.5 * a.sin()]
        })
        .collect();
    let opts = QuadOptions::rel(0.0).with_l1_rel_tol(1e-6);
    let mut group = c.benchmark_group("apply_tr_64_points");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| exec.map(&xs, |x| apply_tr(&params, &atom, x, &opts).unwrap().value))
        });
    }
    group.finish();
}

fn norm_estimate(c: &mut Criterion) {
    let params = KernelParams::new(FamilySpec::canonical(&[1, 1]), 0.5).unwrap();
    let atom = build_atom(&AtomSpec::new(2, 1.0, vec![0.0, 0.0], 1.0, 1).unwrap()).unwrap();
    let mut group = c.benchmark_group("lq_norm_tol_1e-2");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let opts = NormOptions::default().with_tol(1e-2).with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| lq_norm_tr(&params, &atom, 2.0, opts).unwrap().total_upper)
        });
    }
    group.finish();
}

criterion_group!(benches, batch_apply, norm_estimate);
criterion_main!(benches);
