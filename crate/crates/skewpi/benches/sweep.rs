use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use skewpi::families::FamilyKind;
use skewpi::pidegree::{brute_force_image, IntMatrix};
use skewpi::sweep::{sweep, Strategy};

fn grids(c: &mut Criterion) {
    let rs: Vec<u64> = (2..=40).collect();
    let mut g = c.benchmark_group("sweep");
    for (kind, ns) in [
        (FamilyKind::EuclideanOdd, (1..=8).collect::<Vec<_>>()),
        (FamilyKind::MatricesSingle, (2..=5).collect()),
    ] {
        for strategy in [Strategy::Sequential, Strategy::Parallel] {
            g.bench_with_input(BenchmarkId::new(kind.name(), format!("{strategy:?}")), &strategy, |b, &s| {
                b.iter(|| sweep(kind, &ns, &rs, s).unwrap())
            });
        }
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let m = IntMatrix::from_i64(&[
        vec![0, 1, -1, 2, 0, 1],
        vec![-1, 0, 3, 0, 1, 0],
        vec![1, -3, 0, 1, 0, 2],
        vec![-2, 0, -1, 0, 4, 1],
        vec![0, -1, 0, -4, 0, 1],
        vec![-1, 0, -2, -1, -1, 0],
    ])
    .unwrap();
    c.bench_function("brute_force_image 6x6 ell=12", |b| b.iter(|| brute_force_image(&m, 12).unwrap()));
}

criterion_group!(benches, grids, enumeration);
criterion_main!(benches);
