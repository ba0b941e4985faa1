use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pavf_bench::{hh_start, kgs_start};
use pavf_core::models::henon_heiles::hh_system;
use pavf_core::{GenericStepper, HhScheme, KgsScheme, Method, Stepper, StepperConfig};

fn henon_heiles(c: &mut Criterion) {
    let z = hh_start();
    let mut group = c.benchmark_group("hh_step");
    for m in Method::COMPARED {
        let stepper = HhScheme::new(m, StepperConfig::new(0.2)).unwrap();
        group.bench_with_input(BenchmarkId::new("hand", m.slug()), &z, |b, z| {
            b.iter(|| black_box(stepper.step(z).unwrap()))
        });
        let generic = GenericStepper::new(
            hh_system(),
            pavf_core::models::henon_heiles::HenonHeiles::scheme_grouping(),
            m,
            StepperConfig::new(0.2),
        )
        .unwrap();
        let zs = z.into();
        group.bench_with_input(BenchmarkId::new("generic", m.slug()), &zs, |b, z| {
            b.iter(|| black_box(generic.step(z).unwrap()))
        });
    }
    group.finish();
}

fn kgs(c: &mut Criterion) {
    let (grid, z) = kgs_start();
    let mut group = c.benchmark_group("kgs_step");
    for m in Method::COMPARED {
        let stepper = KgsScheme::new(&grid, m, StepperConfig::new(0.05)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m.slug()), &z, |b, z| {
            b.iter(|| black_box(stepper.step(z).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, henon_heiles, kgs);
criterion_main!(benches);
