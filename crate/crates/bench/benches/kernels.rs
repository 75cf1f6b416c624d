use capbound_core::capacity::capacity_of_cells;
use capbound_core::capmetric::{rho, MetricContext};
use capbound_core::geometry::{build_mask, rasterize_plate, DomainSpec, PlateSpec, Point};
use capbound_core::suites;
use criterion::{criterion_group, criterion_main, Criterion};

fn unit_disk() -> DomainSpec {
    DomainSpec::Disk {
        center: Point::new(0.0, 0.0),
        radius: 1.0,
    }
}

fn bench_mask_build(c: &mut Criterion) {
    c.bench_function("mask_disk_256", |b| {
        b.iter(|| build_mask(&unit_disk(), 1.0 / 128.0).unwrap())
    });
    c.bench_function("mask_comb_l3", |b| {
        b.iter(|| build_mask(&DomainSpec::Comb { levels: 3 }, 1.0 / 81.0).unwrap())
    });
}

fn bench_capacity_solve(c: &mut Criterion) {
    let domain = unit_disk();
    let mask = build_mask(&domain, 1.0 / 64.0).unwrap();
    let p0 = rasterize_plate(&PlateSpec::boundary(), &mask).unwrap();
    let p1 = rasterize_plate(
        &PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.2),
        &mask,
    )
    .unwrap();
    c.bench_function("capacity_disk_128", |b| {
        b.iter(|| capacity_of_cells(&mask, &p0, &p1).unwrap())
    });
}

fn bench_rho(c: &mut Criterion) {
    let ctx = MetricContext::new(suites::disk_metric_config(1.0 / 32.0, 1)).unwrap();
    let x = Point::new(0.6, 0.0);
    let y = Point::new(-0.5, 0.3);
    c.bench_function("rho_disk_64", |b| b.iter(|| rho(&ctx, x, y).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_mask_build, bench_capacity_solve, bench_rho
}
criterion_main!(benches);
