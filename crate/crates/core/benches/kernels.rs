//! Sequential (one-thread pool) against parallel (global pool) evaluation of
//! the hot loops. Build with `--no-default-features` to measure the
//! sequential fallback alone; both columns then run the same code.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mixed_eig_core::eigsolve::assemble_p2_matrix;
use mixed_eig_core::energy::{gagliardo_p, MaskedOperator};
use mixed_eig_core::geometry::{build_mask, Lattice, ShapeSpec};
use mixed_eig_core::par;
use mixed_eig_core::rearrange::{iterate_polarizations, GridFunction, SchwarzOptions};
use mixed_eig_core::OperatorParams;

const MODES: [(&str, usize); 2] = [("sequential", 1), ("parallel", 0)];

fn disk(h: f64, half: usize) -> mixed_eig_core::DomainMask {
    let l = Lattice::centered(2, h, half).unwrap();
    build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 1.0 }).unwrap()
}

fn bump(mask: &mixed_eig_core::DomainMask) -> GridFunction {
    let l = *mask.lattice();
    GridFunction::from_fn(mask.clone(), |i| {
        let x = l.coord(i);
        (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
    })
}

fn gagliardo(c: &mut Criterion) {
    let mut g = c.benchmark_group("gagliardo_full_box");
    let u = bump(&disk(1.0 / 8.0, 12));
    for (name, workers) in MODES {
        g.bench_function(BenchmarkId::new(name, u.lattice().len()), |b| {
            par::with_workers(workers, || b.iter(|| gagliardo_p(black_box(&u), 3.0, 0.5, true).unwrap()))
        });
    }
    g.finish();
}

fn masked_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("masked_energy_gradient");
    let mask = disk(1.0 / 16.0, 24);
    let op = MaskedOperator::new(&mask, &OperatorParams::mixed(3.0, 0.5)).unwrap();
    let u = op.from_grid(&bump(&mask));
    for (name, workers) in MODES {
        g.bench_function(BenchmarkId::new(name, op.len()), |b| {
            par::with_workers(workers, || b.iter(|| op.energy_and_gradient(black_box(&u))))
        });
    }
    g.finish();
}

fn p2_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("p2_assembly");
    g.sample_size(20);
    let mask = disk(1.0 / 12.0, 20);
    let params = OperatorParams::mixed(2.0, 0.5);
    for (name, workers) in MODES {
        g.bench_function(BenchmarkId::new(name, mask.count()), |b| {
            par::with_workers(workers, || b.iter(|| assemble_p2_matrix(black_box(&mask), &params).unwrap()))
        });
    }
    g.finish();
}

fn schwarz_candidates(c: &mut Criterion) {
    let mut g = c.benchmark_group("schwarz_greedy");
    g.sample_size(20);
    let l = Lattice::centered(2, 1.0 / 8.0, 16).unwrap();
    let mask = build_mask(&l, &ShapeSpec::Ball { center: [0.75, 0.25], radius: 0.6 }).unwrap();
    let u = GridFunction::from_fn(mask.clone(), |i| {
        let x = l.coord(i);
        (0.36 - (x[0] - 0.75).powi(2) - (x[1] - 0.25).powi(2)).max(0.0)
    });
    let opts = SchwarzOptions { budget: 5, candidates: 32, ..Default::default() };
    for (name, workers) in MODES {
        g.bench_function(name, |b| {
            par::with_workers(workers, || b.iter(|| iterate_polarizations(black_box(&u), [0.0, 0.0], &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, gagliardo, masked_gradient, p2_assembly, schwarz_candidates);
criterion_main!(benches);
