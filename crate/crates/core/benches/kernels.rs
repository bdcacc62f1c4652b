use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use efgfom::dgf::{compute_gamma_w, dge_value, DgfKind};
use efgfom::games::generate_leduc;
use efgfom::sample::{gaussian, interior_strategy, rng_for};
use efgfom::solver::{Egt, SaddlePointProblem};
use efgfom::sparse::CsrMatrix;
use rand::Rng;
use rayon::prelude::*;

fn random_csr(rows: usize, cols: usize, per_row: usize) -> CsrMatrix {
    let mut rng = rng_for(11, 0);
    let triplets: Vec<_> = (0..rows)
        .flat_map(|r| {
            let mut cs: Vec<usize> = (0..per_row).map(|_| rng.random_range(0..cols)).collect();
            cs.sort_unstable();
            cs.dedup();
            cs.into_iter().map(move |c| (r, c, 1.0 / (1 + r + c) as f64)).collect::<Vec<_>>()
        })
        .collect();
    CsrMatrix::from_triplets(rows, cols, &triplets).unwrap()
}

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    let leduc = generate_leduc(13).unwrap().payoff_matrix();
    let cases = [("leduc13", leduc), ("random-200k", random_csr(200_000, 200_000, 8))];
    for (name, a) in &cases {
        let v = gaussian(&mut rng_for(3, 0), a.cols());
        let mut out = vec![0.0; a.rows()];
        group.throughput(Throughput::Elements(a.nnz() as u64));
        group.bench_with_input(BenchmarkId::new("sequential", name), a, |b, a| {
            b.iter(|| a.mul_vec_seq(black_box(&v), &mut out))
        });
        group.bench_with_input(BenchmarkId::new("parallel", name), a, |b, a| {
            b.iter(|| a.mul_vec_par(black_box(&v), &mut out))
        });
    }
    group.finish();
}

/// Draw an interior strategy and evaluate the DGE there, once per sample.
fn sample_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("dge-batch");
    let g = generate_leduc(5).unwrap();
    let t = &g.treeplex_x;
    let (gamma, w) = compute_gamma_w(t);
    let eval = |i: u64| dge_value(t, &gamma, &w, &interior_strategy(t, &mut rng_for(5, i))).unwrap();
    let n = 2048u64;
    group.throughput(Throughput::Elements(n));
    group.bench_function("sequential", |b| b.iter(|| (0..n).map(eval).fold(0.0, f64::max)));
    group.bench_function("parallel", |b| {
        b.iter(|| (0..n).into_par_iter().map(eval).collect::<Vec<_>>().into_iter().fold(0.0, f64::max))
    });
    group.finish();
}

fn egt_iteration(c: &mut Criterion) {
    let g = generate_leduc(13).unwrap();
    let p = SaddlePointProblem::from_game(&g, DgfKind::Dge).unwrap();
    let mut s = Egt::initialize(&p).unwrap();
    c.bench_function("egt-iteration/leduc13", |b| b.iter(|| s.iterate(&p).unwrap()));
}

criterion_group!(benches, matvec, sample_batch, egt_iteration);
criterion_main!(benches);
