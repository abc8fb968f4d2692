use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use teachsize::conditional::make_library;
use teachsize::curriculum::CurriculumSolver;
use teachsize::{Engine, LanguageContext, Library, Parallelism, Params, Program};

const MODES: [(&str, Parallelism); 2] = [("serial", Parallelism::Serial), ("parallel", Parallelism::Parallel)];

fn params() -> Params {
    Params {
        max_witness_bits: 20,
        ..Params::default()
    }
}

fn book_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("book_build");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| Engine::new(params(), par).unwrap().build_book().len())
        });
    }
    g.finish();
}

/// Behaviour tables for a one-primitive library, on top of a warm engine.
fn library_tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("library_tables");
    g.sample_size(10);
    let lib = Library::new(vec![Program::parse(",.", LanguageContext::BASE).unwrap()]).unwrap();
    for (name, par) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let engine = Engine::new(params(), par).unwrap();
                black_box(engine.universe(&lib).programs().len())
            })
        });
    }
    g.finish();
}

fn curricula(c: &mut Criterion) {
    let mut g = c.benchmark_group("curricula");
    g.sample_size(10);
    let labels: Vec<String> = [",.", ",..", "+.,.", ".,."].map(String::from).to_vec();
    for (name, par) in MODES {
        g.bench_function(BenchmarkId::new("i_search", name), |b| {
            b.iter(|| {
                let engine = Engine::new(params(), par).unwrap();
                let book = engine.build_book();
                let sigs = labels
                    .iter()
                    .map(|l| engine.concept(&Program::parse(l, LanguageContext::BASE).unwrap()).unwrap())
                    .collect();
                let solver = CurriculumSolver::new(&engine, &book, sigs, labels.clone()).unwrap();
                solver.i_search(100).unwrap().result.total_ts_bits
            })
        });
        g.bench_function(BenchmarkId::new("cond_teacher", name), |b| {
            let engine = Engine::new(params(), par).unwrap();
            let book = engine.build_book();
            let given = engine.concept(&Program::parse(",.", LanguageContext::BASE).unwrap()).unwrap();
            let target = engine.concept(&Program::parse(",..", LanguageContext::BASE).unwrap()).unwrap();
            let lib = make_library(&book, &[given]).unwrap();
            b.iter(|| {
                // A fresh engine so the library tables are rebuilt each time.
                let fresh = Engine::new(params(), par).unwrap();
                fresh.teacher(&target, &lib).map(|t| t.witness.delta())
            })
        });
    }
    g.finish();
}

criterion_group!(benches, book_build, library_tables, curricula);
criterion_main!(benches);
