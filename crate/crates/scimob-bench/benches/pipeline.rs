//! Benchmarks along the pipeline's hot paths: parsing, classification,
//! graph construction, centrality, and flow accumulation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use scimob_bench::{bench_corpus, bench_corpus_jsonl, seeded_graph};
use scimob_core::coaffil::{build_coaffiliation_graph, GraphOptions};
use scimob_core::corpus::{build_author_histories, filter_eligible_researchers, read_corpus};
use scimob_core::flows::{build_flow_matrix, capacities_from_histories, FlowOptions};
use scimob_core::graphmetrics::{betweenness_all, closeness_all, EdgeMode};
use scimob_core::mobility::{classify_all, ClassifyOptions};
use scimob_core::Level;

fn parse_benches(c: &mut Criterion) {
    let jsonl = bench_corpus_jsonl(500, 7);
    c.bench_function("parse/jsonl-500-authors", |b| {
        b.iter(|| read_corpus(black_box(jsonl.as_bytes())).unwrap())
    });
}

fn classify_benches(c: &mut Criterion) {
    let records = bench_corpus(1000, 7);
    let histories = build_author_histories(&records);
    let eligible = filter_eligible_researchers(&histories, 2003, 2012).unwrap();
    c.bench_function("classify/1000-authors", |b| {
        b.iter(|| classify_all(black_box(&eligible), ClassifyOptions::default()))
    });
}

fn graph_benches(c: &mut Criterion) {
    let records = bench_corpus(1000, 7);
    let histories = build_author_histories(&records);
    let eligible = filter_eligible_researchers(&histories, 2003, 2012).unwrap();
    c.bench_function("coaffil/city-level-1000-authors", |b| {
        b.iter(|| build_coaffiliation_graph(black_box(&eligible), Level::City, &GraphOptions::default()))
    });
}

fn centrality_benches(c: &mut Criterion) {
    for n in [100usize, 300] {
        let graph = seeded_graph(n, 8.0, 42);
        c.bench_function(&format!("betweenness/n{n}"), |b| {
            b.iter(|| betweenness_all(black_box(&graph), EdgeMode::Unweighted))
        });
        c.bench_function(&format!("closeness/n{n}"), |b| {
            b.iter(|| closeness_all(black_box(&graph), EdgeMode::Unweighted))
        });
    }
    let graph = seeded_graph(300, 8.0, 42);
    c.bench_function("betweenness/n300-weighted", |b| {
        b.iter(|| betweenness_all(black_box(&graph), EdgeMode::InverseWeight))
    });
}

fn flow_benches(c: &mut Criterion) {
    let records = bench_corpus(1000, 7);
    let histories = build_author_histories(&records);
    let eligible = filter_eligible_researchers(&histories, 2003, 2012).unwrap();
    let events = classify_all(&eligible, ClassifyOptions::default());
    let capacities = capacities_from_histories(&eligible);
    c.bench_function("flows/matrix-1000-authors", |b| {
        b.iter(|| build_flow_matrix(black_box(&events), &capacities, &FlowOptions::default()).unwrap())
    });
}

criterion_group!(
    benches,
    parse_benches,
    classify_benches,
    graph_benches,
    centrality_benches,
    flow_benches
);
criterion_main!(benches);
