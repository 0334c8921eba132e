//! Fixture builders shared by the benchmarks: a deterministic random graph
//! at tunable size and synthetic corpora from the library's generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use scimob_core::coaffil::CoAffiliationGraph;
use scimob_core::corpus::PublicationRecord;
use scimob_core::synth::{generate_corpus, ScenarioConfig};
use scimob_core::{EntityKey, Level};

/// Random undirected graph with `n` nodes and roughly `n * avg_degree / 2`
/// edges, weights 1–9. Same seed, same graph.
pub fn seeded_graph(n: usize, avg_degree: f64, seed: u64) -> CoAffiliationGraph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = (avg_degree / (n as f64 - 1.0)).min(1.0);
    let keys: Vec<EntityKey> = (0..n).map(|i| EntityKey::from(format!("E{i:04}"))).collect();
    let mut graph = CoAffiliationGraph {
        level: Level::Country,
        researchers: n as u64,
        ..CoAffiliationGraph::default()
    };
    for key in &keys {
        graph.nodes.insert(key.clone(), rng.gen_range(1..=50u64));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                graph
                    .edges
                    .insert((keys[i].clone(), keys[j].clone()), rng.gen_range(1..=9u64));
            }
        }
    }
    graph
}

/// Synthetic corpus at a given author count; everything else stays at the
/// default scenario.
pub fn bench_corpus(n_authors: usize, seed: u64) -> Vec<PublicationRecord> {
    let config = ScenarioConfig {
        seed,
        n_authors,
        ..ScenarioConfig::default()
    };
    let (records, _) = generate_corpus(&config).expect("default scenario is valid");
    records
}

/// The corpus serialized to its line-delimited wire form.
pub fn bench_corpus_jsonl(n_authors: usize, seed: u64) -> String {
    bench_corpus(n_authors, seed)
        .iter()
        .map(|r| r.to_jsonl() + "\n")
        .collect()
}
