//! Mutated corpus seeds through the parser entry points. Mirrors the fuzz
//! targets so they get exercised on a stable toolchain.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbr_core::specio::{self, fixtures, OptimizeOptions};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| std::fs::read(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    out
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut b = seed.to_vec();
    for _ in 0..rng.random_range(1..4) {
        if b.is_empty() {
            break;
        }
        let i = rng.random_range(0..b.len());
        match rng.random_range(0..4) {
            0 => b.truncate(i),
            1 => b[i] = rng.random(),
            2 => {
                b.remove(i);
            }
            _ => {
                let token: &[u8] = [&b"-1"[..], b"0", b"1e308", b"null", b"\"\"", b"[]", b"{}"][rng.random_range(0..7)];
                b.splice(i..i, token.iter().copied());
            }
        }
    }
    b
}

#[test]
fn mutated_specs_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corpus = seeds("parse_spec");
    assert!(!corpus.is_empty());
    let mut accepted = 0;
    for _ in 0..4000 {
        let seed = &corpus[rng.random_range(0..corpus.len())];
        let data = mutate(&mut rng, seed);
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(spec) = specio::parse_spec(text) {
            accepted += 1;
            assert_eq!(specio::parse_spec(&specio::emit_spec(&spec)).unwrap(), spec);
            let g = specio::build_graph(&spec).unwrap();
            let _ = g.analyze(spec.cost_model.merge);
            let _ = g.to_dot(spec.cost_model.merge);
            let opts = OptimizeOptions {
                cap: Some(256),
                ..OptimizeOptions::default()
            };
            let _ = specio::optimize_spec(&spec, &opts);
        }
    }
    assert!(accepted > 0);
}

#[test]
fn mutated_fixtures_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let corpus = seeds("parse_fixture");
    for _ in 0..600 {
        let seed = &corpus[rng.random_range(0..corpus.len())];
        let data = mutate(&mut rng, seed);
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(f) = fixtures::parse_fixture(text) {
            let _ = fixtures::run_fixture(&f);
        }
    }
}
