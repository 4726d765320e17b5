//! Replays the fuzz corpus through every parser entry point and throws
//! arbitrary input at them; nothing may panic.

use std::path::PathBuf;

use amdl_harness::instance_file::{parse_instance, InstanceFile};
use amdl_harness::report::{build_report, read_sweep};
use amdl_harness::sweep::parse_config;
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn instance_json(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    match parse_instance(text) {
        Ok((inst, meta)) => {
            let again = InstanceFile::from_instance(&inst, meta.clone()).to_json();
            assert_eq!(parse_instance(&again).unwrap(), (inst, meta));
            true
        }
        Err(_) => false,
    }
}

fn sweep_config(data: &[u8]) -> bool {
    std::str::from_utf8(data).is_ok_and(|t| parse_config(t).is_ok())
}

fn sweep_csv(data: &[u8]) -> bool {
    match read_sweep(data) {
        Ok(rows) => {
            build_report(&rows);
            true
        }
        Err(_) => false,
    }
}

#[test]
fn corpus_seeds_parse() {
    for seed in corpus("instance_json") {
        assert!(instance_json(&seed));
    }
    for seed in corpus("sweep_config") {
        assert!(sweep_config(&seed));
    }
    for seed in corpus("sweep_csv") {
        assert!(sweep_csv(&seed));
    }
}

fn mutate(seed: &[u8], edits: &[(usize, u8)], cut: usize) -> Vec<u8> {
    let mut v = seed.to_vec();
    for &(at, byte) in edits {
        if !v.is_empty() {
            let n = v.len();
            v[at % n] = byte;
        }
    }
    v.truncate(cut.max(1).min(v.len()));
    v
}

proptest! {
    #[test]
    fn arbitrary_bytes(data in prop::collection::vec(any::<u8>(), 0..512)) {
        instance_json(&data);
        sweep_config(&data);
        sweep_csv(&data);
    }

    #[test]
    fn mutated_seeds(
        which in 0usize..16,
        edits in prop::collection::vec((any::<usize>(), any::<u8>()), 0..6),
        cut in any::<usize>(),
    ) {
        for (target, f) in [
            ("instance_json", instance_json as fn(&[u8]) -> bool),
            ("sweep_config", sweep_config),
            ("sweep_csv", sweep_csv),
        ] {
            let seeds = corpus(target);
            f(&mutate(&seeds[which % seeds.len()], &edits, cut));
        }
    }
}
