#![allow(dead_code)]

use std::path::PathBuf;

use hypergeo::Corpus;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/mini")
}

pub fn corpus() -> Corpus {
    Corpus::load(&corpus_dir()).expect("bundled corpus loads")
}
