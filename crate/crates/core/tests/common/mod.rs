#![allow(dead_code)]

use std::path::PathBuf;

use seqveritas::ingest::{load_articles, merge_shuffle};
use seqveritas::{Dataset, EncodedDataset, Label, Model, ModelConfig, PrepConfig, Preset, TextPipeline, Vocabulary};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn toy_dataset() -> Dataset {
    let fake = load_articles(fixture("toy_fake.csv"), Label::Fake).unwrap();
    let real = load_articles(fixture("toy_true.csv"), Label::True).unwrap();
    merge_shuffle(Dataset::new(fake), Dataset::new(real), 42)
}

pub const TOY_PREP: PrepConfig = PrepConfig { maxlen: 16, vocab_size: 20_000, min_freq: 1 };

pub fn toy_encoded() -> (Vocabulary, EncodedDataset) {
    let ds = toy_dataset();
    let (vocab, enc, _) = TextPipeline::default().prepare_split(&ds, &ds, &TOY_PREP);
    (vocab, enc)
}

pub fn toy_model(preset: Preset, seed: u64) -> (Model, EncodedDataset) {
    let (vocab, enc) = toy_encoded();
    let config = ModelConfig::preset(preset, vocab.len(), TOY_PREP.maxlen, seed);
    (Model::build(config, vocab).unwrap(), enc)
}
