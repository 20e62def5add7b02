mod common;

use proptest::prelude::*;
use seqveritas::ingest::{split, Article, Dataset, Label};
use seqveritas::textprep::{clean, encode, stem, tokenize, StopList, ENGLISH_STOPWORDS, OOV, PAD};
use seqveritas::{EncodedDataset, PrepConfig, TextPipeline, Vocabulary};
use sha2::{Digest, Sha256};

#[test]
fn stemmer_matches_reference_vectors() {
    let text = std::fs::read_to_string(common::fixture("porter_vectors.txt")).unwrap();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (word, expected) = line.split_once(' ').unwrap();
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: {got} != {expected}"));
        }
        checked += 1;
    }
    assert!(checked > 9000);
    assert!(
        mismatches.is_empty(),
        "{} mismatches, first: {:?}",
        mismatches.len(),
        &mismatches[..mismatches.len().min(10)]
    );
}

#[test]
fn stemming_a_stem_can_shorten_it_again() {
    assert_eq!(stem("agree"), "agre");
    assert_eq!(stem("agre"), "agr");
}

#[test]
fn bundled_stoplist_is_pinned() {
    let digest = Sha256::digest(ENGLISH_STOPWORDS.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, "d887ee2f4614b4882fdcaee84e74a5b43255d3e4641bd22279d2894d9705d33f");
    assert_eq!(ENGLISH_STOPWORDS.lines().filter(|l| !l.trim().is_empty()).count(), 174);
    let list = StopList::english();
    for w in ["the", "and", "don", "t", "ourselves"] {
        assert!(list.contains(w), "{w}");
    }
    assert!(!list.contains("hoax"));
}

#[test]
fn vocabulary_ignores_tokens_seen_only_in_validation() {
    let art = |body: &str, label| Article {
        title: String::new(),
        body: body.to_string(),
        subject: "news".into(),
        date: "2017".into(),
        label,
        degenerate: false,
    };
    let train = Dataset::new(vec![art("senate budget vote", Label::True), art("alien hoax shocking", Label::Fake)]);
    let val = Dataset::new(vec![art("zeppelin budget", Label::True)]);
    let cfg = PrepConfig { maxlen: 4, vocab_size: 100, min_freq: 1 };
    let pipeline = TextPipeline::default();
    let (vocab, _, val_enc) = pipeline.prepare_split(&train, &val, &cfg);
    let val_only = pipeline.tokens("zeppelin");
    assert_eq!(val_only.len(), 1);
    assert_eq!(vocab.get(&val_only[0]), None);
    assert_eq!(val_enc.examples[0].indices, vec![PAD, PAD, OOV, vocab.index_of("budget")]);
}

#[test]
fn no_validation_only_token_reaches_the_vocabulary_on_the_toy_split() {
    let ds = common::toy_dataset();
    let (train, val) = split(&ds, 0.5, 7).unwrap();
    let pipeline = TextPipeline::default();
    let (vocab, _, _) = pipeline.prepare_split(&train, &val, &common::TOY_PREP);
    let train_tokens: std::collections::HashSet<String> =
        pipeline.corpus_tokens(&train).into_iter().flatten().collect();
    for tok in &vocab.tokens()[2..] {
        assert!(train_tokens.contains(tok), "{tok}");
    }
}

#[test]
fn cache_round_trips_through_disk() {
    let (_, enc) = common::toy_encoded();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.svec");
    enc.write(&path).unwrap();
    assert_eq!(EncodedDataset::read(&path).unwrap(), enc);
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-z]{1,9}", 0..40)
}

proptest! {
    #[test]
    fn clean_is_idempotent(raw in "\\PC{0,200}") {
        let once = clean(&raw);
        prop_assert_eq!(clean(&once), once.clone());
        prop_assert!(once.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == ' '));
    }

    #[test]
    fn encoding_always_has_maxlen_entries(tokens in words(), maxlen in 1usize..30) {
        let vocab = Vocabulary::build([&tokens], 50, 1);
        let out = encode(&tokens, &vocab, maxlen);
        prop_assert_eq!(out.len(), maxlen);
        let kept = tokens.len().min(maxlen);
        prop_assert!(out[..maxlen - kept].iter().all(|&i| i == PAD));
        prop_assert!(out[maxlen - kept..].iter().all(|&i| i != PAD));
        for (i, t) in out[maxlen - kept..].iter().zip(&tokens[tokens.len() - kept..]) {
            prop_assert_eq!(*i, vocab.index_of(t));
        }
    }

    #[test]
    fn pipeline_tokens_survive_a_second_cleaning(raw in "[A-Za-z0-9 ,.!?'\\-]{0,120}") {
        let toks = TextPipeline::default().tokens(&raw);
        for t in &toks {
            let recleaned = clean(t);
            prop_assert_eq!(tokenize(&recleaned), vec![t.as_str()]);
        }
    }
}
