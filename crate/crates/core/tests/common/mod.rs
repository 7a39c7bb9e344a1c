#![allow(dead_code)]

use std::path::PathBuf;

use medlat_core::conllu::{Document, Feats, Sentence, Token, UPOS_TAGS};
use proptest::prelude::*;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn canonical_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixtures().join("canonical"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "conllu"))
        .collect();
    v.sort();
    v
}

pub fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z]{1,8}"
}

pub fn token_parts() -> impl Strategy<Value = (String, String, usize, Vec<(usize, usize)>)> {
    (
        word(),
        word(),
        0..UPOS_TAGS.len(),
        proptest::collection::vec((0..4usize, 0..3usize), 0..3),
    )
}

const KEYS: [&str; 4] = ["Case", "Gender", "Number", "NumType"];
const VALUES: [&str; 3] = ["Nom", "Plur", "Fem"];

pub fn build_token(id: usize, (form, lemma, upos, feats): &(String, String, usize, Vec<(usize, usize)>)) -> Token {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for &(k, v) in feats {
        if !pairs.iter().any(|(key, _)| key == KEYS[k]) {
            pairs.push((KEYS[k].to_string(), VALUES[v].to_string()));
        }
    }
    Token::new(id, form.clone())
        .with_lemma(lemma.clone())
        .with_upos(UPOS_TAGS[*upos])
        .with_feats(Feats(pairs).canonical())
}

pub fn document(max_sentences: usize, max_tokens: usize) -> impl Strategy<Value = Document> {
    proptest::collection::vec(
        proptest::collection::vec(token_parts(), 1..=max_tokens),
        0..=max_sentences,
    )
    .prop_map(|sents| {
        let sentences = sents
            .iter()
            .map(|toks| Sentence::new(toks.iter().enumerate().map(|(i, t)| build_token(i + 1, t)).collect()))
            .collect();
        Document::new("generated", sentences)
    })
}
