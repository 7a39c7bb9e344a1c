//! Averaged-perceptron token classifier for UPOS and composite UFeats tags.
//!
//! Decoding is greedy left to right; the previous tag is a feature (gold
//! during training, predicted when tagging). A model can be trained further
//! on new data: its weights seed the next run and its tagset is extended
//! with the new corpus's tags.
//!
//! # Model files
//!
//! JSON object with fields `format` (`"medlat-tagger"`), `version` (1),
//! `task`, `tagset` (sorted), `features` (names, index = feature id),
//! `weights` (`[feature_id, tag_index, weight]` triples, sorted),
//! `provenance` and `reference_config`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{Document, Feats, Sentence, Token};
use crate::provenance::TrainingStage;

const FORMAT: &str = "medlat-tagger";
const VERSION: u32 = 1;
const BOUNDARY_LEFT: &str = "<s>";
const BOUNDARY_RIGHT: &str = "</s>";

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("EmptyCorpus: no tokens to train on")]
    EmptyCorpus,
    #[error("TaskMismatch: base model tags {base}, asked to train {requested}")]
    TaskMismatch { base: TagTask, requested: TagTask },
    #[error("IndexOutOfRange: index {index} in a sentence of {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("ModelFormat: {0}")]
    ModelFormat(String),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagTask {
    Upos,
    Ufeats,
}

impl TagTask {
    /// The gold label of a token for this task.
    pub fn label_of(self, token: &Token) -> String {
        match self {
            TagTask::Upos => token.upos.clone(),
            TagTask::Ufeats => token.feats.canonical().to_string(),
        }
    }

    /// Writes a predicted label into a token.
    pub fn assign(self, token: &mut Token, label: &str) {
        match self {
            TagTask::Upos => token.upos = label.to_string(),
            // labels come from training data, so they are well-formed
            TagTask::Ufeats => token.feats = label.parse().unwrap_or_else(|_| Feats::new()),
        }
    }
}

impl fmt::Display for TagTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagTask::Upos => "upos",
            TagTask::Ufeats => "ufeats",
        })
    }
}

impl FromStr for TagTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upos" => Ok(TagTask::Upos),
            "ufeats" | "feats" => Ok(TagTask::Ufeats),
            other => Err(format!("unknown tagging task {other:?}")),
        }
    }
}

/// Reference hyperparameters of the fine-tuned transformer this tagger
/// stands in for. Kept as metadata; only `epochs` has a counterpart here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerReferenceConfig {
    pub batch_size: u32,
    pub epochs: u32,
    pub learning_rate: f64,
    pub sequence_length: u32,
}

impl Default for TaggerReferenceConfig {
    fn default() -> Self {
        TaggerReferenceConfig {
            batch_size: 12,
            epochs: 10,
            learning_rate: 2e-5,
            sequence_length: 256,
        }
    }
}

/// Sorted, deduplicated feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }
}

/// Names of the binary features describing token `index`.
///
/// `prev_tag` is the tag of the preceding token; it is ignored for the first
/// token, which gets a boundary marker instead.
pub fn extract_features(
    sentence: &Sentence,
    index: usize,
    prev_tag: Option<&str>,
) -> Result<Vec<String>, TaggerError> {
    let len = sentence.tokens.len();
    if index >= len {
        return Err(TaggerError::IndexOutOfRange { index, len });
    }
    let mut out = context_features(&sentence.tokens, index);
    out.push(prev_tag_feature(if index == 0 { None } else { prev_tag }));
    out.sort();
    out.dedup();
    Ok(out)
}

fn prev_tag_feature(prev: Option<&str>) -> String {
    format!("pt={}", prev.unwrap_or(BOUNDARY_LEFT))
}

/// Every feature except the previous tag.
fn context_features(tokens: &[Token], index: usize) -> Vec<String> {
    let form = &tokens[index].form;
    let lower = form.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut out = vec!["bias".to_string(), format!("w={lower}")];
    for k in 1..=chars.len().min(4) {
        let pre: String = chars[..k].iter().collect();
        let suf: String = chars[chars.len() - k..].iter().collect();
        out.push(format!("p{k}={pre}"));
        out.push(format!("s{k}={suf}"));
    }
    if form.chars().any(|c| c.is_ascii_digit()) {
        out.push("has_digit".into());
    }
    if form.chars().next().is_some_and(char::is_uppercase) {
        out.push("capitalized".into());
    }
    let letters: Vec<char> = form.chars().filter(|c| c.is_alphabetic()).collect();
    if !letters.is_empty() && letters.iter().all(|c| c.is_uppercase()) {
        out.push("all_caps".into());
    }
    let prev = match index {
        0 => BOUNDARY_LEFT.to_string(),
        i => tokens[i - 1].form.to_lowercase(),
    };
    let next = tokens
        .get(index + 1)
        .map(|t| t.form.to_lowercase())
        .unwrap_or_else(|| BOUNDARY_RIGHT.to_string());
    out.push(format!("pw={prev}"));
    out.push(format!("nw={next}"));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub task: TagTask,
    tagset: Vec<String>,
    features: Vec<String>,
    index: HashMap<String, u32>,
    /// Per feature id: `(tag index, weight)` sorted by tag index.
    weights: Vec<Vec<(u32, f64)>>,
    pub provenance: Vec<TrainingStage>,
    pub reference_config: TaggerReferenceConfig,
}

/// Training parameters for one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainOptions {
    pub task: TagTask,
    pub epochs: usize,
    pub seed: u64,
    /// Names recorded in the model's provenance.
    pub datasets: Vec<String>,
}

impl TrainOptions {
    pub fn new(task: TagTask, epochs: usize, seed: u64) -> Self {
        TrainOptions {
            task,
            epochs,
            seed,
            datasets: Vec::new(),
        }
    }

    pub fn datasets<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.datasets = names.into_iter().map(Into::into).collect();
        self
    }
}

impl TaggerModel {
    /// An untrained model with zero weights.
    pub fn empty(task: TagTask, tagset: impl IntoIterator<Item = String>) -> Self {
        let tagset: BTreeSet<String> = tagset.into_iter().collect();
        TaggerModel {
            task,
            tagset: tagset.into_iter().collect(),
            features: Vec::new(),
            index: HashMap::new(),
            weights: Vec::new(),
            provenance: Vec::new(),
            reference_config: TaggerReferenceConfig::default(),
        }
    }

    pub fn tagset(&self) -> &[String] {
        &self.tagset
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Ids of the known features among `names`.
    pub fn feature_vector<S: AsRef<str>>(&self, names: &[S]) -> FeatureVector {
        FeatureVector::from_ids(names.iter().filter_map(|n| self.feature_id(n.as_ref())).collect())
    }

    fn intern(&mut self, name: String) -> u32 {
        if let Some(&id) = self.index.get(&name) {
            return id;
        }
        let id = self.features.len() as u32;
        self.index.insert(name.clone(), id);
        self.features.push(name);
        self.weights.push(Vec::new());
        id
    }

    fn scores(&self, ids: &[u32], prev: Option<u32>) -> Vec<f64> {
        let mut scores = vec![0.0; self.tagset.len()];
        for &f in ids.iter().chain(prev.iter()) {
            if let Some(row) = self.weights.get(f as usize) {
                for &(t, w) in row {
                    scores[t as usize] += w;
                }
            }
        }
        scores
    }

    /// Re-indexes weights onto a (sorted) superset of the current tagset.
    fn widen_tagset(&mut self, tagset: Vec<String>) {
        let pos: HashMap<&str, u32> = tagset
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect();
        let remap: Vec<u32> = self.tagset.iter().map(|t| pos[t.as_str()]).collect();
        for row in &mut self.weights {
            for e in row.iter_mut() {
                e.0 = remap[e.0 as usize];
            }
            row.sort_by_key(|e| e.0);
        }
        self.tagset = tagset;
    }

    pub fn save(&self, path: &Path) -> Result<(), TaggerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TaggerError> {
        TaggerModel::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut weights = Vec::new();
        for (f, row) in self.weights.iter().enumerate() {
            for &(t, w) in row {
                weights.push((f as u32, t, w));
            }
        }
        let file = ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            task: self.task,
            tagset: self.tagset.clone(),
            features: self.features.clone(),
            weights,
            provenance: self.provenance.clone(),
            reference_config: self.reference_config.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TaggerError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| TaggerError::ModelFormat(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(TaggerError::ModelFormat(format!(
                "expected {FORMAT} v{VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        let mut model = TaggerModel::empty(file.task, file.tagset.iter().cloned());
        if model.tagset != file.tagset {
            return Err(TaggerError::ModelFormat("tagset not sorted and unique".into()));
        }
        for name in file.features {
            let n = model.features.len();
            if model.intern(name) as usize != n {
                return Err(TaggerError::ModelFormat("duplicate feature name".into()));
            }
        }
        for (f, t, w) in file.weights {
            if t as usize >= model.tagset.len() || f as usize >= model.features.len() {
                return Err(TaggerError::ModelFormat(format!(
                    "weight ({f}, {t}) out of range"
                )));
            }
            model.weights[f as usize].push((t, w));
        }
        for row in &mut model.weights {
            row.sort_by_key(|e| e.0);
        }
        model.provenance = file.provenance;
        model.reference_config = file.reference_config;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    task: TagTask,
    tagset: Vec<String>,
    features: Vec<String>,
    weights: Vec<(u32, u32, f64)>,
    provenance: Vec<TrainingStage>,
    reference_config: TaggerReferenceConfig,
}

/// Weight with the bookkeeping needed for lazy averaging.
#[derive(Clone, Copy)]
struct Slot {
    tag: u32,
    weight: f64,
    total: f64,
    stamp: u64,
}

struct Averager {
    rows: Vec<Vec<Slot>>,
    instances: u64,
}

impl Averager {
    fn from_model(model: &TaggerModel) -> Self {
        let rows = model
            .weights
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(tag, weight)| Slot {
                        tag,
                        weight,
                        total: 0.0,
                        stamp: 0,
                    })
                    .collect()
            })
            .collect();
        Averager { rows, instances: 0 }
    }

    fn ensure_rows(&mut self, n: usize) {
        if self.rows.len() < n {
            self.rows.resize_with(n, Vec::new);
        }
    }

    fn scores(&self, ids: &[u32], ntags: usize) -> Vec<f64> {
        let mut scores = vec![0.0; ntags];
        for &f in ids {
            for s in &self.rows[f as usize] {
                scores[s.tag as usize] += s.weight;
            }
        }
        scores
    }

    fn bump(&mut self, feature: u32, tag: u32, delta: f64) {
        let now = self.instances;
        let row = &mut self.rows[feature as usize];
        let slot = match row.binary_search_by_key(&tag, |s| s.tag) {
            Ok(i) => &mut row[i],
            Err(i) => {
                row.insert(
                    i,
                    Slot {
                        tag,
                        weight: 0.0,
                        total: 0.0,
                        stamp: now,
                    },
                );
                &mut row[i]
            }
        };
        slot.total += (now - slot.stamp) as f64 * slot.weight;
        slot.stamp = now;
        slot.weight += delta;
    }

    fn update(&mut self, ids: &[u32], truth: u32, guess: u32) {
        if truth != guess {
            for &f in ids {
                self.bump(f, truth, 1.0);
                self.bump(f, guess, -1.0);
            }
        }
        self.instances += 1;
    }

    /// Averaged weights. With no instances seen, the current weights.
    fn finish(self) -> Vec<Vec<(u32, f64)>> {
        let n = self.instances;
        self.rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .filter_map(|s| {
                        let w = if n == 0 {
                            s.weight
                        } else {
                            (s.total + (n - s.stamp) as f64 * s.weight) / n as f64
                        };
                        (w != 0.0).then_some((s.tag, w))
                    })
                    .collect()
            })
            .collect()
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// The best-scoring tag other than `gold` when it scores at least as high
/// as `gold`. Ties count against `gold` so that training leaves a margin.
fn strongest_rival(scores: &[f64], gold: u32) -> Option<u32> {
    let g = gold as usize;
    let mut rival: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if i != g && rival.is_none_or(|r| s > scores[r]) {
            rival = Some(i);
        }
    }
    rival.filter(|&r| scores[r] >= scores[g]).map(|r| r as u32)
}

/// Trains a model, starting from `base` when given.
///
/// The tagset is the union of the base tagset and the corpus labels, except
/// that a zero-epoch continuation leaves the base model's tagset untouched
/// so its predictions are preserved exactly.
pub fn train(
    corpus: &Document,
    options: &TrainOptions,
    base: Option<&TaggerModel>,
) -> Result<TaggerModel, TaggerError> {
    let task = options.task;
    if let Some(b) = base {
        if b.task != task {
            return Err(TaggerError::TaskMismatch {
                base: b.task,
                requested: task,
            });
        }
    }
    let token_count = corpus.token_count();
    if token_count == 0 {
        return Err(TaggerError::EmptyCorpus);
    }

    let mut model = match base {
        Some(b) => b.clone(),
        None => TaggerModel::empty(task, std::iter::empty()),
    };
    if base.is_none() || options.epochs > 0 {
        let mut tags: BTreeSet<String> = model.tagset.iter().cloned().collect();
        tags.extend(corpus.tokens().map(|t| task.label_of(t)));
        model.widen_tagset(tags.into_iter().collect());
    }

    let tag_index: HashMap<String, u32> = model
        .tagset
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    // Static features and gold labels, computed once.
    struct Prepared {
        ids: Vec<Vec<u32>>,
        gold: Vec<u32>,
    }
    let mut prepared = Vec::with_capacity(corpus.sentences.len());
    for s in &corpus.sentences {
        let mut ids = Vec::with_capacity(s.tokens.len());
        let mut gold = Vec::with_capacity(s.tokens.len());
        for i in 0..s.tokens.len() {
            let v: Vec<u32> = context_features(&s.tokens, i)
                .into_iter()
                .map(|n| model.intern(n))
                .collect();
            ids.push(v);
            gold.push(tag_index[&task.label_of(&s.tokens[i])]);
        }
        prepared.push(Prepared { ids, gold });
    }
    let boundary = model.intern(prev_tag_feature(None));
    let prev_ids: Vec<u32> = model
        .tagset
        .clone()
        .iter()
        .map(|t| model.intern(prev_tag_feature(Some(t))))
        .collect();

    let ntags = model.tagset.len();
    let mut avg = Averager::from_model(&model);
    avg.ensure_rows(model.features.len());
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut feats = Vec::new();
    for epoch in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0usize;
        for &si in &order {
            let p = &prepared[si];
            for (i, ids) in p.ids.iter().enumerate() {
                feats.clear();
                feats.extend_from_slice(ids);
                feats.push(if i == 0 { boundary } else { prev_ids[p.gold[i - 1] as usize] });
                let gold = p.gold[i];
                let rival = strongest_rival(&avg.scores(&feats, ntags), gold);
                mistakes += usize::from(rival.is_some());
                avg.update(&feats, gold, rival.unwrap_or(gold));
            }
        }
        log::debug!("epoch {}: {mistakes} training mistakes", epoch + 1);
    }
    model.weights = avg.finish();

    let mut stage = TrainingStage::new(&options.datasets, options.epochs, base.is_some());
    stage.sentences = corpus.sentences.len();
    stage.tokens = token_count;
    model.provenance.push(stage);
    Ok(model)
}

/// Greedy left-to-right tagging; ties go to the lexicographically smallest
/// tag.
pub fn tag(model: &TaggerModel, sentence: &Sentence) -> Vec<String> {
    if model.tagset.is_empty() {
        return vec![crate::conllu::EMPTY.to_string(); sentence.tokens.len()];
    }
    let mut out: Vec<String> = Vec::with_capacity(sentence.tokens.len());
    for i in 0..sentence.tokens.len() {
        let ids: Vec<u32> = context_features(&sentence.tokens, i)
            .iter()
            .filter_map(|n| model.feature_id(n))
            .collect();
        let prev = model.feature_id(&prev_tag_feature(if i == 0 {
            None
        } else {
            Some(&out[i - 1])
        }));
        let best = argmax(&model.scores(&ids, prev));
        out.push(model.tagset[best].clone());
    }
    out
}

/// A copy of `doc` with the task's column replaced by predictions.
pub fn tag_document(model: &TaggerModel, doc: &Document) -> Document {
    let mut out = doc.clone();
    for s in &mut out.sentences {
        let tags = tag(model, s);
        for (t, label) in s.tokens.iter_mut().zip(&tags) {
            model.task.assign(t, label);
        }
    }
    out
}
