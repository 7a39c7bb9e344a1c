//! Context-free lemmatization from a word form and its part of speech.
//!
//! Training memorizes `(form, upos) -> lemma` counts and indexes the edit
//! script turning each form into its lemma by the form's final 1-5
//! characters. Lookup runs a fixed cascade: `SYM` gives `_`; a known
//! `(form, upos)` gives its most frequent lemma; otherwise the longest
//! suffix key (first with the same UPOS, then with any) whose best script
//! applies; otherwise the lowercased form itself.
//!
//! The wire format for a query is `form:UPOS`, e.g. `adducam:VERB`.
//!
//! # Model files
//!
//! JSON object with `format` (`"medlat-lemmatizer"`), `version` (1),
//! `lexicon` (`[form, upos, lemma, count]` rows), `scripts`
//! (`[suffix, upos, script, count]` rows), `provenance` and
//! `reference_config`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{is_valid_upos, Document, EMPTY};
use crate::normalize::{normalize_word, Ruleset};
use crate::provenance::TrainingStage;

const FORMAT: &str = "medlat-lemmatizer";
const VERSION: u32 = 1;
/// Longest form suffix used as a classifier key.
pub const MAX_SUFFIX: usize = 5;

#[derive(Debug, Error)]
pub enum LemmatizerError {
    #[error("ScriptIncompatible: {script} cannot apply to {form:?}")]
    ScriptIncompatible { script: String, form: String },
    #[error("EmptyCorpus: nothing to train on")]
    EmptyCorpus,
    #[error("InvalidQuery: {0}")]
    InvalidQuery(String),
    #[error("ModelFormat: {0}")]
    ModelFormat(String),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteriorEdit {
    /// Character offset into the form after prefix/suffix stripping.
    pub offset: usize,
    pub old: String,
    pub new: String,
}

/// Character-level transformation from a form to its lemma.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EditScript {
    pub strip_prefix: usize,
    pub prefix_add: String,
    pub strip_suffix: usize,
    pub suffix_add: String,
    pub interior: Vec<InteriorEdit>,
}

impl EditScript {
    pub fn identity() -> Self {
        EditScript::default()
    }

    pub fn is_identity(&self) -> bool {
        *self == EditScript::default()
    }

    /// Only touches the end of the word.
    pub fn suffix(strip: usize, add: impl Into<String>) -> Self {
        EditScript {
            strip_suffix: strip,
            suffix_add: add.into(),
            ..Default::default()
        }
    }
}

impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P{}+{}|S{}+{}",
            self.strip_prefix, self.prefix_add, self.strip_suffix, self.suffix_add
        )?;
        for e in &self.interior {
            write!(f, "|I{}:{}>{}", e.offset, e.old, e.new)?;
        }
        Ok(())
    }
}

/// Shortest shared tail kept by an interior edit. Shorter shared tails are
/// treated as inflection and rewritten with the rest of the ending.
pub const MIN_INTERIOR_TAIL: usize = 3;

/// The script keeping the longest shared prefix of `form` and `lemma` and,
/// when it is at least [`MIN_INTERIOR_TAIL`] long or there is no shared
/// prefix, the longest shared suffix.
///
/// With no shared prefix the differing start becomes a prefix edit; with a
/// long shared suffix the differing middle becomes one interior
/// replacement; otherwise everything after the shared prefix is a suffix
/// edit, which is what generalizes across Latin inflection.
pub fn derive_edit_script(form: &str, lemma: &str) -> EditScript {
    let f: Vec<char> = form.chars().collect();
    let l: Vec<char> = lemma.chars().collect();
    let prefix = f.iter().zip(&l).take_while(|(a, b)| a == b).count();
    let room = f.len().min(l.len()) - prefix;
    let suffix = f
        .iter()
        .rev()
        .zip(l.iter().rev())
        .take(room)
        .take_while(|(a, b)| a == b)
        .count();
    let f_mid = &f[prefix..f.len() - suffix];
    let l_mid: String = l[prefix..l.len() - suffix].iter().collect();
    if f_mid.is_empty() && l_mid.is_empty() {
        return EditScript::identity();
    }
    if suffix == 0 || (prefix > 0 && suffix < MIN_INTERIOR_TAIL) {
        let l_rest: String = l[prefix..].iter().collect();
        EditScript::suffix(f.len() - prefix, l_rest)
    } else if prefix == 0 {
        EditScript {
            strip_prefix: f_mid.len(),
            prefix_add: l_mid,
            ..Default::default()
        }
    } else {
        EditScript {
            interior: vec![InteriorEdit {
                offset: prefix,
                old: f_mid.iter().collect(),
                new: l_mid,
            }],
            ..Default::default()
        }
    }
}

/// Applies prefix, then suffix, then interior edits (left to right).
pub fn apply_edit_script(script: &EditScript, form: &str) -> Result<String, LemmatizerError> {
    let incompatible = || LemmatizerError::ScriptIncompatible {
        script: script.to_string(),
        form: form.to_string(),
    };
    let chars: Vec<char> = form.chars().collect();
    if script.strip_prefix + script.strip_suffix > chars.len() {
        return Err(incompatible());
    }
    let mut residue: Vec<char> = chars[script.strip_prefix..chars.len() - script.strip_suffix].to_vec();
    let mut shift: isize = 0;
    let mut last_end = 0usize;
    for e in &script.interior {
        if e.offset < last_end {
            return Err(incompatible());
        }
        let old: Vec<char> = e.old.chars().collect();
        let new: Vec<char> = e.new.chars().collect();
        let at = e.offset as isize + shift;
        if at < 0 {
            return Err(incompatible());
        }
        let at = at as usize;
        if at + old.len() > residue.len() || residue[at..at + old.len()] != old[..] {
            return Err(incompatible());
        }
        residue.splice(at..at + old.len(), new.iter().copied());
        shift += new.len() as isize - old.len() as isize;
        last_end = e.offset + old.len();
    }
    let mut out = String::with_capacity(form.len() + script.suffix_add.len());
    out.push_str(&script.prefix_add);
    out.extend(residue);
    out.push_str(&script.suffix_add);
    Ok(out)
}

/// A lemmatization request: a form and its (predicted) UPOS.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LemmaQuery {
    pub form: String,
    pub upos: String,
}

impl LemmaQuery {
    pub fn new(form: impl Into<String>, upos: impl Into<String>) -> Self {
        LemmaQuery {
            form: form.into(),
            upos: upos.into(),
        }
    }
}

impl fmt::Display for LemmaQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.form, self.upos)
    }
}

impl FromStr for LemmaQuery {
    type Err = LemmatizerError;

    /// Parses `form:UPOS`. Forms containing `:` cannot be expressed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_suffix('\r').unwrap_or(s);
        let (form, upos) = s
            .split_once(':')
            .ok_or_else(|| LemmatizerError::InvalidQuery(format!("{s:?} lacks ':'")))?;
        if upos.contains(':') {
            return Err(LemmatizerError::InvalidQuery(format!(
                "{s:?}: forms containing ':' are not supported"
            )));
        }
        if form.is_empty() {
            return Err(LemmatizerError::InvalidQuery(format!("{s:?}: empty form")));
        }
        if !is_valid_upos(upos) {
            return Err(LemmatizerError::InvalidQuery(format!("{s:?}: unknown UPOS {upos:?}")));
        }
        Ok(LemmaQuery::new(form, upos))
    }
}

/// Reference hyperparameters of the byte-level seq2seq model this
/// lemmatizer stands in for. Metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmatizerReferenceConfig {
    pub batch_size: u32,
    pub epochs: u32,
    pub input_sequence_length: u32,
    pub output_sequence_length: u32,
    pub learning_rate: f64,
}

impl Default for LemmatizerReferenceConfig {
    fn default() -> Self {
        LemmatizerReferenceConfig {
            batch_size: 128,
            epochs: 5,
            input_sequence_length: 48,
            output_sequence_length: 24,
            learning_rate: 0.001,
        }
    }
}

type Counts<K> = BTreeMap<K, u64>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmatizerModel {
    lexicon: BTreeMap<(String, String), Counts<String>>,
    scripts: BTreeMap<(String, String), Counts<EditScript>>,
    /// `scripts` summed over UPOS.
    any_upos: BTreeMap<String, Counts<EditScript>>,
    pub provenance: Vec<TrainingStage>,
    pub reference_config: LemmatizerReferenceConfig,
}

fn best_by<K: Ord + Clone>(counts: &Counts<K>, tie: impl Fn(&K) -> String) -> Option<(K, u64)> {
    let max = *counts.values().max()?;
    counts
        .iter()
        .filter(|(_, &c)| c == max)
        .min_by_key(|(k, _)| tie(k))
        .map(|(k, &c)| (k.clone(), c))
}

fn ranked(counts: &Counts<EditScript>) -> Vec<(&EditScript, u64)> {
    let mut v: Vec<(&EditScript, u64, String)> =
        counts.iter().map(|(s, &c)| (s, c, s.to_string())).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.2.cmp(&b.2)));
    v.into_iter().map(|(s, c, _)| (s, c)).collect()
}

fn suffixes(chars: &[char]) -> impl Iterator<Item = String> + '_ {
    (1..=chars.len().min(MAX_SUFFIX))
        .rev()
        .map(move |k| chars[chars.len() - k..].iter().collect())
}

impl LemmatizerModel {
    pub fn lexicon_len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn classifier_len(&self) -> usize {
        self.scripts.len()
    }

    /// Most frequent lemma and its count for a lowercased form and UPOS.
    pub fn lexicon_entry(&self, form: &str, upos: &str) -> Option<(String, u64)> {
        self.lexicon
            .get(&(form.to_string(), upos.to_string()))
            .and_then(|c| best_by(c, |l| l.clone()))
    }

    /// Scripts for a suffix key and UPOS, best first.
    pub fn ranked_scripts(&self, suffix: &str, upos: &str) -> Vec<(EditScript, u64)> {
        self.scripts
            .get(&(suffix.to_string(), upos.to_string()))
            .map(|c| ranked(c).into_iter().map(|(s, n)| (s.clone(), n)).collect())
            .unwrap_or_default()
    }

    fn add(&mut self, form: &str, upos: &str, lemma: &str, count: u64) {
        *self
            .lexicon
            .entry((form.to_string(), upos.to_string()))
            .or_default()
            .entry(lemma.to_string())
            .or_default() += count;
        let script = derive_edit_script(form, lemma);
        let chars: Vec<char> = form.chars().collect();
        for suf in suffixes(&chars) {
            *self
                .scripts
                .entry((suf, upos.to_string()))
                .or_default()
                .entry(script.clone())
                .or_default() += count;
        }
    }

    fn rebuild_any_upos(&mut self) {
        self.any_upos.clear();
        for ((suf, _), counts) in &self.scripts {
            let dst = self.any_upos.entry(suf.clone()).or_default();
            for (s, &c) in counts {
                *dst.entry(s.clone()).or_default() += c;
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), LemmatizerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LemmatizerError> {
        LemmatizerModel::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let lexicon = self
            .lexicon
            .iter()
            .flat_map(|((f, u), c)| c.iter().map(move |(l, &n)| (f.clone(), u.clone(), l.clone(), n)))
            .collect();
        let scripts = self
            .scripts
            .iter()
            .flat_map(|((f, u), c)| c.iter().map(move |(s, &n)| (f.clone(), u.clone(), s.clone(), n)))
            .collect();
        let file = ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            lexicon,
            scripts,
            provenance: self.provenance.clone(),
            reference_config: self.reference_config.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LemmatizerError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| LemmatizerError::ModelFormat(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(LemmatizerError::ModelFormat(format!(
                "expected {FORMAT} v{VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        let mut m = LemmatizerModel::default();
        for (f, u, l, n) in file.lexicon {
            if n == 0 {
                return Err(LemmatizerError::ModelFormat("zero lexicon count".into()));
            }
            *m.lexicon.entry((f, u)).or_default().entry(l).or_default() += n;
        }
        for (f, u, s, n) in file.scripts {
            *m.scripts.entry((f, u)).or_default().entry(s).or_default() += n;
        }
        m.rebuild_any_upos();
        m.provenance = file.provenance;
        m.reference_config = file.reference_config;
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    lexicon: Vec<(String, String, String, u64)>,
    scripts: Vec<(String, String, EditScript, u64)>,
    provenance: Vec<TrainingStage>,
    reference_config: LemmatizerReferenceConfig,
}

/// Counts a corpus into a new model, or on top of `base`.
///
/// `SYM` tokens and tokens without a lemma (`_`) are not counted. An empty
/// corpus is only accepted when continuing from a base model.
pub fn train_lemmatizer(
    corpus: &Document,
    base: Option<&LemmatizerModel>,
    datasets: &[String],
) -> Result<LemmatizerModel, LemmatizerError> {
    if corpus.token_count() == 0 && base.is_none() {
        return Err(LemmatizerError::EmptyCorpus);
    }
    let mut model = base.cloned().unwrap_or_default();
    for t in corpus.tokens() {
        if t.upos == "SYM" || t.lemma == EMPTY {
            continue;
        }
        model.add(&t.form.to_lowercase(), &t.upos, &t.lemma.to_lowercase(), 1);
    }
    model.rebuild_any_upos();
    let mut stage = TrainingStage::new(datasets, 1, base.is_some());
    stage.sentences = corpus.sentences.len();
    stage.tokens = corpus.token_count();
    model.provenance.push(stage);
    Ok(model)
}

pub fn lemmatize(model: &LemmatizerModel, query: &LemmaQuery) -> String {
    if query.upos == "SYM" {
        return EMPTY.to_string();
    }
    let form = query.form.to_lowercase();
    if let Some((lemma, _)) = model.lexicon_entry(&form, &query.upos) {
        return lemma;
    }
    let chars: Vec<char> = form.chars().collect();
    for suf in suffixes(&chars) {
        if let Some(counts) = model.scripts.get(&(suf, query.upos.clone())) {
            if let Some((script, _)) = ranked(counts).first() {
                if let Ok(lemma) = apply_edit_script(script, &form) {
                    return lemma;
                }
            }
        }
    }
    for suf in suffixes(&chars) {
        if let Some(counts) = model.any_upos.get(&suf) {
            if let Some((script, _)) = ranked(counts).first() {
                if let Ok(lemma) = apply_edit_script(script, &form) {
                    return lemma;
                }
            }
        }
    }
    form
}

/// A copy of `doc` with every lemma predicted from its form and the UPOS
/// currently in the document, optionally post-corrected by `ruleset`.
pub fn lemmatize_document(
    model: &LemmatizerModel,
    doc: &Document,
    ruleset: Option<&Ruleset>,
) -> Document {
    let mut out = doc.clone();
    for t in out.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
        let lemma = lemmatize(model, &LemmaQuery::new(t.form.clone(), t.upos.clone()));
        t.lemma = match ruleset {
            Some(rs) if lemma != EMPTY => normalize_word(rs, &lemma),
            _ => lemma,
        };
    }
    out
}
