//! Dataset catalog, corpus statistics and cross-validation splits.
//!
//! A registry is read from a TOML file:
//!
//! ```toml
//! name = "mini"
//!
//! [[dataset]]
//! name = "Annals"                  # unique within the registry
//! kind = "efontes_genre"           # or "ud_treebank"
//! paths = ["annals/*.conllu"]      # globs, relative to this file
//! drop_unsupported = false         # drop multiword/empty-node lines
//! declared = { tokens = 895, sentences = 33, avg = "27.12" }
//! ```
//!
//! Datasets keep the order in which they appear in the file; splits and
//! scenario plans follow that order.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{parse_conllu_with, ConlluError, Document, ParseOptions};
use crate::fixed::Fixed2;

const REFERENCE_REGISTRY: &str = include_str!("../data/reference_registry.toml");

/// Default tolerance for [`validate_stats`].
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Default share of the training portion held out for validation.
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("UnknownDataset: {0:?}")]
    UnknownDataset(String),
    #[error("DuplicateDataset: {0:?}")]
    DuplicateDataset(String),
    #[error("NoPaths: dataset {0:?} lists no files")]
    NoPaths(String),
    #[error("NoMatchingFiles: dataset {dataset:?}, pattern {pattern:?}")]
    NoMatchingFiles { dataset: String, pattern: String },
    #[error("Io: {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{source} (in {path})")]
    Parse { path: PathBuf, source: ConlluError },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("TooFewDatasets: need at least 2, got {0}")]
    TooFewDatasets(usize),
    #[error("InvalidFraction: {0} is not in (0, 1)")]
    InvalidFraction(f64),
    #[error("InvalidTolerance: {0} must be positive")]
    InvalidTolerance(f64),
    #[error("DivisionByZero: {tokens} tokens declared over 0 sentences")]
    DivisionByZero { tokens: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    UdTreebank,
    EfontesGenre,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::UdTreebank => "ud_treebank",
            DatasetKind::EfontesGenre => "efontes_genre",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub tokens: u64,
    pub sentences: u64,
    #[serde(rename = "avg")]
    pub avg_tokens_per_sentence: Fixed2,
}

impl CorpusStats {
    /// Builds stats from counts, computing the average.
    pub fn from_counts(tokens: u64, sentences: u64) -> Self {
        CorpusStats {
            tokens,
            sentences,
            avg_tokens_per_sentence: Fixed2::ratio(tokens, sentences).unwrap_or(Fixed2::ZERO),
        }
    }

    /// Field-wise sum with the average recomputed.
    pub fn combine(self, other: CorpusStats) -> CorpusStats {
        CorpusStats::from_counts(self.tokens + other.tokens, self.sentences + other.sentences)
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} tokens, {} sentences, {} avg",
            self.tokens, self.sentences, self.avg_tokens_per_sentence
        )
    }
}

pub fn compute_stats(doc: &Document) -> CorpusStats {
    CorpusStats::from_counts(doc.token_count() as u64, doc.sentences.len() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatsVerdict {
    Consistent,
    Inconsistent {
        expected_avg: Fixed2,
        /// |declared avg - tokens/sentences|, unrounded.
        deviation: f64,
    },
}

impl StatsVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, StatsVerdict::Consistent)
    }
}

/// Checks a declared `(tokens, sentences, avg)` triple for arithmetic
/// consistency.
pub fn validate_stats(declared: &CorpusStats, tolerance: f64) -> Result<StatsVerdict, RegistryError> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(RegistryError::InvalidTolerance(tolerance));
    }
    let actual = if declared.sentences == 0 {
        if declared.tokens > 0 {
            return Err(RegistryError::DivisionByZero {
                tokens: declared.tokens,
            });
        }
        0.0
    } else {
        declared.tokens as f64 / declared.sentences as f64
    };
    let deviation = (declared.avg_tokens_per_sentence.to_f64() - actual).abs();
    if deviation > tolerance {
        Ok(StatsVerdict::Inconsistent {
            expected_avg: Fixed2::ratio(declared.tokens, declared.sentences).unwrap_or(Fixed2::ZERO),
            deviation,
        })
    } else {
        Ok(StatsVerdict::Consistent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub kind: DatasetKind,
    /// File paths or glob patterns, relative to the registry's base directory.
    #[serde(default)]
    pub paths: Vec<String>,
    #[serde(default)]
    pub declared: Option<CorpusStats>,
    #[serde(default)]
    pub drop_unsupported: bool,
}

impl DatasetDescriptor {
    pub fn new(name: impl Into<String>, kind: DatasetKind) -> Self {
        DatasetDescriptor {
            name: name.into(),
            kind,
            paths: Vec::new(),
            declared: None,
            drop_unsupported: false,
        }
    }

    pub fn with_paths<I, S>(mut self, paths: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.paths = paths.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_declared(mut self, stats: CorpusStats) -> Self {
        self.declared = Some(stats);
        self
    }
}

#[derive(Deserialize)]
struct RegistryFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default, rename = "dataset")]
    datasets: Vec<DatasetDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    pub name: String,
    base_dir: PathBuf,
    datasets: Vec<DatasetDescriptor>,
}

impl Registry {
    pub fn new(
        name: impl Into<String>,
        base_dir: impl Into<PathBuf>,
        datasets: Vec<DatasetDescriptor>,
    ) -> Result<Self, RegistryError> {
        let mut seen = HashSet::new();
        for d in &datasets {
            if !seen.insert(d.name.as_str()) {
                return Err(RegistryError::DuplicateDataset(d.name.clone()));
            }
        }
        Ok(Registry {
            name: name.into(),
            base_dir: base_dir.into(),
            datasets,
        })
    }

    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let file: RegistryFile =
            toml::from_str(text).map_err(|e| RegistryError::InvalidConfig(e.to_string()))?;
        Registry::new(
            file.name.unwrap_or_else(|| "registry".to_string()),
            base_dir,
            file.datasets,
        )
    }

    /// Reads a registry file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Registry::from_toml_str(&text, base)
    }

    /// The five UD treebanks and five genres with their published figures.
    pub fn reference() -> Self {
        Registry::from_toml_str(REFERENCE_REGISTRY, ".").expect("bundled registry is valid")
    }

    pub fn datasets(&self) -> &[DatasetDescriptor] {
        &self.datasets
    }

    pub fn get(&self, name: &str) -> Option<&DatasetDescriptor> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn names_of_kind(&self, kind: DatasetKind) -> Vec<String> {
        self.datasets
            .iter()
            .filter(|d| d.kind == kind)
            .map(|d| d.name.clone())
            .collect()
    }

    pub fn genres(&self) -> Vec<String> {
        self.names_of_kind(DatasetKind::EfontesGenre)
    }

    pub fn ud_treebanks(&self) -> Vec<String> {
        self.names_of_kind(DatasetKind::UdTreebank)
    }

    /// Expands a dataset's patterns into concrete files. Each pattern's
    /// matches are sorted; patterns keep their listed order.
    pub fn resolve_paths(&self, name: &str) -> Result<Vec<PathBuf>, RegistryError> {
        let d = self
            .get(name)
            .ok_or_else(|| RegistryError::UnknownDataset(name.to_string()))?;
        if d.paths.is_empty() {
            return Err(RegistryError::NoPaths(name.to_string()));
        }
        let mut out = Vec::new();
        for pattern in &d.paths {
            let full = self.base_dir.join(pattern);
            let full_str = full.to_string_lossy().into_owned();
            let mut matches: Vec<PathBuf> = glob::glob(&full_str)
                .map_err(|e| RegistryError::InvalidConfig(format!("{pattern:?}: {e}")))?
                .filter_map(Result::ok)
                .collect();
            if matches.is_empty() {
                return Err(RegistryError::NoMatchingFiles {
                    dataset: name.to_string(),
                    pattern: pattern.clone(),
                });
            }
            matches.sort();
            out.extend(matches);
        }
        Ok(out)
    }

    /// Parses every file of a dataset and concatenates them in path order.
    pub fn load_dataset(&self, name: &str) -> Result<Document, RegistryError> {
        let d = self
            .get(name)
            .ok_or_else(|| RegistryError::UnknownDataset(name.to_string()))?;
        let options = ParseOptions {
            drop_unsupported: d.drop_unsupported,
        };
        let mut doc = Document::new(name, Vec::new());
        for path in self.resolve_paths(name)? {
            let text = std::fs::read_to_string(&path).map_err(|e| RegistryError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let part = parse_conllu_with(&text, &path.to_string_lossy(), options).map_err(
                |source| RegistryError::Parse {
                    path: path.clone(),
                    source,
                },
            )?;
            doc.provenance.push(format!("read {}", path.display()));
            doc.extend(part);
        }
        Ok(doc)
    }
}

/// One cross-validation fold: a held-out genre and the genres trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_dataset: String,
    pub train_datasets: Vec<String>,
    pub validation_fraction: f64,
}

/// Leave-one-out folds, one per genre, in the given order.
pub fn make_cv_splits(
    genres: &[String],
    validation_fraction: f64,
) -> Result<Vec<SplitPlan>, RegistryError> {
    if genres.len() < 2 {
        return Err(RegistryError::TooFewDatasets(genres.len()));
    }
    check_fraction(validation_fraction)?;
    Ok(genres
        .iter()
        .map(|test| SplitPlan {
            test_dataset: test.clone(),
            train_datasets: genres.iter().filter(|g| *g != test).cloned().collect(),
            validation_fraction,
        })
        .collect())
}

fn check_fraction(f: f64) -> Result<(), RegistryError> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(RegistryError::InvalidFraction(f))
    }
}

/// Splits off every k-th sentence (k = round(1 / fraction), at least 2) as
/// validation data. Returns `(train, validation)`.
pub fn split_validation(
    doc: &Document,
    validation_fraction: f64,
) -> Result<(Document, Document), RegistryError> {
    check_fraction(validation_fraction)?;
    let k = ((1.0 / validation_fraction).round() as usize).max(2);
    let mut train = Document::new(doc.source_name.clone(), Vec::new());
    let mut validation = Document::new(format!("{}#validation", doc.source_name), Vec::new());
    train.provenance = doc.provenance.clone();
    for (i, s) in doc.sentences.iter().enumerate() {
        if i % k == k - 1 {
            validation.sentences.push(s.clone());
        } else {
            train.sentences.push(s.clone());
        }
    }
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::Sentence;

    fn doc_with(lengths: &[usize]) -> Document {
        let sentences = lengths
            .iter()
            .map(|&n| {
                let triples: Vec<(String, String, String)> = (0..n)
                    .map(|i| (format!("w{i}"), format!("w{i}"), "X".to_string()))
                    .collect();
                Sentence::from_triples(&triples)
            })
            .collect();
        Document::new("t", sentences)
    }

    fn stats(tokens: u64, sentences: u64, avg: &str) -> CorpusStats {
        CorpusStats {
            tokens,
            sentences,
            avg_tokens_per_sentence: avg.parse().unwrap(),
        }
    }

    #[test]
    fn compute_stats_examples() {
        // 33 sentences totalling 895 tokens
        let mut lengths = vec![27usize; 33];
        lengths[0] += 895 - 27 * 33;
        let s = compute_stats(&doc_with(&lengths));
        assert_eq!(s, stats(895, 33, "27.12"));
        assert_eq!(compute_stats(&doc_with(&[])), stats(0, 0, "0.00"));
        assert_eq!(compute_stats(&doc_with(&[7])), stats(7, 1, "7.00"));
    }

    #[test]
    fn validate_stats_examples() {
        assert_eq!(
            validate_stats(&stats(8994, 298, "30.18"), 0.05).unwrap(),
            StatsVerdict::Consistent
        );
        match validate_stats(&stats(7189, 389, "16.48"), 0.05).unwrap() {
            StatsVerdict::Inconsistent { expected_avg, .. } => {
                assert_eq!(expected_avg.to_string(), "18.48")
            }
            v => panic!("{v:?}"),
        }
        match validate_stats(&stats(390_819, 7289, "26.64"), 0.05).unwrap() {
            StatsVerdict::Inconsistent { expected_avg, .. } => {
                assert_eq!(expected_avg.to_string(), "53.62")
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn validate_stats_errors() {
        assert!(matches!(
            validate_stats(&stats(5, 0, "0.00"), 0.05),
            Err(RegistryError::DivisionByZero { tokens: 5 })
        ));
        assert!(validate_stats(&stats(0, 0, "0.00"), 0.05).unwrap().is_consistent());
        assert!(matches!(
            validate_stats(&stats(1, 1, "1.00"), 0.0),
            Err(RegistryError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn cv_splits() {
        let genres: Vec<String> = ["A", "B", "C", "D", "E"].iter().map(|s| s.to_string()).collect();
        let plans = make_cv_splits(&genres, 0.1).unwrap();
        assert_eq!(plans.len(), 5);
        assert_eq!(plans[0].test_dataset, "A");
        assert_eq!(plans[0].train_datasets, vec!["B", "C", "D", "E"]);

        let two = make_cv_splits(&genres[..2], 0.1).unwrap();
        assert_eq!(two[0].train_datasets, vec!["B"]);
        assert_eq!(two[1].train_datasets, vec!["A"]);

        assert!(matches!(
            make_cv_splits(&genres[..1], 0.1),
            Err(RegistryError::TooFewDatasets(1))
        ));
        assert!(matches!(
            make_cv_splits(&genres, 1.0),
            Err(RegistryError::InvalidFraction(_))
        ));
    }

    #[test]
    fn validation_split_takes_every_kth_sentence() {
        let doc = doc_with(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
        let (train, val) = split_validation(&doc, 0.25).unwrap();
        assert_eq!(val.sentences.len(), 3);
        assert_eq!(train.sentences.len(), 9);
        let val_lengths: Vec<usize> = val.sentences.iter().map(Sentence::len).collect();
        assert_eq!(val_lengths, vec![4, 8, 12]);
    }

    #[test]
    fn reference_registry_contents() {
        let r = Registry::reference();
        assert_eq!(r.genres(), vec!["Annals", "Biography", "Normative", "Proceedings", "Science"]);
        assert_eq!(r.ud_treebanks(), vec!["PROIEL", "Perseus", "LLCT", "ITTB", "UDante"]);
        assert!(r.datasets().iter().all(|d| d.declared.is_some()));
    }

    #[test]
    fn duplicate_names_rejected() {
        let ds = vec![
            DatasetDescriptor::new("A", DatasetKind::EfontesGenre),
            DatasetDescriptor::new("A", DatasetKind::UdTreebank),
        ];
        assert!(matches!(
            Registry::new("x", ".", ds),
            Err(RegistryError::DuplicateDataset(_))
        ));
    }

    #[test]
    fn unknown_dataset() {
        let r = Registry::reference();
        assert!(matches!(
            r.load_dataset("Poetry"),
            Err(RegistryError::UnknownDataset(_))
        ));
        assert!(matches!(r.load_dataset("ITTB"), Err(RegistryError::NoPaths(_))));
    }
}
