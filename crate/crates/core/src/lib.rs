//! Annotation pipeline for Medieval Latin: CoNLL-U I/O, corpus registry and
//! statistics, orthographic normalization, part-of-speech and feature
//! tagging, lemmatization, training scenarios, evaluation and error analysis.

pub mod analysis;
pub mod conllu;
pub mod eval;
pub mod fixed;
pub mod lemmatizer;
pub mod normalize;
pub mod provenance;
pub mod registry;
pub mod scenario;
pub mod table;
pub mod tagger;

pub use conllu::{parse_conllu, serialize, Document, Feats, Sentence, Token};
pub use eval::{evaluate, EvalReport, Field};
pub use fixed::Fixed2;
pub use lemmatizer::{LemmaQuery, LemmatizerModel};
pub use normalize::Ruleset;
pub use provenance::TrainingStage;
pub use registry::{CorpusStats, Registry};
pub use scenario::{ResultGrid, RunPlan, ScenarioKind};
pub use tagger::{TagTask, TaggerModel};
