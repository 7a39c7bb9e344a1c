//! Training scenarios: planning, staged execution and result comparison.
//!
//! Four scenarios are planned over a registry of genres and UD treebanks:
//!
//! * `baseline`: leave-one-genre-out folds trained on the other genres.
//! * `ud_all`: one model per task trained on every UD treebank, tested on
//!   every genre.
//! * `ud_plus_<ud>`: the `ud_all` stage followed by a stage on one UD
//!   treebank, tested on every genre.
//! * `ud_plus_efontes`: the `ud_all` stage followed by the fold's training
//!   genres.
//!
//! A fifth, `ud_<ud>_plus_efontes`, chains all three stages and is only
//! planned when explicitly allowed.
//!
//! # Results file
//!
//! Tab-separated, one row per evaluated `(run_id, genre)`:
//!
//! ```text
//! #medlat-results	v1
//! run_id	genre	task	accuracy
//! baseline/upos/test=Annals	Annals	upos	96.20
//! ```
//!
//! Rows are kept sorted by `(run_id, genre)`; writing a row whose key is
//! already present replaces it.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::conllu::Document;
use crate::eval::{evaluate, EvalError, Field};
use crate::fixed::Fixed2;
use crate::lemmatizer::{lemmatize_document, train_lemmatizer, LemmatizerError, LemmatizerModel};
use crate::registry::{make_cv_splits, split_validation, Registry, RegistryError};
use crate::table::{render, render_machine};
use crate::tagger::{tag_document, train, TagTask, TaggerError, TaggerModel, TrainOptions};

pub const RESULTS_HEADER: &str = "#medlat-results\tv1";
const RESULTS_COLUMNS: &str = "run_id\tgenre\ttask\taccuracy";

/// Published per-genre accuracies of the reference system, in results-file
/// format. Only cells whose scenario is unambiguous are included.
pub const REFERENCE_RESULTS: &str = include_str!("../data/reference_results.tsv");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("MissingDataset: {0}")]
    MissingDataset(String),
    #[error("ExtendedScenarioDisabled: {0} must be enabled explicitly")]
    ExtendedScenarioDisabled(String),
    #[error("NoTasks: a scenario needs at least one task")]
    NoTasks,
    #[error("DuplicateRunId: {0}")]
    DuplicateRunId(String),
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
    #[error("InvalidResults: line {line}: {reason}")]
    InvalidResults { line: usize, reason: String },
    #[error("EmptyGrid: nothing to compare")]
    EmptyGrid,
    #[error("RunFailed: {run_id}: {source}")]
    Run {
        run_id: String,
        source: Box<ScenarioError>,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Lemmatizer(#[from] LemmatizerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("Io: {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Baseline,
    UdAll,
    /// `None` plans one variant per registered UD treebank.
    UdPlusSpecific(Option<String>),
    UdPlusEfontes,
    /// Extended: all UD, then one UD treebank, then the fold's genres.
    UdSpecificPlusEfontes(Option<String>),
}

impl ScenarioKind {
    /// The four scenarios planned by default.
    pub fn standard() -> Vec<ScenarioKind> {
        vec![
            ScenarioKind::Baseline,
            ScenarioKind::UdAll,
            ScenarioKind::UdPlusSpecific(None),
            ScenarioKind::UdPlusEfontes,
        ]
    }

    pub fn is_extended(&self) -> bool {
        matches!(self, ScenarioKind::UdSpecificPlusEfontes(_))
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::Baseline => f.write_str("baseline"),
            ScenarioKind::UdAll => f.write_str("ud_all"),
            ScenarioKind::UdPlusSpecific(None) => f.write_str("ud_plus_specific"),
            ScenarioKind::UdPlusSpecific(Some(ud)) => write!(f, "ud_plus_specific={ud}"),
            ScenarioKind::UdPlusEfontes => f.write_str("ud_plus_efontes"),
            ScenarioKind::UdSpecificPlusEfontes(None) => f.write_str("ud_specific_plus_efontes"),
            ScenarioKind::UdSpecificPlusEfontes(Some(ud)) => {
                write!(f, "ud_specific_plus_efontes={ud}")
            }
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = ScenarioError;

    /// Accepts the names printed by `Display`; `=NAME` selects one UD
    /// treebank.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, ud) = match s.trim().split_once('=') {
            Some((n, u)) if !u.trim().is_empty() => (n.trim(), Some(u.trim().to_string())),
            Some(_) => return Err(ScenarioError::InvalidScenario(format!("{s:?}: empty UD name"))),
            None => (s.trim(), None),
        };
        let kind = match (name, ud) {
            ("baseline", None) => ScenarioKind::Baseline,
            ("ud_all", None) => ScenarioKind::UdAll,
            ("ud_plus_specific", ud) => ScenarioKind::UdPlusSpecific(ud),
            ("ud_plus_efontes", None) => ScenarioKind::UdPlusEfontes,
            ("ud_specific_plus_efontes", ud) => ScenarioKind::UdSpecificPlusEfontes(ud),
            _ => return Err(ScenarioError::InvalidScenario(format!("unknown scenario {s:?}"))),
        };
        Ok(kind)
    }
}

impl<'de> Deserialize<'de> for ScenarioKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One training stage. `cv` marks stages trained on cross-validation
/// genres, from which validation data may be carved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub datasets: Vec<String>,
    pub cv: bool,
    /// Overrides the execution-wide epoch count for this stage.
    pub epochs: Option<usize>,
}

impl Stage {
    pub fn new(datasets: Vec<String>, cv: bool) -> Self {
        Stage {
            datasets,
            cv,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingRun {
    pub run_id: String,
    /// Scenario label heading the run id, e.g. `ud_plus_proiel`.
    pub label: String,
    pub task: Field,
    pub stages: Vec<Stage>,
    pub test_datasets: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunPlan {
    pub runs: Vec<TrainingRun>,
}

impl RunPlan {
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of `(run, test dataset)` evaluations.
    pub fn evaluation_count(&self) -> usize {
        self.runs.iter().map(|r| r.test_datasets.len()).sum()
    }

    /// Appends another plan, rejecting repeated run ids.
    pub fn merge(&mut self, other: RunPlan) -> Result<(), ScenarioError> {
        self.runs.extend(other.runs);
        check_unique(&self.runs)
    }

    /// Runs per scenario label, in first-appearance order.
    pub fn counts_by_label(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for r in &self.runs {
            match out.iter_mut().find(|(l, _)| *l == r.label) {
                Some((_, n)) => *n += 1,
                None => out.push((r.label.clone(), 1)),
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<String>> {
        self.runs
            .iter()
            .map(|r| {
                vec![
                    r.run_id.clone(),
                    r.task.to_string(),
                    r.stages
                        .iter()
                        .map(|s| s.datasets.join("+"))
                        .collect::<Vec<_>>()
                        .join(" > "),
                    r.test_datasets.join(","),
                ]
            })
            .collect()
    }

    pub const HEADERS: [&'static str; 4] = ["run_id", "task", "stages", "test"];

    pub fn render_text(&self) -> String {
        let mut out = render(&Self::HEADERS, &self.to_rows());
        out.push_str(&format!(
            "{} runs, {} evaluations\n",
            self.len(),
            self.evaluation_count()
        ));
        out
    }

    pub fn render_machine(&self) -> String {
        render_machine("plan", &Self::HEADERS, &self.to_rows())
    }
}

fn check_unique(runs: &[TrainingRun]) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for r in runs {
        if !seen.insert(r.run_id.as_str()) {
            return Err(ScenarioError::DuplicateRunId(r.run_id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanOptions {
    /// Permit `ud_specific_plus_efontes`.
    pub allow_extended: bool,
}

fn ud_label(ud: &str) -> String {
    ud.to_lowercase()
}

fn selected_uds(registry: &Registry, ud: &Option<String>) -> Result<Vec<String>, ScenarioError> {
    let all = registry.ud_treebanks();
    match ud {
        None if all.is_empty() => Err(ScenarioError::MissingDataset("no UD treebank registered".into())),
        None => Ok(all),
        Some(name) if all.contains(name) => Ok(vec![name.clone()]),
        Some(name) => Err(ScenarioError::MissingDataset(name.clone())),
    }
}

/// Expands a scenario into training runs for each task.
pub fn plan(
    kind: &ScenarioKind,
    tasks: &[Field],
    registry: &Registry,
    options: PlanOptions,
) -> Result<RunPlan, ScenarioError> {
    if tasks.is_empty() {
        return Err(ScenarioError::NoTasks);
    }
    if kind.is_extended() && !options.allow_extended {
        return Err(ScenarioError::ExtendedScenarioDisabled(kind.to_string()));
    }
    let genres = registry.genres();
    let uds = registry.ud_treebanks();
    let need_genres = || {
        if genres.is_empty() {
            Err(ScenarioError::MissingDataset("no genre registered".into()))
        } else {
            Ok(())
        }
    };
    let need_uds = || {
        if uds.is_empty() {
            Err(ScenarioError::MissingDataset("no UD treebank registered".into()))
        } else {
            Ok(())
        }
    };
    need_genres()?;
    let folds = || -> Result<_, ScenarioError> {
        Ok(make_cv_splits(&genres, crate::registry::DEFAULT_VALIDATION_FRACTION)?)
    };

    let mut runs = Vec::new();
    let single = |label: &str, task: Field, stages: Vec<Stage>| TrainingRun {
        run_id: format!("{label}/{task}"),
        label: label.to_string(),
        task,
        stages,
        test_datasets: genres.clone(),
    };
    let cv_runs = |label: &str, prefix: Vec<Stage>, runs: &mut Vec<TrainingRun>| -> Result<(), ScenarioError> {
        for task in tasks {
            for fold in folds()? {
                let mut stages = prefix.clone();
                stages.push(Stage::new(fold.train_datasets.clone(), true));
                runs.push(TrainingRun {
                    run_id: format!("{label}/{task}/test={}", fold.test_dataset),
                    label: label.to_string(),
                    task: *task,
                    stages,
                    test_datasets: vec![fold.test_dataset.clone()],
                });
            }
        }
        Ok(())
    };

    match kind {
        ScenarioKind::Baseline => cv_runs("baseline", Vec::new(), &mut runs)?,
        ScenarioKind::UdAll => {
            need_uds()?;
            for &task in tasks {
                runs.push(single("ud_all", task, vec![Stage::new(uds.clone(), false)]));
            }
        }
        ScenarioKind::UdPlusSpecific(ud) => {
            for name in selected_uds(registry, ud)? {
                let label = format!("ud_plus_{}", ud_label(&name));
                for &task in tasks {
                    runs.push(single(
                        &label,
                        task,
                        vec![Stage::new(uds.clone(), false), Stage::new(vec![name.clone()], false)],
                    ));
                }
            }
        }
        ScenarioKind::UdPlusEfontes => {
            need_uds()?;
            cv_runs("ud_plus_efontes", vec![Stage::new(uds.clone(), false)], &mut runs)?;
        }
        ScenarioKind::UdSpecificPlusEfontes(ud) => {
            for name in selected_uds(registry, ud)? {
                let label = format!("ud_{}_plus_efontes", ud_label(&name));
                let prefix = vec![Stage::new(uds.clone(), false), Stage::new(vec![name], false)];
                cv_runs(&label, prefix, &mut runs)?;
            }
        }
    }
    check_unique(&runs)?;
    Ok(RunPlan { runs })
}

/// Plans several scenarios into one plan.
pub fn plan_all(
    kinds: &[ScenarioKind],
    tasks: &[Field],
    registry: &Registry,
    options: PlanOptions,
) -> Result<RunPlan, ScenarioError> {
    let mut out = RunPlan::default();
    for k in kinds {
        out.merge(plan(k, tasks, registry, options)?)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecuteOptions {
    pub seed: u64,
    pub epochs: usize,
    /// Carve this fraction of every cross-validation stage off as
    /// validation data and record the accuracy on it.
    pub validation_fraction: Option<f64>,
    /// Models go to `out_dir/models`, results to `out_dir/results.tsv`.
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        ExecuteOptions {
            seed: 0,
            epochs: 10,
            validation_fraction: None,
            out_dir: None,
            jobs: 1,
        }
    }
}

/// 64-bit FNV-1a.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// The seed of a run: the base seed mixed with a hash of the run id, so a
/// run reproduces regardless of which other runs execute.
pub fn run_seed(base: u64, run_id: &str) -> u64 {
    base ^ fnv1a(run_id)
}

/// File name of a run's persisted model.
pub fn model_file_name(run_id: &str) -> String {
    let safe: String = run_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '.' })
        .collect();
    format!("{safe}.json")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResultRow {
    pub run_id: String,
    pub genre: String,
    pub task: Field,
    pub accuracy: Fixed2,
}

impl ResultRow {
    pub fn label(&self) -> &str {
        self.run_id.split('/').next().unwrap_or(&self.run_id)
    }
}

enum Trained {
    Tagger(TaggerModel),
    Lemmatizer(LemmatizerModel),
}

impl Trained {
    fn predict(&self, doc: &Document) -> Document {
        match self {
            Trained::Tagger(m) => tag_document(m, doc),
            Trained::Lemmatizer(m) => lemmatize_document(m, doc, None),
        }
    }

    fn to_json(&self) -> String {
        match self {
            Trained::Tagger(m) => m.to_json(),
            Trained::Lemmatizer(m) => m.to_json(),
        }
    }

    fn record_validation(&mut self, acc: Fixed2) {
        let stage = match self {
            Trained::Tagger(m) => m.provenance.last_mut(),
            Trained::Lemmatizer(m) => m.provenance.last_mut(),
        };
        if let Some(s) = stage {
            s.validation_accuracy = Some(acc);
        }
    }
}

fn concat(docs: &BTreeMap<String, Document>, names: &[String]) -> Document {
    let mut out = Document::new(names.join("+"), Vec::new());
    for n in names {
        out.extend(docs[n].clone());
    }
    out
}

fn train_stage(
    task: Field,
    corpus: &Document,
    datasets: &[String],
    epochs: usize,
    seed: u64,
    base: Option<Trained>,
) -> Result<Trained, ScenarioError> {
    Ok(match task {
        Field::Lemma => {
            let base = match base {
                Some(Trained::Lemmatizer(m)) => Some(m),
                _ => None,
            };
            Trained::Lemmatizer(train_lemmatizer(corpus, base.as_ref(), datasets)?)
        }
        Field::Upos | Field::Ufeats => {
            let tag_task = if task == Field::Upos { TagTask::Upos } else { TagTask::Ufeats };
            let base = match base {
                Some(Trained::Tagger(m)) => Some(m),
                _ => None,
            };
            let opts = TrainOptions::new(tag_task, epochs, seed).datasets(datasets.iter().cloned());
            Trained::Tagger(train(corpus, &opts, base.as_ref())?)
        }
    })
}

fn execute_run(
    run: &TrainingRun,
    docs: &BTreeMap<String, Document>,
    options: &ExecuteOptions,
) -> Result<Vec<ResultRow>, ScenarioError> {
    log::info!("run {}", run.run_id);
    let seed = run_seed(options.seed, &run.run_id);
    let mut model: Option<Trained> = None;
    for (i, stage) in run.stages.iter().enumerate() {
        let corpus = concat(docs, &stage.datasets);
        let epochs = stage.epochs.unwrap_or(options.epochs);
        let stage_seed = seed.wrapping_add(i as u64);
        match (stage.cv, options.validation_fraction) {
            (true, Some(f)) => {
                let (train_part, validation) = split_validation(&corpus, f)?;
                let mut m = train_stage(run.task, &train_part, &stage.datasets, epochs, stage_seed, model.take())?;
                if validation.token_count() > 0 {
                    let report = evaluate(&validation, &m.predict(&validation), &[run.task])?;
                    m.record_validation(report.accuracy[&run.task]);
                }
                model = Some(m);
            }
            _ => {
                model = Some(train_stage(run.task, &corpus, &stage.datasets, epochs, stage_seed, model.take())?);
            }
        }
    }
    let model = model.ok_or_else(|| ScenarioError::InvalidScenario(format!("{} has no stages", run.run_id)))?;
    if let Some(dir) = &options.out_dir {
        let path = dir.join("models").join(model_file_name(&run.run_id));
        std::fs::write(&path, model.to_json()).map_err(|e| io_err(&path, e))?;
    }
    let mut rows = Vec::with_capacity(run.test_datasets.len());
    for genre in &run.test_datasets {
        let gold = &docs[genre];
        let report = evaluate(gold, &model.predict(gold), &[run.task])?;
        rows.push(ResultRow {
            run_id: run.run_id.clone(),
            genre: genre.clone(),
            task: run.task,
            accuracy: report.accuracy[&run.task],
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub rows: Vec<ResultRow>,
    pub grid: ResultGrid,
    pub results_path: Option<PathBuf>,
}

/// Trains and evaluates every run of `plan`. Each stage continues from the
/// previous stage's model. Runs execute on up to `options.jobs` threads;
/// results do not depend on the thread count.
pub fn execute(plan: &RunPlan, registry: &Registry, options: &ExecuteOptions) -> Result<Execution, ScenarioError> {
    check_unique(&plan.runs)?;
    let mut names = BTreeSet::new();
    for r in &plan.runs {
        if r.stages.is_empty() || r.stages.iter().any(|s| s.datasets.is_empty()) {
            return Err(ScenarioError::InvalidScenario(format!("{} has an empty stage", r.run_id)));
        }
        names.extend(r.stages.iter().flat_map(|s| s.datasets.iter().cloned()));
        names.extend(r.test_datasets.iter().cloned());
    }
    let mut docs = BTreeMap::new();
    for n in names {
        if registry.get(&n).is_none() {
            return Err(ScenarioError::MissingDataset(n));
        }
        let doc = registry.load_dataset(&n)?;
        docs.insert(n, doc);
    }
    if let Some(dir) = &options.out_dir {
        let models = dir.join("models");
        std::fs::create_dir_all(&models).map_err(|e| io_err(&models, e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::InvalidScenario(e.to_string()))?;
    let per_run: Vec<Result<Vec<ResultRow>, ScenarioError>> = pool.install(|| {
        plan.runs
            .par_iter()
            .map(|run| {
                execute_run(run, &docs, options).map_err(|e| ScenarioError::Run {
                    run_id: run.run_id.clone(),
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_run {
        rows.extend(r?);
    }
    rows.sort();

    let results_path = match &options.out_dir {
        Some(dir) => {
            let path = dir.join("results.tsv");
            upsert_results(&path, &rows)?;
            Some(path)
        }
        None => None,
    };
    Ok(Execution {
        grid: ResultGrid::from_rows(&rows),
        rows,
        results_path,
    })
}

pub fn format_results(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort();
    let mut out = format!("{RESULTS_HEADER}\n{RESULTS_COLUMNS}\n");
    for r in sorted {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", r.run_id, r.genre, r.task, r.accuracy));
    }
    out
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>, ScenarioError> {
    let bad = |line: usize, reason: String| ScenarioError::InvalidResults { line, reason };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => return Err(bad(1, format!("expected {RESULTS_HEADER:?}"))),
    }
    match lines.next() {
        Some((_, h)) if h == RESULTS_COLUMNS => {}
        _ => return Err(bad(2, "missing column header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(bad(i + 1, format!("expected 4 columns, found {}", cols.len())));
        }
        let task: Field = cols[2].parse().map_err(|e: String| bad(i + 1, e))?;
        let accuracy: Fixed2 = cols[3].parse().map_err(|e| bad(i + 1, format!("{e}")))?;
        if accuracy < Fixed2::ZERO || accuracy > Fixed2::HUNDRED {
            return Err(bad(i + 1, format!("accuracy {accuracy} outside [0, 100]")));
        }
        out.push(ResultRow {
            run_id: cols[0].to_string(),
            genre: cols[1].to_string(),
            task,
            accuracy,
        });
    }
    Ok(out)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_results(&text)
}

/// Merges `rows` into the results file at `path`, replacing rows with the
/// same `(run_id, genre)`.
pub fn upsert_results(path: &Path, rows: &[ResultRow]) -> Result<(), ScenarioError> {
    let mut merged: BTreeMap<(String, String), ResultRow> = BTreeMap::new();
    if path.exists() {
        for r in read_results(path)? {
            merged.insert((r.run_id.clone(), r.genre.clone()), r);
        }
    }
    for r in rows {
        merged.insert((r.run_id.clone(), r.genre.clone()), r.clone());
    }
    let all: Vec<ResultRow> = merged.into_values().collect();
    std::fs::write(path, format_results(&all)).map_err(|e| io_err(path, e))
}

/// Accuracy per `(scenario label, genre, task)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultGrid {
    pub cells: BTreeMap<(String, String, Field), Fixed2>,
}

/// Display order of scenario labels: baseline, ud_all, single-UD variants,
/// ud_plus_efontes, then extended variants.
fn label_rank(label: &str) -> (u8, &str) {
    let rank = match label {
        "baseline" => 0,
        "ud_all" => 1,
        "ud_plus_efontes" => 3,
        l if l.ends_with("_plus_efontes") => 4,
        l if l.starts_with("ud_plus_") => 2,
        _ => 5,
    };
    (rank, label)
}

impl ResultGrid {
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        let mut grid = ResultGrid::default();
        for r in rows {
            grid.insert(r.label(), &r.genre, r.task, r.accuracy);
        }
        grid
    }

    pub fn insert(&mut self, label: &str, genre: &str, task: Field, accuracy: Fixed2) {
        self.cells
            .insert((label.to_string(), genre.to_string(), task), accuracy);
    }

    pub fn get(&self, label: &str, genre: &str, task: Field) -> Option<Fixed2> {
        self.cells
            .get(&(label.to_string(), genre.to_string(), task))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.cells.keys().map(|(l, _, _)| l).collect();
        let mut v: Vec<String> = set.into_iter().cloned().collect();
        v.sort_by(|a, b| label_rank(a).cmp(&label_rank(b)));
        v
    }

    /// `(genre, task)` columns, genres alphabetical, tasks in field order.
    pub fn columns(&self) -> Vec<(String, Field)> {
        let set: BTreeSet<(String, Field)> = self
            .cells
            .keys()
            .map(|(_, g, t)| (g.clone(), *t))
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Best,
    Worst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnVerdict {
    pub genre: String,
    pub task: Field,
    pub best: Fixed2,
    pub worst: Fixed2,
    pub best_labels: Vec<String>,
    pub worst_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonReport {
    pub grid: ResultGrid,
    pub columns: Vec<ColumnVerdict>,
}

/// Marks, for every `(genre, task)` column, the scenarios with the highest
/// and lowest accuracy. Tied entries are all marked.
pub fn compare(grid: &ResultGrid) -> Result<ComparisonReport, ScenarioError> {
    if grid.is_empty() {
        return Err(ScenarioError::EmptyGrid);
    }
    let mut by_col: BTreeMap<(String, Field), Vec<(&String, Fixed2)>> = BTreeMap::new();
    for ((label, genre, task), &acc) in &grid.cells {
        by_col.entry((genre.clone(), *task)).or_default().push((label, acc));
    }
    let columns = by_col
        .into_iter()
        .map(|((genre, task), entries)| {
            let best = entries.iter().map(|e| e.1).max().expect("non-empty column");
            let worst = entries.iter().map(|e| e.1).min().expect("non-empty column");
            let pick = |v: Fixed2| {
                let mut l: Vec<String> = entries
                    .iter()
                    .filter(|e| e.1 == v)
                    .map(|e| e.0.clone())
                    .collect();
                l.sort_by(|a, b| label_rank(a).cmp(&label_rank(b)));
                l
            };
            ColumnVerdict {
                best_labels: pick(best),
                worst_labels: pick(worst),
                genre,
                task,
                best,
                worst,
            }
        })
        .collect();
    Ok(ComparisonReport {
        grid: grid.clone(),
        columns,
    })
}

impl ComparisonReport {
    pub fn column(&self, genre: &str, task: Field) -> Option<&ColumnVerdict> {
        self.columns.iter().find(|c| c.genre == genre && c.task == task)
    }

    pub fn marks(&self, label: &str, genre: &str, task: Field) -> Vec<Mark> {
        let mut out = Vec::new();
        if let Some(c) = self.column(genre, task) {
            if c.best_labels.iter().any(|l| l == label) {
                out.push(Mark::Best);
            }
            if c.worst_labels.iter().any(|l| l == label) {
                out.push(Mark::Worst);
            }
        }
        out
    }

    /// Scenario rows by `genre/task` columns; `+` marks the best and `-`
    /// the worst value of a column.
    pub fn render_text(&self) -> String {
        let cols = self.grid.columns();
        let headers: Vec<String> = std::iter::once("scenario".to_string())
            .chain(cols.iter().map(|(g, t)| format!("{g}/{t}")))
            .collect();
        let rows: Vec<Vec<String>> = self
            .grid
            .labels()
            .into_iter()
            .map(|label| {
                let mut row = vec![label.clone()];
                for (g, t) in &cols {
                    let cell = match self.grid.get(&label, g, *t) {
                        None => String::new(),
                        Some(v) => {
                            let marks = self.marks(&label, g, *t);
                            let mut s = v.to_string();
                            if marks.contains(&Mark::Best) {
                                s.push('+');
                            }
                            if marks.contains(&Mark::Worst) {
                                s.push('-');
                            }
                            s
                        }
                    };
                    row.push(cell);
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let mut out = render(&header_refs, &rows);
        out.push_str("+ best, - worst per column\n");
        out
    }

    /// One row per marked cell: genre, task, mark, scenario, accuracy.
    pub fn render_machine(&self) -> String {
        let mut rows = Vec::new();
        for c in &self.columns {
            for (mark, labels, v) in [("best", &c.best_labels, c.best), ("worst", &c.worst_labels, c.worst)] {
                for l in labels {
                    rows.push(vec![
                        c.genre.clone(),
                        c.task.to_string(),
                        mark.to_string(),
                        l.clone(),
                        v.to_string(),
                    ]);
                }
            }
        }
        render_machine("compare", &["genre", "task", "mark", "scenario", "accuracy"], &rows)
    }
}

/// A scenario configuration file.
///
/// ```toml
/// scenarios = ["baseline", "ud_all", "ud_plus_specific", "ud_plus_efontes"]
/// tasks = ["upos", "ufeats", "lemma"]
/// registry = "registry.toml"
/// seed = 13
/// epochs = 10
/// out_dir = "out"
/// ```
///
/// Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "ScenarioKind::standard")]
    pub scenarios: Vec<ScenarioKind>,
    #[serde(default = "all_fields")]
    pub tasks: Vec<Field>,
    pub registry: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    pub validation_fraction: Option<f64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub allow_extended: bool,
}

fn all_fields() -> Vec<Field> {
    Field::ALL.to_vec()
}

fn default_epochs() -> usize {
    10
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScenarioError::InvalidScenario(e.to_string()))?;
        for p in [&mut cfg.registry, &mut cfg.out_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        ScenarioConfig::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
