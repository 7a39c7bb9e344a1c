use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use medlat_core::analysis::{
    genre_distribution, lemma_errors, mine_confusions, pos_confusions, top_k_per_position,
};
use medlat_core::conllu::{self, parse_conllu, serialize, Document};
use medlat_core::eval::{evaluate, evaluate_by_genre, parse_fields, report_rows, Field};
use medlat_core::lemmatizer::{
    lemmatize, lemmatize_document, train_lemmatizer, LemmaQuery, LemmatizerModel,
};
use medlat_core::normalize::{default_gold_ruleset, mine_gated_rules, normalize_word, Ruleset};
use medlat_core::registry::{compute_stats, validate_stats, CorpusStats, Registry, StatsVerdict};
use medlat_core::scenario::{
    compare, execute, parse_results, plan_all, read_results, ExecuteOptions, PlanOptions,
    ResultGrid, RunPlan, ScenarioConfig, ScenarioKind, REFERENCE_RESULTS,
};
use medlat_core::table::{render, render_machine};
use medlat_core::tagger::{tag_document, train, TagTask, TaggerModel, TrainOptions};

use crate::args::*;
use crate::config::Settings;

fn print_table(settings: &Settings, kind: &str, headers: &[&str], rows: &[Vec<String>]) {
    if settings.machine {
        print!("{}", render_machine(kind, headers, rows));
    } else {
        print!("{}", render(headers, rows));
    }
}

fn read_doc(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("Io: cannot read {}", path.display()))?;
    parse_conllu(&text, &path.display().to_string())
        .map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn read_docs(paths: &[PathBuf]) -> Result<Document> {
    let mut out = Document::new(
        paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("+"),
        Vec::new(),
    );
    for p in paths {
        out.extend(read_doc(p)?);
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("Io: cannot write {}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into())
}

fn load_registry(settings: &Settings, explicit: Option<&Path>) -> Result<Registry> {
    match explicit.or(settings.registry.as_deref()) {
        Some(p) => Ok(Registry::load(p)?),
        None => Ok(Registry::reference()),
    }
}

fn load_ruleset(settings: &Settings, explicit: Option<&Path>) -> Result<Ruleset> {
    match explicit.or(settings.ruleset.as_deref()) {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("Io: cannot read {}", p.display()))?;
            Ok(Ruleset::parse(&text, &file_stem(p))?)
        }
        None => Ok(default_gold_ruleset()),
    }
}

pub fn corpus_stats(settings: &Settings, args: &StatsArgs) -> Result<()> {
    let headers = ["dataset", "kind", "tokens", "sentences", "avg", "source"];
    let mut rows = Vec::new();
    let row = |name: &str, kind: &str, s: &CorpusStats, source: &str| {
        vec![
            name.to_string(),
            kind.to_string(),
            s.tokens.to_string(),
            s.sentences.to_string(),
            s.avg_tokens_per_sentence.to_string(),
            source.to_string(),
        ]
    };
    if !args.files.is_empty() {
        let mut total: Option<CorpusStats> = None;
        for p in &args.files {
            let s = compute_stats(&read_doc(p)?);
            rows.push(row(&p.display().to_string(), "file", &s, "computed"));
            total = Some(total.map_or(s, |t| t.combine(s)));
        }
        if args.files.len() > 1 {
            rows.push(row("total", "", &total.expect("files given"), "computed"));
        }
    } else {
        let reg = load_registry(settings, args.registry.as_deref())?;
        for name in &args.datasets {
            if reg.get(name).is_none() {
                return Err(medlat_core::registry::RegistryError::UnknownDataset(name.clone()).into());
            }
        }
        for d in reg.datasets() {
            if !args.datasets.is_empty() && !args.datasets.contains(&d.name) {
                continue;
            }
            let kind = serde_kind(d.kind);
            if let Some(s) = &d.declared {
                rows.push(row(&d.name, kind, s, "declared"));
            }
            if !d.paths.is_empty() {
                let s = compute_stats(&reg.load_dataset(&d.name)?);
                rows.push(row(&d.name, kind, &s, "computed"));
            }
        }
    }
    print_table(settings, "stats", &headers, &rows);
    Ok(())
}

fn serde_kind(kind: medlat_core::registry::DatasetKind) -> &'static str {
    match kind {
        medlat_core::registry::DatasetKind::UdTreebank => "ud_treebank",
        medlat_core::registry::DatasetKind::EfontesGenre => "efontes_genre",
    }
}

pub fn corpus_validate(settings: &Settings, args: &ValidateArgs) -> Result<()> {
    let mut problems = 0usize;
    if !args.files.is_empty() {
        let headers = ["file", "sentence", "token", "rule"];
        let mut rows = Vec::new();
        for p in &args.files {
            let doc = read_doc(p)?;
            for v in conllu::validate(&doc) {
                rows.push(vec![
                    p.display().to_string(),
                    (v.sentence + 1).to_string(),
                    v.token_id.to_string(),
                    format!("{:?}", v.rule),
                ]);
            }
        }
        problems = rows.len();
        print_table(settings, "violations", &headers, &rows);
        if !settings.machine {
            println!("{problems} violation(s) in {} file(s)", args.files.len());
        }
    } else {
        let reg = load_registry(settings, args.registry.as_deref())?;
        let headers = ["dataset", "tokens", "sentences", "declared_avg", "expected_avg", "deviation", "verdict"];
        let mut rows = Vec::new();
        for d in reg.datasets() {
            if let Some(s) = &d.declared {
                let verdict = validate_stats(s, args.tolerance)?;
                let (expected, deviation, label) = match verdict {
                    StatsVerdict::Consistent => (
                        CorpusStats::from_counts(s.tokens, s.sentences).avg_tokens_per_sentence.to_string(),
                        "-".to_string(),
                        "consistent",
                    ),
                    StatsVerdict::Inconsistent { expected_avg, deviation } => {
                        problems += 1;
                        (expected_avg.to_string(), format!("{deviation:.4}"), "inconsistent")
                    }
                };
                rows.push(vec![
                    d.name.clone(),
                    s.tokens.to_string(),
                    s.sentences.to_string(),
                    s.avg_tokens_per_sentence.to_string(),
                    expected,
                    deviation,
                    label.to_string(),
                ]);
            }
            if !d.paths.is_empty() {
                let doc = reg.load_dataset(&d.name)?;
                let violations = conllu::validate(&doc).len();
                let computed = compute_stats(&doc);
                let mismatch = d
                    .declared
                    .is_some_and(|s| s.tokens != computed.tokens || s.sentences != computed.sentences);
                problems += violations + usize::from(mismatch);
                let label = match (violations, mismatch) {
                    (0, false) => "well-formed".to_string(),
                    (0, true) => "counts differ from declared".to_string(),
                    (n, false) => format!("{n} violation(s)"),
                    (n, true) => format!("{n} violation(s), counts differ from declared"),
                };
                rows.push(vec![
                    format!("{} (files)", d.name),
                    computed.tokens.to_string(),
                    computed.sentences.to_string(),
                    "-".into(),
                    computed.avg_tokens_per_sentence.to_string(),
                    "-".into(),
                    label,
                ]);
            }
        }
        print_table(settings, "validate", &headers, &rows);
    }
    if args.strict && problems > 0 {
        bail!("ValidationFailed: {problems} problem(s) found");
    }
    Ok(())
}

pub fn normalize(settings: &Settings, args: &NormalizeArgs) -> Result<()> {
    let rules = load_ruleset(settings, args.ruleset.as_deref())?;
    if !args.words.is_empty() {
        for w in &args.words {
            println!("{}", normalize_word(&rules, w));
        }
        return Ok(());
    }
    let input = args.input.as_deref().expect("clap requires --in without --word");
    let mut doc = read_doc(input)?;
    let mut changed = 0usize;
    for t in doc.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
        let cell = match args.field {
            TextField::Lemma => &mut t.lemma,
            TextField::Form => &mut t.form,
        };
        if cell == conllu::EMPTY {
            continue;
        }
        let new = normalize_word(&rules, cell);
        if new != *cell {
            *cell = new;
            changed += 1;
        }
    }
    let out = settings.output_path(args.output.as_deref(), &format!("{}.normalized.conllu", file_stem(input)))?;
    write_file(&out, &serialize(&doc))?;
    let rows = vec![vec![
        input.display().to_string(),
        doc.token_count().to_string(),
        changed.to_string(),
        out.display().to_string(),
    ]];
    print_table(settings, "normalize", &["input", "tokens", "changed", "output"], &rows);
    Ok(())
}

fn tag_task(t: TaskArg) -> TagTask {
    match t {
        TaskArg::Upos => TagTask::Upos,
        TaskArg::Ufeats => TagTask::Ufeats,
    }
}

fn field_of(task: TagTask) -> Field {
    match task {
        TagTask::Upos => Field::Upos,
        TagTask::Ufeats => Field::Ufeats,
    }
}

pub fn tagger(settings: &Settings, cmd: &TaggerCmd) -> Result<()> {
    match cmd {
        TaggerCmd::Train(a) => {
            let corpus = read_docs(&a.inputs)?;
            let base = a.base.as_deref().map(TaggerModel::load).transpose()?;
            let task = tag_task(a.task);
            let names: Vec<String> = a.inputs.iter().map(|p| file_stem(p)).collect();
            let opts = TrainOptions::new(task, a.epochs, settings.seed).datasets(names);
            let model = train(&corpus, &opts, base.as_ref())?;
            let out = settings.output_path(a.output.as_deref(), &format!("tagger-{task}.json"))?;
            model.save(&out)?;
            let rows = vec![vec![
                task.to_string(),
                corpus.token_count().to_string(),
                model.tagset().len().to_string(),
                model.feature_count().to_string(),
                out.display().to_string(),
            ]];
            print_table(settings, "tagger-train", &["task", "tokens", "tags", "features", "model"], &rows);
        }
        TaggerCmd::Tag(a) => {
            let model = TaggerModel::load(&a.model)?;
            let doc = read_doc(&a.input)?;
            let tagged = tag_document(&model, &doc);
            let out = settings.output_path(
                a.output.as_deref(),
                &format!("{}.{}.conllu", file_stem(&a.input), model.task),
            )?;
            write_file(&out, &serialize(&tagged))?;
            let rows = vec![vec![
                a.input.display().to_string(),
                tagged.token_count().to_string(),
                out.display().to_string(),
            ]];
            print_table(settings, "tagger-tag", &["input", "tokens", "output"], &rows);
        }
        TaggerCmd::Eval(a) => {
            let model = TaggerModel::load(&a.model)?;
            let gold = read_doc(&a.gold)?;
            let field = field_of(model.task);
            let report = evaluate(&gold, &tag_document(&model, &gold), &[field])?;
            let name = a.gold.display().to_string();
            let headers = ["data", "tokens", field.as_str()];
            print_table(settings, "eval", &headers, &report_rows([(name.as_str(), &report)], &[field]));
        }
    }
    Ok(())
}

pub fn lemmatizer(settings: &Settings, cmd: &LemmatizeCmd) -> Result<()> {
    match cmd {
        LemmatizeCmd::Train(a) => {
            let corpus = read_docs(&a.inputs)?;
            let base = a.base.as_deref().map(LemmatizerModel::load).transpose()?;
            let names: Vec<String> = a.inputs.iter().map(|p| file_stem(p)).collect();
            let model = train_lemmatizer(&corpus, base.as_ref(), &names)?;
            let out = settings.output_path(a.output.as_deref(), "lemmatizer.json")?;
            model.save(&out)?;
            let rows = vec![vec![
                corpus.token_count().to_string(),
                model.lexicon_len().to_string(),
                model.classifier_len().to_string(),
                out.display().to_string(),
            ]];
            print_table(settings, "lemmatize-train", &["tokens", "lexicon", "suffix_keys", "model"], &rows);
        }
        LemmatizeCmd::Run(a) => {
            let model = LemmatizerModel::load(&a.model)?;
            let rules = match &a.ruleset {
                Some(p) => Some(load_ruleset(settings, Some(p))?),
                None => None,
            };
            if let Some(path) = &a.conllu {
                let doc = read_doc(path)?;
                let out_doc = lemmatize_document(&model, &doc, rules.as_ref());
                let out = settings.output_path(a.output.as_deref(), &format!("{}.lemma.conllu", file_stem(path)))?;
                write_file(&out, &serialize(&out_doc))?;
                let rows = vec![vec![
                    path.display().to_string(),
                    out_doc.token_count().to_string(),
                    out.display().to_string(),
                ]];
                print_table(settings, "lemmatize-run", &["input", "tokens", "output"], &rows);
                return Ok(());
            }
            let reader: Box<dyn BufRead> = match &a.input {
                Some(p) => Box::new(std::io::BufReader::new(
                    std::fs::File::open(p).with_context(|| format!("Io: cannot read {}", p.display()))?,
                )),
                None => Box::new(std::io::stdin().lock()),
            };
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            for (i, line) in reader.lines().enumerate() {
                let line = line.context("Io: cannot read input")?;
                if line.trim().is_empty() {
                    continue;
                }
                let query: LemmaQuery = line.parse().map_err(|e| anyhow!("line {}: {e}", i + 1))?;
                let mut lemma = lemmatize(&model, &query);
                if let Some(r) = &rules {
                    if lemma != conllu::EMPTY {
                        lemma = normalize_word(r, &lemma);
                    }
                }
                writeln!(out, "{lemma}")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

struct Resolved {
    plan: RunPlan,
    registry: Registry,
    config: Option<ScenarioConfig>,
}

fn resolve_plan(settings: &Settings, a: &PlanArgs) -> Result<Resolved> {
    let config = a.scenario_config.as_deref().map(ScenarioConfig::load).transpose()?;
    let kinds: Vec<ScenarioKind> = if !a.scenarios.is_empty() {
        a.scenarios
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?
    } else if let Some(c) = &config {
        c.scenarios.clone()
    } else {
        ScenarioKind::standard()
    };
    let tasks = match (&a.tasks, &config) {
        (Some(t), _) => parse_fields(t).map_err(|e| anyhow!("InvalidScenario: {e}"))?,
        (None, Some(c)) => c.tasks.clone(),
        (None, None) => Field::ALL.to_vec(),
    };
    let registry_path = a
        .registry
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.registry.clone()));
    let registry = load_registry(settings, registry_path.as_deref())?;
    let options = PlanOptions {
        allow_extended: a.allow_extended || config.as_ref().is_some_and(|c| c.allow_extended),
    };
    let plan = plan_all(&kinds, &tasks, &registry, options)?;
    Ok(Resolved { plan, registry, config })
}

pub fn scenario(settings: &Settings, cmd: &ScenarioCmd) -> Result<()> {
    match cmd {
        ScenarioCmd::Plan(a) => {
            let r = resolve_plan(settings, a)?;
            if settings.machine {
                print!("{}", r.plan.render_machine());
            } else {
                print!("{}", r.plan.render_text());
                for (label, n) in r.plan.counts_by_label() {
                    println!("{label}: {n} runs");
                }
            }
        }
        ScenarioCmd::Run(a) => {
            let r = resolve_plan(settings, &a.plan)?;
            let cfg = r.config.as_ref();
            let out_dir = cfg
                .and_then(|c| c.out_dir.clone())
                .filter(|_| settings.out_dir == Path::new("medlat-out"))
                .unwrap_or_else(|| settings.out_dir.clone());
            let options = ExecuteOptions {
                seed: cfg.map_or(settings.seed, |c| if settings.seed == 0 { c.seed } else { settings.seed }),
                epochs: a.epochs.or(cfg.map(|c| c.epochs)).unwrap_or(10),
                validation_fraction: a.validation_fraction.or(cfg.and_then(|c| c.validation_fraction)),
                out_dir: Some(out_dir),
                jobs: settings.jobs,
            };
            let ex = execute(&r.plan, &r.registry, &options)?;
            let rows: Vec<Vec<String>> = ex
                .rows
                .iter()
                .map(|x| vec![x.run_id.clone(), x.genre.clone(), x.task.to_string(), x.accuracy.to_string()])
                .collect();
            print_table(settings, "results", &["run_id", "genre", "task", "accuracy"], &rows);
            if !settings.machine {
                if let Some(p) = &ex.results_path {
                    println!("results: {}", p.display());
                }
            }
        }
        ScenarioCmd::Compare(a) => {
            let rows = if a.reference {
                parse_results(REFERENCE_RESULTS)?
            } else {
                let path = a.results.clone().unwrap_or_else(|| settings.out_dir.join("results.tsv"));
                read_results(&path)?
            };
            let report = compare(&ResultGrid::from_rows(&rows))?;
            if settings.machine {
                print!("{}", report.render_machine());
            } else {
                print!("{}", report.render_text());
            }
        }
    }
    Ok(())
}

pub fn eval(settings: &Settings, a: &EvalArgs) -> Result<()> {
    let fields = parse_fields(&a.fields).map_err(|e| anyhow!("InvalidFields: {e}"))?;
    let gold = read_doc(&a.gold)?;
    let pred = read_doc(&a.pred)?;
    let report = evaluate(&gold, &pred, &fields)?;
    let headers = ["field", "matches", "tokens", "accuracy"];
    let rows: Vec<Vec<String>> = fields
        .iter()
        .map(|f| {
            vec![
                f.to_string(),
                report.matches[f].to_string(),
                report.token_count.to_string(),
                report.accuracy[f].to_string(),
            ]
        })
        .collect();
    print_table(settings, "eval", &headers, &rows);
    Ok(())
}

fn parse_pair(s: &str) -> Result<(String, PathBuf, PathBuf)> {
    let (name, files) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("InvalidGenrePair: {s:?} is not NAME=GOLD,PRED"))?;
    let (g, p) = files
        .split_once(',')
        .ok_or_else(|| anyhow!("InvalidGenrePair: {s:?} is not NAME=GOLD,PRED"))?;
    Ok((name.to_string(), PathBuf::from(g), PathBuf::from(p)))
}

pub fn analyze(settings: &Settings, a: &AnalyzeArgs) -> Result<()> {
    let pair = || -> Result<(Document, Document)> {
        let g = a.gold.as_deref().ok_or_else(|| anyhow!("--gold is required for this report"))?;
        let p = a.pred.as_deref().ok_or_else(|| anyhow!("--pred is required for this report"))?;
        Ok((read_doc(g)?, read_doc(p)?))
    };
    match a.report {
        Report::Confusions => {
            let (gold, pred) = pair()?;
            let errors = lemma_errors(&gold, &pred, a.include_sym)?;
            let mined = top_k_per_position(&mine_confusions(&errors), a.top_k);
            let rows: Vec<Vec<String>> = mined
                .iter()
                .map(|c| vec![c.position.to_string(), c.pattern.to_string(), c.count.to_string()])
                .collect();
            print_table(settings, "confusions", &["position", "pattern", "count"], &rows);
            if let Some(path) = &a.emit_rules {
                let rules = mine_gated_rules(&errors, a.min_count);
                let path = settings.output_path(Some(path), "rules.tsv")?;
                write_file(&path, &rules.to_file_string())?;
            }
        }
        Report::Pos => {
            let (gold, pred) = pair()?;
            let m = pos_confusions(&gold, &pred)?;
            let rows: Vec<Vec<String>> = m
                .ranked()
                .into_iter()
                .take(a.top_k)
                .map(|(g, p, n)| {
                    let share = 100.0 * n as f64 / m.row_total(g) as f64;
                    vec![g.to_string(), p.to_string(), n.to_string(), format!("{share:.2}")]
                })
                .collect();
            print_table(settings, "pos-confusions", &["gold", "predicted", "count", "row_share"], &rows);
        }
        Report::Genres => {
            let field: Field = a.field.parse().map_err(|e: String| anyhow!("InvalidFields: {e}"))?;
            let mut pairs = BTreeMap::new();
            if a.genre_pairs.is_empty() {
                let (g, p) = pair()?;
                pairs.insert("all".to_string(), (g, p));
            }
            for s in &a.genre_pairs {
                let (name, g, p) = parse_pair(s)?;
                pairs.insert(name, (read_doc(&g)?, read_doc(&p)?));
            }
            let reports = evaluate_by_genre(&pairs, &[field])?;
            let dist = genre_distribution(&reports, field)?;
            let rows: Vec<Vec<String>> = dist
                .genres
                .iter()
                .map(|g| {
                    vec![
                        g.genre.clone(),
                        g.errors.to_string(),
                        g.share.map(|s| format!("{:.2}", 100.0 * s)).unwrap_or_else(|| "-".into()),
                    ]
                })
                .collect();
            print_table(settings, "genres", &["genre", "errors", "share"], &rows);
        }
    }
    Ok(())
}
