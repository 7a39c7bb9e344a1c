mod common;

use std::collections::BTreeMap;

use medlat_core::conllu::{parse_conllu, Document};
use medlat_core::eval::{evaluate, Field};
use medlat_core::fixed::Fixed2;
use medlat_core::lemmatizer::{lemmatize, lemmatize_document, train_lemmatizer, LemmaQuery};
use medlat_core::registry::Registry;
use medlat_core::scenario::{execute, plan_all, ExecuteOptions, PlanOptions, ScenarioKind};
use medlat_core::tagger::{tag_document, train, TagTask, TrainOptions};

fn toy() -> Document {
    let path = common::fixtures().join("toy_separable.conllu");
    parse_conllu(&std::fs::read_to_string(path).unwrap(), "toy").unwrap()
}

#[test]
fn tagger_fits_separable_corpus() {
    let doc = toy();
    assert_eq!(doc.sentences.len(), 500);
    for (task, field) in [(TagTask::Upos, Field::Upos), (TagTask::Ufeats, Field::Ufeats)] {
        let model = train(&doc, &TrainOptions::new(task, 10, 1), None).unwrap();
        let report = evaluate(&doc, &tag_document(&model, &doc), &[field]).unwrap();
        assert_eq!(report.accuracy[&field], Fixed2::HUNDRED, "{task}");
    }
}

#[test]
fn tagger_training_is_deterministic() {
    let doc = toy();
    let opts = TrainOptions::new(TagTask::Upos, 3, 99);
    let a = train(&doc, &opts, None).unwrap();
    let b = train(&doc, &opts, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

fn tie_free(doc: &Document) -> bool {
    let mut seen: BTreeMap<(String, String), &str> = BTreeMap::new();
    doc.tokens().all(|t| {
        let key = (t.form.to_lowercase(), t.upos.clone());
        *seen.entry(key).or_insert(&t.lemma) == t.lemma
    })
}

#[test]
fn lemmatizer_memorizes_training_data() {
    let doc = toy();
    assert!(tie_free(&doc));
    let model = train_lemmatizer(&doc, None, &[]).unwrap();
    let report = evaluate(&doc, &lemmatize_document(&model, &doc, None), &[Field::Lemma]).unwrap();
    assert_eq!(report.accuracy[&Field::Lemma], Fixed2::HUNDRED);
    assert_eq!(lemmatize(&model, &LemmaQuery::new("CD", "SYM")), "_");
}

#[test]
fn lemmatizer_generalizes_by_suffix() {
    let model = train_lemmatizer(&toy(), None, &[]).unwrap();
    // unseen stem, seen ending
    assert_eq!(lemmatize(&model, &LemmaQuery::new("nouorum", "NOUN")), "nouum");
    assert_eq!(lemmatize(&model, &LemmaQuery::new("nouabat", "VERB")), "nouare");
}

fn mini() -> Registry {
    Registry::load(&common::fixtures().join("mini/registry.toml")).unwrap()
}

#[test]
fn mini_registry_full_grid_is_deterministic() {
    let reg = mini();
    let plan = plan_all(&ScenarioKind::standard(), &Field::ALL, &reg, PlanOptions::default()).unwrap();
    // 15 + 3 + 2 * 3 + 15
    assert_eq!(plan.len(), 39);
    let run = |jobs| {
        let dir = tempfile::tempdir().unwrap();
        let opts = ExecuteOptions {
            seed: 5,
            epochs: 3,
            out_dir: Some(dir.path().to_path_buf()),
            jobs,
            ..Default::default()
        };
        let ex = execute(&plan, &reg, &opts).unwrap();
        let models = std::fs::read_dir(dir.path().join("models")).unwrap().count();
        (std::fs::read(ex.results_path.unwrap()).unwrap(), ex.grid, models)
    };
    let (a, grid, models) = run(1);
    let (b, _, _) = run(3);
    assert_eq!(a, b);
    assert_eq!(models, 39);
    let labels = grid.labels();
    assert_eq!(
        labels,
        ["baseline", "ud_all", "ud_plus_ittb", "ud_plus_proiel", "ud_plus_efontes"]
    );
    for l in &labels {
        for g in reg.genres() {
            for f in Field::ALL {
                assert!(grid.get(l, &g, f).is_some(), "{l} {g} {f}");
            }
        }
    }
    assert_eq!(grid.len(), 5 * 5 * 3);
}
