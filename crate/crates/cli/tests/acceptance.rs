//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p medlat-cli --test acceptance`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use medlat_core::analysis::{align_chars, alignment_cost, mine_confusions, AlignOp, ConfusionPattern, Position};
use medlat_core::conllu::{parse_conllu, serialize, Document, Feats, Sentence, Token, UPOS_TAGS};
use medlat_core::eval::{evaluate, Field};
use medlat_core::fixed::Fixed2;
use medlat_core::lemmatizer::{apply_edit_script, derive_edit_script, lemmatize, lemmatize_document, train_lemmatizer, LemmaQuery};
use medlat_core::registry::{validate_stats, CorpusStats, Registry, StatsVerdict};
use medlat_core::scenario::{compare, execute, plan, plan_all, ExecuteOptions, PlanOptions, ResultGrid, ScenarioKind};
use medlat_core::tagger::{tag_document, train, TagTask, TrainOptions};
use rand::distr::Alphabetic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUNDTRIP_MIN_FILES: usize = 20;
const ROUNDTRIP_BUDGET: Duration = Duration::from_secs(1);
const EDIT_SCRIPT_PAIRS: usize = 100_000;
const EDIT_SCRIPT_BUDGET: Duration = Duration::from_secs(10);
const ALIGNMENT_PAIRS: usize = 10_000;
const EVAL_FIXTURES: usize = 100;
const EVAL_MAX_TOKENS: usize = 10_000;
const TAGGER_EPOCHS: usize = 10;
const LEMMA_MIN_ACCURACY: Fixed2 = Fixed2::from_hundredths(9900);
const SUITE_BUDGET: Duration = Duration::from_secs(300);
const SEED: u64 = 20240917;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn read(path: &Path) -> Document {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_conllu(&text, &path.display().to_string()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn medlat(args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_medlat"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn medlat");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.unwrap_or("").as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn roundtrip() -> Outcome {
    let start = Instant::now();
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures().join("canonical"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
        .collect();
    files.sort();
    let (mut comments, mut empty_feats, mut sym) = (false, false, false);
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let doc = parse_conllu(&text, "fixture").map_err(|e| format!("{}: {e}", f.display()))?;
        ensure(serialize(&doc) == text, || format!("{} differs after round trip", f.display()))?;
        comments |= text.lines().any(|l| l.starts_with('#'));
        empty_feats |= doc.tokens().any(|t| t.feats.0.is_empty());
        sym |= doc.tokens().any(|t| t.upos == "SYM");
    }
    let elapsed = start.elapsed();
    ensure(files.len() >= ROUNDTRIP_MIN_FILES, || format!("only {} fixtures", files.len()))?;
    ensure(comments && empty_feats && sym, || "fixtures miss comments, empty feats or SYM".into())?;
    ensure(elapsed < ROUNDTRIP_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} files byte-identical in {elapsed:?}", files.len()))
}

fn cli_plan_footer(scenario: &str) -> Result<String, String> {
    let (code, out, err) = medlat(&["scenario", "plan", "--scenario", scenario], None);
    ensure(code == 0, || format!("scenario plan {scenario} exited {code}: {err}"))?;
    out.lines()
        .find(|l| l.ends_with("evaluations"))
        .map(str::to_string)
        .ok_or_else(|| format!("no summary line for {scenario}"))
}

fn scenario_arithmetic() -> Outcome {
    let reg = Registry::reference();
    let expected = [
        (ScenarioKind::Baseline, "baseline", 15, 15),
        (ScenarioKind::UdAll, "ud_all", 3, 15),
        (ScenarioKind::UdPlusSpecific(None), "ud_plus_specific", 15, 75),
        (ScenarioKind::UdPlusEfontes, "ud_plus_efontes", 15, 15),
    ];
    for (kind, name, runs, evals) in expected {
        let p = plan(&kind, &Field::ALL, &reg, PlanOptions::default()).map_err(|e| e.to_string())?;
        ensure(p.len() == runs && p.evaluation_count() == evals, || {
            format!("{name}: {} runs, {} evaluations", p.len(), p.evaluation_count())
        })?;
        let footer = cli_plan_footer(name)?;
        let want = format!("{runs} runs, {evals} evaluations");
        ensure(footer == want, || format!("cli {name}: {footer:?}, want {want:?}"))?;
    }
    Ok("15/3/15/15 runs, 75 ud_plus_specific evaluations (library and cli)".into())
}

fn stats_validator() -> Outcome {
    // declared (tokens, sentences, average) as published
    let declared: [(&str, u64, u64, &str); 10] = [
        ("PROIEL", 177_558, 16_196, "10.96"),
        ("Perseus", 18_425, 1_334, "13.81"),
        ("LLCT", 390_819, 7_289, "26.64"),
        ("ITTB", 390_819, 22_775, "17.16"),
        ("UDante", 30_566, 926, "33.01"),
        ("Annals", 895, 33, "27.12"),
        ("Biography", 8_994, 298, "30.18"),
        ("Normative", 3_142, 115, "27.32"),
        ("Proceedings", 7_189, 389, "16.48"),
        ("Science", 1_990, 106, "18.74"),
    ];
    let flagged = |tolerance: f64| -> Result<Vec<&str>, String> {
        let mut out = Vec::new();
        for (name, tokens, sentences, avg) in declared {
            let stats = CorpusStats {
                tokens,
                sentences,
                avg_tokens_per_sentence: avg.parse().map_err(|e| format!("{e:?}"))?,
            };
            if let StatsVerdict::Inconsistent { .. } = validate_stats(&stats, tolerance).map_err(|e| e.to_string())? {
                out.push(name);
            }
        }
        Ok(out)
    };
    let at_05 = flagged(0.05)?;
    let at_02 = flagged(0.02)?;
    ensure(at_05 == ["LLCT", "Proceedings"], || format!("0.05 flags {at_05:?}"))?;
    ensure(at_02 == ["LLCT", "Proceedings", "Science"], || format!("0.02 flags {at_02:?}"))?;
    let reg = Registry::reference();
    for (name, tokens, sentences, avg) in declared {
        let d = reg.get(name).and_then(|d| d.declared).ok_or_else(|| format!("{name} missing from registry"))?;
        ensure(
            d.tokens == tokens && d.sentences == sentences && d.avg_tokens_per_sentence.to_string() == avg,
            || format!("registry {name} differs: {d:?}"),
        )?;
    }
    Ok("0.05 -> {LLCT, Proceedings}; 0.02 -> {LLCT, Proceedings, Science}".into())
}

fn random_word(rng: &mut ChaCha8Rng, min: usize, max: usize, alphabet: &[u8]) -> String {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())] as char).collect()
}

fn edit_script_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let latin = b"abcdefghiklmnopqrstuvxyz";
    let start = Instant::now();
    let mut failures = 0usize;
    let mut first = None;
    for i in 0..EDIT_SCRIPT_PAIRS {
        let form = random_word(&mut rng, 1, 20, latin);
        let lemma = if i % 2 == 0 {
            random_word(&mut rng, 1, 20, latin)
        } else {
            // share a stem so prefix, suffix and interior edits all occur
            let keep = rng.random_range(0..=form.len());
            let mut l = form[..keep].to_string();
            l.push_str(&random_word(&mut rng, 0, 6, latin));
            if l.is_empty() || l.len() > 20 {
                random_word(&mut rng, 1, 20, latin)
            } else {
                l
            }
        };
        let script = derive_edit_script(&form, &lemma);
        if apply_edit_script(&script, &form).ok().as_deref() != Some(lemma.as_str()) {
            failures += 1;
            first.get_or_insert((form, lemma));
        }
    }
    let elapsed = start.elapsed();
    ensure(failures == 0, || format!("{failures} failures, first {first:?}"))?;
    ensure(elapsed < EDIT_SCRIPT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{EDIT_SCRIPT_PAIRS} pairs, 0 failures in {elapsed:?}"))
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn alignment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut mismatches = 0usize;
    for i in 0..ALIGNMENT_PAIRS {
        let alphabet: &[u8] = if i % 2 == 0 { b"uvct" } else { b"abcdefghiklmnopqrstuvxyz" };
        let g = random_word(&mut rng, 0, 16, alphabet);
        let p = random_word(&mut rng, 0, 16, alphabet);
        let ops = align_chars(&g, &p);
        let (mut rg, mut rp) = (String::new(), String::new());
        for op in &ops {
            match *op {
                AlignOp::Match(c) => {
                    rg.push(c);
                    rp.push(c);
                }
                AlignOp::Sub(a, b) => {
                    rg.push(a);
                    rp.push(b);
                }
                AlignOp::Del(a) => rg.push(a),
                AlignOp::Ins(b) => rp.push(b),
            }
        }
        if alignment_cost(&ops) != levenshtein(&g, &p) || rg != g || rp != p {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    Ok(format!("{ALIGNMENT_PAIRS} pairs, 0 mismatches"))
}

const FEAT_KEYS: [&str; 5] = ["Case", "Gender", "Mood", "Number", "NumType"];
const FEAT_VALUES: [&str; 4] = ["Nom", "Fem", "Ind", "Plur"];

fn random_document(rng: &mut ChaCha8Rng, tokens: usize) -> Document {
    let mut sentences = Vec::new();
    let mut left = tokens;
    while left > 0 {
        let n = rng.random_range(1..=left.min(40));
        left -= n;
        let toks = (1..=n)
            .map(|id| {
                let mut feats: Vec<(String, String)> = Vec::new();
                for k in FEAT_KEYS {
                    if rng.random_bool(0.3) {
                        feats.push((k.into(), FEAT_VALUES[rng.random_range(0..FEAT_VALUES.len())].into()));
                    }
                }
                let form: String = (0..rng.random_range(1..8)).map(|_| rng.sample(Alphabetic) as char).collect();
                Token::new(id, form.clone())
                    .with_lemma(form.to_lowercase())
                    .with_upos(UPOS_TAGS[rng.random_range(0..UPOS_TAGS.len())])
                    .with_feats(Feats(feats).canonical())
            })
            .collect();
        sentences.push(Sentence::new(toks));
    }
    Document::new("random", sentences)
}

fn perturb(rng: &mut ChaCha8Rng, gold: &Document, rate: f64) -> Document {
    let mut pred = gold.clone();
    for t in pred.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
        if rng.random_bool(rate) {
            t.upos = UPOS_TAGS[rng.random_range(0..UPOS_TAGS.len())].to_string();
        }
        if rng.random_bool(rate) {
            match rng.random_range(0..3) {
                0 => t.lemma.push('x'),
                1 => t.lemma = t.lemma.to_uppercase(),
                _ => t.lemma = "_".into(),
            }
        }
        if rng.random_bool(rate) {
            if rng.random_bool(0.5) {
                t.feats.0.reverse();
            } else {
                t.feats.0.pop();
            }
        }
    }
    pred
}

fn brute_matches(gold: &Document, pred: &Document, field: Field) -> u64 {
    let g: Vec<&Token> = gold.tokens().collect();
    let p: Vec<&Token> = pred.tokens().collect();
    let mut n = 0;
    for i in 0..g.len() {
        let same = match field {
            Field::Upos => g[i].upos == p[i].upos,
            Field::Lemma => g[i].lemma.to_lowercase() == p[i].lemma.to_lowercase(),
            Field::Ufeats => {
                let mut a = g[i].feats.0.clone();
                let mut b = p[i].feats.0.clone();
                a.sort();
                b.sort();
                a == b
            }
        };
        if same {
            n += 1;
        }
    }
    n
}

fn half_up_hundredths(part: u64, whole: u64) -> i64 {
    let scaled = part * 10_000;
    let (q, r) = (scaled / whole, scaled % whole);
    (q + u64::from(2 * r >= whole)) as i64
}

fn evaluation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut largest = 0;
    for i in 0..EVAL_FIXTURES {
        let size = if i == 0 { EVAL_MAX_TOKENS } else { rng.random_range(1..=EVAL_MAX_TOKENS) };
        let gold = random_document(&mut rng, size);
        let rate = [0.0, 0.01, 0.2, 0.9][i % 4];
        let pred = perturb(&mut rng, &gold, rate);
        let report = evaluate(&gold, &pred, &Field::ALL).map_err(|e| e.to_string())?;
        let total = gold.token_count() as u64;
        ensure(report.token_count as u64 == total, || format!("fixture {i}: token count"))?;
        for field in Field::ALL {
            let m = brute_matches(&gold, &pred, field);
            ensure(report.matches[&field] == m, || {
                format!("fixture {i} {field}: {} vs oracle {m}", report.matches[&field])
            })?;
            let want = half_up_hundredths(m, total);
            ensure(report.accuracy[&field].hundredths() == want, || {
                format!("fixture {i} {field}: {} vs oracle {want}", report.accuracy[&field])
            })?;
        }
        largest = largest.max(total);
    }
    Ok(format!("{EVAL_FIXTURES} fixtures, largest {largest} tokens, all counts identical"))
}

fn toy() -> Document {
    read(&fixtures().join("toy_separable.conllu"))
}

fn tagger_convergence() -> Outcome {
    let doc = toy();
    ensure(doc.sentences.len() == 500, || format!("{} sentences", doc.sentences.len()))?;
    let mut notes = Vec::new();
    for (task, field) in [(TagTask::Upos, Field::Upos), (TagTask::Ufeats, Field::Ufeats)] {
        let opts = TrainOptions::new(task, TAGGER_EPOCHS, SEED);
        let a = train(&doc, &opts, None).map_err(|e| e.to_string())?;
        let b = train(&doc, &opts, None).map_err(|e| e.to_string())?;
        ensure(a.to_json() == b.to_json(), || format!("{task}: two runs differ"))?;
        let acc = evaluate(&doc, &tag_document(&a, &doc), &[field]).map_err(|e| e.to_string())?.accuracy[&field];
        ensure(acc == Fixed2::HUNDRED, || format!("{task}: {acc} after {TAGGER_EPOCHS} epochs"))?;
        notes.push(format!("{task} {acc}"));
    }
    Ok(format!("{} within {TAGGER_EPOCHS} epochs, deterministic", notes.join(", ")))
}

fn lemmatizer_memorization() -> Outcome {
    let doc = toy();
    let model = train_lemmatizer(&doc, None, &[]).map_err(|e| e.to_string())?;
    let acc = evaluate(&doc, &lemmatize_document(&model, &doc, None), &[Field::Lemma])
        .map_err(|e| e.to_string())?
        .accuracy[&Field::Lemma];
    ensure(acc >= LEMMA_MIN_ACCURACY, || format!("training accuracy {acc}"))?;
    ensure(lemmatize(&model, &LemmaQuery::new("CD", "SYM")) == "_", || "CD:SYM not '_'".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("train.conllu");
    std::fs::write(
        &corpus,
        "1\tadducam\tadduco\tVERB\t_\tMood=Sub|Number=Sing|Person=1\t_\t_\t_\t_\n\
         2\tCD\t_\tSYM\t_\t_\t_\t_\t_\t_\n\n",
    )
    .map_err(|e| e.to_string())?;
    let model_path = dir.path().join("lemmatizer.json");
    let (code, _, err) = medlat(
        &["lemmatize", "train", "--in", corpus.to_str().unwrap(), "--output", model_path.to_str().unwrap()],
        None,
    );
    ensure(code == 0, || format!("lemmatize train exited {code}: {err}"))?;
    let (code, out, err) = medlat(
        &["lemmatize", "run", "--model", model_path.to_str().unwrap()],
        Some("adducam:VERB\nCD:SYM\n"),
    );
    ensure(code == 0, || format!("lemmatize run exited {code}: {err}"))?;
    ensure(out == "adduco\n_\n", || format!("cli printed {out:?}"))?;
    Ok(format!("training accuracy {acc}, CD:SYM -> _, adducam:VERB -> adduco via cli"))
}

fn confusion_mining() -> Outcome {
    let mut errors: Vec<(&str, &str)> = Vec::new();
    errors.extend(std::iter::repeat_n(("uideo", "video"), 5));
    errors.extend(std::iter::repeat_n(("gratia", "gracia"), 2));
    errors.push(("kinga", "cinga"));
    let mined = mine_confusions(&errors);
    let got: Vec<(String, Position, u64)> = mined
        .iter()
        .map(|c: &ConfusionPattern| (c.pattern.to_string(), c.position, c.count))
        .collect();
    let want = vec![
        ("u:v".to_string(), Position::Initial, 5),
        ("k:c".to_string(), Position::Initial, 1),
        ("t:c".to_string(), Position::Middle, 2),
    ];
    ensure(got == want, || format!("mined {got:?}"))?;
    Ok("[(u:v, initial, 5), (k:c, initial, 1), (t:c, middle, 2)]".into())
}

fn comparison_highlighting() -> Outcome {
    let biography_upos = [
        ("baseline", 9543),
        ("ud_all", 9019),
        ("ud_plus_ittb", 8958),
        ("ud_plus_llct", 8987),
        ("ud_plus_perseus", 9034),
        ("ud_plus_proiel", 7734),
        ("ud_plus_udante", 9020),
        ("ud_plus_efontes", 9610),
    ];
    let mut grid = ResultGrid::default();
    for (label, h) in biography_upos {
        grid.insert(label, "Biography", Field::Upos, Fixed2::from_hundredths(h));
    }
    let report = compare(&grid).map_err(|e| e.to_string())?;
    let c = report.column("Biography", Field::Upos).ok_or("no Biography column")?;
    ensure(c.best_labels == ["ud_plus_efontes"] && c.best.to_string() == "96.10", || {
        format!("best {:?} {}", c.best_labels, c.best)
    })?;
    ensure(c.worst_labels == ["ud_plus_proiel"] && c.worst.to_string() == "77.34", || {
        format!("worst {:?} {}", c.worst_labels, c.worst)
    })?;
    Ok("best ud_plus_efontes 96.10, worst ud_plus_proiel 77.34".into())
}

fn end_to_end(suite_start: Instant) -> Outcome {
    let reg = Registry::load(&fixtures().join("mini/registry.toml")).map_err(|e| e.to_string())?;
    let plan = plan_all(&ScenarioKind::standard(), &Field::ALL, &reg, PlanOptions::default()).map_err(|e| e.to_string())?;
    let run = || -> Result<Vec<u8>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let opts = ExecuteOptions {
            seed: SEED,
            out_dir: Some(dir.path().to_path_buf()),
            ..ExecuteOptions::default()
        };
        let ex = execute(&plan, &reg, &opts).map_err(|e| e.to_string())?;
        std::fs::read(ex.results_path.ok_or("no results file")?).map_err(|e| e.to_string())
    };
    let a = run()?;
    let b = run()?;
    ensure(a == b, || "results files differ".into())?;
    let rows = a.iter().filter(|&&c| c == b'\n').count() - 2;
    let elapsed = suite_start.elapsed();
    ensure(elapsed < SUITE_BUDGET, || format!("suite took {elapsed:?}"))?;
    Ok(format!("{} runs, {rows} result rows byte-identical; suite {elapsed:.1?}", plan.len()))
}

fn main() {
    let start = Instant::now();
    let criteria: [Criterion; 10] = [
        ("round-trip", roundtrip),
        ("scenario-arithmetic", scenario_arithmetic),
        ("stats-validator", stats_validator),
        ("edit-script-inverse", edit_script_inverse),
        ("alignment-oracle", alignment_oracle),
        ("evaluation-oracle", evaluation_oracle),
        ("tagger-convergence", tagger_convergence),
        ("lemmatizer-memorization", lemmatizer_memorization),
        ("confusion-mining", confusion_mining),
        ("comparison-highlighting", comparison_highlighting),
    ];
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {n:>2} {name}: {detail}");
        }
    };
    for (i, (name, f)) in criteria.iter().enumerate() {
        report(i + 1, name, f());
    }
    report(11, "end-to-end-determinism", end_to_end(start));
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
