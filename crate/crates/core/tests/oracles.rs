//! Library functions checked against straightforward reimplementations.

mod common;

use medlat_core::analysis::{align_chars, alignment_cost, AlignOp};
use medlat_core::conllu::Document;
use medlat_core::eval::{evaluate, Field};
use medlat_core::lemmatizer::{apply_edit_script, derive_edit_script};
use proptest::prelude::*;

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn replay(ops: &[AlignOp]) -> (String, String) {
    let (mut g, mut p) = (String::new(), String::new());
    for op in ops {
        match *op {
            AlignOp::Match(c) => {
                g.push(c);
                p.push(c);
            }
            AlignOp::Sub(a, b) => {
                g.push(a);
                p.push(b);
            }
            AlignOp::Del(a) => g.push(a),
            AlignOp::Ins(b) => p.push(b),
        }
    }
    (g, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn edit_scripts_invert(form in "[a-z]{1,20}", lemma in "[a-z]{1,20}") {
        let script = derive_edit_script(&form, &lemma);
        prop_assert_eq!(apply_edit_script(&script, &form).unwrap(), lemma);
    }

    #[test]
    fn alignment_is_minimal_and_faithful(gold in "[a-e]{0,12}", pred in "[a-e]{0,12}") {
        let ops = align_chars(&gold, &pred);
        prop_assert_eq!(alignment_cost(&ops), levenshtein(&gold, &pred));
        prop_assert_eq!(replay(&ops), (gold, pred));
    }
}

fn oracle_matches(gold: &Document, pred: &Document, field: Field) -> u64 {
    let g: Vec<_> = gold.tokens().collect();
    let p: Vec<_> = pred.tokens().collect();
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
        n += u64::from(same);
    }
    n
}

fn oracle_percentage(part: u64, whole: u64) -> i64 {
    let scaled = part * 10_000;
    let (q, r) = (scaled / whole, scaled % whole);
    (q + u64::from(2 * r >= whole)) as i64
}

fn perturb(doc: &Document, flips: &[(usize, u8)]) -> Document {
    let mut out = doc.clone();
    let total = out.token_count();
    for &(at, what) in flips {
        let at = at % total.max(1);
        if let Some(t) = out.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()).nth(at) {
            match what % 4 {
                0 => t.upos = if t.upos == "NOUN" { "VERB".into() } else { "NOUN".into() },
                1 => t.lemma.push('x'),
                2 => t.lemma = t.lemma.to_uppercase(),
                _ => t.feats.0.reverse(),
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn evaluation_counts_like_brute_force(
        gold in common::document(30, 12),
        flips in proptest::collection::vec((0usize..10_000, 0u8..4), 0..40),
    ) {
        prop_assume!(gold.token_count() > 0);
        let pred = perturb(&gold, &flips);
        let report = evaluate(&gold, &pred, &Field::ALL).unwrap();
        for field in Field::ALL {
            let m = oracle_matches(&gold, &pred, field);
            prop_assert_eq!(report.matches[&field], m);
            prop_assert_eq!(
                report.accuracy[&field].hundredths(),
                oracle_percentage(m, gold.token_count() as u64)
            );
        }
    }
}
