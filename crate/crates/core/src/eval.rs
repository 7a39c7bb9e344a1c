//! Token-level accuracy of predicted annotation against gold annotation.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{Document, Token};
use crate::fixed::Fixed2;

/// An annotation layer that can be predicted and scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Upos,
    Ufeats,
    Lemma,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Upos, Field::Ufeats, Field::Lemma];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Upos => "upos",
            Field::Ufeats => "ufeats",
            Field::Lemma => "lemma",
        }
    }

    /// The value compared for this field: UPOS verbatim, features in
    /// canonical key order, lemma lowercased.
    pub fn value_of(self, token: &Token) -> Cow<'_, str> {
        match self {
            Field::Upos => Cow::Borrowed(&token.upos),
            Field::Ufeats => {
                if token.feats.is_canonical() {
                    Cow::Owned(token.feats.to_string())
                } else {
                    Cow::Owned(token.feats.canonical().to_string())
                }
            }
            Field::Lemma => {
                if token.lemma.chars().any(char::is_uppercase) {
                    Cow::Owned(token.lemma.to_lowercase())
                } else {
                    Cow::Borrowed(&token.lemma)
                }
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upos" => Ok(Field::Upos),
            "ufeats" | "feats" => Ok(Field::Ufeats),
            "lemma" => Ok(Field::Lemma),
            other => Err(format!("unknown field {other:?}")),
        }
    }
}

/// Parses a comma-separated field list such as `upos,ufeats,lemma`.
pub fn parse_fields(s: &str) -> Result<Vec<Field>, String> {
    let mut out: Vec<Field> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Field = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("no fields given".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("AlignmentMismatch: sentence {sentence}{}: {reason}", token.map(|t| format!(" token {t}")).unwrap_or_default())]
    AlignmentMismatch {
        sentence: usize,
        token: Option<usize>,
        reason: String,
    },
    #[error("NoTokens: nothing to evaluate")]
    NoTokens,
    #[error("{source} (genre {genre})")]
    Genre {
        genre: String,
        #[source]
        source: Box<EvalError>,
    },
}

/// Fails unless both documents have the same sentence and token structure
/// and identical forms position by position.
pub fn check_alignment(gold: &Document, pred: &Document) -> Result<(), EvalError> {
    if gold.sentences.len() != pred.sentences.len() {
        return Err(EvalError::AlignmentMismatch {
            sentence: gold.sentences.len().min(pred.sentences.len()),
            token: None,
            reason: format!(
                "{} gold sentences vs {} predicted",
                gold.sentences.len(),
                pred.sentences.len()
            ),
        });
    }
    for (si, (g, p)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
        if g.tokens.len() != p.tokens.len() {
            return Err(EvalError::AlignmentMismatch {
                sentence: si,
                token: None,
                reason: format!("{} gold tokens vs {} predicted", g.tokens.len(), p.tokens.len()),
            });
        }
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if gt.form != pt.form {
                return Err(EvalError::AlignmentMismatch {
                    sentence: si,
                    token: Some(gt.id),
                    reason: format!("form {:?} vs {:?}", gt.form, pt.form),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub sentence: usize,
    pub token_id: usize,
    pub field: Field,
    pub gold: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EvalReport {
    pub token_count: u64,
    pub matches: BTreeMap<Field, u64>,
    pub accuracy: BTreeMap<Field, Fixed2>,
    pub mismatches: Vec<Mismatch>,
}

impl EvalReport {
    pub fn errors(&self, field: Field) -> u64 {
        self.matches
            .get(&field)
            .map(|m| self.token_count - m)
            .unwrap_or(0)
    }

    pub fn mismatches_for(&self, field: Field) -> impl Iterator<Item = &Mismatch> {
        self.mismatches.iter().filter(move |m| m.field == field)
    }
}

pub fn evaluate(gold: &Document, pred: &Document, fields: &[Field]) -> Result<EvalReport, EvalError> {
    check_alignment(gold, pred)?;
    let token_count = gold.token_count() as u64;
    if token_count == 0 {
        return Err(EvalError::NoTokens);
    }
    let mut report = EvalReport {
        token_count,
        ..Default::default()
    };
    for &field in fields {
        let mut matched = 0u64;
        for (si, (gs, ps)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
            for (gt, pt) in gs.tokens.iter().zip(&ps.tokens) {
                let g = field.value_of(gt);
                let p = field.value_of(pt);
                if g == p {
                    matched += 1;
                } else {
                    report.mismatches.push(Mismatch {
                        sentence: si,
                        token_id: gt.id,
                        field,
                        gold: g.into_owned(),
                        predicted: p.into_owned(),
                    });
                }
            }
        }
        report.matches.insert(field, matched);
        report.accuracy.insert(
            field,
            Fixed2::percentage(matched, token_count).expect("token_count > 0"),
        );
    }
    Ok(report)
}

/// Evaluates each genre on its own; errors carry the genre name.
pub fn evaluate_by_genre(
    pairs: &BTreeMap<String, (Document, Document)>,
    fields: &[Field],
) -> Result<BTreeMap<String, EvalReport>, EvalError> {
    pairs
        .iter()
        .map(|(genre, (gold, pred))| {
            evaluate(gold, pred, fields)
                .map(|r| (genre.clone(), r))
                .map_err(|e| EvalError::Genre {
                    genre: genre.clone(),
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Rows of `(name, field accuracies...)` for display, one per report.
pub fn report_rows<'a, I>(reports: I, fields: &[Field]) -> Vec<Vec<String>>
where
    I: IntoIterator<Item = (&'a str, &'a EvalReport)>,
{
    reports
        .into_iter()
        .map(|(name, r)| {
            let mut row = vec![name.to_string(), r.token_count.to_string()];
            row.extend(fields.iter().map(|f| {
                r.accuracy
                    .get(f)
                    .map(ToString::to_string)
                    .unwrap_or_else(|| "-".into())
            }));
            row
        })
        .collect()
}
