//! Error analysis for lemma and part-of-speech predictions.
//!
//! Lemma errors are aligned character by character, contiguous runs of
//! non-matching characters are collapsed into `gold:pred` patterns, and the
//! patterns are counted by where they fall in the gold lemma.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{Document, Sentence};
use crate::eval::{check_alignment, EvalError, EvalReport, Field};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("IdenticalStrings: {0:?}")]
    IdenticalStrings(String),
    #[error("NoReports: genre distribution needs at least one report")]
    NoReports,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Where a pattern sits in the gold lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Initial,
    Middle,
    Final,
}

impl Position {
    pub const ALL: [Position; 3] = [Position::Initial, Position::Middle, Position::Final];

    pub fn as_str(self) -> &'static str {
        match self {
            Position::Initial => "initial",
            Position::Middle => "middle",
            Position::Final => "final",
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "initial" => Ok(Position::Initial),
            "middle" => Ok(Position::Middle),
            "final" => Ok(Position::Final),
            other => Err(format!("unknown position {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match(char),
    Sub(char, char),
    /// A gold character with no counterpart in the prediction.
    Del(char),
    /// A predicted character with no counterpart in gold.
    Ins(char),
}

impl AlignOp {
    pub fn is_match(&self) -> bool {
        matches!(self, AlignOp::Match(_))
    }
}

/// Total cost (number of non-match operations) of an alignment.
pub fn alignment_cost(ops: &[AlignOp]) -> usize {
    ops.iter().filter(|o| !o.is_match()).count()
}

/// Minimum-edit alignment with unit costs.
///
/// The alignment is built left to right; at every step the first optimal
/// choice among match, substitution, deletion and insertion is taken, so
/// the result is unique for a given pair.
pub fn align_chars(gold: &str, pred: &str) -> Vec<AlignOp> {
    let g: Vec<char> = gold.chars().collect();
    let p: Vec<char> = pred.chars().collect();
    let (n, m) = (g.len(), p.len());
    let w = m + 1;
    // dist[i * w + j]: edit distance between g[i..] and p[j..]
    let mut dist = vec![0usize; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            dist[i * w + j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else {
                let diag = dist[(i + 1) * w + j + 1] + usize::from(g[i] != p[j]);
                let del = dist[(i + 1) * w + j] + 1;
                let ins = dist[i * w + j + 1] + 1;
                diag.min(del).min(ins)
            };
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = dist[i * w + j];
        if i < n && j < m && g[i] == p[j] && dist[(i + 1) * w + j + 1] == here {
            ops.push(AlignOp::Match(g[i]));
            i += 1;
            j += 1;
        } else if i < n && j < m && g[i] != p[j] && dist[(i + 1) * w + j + 1] + 1 == here {
            ops.push(AlignOp::Sub(g[i], p[j]));
            i += 1;
            j += 1;
        } else if i < n && dist[(i + 1) * w + j] + 1 == here {
            ops.push(AlignOp::Del(g[i]));
            i += 1;
        } else {
            ops.push(AlignOp::Ins(p[j]));
            j += 1;
        }
    }
    ops
}

/// A `gold:pred` substring discrepancy. Either side may be empty, not both.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub gold: String,
    pub pred: String,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("{}:{}", self.gold, self.pred))
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (g, p) = s
            .split_once(':')
            .ok_or_else(|| format!("pattern {s:?} lacks ':'"))?;
        if g.is_empty() && p.is_empty() || p.contains(':') {
            return Err(format!("invalid pattern {s:?}"));
        }
        Ok(Pattern {
            gold: g.to_string(),
            pred: p.to_string(),
        })
    }
}

/// Collapses each maximal run of non-matching alignment operations into one
/// pattern.
///
/// A run is *initial* if it covers gold index 0 (or inserts before it),
/// *final* if it covers the last gold index (or inserts after it), and
/// *middle* otherwise. A run spanning the whole word counts as initial.
pub fn extract_patterns(gold: &str, pred: &str) -> Result<Vec<(Pattern, Position)>, AnalysisError> {
    if gold == pred {
        return Err(AnalysisError::IdenticalStrings(gold.to_string()));
    }
    let n = gold.chars().count();
    let ops = align_chars(gold, pred);
    let mut out = Vec::new();
    let mut gi = 0usize;
    let mut k = 0usize;
    while k < ops.len() {
        if ops[k].is_match() {
            gi += 1;
            k += 1;
            continue;
        }
        let start = gi;
        let mut pat = Pattern {
            gold: String::new(),
            pred: String::new(),
        };
        while k < ops.len() && !ops[k].is_match() {
            match ops[k] {
                AlignOp::Sub(g, p) => {
                    pat.gold.push(g);
                    pat.pred.push(p);
                    gi += 1;
                }
                AlignOp::Del(g) => {
                    pat.gold.push(g);
                    gi += 1;
                }
                AlignOp::Ins(p) => pat.pred.push(p),
                AlignOp::Match(_) => unreachable!(),
            }
            k += 1;
        }
        let position = if start == 0 {
            Position::Initial
        } else if gi == n {
            Position::Final
        } else {
            Position::Middle
        };
        out.push((pat, position));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionPattern {
    pub pattern: Pattern,
    pub position: Position,
    pub count: u64,
}

/// Counts patterns over a list of `(gold, pred)` lemma pairs.
///
/// Identical pairs are skipped. The result is grouped by position (initial,
/// middle, final), each group sorted by descending count, ties broken by the
/// pattern's `gold:pred` spelling.
pub fn mine_confusions<G, P>(errors: &[(G, P)]) -> Vec<ConfusionPattern>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    let mut counts: HashMap<(Pattern, Position), u64> = HashMap::new();
    for (g, p) in errors {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g == p {
            continue;
        }
        for key in extract_patterns(g, p).expect("pair differs") {
            *counts.entry(key).or_default() += 1;
        }
    }
    let mut out: Vec<ConfusionPattern> = counts
        .into_iter()
        .map(|((pattern, position), count)| ConfusionPattern {
            pattern,
            position,
            count,
        })
        .collect();
    out.sort_by(|a, b| {
        a.position
            .cmp(&b.position)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.pattern.to_string().cmp(&b.pattern.to_string()))
    });
    out
}

/// The first `k` patterns of each position, preserving order.
pub fn top_k_per_position(patterns: &[ConfusionPattern], k: usize) -> Vec<ConfusionPattern> {
    let mut seen: HashMap<Position, usize> = HashMap::new();
    patterns
        .iter()
        .filter(|c| {
            let n = seen.entry(c.position).or_default();
            *n += 1;
            *n <= k
        })
        .cloned()
        .collect()
}

/// Lowercased `(gold, predicted)` lemma pairs where the two differ.
///
/// Tokens whose gold UPOS is `SYM` are left out unless `include_sym` is set.
pub fn lemma_errors(
    gold: &Document,
    pred: &Document,
    include_sym: bool,
) -> Result<Vec<(String, String)>, AnalysisError> {
    check_alignment(gold, pred)?;
    let mut out = Vec::new();
    for (gt, pt) in gold.tokens().zip(pred.tokens()) {
        if !include_sym && gt.upos == "SYM" {
            continue;
        }
        let g = Field::Lemma.value_of(gt);
        let p = Field::Lemma.value_of(pt);
        if g != p {
            out.push((g.into_owned(), p.into_owned()));
        }
    }
    Ok(out)
}

/// Off-diagonal counts of `(gold UPOS, predicted UPOS)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PosConfusionMatrix {
    pub counts: BTreeMap<(String, String), u64>,
}

impl PosConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Errors made on tokens with the given gold tag.
    pub fn row_total(&self, gold: &str) -> u64 {
        self.counts
            .iter()
            .filter(|((g, _), _)| g == gold)
            .map(|(_, c)| c)
            .sum()
    }

    /// For one gold tag, the share of its errors going to each predicted tag,
    /// largest first.
    pub fn row_shares(&self, gold: &str) -> Vec<(String, f64)> {
        let total = self.row_total(gold);
        if total == 0 {
            return Vec::new();
        }
        let mut v: Vec<(String, f64)> = self
            .counts
            .iter()
            .filter(|((g, _), _)| g == gold)
            .map(|((_, p), &c)| (p.clone(), c as f64 / total as f64))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// All cells sorted by descending count, ties by tag names.
    pub fn ranked(&self) -> Vec<(&str, &str, u64)> {
        let mut v: Vec<(&str, &str, u64)> = self
            .counts
            .iter()
            .map(|((g, p), &c)| (g.as_str(), p.as_str(), c))
            .collect();
        v.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(b.0)).then(a.1.cmp(b.1)));
        v
    }
}

pub fn pos_confusions(gold: &Document, pred: &Document) -> Result<PosConfusionMatrix, AnalysisError> {
    check_alignment(gold, pred)?;
    let mut m = PosConfusionMatrix::default();
    for (gt, pt) in gold.tokens().zip(pred.tokens()) {
        if gt.upos != pt.upos {
            *m.counts
                .entry((gt.upos.clone(), pt.upos.clone()))
                .or_default() += 1;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenreErrors {
    pub genre: String,
    pub errors: u64,
    /// `None` when there are no errors at all across genres.
    pub share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenreErrorDistribution {
    pub field: Field,
    pub total: u64,
    pub genres: Vec<GenreErrors>,
}

impl GenreErrorDistribution {
    pub fn get(&self, genre: &str) -> Option<&GenreErrors> {
        self.genres.iter().find(|g| g.genre == genre)
    }
}

pub fn genre_distribution(
    reports: &BTreeMap<String, EvalReport>,
    field: Field,
) -> Result<GenreErrorDistribution, AnalysisError> {
    if reports.is_empty() {
        return Err(AnalysisError::NoReports);
    }
    let counts: Vec<(String, u64)> = reports
        .iter()
        .map(|(g, r)| (g.clone(), r.errors(field)))
        .collect();
    let total: u64 = counts.iter().map(|(_, c)| c).sum();
    let genres = counts
        .into_iter()
        .map(|(genre, errors)| GenreErrors {
            genre,
            errors,
            share: (total > 0).then(|| errors as f64 / total as f64),
        })
        .collect();
    Ok(GenreErrorDistribution {
        field,
        total,
        genres,
    })
}

/// Removes every token whose gold UPOS is `tag` from both documents,
/// renumbering ids and dropping sentences left empty.
pub fn without_gold_upos(
    gold: &Document,
    pred: &Document,
    tag: &str,
) -> Result<(Document, Document), AnalysisError> {
    check_alignment(gold, pred)?;
    let mut g_out = Document::new(gold.source_name.clone(), Vec::new());
    let mut p_out = Document::new(pred.source_name.clone(), Vec::new());
    for (gs, ps) in gold.sentences.iter().zip(&pred.sentences) {
        let keep: Vec<bool> = gs.tokens.iter().map(|t| t.upos != tag).collect();
        if !keep.iter().any(|&k| k) {
            continue;
        }
        let filter = |s: &Sentence| {
            let mut out = Sentence {
                tokens: s
                    .tokens
                    .iter()
                    .zip(&keep)
                    .filter(|(_, &k)| k)
                    .map(|(t, _)| t.clone())
                    .collect(),
                sent_id: s.sent_id.clone(),
                comments: s.comments.clone(),
            };
            out.renumber();
            out
        };
        g_out.sentences.push(filter(gs));
        p_out.sentences.push(filter(ps));
    }
    Ok((g_out, p_out))
}
