//! Orthographic rewrite rules for lemma post-correction.
//!
//! Rules are directional (predicted spelling -> gold spelling) and are
//! applied in ruleset order. Each rule makes one left-to-right pass over the
//! word; text it has just written is never rescanned by the same rule.
//!
//! Ruleset files hold one rule per line:
//!
//! ```text
//! rule_id <TAB> pattern <TAB> replacement <TAB> position <TAB> exceptions [<TAB> lexicon]
//! ```
//!
//! `position` is one of `initial`, `middle`, `final`, `anywhere`.
//! `exceptions` and the optional `lexicon` are comma-separated word lists,
//! `_` when empty. A non-empty lexicon restricts the rule to the listed
//! words. Lines starting with `#` are comments; `#ruleset<TAB>name` names
//! the ruleset.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{extract_patterns, ConfusionPattern, Position};

const CI_EXCEPTIONS: &str = include_str!("../data/ci_exceptions.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesetError {
    #[error("InvalidRule: line {line}: {reason}")]
    InvalidRule { line: usize, reason: String },
    #[error("DuplicateRuleId: {0:?}")]
    DuplicateRuleId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RulePosition {
    Initial,
    Middle,
    Final,
    Anywhere,
}

impl RulePosition {
    /// Whether a match at byte range `start..end` of a word `len` bytes long
    /// satisfies the constraint.
    fn admits(self, start: usize, end: usize, len: usize) -> bool {
        match self {
            RulePosition::Anywhere => true,
            RulePosition::Initial => start == 0,
            RulePosition::Final => end == len,
            RulePosition::Middle => start != 0 && end != len,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RulePosition::Initial => "initial",
            RulePosition::Middle => "middle",
            RulePosition::Final => "final",
            RulePosition::Anywhere => "anywhere",
        }
    }
}

impl From<Position> for RulePosition {
    fn from(p: Position) -> Self {
        match p {
            Position::Initial => RulePosition::Initial,
            Position::Middle => RulePosition::Middle,
            Position::Final => RulePosition::Final,
        }
    }
}

impl fmt::Display for RulePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for RulePosition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "initial" => Ok(RulePosition::Initial),
            "middle" => Ok(RulePosition::Middle),
            "final" => Ok(RulePosition::Final),
            "anywhere" => Ok(RulePosition::Anywhere),
            other => Err(format!("unknown position {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub rule_id: String,
    pub pattern: String,
    pub replacement: String,
    pub position: RulePosition,
    /// Whole words this rule never touches.
    pub exceptions: BTreeSet<String>,
    /// If non-empty, the only words this rule touches.
    pub lexicon: BTreeSet<String>,
}

impl RewriteRule {
    pub fn new(
        rule_id: impl Into<String>,
        pattern: impl Into<String>,
        replacement: impl Into<String>,
        position: RulePosition,
    ) -> Self {
        RewriteRule {
            rule_id: rule_id.into(),
            pattern: pattern.into(),
            replacement: replacement.into(),
            position,
            exceptions: BTreeSet::new(),
            lexicon: BTreeSet::new(),
        }
    }

    pub fn with_exceptions<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.exceptions = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_lexicon<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.lexicon = words.into_iter().map(Into::into).collect();
        self
    }

    fn check(&self) -> Result<(), String> {
        if self.rule_id.is_empty() || self.rule_id.contains(['\t', '\n']) {
            return Err("rule id must be non-empty and tab-free".into());
        }
        if self.pattern.is_empty() {
            return Err(format!("rule {}: empty pattern", self.rule_id));
        }
        if self.pattern == self.replacement {
            return Err(format!("rule {}: pattern equals replacement", self.rule_id));
        }
        Ok(())
    }

    /// One pass of this rule over `word`.
    pub fn apply(&self, word: &str) -> String {
        if self.exceptions.contains(word)
            || (!self.lexicon.is_empty() && !self.lexicon.contains(word))
        {
            return word.to_string();
        }
        let len = word.len();
        let mut out = String::with_capacity(len);
        let mut i = 0;
        while i < len {
            let rest = &word[i..];
            if rest.starts_with(&self.pattern) {
                let end = i + self.pattern.len();
                if self.position.admits(i, end, len) {
                    out.push_str(&self.replacement);
                    i = end;
                    continue;
                }
            }
            let c = rest.chars().next().expect("i < len");
            out.push(c);
            i += c.len_utf8();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ruleset {
    pub name: String,
    rules: Vec<RewriteRule>,
}

impl Ruleset {
    pub fn new(name: impl Into<String>, rules: Vec<RewriteRule>) -> Result<Self, RulesetError> {
        let mut ids = HashSet::new();
        for (i, r) in rules.iter().enumerate() {
            r.check()
                .map_err(|reason| RulesetError::InvalidRule { line: i + 1, reason })?;
            if !ids.insert(r.rule_id.as_str()) {
                return Err(RulesetError::DuplicateRuleId(r.rule_id.clone()));
            }
        }
        Ok(Ruleset {
            name: name.into(),
            rules,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Ruleset {
            name: name.into(),
            rules: Vec::new(),
        }
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn get(&self, rule_id: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.rule_id == rule_id)
    }

    /// First rule rewriting `pattern` to `replacement`, if any.
    pub fn find(&self, pattern: &str, replacement: &str) -> Option<&RewriteRule> {
        self.rules
            .iter()
            .find(|r| r.pattern == pattern && r.replacement == replacement)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Appends the rules of `other`; fails on a clashing rule id.
    pub fn extend(&mut self, other: Ruleset) -> Result<(), RulesetError> {
        for r in other.rules {
            if self.get(&r.rule_id).is_some() {
                return Err(RulesetError::DuplicateRuleId(r.rule_id));
            }
            self.rules.push(r);
        }
        Ok(())
    }

    pub fn parse(text: &str, default_name: &str) -> Result<Self, RulesetError> {
        let mut name = default_name.to_string();
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if let Some(rest) = line.strip_prefix("#ruleset\t") {
                name = rest.trim().to_string();
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 && cols.len() != 6 {
                return Err(RulesetError::InvalidRule {
                    line: line_no,
                    reason: format!("expected 5 or 6 tab-separated columns, found {}", cols.len()),
                });
            }
            let position = cols[3]
                .parse()
                .map_err(|reason| RulesetError::InvalidRule { line: line_no, reason })?;
            let rule = RewriteRule {
                rule_id: cols[0].to_string(),
                pattern: cols[1].to_string(),
                replacement: cols[2].to_string(),
                position,
                exceptions: parse_word_list(cols[4]),
                lexicon: cols.get(5).map(|c| parse_word_list(c)).unwrap_or_default(),
            };
            rule.check()
                .map_err(|reason| RulesetError::InvalidRule { line: line_no, reason })?;
            rules.push(rule);
        }
        let set = Ruleset::new(name, rules)?;
        Ok(set)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("#ruleset\t{}\n", self.name);
        for r in &self.rules {
            let mut cols = vec![
                r.rule_id.clone(),
                r.pattern.clone(),
                r.replacement.clone(),
                r.position.to_string(),
                format_word_list(&r.exceptions),
            ];
            if !r.lexicon.is_empty() {
                cols.push(format_word_list(&r.lexicon));
            }
            out.push_str(&cols.join("\t"));
            out.push('\n');
        }
        out
    }
}

fn parse_word_list(s: &str) -> BTreeSet<String> {
    if s == "_" {
        return BTreeSet::new();
    }
    s.split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn format_word_list(words: &BTreeSet<String>) -> String {
    if words.is_empty() {
        "_".to_string()
    } else {
        words.iter().cloned().collect::<Vec<_>>().join(",")
    }
}

/// Applies every rule in order. `word` is expected lowercase.
pub fn apply_rules(ruleset: &Ruleset, word: &str) -> String {
    ruleset
        .rules
        .iter()
        .fold(word.to_string(), |w, rule| rule.apply(&w))
}

/// Lowercases, applies the rules, then restores an initial capital if the
/// input had one.
pub fn normalize_word(ruleset: &Ruleset, word: &str) -> String {
    let capitalized = word.chars().next().is_some_and(char::is_uppercase);
    let out = apply_rules(ruleset, &word.to_lowercase());
    if !capitalized {
        return out;
    }
    let mut chars = out.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

/// The gold spelling conventions: `u` for both vocalic and consonantal
/// *v*, and `-ti-` rather than `-ci-` inside a word.
///
/// k/c, h and diphthong alternations are word-specific, so no blanket rule
/// covers them; use [`mine_gated_rules`] to derive lexicon-restricted rules.
pub fn default_gold_ruleset() -> Ruleset {
    let ci_exceptions = CI_EXCEPTIONS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Ruleset::new(
        "gold-default",
        vec![
            RewriteRule::new("v-u", "v", "u", RulePosition::Anywhere),
            RewriteRule::new("ci-ti", "ci", "ti", RulePosition::Middle).with_exceptions(ci_exceptions),
        ],
    )
    .expect("default rules are well-formed")
}

/// One rule per confusion pattern seen at least `min_count` times,
/// rewriting the predicted side back to the gold side at the same position.
/// Patterns with an empty predicted side cannot be matched and are skipped.
/// Rules are ordered by descending count.
pub fn mine_rules(confusions: &[ConfusionPattern], min_count: u64) -> Ruleset {
    let mut selected: Vec<&ConfusionPattern> = confusions
        .iter()
        .filter(|c| c.count >= min_count.max(1) && !c.pattern.pred.is_empty())
        .filter(|c| c.pattern.pred != c.pattern.gold)
        .collect();
    selected.sort_by_key(|c| std::cmp::Reverse(c.count));
    let mut used = HashSet::new();
    let rules = selected
        .into_iter()
        .map(|c| {
            let base = format!("mined-{}-{}:{}", c.position, c.pattern.gold, c.pattern.pred);
            let mut id = base.clone();
            let mut n = 1;
            while !used.insert(id.clone()) {
                n += 1;
                id = format!("{base}#{n}");
            }
            RewriteRule::new(id, &c.pattern.pred, &c.pattern.gold, c.position.into())
        })
        .collect();
    Ruleset {
        name: "mined".into(),
        rules,
    }
}

/// Like [`mine_rules`], but each rule only fires on the predicted words in
/// which its pattern was observed.
pub fn mine_gated_rules<G, P>(errors: &[(G, P)], min_count: u64) -> Ruleset
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    let mut seen: BTreeMap<(Position, String, String), (u64, BTreeSet<String>)> = BTreeMap::new();
    for (g, p) in errors {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g == p {
            continue;
        }
        for (pat, pos) in extract_patterns(g, p).expect("pair differs") {
            let e = seen.entry((pos, pat.gold, pat.pred)).or_default();
            e.0 += 1;
            e.1.insert(p.to_string());
        }
    }
    let mut entries: Vec<_> = seen
        .into_iter()
        .filter(|((_, _, pred), (count, _))| *count >= min_count.max(1) && !pred.is_empty())
        .collect();
    entries.sort_by_key(|e| std::cmp::Reverse(e.1 .0));
    let rules = entries
        .into_iter()
        .map(|((pos, gold, pred), (_, words))| {
            RewriteRule::new(format!("gated-{pos}-{gold}:{pred}"), pred, gold, pos.into())
                .with_lexicon(words)
        })
        .collect();
    Ruleset {
        name: "mined-gated".into(),
        rules,
    }
}
