//! CoNLL-U reading, writing and validation.
//!
//! The data model is deliberately narrow: one token per line, ids running
//! 1..=n in every sentence. Multiword ranges (`3-4`) and empty nodes (`3.1`)
//! are rejected by default; [`ParseOptions::drop_unsupported`] removes them
//! before parsing and notes the fact in [`Document::provenance`].
//!
//! Columns the toolkit does not interpret (XPOS, HEAD, DEPREL, DEPS, MISC)
//! are carried verbatim so a document can be written back unchanged.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The seventeen Universal Dependencies part-of-speech tags.
pub const UPOS_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

/// Placeholder for an absent value in any CoNLL-U column.
pub const EMPTY: &str = "_";

/// Whether `tag` may appear in the UPOS column (`_` included).
pub fn is_valid_upos(tag: &str) -> bool {
    tag == EMPTY || UPOS_TAGS.contains(&tag)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("MalformedLine: line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("NonConsecutiveIds: sentence {sentence} (line {line})")]
    NonConsecutiveIds { sentence: usize, line: usize },
    #[error("UnsupportedToken: line {line}: multiword range or empty node {id:?}")]
    UnsupportedToken { line: usize, id: String },
    #[error("InvalidUpos: line {line}: {tag:?}")]
    InvalidUpos { line: usize, tag: String },
    #[error("InvalidFeats: line {line}: {reason}")]
    InvalidFeats { line: usize, reason: String },
    #[error("DanglingComments: line {line}: comment block not followed by a token line")]
    DanglingComments { line: usize },
}

/// Feature key order: case-insensitive, so `Number` sorts before `NumType`.
pub fn feat_order(a: &str, b: &str) -> std::cmp::Ordering {
    a.to_ascii_lowercase()
        .cmp(&b.to_ascii_lowercase())
        .then_with(|| a.cmp(b))
}

/// Morphological features as `(key, value)` pairs.
///
/// Parsing always yields the canonical form (keys strictly increasing). The
/// inner vector is public so non-canonical values can be built directly;
/// [`validate`] reports them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feats(pub Vec<(String, String)>);

impl Feats {
    pub fn new() -> Self {
        Feats(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// A copy with keys sorted. Duplicate keys are kept (stable order).
    pub fn canonical(&self) -> Feats {
        let mut v = self.0.clone();
        v.sort_by(|a, b| feat_order(&a.0, &b.0));
        Feats(v)
    }

    pub fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| feat_order(&w[0].0, &w[1].0) == std::cmp::Ordering::Less)
    }

    fn parse_column(s: &str) -> Result<Feats, String> {
        if s == EMPTY {
            return Ok(Feats::new());
        }
        let mut pairs = Vec::new();
        for part in s.split('|') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("feature {part:?} lacks '='"))?;
            if k.is_empty() || v.is_empty() {
                return Err(format!("feature {part:?} has an empty key or value"));
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        pairs.sort_by(|a, b| feat_order(&a.0, &b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(format!("duplicate feature key {:?}", w[0].0));
        }
        Ok(Feats(pairs))
    }
}

impl fmt::Display for Feats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EMPTY);
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for Feats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feats::parse_column(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Feats,
    pub head: String,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// A token with every column except id and form set to `_`.
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: EMPTY.to_string(),
            upos: EMPTY.to_string(),
            xpos: EMPTY.to_string(),
            feats: Feats::new(),
            head: EMPTY.to_string(),
            deprel: EMPTY.to_string(),
            deps: EMPTY.to_string(),
            misc: EMPTY.to_string(),
        }
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = lemma.into();
        self
    }

    pub fn with_upos(mut self, upos: impl Into<String>) -> Self {
        self.upos = upos.into();
        self
    }

    pub fn with_feats(mut self, feats: Feats) -> Self {
        self.feats = feats;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Value of a `# sent_id = ...` comment, if one is present.
    pub sent_id: Option<String>,
    /// Comment lines verbatim, including the leading `#`.
    pub comments: Vec<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            sent_id: None,
            comments: Vec::new(),
        }
    }

    /// Builds a sentence from `(form, lemma, upos)` triples, numbering ids
    /// from 1.
    pub fn from_triples<S: AsRef<str>>(triples: &[(S, S, S)]) -> Self {
        let tokens = triples
            .iter()
            .enumerate()
            .map(|(i, (f, l, u))| {
                Token::new(i + 1, f.as_ref())
                    .with_lemma(l.as_ref())
                    .with_upos(u.as_ref())
            })
            .collect();
        Sentence::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Renumbers token ids 1..=n.
    pub fn renumber(&mut self) {
        for (i, t) in self.tokens.iter_mut().enumerate() {
            t.id = i + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
    /// Notes about how the document was assembled (files read, lines dropped).
    pub provenance: Vec<String>,
}

impl Document {
    pub fn new(source_name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            sentences,
            source_name: source_name.into(),
            provenance: Vec::new(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Appends the sentences of `other`, keeping its provenance notes.
    pub fn extend(&mut self, other: Document) {
        self.sentences.extend(other.sentences);
        self.provenance.extend(other.provenance);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Skip multiword-range and empty-node lines instead of failing.
    pub drop_unsupported: bool,
}

/// Parses CoNLL-U text with default options.
pub fn parse_conllu(text: &str, source_name: &str) -> Result<Document, ConlluError> {
    parse_conllu_with(text, source_name, ParseOptions::default())
}

pub fn parse_conllu_with(
    text: &str,
    source_name: &str,
    options: ParseOptions,
) -> Result<Document, ConlluError> {
    let mut sentences = Vec::new();
    let mut comments: Vec<String> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut first_comment_line = 0;
    let mut dropped = 0usize;

    let mut flush = |comments: &mut Vec<String>,
                     tokens: &mut Vec<Token>,
                     line_no: usize,
                     comment_line: usize|
     -> Result<(), ConlluError> {
        if tokens.is_empty() {
            if !comments.is_empty() {
                return Err(ConlluError::DanglingComments { line: comment_line });
            }
            return Ok(());
        }
        let sentence_index = sentences.len();
        for (i, t) in tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(ConlluError::NonConsecutiveIds {
                    sentence: sentence_index,
                    line: line_no,
                });
            }
        }
        let sent_id = comments.iter().find_map(|c| sent_id_of(c));
        sentences.push(Sentence {
            tokens: std::mem::take(tokens),
            sent_id,
            comments: std::mem::take(comments),
        });
        Ok(())
    };

    let mut last_line = 0;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            flush(&mut comments, &mut tokens, line_no, first_comment_line)?;
            continue;
        }
        if line.starts_with('#') {
            if !tokens.is_empty() {
                return Err(ConlluError::MalformedLine {
                    line: line_no,
                    reason: "comment inside a sentence".into(),
                });
            }
            if comments.is_empty() {
                first_comment_line = line_no;
            }
            comments.push(line.to_string());
            continue;
        }
        match parse_token_line(line, line_no) {
            Ok(t) => tokens.push(t),
            Err(ConlluError::UnsupportedToken { .. }) if options.drop_unsupported => {
                dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    flush(&mut comments, &mut tokens, last_line, first_comment_line)?;

    let mut doc = Document::new(source_name, sentences);
    if dropped > 0 {
        doc.provenance.push(format!(
            "{source_name}: dropped {dropped} multiword-range/empty-node lines"
        ));
    }
    Ok(doc)
}

fn sent_id_of(comment: &str) -> Option<String> {
    let body = comment.strip_prefix('#')?.trim_start();
    let rest = body.strip_prefix("sent_id")?.trim_start();
    let value = rest.strip_prefix('=')?.trim();
    Some(value.to_string())
}

fn parse_token_line(line: &str, line_no: usize) -> Result<Token, ConlluError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 10 {
        return Err(ConlluError::MalformedLine {
            line: line_no,
            reason: format!("expected 10 tab-separated fields, found {}", fields.len()),
        });
    }
    let id_field = fields[0];
    if id_field.contains('-') || id_field.contains('.') {
        return Err(ConlluError::UnsupportedToken {
            line: line_no,
            id: id_field.to_string(),
        });
    }
    let id: usize = id_field.parse().map_err(|_| ConlluError::MalformedLine {
        line: line_no,
        reason: format!("token id {id_field:?} is not a positive integer"),
    })?;
    if id == 0 {
        return Err(ConlluError::MalformedLine {
            line: line_no,
            reason: "token id 0".into(),
        });
    }
    if fields[1].is_empty() {
        return Err(ConlluError::MalformedLine {
            line: line_no,
            reason: "empty form".into(),
        });
    }
    if !is_valid_upos(fields[3]) {
        return Err(ConlluError::InvalidUpos {
            line: line_no,
            tag: fields[3].to_string(),
        });
    }
    let feats = Feats::parse_column(fields[5])
        .map_err(|reason| ConlluError::InvalidFeats { line: line_no, reason })?;
    Ok(Token {
        id,
        form: fields[1].to_string(),
        lemma: fields[2].to_string(),
        upos: fields[3].to_string(),
        xpos: fields[4].to_string(),
        feats,
        head: fields[6].to_string(),
        deprel: fields[7].to_string(),
        deps: fields[8].to_string(),
        misc: fields[9].to_string(),
    })
}

/// Writes a document as CoNLL-U with LF line endings. Every sentence,
/// including the last, is followed by one blank line.
pub fn serialize(doc: &Document) -> String {
    let mut out = String::new();
    for s in &doc.sentences {
        write_sentence(&mut out, s);
    }
    out
}

fn write_sentence(out: &mut String, s: &Sentence) {
    for c in &s.comments {
        out.push_str(c);
        out.push('\n');
    }
    for t in &s.tokens {
        let cols: [&str; 10] = [
            &t.id.to_string(),
            &t.form,
            &t.lemma,
            &t.upos,
            &t.xpos,
            &t.feats.to_string(),
            &t.head,
            &t.deprel,
            &t.deps,
            &t.misc,
        ];
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    EmptySentence,
    NonConsecutiveId,
    EmptyForm,
    InvalidUpos,
    DuplicateFeatKey,
    UnsortedFeats,
    /// A field contains a tab or newline and would corrupt the column layout.
    ControlCharacter,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub sentence: usize,
    pub token_id: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: sentence {} token {}",
            self.rule, self.sentence, self.token_id
        )
    }
}

/// Lists every breached invariant. Token ids are the ids stored on the
/// token (or the expected id for numbering violations).
pub fn validate(doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();
    for (si, s) in doc.sentences.iter().enumerate() {
        let mut push = |token_id, rule| {
            out.push(Violation {
                sentence: si,
                token_id,
                rule,
            })
        };
        if s.tokens.is_empty() {
            push(0, Rule::EmptySentence);
        }
        for (i, t) in s.tokens.iter().enumerate() {
            if t.id != i + 1 {
                push(i + 1, Rule::NonConsecutiveId);
            }
            if t.form.is_empty() {
                push(t.id, Rule::EmptyForm);
            }
            if !is_valid_upos(&t.upos) {
                push(t.id, Rule::InvalidUpos);
            }
            let mut keys: Vec<&str> = t.feats.0.iter().map(|(k, _)| k.as_str()).collect();
            if !t.feats.is_canonical() {
                keys.sort_unstable();
                if keys.windows(2).any(|w| w[0] == w[1]) {
                    push(t.id, Rule::DuplicateFeatKey);
                } else {
                    push(t.id, Rule::UnsortedFeats);
                }
            }
            let columns = [
                &t.form, &t.lemma, &t.upos, &t.xpos, &t.head, &t.deprel, &t.deps, &t.misc,
            ];
            let feats_bad = t
                .feats
                .0
                .iter()
                .any(|(k, v)| has_control(k) || has_control(v) || k.contains(['|', '=']));
            if columns.iter().any(|c| has_control(c)) || feats_bad {
                push(t.id, Rule::ControlCharacter);
            }
        }
    }
    out
}

fn has_control(s: &str) -> bool {
    s.contains(['\t', '\n', '\r'])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "1\tadducam\tadduco\tVERB\t_\tMood=Ind|Number=Sing\t0\troot\t_\t_\n\
                           2\tregem\trex\tNOUN\t_\tCase=Acc\t1\tobj\t_\t_\n\n";

    #[test]
    fn minimal_document() {
        let doc = parse_conllu(MINIMAL, "t").unwrap();
        assert_eq!(doc.sentences.len(), 1);
        assert_eq!(doc.sentences[0].tokens.len(), 2);
        assert_eq!(serialize(&doc), MINIMAL);
    }

    #[test]
    fn empty_input() {
        let doc = parse_conllu("", "empty").unwrap();
        assert!(doc.sentences.is_empty());
        assert_eq!(serialize(&doc), "");
    }

    #[test]
    fn nine_fields_is_malformed() {
        let err = parse_conllu("1\ta\ta\tNOUN\t_\t_\t0\troot\t_\n", "t").unwrap_err();
        assert!(matches!(err, ConlluError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn feats_are_sorted_at_parse() {
        let text = "1\tpuer\tpuer\tNOUN\t_\tNumber=Sing|Case=Nom\t0\troot\t_\t_\n";
        let doc = parse_conllu(text, "t").unwrap();
        let feats = &doc.sentences[0].tokens[0].feats;
        assert_eq!(
            feats.0,
            vec![
                ("Case".to_string(), "Nom".to_string()),
                ("Number".to_string(), "Sing".to_string())
            ]
        );
        assert!(serialize(&doc).contains("\tCase=Nom|Number=Sing\t"));
    }

    #[test]
    fn feature_keys_sort_case_insensitively() {
        let f: Feats = "NumType=Card|Number=Plur|Case=Nom".parse().unwrap();
        assert_eq!(f.to_string(), "Case=Nom|Number=Plur|NumType=Card");
        assert!(f.is_canonical());
    }

    #[test]
    fn comments_come_first_in_order() {
        let text = "# newdoc id = a\n# sent_id = s1\n# text = rex\n1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
        let doc = parse_conllu(text, "t").unwrap();
        let s = &doc.sentences[0];
        assert_eq!(s.sent_id.as_deref(), Some("s1"));
        assert_eq!(s.comments.len(), 3);
        assert_eq!(serialize(&doc), text);
    }

    #[test]
    fn empty_feats_written_as_underscore() {
        let doc = Document::new("t", vec![Sentence::from_triples(&[("et", "et", "CCONJ")])]);
        let out = serialize(&doc);
        assert_eq!(out, "1\tet\tet\tCCONJ\t_\t_\t_\t_\t_\t_\n\n");
    }

    #[test]
    fn multiword_and_empty_nodes_rejected() {
        let mw = "1-2\tnobiscum\t_\t_\t_\t_\t_\t_\t_\t_\n1\tnobis\tnos\tPRON\t_\t_\t0\troot\t_\t_\n2\tcum\tcum\tADP\t_\t_\t1\tcase\t_\t_\n";
        assert!(matches!(
            parse_conllu(mw, "t"),
            Err(ConlluError::UnsupportedToken { line: 1, .. })
        ));
        let doc = parse_conllu_with(
            mw,
            "t",
            ParseOptions {
                drop_unsupported: true,
            },
        )
        .unwrap();
        assert_eq!(doc.token_count(), 2);
        assert_eq!(doc.provenance.len(), 1);

        let en = "1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_\n1.1\test\tsum\tAUX\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_conllu(en, "t"),
            Err(ConlluError::UnsupportedToken { line: 2, .. })
        ));
    }

    #[test]
    fn non_consecutive_ids() {
        let text = "1\ta\ta\tNOUN\t_\t_\t_\t_\t_\t_\n\n1\tb\tb\tNOUN\t_\t_\t_\t_\t_\t_\n3\tc\tc\tNOUN\t_\t_\t_\t_\t_\t_\n\n";
        assert!(matches!(
            parse_conllu(text, "t"),
            Err(ConlluError::NonConsecutiveIds { sentence: 1, .. })
        ));
    }

    #[test]
    fn invalid_upos_and_feats() {
        let bad_upos = "1\ta\ta\tNN\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_conllu(bad_upos, "t"),
            Err(ConlluError::InvalidUpos { line: 1, .. })
        ));
        let dup = "1\ta\ta\tNOUN\t_\tCase=Nom|Case=Acc\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_conllu(dup, "t"),
            Err(ConlluError::InvalidFeats { line: 1, .. })
        ));
        let noeq = "1\ta\ta\tNOUN\t_\tCase\t_\t_\t_\t_\n";
        assert!(parse_conllu(noeq, "t").is_err());
    }

    #[test]
    fn crlf_input_yields_lf_output() {
        let text = "1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_\r\n\r\n";
        let doc = parse_conllu(text, "t").unwrap();
        assert_eq!(serialize(&doc), "1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_\n\n");
    }

    #[test]
    fn missing_trailing_blank_line_is_accepted() {
        let doc = parse_conllu("1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_", "t").unwrap();
        assert_eq!(doc.token_count(), 1);
    }

    #[test]
    fn dangling_comment_block() {
        let text = "# orphan\n\n1\trex\trex\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
        assert!(matches!(
            parse_conllu(text, "t"),
            Err(ConlluError::DanglingComments { line: 1 })
        ));
    }

    #[test]
    fn validate_clean_document() {
        let doc = parse_conllu(MINIMAL, "t").unwrap();
        assert!(validate(&doc).is_empty());
    }

    #[test]
    fn validate_reports_injected_faults() {
        let mut doc = parse_conllu(MINIMAL, "t").unwrap();
        doc.sentences[0].tokens[1].feats = Feats(vec![
            ("Case".into(), "Acc".into()),
            ("Case".into(), "Nom".into()),
        ]);
        let v = validate(&doc);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::DuplicateFeatKey);
        assert_eq!((v[0].sentence, v[0].token_id), (0, 2));

        let mut doc = parse_conllu(MINIMAL, "t").unwrap();
        doc.sentences[0].tokens[0].upos = "NN".into();
        let rules: Vec<Rule> = validate(&doc).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::InvalidUpos]);

        let mut doc = parse_conllu(MINIMAL, "t").unwrap();
        doc.sentences[0].tokens[1].id = 5;
        doc.sentences[0].tokens[0].form.clear();
        let rules: Vec<Rule> = validate(&doc).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::EmptyForm, Rule::NonConsecutiveId]);
    }
}
