mod common;

use medlat_core::conllu::{parse_conllu, serialize, validate};
use proptest::prelude::*;

#[test]
fn canonical_fixtures_round_trip_byte_exactly() {
    let files = common::canonical_files();
    assert!(files.len() >= 20, "only {} fixtures", files.len());
    let mut saw_sym = false;
    let mut saw_comment = false;
    let mut saw_empty_feats = false;
    for path in files {
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = parse_conllu(&text, &path.display().to_string()).unwrap();
        assert_eq!(serialize(&doc), text, "{}", path.display());
        assert!(validate(&doc).is_empty(), "{}", path.display());
        saw_sym |= doc.tokens().any(|t| t.upos == "SYM" && t.lemma == "_");
        saw_comment |= doc.sentences.iter().any(|s| !s.comments.is_empty());
        saw_empty_feats |= doc.tokens().any(|t| t.feats.is_empty());
    }
    assert!(saw_sym && saw_comment && saw_empty_feats);
}

#[test]
fn sentence_ids_come_from_comments() {
    let text = std::fs::read_to_string(common::fixtures().join("canonical/c00.conllu")).unwrap();
    let doc = parse_conllu(&text, "c00").unwrap();
    assert_eq!(doc.sentences[0].sent_id.as_deref(), Some("c00-1"));
}

proptest! {
    #[test]
    fn generated_documents_round_trip(doc in common::document(4, 8)) {
        let text = serialize(&doc);
        let back = parse_conllu(&text, "generated").unwrap();
        prop_assert_eq!(&back.sentences, &doc.sentences);
        prop_assert_eq!(serialize(&back), text);
    }
}
