//! Tokenization, fallback annotation and cue-candidate segmentation.

mod annotate;
mod external;
mod lexicon;
mod segment;

pub use annotate::{
    annotate, annotate_with, lemmatize, tokenize, word_shape, AnnotatedDoc, AnnotatedToken, NO_DEP,
};
pub use external::{load_pre_annotations, parse_pre_annotations, ExternalToken};
pub use lexicon::{is_stopword, stopwords};
pub use segment::{
    generate_candidates, is_enumeration_marker, segment_sentences, Candidate, CandidateKind,
    SegmentConfig,
};

#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::Language;

    fn text_strategy() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "To", "reduce", "routing", "tables", ",", ".", "?", "(", ")", "and", "2", "1.", "IPv6",
            " ", "  ", "end-systems", ";", "Überträgt", "oder", "Daten", "–", "x",
        ]);
        prop::collection::vec(pieces, 0..30).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn tokens_reconstruct_input(text in text_strategy()) {
            let toks = annotate(&text, Language::En);
            let chars: Vec<char> = text.chars().collect();
            let mut rebuilt = String::new();
            let mut pos = 0;
            for t in &toks {
                prop_assert!(t.char_start < t.char_end);
                prop_assert!(t.char_start >= pos);
                let gap: String = chars[pos..t.char_start].iter().collect();
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(&gap);
                rebuilt.push_str(&t.text);
                prop_assert_eq!(t.lemma.to_lowercase(), t.lemma.clone());
                pos = t.char_end;
            }
            rebuilt.extend(&chars[pos..]);
            prop_assert_eq!(rebuilt, text.clone());
            prop_assert_eq!(annotate(&text, Language::En), toks);
        }

        #[test]
        fn phrases_nest_in_one_sentence(text in text_strategy()) {
            let toks = annotate(&text, Language::En);
            let sentences = segment_sentences(&toks);
            // sentences tile the token list
            let mut next = 0;
            for s in &sentences {
                prop_assert_eq!(s.start, next);
                prop_assert!(s.start < s.end);
                next = s.end;
            }
            prop_assert_eq!(next, toks.len());
            for c in generate_candidates(&toks, &sentences, &SegmentConfig::default()) {
                prop_assert!(c.start < c.end);
                let parents = sentences.iter().filter(|s| s.contains(&c)).count();
                prop_assert_eq!(parents, 1);
            }
        }
    }
}
