//! Sentence and phrase candidates for justification cues.

use serde::{Deserialize, Serialize};

use super::annotate::AnnotatedToken;
use super::lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Sentence,
    Phrase,
}

/// A half-open token range `[start, end)` of an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub start: usize,
    pub end: usize,
}

impl Candidate {
    pub fn new(kind: CandidateKind, start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Candidate { kind, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, other: &Candidate) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentConfig {
    /// Also split phrases at coordinating conjunctions.
    pub split_coordination: bool,
    pub min_phrase_tokens: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            split_coordination: true,
            min_phrase_tokens: 2,
        }
    }
}

fn is_terminator(t: &AnnotatedToken) -> bool {
    matches!(t.text.as_str(), "." | "!" | "?")
}

fn is_digits(t: &AnnotatedToken) -> bool {
    !t.text.is_empty() && t.text.chars().all(|c| c.is_ascii_digit())
}

fn is_capitalized(t: &AnnotatedToken) -> bool {
    t.text.chars().next().is_some_and(char::is_uppercase)
}

/// True when `tokens[i]` is the `.` of an enumeration marker like "2." that
/// is followed by a capitalized token.
fn is_enumeration_dot(tokens: &[AnnotatedToken], i: usize) -> bool {
    i > 0
        && i < tokens.len()
        && tokens[i].text == "."
        && is_digits(&tokens[i - 1])
        && tokens.get(i + 1).is_some_and(is_capitalized)
}

/// True when an enumeration marker ("2." before a capitalized token) starts at `i`.
pub fn is_enumeration_marker(tokens: &[AnnotatedToken], i: usize) -> bool {
    is_digits(&tokens[i]) && is_enumeration_dot(tokens, i + 1)
}

/// Splits after `.`, `!`, `?`, and before enumeration markers ("2. To …").
pub fn segment_sentences(tokens: &[AnnotatedToken]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        if i > start && is_enumeration_marker(tokens, i) {
            out.push(Candidate::new(CandidateKind::Sentence, start, i));
            start = i;
        }
        if is_terminator(&tokens[i]) && !is_enumeration_dot(tokens, i) {
            if i == start && !out.is_empty() {
                // Repeated terminators ("?!") attach to the previous sentence.
                out.last_mut().expect("non-empty").end = i + 1;
            } else {
                out.push(Candidate::new(CandidateKind::Sentence, start, i + 1));
            }
            start = i + 1;
        }
        i += 1;
    }
    if start < tokens.len() {
        out.push(Candidate::new(CandidateKind::Sentence, start, tokens.len()));
    }
    out
}

fn is_delimiter(t: &AnnotatedToken) -> bool {
    matches!(t.text.as_str(), "," | ";" | ":" | "(" | ")" | "–" | "—")
}

fn content_len(tokens: &[AnnotatedToken], start: usize, end: usize) -> usize {
    tokens[start..end].iter().filter(|t| !t.is_punct()).count()
}

/// Trims punctuation on both ends of `[start, end)`.
fn trim(tokens: &[AnnotatedToken], mut start: usize, mut end: usize) -> (usize, usize) {
    while start < end && tokens[start].is_punct() {
        start += 1;
    }
    while end > start && tokens[end - 1].is_punct() {
        end -= 1;
    }
    (start, end)
}

fn split_pieces(
    tokens: &[AnnotatedToken],
    sentence: &Candidate,
    cfg: &SegmentConfig,
) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut start = sentence.start;
    for i in sentence.start..sentence.end {
        if is_delimiter(&tokens[i]) {
            pieces.push((start, i));
            start = i + 1;
        }
    }
    pieces.push((start, sentence.end));
    if !cfg.split_coordination {
        return pieces;
    }
    let mut out = Vec::new();
    for (s, e) in pieces {
        let mut piece_start = s;
        for i in s..e {
            if !lexicon::is_coordination(&tokens[i].lower()) {
                continue;
            }
            let left = content_len(tokens, piece_start, i);
            // The right side runs to the next coordination word or the piece end.
            let right_end = (i + 1..e)
                .find(|&k| lexicon::is_coordination(&tokens[k].lower()))
                .unwrap_or(e);
            let right = content_len(tokens, i + 1, right_end);
            if left >= 2 && right >= 2 {
                out.push((piece_start, i));
                piece_start = i + 1;
            }
        }
        out.push((piece_start, e));
    }
    out
}

/// All sentence candidates plus the phrases obtained by splitting each
/// sentence at in-sentence punctuation and coordination words. Phrases
/// are only produced when a sentence actually splits.
pub fn generate_candidates(
    tokens: &[AnnotatedToken],
    sentences: &[Candidate],
    cfg: &SegmentConfig,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for sentence in sentences {
        out.push(*sentence);
        let pieces = split_pieces(tokens, sentence, cfg);
        if pieces.len() < 2 {
            continue;
        }
        for (s, e) in pieces {
            let (s, e) = trim(tokens, s, e);
            if s < e && content_len(tokens, s, e) >= cfg.min_phrase_tokens {
                out.push(Candidate::new(CandidateKind::Phrase, s, e));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;
    use crate::text::annotate;

    fn toks(s: &str) -> Vec<AnnotatedToken> {
        annotate(s, Language::En)
    }

    fn ranges(c: &[Candidate]) -> Vec<(CandidateKind, usize, usize)> {
        c.iter().map(|c| (c.kind, c.start, c.end)).collect()
    }

    #[test]
    fn two_sentences() {
        let t = toks("A . B ?");
        let s = segment_sentences(&t);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].start, s[0].end, s[1].start, s[1].end), (0, 2, 2, 4));
    }

    #[test]
    fn no_terminal_punctuation() {
        let t = toks("no punctuation here");
        assert_eq!(segment_sentences(&t), vec![Candidate::new(CandidateKind::Sentence, 0, 3)]);
        assert!(segment_sentences(&[]).is_empty());
    }

    #[test]
    fn enumeration_split() {
        let t = toks("1. To support billions of end-systems 2. To reduce routing tables");
        let s = segment_sentences(&t);
        assert_eq!(s.len(), 2);
        assert_eq!(t[s[1].start].text, "2");
        assert_eq!(s[1].end, t.len());
    }

    #[test]
    fn repeated_terminators_attach() {
        let t = toks("Really?! Yes.");
        let s = segment_sentences(&t);
        assert_eq!(ranges(&s), vec![(CandidateKind::Sentence, 0, 3), (CandidateKind::Sentence, 3, 5)]);
    }

    #[test]
    fn number_at_sentence_end_still_terminates() {
        let t = toks("The value is 5. then more");
        assert_eq!(segment_sentences(&t).len(), 2);
    }

    #[test]
    fn comma_split() {
        let t = toks("A B , C D");
        let s = segment_sentences(&t);
        let c = generate_candidates(&t, &s, &SegmentConfig::default());
        assert_eq!(
            ranges(&c),
            vec![
                (CandidateKind::Sentence, 0, 5),
                (CandidateKind::Phrase, 0, 2),
                (CandidateKind::Phrase, 3, 5)
            ]
        );
    }

    #[test]
    fn no_split_points_sentence_only() {
        let t = toks("one two three");
        let s = segment_sentences(&t);
        assert_eq!(generate_candidates(&t, &s, &SegmentConfig::default()), s);
    }

    #[test]
    fn short_sides_dropped() {
        let t = toks("X , y");
        let s = segment_sentences(&t);
        let c = generate_candidates(&t, &s, &SegmentConfig::default());
        assert_eq!(c, s);
    }

    #[test]
    fn coordination_split_configurable() {
        let t = toks("reduce routing tables and simplify protocol processing.");
        let s = segment_sentences(&t);
        let on = generate_candidates(&t, &s, &SegmentConfig::default());
        assert_eq!(on.len(), 3);
        assert_eq!((on[1].start, on[1].end), (0, 3));
        assert_eq!((on[2].start, on[2].end), (4, 7));
        let off = generate_candidates(
            &t,
            &s,
            &SegmentConfig {
                split_coordination: false,
                ..SegmentConfig::default()
            },
        );
        assert_eq!(off.len(), 1);
        // One-word side: no split.
        let t = toks("cats and dogs run");
        let s = segment_sentences(&t);
        assert_eq!(generate_candidates(&t, &s, &SegmentConfig::default()).len(), 1);
    }

    #[test]
    fn parentheses_split() {
        let t = toks("support real time traffic (quality of service)");
        let s = segment_sentences(&t);
        let c = generate_candidates(&t, &s, &SegmentConfig::default());
        let texts: Vec<String> = c[1..]
            .iter()
            .map(|c| t[c.start..c.end].iter().map(|x| x.text.as_str()).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(texts, ["support real time traffic", "quality of service"]);
    }
}
