//! Tokenization and the rule-based fallback annotator.

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use super::external::ExternalToken;
use super::lexicon;
use crate::corpus::Language;
use crate::{Error, Result};

/// Dependency label used when no parser output is available.
pub const NO_DEP: &str = "∅";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub text: String,
    pub lemma: String,
    pub stem: String,
    pub pos: String,
    pub dep: String,
    pub shape: String,
    pub is_stopword: bool,
    /// Character (not byte) offsets into the source text, half-open.
    pub char_start: usize,
    pub char_end: usize,
}

impl AnnotatedToken {
    pub fn is_punct(&self) -> bool {
        self.pos == "PUNCT"
    }

    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

/// A tokenized text: a student answer or a rubric key element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDoc {
    pub id: String,
    pub language: Language,
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedDoc {
    pub fn new(id: impl Into<String>, text: &str, language: Language) -> Self {
        AnnotatedDoc {
            id: id.into(),
            language,
            text: text.to_string(),
            tokens: annotate(text, language),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Character range covered by tokens `[start, end)`.
    pub fn char_range(&self, start: usize, end: usize) -> (usize, usize) {
        (self.tokens[start].char_start, self.tokens[end - 1].char_end)
    }

    /// Source text for tokens `[start, end)`, original spacing included.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        let (a, b) = self.char_range(start, end);
        self.text.chars().skip(a).take(b - a).collect()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits on whitespace and punctuation. Hyphens and apostrophes between
/// letters stay inside a word, as do `.`/`,` between digits.
pub fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !is_word_char(c) {
            out.push((i, i + 1));
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() {
            let c = chars[i];
            if is_word_char(c) {
                i += 1;
                continue;
            }
            let next = chars.get(i + 1).copied();
            let prev = chars[i - 1];
            let joins = match c {
                '-' | '\'' | '’' => prev.is_alphabetic() && next.is_some_and(char::is_alphabetic),
                '.' | ',' => prev.is_ascii_digit() && next.is_some_and(|n| n.is_ascii_digit()),
                _ => false,
            };
            if joins {
                i += 2;
            } else {
                break;
            }
        }
        out.push((start, i));
    }
    out
}

/// Maps upper→X, lower→x, digit→d, keeps other characters, and truncates
/// runs of the same shape character to 4.
pub fn word_shape(text: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    let mut run = 0;
    for c in text.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if Some(s) == last {
            run += 1;
        } else {
            last = Some(s);
            run = 1;
        }
        if run <= 4 {
            out.push(s);
        }
    }
    out
}

pub fn lemmatize(lang: Language, lower: &str) -> String {
    if let Some(l) = lexicon::irregular_lemma(lang, lower) {
        return l.to_string();
    }
    if lang == Language::De || !lower.chars().all(char::is_alphabetic) {
        return lower.to_string();
    }
    let n = lower.chars().count();
    for (suffix, repl) in [("sses", "ss"), ("ches", "ch"), ("shes", "sh"), ("xes", "x"), ("zes", "z")] {
        if n > suffix.len() + 1 && lower.ends_with(suffix) {
            return format!("{}{repl}", &lower[..lower.len() - suffix.len()]);
        }
    }
    if n > 4 && lower.ends_with("ies") {
        return format!("{}y", &lower[..lower.len() - 3]);
    }
    if n > 3
        && lower.ends_with('s')
        && !lower.ends_with("ss")
        && !lower.ends_with("us")
        && !lower.ends_with("is")
    {
        return lower[..lower.len() - 1].to_string();
    }
    lower.to_string()
}

fn stemmer(lang: Language) -> Stemmer {
    Stemmer::create(match lang {
        Language::En => Algorithm::English,
        Language::De => Algorithm::German,
    })
}

fn guess_pos(lang: Language, text: &str, lower: &str) -> &'static str {
    let first = text.chars().next().unwrap_or(' ');
    if !first.is_alphanumeric() {
        return "PUNCT";
    }
    if text.chars().all(|c| c.is_numeric() || c == '.' || c == ',') {
        return "NUM";
    }
    if let Some(tag) = lexicon::closed_class(lang, lower) {
        return tag;
    }
    if !text.chars().any(char::is_alphabetic) {
        return "X";
    }
    match lang {
        Language::En => {
            let ends = |s: &[&str]| s.iter().any(|x| lower.ends_with(x) && lower.len() > x.len() + 2);
            if ends(&["ly"]) {
                "ADV"
            } else if ends(&["ing", "ed", "ize", "ise", "ate", "ify"]) {
                "VERB"
            } else if ends(&["ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ent", "ant"]) {
                "ADJ"
            } else {
                "NOUN"
            }
        }
        Language::De => {
            let ends = |s: &[&str]| s.iter().any(|x| lower.ends_with(x) && lower.len() > x.len() + 2);
            if first.is_uppercase() {
                "NOUN"
            } else if ends(&["lich", "ig", "isch", "bar", "los", "sam"]) {
                "ADJ"
            } else if ends(&["en", "ern", "eln", "t"]) {
                "VERB"
            } else {
                "X"
            }
        }
    }
}

/// Annotates `text` with the fallback annotator.
pub fn annotate(text: &str, lang: Language) -> Vec<AnnotatedToken> {
    let chars: Vec<char> = text.chars().collect();
    let stem = stemmer(lang);
    tokenize(text)
        .into_iter()
        .map(|(s, e)| {
            let surface: String = chars[s..e].iter().collect();
            let lower = surface.to_lowercase();
            let pos = guess_pos(lang, &surface, &lower);
            AnnotatedToken {
                lemma: lemmatize(lang, &lower),
                stem: stem.stem(&lower).into_owned(),
                pos: pos.to_string(),
                dep: NO_DEP.to_string(),
                shape: word_shape(&surface),
                is_stopword: lexicon::is_stopword(lang, &lower),
                char_start: s,
                char_end: e,
                text: surface,
            }
        })
        .collect()
}

/// Annotates `text` and overrides lemma, POS and dependency labels from an
/// external layer. Each fallback token takes the values of the external
/// token it overlaps most (earliest on ties).
pub fn annotate_with(
    text: &str,
    lang: Language,
    external: Option<&[ExternalToken]>,
) -> Result<Vec<AnnotatedToken>> {
    let mut tokens = annotate(text, lang);
    let Some(ext) = external else {
        return Ok(tokens);
    };
    check_tiling(text, ext)?;
    for tok in &mut tokens {
        let best = ext
            .iter()
            .map(|x| {
                let lo = x.char_start.max(tok.char_start);
                let hi = x.char_end.min(tok.char_end);
                (hi.saturating_sub(lo), x)
            })
            .filter(|(ov, _)| *ov > 0)
            .fold(None::<(usize, &ExternalToken)>, |acc, cur| match acc {
                Some(a) if a.0 >= cur.0 => Some(a),
                _ => Some(cur),
            });
        let (_, x) = best.ok_or_else(|| {
            Error::Alignment(format!(
                "token {:?} at {}..{} has no external counterpart",
                tok.text, tok.char_start, tok.char_end
            ))
        })?;
        tok.lemma = x.lemma.to_lowercase();
        tok.pos = x.pos.clone();
        tok.dep = x.dep.clone();
    }
    Ok(tokens)
}

fn check_tiling(text: &str, ext: &[ExternalToken]) -> Result<()> {
    let chars: Vec<char> = text.chars().collect();
    let mut covered = vec![false; chars.len()];
    let mut prev_end = 0;
    for x in ext {
        if x.char_start >= x.char_end || x.char_end > chars.len() || x.char_start < prev_end {
            return Err(Error::Alignment(format!(
                "external token {:?} at {}..{} is out of order or out of bounds",
                x.text, x.char_start, x.char_end
            )));
        }
        let covered_text: String = chars[x.char_start..x.char_end].iter().collect();
        if covered_text != x.text {
            return Err(Error::Alignment(format!(
                "external token {:?} does not match source text {:?} at {}..{}",
                x.text, covered_text, x.char_start, x.char_end
            )));
        }
        covered[x.char_start..x.char_end].iter_mut().for_each(|c| *c = true);
        prev_end = x.char_end;
    }
    if let Some(i) = (0..chars.len()).find(|&i| !covered[i] && !chars[i].is_whitespace()) {
        return Err(Error::Alignment(format!(
            "character {:?} at offset {i} not covered by the external layer",
            chars[i]
        )));
    }
    Ok(())
}
