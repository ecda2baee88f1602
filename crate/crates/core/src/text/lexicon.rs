//! Bundled word lists for the rule-based annotator.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::corpus::Language;

static EN_STOP: &str = include_str!("../../data/stopwords/en.txt");
static DE_STOP: &str = include_str!("../../data/stopwords/de.txt");

fn load(list: &'static str) -> HashSet<&'static str> {
    list.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

pub fn stopwords(lang: Language) -> &'static HashSet<&'static str> {
    static EN: OnceLock<HashSet<&str>> = OnceLock::new();
    static DE: OnceLock<HashSet<&str>> = OnceLock::new();
    match lang {
        Language::En => EN.get_or_init(|| load(EN_STOP)),
        Language::De => DE.get_or_init(|| load(DE_STOP)),
    }
}

pub fn is_stopword(lang: Language, lower: &str) -> bool {
    stopwords(lang).contains(lower)
}

pub fn is_coordination(lower: &str) -> bool {
    matches!(lower, "and" | "or" | "und" | "oder")
}

/// Closed-class part-of-speech lookup on lowercased forms.
pub fn closed_class(lang: Language, lower: &str) -> Option<&'static str> {
    let tag = match lang {
        Language::En => match lower {
            "a" | "an" | "the" | "this" | "that" | "these" | "those" | "each" | "every" | "some"
            | "any" | "no" | "all" | "both" => "DET",
            "i" | "you" | "he" | "she" | "it" | "we" | "they" | "me" | "him" | "her" | "us"
            | "them" | "my" | "your" | "his" | "its" | "our" | "their" | "who" | "whom"
            | "which" | "what" | "itself" | "themselves" => "PRON",
            "of" | "in" | "on" | "at" | "by" | "for" | "with" | "from" | "to" | "into" | "over"
            | "under" | "between" | "through" | "during" | "without" | "within" | "about"
            | "against" | "via" | "per" | "as" => "ADP",
            "is" | "are" | "was" | "were" | "be" | "been" | "being" | "am" | "has" | "have"
            | "had" | "do" | "does" | "did" | "can" | "could" | "will" | "would" | "should"
            | "may" | "might" | "must" | "shall" => "VERB",
            "not" | "very" | "also" | "only" | "just" | "then" | "there" | "here" | "now"
            | "too" | "more" | "most" | "less" | "often" | "always" | "never" => "ADV",
            "and" | "or" | "but" | "nor" | "so" | "yet" | "if" | "because" | "while"
            | "although" | "whereas" | "than" => "ADP",
            "one" | "two" | "three" | "four" | "five" | "six" | "seven" | "eight" | "nine"
            | "ten" | "hundred" | "thousand" | "million" | "billion" | "billions" => "NUM",
            _ => return None,
        },
        Language::De => match lower {
            "der" | "die" | "das" | "den" | "dem" | "des" | "ein" | "eine" | "einen" | "einem"
            | "einer" | "eines" | "kein" | "keine" | "jede" | "jeder" | "jedes" | "diese"
            | "dieser" | "dieses" | "alle" => "DET",
            "ich" | "du" | "er" | "sie" | "es" | "wir" | "ihr" | "man" | "sich" | "mich"
            | "dich" | "ihn" | "ihm" | "uns" | "euch" | "ihnen" | "was" | "wer" | "welche" => {
                "PRON"
            }
            "in" | "im" | "an" | "am" | "auf" | "aus" | "bei" | "mit" | "nach" | "von" | "vom"
            | "zu" | "zum" | "zur" | "für" | "durch" | "gegen" | "ohne" | "um" | "über"
            | "unter" | "vor" | "zwischen" | "als" => "ADP",
            "ist" | "sind" | "war" | "waren" | "sein" | "hat" | "haben" | "hatte" | "wird"
            | "werden" | "kann" | "können" | "muss" | "müssen" | "soll" | "sollte" => "VERB",
            "nicht" | "auch" | "nur" | "sehr" | "noch" | "schon" | "dann" | "hier" | "dort"
            | "immer" | "mehr" => "ADV",
            "und" | "oder" | "aber" | "denn" | "sondern" | "weil" | "dass" | "wenn" | "ob" => {
                "ADP"
            }
            "eins" | "zwei" | "drei" | "vier" | "fünf" | "sechs" | "sieben" | "acht" | "neun"
            | "zehn" => "NUM",
            _ => return None,
        },
    };
    Some(tag)
}

/// Irregular lemma lookup on lowercased forms.
pub fn irregular_lemma(lang: Language, lower: &str) -> Option<&'static str> {
    let lemma = match lang {
        Language::En => match lower {
            "is" | "are" | "was" | "were" | "am" | "been" | "being" => "be",
            "has" | "had" | "having" => "have",
            "does" | "did" | "done" => "do",
            "children" => "child",
            "men" => "man",
            "women" => "woman",
            "data" => "data",
            "indices" => "index",
            _ => return None,
        },
        Language::De => match lower {
            "ist" | "sind" | "war" | "waren" | "bin" | "bist" => "sein",
            "hat" | "hatte" | "hast" => "haben",
            "wird" | "wurde" | "wurden" => "werden",
            "kann" | "konnte" => "können",
            "muss" | "musste" => "müssen",
            _ => return None,
        },
    };
    Some(lemma)
}
