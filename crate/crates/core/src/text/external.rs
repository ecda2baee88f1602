//! Pre-annotated token layers (CoNLL-style). Columns are tab separated:
//! text, lemma, POS, dependency, character start, character end.
//!
//! ```text
//! # answer_id = a17
//! Data    datum   NOUN    nsubj   0   4
//! flows   flow    VERB    ROOT    5   10
//!
//! # answer_id = a18
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalToken {
    pub text: String,
    pub lemma: String,
    pub pos: String,
    pub dep: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl ExternalToken {
    pub fn new(text: &str, lemma: &str, pos: &str, dep: &str, start: usize, end: usize) -> Self {
        ExternalToken {
            text: text.into(),
            lemma: lemma.into(),
            pos: pos.into(),
            dep: dep.into(),
            char_start: start,
            char_end: end,
        }
    }
}

const HEADER: &str = "# answer_id =";

pub fn parse_pre_annotations(text: &str, origin: &Path) -> Result<BTreeMap<String, Vec<ExternalToken>>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut out: BTreeMap<String, Vec<ExternalToken>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            current = None;
            continue;
        }
        if let Some(id) = line.strip_prefix(HEADER) {
            let id = id.trim().to_string();
            if out.contains_key(&id) {
                return Err(err(lineno, format!("duplicate block for {id:?}")));
            }
            out.insert(id.clone(), Vec::new());
            current = Some(id);
            continue;
        }
        let Some(id) = current.as_ref() else {
            return Err(err(lineno, "token line outside an answer block".into()));
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(err(lineno, format!("expected 6 tab-separated columns, got {}", cols.len())));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| err(lineno, format!("bad offset {s:?}: {e}")))
        };
        let tok = ExternalToken::new(cols[0], cols[1], cols[2], cols[3], num(cols[4])?, num(cols[5])?);
        out.get_mut(id).expect("block exists").push(tok);
    }
    Ok(out)
}

pub fn load_pre_annotations(path: &Path) -> Result<BTreeMap<String, Vec<ExternalToken>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pre_annotations(&text, path)
}
