//! Corpus parsing, text cleaning and lemma-disjoint splitting.
//!
//! Corpus files are UTF-8 TSV, one sample per line:
//! `raw_text<TAB>lemma<TAB>class[<TAB>split]`. When the split column is absent
//! the split is taken from the bundled train/test lemma inventory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use thiserror::Error;

use crate::{Split, VerbClass};

/// Characters removed by [`clean_text`].
pub const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

const INFLECTION_SUFFIXES: [&str; 5] = ["s", "es", "ed", "d", "ing"];

/// Irregular past and participle forms of the verbs in the bundled inventory.
const IRREGULAR_FORMS: &[(&str, &[&str])] = &[
    ("blow", &["blew", "blown"]),
    ("break", &["broke", "broken"]),
    ("bring", &["brought"]),
    ("come", &["came"]),
    ("deal", &["dealt"]),
    ("do", &["did", "done"]),
    ("find", &["found"]),
    ("get", &["got", "gotten"]),
    ("give", &["gave", "given"]),
    ("go", &["went", "gone"]),
    ("hold", &["held"]),
    ("lead", &["led"]),
    ("shut", &["shut"]),
    ("take", &["took", "taken"]),
    ("throw", &["threw", "thrown"]),
    ("wake", &["woke", "woken"]),
];

static BUILTIN_INVENTORY: &str = include_str!("../data/lemma_inventory.tsv");

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("lemmas assigned to both train and test: {0:?}")]
    OverlappingLemmas(Vec<String>),
    #[error("lemma {0:?} is in neither the train nor the test set")]
    UnassignedLemma(String),
    #[error("lemma inventory line {line}: {message}")]
    Inventory { line: usize, message: String },
}

/// Drop the punctuation set, trim, collapse whitespace runs, lowercase.
pub fn clean_text(raw: &str) -> String {
    let stripped: String = raw.chars().filter(|c| !PUNCTUATION.contains(*c)).collect();
    let collapsed = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSample {
    pub raw_text: String,
    pub clean_text: String,
    pub lemma: String,
    pub class: VerbClass,
    /// Index of the lexical verb among the whitespace-separated words of `clean_text`.
    pub verb_word_index: usize,
    pub split: Split,
}

impl CorpusSample {
    pub fn verb(&self) -> &str {
        verb_part(&self.lemma)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub samples: Vec<CorpusSample>,
    pub diagnostics: Vec<LineDiagnostic>,
}

impl ParsedCorpus {
    pub fn skipped(&self) -> usize {
        self.diagnostics.len()
    }
}

pub fn parse_corpus(path: &Path) -> Result<ParsedCorpus, TextprepError> {
    let text = fs::read_to_string(path).map_err(|source| TextprepError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_corpus_str(&text))
}

/// Parse corpus text. Bad lines are skipped and reported, never fatal.
/// Blank lines are ignored.
pub fn parse_corpus_str(text: &str) -> ParsedCorpus {
    let inventory = LemmaInventory::builtin();
    let mut parsed = ParsedCorpus::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, inventory) {
            Ok(sample) => parsed.samples.push(sample),
            Err(message) => parsed.diagnostics.push(LineDiagnostic { line: i + 1, message }),
        }
    }
    parsed
}

fn parse_line(line: &str, inventory: &LemmaInventory) -> Result<CorpusSample, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 tab-separated fields, found {}", fields.len()));
    }
    let (raw_text, lemma) = (fields[0], fields[1].trim());
    let class: VerbClass = fields[2].trim().parse()?;
    if !lemma.contains('_') || lemma.starts_with('_') {
        return Err(format!("lemma {lemma:?} is not of the form verb_particle"));
    }
    let split = match fields.get(3) {
        Some(s) => s.trim().parse::<Split>()?,
        None => inventory
            .get(lemma)
            .map(|e| e.split)
            .ok_or_else(|| format!("no split column and lemma {lemma:?} is not in the inventory"))?,
    };
    let clean = clean_text(raw_text);
    let verb_word_index = locate_verb(&clean, lemma)
        .ok_or_else(|| format!("verb {:?} not found in {clean:?}", verb_part(lemma)))?;
    Ok(CorpusSample {
        raw_text: raw_text.to_string(),
        clean_text: clean,
        lemma: lemma.to_string(),
        class,
        verb_word_index,
        split,
    })
}

fn verb_part(lemma: &str) -> &str {
    lemma.split('_').next().unwrap_or(lemma)
}

/// Index of the first word of `clean` that is an inflected form of the
/// lemma's verb.
pub fn locate_verb(clean: &str, lemma: &str) -> Option<usize> {
    let verb = verb_part(lemma).to_lowercase();
    clean.split(' ').position(|word| is_verb_form(word, &verb))
}

/// Whether `word` is `verb` or one of its inflections: a suffix from
/// {s, es, ed, d, ing} on the verb itself, on the verb with its final consonant
/// doubled, on the verb minus a final `e` (stems of 3+ characters), or on the
/// verb with a final `y` turned into `i`. Listed irregular forms also match.
pub fn is_verb_form(word: &str, verb: &str) -> bool {
    if word.is_empty() || verb.is_empty() {
        return false;
    }
    if word == verb {
        return true;
    }
    let mut stems = vec![verb.to_string()];
    if let Some(last) = verb.chars().last() {
        let head = &verb[..verb.len() - last.len_utf8()];
        if !"aeiouy".contains(last) {
            stems.push(format!("{verb}{last}"));
        }
        if last == 'e' && head.chars().count() >= 3 {
            stems.push(head.to_string());
        }
        if last == 'y' {
            stems.push(format!("{head}i"));
        }
    }
    let suffixed = stems.iter().any(|stem| {
        word.strip_prefix(stem.as_str())
            .is_some_and(|rest| INFLECTION_SUFFIXES.contains(&rest))
    });
    suffixed
        || IRREGULAR_FORMS
            .iter()
            .any(|(base, forms)| *base == verb && forms.contains(&word))
}

/// Partition samples into (train, test) by lemma. The returned samples carry
/// the split of the set their lemma belongs to.
pub fn split_by_lemma(
    samples: Vec<CorpusSample>,
    train_lemmas: &BTreeSet<String>,
    test_lemmas: &BTreeSet<String>,
) -> Result<(Vec<CorpusSample>, Vec<CorpusSample>), TextprepError> {
    let overlap: Vec<String> = train_lemmas.intersection(test_lemmas).cloned().collect();
    if !overlap.is_empty() {
        return Err(TextprepError::OverlappingLemmas(overlap));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut sample in samples {
        if train_lemmas.contains(&sample.lemma) {
            sample.split = Split::Train;
            train.push(sample);
        } else if test_lemmas.contains(&sample.lemma) {
            sample.split = Split::Test;
            test.push(sample);
        } else {
            return Err(TextprepError::UnassignedLemma(sample.lemma));
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaEntry {
    pub split: Split,
    pub class: VerbClass,
    pub lemma: String,
    pub count: usize,
}

/// Lemma inventory with per-lemma sample counts and split assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaInventory {
    pub entries: Vec<LemmaEntry>,
}

impl LemmaInventory {
    /// The bundled phrasal/prepositional inventory (33 train lemmas, 9 test lemmas).
    pub fn builtin() -> &'static LemmaInventory {
        static INVENTORY: OnceLock<LemmaInventory> = OnceLock::new();
        INVENTORY.get_or_init(|| LemmaInventory::parse(BUILTIN_INVENTORY).expect("bundled inventory is valid"))
    }

    /// Parse `split<TAB>class<TAB>lemma<TAB>count` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TextprepError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TextprepError::Inventory { line: i + 1, message };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", f.len())));
            }
            entries.push(LemmaEntry {
                split: f[0].parse().map_err(err)?,
                class: f[1].parse().map_err(err)?,
                lemma: f[2].to_string(),
                count: f[3].parse().map_err(|e| err(format!("bad count: {e}")))?,
            });
        }
        Ok(LemmaInventory { entries })
    }

    pub fn get(&self, lemma: &str) -> Option<&LemmaEntry> {
        self.entries.iter().find(|e| e.lemma == lemma)
    }

    pub fn lemmas(&self, split: Split) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.lemma.clone())
            .collect()
    }

    pub fn train_lemmas(&self) -> BTreeSet<String> {
        self.lemmas(Split::Train)
    }

    pub fn test_lemmas(&self) -> BTreeSet<String> {
        self.lemmas(Split::Test)
    }

    /// Total sample count per (split, class).
    pub fn totals(&self) -> BTreeMap<(Split, VerbClass), usize> {
        let mut totals = BTreeMap::new();
        for e in &self.entries {
            *totals.entry((e.split, e.class)).or_insert(0) += e.count;
        }
        totals
    }
}
