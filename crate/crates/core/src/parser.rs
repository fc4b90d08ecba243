//! Deterministic parsing of spatial-language sentences into observation
//! tuples `(target, relation, landmark, negated)`.
//!
//! The grammar is a pattern grammar over lower-cased tokens. A sentence is
//! split into clauses on commas and "and"; inside each clause the landmark
//! mention anchors the parse, the relation phrase is the longest alias that
//! ends right before it, negation words before the relation flip the
//! `negated` flag, and the target is the first known target noun (or a
//! structural fallback) before the relation. Relation phrases, the word
//! part of landmark names and target nouns tolerate one edit
//! (Damerau-Levenshtein); landmark numbers must match exactly.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::map::WorldMap;
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum ParseError {
    #[error("no spatial observation found")]
    NoObservationFound,
    #[error("unknown landmark `{0}`")]
    UnknownLandmark(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("ambiguous relation `{surface}` (candidates: {candidates:?})")]
    AmbiguousRelation { surface: String, candidates: Vec<Relation> },
}

/// Target, relation, landmark id and negation: the comparable part of an
/// observation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservationTuple {
    pub target: String,
    pub relation: Relation,
    pub landmark: String,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialObservation {
    pub target: String,
    pub relation: Relation,
    pub landmark_id: String,
    pub negated: bool,
    /// Byte range of the clause in the source sentence.
    pub raw_span: Range<usize>,
}

impl SpatialObservation {
    pub fn tuple(&self) -> ObservationTuple {
        ObservationTuple {
            target: self.target.clone(),
            relation: self.relation,
            landmark: self.landmark_id.clone(),
            negated: self.negated,
        }
    }
}

/// Surface form, canonical relation, and whether the form itself negates.
pub const ALIASES: &[(&str, Relation, bool)] = &[
    ("at", Relation::At, false),
    ("near", Relation::Near, false),
    ("nearby", Relation::Near, false),
    ("nowhere near", Relation::Near, true),
    ("close to", Relation::CloseTo, false),
    ("close by", Relation::CloseTo, false),
    ("far from", Relation::FarFrom, false),
    ("far away from", Relation::FarFrom, false),
    ("away from", Relation::FarFrom, false),
    ("in front of", Relation::InFrontOf, false),
    ("in front", Relation::InFrontOf, false),
    ("at the front of", Relation::InFrontOf, false),
    ("behind", Relation::Behind, false),
    ("in back of", Relation::Behind, false),
    ("at the back of", Relation::Behind, false),
    ("next to", Relation::NextTo, false),
    ("beside", Relation::Beside, false),
    ("alongside", Relation::Beside, false),
    ("by", Relation::By, false),
    ("around", Relation::Around, false),
];

const NEGATIONS: &[&str] = &["not", "n't", "nowhere", "never", "no", "cannot"];
const ARTICLES: &[&str] = &["the", "a", "an"];
const MAX_ALIAS_TOKENS: usize = 4;

pub const DEFAULT_TARGETS: &[&str] = &[
    "bag", "robot", "bicycle", "person", "box", "backpack", "suitcase", "package", "car", "dog", "drone", "target",
];

/// Landmark names and target nouns the parser can resolve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    /// Normalized (lower-case, single-spaced) name to landmark id.
    pub landmarks: BTreeMap<String, String>,
    pub targets: Vec<String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self { landmarks: BTreeMap::new(), targets: DEFAULT_TARGETS.iter().map(|s| s.to_string()).collect() }
    }

    pub fn from_map(map: &WorldMap) -> Self {
        let mut lex = Self::new();
        for lm in &map.landmarks {
            lex.insert(&lm.name, &lm.id);
        }
        lex
    }

    pub fn insert(&mut self, name: &str, id: &str) {
        self.landmarks.insert(normalize_phrase(name), id.to_owned());
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// `(display name, id)` pairs in name order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.landmarks.iter().map(|(n, i)| (n.as_str(), i.as_str()))
    }
}

/// Optimal-string-alignment edit distance (insert, delete, substitute,
/// adjacent transposition) over chars.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = alloc::vec![alloc::vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m]
}

fn normalize_phrase(s: &str) -> String {
    let lowered = s.to_lowercase();
    let mut out = String::new();
    for w in lowered.split(|c: char| c.is_whitespace() || ",.;:!?\"".contains(c)) {
        if w.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

fn alias_lookup(surface: &str) -> Option<(Relation, bool)> {
    ALIASES.iter().find(|(a, _, _)| *a == surface).map(|&(_, r, n)| (r, n))
}

fn fuzzy_alias(surface: &str) -> Result<(Relation, bool), ParseError> {
    let mut hits: Vec<(Relation, bool)> = Vec::new();
    for &(alias, rel, neg) in ALIASES {
        if damerau_levenshtein(surface, alias) <= 1 && !hits.contains(&(rel, neg)) {
            hits.push((rel, neg));
        }
    }
    match hits.len() {
        0 => Err(ParseError::UnknownRelation(surface.into())),
        1 => Ok(hits[0]),
        _ => {
            let mut candidates: Vec<Relation> = hits.iter().map(|h| h.0).collect();
            candidates.sort();
            candidates.dedup();
            if candidates.len() == 1 {
                // same relation with and without negation, e.g. a typo that
                // lands between "near" and "nowhere near": prefer the plain form
                Ok((candidates[0], false))
            } else {
                Err(ParseError::AmbiguousRelation { surface: surface.into(), candidates })
            }
        }
    }
}

/// Maps a relation phrase to the canonical vocabulary: exact alias match
/// first, then the unique alias within one edit.
pub fn normalize_relation(surface: &str) -> Result<Relation, ParseError> {
    let s = normalize_phrase(surface);
    if let Some((r, _)) = alias_lookup(&s) {
        return Ok(r);
    }
    fuzzy_alias(&s).map(|(r, _)| r)
}

fn is_number(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_digit())
}

fn words_match_fuzzy(phrase: &[&str], name: &[&str]) -> bool {
    phrase.len() == name.len()
        && phrase.iter().zip(name).all(|(p, n)| {
            if is_number(p) || is_number(n) {
                p == n
            } else {
                p == n || (n.chars().count() >= 4 && damerau_levenshtein(p, n) <= 1)
            }
        })
}

/// Resolves a landmark phrase such as "Building 7" against the lexicon.
/// Matching is case-insensitive; non-numeric words tolerate one edit while
/// numbers must match exactly.
pub fn resolve_landmark(phrase: &str, lexicon: &Lexicon) -> Result<String, ParseError> {
    let norm = normalize_phrase(phrase);
    let words: Vec<&str> = norm.split(' ').filter(|w| !ARTICLES.contains(w)).collect();
    let stripped = words.join(" ");
    if let Some(id) = lexicon.landmarks.get(&stripped) {
        return Ok(id.clone());
    }
    let mut found: Option<&String> = None;
    for (name, id) in &lexicon.landmarks {
        let name_words: Vec<&str> = name.split(' ').collect();
        if words_match_fuzzy(&words, &name_words) {
            if found.is_some_and(|f| f != id) {
                return Err(ParseError::UnknownLandmark(phrase.trim().into()));
            }
            found = Some(id);
        }
    }
    found.cloned().ok_or_else(|| ParseError::UnknownLandmark(phrase.trim().into()))
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    span: Range<usize>,
}

fn push_word(tokens: &mut Vec<Token>, word: &str, start: usize) {
    if word.is_empty() {
        return;
    }
    let end = start + word.len();
    let lower = word.to_lowercase().replace('\u{2019}', "'");
    // split clitics: "bag's" -> "bag" "'s", "isn't" -> "is" "n't"
    for suffix in ["n't", "'s", "'re", "'ll"] {
        let Some(stem) = lower.strip_suffix(suffix) else { continue };
        // byte length of the suffix in the original spelling
        let orig_suffix_len = word
            .char_indices()
            .rev()
            .nth(suffix.chars().count() - 1)
            .map_or(0, |(i, _)| word.len() - i);
        let cut = end - orig_suffix_len;
        if !stem.is_empty() {
            tokens.push(Token { text: stem.to_owned(), span: start..cut });
        } else if suffix != "n't" {
            break;
        }
        tokens.push(Token { text: suffix.into(), span: cut..end });
        return;
    }
    tokens.push(Token { text: lower, span: start..end });
}

fn tokenize(sentence: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in sentence.char_indices() {
        let is_word = ch.is_alphanumeric() || ch == '\'' || ch == '\u{2019}' || ch == '-';
        if is_word {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            push_word(&mut tokens, &sentence[s..i], s);
        }
        if ch == ',' || ch == ';' {
            tokens.push(Token { text: ",".into(), span: i..i + 1 });
        }
    }
    if let Some(s) = start {
        push_word(&mut tokens, &sentence[s..], s);
    }
    tokens
}

fn is_conjunction(w: &str) -> bool {
    w == "," || w == "but" || (w != "an" && damerau_levenshtein(w, "and") <= 1)
}

fn split_clauses(tokens: &[Token]) -> Vec<&[Token]> {
    tokens
        .split(|t| is_conjunction(&t.text))
        .filter(|c| !c.is_empty())
        .collect()
}

struct LandmarkMention {
    start: usize,
    end: usize,
    resolved: Result<String, ParseError>,
}

fn find_landmark(clause: &[Token], lexicon: &Lexicon) -> Option<LandmarkMention> {
    let words: Vec<&str> = clause.iter().map(|t| t.text.as_str()).collect();
    // names from the lexicon, exact token sequences first
    let mut best: Option<LandmarkMention> = None;
    for (name, id) in lexicon.entries() {
        let nw: Vec<&str> = name.split(' ').collect();
        if nw.len() > words.len() {
            continue;
        }
        for s in 0..=words.len() - nw.len() {
            if words[s..s + nw.len()] == nw[..] {
                let m = LandmarkMention { start: s, end: s + nw.len(), resolved: Ok(id.to_owned()) };
                if best.as_ref().is_none_or(|b| m.end > b.end || (m.end == b.end && m.start < b.start)) {
                    best = Some(m);
                }
            }
        }
    }
    if best.is_some() {
        return best;
    }
    // "<word> <number>" with fuzzy word, resolved (or rejected) by the lexicon
    for j in (1..words.len()).rev() {
        if is_number(words[j]) && !is_number(words[j - 1]) && !NEGATIONS.contains(&words[j - 1]) {
            let phrase_start = j - 1;
            let phrase = alloc::format!("{} {}", words[j - 1], words[j]);
            let resolved = resolve_landmark(&phrase, lexicon);
            let looks_like_name = resolved.is_ok()
                || lexicon.entries().any(|(name, _)| {
                    name.split(' ').next().is_some_and(|w| damerau_levenshtein(w, words[j - 1]) <= 1)
                })
                || damerau_levenshtein(words[j - 1], "building") <= 1;
            if looks_like_name {
                return Some(LandmarkMention { start: phrase_start, end: j + 1, resolved });
            }
        }
    }
    // non-numbered names with one typo per word
    for (name, id) in lexicon.entries() {
        let nw: Vec<&str> = name.split(' ').collect();
        if nw.len() > words.len() || nw.iter().any(|w| is_number(w)) {
            continue;
        }
        for s in 0..=words.len() - nw.len() {
            if words_match_fuzzy(&words[s..s + nw.len()], &nw) {
                return Some(LandmarkMention { start: s, end: s + nw.len(), resolved: Ok(id.to_owned()) });
            }
        }
    }
    None
}

const BE_VERBS: &[&str] = &["is", "'s", "can", "was", "are", "will"];

/// Negation among the words before the relation. Misspelled negations are
/// only recognized in the slots negation takes: after a verb or right
/// before the relation phrase.
fn has_negation(before: &[&str]) -> bool {
    before.iter().enumerate().any(|(i, w)| {
        if NEGATIONS.contains(w) {
            return true;
        }
        let slot = i + 1 == before.len() || (i > 0 && BE_VERBS.contains(&before[i - 1]));
        slot && ((w.len() >= 2 && damerau_levenshtein(w, "not") <= 1) || damerau_levenshtein(w, "nowhere") <= 1)
    })
}

struct RelationMatch {
    start: usize,
    relation: Relation,
    negated: bool,
}

fn find_relation(words: &[&str], end: usize) -> Result<RelationMatch, ParseError> {
    let mut end = end;
    while end > 0 && ARTICLES.contains(&words[end - 1]) {
        end -= 1;
    }
    let max_len = MAX_ALIAS_TOKENS.min(end);
    let mut ambiguous = None;
    // longest span wins; at each length an exact alias beats a fuzzy one
    for len in (1..=max_len).rev() {
        let span = &words[end - len..end];
        let surface = span.join(" ");
        if let Some((relation, negated)) = alias_lookup(&surface) {
            return Ok(RelationMatch { start: end - len, relation, negated });
        }
        // a fuzzy span never swallows a negation word or a clitic
        if len > 1 && span.iter().any(|w| NEGATIONS.contains(w) || w.starts_with('\'')) {
            continue;
        }
        match fuzzy_alias(&surface) {
            Ok((relation, negated)) => return Ok(RelationMatch { start: end - len, relation, negated }),
            Err(e @ ParseError::AmbiguousRelation { .. }) => {
                ambiguous.get_or_insert(e);
            }
            Err(_) => {}
        }
    }
    if let Some(e) = ambiguous {
        return Err(e);
    }
    let tail = words[end.saturating_sub(1)..end].join(" ");
    Err(ParseError::UnknownRelation(tail))
}

const SUBJECT_STOP: &[&str] = &["is", "'s", "can", "was", "will", "could", "may", "might", "be", "wo"];
const FILLER: &[&str] = &[
    "there", "you", "i", "we", "find", "found", "see", "it", "'s", "is", "can", "be", "not", "n't", "also", "at", "by", "to",
    "of", "in", "on", "so", "wo",
];

fn find_target(words: &[&str], lexicon: &Lexicon) -> Option<String> {
    for w in words {
        if lexicon.targets.iter().any(|t| t == w) {
            return Some((*w).to_owned());
        }
    }
    for w in words {
        if w.chars().count() >= 2 && !FILLER.contains(w) && !NEGATIONS.contains(w) && !ARTICLES.contains(w) {
            let mut hits = lexicon.targets.iter().filter(|t| damerau_levenshtein(w, t) <= 1);
            if let (Some(t), None) = (hits.next(), hits.next()) {
                return Some(t.clone());
            }
        }
    }
    // structural fallbacks: "there is a X", "find the X", "the X is"
    for (i, w) in words.iter().enumerate() {
        if *w == "there" || *w == "find" {
            let next = words[i + 1..]
                .iter()
                .find(|x| !ARTICLES.contains(x) && !SUBJECT_STOP.contains(x) && !NEGATIONS.contains(x));
            if let Some(t) = next {
                return Some((*t).to_owned());
            }
        }
    }
    let subject_end = words.iter().position(|w| SUBJECT_STOP.contains(w))?;
    words[..subject_end]
        .iter()
        .rev()
        .find(|w| !ARTICLES.contains(w) && !FILLER.contains(w))
        .map(|w| (*w).to_owned())
}

fn clause_has_exact_relation(words: &[&str]) -> Option<usize> {
    for s in 0..words.len() {
        for len in (1..=MAX_ALIAS_TOKENS.min(words.len() - s)).rev() {
            if alias_lookup(&words[s..s + len].join(" ")).is_some() {
                return Some(s + len);
            }
        }
    }
    None
}

/// Parses a sentence into one observation per (relation, landmark) clause.
pub fn parse(sentence: &str, lexicon: &Lexicon) -> Result<Vec<SpatialObservation>, ParseError> {
    let tokens = tokenize(sentence);
    let mut out = Vec::new();
    let mut last_target: Option<String> = None;
    for clause in split_clauses(&tokens) {
        let words: Vec<&str> = clause.iter().map(|t| t.text.as_str()).collect();
        let span = clause[0].span.start..clause[clause.len() - 1].span.end;
        let Some(mention) = find_landmark(clause, lexicon) else {
            if let Some(after) = clause_has_exact_relation(&words) {
                let rest: Vec<&str> = words[after..].iter().copied().filter(|w| !ARTICLES.contains(w)).collect();
                if !rest.is_empty() {
                    return Err(ParseError::UnknownLandmark(rest.join(" ")));
                }
            }
            continue;
        };
        let rel = find_relation(&words, mention.start)?;
        let landmark_id = mention.resolved?;
        let before = &words[..rel.start];
        let negated = rel.negated || has_negation(before);
        let target = find_target(before, lexicon)
            .or_else(|| last_target.clone())
            .unwrap_or_else(|| "target".into());
        last_target = Some(target.clone());
        out.push(SpatialObservation { target, relation: rel.relation, landmark_id, negated, raw_span: span });
    }
    if out.is_empty() {
        Err(ParseError::NoObservationFound)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        for k in 1..=20 {
            lex.insert(&alloc::format!("Building {k}"), &alloc::format!("b{k}"));
        }
        lex.insert("City Library", "lib");
        lex
    }

    fn tuples(s: &str) -> Vec<ObservationTuple> {
        parse(s, &lexicon()).unwrap().iter().map(|o| o.tuple()).collect()
    }

    fn t(target: &str, relation: Relation, landmark: &str, negated: bool) -> ObservationTuple {
        ObservationTuple { target: target.into(), relation, landmark: landmark.into(), negated }
    }

    #[test]
    fn two_clause_example() {
        assert_eq!(
            tuples("The robot is in front of building 1, and a bicycle is near building 2"),
            vec![t("robot", Relation::InFrontOf, "b1", false), t("bicycle", Relation::Near, "b2", false)]
        );
    }

    #[test]
    fn contraction_with_negation() {
        assert_eq!(tuples("the bag's not in front of building 5"), vec![t("bag", Relation::InFrontOf, "b5", true)]);
        assert_eq!(tuples("The bag isn't near Building 5."), vec![t("bag", Relation::Near, "b5", true)]);
    }

    #[test]
    fn existential_and_passive_forms() {
        assert_eq!(tuples("There is a bag in front of Building 16."), vec![t("bag", Relation::InFrontOf, "b16", false)]);
        assert_eq!(tuples("The bag can be found around building 4"), vec![t("bag", Relation::Around, "b4", false)]);
        assert_eq!(tuples("you can find the bag around building 4"), vec![t("bag", Relation::Around, "b4", false)]);
        assert_eq!(tuples("the bag's close to building 6"), vec![t("bag", Relation::CloseTo, "b6", false)]);
    }

    #[test]
    fn nowhere_near_negates_near() {
        assert_eq!(tuples("The bag is nowhere near building 3"), vec![t("bag", Relation::Near, "b3", true)]);
    }

    #[test]
    fn continuation_clause_inherits_target() {
        assert_eq!(
            tuples("the bag is near building 3 and not behind building 4"),
            vec![t("bag", Relation::Near, "b3", false), t("bag", Relation::Behind, "b4", true)]
        );
    }

    #[test]
    fn unknown_target_kept_verbatim() {
        assert_eq!(tuples("the umbrella is by building 2"), vec![t("umbrella", Relation::By, "b2", false)]);
    }

    #[test]
    fn named_landmarks_without_numbers() {
        assert_eq!(tuples("the bag is next to the city library"), vec![t("bag", Relation::NextTo, "lib", false)]);
        assert_eq!(tuples("the bag is next to the city libary"), vec![t("bag", Relation::NextTo, "lib", false)]);
    }

    #[test]
    fn normalize_relation_examples() {
        assert_eq!(normalize_relation("alongside"), Ok(Relation::Beside));
        assert_eq!(normalize_relation("infront of"), Ok(Relation::InFrontOf));
        assert_eq!(normalize_relation("In Front Of"), Ok(Relation::InFrontOf));
        assert_eq!(normalize_relation("xyzzy"), Err(ParseError::UnknownRelation("xyzzy".into())));
        assert!(matches!(normalize_relation("bt"), Err(ParseError::AmbiguousRelation { .. })));
    }

    // Oracle: every alias reachable from "infront of" by one edit.
    #[test]
    fn infront_of_has_a_unique_one_edit_alias() {
        let hits: Vec<_> = ALIASES.iter().filter(|(a, _, _)| damerau_levenshtein("infront of", a) <= 1).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1, Relation::InFrontOf);
    }

    #[test]
    fn resolve_landmark_examples() {
        let lex = lexicon();
        assert_eq!(resolve_landmark("Building 7", &lex), Ok("b7".into()));
        assert_eq!(resolve_landmark("buliding 7", &lex), Ok("b7".into()));
        assert_eq!(resolve_landmark("the BUILDING 12", &lex), Ok("b12".into()));
        assert_eq!(resolve_landmark("Building 99", &lex), Err(ParseError::UnknownLandmark("Building 99".into())));
        // no tolerance on digits
        assert!(resolve_landmark("Building 71", &lex).is_err());
    }

    #[test]
    fn typo_in_building_word_only() {
        // one edit on the word token, digits untouched
        assert_eq!(damerau_levenshtein("buliding", "building"), 1);
        assert_eq!(tuples("the bag is near buliding 7"), vec![t("bag", Relation::Near, "b7", false)]);
    }

    #[test]
    fn error_paths() {
        let lex = lexicon();
        assert_eq!(parse("hello there", &lex), Err(ParseError::NoObservationFound));
        assert_eq!(parse("the bag is near building 99", &lex), Err(ParseError::UnknownLandmark("building 99".into())));
        assert_eq!(parse("xyzzy building 1", &lex), Err(ParseError::UnknownRelation("xyzzy".into())));
        assert!(matches!(parse("the bag is near the old oak", &lex), Err(ParseError::UnknownLandmark(_))));
        assert_eq!(parse("", &lex), Err(ParseError::NoObservationFound));
    }

    #[test]
    fn typos_in_relations_and_targets() {
        assert_eq!(tuples("the bga is nera building 3"), vec![t("bag", Relation::Near, "b3", false)]);
        assert_eq!(tuples("the bag is clsoe to building 3"), vec![t("bag", Relation::CloseTo, "b3", false)]);
        assert_eq!(tuples("the bag is nto in fornt of building 3"), vec![t("bag", Relation::InFrontOf, "b3", true)]);
    }

    #[test]
    fn spans_point_into_source() {
        let s = "The robot is in front of building 1, and a bicycle is near building 2";
        let obs = parse(s, &lexicon()).unwrap();
        assert_eq!(&s[obs[0].raw_span.clone()], "The robot is in front of building 1");
        assert_eq!(&s[obs[1].raw_span.clone()], "a bicycle is near building 2");
    }

    #[test]
    fn damerau_levenshtein_basics() {
        assert_eq!(damerau_levenshtein("", "abc"), 3);
        assert_eq!(damerau_levenshtein("near", "nera"), 1);
        assert_eq!(damerau_levenshtein("kitten", "sitting"), 3);
    }

    proptest::proptest! {
        #[test]
        fn parse_never_panics(s in "\\PC{0,80}") {
            let _ = parse(&s, &lexicon());
        }

        #[test]
        fn negation_only_flips_the_flag(k in 1usize..20, ri in 0usize..10) {
            let rel = Relation::ALL[ri];
            let pos = alloc::format!("the bag is {} building {k}", rel.phrase());
            let neg = alloc::format!("the bag is not {} building {k}", rel.phrase());
            let a = parse(&pos, &lexicon()).unwrap();
            let b = parse(&neg, &lexicon()).unwrap();
            proptest::prop_assert_eq!(a[0].relation, b[0].relation);
            proptest::prop_assert!(!a[0].negated && b[0].negated);
        }
    }
}
