//! Template-based generator of observer sentences paired with the tuples
//! they encode. Used to measure parser accuracy and to voice the scripted
//! human in the search simulator.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::parser::{Lexicon, ObservationTuple, ALIASES};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Fraction of subject-predicate sentences; the rest are existential.
    pub subject_predicate: f64,
    /// Fraction of active-voice sentences overall.
    pub active_voice: f64,
    /// Probability that an "is" is written as "'s".
    pub contraction: f64,
    /// Fraction of sentences carrying exactly one typo.
    pub typo_rate: f64,
    pub negation: f64,
    pub multi_clause: f64,
    /// Relations the generator may mention; all ten when empty.
    pub relations: Vec<Relation>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            subject_predicate: 0.830,
            active_voice: 0.697,
            contraction: 0.5,
            typo_rate: 0.325,
            negation: 0.2,
            multi_clause: 0.1,
            relations: Vec::new(),
        }
    }
}

impl CorpusConfig {
    pub fn typo_free() -> Self {
        Self { typo_rate: 0.0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    SubjectPredicate,
    Existential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub sentence: String,
    pub expected: Vec<ObservationTuple>,
    pub structure: Structure,
    pub voice: Voice,
    pub has_typo: bool,
}

/// Surface forms the generator writes for a relation (exact aliases only).
fn surfaces(rel: Relation, negated: bool) -> Vec<&'static str> {
    ALIASES
        .iter()
        .filter(|(s, r, n)| *r == rel && (!*n || negated) && *s != "in front")
        .map(|(s, _, _)| *s)
        .collect()
}

fn landmark_phrase<R: Rng + ?Sized>(rng: &mut R, name: &str) -> String {
    // lexicon names are stored lower-case; capitalize words at random
    if rng.gen_bool(0.5) {
        name.split(' ')
            .map(|w| {
                let mut c = w.chars();
                match c.next() {
                    Some(f) => f.to_uppercase().chain(c).collect::<String>(),
                    None => String::new(),
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        name.to_string()
    }
}

/// Relation phrase plus the negation prefix it needs.
fn relation_words<R: Rng + ?Sized>(rng: &mut R, rel: Relation, negated: bool) -> (String, bool) {
    let forms = surfaces(rel, negated);
    let form = *forms.choose(rng).expect("every relation has a surface form");
    let self_negating = ALIASES.iter().any(|(s, _, n)| *s == form && *n);
    (form.to_string(), negated && !self_negating)
}

fn be<R: Rng + ?Sized>(rng: &mut R, cfg: &CorpusConfig, subject: &str) -> String {
    if rng.gen_bool(cfg.contraction) {
        format!("{subject}'s")
    } else {
        format!("{subject} is")
    }
}

struct Clause {
    text: String,
    tuple: ObservationTuple,
}

fn pick_landmark<'a, R: Rng + ?Sized>(rng: &mut R, lexicon: &'a Lexicon) -> (&'a str, &'a str) {
    let entries: Vec<(&str, &str)> = lexicon.entries().collect();
    *entries.choose(rng).expect("lexicon must be non-empty")
}

fn pick_relation<R: Rng + ?Sized>(rng: &mut R, cfg: &CorpusConfig) -> Relation {
    if cfg.relations.is_empty() {
        *Relation::ALL.choose(rng).unwrap()
    } else {
        *cfg.relations.choose(rng).unwrap()
    }
}

/// Renders one sentence for the given tuple. `structure` and `voice` pick
/// the template family.
pub fn render<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &CorpusConfig,
    tuple: &ObservationTuple,
    landmark_name: &str,
    structure: Structure,
    voice: Voice,
) -> String {
    let (rel, needs_not) = relation_words(rng, tuple.relation, tuple.negated);
    let lm = landmark_phrase(rng, landmark_name);
    let t = &tuple.target;
    match (structure, voice) {
        (Structure::Existential, _) => {
            let det = if t.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            if needs_not {
                let there = if rng.gen_bool(cfg.contraction) { "There's" } else { "There is" };
                format!("{there} not {det} {t} {rel} {lm}.")
            } else {
                format!("{} {det} {t} {rel} {lm}.", be(rng, cfg, "There"))
            }
        }
        (Structure::SubjectPredicate, Voice::Passive) => {
            let not = if needs_not { " not" } else { "" };
            format!("The {t} can{not} be found {rel} {lm}.")
        }
        (Structure::SubjectPredicate, Voice::Active) => {
            if rng.gen_bool(0.3) {
                if needs_not {
                    format!("You won't find the {t} {rel} {lm}.")
                } else {
                    format!("You can find the {t} {rel} {lm}.")
                }
            } else {
                let not = if needs_not { " not" } else { "" };
                format!("{}{not} {rel} {lm}.", be(rng, cfg, &format!("The {t}")))
            }
        }
    }
}

fn make_clause<R: Rng + ?Sized>(rng: &mut R, cfg: &CorpusConfig, lexicon: &Lexicon, target: &str) -> (ObservationTuple, String) {
    let (name, id) = pick_landmark(rng, lexicon);
    let relation = pick_relation(rng, cfg);
    let negated = rng.gen_bool(cfg.negation);
    (ObservationTuple { target: target.into(), relation, landmark: id.into(), negated }, name.into())
}

/// Injects one typo into a random purely alphabetic word.
fn inject_typo<R: Rng + ?Sized>(rng: &mut R, sentence: &str) -> Option<String> {
    let words: Vec<&str> = sentence.split(' ').collect();
    let candidates: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| {
            let core = w.trim_end_matches('.');
            core.len() >= 2 && core.chars().all(|c| c.is_ascii_alphabetic())
        })
        .map(|(i, _)| i)
        .collect();
    let &wi = candidates.choose(rng)?;
    let word = words[wi];
    let (core, tail) = word.split_at(word.trim_end_matches('.').len());
    let mut chars: Vec<char> = core.chars().collect();
    let kind = rng.gen_range(0..3);
    let distinct_pairs: Vec<usize> = (0..chars.len() - 1).filter(|&i| chars[i] != chars[i + 1]).collect();
    match kind {
        1 if !distinct_pairs.is_empty() => {
            let &i = distinct_pairs.choose(rng).unwrap();
            chars.swap(i, i + 1);
        }
        2 => {
            let i = rng.gen_range(0..chars.len());
            chars.remove(i);
        }
        _ => {
            let i = rng.gen_range(0..chars.len());
            let orig = chars[i].to_ascii_lowercase();
            let mut c = orig;
            while c == orig {
                c = (b'a' + rng.gen_range(0..26u8)) as char;
            }
            chars[i] = c;
        }
    }
    let typo: String = chars.into_iter().collect();
    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    out[wi] = format!("{typo}{tail}");
    Some(out.join(" "))
}

/// Draws `n` sentences using the default structure mix.
pub fn generate_corpus<R: Rng + ?Sized>(rng: &mut R, n: usize, lexicon: &Lexicon) -> Vec<CorpusEntry> {
    generate_corpus_with(rng, n, lexicon, &CorpusConfig::default())
}

pub fn generate_corpus_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    lexicon: &Lexicon,
    cfg: &CorpusConfig,
) -> Vec<CorpusEntry> {
    if n == 0 || lexicon.is_empty() {
        return Vec::new();
    }
    let passive_given_sp = ((1.0 - cfg.active_voice) / cfg.subject_predicate).min(1.0);
    let targets: Vec<&str> = ["bag", "bag", "bag", "backpack", "suitcase", "package", "box"].to_vec();
    (0..n)
        .map(|_| {
            let structure = if rng.gen_bool(cfg.subject_predicate) { Structure::SubjectPredicate } else { Structure::Existential };
            let voice = if structure == Structure::SubjectPredicate && rng.gen_bool(passive_given_sp) {
                Voice::Passive
            } else {
                Voice::Active
            };
            let target = *targets.choose(rng).unwrap();
            let (tuple, name) = make_clause(rng, cfg, lexicon, target);
            let first = Clause { text: render(rng, cfg, &tuple, &name, structure, voice), tuple };
            let mut sentence = first.text;
            let mut expected = alloc::vec![first.tuple];
            if rng.gen_bool(cfg.multi_clause) {
                sentence.pop(); // trailing period
                if rng.gen_bool(0.5) {
                    // second observer statement about another object
                    let other = *["bicycle", "person", "dog", "car"].choose(rng).unwrap();
                    let (t2, n2) = make_clause(rng, cfg, lexicon, other);
                    let s2 = render(rng, cfg, &t2, &n2, Structure::SubjectPredicate, Voice::Active);
                    let s2 = lowercase_first(&s2);
                    sentence = format!("{sentence}, and {s2}");
                    expected.push(t2);
                } else {
                    // continuation about the same target
                    let (t2, n2) = make_clause(rng, cfg, lexicon, target);
                    let (rel, needs_not) = relation_words(rng, t2.relation, t2.negated);
                    let lm = landmark_phrase(rng, &n2);
                    let not = if needs_not { "not " } else { "" };
                    sentence = format!("{sentence} and {not}{rel} {lm}.");
                    expected.push(t2);
                }
            }
            let mut has_typo = false;
            if rng.gen_bool(cfg.typo_rate) {
                if let Some(s) = inject_typo(rng, &sentence) {
                    sentence = s;
                    has_typo = true;
                }
            }
            CorpusEntry { sentence, expected, structure, voice, has_typo }
        })
        .collect()
}

fn lowercase_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Fraction of entries whose parse equals the expected tuples exactly.
pub fn parse_accuracy(entries: &[CorpusEntry], lexicon: &Lexicon) -> f64 {
    if entries.is_empty() {
        return 1.0;
    }
    let ok = entries
        .iter()
        .filter(|e| {
            crate::parser::parse(&e.sentence, lexicon)
                .map(|obs| obs.iter().map(|o| o.tuple()).collect::<Vec<_>>() == e.expected)
                .unwrap_or(false)
        })
        .count();
    ok as f64 / entries.len() as f64
}
