//! The canonical spatial-relation vocabulary.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    At,
    Near,
    CloseTo,
    FarFrom,
    InFrontOf,
    Behind,
    NextTo,
    Beside,
    By,
    Around,
}

impl Relation {
    pub const COUNT: usize = 10;

    pub const ALL: [Relation; Relation::COUNT] = [
        Relation::At,
        Relation::Near,
        Relation::CloseTo,
        Relation::FarFrom,
        Relation::InFrontOf,
        Relation::Behind,
        Relation::NextTo,
        Relation::Beside,
        Relation::By,
        Relation::Around,
    ];

    /// Position in [`Relation::ALL`]; also the one-hot slot.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Relation> {
        Relation::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::At => "at",
            Relation::Near => "near",
            Relation::CloseTo => "close_to",
            Relation::FarFrom => "far_from",
            Relation::InFrontOf => "in_front_of",
            Relation::Behind => "behind",
            Relation::NextTo => "next_to",
            Relation::Beside => "beside",
            Relation::By => "by",
            Relation::Around => "around",
        }
    }

    /// The phrase used when writing sentences.
    pub fn phrase(self) -> &'static str {
        match self {
            Relation::At => "at",
            Relation::Near => "near",
            Relation::CloseTo => "close to",
            Relation::FarFrom => "far from",
            Relation::InFrontOf => "in front of",
            Relation::Behind => "behind",
            Relation::NextTo => "next to",
            Relation::Beside => "beside",
            Relation::By => "by",
            Relation::Around => "around",
        }
    }

    /// Relations whose likelihood is the plain proximity sigmoid.
    pub fn is_proximity(self) -> bool {
        matches!(
            self,
            Relation::At
                | Relation::Near
                | Relation::CloseTo
                | Relation::NextTo
                | Relation::Beside
                | Relation::By
        )
    }

    pub fn one_hot(self) -> [f64; Relation::COUNT] {
        let mut v = [0.0; Relation::COUNT];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation name")]
pub struct UnknownRelationName;

impl FromStr for Relation {
    type Err = UnknownRelationName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or(UnknownRelationName)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for r in Relation::ALL {
            assert_eq!(r.name().parse::<Relation>(), Ok(r));
            assert_eq!(Relation::from_index(r.index()), Some(r));
        }
        assert!("within".parse::<Relation>().is_err());
    }

    #[test]
    fn distinct_one_hots_differ_in_two_slots() {
        for a in Relation::ALL {
            for b in Relation::ALL {
                let ham = a
                    .one_hot()
                    .iter()
                    .zip(b.one_hot().iter())
                    .filter(|(x, y)| x != y)
                    .count();
                assert_eq!(ham, if a == b { 0 } else { 2 });
            }
        }
    }
}
