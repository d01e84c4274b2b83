use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three polarity classes a document can be labeled with.
///
/// Variant order is the classifier's class order and doubles as its
/// tie-break order: on equal decision values the earlier class wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Negative, Polarity::Neutral, Polarity::Positive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Polarity> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
            Polarity::Positive => "positive",
        }
    }

    /// Numeric code used in sparse feature files: -1, 0, +1.
    pub fn code(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Neutral => 0,
            Polarity::Positive => 1,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized polarity label `{0}`")]
pub struct ParsePolarityError(pub alloc::string::String);

impl FromStr for Polarity {
    type Err = ParsePolarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" | "neg" | "-1" => Ok(Polarity::Negative),
            "neutral" | "neu" | "0" => Ok(Polarity::Neutral),
            "positive" | "pos" | "1" | "+1" => Ok(Polarity::Positive),
            _ => Err(ParsePolarityError(s.into())),
        }
    }
}
