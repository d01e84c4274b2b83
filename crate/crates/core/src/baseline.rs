//! Lexicon-driven sentence scorer with dual positive/negative strengths.
//!
//! Each sentence gets a positive strength `p` in `[1, 5]` and a negative
//! strength `n` in `[-5, -1]` (±1 meaning absence). A document takes the
//! maximum `p` and the minimum `n` over its sentences, and the pair maps to a
//! trinary label by the sign of `p + n`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{CleanDocument, Token};
use crate::lexicon::Lexicon;
use crate::Polarity;

/// Tokens before a sentiment word that a negation can sit in.
pub const NEGATION_SCOPE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentimentScores {
    p: i8,
    n: i8,
}

impl SentimentScores {
    pub const NONE: SentimentScores = SentimentScores { p: 1, n: -1 };

    /// Returns `None` unless `1 <= p <= 5` and `-5 <= n <= -1`.
    pub fn new(p: i8, n: i8) -> Option<Self> {
        ((1..=5).contains(&p) && (-5..=-1).contains(&n)).then_some(SentimentScores { p, n })
    }

    pub fn p(&self) -> i8 {
        self.p
    }

    pub fn n(&self) -> i8 {
        self.n
    }

    /// Componentwise extremum: max positive, min negative.
    pub fn combine(self, other: SentimentScores) -> SentimentScores {
        SentimentScores {
            p: self.p.max(other.p),
            n: self.n.min(other.n),
        }
    }
}

impl Default for SentimentScores {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrinaryLabel {
    Positive,
    Negative,
    Neutral,
    /// Equal strengths of 4 or more: strongly mixed, excluded from evaluation.
    Undetermined,
}

impl TrinaryLabel {
    pub fn polarity(self) -> Option<Polarity> {
        match self {
            TrinaryLabel::Positive => Some(Polarity::Positive),
            TrinaryLabel::Negative => Some(Polarity::Negative),
            TrinaryLabel::Neutral => Some(Polarity::Neutral),
            TrinaryLabel::Undetermined => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrinaryLabel::Positive => "positive",
            TrinaryLabel::Negative => "negative",
            TrinaryLabel::Neutral => "neutral",
            TrinaryLabel::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for TrinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn trinary(s: SentimentScores) -> TrinaryLabel {
    let sum = s.p + s.n;
    if sum > 0 {
        TrinaryLabel::Positive
    } else if sum < 0 {
        TrinaryLabel::Negative
    } else if s.p < 4 {
        TrinaryLabel::Neutral
    } else {
        TrinaryLabel::Undetermined
    }
}

/// How one token contributed to its sentence score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTrace {
    pub surface: String,
    pub prior: Option<i8>,
    pub boost: Option<i8>,
    pub negated: bool,
    /// Signed strength after boosting and negation; `None` for tokens that
    /// carry no positive or negative polarity.
    pub effective: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceTrace {
    pub tokens: Vec<TokenTrace>,
    pub emphasis: bool,
    pub scores: SentimentScores,
}

pub fn score_sentence(tokens: &[Token], lexicon: &Lexicon) -> SentimentScores {
    trace_sentence(tokens, lexicon).scores
}

pub fn trace_sentence(tokens: &[Token], lexicon: &Lexicon) -> SentenceTrace {
    let mut traces = Vec::with_capacity(tokens.len());
    let mut p: i8 = 1;
    let mut n: i8 = -1;
    let mut has_pos = false;
    let mut has_neg = false;

    for (i, token) in tokens.iter().enumerate() {
        let mut trace = TokenTrace {
            surface: token.surface.clone(),
            prior: None,
            boost: None,
            negated: false,
            effective: None,
        };
        let prior = lexicon.prior_polarity(token);
        trace.prior = prior.map(|pp| pp.score);
        if let Some(pp) = prior.filter(|pp| pp.is_subjective()) {
            let mut magnitude = pp.score.abs();
            if pp.is_emoticon {
                magnitude = magnitude.max(2);
            }
            if let Some(boost) = i.checked_sub(1).and_then(|j| lexicon.booster(&tokens[j])) {
                magnitude = (magnitude + boost).clamp(1, 5);
                trace.boost = Some(boost);
            }
            let mut positive = pp.class == Polarity::Positive;
            let scope = i.saturating_sub(NEGATION_SCOPE)..i;
            if tokens[scope].iter().any(|t| lexicon.is_negation(t)) {
                positive = !positive;
                magnitude = magnitude.max(2);
                trace.negated = true;
            }
            if positive {
                p = p.max(magnitude);
                has_pos |= magnitude >= 2;
                trace.effective = Some(magnitude);
            } else {
                n = n.min(-magnitude);
                has_neg |= magnitude >= 2;
                trace.effective = Some(-magnitude);
            }
        }
        traces.push(trace);
    }

    let emphasis = tokens.last().is_some_and(|t| t.is_punctuation() && t.ends_with_exclamation());
    if emphasis {
        if has_pos {
            p = (p + 1).min(5);
        }
        if has_neg {
            n = (n - 1).max(-5);
        }
    }
    SentenceTrace {
        tokens: traces,
        emphasis,
        scores: SentimentScores { p, n },
    }
}

pub fn score_document(doc: &CleanDocument, lexicon: &Lexicon) -> SentimentScores {
    doc.sentence_tokens()
        .map(|s| score_sentence(s, lexicon))
        .fold(SentimentScores::NONE, SentimentScores::combine)
}

/// Per-token score trace for a document, one annotated line per document.
pub fn explain(doc: &CleanDocument, lexicon: &Lexicon) -> String {
    let mut out = String::new();
    let mut total = SentimentScores::NONE;
    for sentence in doc.sentence_tokens() {
        let trace = trace_sentence(sentence, lexicon);
        for t in &trace.tokens {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&t.surface);
            if let (Some(prior), Some(_)) = (t.prior, t.effective) {
                out.push_str(&format!(" [{prior}]"));
            }
            if let (Some(b), Some(_)) = (t.boost, t.effective) {
                out.push_str(&format!(" [{b:+} booster word]"));
            }
            if t.negated {
                out.push_str(&format!(" [negated: {}]", t.effective.unwrap_or(0)));
            }
        }
        if trace.emphasis {
            out.push_str(" [emphasis]");
        }
        out.push_str(&format!(" [sentence: {}, {}]", trace.scores.p, trace.scores.n));
        total = total.combine(trace.scores);
    }
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str("[result: max + and - of any sentence] ");
    let verdict = match trinary(total) {
        TrinaryLabel::Positive => String::from("[overall result = 1 as pos>-neg]"),
        TrinaryLabel::Negative => String::from("[overall result = -1 as pos<-neg]"),
        TrinaryLabel::Neutral => format!("[overall result = 0 as pos={} neg={}]", total.p, total.n),
        TrinaryLabel::Undetermined => format!("[overall result = undetermined as pos={} neg={}]", total.p, total.n),
    };
    out.push_str(&verdict);
    out
}
