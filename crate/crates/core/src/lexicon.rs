//! Sentiment lexicon: term prior polarities, emoticons, boosters, negations
//! and laughter abbreviations.
//!
//! Each resource is a UTF-8 text table, one entry per line (term, tab,
//! value), with `#` starting a comment line:
//!
//! ```text
//! hate    -4
//! ail*    -2
//! ailing  -3
//! ```
//!
//! Term patterns ending in `*` match any word with that prefix. An exact
//! entry always shadows a matching prefix pattern, and among patterns the
//! longest wins. All term lookups are case-insensitive.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Token, TokenKind, Tokenizer, DEFAULT_EMOTICONS};
use crate::Polarity;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon file not found: {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {message}")]
    ParseError { file: String, line: usize, message: String },
    #[error("duplicate lexicon entry `{0}`")]
    DuplicateTerm(String),
    #[error("score {score} out of range for `{term}`")]
    ScoreOutOfRange { term: String, score: i32 },
}

/// A term's polarity out of context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorPolarity {
    pub score: i8,
    pub class: Polarity,
    pub is_emoticon: bool,
}

impl PriorPolarity {
    /// Word entries: positive iff score ≥ 2, negative iff score ≤ −2,
    /// neutral for ±1.
    pub fn of_term(score: i8) -> Self {
        let class = if score >= 2 {
            Polarity::Positive
        } else if score <= -2 {
            Polarity::Negative
        } else {
            Polarity::Neutral
        };
        PriorPolarity {
            score,
            class,
            is_emoticon: false,
        }
    }

    /// Emoticon entries are classed by sign; emoticon tables commonly use ±1.
    pub fn of_emoticon(score: i8) -> Self {
        let class = if score > 0 { Polarity::Positive } else { Polarity::Negative };
        PriorPolarity {
            score,
            class,
            is_emoticon: true,
        }
    }

    pub fn is_subjective(&self) -> bool {
        self.class != Polarity::Neutral
    }
}

/// Allowed booster magnitudes.
pub const BOOSTER_VALUES: [i8; 3] = [1, 2, -1];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    exact: BTreeMap<String, i8>,
    prefixes: BTreeMap<String, i8>,
    emoticons: BTreeMap<String, i8>,
    emoticons_folded: BTreeMap<String, i8>,
    boosters: BTreeMap<String, i8>,
    negations: BTreeSet<String>,
    laughter: BTreeSet<String>,
}

fn content_lines<'a>(content: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

fn split_entry(line: &str) -> (&str, Option<&str>) {
    let line = line.trim();
    if let Some((key, rest)) = line.split_once('\t') {
        let value = rest.split('\t').map(str::trim).find(|s| !s.is_empty());
        return (key.trim(), value);
    }
    match line.rsplit_once(char::is_whitespace) {
        Some((key, value)) if value.parse::<i32>().is_ok() => (key.trim(), Some(value)),
        _ => (line, None),
    }
}

fn parse_scored(file: &str, line_no: usize, line: &str) -> Result<(String, i32), LexiconError> {
    let (key, value) = split_entry(line);
    let parse_err = |message: &str| LexiconError::ParseError {
        file: file.to_string(),
        line: line_no,
        message: message.to_string(),
    };
    if key.is_empty() {
        return Err(parse_err("empty entry"));
    }
    let value = value.ok_or_else(|| parse_err("missing score"))?;
    let score = value
        .parse::<i32>()
        .map_err(|_| parse_err("score is not an integer"))?;
    Ok((key.to_string(), score))
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds entries from a `term<TAB>score` table.
    pub fn add_terms(&mut self, file: &str, content: &str) -> Result<(), LexiconError> {
        for (line_no, line) in content_lines(content) {
            let (term, score) = parse_scored(file, line_no, line)?;
            let term = term.to_lowercase();
            if score == 0 || !(-5..=5).contains(&score) {
                return Err(LexiconError::ScoreOutOfRange { term, score });
            }
            let (table, key) = match term.strip_suffix('*') {
                Some(stem) if !stem.is_empty() => (&mut self.prefixes, stem.to_string()),
                _ => (&mut self.exact, term.clone()),
            };
            if table.insert(key, score as i8).is_some() {
                return Err(LexiconError::DuplicateTerm(term));
            }
        }
        Ok(())
    }

    pub fn add_emoticons(&mut self, file: &str, content: &str) -> Result<(), LexiconError> {
        for (line_no, line) in content_lines(content) {
            let (surface, score) = parse_scored(file, line_no, line)?;
            if score == 0 || !(-5..=5).contains(&score) {
                return Err(LexiconError::ScoreOutOfRange { term: surface, score });
            }
            if self.emoticons.insert(surface.clone(), score as i8).is_some() {
                return Err(LexiconError::DuplicateTerm(surface));
            }
            self.emoticons_folded.entry(surface.to_lowercase()).or_insert(score as i8);
        }
        Ok(())
    }

    pub fn add_boosters(&mut self, file: &str, content: &str) -> Result<(), LexiconError> {
        for (line_no, line) in content_lines(content) {
            let (term, boost) = parse_scored(file, line_no, line)?;
            let term = term.to_lowercase();
            if !BOOSTER_VALUES.iter().any(|&b| i32::from(b) == boost) {
                return Err(LexiconError::ScoreOutOfRange { term, score: boost });
            }
            if self.boosters.insert(term.clone(), boost as i8).is_some() {
                return Err(LexiconError::DuplicateTerm(term));
            }
        }
        Ok(())
    }

    /// One negation word per line; any trailing columns are ignored.
    pub fn add_negations(&mut self, _file: &str, content: &str) -> Result<(), LexiconError> {
        for (_, line) in content_lines(content) {
            let (term, _) = split_entry(line);
            let term = term.to_lowercase();
            if !self.negations.insert(term.clone()) {
                return Err(LexiconError::DuplicateTerm(term));
            }
        }
        Ok(())
    }

    /// One laughter abbreviation per line (`lol`, `lmao`, ...).
    pub fn add_laughter(&mut self, _file: &str, content: &str) -> Result<(), LexiconError> {
        for (_, line) in content_lines(content) {
            let (term, _) = split_entry(line);
            let term = term.to_lowercase();
            if !self.laughter.insert(term.clone()) {
                return Err(LexiconError::DuplicateTerm(term));
            }
        }
        Ok(())
    }

    /// Prior polarity of a word, exact entries first, then the longest
    /// matching prefix pattern.
    pub fn term_polarity(&self, word: &str) -> Option<PriorPolarity> {
        let folded = word.to_lowercase();
        if let Some(&score) = self.exact.get(&folded) {
            return Some(PriorPolarity::of_term(score));
        }
        if self.prefixes.is_empty() {
            return None;
        }
        let mut ends: Vec<usize> = folded.char_indices().map(|(i, c)| i + c.len_utf8()).collect();
        ends.reverse();
        ends.into_iter()
            .find_map(|end| self.prefixes.get(&folded[..end]))
            .map(|&score| PriorPolarity::of_term(score))
    }

    pub fn emoticon_polarity(&self, surface: &str) -> Option<PriorPolarity> {
        self.emoticons
            .get(surface)
            .or_else(|| self.emoticons_folded.get(&surface.to_lowercase()))
            .map(|&score| PriorPolarity::of_emoticon(score))
    }

    /// Emoticon surfaces are matched first; word tokens then go through the
    /// term table. Mentions and punctuation never carry polarity.
    pub fn prior_polarity(&self, token: &Token) -> Option<PriorPolarity> {
        if let Some(p) = self.emoticon_polarity(&token.surface) {
            return Some(p);
        }
        match token.kind {
            TokenKind::Word => self.term_polarity(&token.normalized),
            _ => None,
        }
    }

    pub fn booster(&self, token: &Token) -> Option<i8> {
        self.boosters.get(&token.normalized).copied()
    }

    pub fn is_negation(&self, token: &Token) -> bool {
        self.negations.contains(&token.normalized)
    }

    pub fn is_laughter(&self, word: &str) -> bool {
        self.laughter.contains(&word.to_lowercase())
    }

    pub fn emoticon_surfaces(&self) -> impl Iterator<Item = &str> + '_ {
        self.emoticons.keys().map(String::as_str)
    }

    /// Tokenizer whose emoticon inventory is this lexicon's plus the defaults.
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::with_emoticons(self.emoticon_surfaces().chain(DEFAULT_EMOTICONS.iter().copied()))
    }

    pub fn term_count(&self) -> usize {
        self.exact.len() + self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_count() == 0 && self.emoticons.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(terms: &str) -> Lexicon {
        let mut l = Lexicon::new();
        l.add_terms("terms", terms).unwrap();
        l
    }

    #[test]
    fn parses_exact_term() {
        let l = lex("hate\t-4\n");
        let p = l.term_polarity("hate").unwrap();
        assert_eq!(p.score, -4);
        assert_eq!(p.class, Polarity::Negative);
    }

    #[test]
    fn exact_entry_shadows_prefix() {
        let l = lex("ail*\t-2\nailing\t-3\n");
        assert_eq!(l.term_polarity("ail").unwrap().score, -2);
        assert_eq!(l.term_polarity("ails").unwrap().score, -2);
        assert_eq!(l.term_polarity("ailing").unwrap().score, -3);
    }

    #[test]
    fn longest_prefix_wins() {
        let l = lex("hat*\t2\nhate*\t-4\n");
        assert_eq!(l.term_polarity("hates").unwrap().score, -4);
        assert_eq!(l.term_polarity("hats").unwrap().score, 2);
        assert!(l.term_polarity("ha").is_none());
    }

    #[test]
    fn rejects_out_of_range_scores() {
        let mut l = Lexicon::new();
        assert_eq!(
            l.add_terms("t", "great\t9"),
            Err(LexiconError::ScoreOutOfRange {
                term: "great".into(),
                score: 9
            })
        );
        assert!(matches!(l.add_terms("t", "meh\t0"), Err(LexiconError::ScoreOutOfRange { .. })));
        assert!(matches!(l.add_boosters("b", "very\t3"), Err(LexiconError::ScoreOutOfRange { .. })));
    }

    #[test]
    fn rejects_duplicates_after_case_folding() {
        let mut l = Lexicon::new();
        assert_eq!(
            l.add_terms("t", "Good\t2\ngood\t3"),
            Err(LexiconError::DuplicateTerm("good".into()))
        );
    }

    #[test]
    fn reports_parse_line() {
        let mut l = Lexicon::new();
        let err = l.add_terms("terms.txt", "# header\nok\t2\nbroken\tx\n").unwrap_err();
        assert!(matches!(err, LexiconError::ParseError { line: 3, .. }));
        assert!(matches!(l.add_terms("t", "lonely"), Err(LexiconError::ParseError { line: 1, .. })));
    }

    #[test]
    fn case_insensitive_lookup() {
        let l = lex("good\t2");
        assert_eq!(l.term_polarity("GOOD"), l.term_polarity("good"));
        assert!(l.term_polarity("xyzzy").is_none());
    }

    #[test]
    fn neutral_terms_are_kept() {
        let l = lex("code\t1\nbug\t-1");
        assert_eq!(l.term_polarity("code").unwrap().class, Polarity::Neutral);
        assert_eq!(l.term_polarity("bug").unwrap().class, Polarity::Neutral);
    }

    #[test]
    fn emoticons_and_token_dispatch() {
        let mut l = lex("happy\t3");
        l.add_emoticons("e", ":)\t2\n:(\t-1\n:D\t1").unwrap();
        let smile = Token::new(":)", TokenKind::Emoticon);
        let p = l.prior_polarity(&smile).unwrap();
        assert_eq!((p.score, p.class, p.is_emoticon), (2, Polarity::Positive, true));
        let frown = l.prior_polarity(&Token::new(":(", TokenKind::Emoticon)).unwrap();
        assert_eq!(frown.class, Polarity::Negative);
        assert_eq!(l.prior_polarity(&Token::word("Happy")).unwrap().score, 3);
        assert!(l.prior_polarity(&Token::word("!")).is_none());
    }

    #[test]
    fn boosters_negations_laughter() {
        let mut l = Lexicon::new();
        l.add_boosters("b", "really\t1\nextremely\t2\nsomewhat\t-1").unwrap();
        l.add_negations("n", "not\ndon't\n").unwrap();
        l.add_laughter("l", "lol\nlmao").unwrap();
        assert_eq!(l.booster(&Token::word("Really")), Some(1));
        assert!(l.is_negation(&Token::word("NOT")));
        assert!(l.is_laughter("LOL"));
    }

    #[test]
    fn tokenizer_uses_lexicon_emoticons() {
        let mut l = Lexicon::new();
        l.add_emoticons("e", "(-:\t1").unwrap();
        let t = l.tokenizer().tokenize("ok (-: :)");
        let kinds: Vec<_> = t.tokens.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, [TokenKind::Word, TokenKind::Emoticon, TokenKind::Emoticon]);
    }
}
