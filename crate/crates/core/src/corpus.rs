//! Post ingestion: markup stripping and tokenization.
//!
//! Every downstream module consumes [`CleanDocument`]s produced here. The
//! tokenizer is deterministic and keeps the token classes the features need
//! intact: emoticons, runs of `?`/`!`, user mentions (rewritten to `@USER`)
//! and elongated words. No stemming, lemmatization or stopword removal.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Meta-token every `@name` mention is rewritten to.
pub const USER_MENTION: &str = "@USER";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("post id must be non-empty")]
    EmptyId,
    #[error("unknown post type `{0}` (expected one of q, a, qc, ac)")]
    UnknownPostType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PostType {
    #[serde(rename = "q")]
    Question,
    #[serde(rename = "a")]
    Answer,
    #[serde(rename = "qc")]
    QuestionComment,
    #[serde(rename = "ac")]
    AnswerComment,
}

impl PostType {
    pub const ALL: [PostType; 4] = [
        PostType::Question,
        PostType::Answer,
        PostType::QuestionComment,
        PostType::AnswerComment,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PostType::Question => "q",
            PostType::Answer => "a",
            PostType::QuestionComment => "qc",
            PostType::AnswerComment => "ac",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PostType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PostType {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "q" | "question" => Ok(PostType::Question),
            "a" | "answer" => Ok(PostType::Answer),
            "qc" | "question_comment" => Ok(PostType::QuestionComment),
            "ac" | "answer_comment" => Ok(PostType::AnswerComment),
            _ => Err(CorpusError::UnknownPostType(s.into())),
        }
    }
}

/// A post as found in the dump, before any cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    id: String,
    pub post_type: PostType,
    pub body: String,
}

impl RawPost {
    pub fn new(id: impl Into<String>, post_type: PostType, body: impl Into<String>) -> Result<Self, CorpusError> {
        let id = id.into();
        if id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        Ok(RawPost {
            id,
            post_type,
            body: body.into(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Emoticon,
    /// A maximal run of `?` and `!` characters.
    MarkRun,
    Mention,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        let surface = surface.into();
        let normalized = surface.to_lowercase();
        Token {
            surface,
            normalized,
            kind,
        }
    }

    /// Shorthand for tests and callers that build token lists by hand:
    /// classifies `surface` the way the default tokenizer would.
    pub fn word(surface: &str) -> Self {
        let kind = if surface == USER_MENTION {
            TokenKind::Mention
        } else if !surface.is_empty() && surface.chars().all(|c| c == '?' || c == '!') {
            TokenKind::MarkRun
        } else if surface.chars().any(is_word_char) {
            TokenKind::Word
        } else {
            TokenKind::Punct
        };
        Token::new(surface, kind)
    }

    pub fn ends_with_exclamation(&self) -> bool {
        self.surface.ends_with('!')
    }

    /// True for tokens made only of punctuation (mark runs, dots, commas, ...).
    pub fn is_punctuation(&self) -> bool {
        matches!(self.kind, TokenKind::MarkRun | TokenKind::Punct)
    }
}

/// A markup-free, tokenized post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    pub post_type: PostType,
    pub text: String,
    pub tokens: Vec<Token>,
    /// Token-index ranges, ordered, non-overlapping and covering `tokens`.
    pub sentences: Vec<Range<usize>>,
}

impl CleanDocument {
    /// Builds a document from already-clean text.
    pub fn from_text(id: impl Into<String>, post_type: PostType, text: &str, tokenizer: &Tokenizer) -> Self {
        let Tokenized { tokens, sentences } = tokenizer.tokenize(text);
        CleanDocument {
            id: id.into(),
            post_type,
            text: text.to_owned(),
            tokens,
            sentences,
        }
    }

    pub fn sentence_tokens(&self) -> impl Iterator<Item = &[Token]> + '_ {
        self.sentences.iter().map(move |r| &self.tokens[r.clone()])
    }

    /// Space-separated normalized tokens, the DSM training line format.
    pub fn token_line(&self) -> String {
        let mut line = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&t.normalized);
        }
        line
    }
}

/// Strips markup from `post.body` and tokenizes the result.
pub fn clean(post: &RawPost, tokenizer: &Tokenizer) -> CleanDocument {
    let text = strip_markup(&post.body);
    CleanDocument::from_text(post.id.clone(), post.post_type, &text, tokenizer)
}

// ---------------------------------------------------------------------------
// Markup stripping
// ---------------------------------------------------------------------------

const BLOCK_TAGS: &[&str] = &[
    "p", "br", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "tr", "table", "hr",
];

const URL_PREFIXES: &[&str] = &["http://", "https://", "ftp://", "www."];

/// Removes code regions, HTML tags and URLs, decodes entities and normalizes
/// whitespace. Never fails; malformed markup is removed on a best-effort
/// basis. The result is a fixed point: stripping it again changes nothing.
pub fn strip_markup(body: &str) -> String {
    let mut current = strip_pass(body);
    loop {
        let next = strip_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn strip_pass(body: &str) -> String {
    let text = remove_fenced_blocks(body);
    let text = remove_code_regions(&text);
    let text = remove_tags(&text);
    let text = decode_entities(&text);
    let text = remove_urls(&text);
    normalize_whitespace(&text)
}

fn remove_fenced_blocks(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_fence = false;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            out.push('\n');
            continue;
        }
        if !in_fence {
            out.push_str(line);
        }
    }
    out
}

/// Finds `<name` followed by `>`, `/` or whitespace at or after `from`.
fn find_open_tag(lower: &str, name: &str, from: usize) -> Option<usize> {
    let needle_len = name.len() + 1;
    let mut start = from;
    while let Some(rel) = lower[start..].find('<') {
        let at = start + rel;
        let rest = &lower[at + 1..];
        if rest.starts_with(name) {
            match lower[at + needle_len..].chars().next() {
                Some(c) if c == '>' || c == '/' || c.is_whitespace() => return Some(at),
                _ => {}
            }
        }
        start = at + 1;
    }
    None
}

fn remove_code_regions(text: &str) -> String {
    let lower = text.to_ascii_lowercase();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    loop {
        let pre = find_open_tag(&lower, "pre", pos);
        let code = find_open_tag(&lower, "code", pos);
        let (start, name) = match (pre, code) {
            (Some(p), Some(c)) if c < p => (c, "code"),
            (Some(p), _) => (p, "pre"),
            (None, Some(c)) => (c, "code"),
            (None, None) => break,
        };
        let close = alloc::format!("</{name}>");
        match lower[start..].find(close.as_str()) {
            Some(rel) => {
                out.push_str(&text[pos..start]);
                out.push(' ');
                pos = start + rel + close.len();
            }
            None => {
                // unclosed region: drop the opening tag only
                let tag_end = lower[start..].find('>').map_or(lower.len(), |e| start + e + 1);
                out.push_str(&text[pos..start]);
                out.push(' ');
                pos = tag_end;
            }
        }
    }
    out.push_str(&text[pos..]);
    out
}

fn remove_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    while let Some(rel) = text[pos..].find('<') {
        let at = pos + rel;
        out.push_str(&text[pos..at]);
        let rest = &text[at + 1..];
        if rest.starts_with("!--") {
            match rest.find("-->") {
                Some(end) => {
                    out.push(' ');
                    pos = at + 1 + end + 3;
                }
                None => {
                    out.push('<');
                    pos = at + 1;
                }
            }
            continue;
        }
        let starts_tag = rest
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?');
        match (starts_tag, rest.find('>')) {
            (true, Some(end)) => {
                let inner = rest[..end].trim_start_matches(['/', '!', '?']);
                let name: String = inner
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .map(|c| c.to_ascii_lowercase())
                    .collect();
                if BLOCK_TAGS.contains(&name.as_str()) {
                    out.push('\n');
                }
                pos = at + 1 + end + 1;
            }
            _ => {
                out.push('<');
                pos = at + 1;
            }
        }
    }
    out.push_str(&text[pos..]);
    out
}

fn named_entity(name: &str) -> Option<char> {
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "hellip" => '…',
        "mdash" => '—',
        "ndash" => '–',
        "rsquo" => '’',
        "lsquo" => '‘',
        "rdquo" => '”',
        "ldquo" => '“',
        "copy" => '©',
        _ => return None,
    })
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    while let Some(rel) = text[pos..].find('&') {
        let at = pos + rel;
        out.push_str(&text[pos..at]);
        let rest = &text[at + 1..];
        let decoded = rest.find(';').filter(|&end| end > 0 && end <= 10).and_then(|end| {
            let name = &rest[..end];
            let ch = if let Some(num) = name.strip_prefix('#') {
                let value = match num.strip_prefix(['x', 'X']) {
                    Some(hex) => u32::from_str_radix(hex, 16).ok(),
                    None => num.parse::<u32>().ok(),
                };
                value.and_then(char::from_u32)
            } else {
                named_entity(name)
            };
            ch.map(|c| (c, end))
        });
        match decoded {
            Some((c, end)) => {
                out.push(c);
                pos = at + 1 + end + 1;
            }
            None => {
                out.push('&');
                pos = at + 1;
            }
        }
    }
    out.push_str(&text[pos..]);
    out
}

fn url_start_at(text: &str, at: usize) -> bool {
    let rest = &text[at..];
    URL_PREFIXES.iter().any(|p| {
        rest.len() >= p.len() && rest.is_char_boundary(p.len()) && rest[..p.len()].eq_ignore_ascii_case(p)
    })
}

fn remove_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let boundary = prev.is_none_or(|p| !is_word_char(p) && p != '/' && p != '.' && p != '@');
        if boundary && url_start_at(text, i) {
            let end = text[i..].find(char::is_whitespace).map_or(text.len(), |e| i + e);
            let url = &text[i..end];
            let kept = url.trim_end_matches(['.', ',', ';', ':', '!', '?', ')', ']', '}', '\'', '"']);
            let tail = &url[kept.len()..];
            out.push_str(tail);
            prev = tail.chars().last().or(Some(' '));
            while iter.peek().is_some_and(|&(j, _)| j < end) {
                iter.next();
            }
            continue;
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split('\n') {
        let mut words = line.split_whitespace().peekable();
        if words.peek().is_none() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for (i, w) in words.enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(w);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Emoticons recognized when no lexicon inventory is supplied.
pub const DEFAULT_EMOTICONS: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p", ":'(", ":/", ":-/", ":|", ":o",
    ":O", "<3", "</3", ":]", ":[", "=)", "=(", "xD", "XD", ":*", "^_^", "-_-",
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tokenized {
    pub tokens: Vec<Token>,
    pub sentences: Vec<Range<usize>>,
}

/// Deterministic longest-match tokenizer.
///
/// Priority at each position: emoticon (from the inventory) > run of
/// `?`/`!` > `@`-mention > word (letters, digits, `_`, inner apostrophes) >
/// run of dots > any other single character. Sentences end after `.`, `?`,
/// `!` tokens and at line breaks.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    emoticons: Vec<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::with_emoticons(DEFAULT_EMOTICONS.iter().copied())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

impl Tokenizer {
    pub fn with_emoticons<I, S>(emoticons: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut emoticons: Vec<String> = emoticons
            .into_iter()
            .map(|s| s.as_ref().trim().to_owned())
            .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace))
            .collect();
        // longest first, then lexicographic for a stable order
        emoticons.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        emoticons.dedup();
        Tokenizer { emoticons }
    }

    fn match_emoticon(&self, text: &str, at: usize) -> Option<usize> {
        let rest = &text[at..];
        let prev = text[..at].chars().next_back();
        self.emoticons.iter().find_map(|e| {
            if !rest.starts_with(e.as_str()) {
                return None;
            }
            let first = e.chars().next()?;
            let last = e.chars().next_back()?;
            if is_word_char(first) && prev.is_some_and(is_word_char) {
                return None;
            }
            if is_word_char(last) && rest[e.len()..].chars().next().is_some_and(is_word_char) {
                return None;
            }
            Some(e.len())
        })
    }

    pub fn tokenize(&self, text: &str) -> Tokenized {
        let mut tokens = Vec::new();
        let mut sentences = Vec::new();
        let mut sentence_start = 0;
        let mut pos = 0;

        let mut close_sentence = |tokens: &Vec<Token>, start: &mut usize| {
            if tokens.len() > *start {
                sentences.push(*start..tokens.len());
                *start = tokens.len();
            }
        };

        while pos < text.len() {
            let c = text[pos..].chars().next().unwrap_or(' ');
            if c.is_whitespace() {
                if c == '\n' {
                    close_sentence(&tokens, &mut sentence_start);
                }
                pos += c.len_utf8();
                continue;
            }

            if let Some(len) = self.match_emoticon(text, pos) {
                tokens.push(Token::new(&text[pos..pos + len], TokenKind::Emoticon));
                pos += len;
                continue;
            }

            if c == '?' || c == '!' {
                let len = text[pos..].find(|ch| ch != '?' && ch != '!').unwrap_or(text.len() - pos);
                tokens.push(Token::new(&text[pos..pos + len], TokenKind::MarkRun));
                pos += len;
                close_sentence(&tokens, &mut sentence_start);
                continue;
            }

            if c == '@' {
                let name_len = text[pos + 1..].find(|ch: char| !is_word_char(ch)).unwrap_or(text.len() - pos - 1);
                if name_len > 0 {
                    tokens.push(Token {
                        surface: USER_MENTION.to_owned(),
                        normalized: USER_MENTION.to_lowercase(),
                        kind: TokenKind::Mention,
                    });
                    pos += 1 + name_len;
                    continue;
                }
            }

            if is_word_char(c) {
                let mut end = pos;
                let mut chars = text[pos..].char_indices().peekable();
                while let Some((off, ch)) = chars.next() {
                    if is_word_char(ch) {
                        end = pos + off + ch.len_utf8();
                    } else if is_apostrophe(ch) && chars.peek().is_some_and(|&(_, n)| is_word_char(n)) {
                        continue;
                    } else {
                        break;
                    }
                }
                tokens.push(Token::new(&text[pos..end], TokenKind::Word));
                pos = end;
                continue;
            }

            if c == '.' {
                let len = text[pos..].find(|ch| ch != '.').unwrap_or(text.len() - pos);
                tokens.push(Token::new(&text[pos..pos + len], TokenKind::Punct));
                pos += len;
                close_sentence(&tokens, &mut sentence_start);
                continue;
            }

            tokens.push(Token::new(&text[pos..pos + c.len_utf8()], TokenKind::Punct));
            pos += c.len_utf8();
        }
        close_sentence(&tokens, &mut sentence_start);
        Tokenized { tokens, sentences }
    }
}

/// Tokenizes with the default emoticon inventory.
pub fn tokenize(text: &str) -> Tokenized {
    Tokenizer::default().tokenize(text)
}
