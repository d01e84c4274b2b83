//! Feature extraction: 19 lexicon-based features, keyword features (n-gram
//! counts plus 6 micro-blogging cues) and 4 semantic similarities, laid out
//! under a frozen [`FeatureSchema`].
//!
//! Column blocks are contiguous and always in this order:
//! lexicon ∥ unigrams ∥ bigrams ∥ micro ∥ semantic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CleanDocument, Token, TokenKind};
use crate::dsm::{build_prototypes, cosine, doc_vector, EmbeddingSpace, PrototypeSet};
use crate::lexicon::Lexicon;
use crate::util::Fnv64;
use crate::Polarity;

pub const LEXICON_FEATURES: [&str; 19] = [
    "Pos_words",
    "Neg_words",
    "Subj_words",
    "Last_pos",
    "Last_neg",
    "Last_emo",
    "Sum_pos",
    "Sum_neg",
    "Sum_subj",
    "Max_pos",
    "Max_neg",
    "Pos_emo",
    "Neg_emo",
    "Pos_Emph",
    "Neg_Emph",
    "End_Pos_Emph",
    "End_Neg_Emph",
    "End_Pos",
    "End_Neg",
];

pub const MICRO_FEATURES: [&str; 6] = [
    "Uppercase_words",
    "Laughter",
    "Elongated_words",
    "M_repetitions",
    "User_mentions",
    "EndWith_EXMark",
];

pub const SEMANTIC_FEATURES: [&str; 4] = ["Sim_pos", "Sim_neg", "Sim_neu", "Sim_subj"];

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot build a feature schema from an empty training set")]
    EmptyTrainingSet,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("feature set `{0}` needs an embedding space")]
    MissingEmbeddings(FeatureSet),
    #[error("unknown feature set `{0}` (expected ngrams, keyword, keyword+semantic or full)")]
    UnknownFeatureSet(String),
    #[error("no feature blocks selected")]
    NoFeatures,
}

// ---------------------------------------------------------------------------
// Lexicon features
// ---------------------------------------------------------------------------

/// The 19 lexicon-based features of one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexiconFeatures {
    pub pos_words: u32,
    pub neg_words: u32,
    pub subj_words: u32,
    pub last_pos: i32,
    pub last_neg: i32,
    pub last_emo: i32,
    pub sum_pos: i32,
    pub sum_neg: i32,
    pub sum_subj: i32,
    pub max_pos: i32,
    /// Most negative score seen, 0 if none.
    pub max_neg: i32,
    pub pos_emo: u32,
    pub neg_emo: u32,
    pub pos_emph: bool,
    pub neg_emph: bool,
    pub end_pos_emph: bool,
    pub end_neg_emph: bool,
    pub end_pos: bool,
    pub end_neg: bool,
}

impl LexiconFeatures {
    /// Values in [`LEXICON_FEATURES`] order; booleans as 0/1.
    pub fn values(&self) -> [f64; 19] {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        [
            f64::from(self.pos_words),
            f64::from(self.neg_words),
            f64::from(self.subj_words),
            f64::from(self.last_pos),
            f64::from(self.last_neg),
            f64::from(self.last_emo),
            f64::from(self.sum_pos),
            f64::from(self.sum_neg),
            f64::from(self.sum_subj),
            f64::from(self.max_pos),
            f64::from(self.max_neg),
            f64::from(self.pos_emo),
            f64::from(self.neg_emo),
            b(self.pos_emph),
            b(self.neg_emph),
            b(self.end_pos_emph),
            b(self.end_neg_emph),
            b(self.end_pos),
            b(self.end_neg),
        ]
    }
}

fn ends_with_exclamation(tokens: &[Token]) -> bool {
    tokens.last().is_some_and(Token::ends_with_exclamation)
}

/// Word and emoticon counts/sums use prior polarity only; boosters and
/// negations play no part here. "Last" features follow token order across
/// sentence boundaries, and the end-of-document features look at the last
/// non-punctuation token.
pub fn lexicon_features(doc: &CleanDocument, lexicon: &Lexicon) -> LexiconFeatures {
    lexicon_features_of(&doc.tokens, lexicon)
}

pub fn lexicon_features_of(tokens: &[Token], lexicon: &Lexicon) -> LexiconFeatures {
    let mut f = LexiconFeatures::default();
    for token in tokens {
        let Some(pp) = lexicon.prior_polarity(token) else {
            continue;
        };
        let score = i32::from(pp.score);
        if pp.is_emoticon {
            f.last_emo = score;
            match pp.class {
                Polarity::Positive => f.pos_emo += 1,
                Polarity::Negative => f.neg_emo += 1,
                Polarity::Neutral => {}
            }
            continue;
        }
        match pp.class {
            Polarity::Positive => {
                f.pos_words += 1;
                f.sum_pos += score;
                f.max_pos = f.max_pos.max(score);
                f.last_pos = score;
            }
            Polarity::Negative => {
                f.neg_words += 1;
                f.sum_neg += score;
                f.max_neg = f.max_neg.min(score);
                f.last_neg = score;
            }
            Polarity::Neutral => {}
        }
    }
    f.subj_words = f.pos_words + f.neg_words;
    f.sum_subj = f.sum_pos + f.sum_neg;

    let exclaimed = ends_with_exclamation(tokens);
    f.pos_emph = exclaimed && f.pos_words > 0;
    f.neg_emph = exclaimed && f.neg_words > 0;

    let last_content = tokens
        .iter()
        .rev()
        .find(|t| !t.is_punctuation())
        .and_then(|t| lexicon.prior_polarity(t));
    if let Some(pp) = last_content {
        let positive = pp.class == Polarity::Positive;
        let negative = pp.class == Polarity::Negative;
        f.end_pos = positive;
        f.end_neg = negative;
        f.end_pos_emph = exclaimed && positive && !pp.is_emoticon;
        f.end_neg_emph = exclaimed && negative && !pp.is_emoticon;
    }
    f
}

// ---------------------------------------------------------------------------
// Keyword features
// ---------------------------------------------------------------------------

/// The 6 micro-blogging cues.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MicroFeatures {
    pub uppercase_words: u32,
    pub laughter: u32,
    pub elongated_words: u32,
    pub m_repetitions: u32,
    pub user_mentions: u32,
    pub endwith_exmark: bool,
}

impl MicroFeatures {
    pub fn values(&self) -> [f64; 6] {
        [
            f64::from(self.uppercase_words),
            f64::from(self.laughter),
            f64::from(self.elongated_words),
            f64::from(self.m_repetitions),
            f64::from(self.user_mentions),
            if self.endwith_exmark { 1.0 } else { 0.0 },
        ]
    }
}

fn is_uppercase_word(token: &Token) -> bool {
    token.kind == TokenKind::Word
        && token.surface.chars().count() >= 2
        && token.surface.chars().all(|c| c.is_alphabetic() && c.is_uppercase())
}

/// `haha`, `hehehe`, `hahah`: two or more ha/he syllables.
fn is_laugh_pattern(word: &str) -> bool {
    let w = word.strip_suffix('h').unwrap_or(word);
    let bytes = w.as_bytes();
    bytes.len() >= 4
        && bytes.len().is_multiple_of(2)
        && bytes.chunks(2).all(|c| c == b"ha" || c == b"he")
}

fn is_elongated(token: &Token) -> bool {
    if token.kind != TokenKind::Word {
        return false;
    }
    let mut run = 0;
    let mut prev = None;
    for c in token.normalized.chars() {
        if Some(c) == prev {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            prev = Some(c);
            run = 1;
        }
    }
    false
}

/// Maximal runs of two or more `?`/`!` characters inside `surface`.
fn mark_runs(surface: &str) -> u32 {
    let mut count = 0;
    let mut run = 0;
    for c in surface.chars().chain(core::iter::once(' ')) {
        if c == '?' || c == '!' {
            run += 1;
        } else {
            if run >= 2 {
                count += 1;
            }
            run = 0;
        }
    }
    count
}

pub fn micro_features(tokens: &[Token], lexicon: &Lexicon) -> MicroFeatures {
    let mut m = MicroFeatures::default();
    for t in tokens {
        if is_uppercase_word(t) {
            m.uppercase_words += 1;
        }
        if t.kind == TokenKind::Word && (lexicon.is_laughter(&t.normalized) || is_laugh_pattern(&t.normalized)) {
            m.laughter += 1;
        }
        if is_elongated(t) {
            m.elongated_words += 1;
        }
        m.m_repetitions += mark_runs(&t.surface);
        if t.kind == TokenKind::Mention {
            m.user_mentions += 1;
        }
    }
    m.endwith_exmark = ends_with_exclamation(tokens);
    m
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordFeatures {
    /// (column, count) over the unigram and bigram blocks, ascending.
    pub ngrams: Vec<(u32, f64)>,
    pub micro: MicroFeatures,
}

/// N-gram counts for schema entries only (unseen n-grams are dropped) plus
/// the micro-blogging cues.
pub fn keyword_features(doc: &CleanDocument, schema: &FeatureSchema, lexicon: &Lexicon) -> KeywordFeatures {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in &doc.tokens {
        if let Some(col) = schema.unigram_column(&t.normalized) {
            *counts.entry(col).or_insert(0.0) += 1.0;
        }
    }
    for pair in doc.tokens.windows(2) {
        if let Some(col) = schema.bigram_column(&pair[0].normalized, &pair[1].normalized) {
            *counts.entry(col).or_insert(0.0) += 1.0;
        }
    }
    KeywordFeatures {
        ngrams: counts.into_iter().collect(),
        micro: micro_features(&doc.tokens, lexicon),
    }
}

// ---------------------------------------------------------------------------
// Semantic features
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SemanticFeatures {
    pub sim_pos: f64,
    pub sim_neg: f64,
    pub sim_neu: f64,
    pub sim_subj: f64,
}

impl SemanticFeatures {
    pub fn values(&self) -> [f64; 4] {
        [self.sim_pos, self.sim_neg, self.sim_neu, self.sim_subj]
    }
}

pub fn semantic_features(doc: &CleanDocument, space: &EmbeddingSpace, prototypes: &PrototypeSet) -> Result<SemanticFeatures, FeatureError> {
    let v = doc_vector(&doc.tokens, space);
    let sim = |p: &[f64]| {
        cosine(&v, p).map_err(|_| FeatureError::SchemaMismatch(format!("prototype length {} != space dim {}", p.len(), v.len())))
    };
    Ok(SemanticFeatures {
        sim_pos: sim(&prototypes.pos)?,
        sim_neg: sim(&prototypes.neg)?,
        sim_neu: sim(&prototypes.neu)?,
        sim_subj: sim(&prototypes.subj)?,
    })
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Lexicon,
    Unigram,
    Bigram,
    Micro,
    Semantic,
}

/// How a column is discretized for information gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Boolean,
    Count,
    Continuous,
}

/// Immutable column layout fixed from the training documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct FeatureSchema {
    id: String,
    unigrams: Vec<String>,
    bigrams: Vec<(String, String)>,
    unigram_index: BTreeMap<String, u32>,
    bigram_index: BTreeMap<(String, String), u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockBounds {
    lexicon: [usize; 2],
    unigram: [usize; 2],
    bigram: [usize; 2],
    micro: [usize; 2],
    semantic: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaRepr {
    version: u32,
    id: String,
    total_dim: usize,
    blocks: BlockBounds,
    lexicon_names: Vec<String>,
    micro_names: Vec<String>,
    semantic_names: Vec<String>,
    unigrams: Vec<String>,
    bigrams: Vec<[String; 2]>,
}

impl From<FeatureSchema> for SchemaRepr {
    fn from(s: FeatureSchema) -> Self {
        let span = |b: Block| {
            let r = s.block_range(b);
            [r.start, r.end]
        };
        SchemaRepr {
            version: SCHEMA_VERSION,
            id: s.id.clone(),
            total_dim: s.total_dim(),
            blocks: BlockBounds {
                lexicon: span(Block::Lexicon),
                unigram: span(Block::Unigram),
                bigram: span(Block::Bigram),
                micro: span(Block::Micro),
                semantic: span(Block::Semantic),
            },
            lexicon_names: LEXICON_FEATURES.iter().map(|s| s.to_string()).collect(),
            micro_names: MICRO_FEATURES.iter().map(|s| s.to_string()).collect(),
            semantic_names: SEMANTIC_FEATURES.iter().map(|s| s.to_string()).collect(),
            unigrams: s.unigrams,
            bigrams: s.bigrams.into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }
}

impl TryFrom<SchemaRepr> for FeatureSchema {
    type Error = FeatureError;

    fn try_from(r: SchemaRepr) -> Result<Self, Self::Error> {
        let mismatch = |m: String| Err(FeatureError::SchemaMismatch(m));
        if r.version != SCHEMA_VERSION {
            return mismatch(format!("unsupported schema version {}", r.version));
        }
        if r.lexicon_names != LEXICON_FEATURES || r.micro_names != MICRO_FEATURES || r.semantic_names != SEMANTIC_FEATURES {
            return mismatch("feature names differ from this build".into());
        }
        let schema = FeatureSchema::from_ngrams(r.unigrams, r.bigrams.into_iter().map(|[a, b]| (a, b)).collect())?;
        if schema.id != r.id {
            return mismatch(format!("stored id {} does not match content id {}", r.id, schema.id));
        }
        if schema.total_dim() != r.total_dim {
            return mismatch(format!("stored total_dim {} != {}", r.total_dim, schema.total_dim()));
        }
        Ok(schema)
    }
}

impl FeatureSchema {
    fn from_ngrams(unigrams: Vec<String>, bigrams: Vec<(String, String)>) -> Result<Self, FeatureError> {
        let base = LEXICON_FEATURES.len() as u32;
        let mut unigram_index = BTreeMap::new();
        for (i, u) in unigrams.iter().enumerate() {
            if unigram_index.insert(u.clone(), base + i as u32).is_some() {
                return Err(FeatureError::SchemaMismatch(format!("duplicate unigram `{u}`")));
            }
        }
        let base = base + unigrams.len() as u32;
        let mut bigram_index = BTreeMap::new();
        for (i, b) in bigrams.iter().enumerate() {
            if bigram_index.insert(b.clone(), base + i as u32).is_some() {
                return Err(FeatureError::SchemaMismatch(format!("duplicate bigram `{} {}`", b.0, b.1)));
            }
        }
        let mut h = Fnv64::new();
        h.write_str("schema-v1");
        for u in &unigrams {
            h.write_str(u);
        }
        h.write_str("--bigrams--");
        for (a, b) in &bigrams {
            h.write_str(a);
            h.write_str(b);
        }
        Ok(FeatureSchema {
            id: format!("{:016x}", h.finish()),
            unigrams,
            bigrams,
            unigram_index,
            bigram_index,
        })
    }

    /// Content-derived identifier; vectors and models carry it.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn unigram_count(&self) -> usize {
        self.unigrams.len()
    }

    pub fn bigram_count(&self) -> usize {
        self.bigrams.len()
    }

    /// Unigram, bigram and micro features together.
    pub fn keyword_dim(&self) -> usize {
        self.unigrams.len() + self.bigrams.len() + MICRO_FEATURES.len()
    }

    pub fn total_dim(&self) -> usize {
        LEXICON_FEATURES.len() + self.keyword_dim() + SEMANTIC_FEATURES.len()
    }

    pub fn block_range(&self, block: Block) -> Range<usize> {
        let lex = LEXICON_FEATURES.len();
        let uni = lex + self.unigrams.len();
        let bi = uni + self.bigrams.len();
        let micro = bi + MICRO_FEATURES.len();
        match block {
            Block::Lexicon => 0..lex,
            Block::Unigram => lex..uni,
            Block::Bigram => uni..bi,
            Block::Micro => bi..micro,
            Block::Semantic => micro..micro + SEMANTIC_FEATURES.len(),
        }
    }

    pub fn block_of(&self, col: usize) -> Option<Block> {
        [Block::Lexicon, Block::Unigram, Block::Bigram, Block::Micro, Block::Semantic]
            .into_iter()
            .find(|&b| self.block_range(b).contains(&col))
    }

    pub fn unigram_column(&self, token: &str) -> Option<u32> {
        self.unigram_index.get(token).copied()
    }

    pub fn bigram_column(&self, first: &str, second: &str) -> Option<u32> {
        // BTreeMap<(String, String)> cannot be probed with borrowed strs
        self.bigram_index.get(&(first.to_string(), second.to_string())).copied()
    }

    /// Human-readable column name: feature names for the fixed blocks, the
    /// n-gram itself (space-joined for bigrams) otherwise.
    pub fn name(&self, col: usize) -> Option<String> {
        let block = self.block_of(col)?;
        let offset = col - self.block_range(block).start;
        Some(match block {
            Block::Lexicon => LEXICON_FEATURES[offset].to_string(),
            Block::Unigram => self.unigrams[offset].clone(),
            Block::Bigram => {
                let (a, b) = &self.bigrams[offset];
                format!("{a} {b}")
            }
            Block::Micro => MICRO_FEATURES[offset].to_string(),
            Block::Semantic => SEMANTIC_FEATURES[offset].to_string(),
        })
    }

    pub fn kind(&self, col: usize) -> Option<FeatureKind> {
        let block = self.block_of(col)?;
        let offset = col - self.block_range(block).start;
        Some(match block {
            Block::Lexicon => match LEXICON_FEATURES[offset] {
                "Sum_pos" | "Sum_neg" | "Sum_subj" => FeatureKind::Continuous,
                name if name.contains("Emph") || name.starts_with("End_") => FeatureKind::Boolean,
                _ => FeatureKind::Count,
            },
            Block::Unigram | Block::Bigram => FeatureKind::Count,
            Block::Micro if MICRO_FEATURES[offset] == "EndWith_EXMark" => FeatureKind::Boolean,
            Block::Micro => FeatureKind::Count,
            Block::Semantic => FeatureKind::Continuous,
        })
    }
}

/// Enumerates every distinct normalized unigram and adjacent-token bigram
/// of the training documents, in first-occurrence order.
pub fn build_schema<'a, I>(training_docs: I) -> Result<FeatureSchema, FeatureError>
where
    I: IntoIterator<Item = &'a CleanDocument>,
{
    let mut any = false;
    let mut unigrams = Vec::new();
    let mut seen_uni: BTreeMap<&str, ()> = BTreeMap::new();
    let mut bigrams = Vec::new();
    let mut seen_bi: BTreeMap<(&str, &str), ()> = BTreeMap::new();
    for doc in training_docs {
        any = true;
        for t in &doc.tokens {
            if seen_uni.insert(&t.normalized, ()).is_none() {
                unigrams.push(t.normalized.clone());
            }
        }
        for pair in doc.tokens.windows(2) {
            let key = (pair[0].normalized.as_str(), pair[1].normalized.as_str());
            if seen_bi.insert(key, ()).is_none() {
                bigrams.push((key.0.to_string(), key.1.to_string()));
            }
        }
    }
    if !any {
        return Err(FeatureError::EmptyTrainingSet);
    }
    FeatureSchema::from_ngrams(unigrams, bigrams)
}

// ---------------------------------------------------------------------------
// Feature sets and assembly
// ---------------------------------------------------------------------------

/// Incremental feature settings used for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "ngrams")]
    Ngrams,
    #[serde(rename = "keyword")]
    Keyword,
    #[serde(rename = "keyword+semantic")]
    KeywordSemantic,
    #[serde(rename = "full")]
    Full,
}

impl FeatureSet {
    pub const LADDER: [FeatureSet; 4] = [
        FeatureSet::Ngrams,
        FeatureSet::Keyword,
        FeatureSet::KeywordSemantic,
        FeatureSet::Full,
    ];

    pub fn blocks(self) -> &'static [Block] {
        match self {
            FeatureSet::Ngrams => &[Block::Unigram, Block::Bigram],
            FeatureSet::Keyword => &[Block::Unigram, Block::Bigram, Block::Micro],
            FeatureSet::KeywordSemantic => &[Block::Unigram, Block::Bigram, Block::Micro, Block::Semantic],
            FeatureSet::Full => &[Block::Lexicon, Block::Unigram, Block::Bigram, Block::Micro, Block::Semantic],
        }
    }

    pub fn includes(self, block: Block) -> bool {
        self.blocks().contains(&block)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Ngrams => "ngrams",
            FeatureSet::Keyword => "keyword",
            FeatureSet::KeywordSemantic => "keyword+semantic",
            FeatureSet::Full => "full",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ngrams" | "n-grams" => Ok(FeatureSet::Ngrams),
            "keyword" => Ok(FeatureSet::Keyword),
            "keyword+semantic" | "keyword-semantic" => Ok(FeatureSet::KeywordSemantic),
            "full" => Ok(FeatureSet::Full),
            other => Err(FeatureError::UnknownFeatureSet(other.to_string())),
        }
    }
}

/// Block selection; a [`FeatureSet`] converts into one, and arbitrary masks
/// (including the empty one, which is rejected at assembly) can be built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockMask {
    pub lexicon: bool,
    pub unigram: bool,
    pub bigram: bool,
    pub micro: bool,
    pub semantic: bool,
}

impl BlockMask {
    pub fn includes(&self, block: Block) -> bool {
        match block {
            Block::Lexicon => self.lexicon,
            Block::Unigram => self.unigram,
            Block::Bigram => self.bigram,
            Block::Micro => self.micro,
            Block::Semantic => self.semantic,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lexicon || self.unigram || self.bigram || self.micro || self.semantic)
    }
}

impl From<FeatureSet> for BlockMask {
    fn from(set: FeatureSet) -> Self {
        BlockMask {
            lexicon: set.includes(Block::Lexicon),
            unigram: set.includes(Block::Unigram),
            bigram: set.includes(Block::Bigram),
            micro: set.includes(Block::Micro),
            semantic: set.includes(Block::Semantic),
        }
    }
}

/// Sparse feature vector bound to a schema by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_id: String,
    /// (column, value), ascending by column, zeros omitted.
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn new(schema_id: impl Into<String>, mut entries: Vec<(u32, f64)>) -> Self {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(c, _)| c);
        FeatureVector {
            schema_id: schema_id.into(),
            entries,
        }
    }

    pub fn get(&self, col: u32) -> f64 {
        self.entries
            .binary_search_by_key(&col, |&(c, _)| c)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything needed to turn a document into a feature vector.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<'a> {
    pub lexicon: &'a Lexicon,
    pub schema: &'a FeatureSchema,
    semantic: Option<(&'a EmbeddingSpace, PrototypeSet)>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(lexicon: &'a Lexicon, schema: &'a FeatureSchema, space: Option<&'a EmbeddingSpace>) -> Self {
        let semantic = space.map(|s| (s, build_prototypes(s, lexicon)));
        FeatureExtractor { lexicon, schema, semantic }
    }

    /// Uses precomputed prototypes; they must match the space's dimension.
    pub fn with_prototypes(
        lexicon: &'a Lexicon,
        schema: &'a FeatureSchema,
        space: &'a EmbeddingSpace,
        prototypes: PrototypeSet,
    ) -> Result<Self, FeatureError> {
        let dim = space.dim();
        if [&prototypes.pos, &prototypes.neg, &prototypes.neu, &prototypes.subj]
            .iter()
            .any(|p| p.len() != dim)
        {
            return Err(FeatureError::SchemaMismatch(format!("prototypes do not have dimension {dim}")));
        }
        Ok(FeatureExtractor {
            lexicon,
            schema,
            semantic: Some((space, prototypes)),
        })
    }

    pub fn prototypes(&self) -> Option<&PrototypeSet> {
        self.semantic.as_ref().map(|(_, p)| p)
    }

    pub fn has_embeddings(&self) -> bool {
        self.semantic.is_some()
    }

    pub fn extract(&self, doc: &CleanDocument, set: FeatureSet) -> Result<FeatureVector, FeatureError> {
        if set.includes(Block::Semantic) && self.semantic.is_none() {
            return Err(FeatureError::MissingEmbeddings(set));
        }
        self.extract_masked(doc, set.into())
    }

    /// Blocks missing from `mask` are left empty; semantic columns are
    /// skipped when no embedding space was supplied.
    pub fn extract_masked(&self, doc: &CleanDocument, mask: BlockMask) -> Result<FeatureVector, FeatureError> {
        if mask.is_empty() {
            return Err(FeatureError::NoFeatures);
        }
        let schema = self.schema;
        let mut entries: Vec<(u32, f64)> = Vec::new();
        let push_block = |entries: &mut Vec<(u32, f64)>, block: Block, values: &[f64]| {
            let start = schema.block_range(block).start as u32;
            entries.extend(values.iter().enumerate().map(|(i, &v)| (start + i as u32, v)));
        };
        if mask.lexicon {
            push_block(&mut entries, Block::Lexicon, &lexicon_features(doc, self.lexicon).values());
        }
        if mask.unigram || mask.bigram || mask.micro {
            let kw = keyword_features(doc, schema, self.lexicon);
            for (col, v) in kw.ngrams {
                let block = schema.block_of(col as usize);
                if block.is_some_and(|b| mask.includes(b)) {
                    entries.push((col, v));
                }
            }
            if mask.micro {
                push_block(&mut entries, Block::Micro, &kw.micro.values());
            }
        }
        if mask.semantic {
            if let Some((space, prototypes)) = &self.semantic {
                push_block(&mut entries, Block::Semantic, &semantic_features(doc, space, prototypes)?.values());
            }
        }
        Ok(FeatureVector::new(schema.id(), entries))
    }
}

/// One-shot extraction of the full feature vector.
pub fn assemble(
    doc: &CleanDocument,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
    space: &EmbeddingSpace,
    prototypes: &PrototypeSet,
) -> Result<FeatureVector, FeatureError> {
    FeatureExtractor::with_prototypes(lexicon, schema, space, prototypes.clone())?.extract(doc, FeatureSet::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PostType;
    use alloc::vec;
    use proptest::prelude::*;

    fn lexicon() -> Lexicon {
        let mut l = Lexicon::new();
        l.add_terms("t", "great\t3\nbad\t-3\nthanks\t2\nhate\t-4\nok\t1").unwrap();
        l.add_emoticons("e", ":)\t1\n:(\t-1").unwrap();
        l.add_laughter("l", "lol\nrofl").unwrap();
        l
    }

    fn doc(text: &str) -> CleanDocument {
        CleanDocument::from_text("d", PostType::Answer, text, &lexicon().tokenizer())
    }

    #[test]
    fn empty_document_has_zero_lexicon_features() {
        assert_eq!(lexicon_features(&doc(""), &lexicon()), LexiconFeatures::default());
        assert_eq!(lexicon_features(&doc(""), &lexicon()).values(), [0.0; 19]);
    }

    #[test]
    fn repeated_positive_word() {
        let f = lexicon_features(&doc("great great"), &lexicon());
        let expected = LexiconFeatures {
            pos_words: 2,
            subj_words: 2,
            sum_pos: 6,
            sum_subj: 6,
            max_pos: 3,
            last_pos: 3,
            end_pos: true,
            ..LexiconFeatures::default()
        };
        assert_eq!(f, expected);
    }

    #[test]
    fn negative_word_with_exclamation() {
        let f = lexicon_features(&doc("bad !"), &lexicon());
        let expected = LexiconFeatures {
            neg_words: 1,
            subj_words: 1,
            sum_neg: -3,
            sum_subj: -3,
            max_neg: -3,
            last_neg: -3,
            neg_emph: true,
            end_neg_emph: true,
            end_neg: true,
            ..LexiconFeatures::default()
        };
        assert_eq!(f, expected);
        assert!(micro_features(&doc("bad !").tokens, &lexicon()).endwith_exmark);
    }

    #[test]
    fn emoticons_feed_emo_features_only() {
        let f = lexicon_features(&doc("great :( :)"), &lexicon());
        assert_eq!((f.pos_emo, f.neg_emo, f.last_emo), (1, 1, 1));
        assert_eq!((f.pos_words, f.last_pos), (1, 3));
        assert!(f.end_pos);
        assert!(!f.end_pos_emph);
    }

    #[test]
    fn uppercase_and_laughter() {
        let m = micro_features(&doc("GOOD GOOD lol").tokens, &lexicon());
        assert_eq!(m.uppercase_words, 2);
        assert_eq!(m.laughter, 1);
        let m = micro_features(&doc("hahaha hehe LOL A").tokens, &lexicon());
        assert_eq!(m.laughter, 3);
        assert_eq!(m.uppercase_words, 1);
    }

    #[test]
    fn elongation_and_mark_runs() {
        let m = micro_features(&doc("gooooood ?!?!").tokens, &lexicon());
        assert_eq!(m.elongated_words, 1);
        assert_eq!(m.m_repetitions, 1);
        // "?!?!" ends with `!`
        assert!(m.endwith_exmark);
        let m = micro_features(&doc("good ! ? !!").tokens, &lexicon());
        assert_eq!(m.elongated_words, 0);
        assert_eq!(m.m_repetitions, 1);
        assert!(m.endwith_exmark);
    }

    #[test]
    fn empty_micro_features() {
        assert_eq!(micro_features(&[], &lexicon()), MicroFeatures::default());
    }

    #[test]
    fn schema_enumerates_ngrams() {
        let docs = [doc("a b"), doc("b c")];
        let s = build_schema(&docs).unwrap();
        assert_eq!((s.unigram_count(), s.bigram_count()), (3, 2));
        assert_eq!(s.total_dim(), 34);
        assert_eq!(s.unigram_column("a"), Some(19));
        assert_eq!(s.bigram_column("b", "c"), Some(23));
        assert_eq!(s.block_range(Block::Semantic), 30..34);
        assert_eq!(s.name(23).unwrap(), "b c");
        assert_eq!(s.name(24).unwrap(), "Uppercase_words");
    }

    #[test]
    fn degenerate_schemas() {
        let s = build_schema(&[doc("")]).unwrap();
        assert_eq!(s.total_dim(), 29);
        let none: [CleanDocument; 0] = [];
        assert_eq!(build_schema(&none), Err(FeatureError::EmptyTrainingSet));
    }

    #[test]
    fn schema_blocks_cover_every_column_once() {
        let s = build_schema(&[doc("x y z x"), doc("z !")]).unwrap();
        let mut covered = vec![0u32; s.total_dim()];
        for b in [Block::Lexicon, Block::Unigram, Block::Bigram, Block::Micro, Block::Semantic] {
            for c in s.block_range(b) {
                covered[c] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
        assert_eq!(s.kind(6), Some(FeatureKind::Continuous));
        assert_eq!(s.kind(13), Some(FeatureKind::Boolean));
        assert_eq!(s.kind(0), Some(FeatureKind::Count));
    }

    #[test]
    fn keyword_features_ignore_unseen_ngrams() {
        let s = build_schema(&[doc("thanks a lot")]).unwrap();
        let kw = keyword_features(&doc("thanks thanks for nothing"), &s, &lexicon());
        assert_eq!(kw.ngrams, vec![(s.unigram_column("thanks").unwrap(), 2.0)]);
    }

    #[test]
    fn feature_set_parsing_and_ladder() {
        assert_eq!("keyword+semantic".parse::<FeatureSet>().unwrap(), FeatureSet::KeywordSemantic);
        assert!("everything".parse::<FeatureSet>().is_err());
        assert!(!FeatureSet::Keyword.includes(Block::Lexicon));
        assert!(FeatureSet::Full.includes(Block::Lexicon));
    }

    fn space() -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(2);
        s.insert("thanks", &[1.0, 0.0]).unwrap();
        s.insert("bad", &[0.0, 1.0]).unwrap();
        s
    }

    #[test]
    fn extraction_is_deterministic_and_masked() {
        let lex = lexicon();
        let sp = space();
        let schema = build_schema(&[doc("thanks"), doc("bad stuff")]).unwrap();
        let ex = FeatureExtractor::new(&lex, &schema, Some(&sp));
        let d = doc("thanks");
        let a = ex.extract(&d, FeatureSet::Full).unwrap();
        assert_eq!(a, ex.extract(&d, FeatureSet::Full).unwrap());
        let uni = schema.unigram_column("thanks").unwrap();
        assert_eq!(a.get(uni), 1.0);
        let ngram_only = ex.extract(&d, FeatureSet::Ngrams).unwrap();
        assert_eq!(ngram_only.entries, vec![(uni, 1.0)]);
        let empty = ex.extract(&doc(""), FeatureSet::Full).unwrap();
        assert!(empty.is_empty());
        assert_eq!(ex.extract_masked(&d, BlockMask::default()), Err(FeatureError::NoFeatures));
    }

    #[test]
    fn semantic_requires_embeddings() {
        let lex = lexicon();
        let schema = build_schema(&[doc("x")]).unwrap();
        let ex = FeatureExtractor::new(&lex, &schema, None);
        assert_eq!(
            ex.extract(&doc("x"), FeatureSet::Full),
            Err(FeatureError::MissingEmbeddings(FeatureSet::Full))
        );
        assert!(ex.extract(&doc("x"), FeatureSet::Keyword).is_ok());
    }

    #[test]
    fn mismatched_prototypes_rejected() {
        let lex = lexicon();
        let sp = space();
        let schema = build_schema(&[doc("x")]).unwrap();
        let bad = PrototypeSet {
            pos: vec![0.0; 3],
            neg: vec![0.0; 3],
            neu: vec![0.0; 3],
            subj: vec![0.0; 3],
        };
        assert!(matches!(
            FeatureExtractor::with_prototypes(&lex, &schema, &sp, bad),
            Err(FeatureError::SchemaMismatch(_))
        ));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("great"), Just("bad"), Just("hate"), Just("thanks"), Just("ok"), Just("code"),
                Just("!"), Just("?!"), Just(":)"), Just(":("), Just("GOOD"), Just("lol"), Just("."),
            ],
            0..12,
        )
        .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn lexicon_feature_identities(text in arb_text()) {
            let f = lexicon_features(&doc(&text), &lexicon());
            prop_assert_eq!(f.pos_words + f.neg_words, f.subj_words);
            prop_assert!(f.sum_pos >= f.max_pos && f.max_pos >= 0);
            prop_assert!(f.sum_neg <= f.max_neg && f.max_neg <= 0);
            prop_assert_eq!(f.sum_subj, f.sum_pos + f.sum_neg);
            prop_assert!(!f.end_pos_emph || f.pos_emph);
            prop_assert!(!f.end_neg_emph || f.neg_emph);
        }

        #[test]
        fn ngram_counts_add_across_concatenation(a in arb_text(), b in arb_text()) {
            let schema = build_schema(&[doc(&a), doc(&b), doc(&alloc::format!("{a} {b}"))]).unwrap();
            let count = |t: &str| -> f64 {
                keyword_features(&doc(t), &schema, &lexicon()).ngrams.iter().map(|&(_, v)| v).sum()
            };
            let joined = count(&alloc::format!("{a} {b}"));
            let parts = count(&a) + count(&b);
            prop_assert!(joined - parts >= 0.0 && joined - parts <= 1.0);
        }

        #[test]
        fn test_extraction_never_changes_schema(a in arb_text(), b in arb_text()) {
            let lex = lexicon();
            let schema = build_schema(&[doc(&a)]).unwrap();
            let before = schema.clone();
            let ex = FeatureExtractor::new(&lex, &schema, None);
            let v = ex.extract(&doc(&b), FeatureSet::Keyword).unwrap();
            prop_assert_eq!(&schema, &before);
            prop_assert!(v.entries.iter().all(|&(c, _)| (c as usize) < schema.total_dim()));
        }
    }
}
