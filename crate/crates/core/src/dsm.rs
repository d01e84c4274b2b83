//! Distributional semantic model: word vectors, document superposition and
//! polarity prototype vectors.
//!
//! Vectors are stored as `f32` (the interchange format and the training
//! precision); document vectors, prototypes and cosines are computed in
//! `f64`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::lexicon::Lexicon;
use crate::util::rng;
use crate::Polarity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DsmError {
    #[error("training corpus has no words above the frequency threshold")]
    EmptyCorpus,
    #[error("invalid training parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("dimension mismatch: declared {declared}, found {found}")]
    DimensionMismatch { declared: usize, found: usize },
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("duplicate word `{0}` in embedding space")]
    DuplicateWord(String),
    #[error("non-finite component in vector for `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Cbow,
    Skipgram,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Cbow => "cbow",
            Architecture::Skipgram => "skipgram",
        }
    }
}

impl core::fmt::Display for Architecture {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Architecture {
    type Err = DsmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cbow" => Ok(Architecture::Cbow),
            "skipgram" | "skip-gram" => Ok(Architecture::Skipgram),
            _ => Err(DsmError::InvalidParams(alloc::format!("unknown architecture `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub architecture: Architecture,
    pub dim: usize,
    pub min_count: u64,
    pub window: usize,
    pub negative: usize,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub sample: f64,
    pub epochs: usize,
    pub alpha: f32,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            architecture: Architecture::Cbow,
            dim: 600,
            min_count: 10,
            window: 5,
            negative: 5,
            sample: 1e-3,
            epochs: 5,
            alpha: 0.025,
            seed: 1,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<(), DsmError> {
        let bad = |m: &str| Err(DsmError::InvalidParams(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.sample >= 0.0 && self.sample.is_finite()) {
            return bad("sample must be non-negative");
        }
        Ok(())
    }
}

/// Word → dense vector map of fixed dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    data: Vec<f32>,
    pub metadata: Option<TrainParams>,
}

impl EmbeddingSpace {
    pub fn new(dim: usize) -> Self {
        EmbeddingSpace {
            dim,
            words: Vec::new(),
            index: BTreeMap::new(),
            data: Vec::new(),
            metadata: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Inserts a word; keys are case-folded.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<(), DsmError> {
        if vector.len() != self.dim {
            return Err(DsmError::DimensionMismatch {
                declared: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(DsmError::NonFinite(word.to_string()));
        }
        let key = word.to_lowercase();
        if self.index.contains_key(&key) {
            return Err(DsmError::DuplicateWord(key));
        }
        self.index.insert(key.clone(), self.words.len());
        self.words.push(key);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.words.iter().enumerate().map(move |(i, w)| (w.as_str(), self.row(i)))
    }
}

/// Parses the `<vocab_size> <dim>` header line of a vector file.
pub fn parse_header(line: &str) -> Result<(usize, usize), DsmError> {
    let mut fields = line.split_whitespace();
    let err = |m: &str| DsmError::ParseError {
        line: 1,
        message: m.to_string(),
    };
    let vocab = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(|| err("expected vocabulary size"))?;
    let dim = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(|| err("expected dimension"))?;
    if fields.next().is_some() {
        return Err(err("trailing fields in header"));
    }
    if dim == 0 {
        return Err(err("dimension must be positive"));
    }
    Ok((vocab, dim))
}

/// Parses one `word c1 … cdim` line; `line_no` is only used in errors.
pub fn parse_vector_line(line: &str, dim: usize, line_no: usize) -> Result<(String, Vec<f32>), DsmError> {
    let mut fields = line.split_whitespace();
    let word = fields.next().ok_or(DsmError::ParseError {
        line: line_no,
        message: "empty line".to_string(),
    })?;
    let mut vector = Vec::with_capacity(dim);
    for f in fields {
        let x = f.parse::<f32>().map_err(|_| DsmError::ParseError {
            line: line_no,
            message: alloc::format!("non-numeric component `{f}`"),
        })?;
        vector.push(x);
    }
    if vector.len() != dim {
        return Err(DsmError::DimensionMismatch {
            declared: dim,
            found: vector.len(),
        });
    }
    Ok((word.to_string(), vector))
}

/// Parses a complete vector text (header plus exactly `vocab_size` lines).
pub fn parse_vectors<'a, I>(lines: I) -> Result<EmbeddingSpace, DsmError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut lines = lines.into_iter();
    let header = lines.next().ok_or(DsmError::ParseError {
        line: 1,
        message: "missing header".to_string(),
    })?;
    let (vocab, dim) = parse_header(header)?;
    let mut space = EmbeddingSpace::new(dim);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, vector) = parse_vector_line(line, dim, i + 2)?;
        space.insert(&word, &vector)?;
    }
    if space.len() != vocab {
        return Err(DsmError::ParseError {
            line: 1,
            message: alloc::format!("header declares {vocab} words, found {}", space.len()),
        });
    }
    Ok(space)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

const MAX_EXP: f32 = 6.0;

fn sigmoid(x: f32) -> f32 {
    if x > MAX_EXP {
        1.0
    } else if x < -MAX_EXP {
        0.0
    } else {
        1.0 / (1.0 + libm::expf(-x))
    }
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, u32>,
    total: u64,
}

fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Vocab {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for line in corpus {
        for w in line {
            *counts.entry(w.as_ref()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| (*w).to_string()).collect();
    let counts: Vec<u64> = kept.iter().map(|&(_, c)| c).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    let total = counts.iter().sum();
    Vocab {
        words,
        counts,
        index,
        total,
    }
}

/// Unigram^0.75 negative-sampling distribution, sampled by binary search
/// over the cumulative weights.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += libm::pow(c as f64, 0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let x = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        i.min(self.cumulative.len() - 1) as u32
    }
}

/// Trains word vectors with negative sampling over a tokenized corpus
/// (one inner list per document or sentence). Single worker, so the result
/// is a deterministic function of the corpus and `params`.
pub fn train_embeddings<S: AsRef<str>>(corpus: &[Vec<S>], params: &TrainParams) -> Result<EmbeddingSpace, DsmError> {
    params.validate()?;
    let vocab = build_vocab(corpus, params.min_count);
    if vocab.words.is_empty() {
        return Err(DsmError::EmptyCorpus);
    }
    let dim = params.dim;
    let n = vocab.words.len();
    let mut rng = rng(params.seed, 0);

    let mut syn0: Vec<f32> = (0..n * dim).map(|_| (rng.gen::<f32>() - 0.5) / dim as f32).collect();
    let mut syn1: Vec<f32> = vec![0.0; n * dim];
    let noise = NoiseTable::new(&vocab.counts);

    let threshold = params.sample * vocab.total as f64;
    let keep_prob: Vec<f64> = vocab
        .counts
        .iter()
        .map(|&c| {
            if params.sample <= 0.0 {
                1.0
            } else {
                let f = c as f64;
                (libm::sqrt(f / threshold) + 1.0) * threshold / f
            }
        })
        .collect();

    let encoded: Vec<Vec<u32>> = corpus
        .iter()
        .map(|line| line.iter().filter_map(|w| vocab.index.get(w.as_ref()).copied()).collect())
        .collect();

    let total_steps = (params.epochs as u64 * vocab.total + 1) as f64;
    let min_alpha = params.alpha * 1e-4;
    let mut processed: u64 = 0;
    let mut neu1 = vec![0.0f32; dim];
    let mut neu1e = vec![0.0f32; dim];
    let mut sentence: Vec<u32> = Vec::new();

    for _ in 0..params.epochs {
        for line in &encoded {
            processed += line.len() as u64;
            let alpha = (params.alpha * (1.0 - processed as f64 / total_steps) as f32).max(min_alpha);
            sentence.clear();
            for &w in line {
                if keep_prob[w as usize] >= 1.0 || keep_prob[w as usize] >= rng.gen::<f64>() {
                    sentence.push(w);
                }
            }
            for pos in 0..sentence.len() {
                let target = sentence[pos];
                let reduced = rng.gen_range(0..params.window);
                let span = params.window - reduced;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(sentence.len() - 1);
                match params.architecture {
                    Architecture::Cbow => {
                        neu1.iter_mut().for_each(|x| *x = 0.0);
                        neu1e.iter_mut().for_each(|x| *x = 0.0);
                        let mut cw = 0usize;
                        for c in lo..=hi {
                            if c == pos {
                                continue;
                            }
                            let row = &syn0[sentence[c] as usize * dim..][..dim];
                            neu1.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                            cw += 1;
                        }
                        if cw == 0 {
                            continue;
                        }
                        neu1.iter_mut().for_each(|x| *x /= cw as f32);
                        negative_step(&mut syn1, &neu1, &mut neu1e, target, params.negative, alpha, dim, &noise, &mut rng);
                        for c in lo..=hi {
                            if c == pos {
                                continue;
                            }
                            let row = &mut syn0[sentence[c] as usize * dim..][..dim];
                            row.iter_mut().zip(&neu1e).for_each(|(a, b)| *a += b);
                        }
                    }
                    Architecture::Skipgram => {
                        for (c, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                            if c == pos {
                                continue;
                            }
                            let context = context as usize;
                            neu1.copy_from_slice(&syn0[context * dim..][..dim]);
                            neu1e.iter_mut().for_each(|x| *x = 0.0);
                            negative_step(&mut syn1, &neu1, &mut neu1e, target, params.negative, alpha, dim, &noise, &mut rng);
                            let row = &mut syn0[context * dim..][..dim];
                            row.iter_mut().zip(&neu1e).for_each(|(a, b)| *a += b);
                        }
                    }
                }
            }
        }
    }

    let mut space = EmbeddingSpace::new(dim);
    for (i, w) in vocab.words.iter().enumerate() {
        space.insert(w, &syn0[i * dim..(i + 1) * dim])?;
    }
    space.metadata = Some(params.clone());
    Ok(space)
}

/// One logistic update against the target (label 1) and `negative` noise
/// words (label 0). Accumulates the input-side gradient into `grad`.
#[allow(clippy::too_many_arguments)]
fn negative_step<R: Rng>(
    syn1: &mut [f32],
    hidden: &[f32],
    grad: &mut [f32],
    target: u32,
    negative: usize,
    alpha: f32,
    dim: usize,
    noise: &NoiseTable,
    rng: &mut R,
) {
    for d in 0..=negative {
        let (word, label) = if d == 0 {
            (target, 1.0f32)
        } else {
            let w = noise.sample(rng);
            if w == target {
                continue;
            }
            (w, 0.0f32)
        };
        let out = &mut syn1[word as usize * dim..][..dim];
        let f: f32 = hidden.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        let g = (label - sigmoid(f)) * alpha;
        for k in 0..dim {
            grad[k] += g * out[k];
            out[k] += g * hidden[k];
        }
    }
}

// ---------------------------------------------------------------------------
// Superposition, prototypes, cosine
// ---------------------------------------------------------------------------

/// Sum of the vectors of in-vocabulary tokens; zero vector if none.
pub fn doc_vector(tokens: &[Token], space: &EmbeddingSpace) -> Vec<f64> {
    let mut v = vec![0.0f64; space.dim()];
    for t in tokens {
        if let Some(row) = space.vector(&t.normalized) {
            v.iter_mut().zip(row).for_each(|(a, &b)| *a += f64::from(b));
        }
    }
    v
}

/// Per-class sums of lexicon word vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub neu: Vec<f64>,
    pub subj: Vec<f64>,
}

/// Every vocabulary word is looked up in the term table (so prefix patterns
/// contribute through each word they match) and added to its class sum.
pub fn build_prototypes(space: &EmbeddingSpace, lexicon: &Lexicon) -> PrototypeSet {
    let dim = space.dim();
    let mut pos = vec![0.0f64; dim];
    let mut neg = vec![0.0f64; dim];
    let mut neu = vec![0.0f64; dim];
    for (word, row) in space.iter() {
        let Some(pp) = lexicon.term_polarity(word) else {
            continue;
        };
        let target = match pp.class {
            Polarity::Positive => &mut pos,
            Polarity::Negative => &mut neg,
            Polarity::Neutral => &mut neu,
        };
        target.iter_mut().zip(row).for_each(|(a, &b)| *a += f64::from(b));
    }
    let subj = pos.iter().zip(&neg).map(|(a, b)| a + b).collect();
    PrototypeSet { pos, neg, neu, subj }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, DsmError> {
    if a.len() != b.len() {
        return Err(DsmError::LengthMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(-1.0, 1.0))
}
