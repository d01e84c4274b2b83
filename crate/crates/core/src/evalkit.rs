//! Evaluation and gold-standard construction: confusion matrices and P/R/F,
//! information gain, weighted kappa, majority voting, chi-squared comparison,
//! stratified splitting and sampling, and the feature ablation protocol.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::baseline::TrinaryLabel;
use crate::corpus::{CleanDocument, PostType};
use crate::dsm::EmbeddingSpace;
use crate::features::{build_schema, Block, BlockMask, FeatureError, FeatureExtractor, FeatureKind, FeatureSchema, FeatureSet, FeatureVector};
use crate::learner::{train, tune_c, LabeledDataset, LearnerError, TrainOptions};
use crate::lexicon::Lexicon;
use crate::util::rng;
use crate::Polarity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("no items to compare")]
    Empty,
    #[error("weighted kappa is undefined: chance-expected disagreement is zero")]
    UndefinedExpectation,
    #[error("majority vote needs exactly 3 annotations, got {0}")]
    WrongArity(usize),
    #[error("coder {0} annotated the item more than once")]
    DuplicateCoder(String),
    #[error("annotations refer to different items: {0} and {1}")]
    MixedItems(String, String),
    #[error("annotation by {coder} on {item}: {reason}")]
    InvalidAnnotation { item: String, coder: String, reason: &'static str },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class {class} has {count} examples; at least 2 are needed to split")]
    ClassTooSmall { class: Polarity, count: usize },
    #[error("cell {post_type}/{label} has {available} candidates, {requested} requested")]
    InsufficientCell {
        post_type: PostType,
        label: Polarity,
        available: usize,
        requested: usize,
    },
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
    #[error("unknown annotation polarity {0:?}")]
    UnknownPolarity(String),
    #[error("feature setting {0:?} selects no blocks")]
    EmptySetting(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

// ---------------------------------------------------------------------------
// Confusion matrix and P/R/F
// ---------------------------------------------------------------------------

/// Row/column order of confusion matrices and reports.
pub const REPORT_ORDER: [Polarity; 3] = [Polarity::Negative, Polarity::Positive, Polarity::Neutral];

fn report_index(p: Polarity) -> usize {
    match p {
        Polarity::Negative => 0,
        Polarity::Positive => 1,
        Polarity::Neutral => 2,
    }
}

/// Counts indexed `[gold][predicted]` in [`REPORT_ORDER`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn get(&self, gold: Polarity, pred: Polarity) -> u64 {
        self.counts[report_index(gold)][report_index(pred)]
    }

    pub fn add(&mut self, gold: Polarity, pred: Polarity) {
        self.counts[report_index(gold)][report_index(pred)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct() as f64, self.total() as f64)
    }
}

pub fn confusion(gold: &[Polarity], pred: &[Polarity]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&g, &p) in gold.iter().zip(pred) {
        cm.add(g, p);
    }
    Ok(cm)
}

/// Confusion against baseline trinary output, dropping undetermined
/// predictions. Returns the matrix and the number of removed items.
pub fn confusion_trinary(gold: &[Polarity], pred: &[TrinaryLabel]) -> Result<(ConfusionMatrix, usize), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    let mut cm = ConfusionMatrix::default();
    let mut removed = 0;
    for (&g, p) in gold.iter().zip(pred) {
        match p.polarity() {
            Some(p) => cm.add(g, p),
            None => removed += 1,
        }
    }
    Ok((cm, removed))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(tp: f64, fp: f64, fn_: f64) -> Prf {
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        Prf {
            recall,
            precision,
            f1: ratio(2.0 * precision * recall, precision + recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    /// Per-class scores in [`REPORT_ORDER`].
    pub per_class: [Prf; 3],
    pub micro: Prf,
    pub support: [u64; 3],
    pub total: u64,
}

impl PrfReport {
    pub fn class(&self, p: Polarity) -> Prf {
        self.per_class[report_index(p)]
    }
}

/// 0/0 is defined as 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn prf(cm: &ConfusionMatrix) -> Result<PrfReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut per_class = [Prf::default(); 3];
    let mut support = [0; 3];
    let (mut tp_all, mut fp_all, mut fn_all) = (0u64, 0u64, 0u64);
    for c in 0..3 {
        let tp = cm.counts[c][c];
        let row: u64 = cm.counts[c].iter().sum();
        let col: u64 = (0..3).map(|g| cm.counts[g][c]).sum();
        support[c] = row;
        per_class[c] = Prf::from_counts(tp as f64, (col - tp) as f64, (row - tp) as f64);
        tp_all += tp;
        fp_all += col - tp;
        fn_all += row - tp;
    }
    Ok(PrfReport {
        per_class,
        micro: Prf::from_counts(tp_all as f64, fp_all as f64, fn_all as f64),
        support,
        total,
    })
}

// ---------------------------------------------------------------------------
// Information gain
// ---------------------------------------------------------------------------

pub const CONTINUOUS_BINS: usize = 10;

fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum()
}

pub fn label_entropy(labels: &[Polarity]) -> f64 {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    entropy(&counts)
}

/// Bin assignment used by [`information_gain`].
///
/// Boolean and count columns split into {0, non-zero}. Continuous columns
/// are ranked and cut into [`CONTINUOUS_BINS`] equal-frequency bins; tied
/// values share the bin of their first rank, so binning depends only on the
/// order of values.
pub fn bin_column(column: &[f64], kind: FeatureKind) -> Vec<usize> {
    match kind {
        FeatureKind::Boolean | FeatureKind::Count => column.iter().map(|&v| usize::from(v != 0.0)).collect(),
        FeatureKind::Continuous => {
            let n = column.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
            let mut bins = vec![0; n];
            let mut rank = 0;
            while rank < n {
                let bin = rank * CONTINUOUS_BINS / n;
                let mut end = rank;
                while end < n && column[order[end]] == column[order[rank]] {
                    bins[order[end]] = bin;
                    end += 1;
                }
                rank = end;
            }
            bins
        }
    }
}

/// Information gain of a feature column about the labels, in bits.
pub fn information_gain(column: &[f64], labels: &[Polarity], kind: FeatureKind) -> Result<f64, EvalError> {
    if column.len() != labels.len() {
        return Err(EvalError::LengthMismatch(column.len(), labels.len()));
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let bins = bin_column(column, kind);
    let mut table: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    for (&b, l) in bins.iter().zip(labels) {
        table.entry(b).or_insert([0; 3])[l.index()] += 1;
    }
    Ok(gain_from_table(labels, table.values()))
}

fn gain_from_table<'a>(labels: &[Polarity], bins: impl Iterator<Item = &'a [usize; 3]>) -> f64 {
    let h = label_entropy(labels);
    let n = labels.len() as f64;
    let conditional: f64 = bins.map(|c| (c.iter().sum::<usize>() as f64 / n) * entropy(c)).sum();
    (h - conditional).clamp(0.0, h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub column: u32,
    pub name: String,
    pub gain: f64,
}

/// Information gain of every schema column, highest first (ties by column).
pub fn rank_features(schema: &FeatureSchema, vectors: &[FeatureVector], labels: &[Polarity]) -> Result<Vec<RankedFeature>, EvalError> {
    if vectors.len() != labels.len() {
        return Err(EvalError::LengthMismatch(vectors.len(), labels.len()));
    }
    let dim = schema.total_dim();
    let mut class_totals = [0usize; 3];
    for l in labels {
        class_totals[l.index()] += 1;
    }
    // non-zero counts per column and class, for the {0, non-zero} split
    let mut nonzero = vec![[0usize; 3]; dim];
    for (v, l) in vectors.iter().zip(labels) {
        for &(c, x) in &v.entries {
            if (c as usize) < dim && x != 0.0 {
                nonzero[c as usize][l.index()] += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(dim);
    for (col, &nz) in nonzero.iter().enumerate() {
        let gain = match schema.kind(col).unwrap_or(FeatureKind::Count) {
            FeatureKind::Continuous => {
                let column: Vec<f64> = vectors.iter().map(|v| v.get(col as u32)).collect();
                information_gain(&column, labels, FeatureKind::Continuous)?
            }
            _ => {
                let zero = [class_totals[0] - nz[0], class_totals[1] - nz[1], class_totals[2] - nz[2]];
                if labels.is_empty() {
                    0.0
                } else {
                    gain_from_table(labels, [zero, nz].iter())
                }
            }
        };
        out.push(RankedFeature {
            column: col as u32,
            name: schema.name(col).unwrap_or_default(),
            gain,
        });
    }
    out.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.column.cmp(&b.column)));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Annotation: polarity, emotions, records, kappa, majority vote
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationPolarity {
    Positive,
    Negative,
    Neutral,
    Mixed,
}

impl AnnotationPolarity {
    /// Category order of the kappa weight matrix.
    pub const ALL: [AnnotationPolarity; 4] = [Self::Positive, Self::Negative, Self::Neutral, Self::Mixed];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
            Self::Mixed => "mixed",
        }
    }

    pub fn polarity(self) -> Option<Polarity> {
        match self {
            Self::Positive => Some(Polarity::Positive),
            Self::Negative => Some(Polarity::Negative),
            Self::Neutral => Some(Polarity::Neutral),
            Self::Mixed => None,
        }
    }
}

impl From<Polarity> for AnnotationPolarity {
    fn from(p: Polarity) -> Self {
        match p {
            Polarity::Positive => Self::Positive,
            Polarity::Negative => Self::Negative,
            Polarity::Neutral => Self::Neutral,
        }
    }
}

impl fmt::Display for AnnotationPolarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnotationPolarity {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Self::Positive),
            "negative" | "neg" => Ok(Self::Negative),
            "neutral" | "neu" => Ok(Self::Neutral),
            "mixed" | "mix" => Ok(Self::Mixed),
            _ => Err(EvalError::UnknownPolarity(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Love,
    Joy,
    Surprise,
    Anger,
    Sadness,
    Fear,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [Self::Love, Self::Joy, Self::Surprise, Self::Anger, Self::Sadness, Self::Fear];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Love => "love",
            Self::Joy => "joy",
            Self::Surprise => "surprise",
            Self::Anger => "anger",
            Self::Sadness => "sadness",
            Self::Fear => "fear",
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Self::Love | Self::Joy)
    }

    pub fn is_negative(self) -> bool {
        matches!(self, Self::Anger | Self::Sadness | Self::Fear)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == lower)
            .ok_or_else(|| EvalError::UnknownEmotion(s.into()))
    }
}

/// Set of basic emotions as a bit set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct EmotionSet(u8);

impl EmotionSet {
    pub fn insert(&mut self, e: Emotion) {
        self.0 |= 1 << e as u8;
    }

    pub fn contains(self, e: Emotion) -> bool {
        self.0 & (1 << e as u8) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Emotion> {
        Emotion::ALL.into_iter().filter(move |&e| self.contains(e))
    }

    pub fn has_positive(self) -> bool {
        self.iter().any(Emotion::is_positive)
    }

    pub fn has_negative(self) -> bool {
        self.iter().any(Emotion::is_negative)
    }

    /// Parses a `;`-separated list; blank means no emotion.
    pub fn parse_list(s: &str) -> Result<Self, EvalError> {
        let mut set = EmotionSet::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            set.insert(part.parse()?);
        }
        Ok(set)
    }
}

impl FromIterator<Emotion> for EmotionSet {
    fn from_iter<I: IntoIterator<Item = Emotion>>(iter: I) -> Self {
        let mut set = EmotionSet::default();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

impl fmt::Display for EmotionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str(e.as_str())?;
        }
        Ok(())
    }
}

/// Whether an emotion/polarity combination is legal under the annotation
/// schema; `Err` carries the reason it is not.
pub fn check_combination(emotions: EmotionSet, polarity: AnnotationPolarity) -> Result<(), &'static str> {
    let (pos, neg) = (emotions.has_positive(), emotions.has_negative());
    match polarity {
        AnnotationPolarity::Neutral if emotions.iter().any(|e| e != Emotion::Surprise) => {
            Err("neutral polarity admits no emotion other than surprise")
        }
        AnnotationPolarity::Neutral => Ok(()),
        _ if emotions.is_empty() => Err("a polarity other than neutral needs an emotion"),
        AnnotationPolarity::Positive if neg => Err("positive polarity with a negative emotion"),
        AnnotationPolarity::Negative if pos => Err("negative polarity with a positive emotion"),
        AnnotationPolarity::Positive | AnnotationPolarity::Negative => Ok(()),
        AnnotationPolarity::Mixed if pos && neg => Ok(()),
        AnnotationPolarity::Mixed => Err("mixed polarity needs both a positive and a negative emotion"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    item_id: String,
    coder_id: String,
    emotions: EmotionSet,
    polarity: AnnotationPolarity,
}

impl AnnotationRecord {
    pub fn new(
        item_id: impl Into<String>,
        coder_id: impl Into<String>,
        emotions: EmotionSet,
        polarity: AnnotationPolarity,
    ) -> Result<Self, EvalError> {
        let (item_id, coder_id) = (item_id.into(), coder_id.into());
        if let Err(reason) = check_combination(emotions, polarity) {
            return Err(EvalError::InvalidAnnotation {
                item: item_id,
                coder: coder_id,
                reason,
            });
        }
        Ok(AnnotationRecord {
            item_id,
            coder_id,
            emotions,
            polarity,
        })
    }

    pub fn item_id(&self) -> &str {
        &self.item_id
    }

    pub fn coder_id(&self) -> &str {
        &self.coder_id
    }

    pub fn emotions(&self) -> EmotionSet {
        self.emotions
    }

    pub fn polarity(&self) -> AnnotationPolarity {
        self.polarity
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub item_id: String,
    /// `None` when the item is excluded from the gold standard.
    pub label: Option<Polarity>,
}

/// Majority label over three annotations of one item. Items with a mixed
/// annotation, or with both a positive and a negative one, are excluded
/// even when a majority exists.
pub fn majority_vote(records: &[AnnotationRecord]) -> Result<GoldLabel, EvalError> {
    if records.len() != 3 {
        return Err(EvalError::WrongArity(records.len()));
    }
    let item = &records[0].item_id;
    for (i, r) in records.iter().enumerate() {
        if &r.item_id != item {
            return Err(EvalError::MixedItems(item.clone(), r.item_id.clone()));
        }
        if records[..i].iter().any(|o| o.coder_id == r.coder_id) {
            return Err(EvalError::DuplicateCoder(r.coder_id.clone()));
        }
    }
    let polarities = [records[0].polarity, records[1].polarity, records[2].polarity];
    Ok(GoldLabel {
        item_id: item.clone(),
        label: vote_polarities(&polarities),
    })
}

/// The voting rule on bare labels.
pub fn vote_polarities(labels: &[AnnotationPolarity; 3]) -> Option<Polarity> {
    let has = |p| labels.contains(&p);
    if has(AnnotationPolarity::Mixed) || (has(AnnotationPolarity::Positive) && has(AnnotationPolarity::Negative)) {
        return None;
    }
    // survivors draw from {pos, neu} or {neg, neu}: a 2-of-3 majority exists
    let mut counts = [0; 4];
    for l in labels {
        counts[l.index()] += 1;
    }
    AnnotationPolarity::ALL
        .into_iter()
        .find(|l| counts[l.index()] >= 2)
        .and_then(AnnotationPolarity::polarity)
}

/// Groups records by item (first-appearance order) and votes each group.
pub fn vote_all(records: &[AnnotationRecord]) -> Result<Vec<GoldLabel>, EvalError> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
    for r in records {
        let g = groups.entry(r.item_id()).or_insert_with(|| {
            order.push(r.item_id());
            Vec::new()
        });
        g.push(r.clone());
    }
    order.iter().map(|id| majority_vote(&groups[id])).collect()
}

/// Disagreement weight between two annotation labels.
pub fn kappa_weight(a: AnnotationPolarity, b: AnnotationPolarity) -> f64 {
    use AnnotationPolarity::*;
    match (a, b) {
        _ if a == b => 0.0,
        (Positive, Negative) | (Negative, Positive) => 2.0,
        (Mixed, Neutral) | (Neutral, Mixed) => 2.0,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Set when chance-expected disagreement was zero (both coders constant
    /// and identical) and κ = 1 was reported by convention.
    pub degenerate: bool,
}

/// Cohen's weighted kappa between two coders.
pub fn weighted_kappa(a: &[AnnotationPolarity], b: &[AnnotationPolarity]) -> Result<KappaResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = a.len() as f64;
    let mut observed = [[0.0f64; 4]; 4];
    let mut ma = [0.0f64; 4];
    let mut mb = [0.0f64; 4];
    for (&x, &y) in a.iter().zip(b) {
        observed[x.index()][y.index()] += 1.0;
        ma[x.index()] += 1.0;
        mb[y.index()] += 1.0;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for x in AnnotationPolarity::ALL {
        for y in AnnotationPolarity::ALL {
            let w = kappa_weight(x, y);
            num += w * observed[x.index()][y.index()] / n;
            den += w * (ma[x.index()] / n) * (mb[y.index()] / n);
        }
    }
    if den == 0.0 {
        return if a == b {
            Ok(KappaResult {
                kappa: 1.0,
                degenerate: true,
            })
        } else {
            Err(EvalError::UndefinedExpectation)
        };
    }
    Ok(KappaResult {
        kappa: 1.0 - num / den,
        degenerate: false,
    })
}

pub fn observed_agreement<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.len() as f64)
}

// ---------------------------------------------------------------------------
// Chi-squared
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiSquaredMode {
    /// Classifier × {correct, incorrect}, 2×2.
    #[default]
    Correctness,
    /// Label predicted by A × label predicted by B, 3×3.
    Predictions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquared {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    /// Some expected cell count was zero; those cells contribute nothing.
    pub zero_expected_cell: bool,
}

impl ChiSquared {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Compares two classifiers' predictions on the same gold labels.
pub fn chi_squared_compare(
    gold: &[Polarity],
    pred_a: &[Polarity],
    pred_b: &[Polarity],
    mode: ChiSquaredMode,
    yates: bool,
) -> Result<ChiSquared, EvalError> {
    if gold.len() != pred_a.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred_a.len()));
    }
    if gold.len() != pred_b.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred_b.len()));
    }
    match mode {
        ChiSquaredMode::Correctness => {
            let correct = |p: &[Polarity]| gold.iter().zip(p).filter(|(g, p)| g == p).count() as f64;
            let (ca, cb) = (correct(pred_a), correct(pred_b));
            let n = gold.len() as f64;
            Ok(chi_squared_table(&[vec![ca, n - ca], vec![cb, n - cb]], yates))
        }
        ChiSquaredMode::Predictions => {
            let mut t = vec![vec![0.0; 3]; 3];
            for (a, b) in pred_a.iter().zip(pred_b) {
                t[a.index()][b.index()] += 1.0;
            }
            Ok(chi_squared_table(&t, yates))
        }
    }
}

/// Pearson's test of independence on an r×c table of counts. Empty rows
/// and columns do not count towards the degrees of freedom.
pub fn chi_squared_table(table: &[Vec<f64>], yates: bool) -> ChiSquared {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let ncols = table.iter().map(Vec::len).max().unwrap_or(0);
    let cols: Vec<f64> = (0..ncols)
        .map(|j| table.iter().map(|r| r.get(j).copied().unwrap_or(0.0)).sum())
        .collect();
    let n: f64 = rows.iter().sum();
    let mut statistic = 0.0;
    let mut zero_expected_cell = false;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = if n > 0.0 { rows[i] * cols[j] / n } else { 0.0 };
            if e == 0.0 {
                zero_expected_cell = true;
                continue;
            }
            let mut diff = libm::fabs(o - e);
            if yates {
                diff = (diff - 0.5).max(0.0);
            }
            statistic += diff * diff / e;
        }
    }
    let nz_rows = rows.iter().filter(|&&r| r > 0.0).count() as u32;
    let nz_cols = cols.iter().filter(|&&c| c > 0.0).count() as u32;
    let mut dof = nz_rows.saturating_sub(1) * nz_cols.saturating_sub(1);
    if table.len() == 2 && ncols == 2 {
        // a 2×2 comparison keeps its nominal single degree of freedom
        dof = 1;
    }
    ChiSquared {
        statistic,
        dof,
        p_value: chi_squared_sf(statistic, dof),
        zero_expected_cell,
    }
}

/// Upper tail probability of the chi-squared distribution.
pub fn chi_squared_sf(x: f64, dof: u32) -> f64 {
    if dof == 0 || x <= 0.0 {
        return 1.0;
    }
    gamma_q(f64::from(dof) / 2.0, x / 2.0)
}

/// Regularized upper incomplete gamma function Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if libm::fabs(term) < libm::fabs(sum) * GAMMA_EPS {
            break;
        }
    }
    (sum * libm::exp(-x + a * libm::log(x) - libm::lgamma(a))).clamp(0.0, 1.0)
}

// modified Lentz evaluation of the continued fraction
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < GAMMA_EPS {
            break;
        }
    }
    (libm::exp(-x + a * libm::log(x) - libm::lgamma(a)) * h).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Splitting and sampling
// ---------------------------------------------------------------------------

/// Seeded stratified partition into (train, test) index lists, both ascending.
/// Each class contributes round(fraction × size) items to train, kept
/// between 1 and size − 1.
pub fn stratified_split(labels: &[Polarity], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in Polarity::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(EvalError::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng(seed, 200 + class.index() as u64));
        let size = members.len();
        let k = (libm::round(train_fraction * size as f64) as usize).clamp(1, size - 1);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Labels eligible for annotation sampling, in cell order.
pub const SAMPLE_LABELS: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

/// Draws `n_per_cell` items uniformly from each post type × baseline label
/// cell. Undetermined items are never drawn. Returns ascending indices.
pub fn sample_for_annotation(candidates: &[(PostType, TrinaryLabel)], n_per_cell: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut picked = Vec::with_capacity(n_per_cell * 12);
    for (ti, post_type) in PostType::ALL.into_iter().enumerate() {
        for (li, label) in SAMPLE_LABELS.into_iter().enumerate() {
            let mut cell: Vec<usize> = (0..candidates.len())
                .filter(|&i| candidates[i].0 == post_type && candidates[i].1.polarity() == Some(label))
                .collect();
            if cell.len() < n_per_cell {
                return Err(EvalError::InsufficientCell {
                    post_type,
                    label,
                    available: cell.len(),
                    requested: n_per_cell,
                });
            }
            cell.shuffle(&mut rng(seed, 300 + (ti * 3 + li) as u64));
            picked.extend_from_slice(&cell[..n_per_cell]);
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSetting {
    pub name: String,
    pub mask: BlockMask,
}

impl From<FeatureSet> for AblationSetting {
    fn from(set: FeatureSet) -> Self {
        AblationSetting {
            name: set.as_str().into(),
            mask: set.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CSelection {
    Fixed(f64),
    /// Cross-validated choice from a grid on the training split.
    Tune { grid: Vec<f64>, folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub name: String,
    pub c: f64,
    pub confusion: ConfusionMatrix,
    pub report: PrfReport,
    pub predictions: Vec<Polarity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub from: String,
    pub to: String,
    pub test: ChiSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub settings: Vec<SettingResult>,
    /// Chi-squared between each setting and the next.
    pub comparisons: Vec<Comparison>,
}

/// A train/test split of cleaned documents with gold labels.
#[derive(Debug, Clone, Copy)]
pub struct SplitData<'a> {
    pub train_docs: &'a [CleanDocument],
    pub train_labels: &'a [Polarity],
    pub test_docs: &'a [CleanDocument],
    pub test_labels: &'a [Polarity],
}

/// Trains and evaluates one model per feature setting. The schema comes
/// from the training documents; masked-out blocks are left empty.
pub fn ablation_run(
    data: SplitData<'_>,
    lexicon: &Lexicon,
    space: Option<&EmbeddingSpace>,
    settings: &[AblationSetting],
    c: &CSelection,
    seed: u64,
) -> Result<AblationReport, EvalError> {
    if data.train_docs.len() != data.train_labels.len() {
        return Err(EvalError::LengthMismatch(data.train_docs.len(), data.train_labels.len()));
    }
    if data.test_docs.len() != data.test_labels.len() {
        return Err(EvalError::LengthMismatch(data.test_docs.len(), data.test_labels.len()));
    }
    let schema = build_schema(data.train_docs)?;
    let extractor = FeatureExtractor::new(lexicon, &schema, space);
    let mut results = Vec::with_capacity(settings.len());
    for setting in settings {
        if setting.mask.is_empty() {
            return Err(EvalError::EmptySetting(setting.name.clone()));
        }
        if setting.mask.includes(Block::Semantic) && space.is_none() {
            return Err(FeatureError::MissingEmbeddings(FeatureSet::KeywordSemantic).into());
        }
        let extract = |docs: &[CleanDocument]| -> Result<Vec<FeatureVector>, EvalError> {
            docs.iter().map(|d| Ok(extractor.extract_masked(d, setting.mask)?)).collect()
        };
        let train_set = LabeledDataset::new(schema.id(), schema.total_dim(), extract(data.train_docs)?, data.train_labels.to_vec())?;
        let chosen_c = match c {
            CSelection::Fixed(c) => *c,
            CSelection::Tune { grid, folds } => tune_c(&train_set, grid, *folds, seed)?.best_c,
        };
        let model = train(&train_set, &TrainOptions::new(chosen_c, seed))?;
        let predictions = extract(data.test_docs)?
            .iter()
            .map(|v| Ok(model.predict(v)?.label))
            .collect::<Result<Vec<_>, EvalError>>()?;
        let cm = confusion(data.test_labels, &predictions)?;
        results.push(SettingResult {
            name: setting.name.clone(),
            c: chosen_c,
            report: prf(&cm)?,
            confusion: cm,
            predictions,
        });
    }
    let mut comparisons = Vec::new();
    for pair in results.windows(2) {
        comparisons.push(Comparison {
            from: pair[0].name.clone(),
            to: pair[1].name.clone(),
            test: chi_squared_compare(
                data.test_labels,
                &pair[0].predictions,
                &pair[1].predictions,
                ChiSquaredMode::Correctness,
                false,
            )?,
        });
    }
    Ok(AblationReport {
        settings: results,
        comparisons,
    })
}
