//! Pipeline stages shared by the CLI and the tests, with optional
//! data parallelism. Output order never depends on the worker count.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use devsent_core::baseline::{score_document, trinary, SentimentScores, TrinaryLabel};
use devsent_core::corpus::{clean, CleanDocument, Tokenizer};
use devsent_core::dsm::EmbeddingSpace;
use devsent_core::evalkit::{
    confusion, confusion_trinary, observed_agreement, prf, weighted_kappa, AnnotationPolarity, AnnotationRecord,
    ConfusionMatrix, PrfReport,
};
use devsent_core::features::{build_schema, BlockMask, FeatureExtractor, FeatureSchema, FeatureSet, FeatureVector};
use devsent_core::learner::{
    cross_validate, select_c, stratified_folds, train, LabeledDataset, PolarityModel, TrainOptions, TuneResult,
};
use devsent_core::lexicon::Lexicon;
use devsent_core::Polarity;

use crate::error::{Error, Result};
use crate::formats::{PostRecord, EXCLUDED};
use crate::report::PairAgreement;

/// Runs `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not start {workers} workers ({e}); running single-threaded");
            f()
        }
    }
}

pub fn clean_posts(records: &[PostRecord], tokenizer: &Tokenizer) -> Vec<CleanDocument> {
    records.par_iter().map(|r| clean(&r.post, tokenizer)).collect()
}

/// Gold labels of every record; errors on the first unlabeled row.
pub fn require_labels(records: &[PostRecord]) -> Result<Vec<Polarity>> {
    records
        .iter()
        .map(|r| {
            r.label
                .ok_or_else(|| Error::Usage(format!("post {} has no label; a labeled file is required", r.post.id())))
        })
        .collect()
}

pub fn baseline_scores(docs: &[CleanDocument], lexicon: &Lexicon) -> Vec<(SentimentScores, TrinaryLabel)> {
    docs.par_iter()
        .map(|d| {
            let s = score_document(d, lexicon);
            (s, trinary(s))
        })
        .collect()
}

pub fn extract_all(extractor: &FeatureExtractor<'_>, docs: &[CleanDocument], mask: BlockMask) -> Result<Vec<FeatureVector>> {
    docs.par_iter()
        .map(|d| extractor.extract_masked(d, mask).map_err(Error::from))
        .collect()
}

pub fn extract_set(extractor: &FeatureExtractor<'_>, docs: &[CleanDocument], set: FeatureSet) -> Result<Vec<FeatureVector>> {
    docs.par_iter()
        .map(|d| extractor.extract(d, set).map_err(Error::from))
        .collect()
}

/// C tuning with grid values evaluated in parallel over one shared fold split.
pub fn tune_c_parallel(data: &LabeledDataset, grid: &[f64], folds: usize, seed: u64) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(devsent_core::learner::LearnerError::EmptyGrid.into());
    }
    // validates fold feasibility once, up front
    stratified_folds(data.labels(), folds, seed)?;
    let per_c = grid
        .par_iter()
        .map(|&c| Ok((c, cross_validate(data, c, folds, seed)?.mean_accuracy)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneResult {
        best_c: select_c(&per_c),
        per_c,
    })
}

/// A trained classifier together with the schema its vectors live in.
#[derive(Debug, Clone)]
pub struct Trained {
    pub schema: FeatureSchema,
    pub model: PolarityModel,
    pub tuning: Option<TuneResult>,
}

/// Builds the schema from the training documents, extracts `set`, picks C
/// (fixed or tuned over `grid`) and trains.
pub struct TrainRequest<'a> {
    pub docs: &'a [CleanDocument],
    pub labels: &'a [Polarity],
    pub lexicon: &'a Lexicon,
    pub space: Option<&'a EmbeddingSpace>,
    pub set: FeatureSet,
    pub c: Option<f64>,
    pub grid: &'a [f64],
    pub folds: usize,
    pub seed: u64,
}

pub fn train_classifier(req: TrainRequest<'_>) -> Result<Trained> {
    let schema = build_schema(req.docs)?;
    let extractor = FeatureExtractor::new(req.lexicon, &schema, req.space);
    let vectors = extract_set(&extractor, req.docs, req.set)?;
    let data = LabeledDataset::new(schema.id(), schema.total_dim(), vectors, req.labels.to_vec())?;
    let tuning = match req.c {
        Some(_) => None,
        None => Some(tune_c_parallel(&data, req.grid, req.folds, req.seed)?),
    };
    let c = req.c.or(tuning.as_ref().map(|t| t.best_c)).unwrap_or(1.0);
    log::info!("training on {} documents, {} features, C={c}", data.len(), schema.total_dim());
    let model = train(&data, &TrainOptions::new(c, req.seed))?;
    Ok(Trained { schema, model, tuning })
}

/// Label predicted by a classifier or by the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedLabel {
    Class(Polarity),
    Undetermined,
}

impl PredictedLabel {
    pub fn parse(s: &str) -> Option<PredictedLabel> {
        match s {
            "undetermined" => Some(PredictedLabel::Undetermined),
            _ => s.parse().ok().map(PredictedLabel::Class),
        }
    }

    fn as_trinary(self) -> TrinaryLabel {
        match self {
            PredictedLabel::Class(Polarity::Positive) => TrinaryLabel::Positive,
            PredictedLabel::Class(Polarity::Negative) => TrinaryLabel::Negative,
            PredictedLabel::Class(Polarity::Neutral) => TrinaryLabel::Neutral,
            PredictedLabel::Undetermined => TrinaryLabel::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub evaluated: u64,
    /// Items whose prediction was undetermined and which were left out.
    pub removed_undetermined: usize,
    /// Gold items marked excluded, skipped.
    pub skipped_excluded: usize,
    pub confusion: ConfusionMatrix,
    pub report: PrfReport,
}

/// Joins gold and predicted `(id, label)` lists by id and scores them.
/// Every gold item must have a prediction.
pub fn evaluate_labels(gold: &[(String, String)], pred: &[(String, String)]) -> Result<Evaluation> {
    let mut by_id: HashMap<&str, PredictedLabel> = HashMap::with_capacity(pred.len());
    for (id, l) in pred {
        let p = PredictedLabel::parse(l).ok_or_else(|| Error::Usage(format!("prediction for {id}: unknown label {l:?}")))?;
        if by_id.insert(id, p).is_some() {
            return Err(Error::Usage(format!("duplicate prediction for {id}")));
        }
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    let mut skipped_excluded = 0;
    for (id, l) in gold {
        if l == EXCLUDED || l.is_empty() {
            skipped_excluded += 1;
            continue;
        }
        let label: Polarity = l.parse().map_err(|e| Error::Usage(format!("gold {id}: {e}")))?;
        let pl = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Usage(format!("no prediction for gold item {id}")))?;
        g.push(label);
        p.push(pl.as_trinary());
    }
    let (cm, removed) = confusion_trinary(&g, &p)?;
    Ok(Evaluation {
        evaluated: cm.total(),
        removed_undetermined: removed,
        skipped_excluded,
        report: prf(&cm)?,
        confusion: cm,
    })
}

pub fn evaluate_predictions(gold: &[Polarity], pred: &[Polarity]) -> Result<(ConfusionMatrix, PrfReport)> {
    let cm = confusion(gold, pred)?;
    Ok((cm, prf(&cm)?))
}

/// Weighted kappa and observed agreement for every coder pair, over the
/// items both coders annotated. Pairs are ordered by coder id.
pub fn pairwise_agreement(records: &[AnnotationRecord]) -> Result<Vec<PairAgreement>> {
    let mut by_coder: BTreeMap<&str, BTreeMap<&str, AnnotationPolarity>> = BTreeMap::new();
    for r in records {
        if by_coder
            .entry(r.coder_id())
            .or_default()
            .insert(r.item_id(), r.polarity())
            .is_some()
        {
            return Err(devsent_core::evalkit::EvalError::DuplicateCoder(r.coder_id().into()).into());
        }
    }
    let coders: Vec<&str> = by_coder.keys().copied().collect();
    let mut out = Vec::new();
    for (i, a) in coders.iter().enumerate() {
        for b in &coders[i + 1..] {
            let (ma, mb) = (&by_coder[a], &by_coder[b]);
            let (xs, ys): (Vec<_>, Vec<_>) = ma
                .iter()
                .filter_map(|(item, &x)| mb.get(item).map(|&y| (x, y)))
                .unzip();
            if xs.is_empty() {
                continue;
            }
            let k = weighted_kappa(&xs, &ys)?;
            out.push(PairAgreement {
                coder_a: a.to_string(),
                coder_b: b.to_string(),
                items: xs.len(),
                weighted_kappa: k.kappa,
                degenerate: k.degenerate,
                observed_agreement: observed_agreement(&xs, &ys)?,
            });
        }
    }
    Ok(out)
}
