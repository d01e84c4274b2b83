//! Linear SVM polarity classifier.
//!
//! One binary L2-regularized hinge-loss classifier per class (one-vs-rest),
//! each solved in the dual by coordinate descent. The bias is learned as
//! the weight of an appended constant-1 feature. Training is deterministic
//! for a given seed: the seed only drives the per-pass visiting order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::util::rng;
use crate::Polarity;

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_MAX_PASSES: usize = 1000;
pub const DEFAULT_C_GRID: [f64; 9] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("C must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("class {class} has {count} examples, fewer than {folds} folds")]
    TooFewExamplesPerClass { folds: usize, class: Polarity, count: usize },
    #[error("at least 2 folds are required, got {0}")]
    InvalidFolds(usize),
    #[error("C grid is empty")]
    EmptyGrid,
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
}

/// Feature vectors with gold labels, all under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    schema_id: String,
    dim: usize,
    vectors: Vec<FeatureVector>,
    labels: Vec<Polarity>,
}

impl LabeledDataset {
    pub fn new(
        schema_id: impl Into<String>,
        dim: usize,
        vectors: Vec<FeatureVector>,
        labels: Vec<Polarity>,
    ) -> Result<Self, LearnerError> {
        let schema_id = schema_id.into();
        if vectors.len() != labels.len() {
            return Err(LearnerError::LengthMismatch {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        for v in &vectors {
            if v.schema_id != schema_id {
                return Err(LearnerError::SchemaMismatch(alloc::format!(
                    "vector schema {} != dataset schema {schema_id}",
                    v.schema_id
                )));
            }
            if let Some(&(col, _)) = v.entries.iter().find(|&&(c, _)| c as usize >= dim) {
                return Err(LearnerError::SchemaMismatch(alloc::format!("column {col} outside dimension {dim}")));
            }
        }
        Ok(LabeledDataset {
            schema_id,
            dim,
            vectors,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Polarity] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema_id: self.schema_id.clone(),
            dim: self.dim,
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub c: f64,
    pub seed: u64,
    /// Stop once the spread of projected gradients over a pass drops below this.
    pub tolerance: f64,
    pub max_passes: usize,
    /// Record the dual objective after every coordinate update.
    pub track_objective: bool,
}

impl TrainOptions {
    pub fn new(c: f64, seed: u64) -> Self {
        TrainOptions {
            c,
            seed,
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
            track_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub tolerance: f64,
    pub max_passes: usize,
    /// Passes actually run, per class in model order.
    pub passes: [usize; 3],
    pub converged: [bool; 3],
}

/// Trained one-vs-rest model. `weights[k]` has `dim + 1` components, the
/// last being the bias; `None` marks a class absent from training, which is
/// never predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct PolarityModel {
    pub c: f64,
    pub schema_id: String,
    pub dim: usize,
    /// Whether features were scaled before training; always false here,
    /// kept in the file so runs with scaling remain distinguishable.
    pub scaling: bool,
    pub meta: TrainingMeta,
    pub weights: [Option<Vec<f64>>; 3],
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    version: u32,
    classes: [Polarity; 3],
    #[serde(rename = "C")]
    c: f64,
    schema_id: String,
    dim: usize,
    scaling_flag: bool,
    training_meta: TrainingMeta,
    weights: [Option<Vec<f64>>; 3],
}

impl From<PolarityModel> for ModelRepr {
    fn from(m: PolarityModel) -> Self {
        ModelRepr {
            version: MODEL_VERSION,
            classes: Polarity::ALL,
            c: m.c,
            schema_id: m.schema_id,
            dim: m.dim,
            scaling_flag: m.scaling,
            training_meta: m.meta,
            weights: m.weights,
        }
    }
}

impl TryFrom<ModelRepr> for PolarityModel {
    type Error = LearnerError;

    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        if r.version != MODEL_VERSION {
            return Err(LearnerError::UnsupportedVersion(r.version));
        }
        if r.classes != Polarity::ALL {
            return Err(LearnerError::SchemaMismatch("class order must be negative, neutral, positive".into()));
        }
        for w in r.weights.iter().flatten() {
            if w.len() != r.dim + 1 {
                return Err(LearnerError::SchemaMismatch(alloc::format!(
                    "weight vector has {} components, expected {}",
                    w.len(),
                    r.dim + 1
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(LearnerError::SchemaMismatch("non-finite weight".into()));
            }
        }
        Ok(PolarityModel {
            c: r.c,
            schema_id: r.schema_id,
            dim: r.dim,
            scaling: r.scaling_flag,
            meta: r.training_meta,
            weights: r.weights,
        })
    }
}

/// Per-class solver diagnostics from [`train_traced`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinaryTrace {
    /// Dual objective after each coordinate update (starts at 0).
    pub objective: Vec<f64>,
    pub alpha: Vec<f64>,
}

struct BinarySolution {
    weights: Vec<f64>,
    passes: usize,
    converged: bool,
    trace: BinaryTrace,
}

fn dot_augmented(w: &[f64], x: &FeatureVector) -> f64 {
    let bias = w[w.len() - 1];
    x.entries.iter().fold(bias, |acc, &(c, v)| acc + w[c as usize] * v)
}

fn solve_binary(data: &LabeledDataset, positive: Polarity, opts: &TrainOptions, stream: u64) -> BinarySolution {
    let l = data.len();
    let c = opts.c;
    let y: Vec<f64> = data
        .labels
        .iter()
        .map(|&lab| if lab == positive { 1.0 } else { -1.0 })
        .collect();
    // diagonal of the kernel matrix, including the constant-1 bias feature
    let qd: Vec<f64> = data
        .vectors
        .iter()
        .map(|x| x.entries.iter().map(|&(_, v)| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut alpha = vec![0.0f64; l];
    let mut w = vec![0.0f64; data.dim + 1];
    let bias = data.dim;
    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = rng(opts.seed, stream);
    let mut trace = BinaryTrace::default();
    let mut objective = 0.0;
    if opts.track_objective {
        trace.objective.push(objective);
    }

    let mut passes = 0;
    let mut converged = false;
    while passes < opts.max_passes {
        passes += 1;
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let x = &data.vectors[i];
            let g = y[i] * dot_augmented(&w, x) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let step = alpha[i] - old;
                let d = step * y[i];
                for &(col, v) in &x.entries {
                    w[col as usize] += d * v;
                }
                w[bias] += d;
                if opts.track_objective {
                    objective += -step * g - 0.5 * step * step * qd[i];
                    trace.objective.push(objective);
                }
            }
        }
        if pg_max - pg_min < opts.tolerance {
            converged = true;
            break;
        }
    }
    if opts.track_objective {
        trace.alpha = alpha;
    }
    BinarySolution {
        weights: w,
        passes,
        converged,
        trace,
    }
}

pub fn train(data: &LabeledDataset, opts: &TrainOptions) -> Result<PolarityModel, LearnerError> {
    train_traced(data, opts).map(|(m, _)| m)
}

/// Like [`train`], also returning per-class solver traces (populated when
/// `opts.track_objective` is set).
pub fn train_traced(data: &LabeledDataset, opts: &TrainOptions) -> Result<(PolarityModel, [BinaryTrace; 3]), LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(LearnerError::InvalidC(opts.c));
    }
    let counts = data.class_counts();
    let mut weights: [Option<Vec<f64>>; 3] = [None, None, None];
    let mut traces: [BinaryTrace; 3] = Default::default();
    let mut passes = [0; 3];
    let mut converged = [true; 3];
    for class in Polarity::ALL {
        let k = class.index();
        if counts[k] == 0 {
            continue;
        }
        let sol = solve_binary(data, class, opts, k as u64);
        weights[k] = Some(sol.weights);
        passes[k] = sol.passes;
        converged[k] = sol.converged;
        traces[k] = sol.trace;
    }
    let model = PolarityModel {
        c: opts.c,
        schema_id: data.schema_id.clone(),
        dim: data.dim,
        scaling: false,
        meta: TrainingMeta {
            seed: opts.seed,
            tolerance: opts.tolerance,
            max_passes: opts.max_passes,
            passes,
            converged,
        },
        weights,
    };
    Ok((model, traces))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Polarity,
    /// wᵀx + b per class in model order; `-inf` for classes absent from training.
    pub decision: [f64; 3],
}

impl PolarityModel {
    pub fn decision_values(&self, fv: &FeatureVector) -> Result<[f64; 3], LearnerError> {
        if fv.schema_id != self.schema_id {
            return Err(LearnerError::SchemaMismatch(alloc::format!(
                "vector schema {} != model schema {}",
                fv.schema_id,
                self.schema_id
            )));
        }
        let mut out = [f64::NEG_INFINITY; 3];
        for (k, w) in self.weights.iter().enumerate() {
            if let Some(w) = w {
                let bias = w[self.dim];
                out[k] = fv
                    .entries
                    .iter()
                    .filter(|&&(c, _)| (c as usize) < self.dim)
                    .fold(bias, |acc, &(c, v)| acc + w[c as usize] * v);
            }
        }
        Ok(out)
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction, LearnerError> {
        let decision = self.decision_values(fv)?;
        Ok(Prediction {
            label: argmax(&decision),
            decision,
        })
    }
}

/// Earliest class wins ties (negative < neutral < positive).
pub fn argmax(decision: &[f64; 3]) -> Polarity {
    let mut best = 0;
    for k in 1..3 {
        if decision[k] > decision[best] {
            best = k;
        }
    }
    Polarity::ALL[best]
}

pub fn predict(model: &PolarityModel, fv: &FeatureVector) -> Result<Prediction, LearnerError> {
    model.predict(fv)
}

// ---------------------------------------------------------------------------
// Cross-validation and tuning
// ---------------------------------------------------------------------------

/// Seeded stratified fold assignment: `result[i]` is the fold of example `i`.
/// Each class is shuffled and dealt round-robin, continuing where the
/// previous class stopped so fold sizes stay balanced.
pub fn stratified_folds(labels: &[Polarity], folds: usize, seed: u64) -> Result<Vec<usize>, LearnerError> {
    if folds < 2 {
        return Err(LearnerError::InvalidFolds(folds));
    }
    let mut assignment = vec![0usize; labels.len()];
    let mut offset = 0;
    for class in Polarity::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(LearnerError::TooFewExamplesPerClass {
                folds,
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng(seed, 100 + class.index() as u64));
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = (offset + j) % folds;
        }
        offset += members.len();
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

pub fn cross_validate(data: &LabeledDataset, c: f64, folds: usize, seed: u64) -> Result<CvResult, LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    let assignment = stratified_folds(data.labels(), folds, seed)?;
    cross_validate_with(data, c, folds, seed, &assignment)
}

fn cross_validate_with(data: &LabeledDataset, c: f64, folds: usize, seed: u64, assignment: &[usize]) -> Result<CvResult, LearnerError> {
    let mut fold_accuracy = Vec::with_capacity(folds);
    for f in 0..folds {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let model = train(&data.subset(&train_idx), &TrainOptions::new(c, seed))?;
        let mut correct = 0usize;
        for &i in &test_idx {
            if model.predict(&data.vectors[i])?.label == data.labels[i] {
                correct += 1;
            }
        }
        fold_accuracy.push(correct as f64 / test_idx.len() as f64);
    }
    let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
    Ok(CvResult {
        fold_accuracy,
        mean_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_c: f64,
    /// (C, mean held-out accuracy) in grid order.
    pub per_c: Vec<(f64, f64)>,
}

/// Picks the C with the highest mean cross-validated accuracy; among equal
/// accuracies the smallest C wins. All grid values share one fold split.
pub fn tune_c(data: &LabeledDataset, grid: &[f64], folds: usize, seed: u64) -> Result<TuneResult, LearnerError> {
    if grid.is_empty() {
        return Err(LearnerError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(LearnerError::InvalidC(bad));
    }
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    let assignment = stratified_folds(data.labels(), folds, seed)?;
    let mut per_c = Vec::with_capacity(grid.len());
    for &c in grid {
        let cv = cross_validate_with(data, c, folds, seed, &assignment)?;
        per_c.push((c, cv.mean_accuracy));
    }
    Ok(TuneResult {
        best_c: select_c(&per_c),
        per_c,
    })
}

/// Highest accuracy, smallest C on ties.
pub fn select_c(per_c: &[(f64, f64)]) -> f64 {
    let mut best = per_c[0];
    for &(c, acc) in &per_c[1..] {
        if acc > best.1 || (acc == best.1 && c < best.0) {
            best = (c, acc);
        }
    }
    best.0
}

impl core::fmt::Display for TuneResult {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (c, acc) in &self.per_c {
            writeln!(f, "C={c}\taccuracy={acc:.4}")?;
        }
        write!(f, "best C={}", self.best_c)
    }
}

impl TrainingMeta {
    pub fn summary(&self) -> String {
        alloc::format!("seed={} passes={:?} converged={:?}", self.seed, self.passes, self.converged)
    }
}
