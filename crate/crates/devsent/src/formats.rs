//! Readers and writers for every on-disk format.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use devsent_core::baseline::{SentimentScores, TrinaryLabel};
use devsent_core::corpus::{CleanDocument, PostType, RawPost};
use devsent_core::dsm::{parse_header, parse_vector_line, DsmError, EmbeddingSpace};
use devsent_core::evalkit::{AnnotationPolarity, AnnotationRecord, EmotionSet, GoldLabel};
use devsent_core::features::FeatureVector;
use devsent_core::lexicon::Lexicon;
use devsent_core::Polarity;

use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

fn finish_csv<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Posts
// ---------------------------------------------------------------------------

/// A row of a post file: the post and, for gold data, its label.
#[derive(Debug, Clone, PartialEq)]
pub struct PostRecord {
    pub post: RawPost,
    pub label: Option<Polarity>,
}

#[derive(Deserialize)]
struct PostRow {
    id: String,
    post_type: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Serialize)]
struct PostOut<'a> {
    id: &'a str,
    post_type: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct LabeledPostOut<'a> {
    id: &'a str,
    post_type: &'a str,
    text: &'a str,
    label: &'a str,
}

/// Reads `id,post_type,text[,label]` CSV. An empty label cell means unlabeled.
pub fn read_posts(path: &Path) -> Result<Vec<PostRecord>> {
    read_posts_from(open(path)?, path)
}

pub fn read_posts_from<R: Read>(reader: R, path: &Path) -> Result<Vec<PostRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PostRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let at = |msg: String| Error::format(path, format!("row {}: {msg}", i + 2));
        let post_type: PostType = row.post_type.parse().map_err(|e| at(format!("{e}")))?;
        let post = RawPost::new(row.id, post_type, row.text).map_err(|e| at(format!("{e}")))?;
        let label = match row.label.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(l) => Some(l.parse::<Polarity>().map_err(|e| at(format!("{e}")))?),
        };
        out.push(PostRecord { post, label });
    }
    Ok(out)
}

/// Writes posts; the label column is present iff any record carries a label.
pub fn write_posts(path: &Path, records: &[PostRecord]) -> Result<()> {
    let labeled = records.iter().any(|r| r.label.is_some());
    let mut w = csv_writer(path)?;
    for r in records {
        let (id, post_type, text) = (r.post.id(), r.post.post_type.code(), r.post.body.as_str());
        let res = if labeled {
            w.serialize(LabeledPostOut {
                id,
                post_type,
                text,
                label: r.label.map_or("", Polarity::as_str),
            })
        } else {
            w.serialize(PostOut { id, post_type, text })
        };
        res.map_err(|e| Error::csv(path, e))?;
    }
    if records.is_empty() {
        let header: &[&str] = &["id", "post_type", "text"];
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

/// Writes cleaned documents in the post format, text replaced by the
/// markup-free text.
pub fn write_cleaned(path: &Path, docs: &[CleanDocument], labels: &[Option<Polarity>]) -> Result<()> {
    let records = docs
        .iter()
        .zip(labels)
        .map(|(d, &label)| {
            Ok(PostRecord {
                post: RawPost::new(d.id.clone(), d.post_type, d.text.clone())?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_posts(path, &records)
}

/// One document per line, normalized tokens separated by single spaces.
pub fn write_corpus(path: &Path, docs: &[CleanDocument]) -> Result<()> {
    let mut w = create(path)?;
    for d in docs {
        writeln!(w, "{}", d.token_line()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a token-line corpus; blank lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lexicon directory
// ---------------------------------------------------------------------------

pub const TERMS_FILE: &str = "terms.txt";
pub const EMOTICONS_FILE: &str = "emoticons.txt";
pub const BOOSTERS_FILE: &str = "boosters.txt";
pub const NEGATIONS_FILE: &str = "negations.txt";
pub const LAUGHTER_FILE: &str = "laughter.txt";

/// Loads a lexicon directory. `terms.txt` is required; the emoticon,
/// booster, negation and laughter files are optional.
pub fn load_lexicon(dir: &Path) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    let read = |name: &str, required: bool| -> Result<Option<String>> {
        let path = dir.join(name);
        match fs::read_to_string(&path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && !required => {
                log::debug!("lexicon: {} not present", path.display());
                Ok(None)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(devsent_core::lexicon::LexiconError::MissingFile(path.display().to_string()).into())
            }
            Err(e) => Err(Error::io(path, e)),
        }
    };
    if let Some(s) = read(TERMS_FILE, true)? {
        lex.add_terms(TERMS_FILE, &s)?;
    }
    if let Some(s) = read(EMOTICONS_FILE, false)? {
        lex.add_emoticons(EMOTICONS_FILE, &s)?;
    }
    if let Some(s) = read(BOOSTERS_FILE, false)? {
        lex.add_boosters(BOOSTERS_FILE, &s)?;
    }
    if let Some(s) = read(NEGATIONS_FILE, false)? {
        lex.add_negations(NEGATIONS_FILE, &s)?;
    }
    if let Some(s) = read(LAUGHTER_FILE, false)? {
        lex.add_laughter(LAUGHTER_FILE, &s)?;
    }
    Ok(lex)
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// Reads the `<vocab> <dim>` header + `word c1 … cdim` text format, streaming.
pub fn read_vectors(path: &Path) -> Result<EmbeddingSpace> {
    let dsm = |e: DsmError| Error::format(path, e.to_string());
    let mut lines = open(path)?.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let (vocab, dim) = parse_header(&header).map_err(dsm)?;
    let mut space = EmbeddingSpace::new(dim);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, v) = parse_vector_line(&line, dim, i + 2).map_err(dsm)?;
        space.insert(&word, &v).map_err(dsm)?;
    }
    if space.len() != vocab {
        return Err(Error::format(
            path,
            format!("header declares {vocab} words, found {}", space.len()),
        ));
    }
    Ok(space)
}

pub fn write_vectors(path: &Path, space: &EmbeddingSpace) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", space.len(), space.dim()).map_err(io)?;
    for (word, v) in space.iter() {
        write!(w, "{word}").map_err(io)?;
        for x in v {
            // shortest representation that parses back to the same f32
            write!(w, " {x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

pub fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<()> {
    let mut w = create(path)?;
    let res = if pretty {
        serde_json::to_writer_pretty(&mut w, value)
    } else {
        serde_json::to_writer(&mut w, value)
    };
    res.map_err(|e| Error::json(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::json(path, e))
}

// ---------------------------------------------------------------------------
// Sparse feature matrix
// ---------------------------------------------------------------------------

/// Integer label used in sparse exports: −1, 0, 1; 0 also for unlabeled rows.
pub fn sparse_label(label: Option<Polarity>) -> i8 {
    label.map_or(0, Polarity::code)
}

/// `label idx:value …` per document, 0-based ascending indices.
pub fn write_sparse(path: &Path, vectors: &[FeatureVector], labels: &[Option<Polarity>]) -> Result<()> {
    if vectors.len() != labels.len() {
        return Err(Error::Usage(format!("{} vectors but {} labels", vectors.len(), labels.len())));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for (v, &l) in vectors.iter().zip(labels) {
        write!(w, "{}", sparse_label(l)).map_err(io)?;
        for &(c, x) in &v.entries {
            write!(w, " {c}:{x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parses a sparse export back into (label code, vector) rows.
pub fn read_sparse(path: &Path, schema_id: &str) -> Result<Vec<(i8, FeatureVector)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let bad = |m: &str| Error::format(path, format!("line {}: {m}", i + 1));
        let mut parts = line.split_whitespace();
        let Some(label) = parts.next() else { continue };
        let label: i8 = label.parse().map_err(|_| bad("bad label"))?;
        let mut entries = Vec::new();
        for p in parts {
            let (c, x) = p.split_once(':').ok_or_else(|| bad("expected idx:value"))?;
            let c: u32 = c.parse().map_err(|_| bad("bad index"))?;
            let x: f64 = x.parse().map_err(|_| bad("bad value"))?;
            entries.push((c, x));
        }
        out.push((label, FeatureVector::new(schema_id, entries)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Annotations and gold labels
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct AnnotationRow {
    item_id: String,
    coder_id: String,
    emotions: String,
    polarity: String,
}

/// Reads `item_id,coder_id,emotions,polarity`; each row is validated
/// against the allowed emotion/polarity combinations.
pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<AnnotationRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let at = |e: devsent_core::evalkit::EvalError| Error::format(path, format!("row {}: {e}", i + 2));
        let emotions = EmotionSet::parse_list(&row.emotions).map_err(at)?;
        let polarity: AnnotationPolarity = row.polarity.parse().map_err(at)?;
        out.push(AnnotationRecord::new(row.item_id, row.coder_id, emotions, polarity).map_err(at)?);
    }
    Ok(out)
}

pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(AnnotationRow {
            item_id: r.item_id().into(),
            coder_id: r.coder_id().into(),
            emotions: r.emotions().to_string(),
            polarity: r.polarity().to_string(),
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

pub const EXCLUDED: &str = "excluded";

/// `id,label` with `excluded` for items left out of the gold standard.
pub fn write_gold(path: &Path, gold: &[GoldLabel]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["id", "label"]).map_err(|e| Error::csv(path, e))?;
    for g in gold {
        let label = g.label.map_or(EXCLUDED, Polarity::as_str);
        w.write_record([g.item_id.as_str(), label]).map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

/// Reads the `id` (or `item_id`) and `label` columns of any CSV with a header.
pub fn read_id_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let id = col(&["id", "item_id"]).ok_or_else(|| Error::format(path, "no id column"))?;
    let label = col(&["label"]).ok_or_else(|| Error::format(path, "no label column"))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        out.push((rec[id].to_owned(), rec[label].trim().to_owned()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Classifier outputs
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct BaselineRow<'a> {
    id: &'a str,
    p: i8,
    n: i8,
    label: &'a str,
}

pub fn write_baseline(path: &Path, rows: &[(String, SentimentScores, TrinaryLabel)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    if rows.is_empty() {
        w.write_record(["id", "p", "n", "label"]).map_err(|e| Error::csv(path, e))?;
    }
    for (id, s, label) in rows {
        w.serialize(BaselineRow {
            id,
            p: s.p(),
            n: s.n(),
            label: label.as_str(),
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    label: &'a str,
    negative: f64,
    neutral: f64,
    positive: f64,
}

/// `id,label,negative,neutral,positive` with per-class decision values.
pub fn write_predictions(path: &Path, rows: &[(String, Polarity, [f64; 3])]) -> Result<()> {
    let mut w = csv_writer(path)?;
    if rows.is_empty() {
        w.write_record(["id", "label", "negative", "neutral", "positive"])
            .map_err(|e| Error::csv(path, e))?;
    }
    for (id, label, d) in rows {
        w.serialize(PredictionRow {
            id,
            label: label.as_str(),
            negative: d[0],
            neutral: d[1],
            positive: d[2],
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
