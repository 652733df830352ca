//! Structured documents: concept definitions, linear models, evaluation
//! reports and sweep tables, plus atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use fcm_core::concept::{ConceptDefinition, ConceptError};
use fcm_core::evaluation::{EvalReport, MetricKind, MetricSummary, SweepTable, TrialRecord};
use fcm_core::graph::{NeuronTuple, PatternOrder};
use fcm_core::LinearModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid definition: {0}")]
    Definition(#[from] ConceptError),
    #[error("invalid definition: entry {index} stores weight {stored}, counts give {derived}")]
    WeightMismatch { index: usize, stored: f64, derived: f64 },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("table output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefinitionDoc {
    pub name: String,
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<EntryDoc>,
    pub meta: MetaDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub indices: Vec<u32>,
    pub count: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaDoc {
    pub k_examples: usize,
    pub n_requested: usize,
    pub warnings: Vec<String>,
}

impl From<&ConceptDefinition> for DefinitionDoc {
    fn from(def: &ConceptDefinition) -> Self {
        Self {
            name: def.name().to_string(),
            order: def.order().arity(),
            dim: def.dim(),
            entries: def
                .entries()
                .iter()
                .map(|e| EntryDoc { indices: e.tuple.as_slice().to_vec(), count: e.count, weight: e.weight })
                .collect(),
            meta: MetaDoc {
                k_examples: def.meta().k_examples,
                n_requested: def.meta().n_requested,
                warnings: def.meta().warnings.iter().map(ToString::to_string).collect(),
            },
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<Vec<u8>, FormatError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn encode_definition(def: &ConceptDefinition) -> Result<Vec<u8>, FormatError> {
    pretty(&DefinitionDoc::from(def))
}

/// Parses a definition document and rebuilds it from its raw counts.
/// Stored weights must agree with the counts.
pub fn decode_definition(bytes: &[u8]) -> Result<ConceptDefinition, FormatError> {
    let doc: DefinitionDoc = serde_json::from_slice(bytes)?;
    let order = PatternOrder::from_arity(doc.order).map_err(ConceptError::from)?;
    let counts = doc
        .entries
        .iter()
        .map(|e| Ok((NeuronTuple::new(&e.indices).map_err(ConceptError::from)?, e.count)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    let def = ConceptDefinition::from_counts(doc.name, order, doc.dim, &counts, doc.meta.k_examples, doc.meta.n_requested)?;
    for (index, (stored, derived)) in doc.entries.iter().zip(def.entries()).enumerate() {
        if (stored.weight - derived.weight).abs() > 1e-12 {
            return Err(FormatError::WeightMismatch { index, stored: stored.weight, derived: derived.weight });
        }
    }
    Ok(def)
}

pub fn encode_model(model: &LinearModel) -> Result<Vec<u8>, FormatError> {
    pretty(model)
}

pub fn decode_model(bytes: &[u8]) -> Result<LinearModel, FormatError> {
    let m: LinearModel = serde_json::from_slice(bytes)?;
    LinearModel::from_parts(m.weights().to_vec(), m.bias(), m.config, m.seed, m.training_accuracy, m.degenerate)
        .map_err(|e| FormatError::Model(e.to_string()))
}

pub fn encode_json<T: Serialize>(value: &T) -> Result<Vec<u8>, FormatError> {
    pretty(value)
}

const SUMMARY_ROWS: [&str; 8] = ["mean", "ci_low", "ci_high", "median", "q1", "q3", "min", "max"];

fn summary_value(s: &MetricSummary, row: &str) -> f64 {
    match row {
        "mean" => s.mean,
        "ci_low" => s.ci_low,
        "ci_high" => s.ci_high,
        "median" => s.median,
        "q1" => s.q1,
        "q3" => s.q3,
        "min" => s.min,
        _ => s.max,
    }
}

fn trial_cells(t: &TrialRecord) -> Vec<String> {
    let m = &t.metrics;
    let c = &m.counts;
    vec![
        "trial".into(),
        t.trial.to_string(),
        t.split_seed.to_string(),
        m.accuracy.to_string(),
        m.precision.to_string(),
        m.recall.to_string(),
        m.f1.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.tn.to_string(),
        c.fn_.to_string(),
    ]
}

fn report_rows(report: &EvalReport) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = report.trials.iter().map(trial_cells).collect();
    for name in SUMMARY_ROWS {
        let mut row = vec![name.to_string(), String::new(), String::new()];
        row.extend(MetricKind::ALL.iter().map(|&k| summary_value(report.summary.get(k), name).to_string()));
        row.extend(std::iter::repeat_n(String::new(), 4));
        rows.push(row);
    }
    rows
}

const REPORT_HEADER: [&str; 11] =
    ["row", "trial", "split_seed", "accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn"];

/// One row per trial followed by one row per summary statistic.
pub fn report_csv(report: &EvalReport) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for row in report_rows(report) {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| FormatError::Csv(e.into_error().into()))
}

/// Report tables of every sweep row, prefixed with the swept value.
pub fn sweep_csv(table: &SweepTable) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![table.parameter.name()];
    header.extend(REPORT_HEADER);
    w.write_record(&header)?;
    for sweep_row in &table.rows {
        for row in report_rows(&sweep_row.report) {
            let mut full = vec![sweep_row.value.to_string()];
            full.extend(row);
            w.write_record(&full)?;
        }
    }
    w.into_inner().map_err(|e| FormatError::Csv(e.into_error().into()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fcm_core::encoding::ActivityMask;
    use fcm_core::{extract_concept, FcmConfig, LinearConfig};

    fn definition() -> ConceptDefinition {
        let a = ActivityMask::new(8, [0, 1, 2]).unwrap();
        let b = ActivityMask::new(8, [0, 1, 5]).unwrap();
        extract_concept("key", [&a, &b], &FcmConfig::default()).unwrap()
    }

    #[test]
    fn definition_round_trip() {
        let def = definition();
        let bytes = encode_definition(&def).unwrap();
        let back = decode_definition(&bytes).unwrap();
        assert_eq!(back, def);
        assert_eq!(encode_definition(&back).unwrap(), bytes);
        let text = String::from_utf8(bytes).unwrap();
        let fields: Vec<usize> = ["\"name\"", "\"order\"", "\"dim\"", "\"entries\"", "\"meta\""]
            .iter()
            .map(|f| text.find(f).unwrap())
            .collect();
        assert!(fields.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("short definition: 5 of 10 requested connections available"));
    }

    #[test]
    fn tampered_weights_are_rejected() {
        let mut doc = DefinitionDoc::from(&definition());
        doc.entries[0].weight += 0.1;
        let bytes = serde_json::to_vec(&doc).unwrap();
        assert!(matches!(decode_definition(&bytes), Err(FormatError::WeightMismatch { index: 0, .. })));
        let mut doc = DefinitionDoc::from(&definition());
        doc.entries[0].indices = vec![0, 9];
        assert!(matches!(decode_definition(&serde_json::to_vec(&doc).unwrap()), Err(FormatError::Definition(_))));
    }

    #[test]
    fn model_round_trip() {
        let model = LinearModel::from_parts(vec![0.5, -0.25], 0.125, LinearConfig::default(), 3, 1.0, false).unwrap();
        let bytes = encode_model(&model).unwrap();
        assert_eq!(decode_model(&bytes).unwrap(), model);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("\"weights\"") && text.contains("\"bias\"") && text.contains("\"regularization\""));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
