//! Encoding and label file formats.
//!
//! Encodings come in two layouts:
//!
//! - text: header `frame_id,n0,...,n{D-1}`, one row of decimal floats per
//!   frame;
//! - binary: magic `FCME`, little-endian `u32` frame count F and dimension
//!   D, F·D little-endian `f32` values row-major, then F newline-terminated
//!   UTF-8 frame ids.
//!
//! The layout is detected from the first four bytes. Labels are a text
//! table with header `frame_id,<concept>,...` and 0/1 cells.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use fcm_core::encoding::{Binarization, EncodingError, EncodingMatrix};
use fcm_core::LabeledDataset;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"FCME";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("{}: file not found", .0.display())]
    NotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("duplicate frame id `{0}`")]
    DuplicateFrameId(String),
    #[error("line {line}, column {column}: {reason}")]
    MalformedValue { line: u64, column: usize, reason: String },
    #[error("unlabeled frame reference: labels name frame `{0}` absent from the encodings")]
    UnlabeledFrameReference(String),
    #[error("duplicate concept column `{0}`")]
    DuplicateConcept(String),
    #[error("malformed binary encoding file: {0}")]
    MalformedBinary(String),
    #[error("malformed table: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

impl CodecError {
    /// Stable identifier used in command-line error lines.
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::NotFound(_) => "file_not_found",
            CodecError::Io { .. } => "io_error",
            CodecError::MalformedHeader(_) => "malformed_header",
            CodecError::DimensionMismatch(_) => "dimension_mismatch",
            CodecError::DuplicateFrameId(_) | CodecError::Encoding(EncodingError::DuplicateFrameId(_)) => {
                "duplicate_frame_id"
            }
            CodecError::MalformedValue { .. } | CodecError::Encoding(EncodingError::NonFinite { .. }) => {
                "malformed_value"
            }
            CodecError::UnlabeledFrameReference(_) => "unlabeled_frame_reference",
            CodecError::DuplicateConcept(_) => "duplicate_concept",
            CodecError::MalformedBinary(_) => "malformed_binary",
            CodecError::Csv(_) => "malformed_table",
            CodecError::Encoding(_) => "invalid_encoding",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CodecError + '_ {
    move |source| {
        if source.kind() == io::ErrorKind::NotFound {
            CodecError::NotFound(path.to_path_buf())
        } else {
            CodecError::Io { path: path.to_path_buf(), source }
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CodecError> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err(path))?;
    Ok(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingFormat {
    Text,
    Binary,
}

impl EncodingFormat {
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(MAGIC) {
            EncodingFormat::Binary
        } else {
            EncodingFormat::Text
        }
    }
}

pub fn decode_encodings(bytes: &[u8]) -> Result<EncodingMatrix, CodecError> {
    match EncodingFormat::sniff(bytes) {
        EncodingFormat::Binary => decode_binary(bytes),
        EncodingFormat::Text => decode_text(bytes),
    }
}

pub fn read_encodings(path: &Path) -> Result<EncodingMatrix, CodecError> {
    decode_encodings(&read_file(path)?)
}

pub fn encode_encodings(matrix: &EncodingMatrix, format: EncodingFormat) -> Result<Vec<u8>, CodecError> {
    match format {
        EncodingFormat::Text => encode_text(matrix),
        EncodingFormat::Binary => encode_binary(matrix),
    }
}

fn text_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(bytes)
}

pub fn decode_text(bytes: &[u8]) -> Result<EncodingMatrix, CodecError> {
    let mut reader = text_reader(bytes);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("frame_id") {
        return Err(CodecError::MalformedHeader("first column must be `frame_id`".into()));
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err(CodecError::MalformedHeader("no neuron columns".into()));
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name != format!("n{i}") {
            return Err(CodecError::MalformedHeader(format!("column {} is `{name}`, expected `n{i}`", i + 1)));
        }
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(CodecError::DimensionMismatch(format!(
                "line {line}: {} activations, header declares {dim}",
                record.len().saturating_sub(1)
            )));
        }
        ids.push(record[0].to_string());
        for (column, cell) in record.iter().enumerate().skip(1) {
            let v: f32 = cell.parse().map_err(|_| CodecError::MalformedValue {
                line,
                column,
                reason: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CodecError::MalformedValue { line, column, reason: format!("`{cell}` is not finite") });
            }
            values.push(v);
        }
    }
    if ids.is_empty() {
        return Err(CodecError::MalformedValue { line: 2, column: 0, reason: "no frames".into() });
    }
    Ok(EncodingMatrix::new(ids, values, dim)?)
}

pub fn encode_text(matrix: &EncodingMatrix) -> Result<Vec<u8>, CodecError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["frame_id".to_string()];
    header.extend((0..matrix.dim()).map(|i| format!("n{i}")));
    writer.write_record(&header)?;
    for (id, row) in matrix.frame_ids().iter().zip(matrix.rows()) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(id.clone());
        record.extend(row.iter().map(f32::to_string));
        writer.write_record(&record)?;
    }
    writer.into_inner().map_err(|e| CodecError::Io { path: PathBuf::new(), source: e.into_error() })
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize, what: &str) -> Result<&'a [u8], CodecError> {
    let end = at.checked_add(n).filter(|&e| e <= bytes.len());
    let end = end.ok_or_else(|| CodecError::MalformedBinary(format!("truncated {what}")))?;
    let slice = &bytes[*at..end];
    *at = end;
    Ok(slice)
}

pub fn decode_binary(bytes: &[u8]) -> Result<EncodingMatrix, CodecError> {
    let mut at = 0;
    if take(bytes, &mut at, 4, "magic")? != MAGIC {
        return Err(CodecError::MalformedBinary("missing FCME magic".into()));
    }
    let frames = u32::from_le_bytes(take(bytes, &mut at, 4, "frame count")?.try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(take(bytes, &mut at, 4, "dimension")?.try_into().unwrap()) as usize;
    if frames == 0 || dim == 0 {
        return Err(CodecError::MalformedBinary(format!("{frames} frames of dimension {dim}")));
    }
    let n = frames
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| CodecError::MalformedBinary("size overflow".into()))?;
    let raw = take(bytes, &mut at, n, "activation block")?;
    let values: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CodecError::MalformedValue { line: 0, column: i % dim, reason: format!("non-finite activation in frame {}", i / dim) });
    }
    let tail = std::str::from_utf8(&bytes[at..]).map_err(|_| CodecError::MalformedBinary("frame ids are not UTF-8".into()))?;
    let ids: Vec<String> = tail.split_terminator('\n').map(str::to_string).collect();
    if ids.len() != frames || !tail.ends_with('\n') {
        return Err(CodecError::MalformedBinary(format!("expected {frames} newline-terminated frame ids, found {}", ids.len())));
    }
    Ok(EncodingMatrix::new(ids, values, dim)?)
}

pub fn encode_binary(matrix: &EncodingMatrix) -> Result<Vec<u8>, CodecError> {
    let frames = u32::try_from(matrix.frames()).map_err(|_| CodecError::MalformedBinary("too many frames".into()))?;
    let dim = u32::try_from(matrix.dim()).map_err(|_| CodecError::MalformedBinary("dimension too large".into()))?;
    let mut out = Vec::with_capacity(12 + matrix.values().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&frames.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for id in matrix.frame_ids() {
        if id.contains('\n') {
            return Err(CodecError::MalformedBinary(format!("frame id {id:?} contains a newline")));
        }
        out.extend_from_slice(id.as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

/// Parsed labels file: concept vocabulary and per-frame label sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTable {
    pub concepts: Vec<String>,
    pub rows: Vec<(String, Vec<usize>)>,
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabelTable, CodecError> {
    let mut reader = text_reader(bytes);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("frame_id") {
        return Err(CodecError::MalformedHeader("first column must be `frame_id`".into()));
    }
    let concepts: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if concepts.is_empty() {
        return Err(CodecError::MalformedHeader("no concept columns".into()));
    }
    let mut names = BTreeSet::new();
    for c in &concepts {
        if c.is_empty() {
            return Err(CodecError::MalformedHeader("empty concept name".into()));
        }
        if !names.insert(c.as_str()) {
            return Err(CodecError::DuplicateConcept(c.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != concepts.len() + 1 {
            return Err(CodecError::DimensionMismatch(format!(
                "line {line}: {} label cells, header declares {} concepts",
                record.len().saturating_sub(1),
                concepts.len()
            )));
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(CodecError::DuplicateFrameId(id));
        }
        let mut labels = Vec::new();
        for (column, cell) in record.iter().enumerate().skip(1) {
            match cell {
                "1" => labels.push(column - 1),
                "0" => {}
                other => {
                    return Err(CodecError::MalformedValue { line, column, reason: format!("label cell `{other}` is not 0 or 1") })
                }
            }
        }
        rows.push((id, labels));
    }
    Ok(LabelTable { concepts, rows })
}

pub fn read_labels(path: &Path) -> Result<LabelTable, CodecError> {
    decode_labels(&read_file(path)?)
}

pub fn encode_labels(table: &LabelTable) -> Result<Vec<u8>, CodecError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["frame_id".to_string()];
    header.extend(table.concepts.iter().cloned());
    writer.write_record(&header)?;
    for (id, labels) in &table.rows {
        let mut record = vec![id.clone()];
        record.extend((0..table.concepts.len()).map(|c| if labels.contains(&c) { "1" } else { "0" }.to_string()));
        writer.write_record(&record)?;
    }
    writer.into_inner().map_err(|e| CodecError::Io { path: PathBuf::new(), source: e.into_error() })
}

/// Label table of a dataset, one row per frame.
pub fn labels_of(data: &LabeledDataset) -> LabelTable {
    LabelTable {
        concepts: data.concepts().to_vec(),
        rows: (0..data.len()).map(|f| (data.frame_ids()[f].clone(), data.labels(f).to_vec())).collect(),
    }
}

/// Binarizes `matrix` over itself and attaches `labels`. Frames absent
/// from the labels file carry no concept.
pub fn assemble_dataset(
    matrix: &EncodingMatrix,
    labels: &LabelTable,
    binarization: Binarization,
) -> Result<LabeledDataset, CodecError> {
    let index: HashMap<&str, usize> = matrix.frame_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut per_frame = vec![Vec::new(); matrix.frames()];
    for (id, set) in &labels.rows {
        let frame = *index.get(id.as_str()).ok_or_else(|| CodecError::UnlabeledFrameReference(id.clone()))?;
        per_frame[frame] = set.clone();
    }
    let masks = binarization.apply(matrix)?;
    LabeledDataset::new(matrix.frame_ids().to_vec(), masks, per_frame, labels.concepts.clone())
        .map_err(|e| CodecError::MalformedValue { line: 0, column: 0, reason: e.to_string() })
}

pub fn load_dataset(encodings: &Path, labels: &Path, binarization: Binarization) -> Result<LabeledDataset, CodecError> {
    let matrix = read_encodings(encodings)?;
    let table = read_labels(labels)?;
    assemble_dataset(&matrix, &table, binarization)
}

/// 0/1 encodings reproducing a dataset's masks exactly.
pub fn indicator_matrix(data: &LabeledDataset) -> Result<EncodingMatrix, CodecError> {
    let values = data.masks().iter().flat_map(|m| m.to_indicator()).collect();
    Ok(EncodingMatrix::new(data.frame_ids().to_vec(), values, data.dim())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "frame_id,n0,n1,n2\nf0,0.5,-1.25,0\nf1,0,2,0.125\n";

    #[test]
    fn text_parses() {
        let m = decode_text(TEXT.as_bytes()).unwrap();
        assert_eq!(m.frame_ids(), ["f0", "f1"]);
        assert_eq!(m.values(), [0.5, -1.25, 0.0, 0.0, 2.0, 0.125]);
        assert_eq!(encode_text(&m).unwrap(), TEXT.as_bytes());
    }

    #[test]
    fn binary_round_trip_is_byte_identical() {
        let m = decode_text(TEXT.as_bytes()).unwrap();
        let bin = encode_binary(&m).unwrap();
        assert_eq!(&bin[..4], MAGIC);
        let back = decode_encodings(&bin).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode_binary(&back).unwrap(), bin);
    }

    #[test]
    fn header_and_shape_errors() {
        let bad = decode_text(b"id,n0\na,1\n").unwrap_err();
        assert_eq!(bad.code(), "malformed_header");
        let bad = decode_text(b"frame_id,n0,n2\na,1,2\n").unwrap_err();
        assert_eq!(bad.code(), "malformed_header");
        let bad = decode_text(b"frame_id,n0,n1\na,1,2\nb,1\n").unwrap_err();
        assert_eq!(bad.code(), "dimension_mismatch");
        let bad = decode_text(b"frame_id,n0\na,1\na,2\n").unwrap_err();
        assert_eq!(bad.code(), "duplicate_frame_id");
        let bad = decode_text(b"frame_id,n0\na,x\n").unwrap_err();
        assert_eq!(bad.code(), "malformed_value");
        let bad = decode_text(b"frame_id,n0\na,NaN\n").unwrap_err();
        assert_eq!(bad.code(), "malformed_value");
    }

    #[test]
    fn binary_errors() {
        let m = decode_text(TEXT.as_bytes()).unwrap();
        let bin = encode_binary(&m).unwrap();
        assert_eq!(decode_binary(&bin[..20]).unwrap_err().code(), "malformed_binary");
        let mut extra = bin.clone();
        extra.extend_from_slice(b"f2\n");
        assert_eq!(decode_binary(&extra).unwrap_err().code(), "malformed_binary");
        let mut no_newline = bin.clone();
        no_newline.pop();
        assert_eq!(decode_binary(&no_newline).unwrap_err().code(), "malformed_binary");
    }

    #[test]
    fn labels_round_trip_and_errors() {
        let text = "frame_id,key,door\nf0,1,0\nf1,1,1\n";
        let table = decode_labels(text.as_bytes()).unwrap();
        assert_eq!(table.concepts, ["key", "door"]);
        assert_eq!(table.rows, [("f0".into(), vec![0]), ("f1".into(), vec![0, 1])]);
        assert_eq!(encode_labels(&table).unwrap(), text.as_bytes());

        assert_eq!(decode_labels(b"frame_id,a,a\nf,0,0\n").unwrap_err().code(), "duplicate_concept");
        assert_eq!(decode_labels(b"frame_id,a\nf,2\n").unwrap_err().code(), "malformed_value");
        assert_eq!(decode_labels(b"frame_id,a\nf,1\nf,0\n").unwrap_err().code(), "duplicate_frame_id");
        assert_eq!(decode_labels(b"frame,a\nf,1\n").unwrap_err().code(), "malformed_header");
    }

    #[test]
    fn dataset_assembly() {
        let m = decode_text(TEXT.as_bytes()).unwrap();
        let labels = decode_labels(b"frame_id,a,b\nf1,0,1\n").unwrap();
        let data = assemble_dataset(&m, &labels, Binarization::Fixed(0.4)).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.labels(0), [] as [usize; 0]);
        assert_eq!(data.labels(1), [1]);
        assert_eq!(data.mask(0).indices(), [0, 1]);
        assert_eq!(data.mask(1).indices(), [1]);

        let stray = decode_labels(b"frame_id,a\nzz,1\n").unwrap();
        assert_eq!(assemble_dataset(&m, &stray, Binarization::Adaptive).unwrap_err().code(), "unlabeled_frame_reference");
    }
}
