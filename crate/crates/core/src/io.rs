//! Embedding files: the `OWCL` binary layout and CSV.
//!
//! Binary layout, all little-endian:
//!
//! | offset | size      | field                          |
//! |--------|-----------|--------------------------------|
//! | 0      | 4         | magic `OWCL`                   |
//! | 4      | 2         | version (1)                    |
//! | 6      | 2         | flags, bit 0 = labels present  |
//! | 8      | 8         | n                              |
//! | 16     | 8         | d                              |
//! | 24     | 4 n d     | `f32` values, row-major        |
//! | ...    | 4 n       | `u32` labels, if flagged       |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, LabelVector};

pub const MAGIC: [u8; 4] = *b"OWCL";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 24;
const FLAG_LABELS: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Owcl,
    Csv,
}

impl FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "owcl" => Ok(FileFormat::Owcl),
            "csv" => Ok(FileFormat::Csv),
            _ => Err(Error::InvalidConfig(format!("unknown format {s:?}"))),
        }
    }
}

impl FileFormat {
    /// `csv` for a `.csv` extension, `owcl` otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Owcl,
        }
    }
}

fn expected_len(n: u64, d: u64, labels: bool) -> Option<u64> {
    let payload = n.checked_mul(d)?.checked_mul(4)?;
    let extra = if labels { n.checked_mul(4)? } else { 0 };
    HEADER_LEN.checked_add(payload)?.checked_add(extra)
}

/// Parses an in-memory `OWCL` file.
pub fn decode_embedding(bytes: &[u8]) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    let actual = bytes.len() as u64;
    if actual < 4 {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            actual,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if actual < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            actual,
        });
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("eight bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let has_labels = u16_at(6) & FLAG_LABELS != 0;
    let (n, d) = (u64_at(8), u64_at(16));
    let expected = expected_len(n, d, has_labels).unwrap_or(u64::MAX);
    if actual < expected {
        return Err(Error::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(Error::InvalidConfig(format!(
            "embedding file has {} trailing bytes",
            actual - expected
        )));
    }
    let (n, d) = (n as usize, d as usize);
    let body = &bytes[HEADER_LEN as usize..];
    let values: Vec<f32> = body[..4 * n * d]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
        .collect();
    let labels = has_labels.then(|| {
        LabelVector(
            body[4 * n * d..]
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("four bytes")))
                .collect(),
        )
    });
    Ok((EmbeddingMatrix::new(n, d, values)?, labels))
}

/// Serializes to the `OWCL` layout.
pub fn encode_embedding(x: &EmbeddingMatrix, labels: Option<&LabelVector>) -> Result<Vec<u8>> {
    if let Some(l) = labels {
        l.check_len(x.n())?;
    }
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * x.values().len() + labels.map_or(0, |l| 4 * l.len()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(if labels.is_some() { FLAG_LABELS } else { 0 }).to_le_bytes());
    out.extend_from_slice(&(x.n() as u64).to_le_bytes());
    out.extend_from_slice(&(x.d() as u64).to_le_bytes());
    for v in x.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(l) = labels {
        for v in l.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_owcl(path: &Path) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_embedding(&bytes)
}

pub fn write_owcl(path: &Path, x: &EmbeddingMatrix, labels: Option<&LabelVector>) -> Result<()> {
    let bytes = encode_embedding(x, labels)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Parses CSV text: one instance per row, numeric cells, no header. With
/// `label_column` the last cell of each row is a non-negative integer label.
pub fn parse_csv<R: Read>(reader: R, label_column: bool) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::CsvParse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::CsvParse {
                row,
                col: record.len().min(w),
                msg: format!("expected {w} cells, found {}", record.len()),
            });
        }
        let features = if label_column { w.saturating_sub(1) } else { w };
        if features == 0 {
            return Err(Error::CsvParse {
                row,
                col: 0,
                msg: "row has no feature cells".into(),
            });
        }
        for (col, cell) in record.iter().take(features).enumerate() {
            let v: f32 = cell.parse().map_err(|_| Error::CsvParse {
                row,
                col,
                msg: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvParse {
                    row,
                    col,
                    msg: format!("non-finite value: {cell:?}"),
                });
            }
            values.push(v);
        }
        if label_column {
            let cell = &record[features];
            let l: u32 = cell.parse().map_err(|_| Error::CsvParse {
                row,
                col: features,
                msg: format!("not a label: {cell:?}"),
            })?;
            labels.push(l);
        }
        rows += 1;
    }
    let d = match width {
        Some(w) if label_column => w - 1,
        Some(w) => w,
        None => return Err(Error::EmptyMatrix),
    };
    let x = EmbeddingMatrix::new(rows, d, values)?;
    Ok((x, label_column.then_some(LabelVector(labels))))
}

pub fn read_csv(path: &Path, label_column: bool) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    parse_csv(BufReader::new(File::open(path)?), label_column)
}

/// Writes one row per instance, with the label as a last column if given.
pub fn write_csv(path: &Path, x: &EmbeddingMatrix, labels: Option<&LabelVector>) -> Result<()> {
    if let Some(l) = labels {
        l.check_len(x.n())?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_io)?;
    for (i, row) in x.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            cells.push(l.as_slice()[i].to_string());
        }
        w.write_record(&cells).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads either format. For CSV, `csv_labels` says whether the last column
/// holds labels; `OWCL` files carry their own flag.
pub fn read_embedding_file(
    path: &Path,
    format: FileFormat,
    csv_labels: bool,
) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    match format {
        FileFormat::Owcl => read_owcl(path),
        FileFormat::Csv => read_csv(path, csv_labels),
    }
}

/// Labels from a file holding one integer per line (blank lines ignored).
pub fn read_label_file(path: &Path) -> Result<LabelVector> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|_| Error::CsvParse {
            row,
            col: 0,
            msg: format!("not a label: {line:?}"),
        })?);
    }
    Ok(LabelVector(out))
}
