//! Feature CSV: `writer_id,sample_id,label,f1..fL`, one signature per row.

use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, FeatureVector, Label};
use crate::error::{Error, Result};

/// Loads a feature CSV whose rows must all carry `expected_length` values.
pub fn load_feature_csv<R: Read>(reader: R, name: &str, expected_length: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut vectors = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != expected_length + 3 {
            return Err(Error::parse_row(
                line,
                format!(
                    "expected {} feature values, found {}",
                    expected_length,
                    record.len().saturating_sub(3)
                ),
            ));
        }
        let label: Label = record[2].parse().map_err(|e: String| Error::parse_row(line, e))?;
        let values = record
            .iter()
            .skip(3)
            .enumerate()
            .map(|(i, tok)| match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::parse_row(line, format!("feature f{} = {tok:?} is not a finite number", i + 1))),
            })
            .collect::<Result<Vec<f64>>>()?;
        vectors.push(FeatureVector {
            writer_id: record[0].to_string(),
            sample_id: record[1].to_string(),
            label,
            values,
        });
    }
    Dataset::from_vectors(name, expected_length, vectors)
}

/// Reads a feature CSV from disk, taking the vector length from its header.
pub fn read_feature_csv_file(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(file);
    let width = rdr.headers()?.len();
    if width < 4 {
        return Err(Error::parse_row(1, "header must name writer_id, sample_id, label and at least one feature"));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    load_feature_csv(file, &name, width - 3)
}

/// Writes rows in the given order under a `writer_id,sample_id,label,f1..fL` header.
pub fn write_feature_rows<'a, W: Write>(
    writer: W,
    feature_length: usize,
    rows: impl IntoIterator<Item = &'a FeatureVector>,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header = vec!["writer_id".to_string(), "sample_id".into(), "label".into()];
    header.extend((1..=feature_length).map(|i| format!("f{i}")));
    wtr.write_record(&header)?;
    for v in rows {
        let mut rec = vec![v.writer_id.clone(), v.sample_id.clone(), v.label.to_string()];
        // shortest round-trip representation keeps reloads bit-exact
        rec.extend(v.values.iter().map(|x| format!("{x:?}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

pub fn write_feature_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    write_feature_rows(writer, dataset.feature_length, dataset.vectors().map(|v| v.as_ref()))
}
