use std::io::{Read, Write};
use std::path::Path;

use super::{DatasetSchema, Provenance, TabularDataset};
use crate::{Error, Result};

/// Reads a data CSV (header = schema feature names followed by `label`) and
/// its JSON schema. No preprocessing is applied.
pub fn load_tabular(
    data_path: impl AsRef<Path>,
    schema_path: impl AsRef<Path>,
) -> Result<(TabularDataset, DatasetSchema)> {
    let schema = DatasetSchema::load(schema_path)?;
    let data_path = data_path.as_ref();
    let file = std::fs::File::open(data_path).map_err(|e| Error::io(data_path, e))?;
    let ds = parse_tabular(file, &schema, &data_path.display().to_string())?;
    log::info!("loaded {} rows from {}", ds.len(), data_path.display());
    Ok((ds, schema))
}

/// Parses CSV bytes against `schema`. `origin` names the source in errors.
pub fn parse_tabular<R: Read>(reader: R, schema: &DatasetSchema, origin: &str) -> Result<TabularDataset> {
    let load_err = |line: usize, message: String| Error::Load {
        path: origin.to_string(),
        line,
        message,
    };
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(::csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(load_err(1, "no data rows".into())),
        Some(r) => r.map_err(|e| load_err(csv_line(&e), e.to_string()))?,
    };
    let expected: Vec<&str> = schema
        .features
        .iter()
        .map(|f| f.name.as_str())
        .chain(std::iter::once("label"))
        .collect();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        let first_diff = expected
            .iter()
            .zip(&got)
            .position(|(a, b)| a != b)
            .unwrap_or(expected.len().min(got.len()));
        return Err(load_err(
            1,
            format!(
                "header mismatch at column {}: expected {:?}, found {:?} ({} columns vs {} expected)",
                first_diff + 1,
                expected.get(first_diff).copied().unwrap_or("<end>"),
                got.get(first_diff).copied().unwrap_or("<end>"),
                got.len(),
                expected.len()
            ),
        ));
    }

    let d = schema.dim();
    let k = schema.class_count();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record.map_err(|e| load_err(csv_line(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != d + 1 {
            return Err(load_err(
                line,
                format!("expected {} fields, found {}", d + 1, record.len()),
            ));
        }
        for (j, cell) in record.iter().take(d).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                load_err(
                    line,
                    format!("non-numeric value {cell:?} in column {}", schema.features[j].name),
                )
            })?;
            if !v.is_finite() {
                return Err(load_err(
                    line,
                    format!("non-finite value {cell:?} in column {}", schema.features[j].name),
                ));
            }
            values.push(v);
        }
        let raw_label = &record[d];
        let label: usize = raw_label
            .parse()
            .map_err(|_| load_err(line, format!("label {raw_label:?} is not a non-negative integer")))?;
        if label >= k {
            return Err(load_err(
                line,
                format!("label {label} out of range for {k} classes"),
            ));
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(load_err(2, "no data rows".into()));
    }
    TabularDataset::new(d, values, labels, Provenance::Raw)
}

fn csv_line(e: &::csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

/// Writes `ds` in the data CSV format. Values use Rust's shortest
/// round-trip float formatting, so re-reading is lossless.
pub fn write_tabular<W: Write>(ds: &TabularDataset, schema: &DatasetSchema, out: W) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    let io = |e: ::csv::Error| Error::Data(format!("csv write: {e}"));
    let mut header: Vec<&str> = schema.feature_names();
    header.push("label");
    w.write_record(&header).map_err(io)?;
    let mut fields = Vec::with_capacity(ds.dim() + 1);
    for (i, row) in ds.rows().enumerate() {
        fields.clear();
        fields.extend(row.iter().map(|v| v.to_string()));
        fields.push(ds.label(i).to_string());
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Data(format!("csv write: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureKind, FeatureSpec};

    fn schema() -> DatasetSchema {
        DatasetSchema::new(
            vec![
                FeatureSpec {
                    name: "age".into(),
                    kind: FeatureKind::Real,
                    cost: 1.0,
                },
                FeatureSpec {
                    name: "sick".into(),
                    kind: FeatureKind::Binary,
                    cost: 1.0,
                },
            ],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    fn parse(text: &str) -> Result<TabularDataset> {
        parse_tabular(text.as_bytes(), &schema(), "mem.csv")
    }

    #[test]
    fn parses_rows() {
        let ds = parse("age,sick,label\n0.5,1,2\n61,0,0\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(1), &[61.0, 0.0]);
        assert_eq!(ds.labels(), &[2, 0]);
        assert_eq!(ds.provenance, Provenance::Raw);
    }

    #[test]
    fn empty_inputs_have_no_rows() {
        for text in ["", "age,sick,label\n"] {
            let err = parse(text).unwrap_err();
            assert!(err.to_string().contains("no data rows"), "{err}");
        }
    }

    #[test]
    fn duplicated_row_parses_identically() {
        let mut text = String::from("age,sick,label\n");
        for _ in 0..10 {
            text.push_str("0.25,1,1\n");
        }
        let ds = parse(&text).unwrap();
        assert_eq!(ds.len(), 10);
        assert!(ds.rows().all(|r| r == [0.25, 1.0]));
        assert!(ds.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("age,sex,label\n1,0,0\n").unwrap_err();
        assert!(matches!(err, Error::Load { line: 1, .. }), "{err}");
        let err = parse("age,sick,label\n1,0,0\n2,x,0\n").unwrap_err();
        assert!(matches!(err, Error::Load { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("non-numeric"));
        let err = parse("age,sick,label\n1,0,3\n").unwrap_err();
        assert!(matches!(err, Error::Load { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("out of range"));
        let err = parse("age,sick,label\n1,0\n").unwrap_err();
        assert!(matches!(err, Error::Load { line: 2, .. }), "{err}");
        let err = parse("age,sick,label\nNaN,0,1\n").unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn write_then_read_is_lossless() {
        let ds = parse("age,sick,label\n0.1,1,2\n3.333333333333333,0,0\n").unwrap();
        let mut buf = Vec::new();
        write_tabular(&ds, &schema(), &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), ds);
    }
}
