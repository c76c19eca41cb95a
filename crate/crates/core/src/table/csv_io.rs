//! RFC-4180 CSV ingestion into typed tables.
//!
//! Quoted fields may hold delimiters and line breaks; a doubled quote inside
//! a quoted field is a literal quote. There are no backslash escapes. An
//! empty field is a null in nullable columns.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use super::{ColumnData, DType, Schema, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub delimiter: char,
    pub quote: char,
    pub has_header: bool,
    /// Largest tolerated share of records skipped for a field-count mismatch.
    pub max_malformed_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            delimiter: ',',
            quote: '"',
            has_header: true,
            max_malformed_fraction: 0.01,
        }
    }
}

impl IngestOptions {
    fn validate(&self) -> Result<(u8, u8)> {
        if self.delimiter == self.quote {
            return Err(Error::invalid("delimiter and quote must differ"));
        }
        if !self.delimiter.is_ascii() || !self.quote.is_ascii() {
            return Err(Error::invalid("delimiter and quote must be ASCII"));
        }
        if !(0.0..=1.0).contains(&self.max_malformed_fraction) {
            return Err(Error::invalid("max_malformed_fraction must lie in [0, 1]"));
        }
        Ok((self.delimiter as u8, self.quote as u8))
    }
}

/// Result of parsing one CSV source.
#[derive(Debug, Clone)]
pub struct ParseReport {
    pub table: Table,
    /// Data records seen, including skipped ones (header excluded).
    pub records: usize,
    /// Records skipped because they could not be placed in the schema.
    pub malformed: usize,
    /// 1-based record numbers (header excluded) of skipped records, capped
    /// at the first 100.
    pub malformed_records: Vec<usize>,
    /// Typed cells that failed to parse and were stored as null.
    pub nulled_cells: usize,
}

pub fn parse_csv(path: impl AsRef<Path>, schema: &Schema, opts: &IngestOptions) -> Result<ParseReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_csv_reader(io::BufReader::with_capacity(1 << 20, file), schema, opts)
}

enum Builder {
    Text(Vec<Option<String>>),
    Int64(Vec<Option<i64>>),
    Float64(Vec<Option<f64>>),
}

enum Cell {
    Text(Option<String>),
    Int64(Option<i64>),
    Float64(Option<f64>),
}

pub fn parse_csv_reader<R: Read>(reader: R, schema: &Schema, opts: &IngestOptions) -> Result<ParseReport> {
    let (delimiter, quote) = opts.validate()?;
    for f in schema.fields() {
        if !matches!(f.dtype, DType::Text | DType::Int64 | DType::Float64) {
            return Err(Error::Schema(format!(
                "column {:?} has type {} which cannot be read from CSV",
                f.name, f.dtype
            )));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quote(quote)
        .double_quote(true)
        .escape(None)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut record = csv::ByteRecord::new();
    if opts.has_header {
        if !rdr.read_byte_record(&mut record)? {
            return Err(Error::HeaderMismatch("file is empty".into()));
        }
        check_header(&record, schema)?;
    }

    let mut builders: Vec<Builder> = schema
        .fields()
        .iter()
        .map(|f| match f.dtype {
            DType::Int64 => Builder::Int64(Vec::new()),
            DType::Float64 => Builder::Float64(Vec::new()),
            _ => Builder::Text(Vec::new()),
        })
        .collect();

    let width = schema.len();
    let mut records = 0usize;
    let mut malformed = 0usize;
    let mut malformed_records = Vec::new();
    let mut nulled_cells = 0usize;
    let mut row: Vec<Cell> = Vec::with_capacity(width);

    while rdr.read_byte_record(&mut record)? {
        records += 1;
        let mut ok = record.len() == width;
        if ok {
            row.clear();
            for (raw, field) in record.iter().zip(schema.fields()) {
                match parse_cell(raw, field.dtype, field.nullable) {
                    CellOutcome::Value(c) => row.push(c),
                    CellOutcome::Nulled(c) => {
                        nulled_cells += 1;
                        row.push(c)
                    }
                    CellOutcome::Reject => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            malformed += 1;
            if malformed_records.len() < 100 {
                malformed_records.push(records);
            }
            continue;
        }
        for (b, c) in builders.iter_mut().zip(row.drain(..)) {
            match (b, c) {
                (Builder::Text(v), Cell::Text(x)) => v.push(x),
                (Builder::Int64(v), Cell::Int64(x)) => v.push(x),
                (Builder::Float64(v), Cell::Float64(x)) => v.push(x),
                _ => unreachable!("cell type follows schema"),
            }
        }
    }

    let fraction = if records == 0 {
        0.0
    } else {
        malformed as f64 / records as f64
    };
    if fraction > opts.max_malformed_fraction {
        return Err(Error::TooManyMalformed {
            malformed,
            total: records,
            fraction,
            limit: opts.max_malformed_fraction,
        });
    }

    let columns = builders
        .into_iter()
        .map(|b| match b {
            Builder::Text(v) => ColumnData::Text(v),
            Builder::Int64(v) => ColumnData::Int64(v),
            Builder::Float64(v) => ColumnData::Float64(v),
        })
        .collect();
    Ok(ParseReport {
        table: Table::new(schema.clone(), columns)?,
        records,
        malformed,
        malformed_records,
        nulled_cells,
    })
}

fn check_header(record: &csv::ByteRecord, schema: &Schema) -> Result<()> {
    if record.len() != schema.len() {
        return Err(Error::HeaderMismatch(format!(
            "header has {} fields, schema has {} columns",
            record.len(),
            schema.len()
        )));
    }
    for (raw, field) in record.iter().zip(schema.fields()) {
        let text = String::from_utf8_lossy(raw);
        let text = text.trim_start_matches('\u{feff}');
        if !field.matches_header(text) {
            return Err(Error::HeaderMismatch(format!(
                "header field {text:?} does not match column {:?}",
                field.name
            )));
        }
    }
    Ok(())
}

enum CellOutcome {
    Value(Cell),
    Nulled(Cell),
    Reject,
}

fn parse_cell(raw: &[u8], dtype: DType, nullable: bool) -> CellOutcome {
    let null = |dtype: DType| match dtype {
        DType::Int64 => Cell::Int64(None),
        DType::Float64 => Cell::Float64(None),
        _ => Cell::Text(None),
    };
    if raw.is_empty() {
        return match (dtype, nullable) {
            (_, true) => CellOutcome::Value(null(dtype)),
            (DType::Text, false) => CellOutcome::Value(Cell::Text(Some(String::new()))),
            _ => CellOutcome::Reject,
        };
    }
    let text = String::from_utf8_lossy(raw);
    let parsed = match dtype {
        DType::Text => return CellOutcome::Value(Cell::Text(Some(text.into_owned()))),
        DType::Int64 => parse_int(text.trim()).map(|v| Cell::Int64(Some(v))),
        _ => text
            .trim()
            .parse::<f64>()
            .ok()
            .map(|v| Cell::Float64(Some(v))),
    };
    match parsed {
        Some(c) => CellOutcome::Value(c),
        None if nullable => CellOutcome::Nulled(null(dtype)),
        None => CellOutcome::Reject,
    }
}

/// Integers, also accepting an integral float spelling such as `5.0`.
fn parse_int(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    let f = s.parse::<f64>().ok()?;
    if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15 {
        Some(f as i64)
    } else {
        None
    }
}

/// Writes a table as CSV with a header row. Nulls become empty fields.
pub fn write_csv<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(table.schema().names())?;
    let mut row: Vec<String> = Vec::with_capacity(table.schema().len());
    for r in 0..table.row_count() {
        row.clear();
        for c in 0..table.schema().len() {
            let cell = match table.column_at(c) {
                ColumnData::Text(v) => v[r].clone().unwrap_or_default(),
                ColumnData::Int64(v) => v[r].map(|x| x.to_string()).unwrap_or_default(),
                ColumnData::Float64(v) => v[r].map(|x| x.to_string()).unwrap_or_default(),
                ColumnData::Tokens(v) => v[r].as_ref().map(|t| t.join(" ")).unwrap_or_default(),
                ColumnData::Vector(_) => {
                    return Err(Error::invalid("vector columns cannot be written as CSV"))
                }
            };
            row.push(cell);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Field;

    fn ab_schema() -> Schema {
        Schema::new(vec![
            Field::new("a", DType::Int64, true),
            Field::new("b", DType::Text, true),
        ])
        .unwrap()
    }

    fn parse(src: &str, schema: &Schema, opts: &IngestOptions) -> Result<ParseReport> {
        parse_csv_reader(src.as_bytes(), schema, opts)
    }

    #[test]
    fn two_line_file() {
        let r = parse("a,b\n1,x", &ab_schema(), &IngestOptions::default()).unwrap();
        assert_eq!(r.table.row_count(), 1);
        assert_eq!(r.table.int64("a").unwrap(), &[Some(1)]);
        assert_eq!(r.table.text("b").unwrap(), &[Some("x".to_string())]);
        assert_eq!(r.malformed, 0);
    }

    #[test]
    fn quoted_delimiter_and_newline() {
        let src = "a,b\n1,\"great, long review\"\n2,\"line one\nline \"\"two\"\"\"\n";
        let r = parse(src, &ab_schema(), &IngestOptions::default()).unwrap();
        let b = r.table.text("b").unwrap();
        assert_eq!(b[0].as_deref(), Some("great, long review"));
        assert_eq!(b[1].as_deref(), Some("line one\nline \"two\""));
    }

    #[test]
    fn field_count_mismatch_is_skipped_and_counted() {
        let opts = IngestOptions {
            max_malformed_fraction: 0.5,
            ..IngestOptions::default()
        };
        let r = parse("a,b\n1,x\n2,y,z\n", &ab_schema(), &opts).unwrap();
        assert_eq!(r.table.row_count(), 1);
        assert_eq!(r.malformed, 1);
        assert_eq!(r.records, 2);
        assert_eq!(r.malformed_records, vec![2]);

        let strict = IngestOptions::default();
        let err = parse("a,b\n1,x\n2,y,z\n", &ab_schema(), &strict).unwrap_err();
        assert!(matches!(err, Error::TooManyMalformed { malformed: 1, total: 2, .. }));
    }

    #[test]
    fn header_matching_is_case_insensitive() {
        assert!(parse("A,B\n1,x", &ab_schema(), &IngestOptions::default()).is_ok());
        let err = parse("a,c\n1,x", &ab_schema(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch(_)));
        let err = parse("a\n1", &ab_schema(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch(_)));
    }

    #[test]
    fn unparsable_typed_cell() {
        let r = parse("a,b\nnope,x\n5.0,y\n,z", &ab_schema(), &IngestOptions::default()).unwrap();
        assert_eq!(r.table.int64("a").unwrap(), &[None, Some(5), None]);
        assert_eq!(r.nulled_cells, 1);

        let strict = Schema::new(vec![
            Field::new("a", DType::Int64, false),
            Field::new("b", DType::Text, true),
        ])
        .unwrap();
        let opts = IngestOptions {
            max_malformed_fraction: 1.0,
            ..IngestOptions::default()
        };
        let r = parse("a,b\nnope,x\n3,y", &strict, &opts).unwrap();
        assert_eq!(r.malformed, 1);
        assert_eq!(r.table.int64("a").unwrap(), &[Some(3)]);
    }

    #[test]
    fn other_dialects_and_option_checks() {
        let opts = IngestOptions {
            delimiter: ';',
            quote: '\'',
            has_header: false,
            ..IngestOptions::default()
        };
        let r = parse("1;'x;y'\n", &ab_schema(), &opts).unwrap();
        assert_eq!(r.table.text("b").unwrap()[0].as_deref(), Some("x;y"));

        let bad = IngestOptions {
            quote: ',',
            ..IngestOptions::default()
        };
        assert!(parse("a,b\n", &ab_schema(), &bad).is_err());
    }

    #[test]
    fn missing_file() {
        let err = parse_csv("/definitely/not/here.csv", &ab_schema(), &IngestOptions::default());
        assert!(matches!(err, Err(Error::FileNotFound(_))));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let src = "a,b\n1,\"with, comma\"\n,\"multi\nline\"\n-4,plain\n";
        let t = parse(src, &ab_schema(), &IngestOptions::default()).unwrap().table;
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let back = parse_csv_reader(&buf[..], &ab_schema(), &IngestOptions::default())
            .unwrap()
            .table;
        assert_eq!(t, back);
    }
}
