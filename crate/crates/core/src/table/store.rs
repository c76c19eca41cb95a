//! Directory form of a [`Table`].
//!
//! Layout (format version 1):
//!
//! ```text
//! <dir>/schema.json     {"format_version":1,"row_count":N,"fields":[...],"files":["col_0.bin",...]}
//! <dir>/col_<i>.bin     one file per column, in schema order
//! ```
//!
//! Every column file starts with `N` null-mask bytes (1 = value present,
//! 0 = null), followed by the present values only, little-endian:
//!
//! * `int64`, `float64`: 8 bytes each (`f64` as IEEE-754 bits).
//! * `text`: `u32` byte length, then UTF-8 bytes.
//! * `tokens`: `u32` token count, then each token as a `text` value.
//! * `vector`: `u8` tag (0 dense, 1 sparse), `u32` dimension, then for
//!   dense `dim` × `f64`; for sparse `u32` nnz, nnz × `u32` indices,
//!   nnz × `f64` values.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnData, Field, Schema, Table};
use crate::error::{Error, Result};
use crate::vector::FeatureVector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Descriptor {
    format_version: u32,
    row_count: usize,
    fields: Vec<Field>,
    files: Vec<String>,
}

pub fn save_table(table: &Table, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for c in 0..table.schema().len() {
        let name = format!("col_{c}.bin");
        let mut w = BufWriter::new(fs::File::create(dir.join(&name))?);
        write_column(table.column_at(c), &mut w)?;
        w.flush()?;
        files.push(name);
    }
    let desc = Descriptor {
        format_version: FORMAT_VERSION,
        row_count: table.row_count(),
        fields: table.schema().fields().to_vec(),
        files,
    };
    fs::write(dir.join("schema.json"), serde_json::to_vec_pretty(&desc)?)?;
    Ok(())
}

pub fn load_table(dir: impl AsRef<Path>) -> Result<Table> {
    let dir = dir.as_ref();
    let desc_path = dir.join("schema.json");
    let raw = fs::read(&desc_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::FileNotFound(desc_path.clone()),
        _ => Error::Io(e),
    })?;
    let desc: Descriptor = serde_json::from_slice(&raw)
        .map_err(|e| Error::CorruptArtifact(format!("{}: {e}", desc_path.display())))?;
    if desc.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: desc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if desc.files.len() != desc.fields.len() {
        return Err(Error::CorruptArtifact("column file list does not match fields".into()));
    }
    let mut columns = Vec::with_capacity(desc.fields.len());
    for (field, file) in desc.fields.iter().zip(&desc.files) {
        let bytes = fs::read(dir.join(file))?;
        let mut cur = Cursor { buf: &bytes, pos: 0 };
        let col = read_column(&mut cur, field, desc.row_count)
            .ok_or_else(|| Error::CorruptArtifact(format!("column file {file} is truncated")))?;
        if cur.pos != bytes.len() {
            return Err(Error::CorruptArtifact(format!("column file {file} has trailing bytes")));
        }
        columns.push(col);
    }
    Table::new(Schema::new(desc.fields)?, columns)
}

fn write_column<W: Write>(col: &ColumnData, w: &mut W) -> io::Result<()> {
    fn mask<T, W: Write>(v: &[Option<T>], w: &mut W) -> io::Result<()> {
        let m: Vec<u8> = v.iter().map(|x| x.is_some() as u8).collect();
        w.write_all(&m)
    }
    fn text<W: Write>(s: &str, w: &mut W) -> io::Result<()> {
        w.write_all(&(s.len() as u32).to_le_bytes())?;
        w.write_all(s.as_bytes())
    }
    match col {
        ColumnData::Text(v) => {
            mask(v, w)?;
            for s in v.iter().flatten() {
                text(s, w)?;
            }
        }
        ColumnData::Int64(v) => {
            mask(v, w)?;
            for x in v.iter().flatten() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        ColumnData::Float64(v) => {
            mask(v, w)?;
            for x in v.iter().flatten() {
                w.write_all(&x.to_bits().to_le_bytes())?;
            }
        }
        ColumnData::Tokens(v) => {
            mask(v, w)?;
            for toks in v.iter().flatten() {
                w.write_all(&(toks.len() as u32).to_le_bytes())?;
                for t in toks {
                    text(t, w)?;
                }
            }
        }
        ColumnData::Vector(v) => {
            mask(v, w)?;
            for fv in v.iter().flatten() {
                match fv {
                    FeatureVector::Dense { values } => {
                        w.write_all(&[0u8])?;
                        w.write_all(&(values.len() as u32).to_le_bytes())?;
                        for x in values {
                            w.write_all(&x.to_bits().to_le_bytes())?;
                        }
                    }
                    FeatureVector::Sparse {
                        dim,
                        indices,
                        values,
                    } => {
                        w.write_all(&[1u8])?;
                        w.write_all(&(*dim as u32).to_le_bytes())?;
                        w.write_all(&(indices.len() as u32).to_le_bytes())?;
                        for i in indices {
                            w.write_all(&i.to_le_bytes())?;
                        }
                        for x in values {
                            w.write_all(&x.to_bits().to_le_bytes())?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bytes(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }
    fn u8(&mut self) -> Option<u8> {
        self.bytes(1).map(|b| b[0])
    }
    fn u32(&mut self) -> Option<u32> {
        self.bytes(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.bytes(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn text(&mut self) -> Option<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.bytes(n)?.to_vec()).ok()
    }
}

fn read_column(cur: &mut Cursor<'_>, field: &Field, rows: usize) -> Option<ColumnData> {
    let mask = cur.bytes(rows)?.to_vec();
    fn fill<T>(mask: &[u8], mut next: impl FnMut() -> Option<T>) -> Option<Vec<Option<T>>> {
        mask.iter()
            .map(|m| match m {
                0 => Some(None),
                1 => next().map(Some),
                _ => None,
            })
            .collect()
    }
    use super::DType;
    Some(match field.dtype {
        DType::Text => ColumnData::Text(fill(&mask, || cur.text())?),
        DType::Int64 => ColumnData::Int64(fill(&mask, || cur.u64().map(|x| x as i64))?),
        DType::Float64 => ColumnData::Float64(fill(&mask, || cur.u64().map(f64::from_bits))?),
        DType::Tokens => ColumnData::Tokens(fill(&mask, || {
            let n = cur.u32()? as usize;
            (0..n).map(|_| cur.text()).collect()
        })?),
        DType::Vector => ColumnData::Vector(fill(&mask, || {
            let tag = cur.u8()?;
            let dim = cur.u32()? as usize;
            match tag {
                0 => {
                    let values = (0..dim).map(|_| cur.u64().map(f64::from_bits)).collect::<Option<_>>()?;
                    Some(FeatureVector::Dense { values })
                }
                1 => {
                    let nnz = cur.u32()? as usize;
                    let indices = (0..nnz).map(|_| cur.u32()).collect::<Option<_>>()?;
                    let values = (0..nnz).map(|_| cur.u64().map(f64::from_bits)).collect::<Option<_>>()?;
                    let v = FeatureVector::Sparse { dim, indices, values };
                    v.is_well_formed().then_some(v)
                }
                _ => None,
            }
        })?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::DType;

    fn sample() -> Table {
        let schema = Schema::new(vec![
            Field::new("t", DType::Text, true),
            Field::new("i", DType::Int64, true),
            Field::new("f", DType::Float64, false),
            Field::new("tok", DType::Tokens, true),
            Field::new("v", DType::Vector, true),
        ])
        .unwrap();
        Table::new(
            schema,
            vec![
                ColumnData::Text(vec![Some("héllo, \"x\"".into()), None, Some(String::new())]),
                ColumnData::Int64(vec![Some(i64::MIN), Some(-1), None]),
                ColumnData::Float64(vec![Some(0.1), Some(f64::MAX), Some(-0.0)]),
                ColumnData::Tokens(vec![Some(vec!["a".into(), "bb".into()]), Some(vec![]), None]),
                ColumnData::Vector(vec![
                    Some(FeatureVector::dense(vec![1.0, 2.5])),
                    None,
                    Some(FeatureVector::sparse(9, vec![(3, 0.25), (8, -1.0)]).unwrap()),
                ]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample();
        save_table(&t, dir.path()).unwrap();
        let back = load_table(dir.path()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn truncated_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_table(&sample(), dir.path()).unwrap();
        let p = dir.path().join("col_0.bin");
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(load_table(dir.path()), Err(Error::CorruptArtifact(_))));
    }

    #[test]
    fn version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        save_table(&sample(), dir.path()).unwrap();
        let p = dir.path().join("schema.json");
        let s = fs::read_to_string(&p).unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
        fs::write(&p, s).unwrap();
        assert!(matches!(load_table(dir.path()), Err(Error::VersionMismatch { found: 7, .. })));
        assert!(matches!(load_table(dir.path().join("nope")), Err(Error::FileNotFound(_))));
    }
}
