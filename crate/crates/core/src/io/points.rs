//! `BFLOWP1` point files: same layout as grid files, with named columns.
//!
//! ```text
//! BFLOWP1
//! name snapshot-0010
//! columns x p label
//! rows 1200
//! bytes 28800
//!
//! <row-major f64le payload>
//! ```

use super::gridfile::{field, parse_num, split_header};
use super::IoError;
use std::path::Path;

pub const POINTS_MAGIC: &str = "BFLOWP1";

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub name: String,
    pub columns: Vec<String>,
    /// Row-major, `columns.len()` values per row.
    pub data: Vec<f64>,
}

impl PointSet {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), data: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.columns.len().max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.columns.len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn encode(&self) -> Result<Vec<u8>, IoError> {
        let bad = |s: &str| s.is_empty() || s.contains(char::is_whitespace);
        if self.name.contains(['\n', '\r']) || self.name.trim().is_empty() || self.columns.is_empty() || self.columns.iter().any(|c| bad(c)) {
            return Err(IoError::BadHeader("invalid point-set name or columns".into()));
        }
        if self.data.len() % self.columns.len() != 0 {
            return Err(IoError::PayloadMismatch { expected: self.rows() * self.columns.len(), got: self.data.len() });
        }
        let mut out = format!(
            "{POINTS_MAGIC}\nname {}\ncolumns {}\nrows {}\nbytes {}\n\n",
            self.name,
            self.columns.join(" "),
            self.rows(),
            self.data.len() * 8
        )
        .into_bytes();
        self.data.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, IoError> {
        let (lines, start) = split_header(bytes, POINTS_MAGIC)?;
        let name = field(&lines, "name")?.to_string();
        let columns: Vec<String> = field(&lines, "columns")?.split_whitespace().map(str::to_string).collect();
        let rows: usize = parse_num(field(&lines, "rows")?, "rows")?;
        let declared: usize = parse_num(field(&lines, "bytes")?, "bytes")?;
        if columns.is_empty() || declared != rows * columns.len() * 8 {
            return Err(IoError::BadHeader("rows, columns and bytes disagree".into()));
        }
        let payload = &bytes[start..];
        if payload.len() < declared {
            return Err(IoError::Truncated);
        }
        if payload.len() > declared {
            return Err(IoError::BadHeader("trailing bytes after payload".into()));
        }
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        Ok(Self { name, columns, data })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        std::fs::write(path, self.encode()?).map_err(|e| IoError::Io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::decode(&std::fs::read(path).map_err(|e| IoError::Io(path.display().to_string(), e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut p = PointSet::new("snap", &["x", "p", "label"]);
        p.push(&[0.5, -1.0, 3.0]);
        p.push(&[f64::NAN, 2.0, 0.0]);
        let q = PointSet::decode(&p.encode().unwrap()).unwrap();
        assert_eq!(q.columns, p.columns);
        assert_eq!(q.rows(), 2);
        assert!(p.data.iter().zip(&q.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empty_set_is_fine() {
        let p = PointSet::new("none", &["x"]);
        assert_eq!(PointSet::decode(&p.encode().unwrap()).unwrap().rows(), 0);
    }

    #[test]
    fn bad_column_name() {
        assert!(PointSet::new("a", &["two words"]).encode().is_err());
    }
}
