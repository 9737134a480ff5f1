//! `BFLOW1` grid files: a line-oriented text header ended by a blank line,
//! then the row-major little-endian payload.
//!
//! ```text
//! BFLOW1
//! name density
//! nx 256
//! ny 128
//! extents -10.0 10.0 -5.0 5.0
//! dtype f64le
//! bytes 262144
//!
//! <payload>
//! ```
//!
//! `c128le` payloads interleave real and imaginary parts.

use super::IoError;
use crate::grid::{GridSpec, Rect};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;

pub const GRID_MAGIC: &str = "BFLOW1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F64,
    C128,
}

impl Dtype {
    pub fn tag(self) -> &'static str {
        match self {
            Dtype::F64 => "f64le",
            Dtype::C128 => "c128le",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::C128 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    F64(Vec<f64>),
    C128(Vec<Complex64>),
}

impl GridData {
    pub fn dtype(&self) -> Dtype {
        match self {
            GridData::F64(_) => Dtype::F64,
            GridData::C128(_) => Dtype::C128,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GridData::F64(v) => v.len(),
            GridData::C128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real values; complex data gives the real part.
    pub fn real(&self) -> Vec<f64> {
        match self {
            GridData::F64(v) => v.clone(),
            GridData::C128(v) => v.iter().map(|z| z.re).collect(),
        }
    }

    /// Bitwise equality, so NaN payloads compare equal to themselves.
    pub fn bit_eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GridData::F64(a), GridData::F64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (GridData::C128(a), GridData::C128(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub extent: Rect,
    pub dtype: Dtype,
}

impl GridHeader {
    pub fn new(name: impl Into<String>, grid: &GridSpec, dtype: Dtype) -> Self {
        Self { name: name.into(), nx: grid.nx, ny: grid.ny, extent: grid.extent, dtype }
    }

    pub fn payload_len(&self) -> usize {
        self.nx * self.ny * self.dtype.width()
    }
}

pub fn encode_grid(header: &GridHeader, data: &GridData) -> Result<Vec<u8>, IoError> {
    if header.nx == 0 || header.ny == 0 {
        return Err(IoError::EmptyGrid { nx: header.nx, ny: header.ny });
    }
    if header.name.contains(['\n', '\r']) || header.name.trim().is_empty() {
        return Err(IoError::BadHeader(format!("invalid field name {:?}", header.name)));
    }
    if data.dtype() != header.dtype || data.len() != header.nx * header.ny {
        return Err(IoError::PayloadMismatch { expected: header.nx * header.ny, got: data.len() });
    }
    let e = header.extent;
    let mut text = String::new();
    let _ = write!(
        text,
        "{GRID_MAGIC}\nname {}\nnx {}\nny {}\nextents {:?} {:?} {:?} {:?}\ndtype {}\nbytes {}\n\n",
        header.name,
        header.nx,
        header.ny,
        e.x0,
        e.x1,
        e.y0,
        e.y1,
        header.dtype.tag(),
        header.payload_len()
    );
    let mut out = text.into_bytes();
    out.reserve(header.payload_len());
    match data {
        GridData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        GridData::C128(v) => v.iter().for_each(|z| {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }),
    }
    Ok(out)
}

/// Splits `bytes` into header lines and payload at the first blank line.
pub(crate) fn split_header(bytes: &[u8], magic: &str) -> Result<(Vec<String>, usize), IoError> {
    let end = bytes.windows(2).position(|w| w == b"\n\n").ok_or(IoError::Truncated)?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| IoError::BadHeader("header is not UTF-8".into()))?;
    let mut lines = text.lines();
    if lines.next() != Some(magic) {
        return Err(IoError::BadMagic { expected: magic.to_string() });
    }
    Ok((lines.map(str::to_string).collect(), end + 2))
}

pub(crate) fn field<'a>(lines: &'a [String], key: &str) -> Result<&'a str, IoError> {
    lines
        .iter()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .ok_or_else(|| IoError::BadHeader(format!("missing `{key}`")))
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T, IoError> {
    s.trim().parse().map_err(|_| IoError::BadHeader(format!("bad value for `{key}`: {s:?}")))
}

pub fn decode_grid(bytes: &[u8]) -> Result<(GridHeader, GridData), IoError> {
    let (lines, start) = split_header(bytes, GRID_MAGIC)?;
    let name = field(&lines, "name")?.to_string();
    let nx: usize = parse_num(field(&lines, "nx")?, "nx")?;
    let ny: usize = parse_num(field(&lines, "ny")?, "ny")?;
    if nx == 0 || ny == 0 {
        return Err(IoError::EmptyGrid { nx, ny });
    }
    let ext: Vec<f64> = field(&lines, "extents")?
        .split_whitespace()
        .map(|s| parse_num(s, "extents"))
        .collect::<Result<_, _>>()?;
    if ext.len() != 4 {
        return Err(IoError::BadHeader("extents needs four numbers".into()));
    }
    let dtype = match field(&lines, "dtype")? {
        "f64le" => Dtype::F64,
        "c128le" => Dtype::C128,
        other => return Err(IoError::BadHeader(format!("unknown dtype {other:?}"))),
    };
    let declared: usize = parse_num(field(&lines, "bytes")?, "bytes")?;
    let header = GridHeader { name, nx, ny, extent: Rect::new(ext[0], ext[1], ext[2], ext[3]), dtype };
    if declared != header.payload_len() {
        return Err(IoError::BadHeader(format!("bytes {declared} does not match {nx}x{ny} {}", dtype.tag())));
    }
    let payload = &bytes[start..];
    if payload.len() < declared {
        return Err(IoError::Truncated);
    }
    if payload.len() > declared {
        return Err(IoError::BadHeader("trailing bytes after payload".into()));
    }
    let word = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let data = match dtype {
        Dtype::F64 => GridData::F64(payload.chunks_exact(8).map(word).collect()),
        Dtype::C128 => GridData::C128(payload.chunks_exact(16).map(|c| Complex64::new(word(&c[..8]), word(&c[8..]))).collect()),
    };
    Ok((header, data))
}

pub fn write_grid(path: &Path, header: &GridHeader, data: &GridData) -> Result<(), IoError> {
    let bytes = encode_grid(header, data)?;
    std::fs::write(path, bytes).map_err(|e| IoError::Io(path.display().to_string(), e))
}

pub fn read_grid(path: &Path) -> Result<(GridHeader, GridData), IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::Io(path.display().to_string(), e))?;
    decode_grid(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(nx: usize, ny: usize, dtype: Dtype) -> GridHeader {
        GridHeader { name: "psi".into(), nx, ny, extent: Rect::new(-1.5, 2.0, 0.1, 0.7), dtype }
    }

    #[test]
    fn round_trip_f64_with_specials() {
        let v = vec![0.0, -0.0, f64::NAN, f64::INFINITY, 1e-310, -3.25];
        let h = header(3, 2, Dtype::F64);
        let bytes = encode_grid(&h, &GridData::F64(v.clone())).unwrap();
        let (h2, d2) = decode_grid(&bytes).unwrap();
        assert_eq!(h, h2);
        assert!(d2.bit_eq(&GridData::F64(v)));
    }

    #[test]
    fn complex_payload_is_interleaved() {
        let h = header(1, 1, Dtype::C128);
        let bytes = encode_grid(&h, &GridData::C128(vec![Complex64::new(1.0, -2.0)])).unwrap();
        let payload = &bytes[bytes.len() - 16..];
        assert_eq!(&payload[..8], &1.0f64.to_le_bytes());
        assert_eq!(&payload[8..], &(-2.0f64).to_le_bytes());
    }

    #[test]
    fn header_text() {
        let bytes = encode_grid(&header(2, 1, Dtype::F64), &GridData::F64(vec![1.0, 2.0])).unwrap();
        let text = String::from_utf8_lossy(&bytes[..bytes.len() - 16]);
        assert_eq!(text, "BFLOW1\nname psi\nnx 2\nny 1\nextents -1.5 2.0 0.1 0.7\ndtype f64le\nbytes 16\n\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(encode_grid(&header(0, 4, Dtype::F64), &GridData::F64(vec![])), Err(IoError::EmptyGrid { .. })));
        let mut bytes = encode_grid(&header(2, 2, Dtype::F64), &GridData::F64(vec![1.0; 4])).unwrap();
        assert!(matches!(decode_grid(&bytes[..bytes.len() - 1]), Err(IoError::Truncated)));
        bytes[0] = b'X';
        assert!(matches!(decode_grid(&bytes), Err(IoError::BadMagic { .. })));
        assert!(encode_grid(&header(2, 2, Dtype::F64), &GridData::F64(vec![1.0; 3])).is_err());
    }
}
