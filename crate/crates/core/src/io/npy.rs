//! Minimal NPY (format 1.0 write, 1.0-3.0 read) for little-endian numeric arrays.
//!
//! The header dictionary is parsed rather than pattern-matched, so files
//! written by numpy with any key order or spacing are accepted. Only C-order
//! arrays whose dtype matches the requested element type are returned.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

pub trait NpyElement: Copy {
    /// numpy dtype string, e.g. `<f4`.
    const DESCR: &'static str;
    const SIZE: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

macro_rules! npy_element {
    ($t:ty, $descr:literal) => {
        impl NpyElement for $t {
            const DESCR: &'static str = $descr;
            const SIZE: usize = std::mem::size_of::<$t>();
            #[inline]
            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            #[inline]
            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }
        }
    };
}

npy_element!(f32, "<f4");
npy_element!(f64, "<f8");
npy_element!(i64, "<i8");

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Parsed header fields.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyHeader {
    pub descr: String,
    pub fortran_order: bool,
    pub shape: Vec<usize>,
}

fn header_text(descr: &str, shape: &[usize]) -> String {
    let shape_text = match shape {
        [] => "()".to_string(),
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_text}, }}")
}

/// Serializes an array as NPY 1.0 bytes.
pub fn encode<T: NpyElement>(shape: &[usize], data: &[T]) -> Vec<u8> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    let mut header = header_text(T::DESCR, shape);
    // magic(6) + version(2) + header_len(2) + header + '\n'
    let unpadded = MAGIC.len() + 4 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + data.len() * T::SIZE);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for &v in data {
        v.write_le(&mut out);
    }
    out
}

/// Splits raw bytes into the parsed header and the payload slice.
pub fn parse_header(bytes: &[u8]) -> std::result::Result<(NpyHeader, &[u8]), String> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err("missing NPY magic string".into());
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, offset) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err("truncated header length".into());
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        _ => return Err(format!("unsupported NPY version {major}.{minor}")),
    };
    let end = offset + header_len;
    if bytes.len() < end {
        return Err("truncated header".into());
    }
    let text = std::str::from_utf8(&bytes[offset..end])
        .map_err(|_| "header is not valid text".to_string())?;
    let header = parse_dict(text)?;
    Ok((header, &bytes[end..]))
}

/// Deserializes NPY bytes, validating dtype, memory order and payload size.
pub fn decode<T: NpyElement>(bytes: &[u8]) -> std::result::Result<NpyArray<T>, String> {
    let (header, payload) = parse_header(bytes)?;
    if header.descr != T::DESCR {
        return Err(format!(
            "dtype `{}` does not match expected `{}`",
            header.descr,
            T::DESCR
        ));
    }
    if header.fortran_order {
        return Err("Fortran-ordered arrays are not supported".into());
    }
    let count: usize = header.shape.iter().product();
    let expected = count * T::SIZE;
    if payload.len() != expected {
        return Err(format!(
            "payload has {} bytes, shape {:?} needs {}",
            payload.len(),
            header.shape,
            expected
        ));
    }
    let data = payload.chunks_exact(T::SIZE).map(T::read_le).collect();
    Ok(NpyArray {
        shape: header.shape,
        data,
    })
}

pub fn write_npy<T: NpyElement>(path: &Path, shape: &[usize], data: &[T]) -> Result<()> {
    fs::write(path, encode(shape, data)).map_err(|e| Error::io(path, e))
}

pub fn read_npy<T: NpyElement>(path: &Path) -> Result<NpyArray<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Npy {
        path: path.to_path_buf(),
        reason,
    })
}

// --- header dictionary parser -------------------------------------------

#[derive(Debug)]
enum Literal {
    Str(String),
    Bool(bool),
    Int(usize),
    Tuple(Vec<Literal>),
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), String> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            other => Err(format!(
                "expected `{}` at offset {}, found {:?}",
                c as char,
                self.pos,
                other.map(|b| b as char)
            )),
        }
    }

    fn literal(&mut self) -> std::result::Result<Literal, String> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos] != q {
                    self.pos += 1;
                }
                if self.pos >= self.s.len() {
                    return Err("unterminated string".into());
                }
                let text = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
                self.pos += 1;
                Ok(Literal::Str(text))
            }
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    items.push(self.literal()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err("malformed tuple".into()),
                    }
                }
                Ok(Literal::Tuple(items))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                // numpy on some platforms writes `3L`
                if self.s.get(self.pos) == Some(&b'L') {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.s[start..self.pos])
                    .unwrap_or_default()
                    .trim_end_matches('L');
                digits
                    .parse()
                    .map(Literal::Int)
                    .map_err(|_| format!("bad integer `{digits}`"))
            }
            Some(_) => {
                let rest = &self.s[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Literal::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Literal::Bool(false))
                } else {
                    Err(format!("unexpected token at offset {}", self.pos))
                }
            }
            None => Err("unexpected end of header".into()),
        }
    }
}

fn parse_dict(text: &str) -> std::result::Result<NpyHeader, String> {
    let mut cur = Cursor {
        s: text.as_bytes(),
        pos: 0,
    };
    cur.expect(b'{')?;
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    loop {
        if cur.peek() == Some(b'}') {
            break;
        }
        let key = match cur.literal()? {
            Literal::Str(k) => k,
            other => return Err(format!("non-string key {other:?}")),
        };
        cur.expect(b':')?;
        let value = cur.literal()?;
        match (key.as_str(), value) {
            ("descr", Literal::Str(d)) => descr = Some(d),
            ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
            ("shape", Literal::Tuple(items)) => {
                let dims = items
                    .into_iter()
                    .map(|it| match it {
                        Literal::Int(n) => Ok(n),
                        other => Err(format!("non-integer shape entry {other:?}")),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                shape = Some(dims);
            }
            (k, v) => return Err(format!("unexpected header entry `{k}`: {v:?}")),
        }
        match cur.peek() {
            Some(b',') => cur.pos += 1,
            Some(b'}') => {}
            _ => return Err("malformed header dictionary".into()),
        }
    }
    Ok(NpyHeader {
        descr: descr.ok_or("header lacks `descr`")?,
        fortran_order: fortran.ok_or("header lacks `fortran_order`")?,
        shape: shape.ok_or("header lacks `shape`")?,
    })
}
