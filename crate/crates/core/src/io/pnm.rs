//! Binary PGM (P5) and PPM (P6) codecs.

use std::path::Path;

use crate::error::{Error, FormatCode, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmKind {
    Gray,
    Rgb,
}

impl PnmKind {
    pub fn channels(self) -> usize {
        match self {
            PnmKind::Gray => 1,
            PnmKind::Rgb => 3,
        }
    }

    fn magic(self) -> &'static [u8; 2] {
        match self {
            PnmKind::Gray => b"P5",
            PnmKind::Rgb => b"P6",
        }
    }
}

/// Decoded raster: interleaved samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(FormatCode::PgmHeader, path, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(FormatCode::PgmHeader, path, format!("{what} does not fit")))
    }
}

/// Parses a P5 or P6 file. `path` only labels errors.
pub fn parse_pnm(bytes: &[u8], path: &Path) -> Result<Pnm> {
    let kind = match bytes.get(..2) {
        Some(b"P5") => PnmKind::Gray,
        Some(b"P6") => PnmKind::Rgb,
        _ => {
            return Err(Error::format(FormatCode::PgmMagic, path, "expected binary PGM (P5) or PPM (P6) magic"));
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number(path, "width")? as usize;
    let height = cur.number(path, "height")? as usize;
    let maxval = cur.number(path, "maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::format(FormatCode::PgmMaxval, path, format!("maxval {maxval} outside [1, 65535]")));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(FormatCode::PgmHeader, path, "missing whitespace after maxval")),
    }
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(kind.channels()))
        .ok_or_else(|| Error::format(FormatCode::PgmHeader, path, "dimensions overflow"))?;
    let bps = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[cur.pos..];
    if raster.len() < n * bps {
        return Err(Error::format(
            FormatCode::PgmTruncated,
            path,
            format!("raster has {} bytes, expected {}", raster.len(), n * bps),
        ));
    }
    if raster.len() > n * bps {
        return Err(Error::format(
            FormatCode::PgmHeader,
            path,
            format!("{} trailing bytes after raster", raster.len() - n * bps),
        ));
    }
    let samples: Vec<u16> = if bps == 1 {
        raster.iter().map(|&b| u16::from(b)).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(i) = samples.iter().position(|&s| u64::from(s) > maxval) {
        return Err(Error::format(
            FormatCode::CodeRange,
            path,
            format!("sample {i} = {} exceeds maxval {maxval}", samples[i]),
        ));
    }
    Ok(Pnm {
        kind,
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// Encodes with a minimal header `P? W H MAXVAL\n`; samples above 255 use
/// two big-endian bytes.
pub fn encode_pnm(p: &Pnm) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 2 * p.samples.len());
    out.extend_from_slice(p.kind.magic());
    out.extend_from_slice(format!("\n{} {}\n{}\n", p.width, p.height, p.maxval).as_bytes());
    if p.maxval < 256 {
        out.extend(p.samples.iter().map(|&s| s as u8));
    } else {
        for s in &p.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn read_pnm(path: &Path) -> Result<Pnm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes, path)
}

pub fn write_pnm(p: &Pnm, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pnm(p)).map_err(|e| Error::io(path, e))
}
