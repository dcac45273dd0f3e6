//! Binary PGM (P5) rasters: 16-bit big-endian depth, 8-bit labels.

use super::IoError;
use std::io::{Read, Write};
use std::path::Path;

fn write_header(w: &mut impl Write, width: usize, height: usize, maxval: u32) -> std::io::Result<()> {
    write!(w, "P5\n{width} {height}\n{maxval}\n")
}

pub fn write_pgm16(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<(), IoError> {
    assert_eq!(data.len(), width * height, "raster size mismatch");
    let mut buf = Vec::with_capacity(32 + data.len() * 2);
    write_header(&mut buf, width, height, 65535)?;
    for &v in data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn write_pgm8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<(), IoError> {
    assert_eq!(data.len(), width * height, "raster size mismatch");
    let mut buf = Vec::with_capacity(32 + data.len());
    write_header(&mut buf, width, height, 255)?;
    buf.extend_from_slice(data);
    std::fs::write(path, buf)?;
    Ok(())
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn token(&mut self) -> Option<&'a [u8]> {
        // Skip whitespace and `#` comment lines.
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<usize> {
        std::str::from_utf8(self.token()?).ok()?.parse().ok()
    }
}

fn read_raw(path: &Path) -> Result<(usize, usize, u32, Vec<u8>), IoError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut scan = HeaderScanner { bytes: &bytes, pos: 0 };
    if scan.token() != Some(b"P5".as_slice()) {
        return Err(IoError::format(path, "not a binary PGM (P5)"));
    }
    let width = scan.number().ok_or_else(|| IoError::format(path, "bad width"))?;
    let height = scan.number().ok_or_else(|| IoError::format(path, "bad height"))?;
    let maxval = scan.number().ok_or_else(|| IoError::format(path, "bad maxval"))? as u32;
    // Exactly one whitespace byte separates the header from the samples.
    let data_start = scan.pos + 1;
    Ok((width, height, maxval, bytes[data_start.min(bytes.len())..].to_vec()))
}

pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>), IoError> {
    let (width, height, maxval, raw) = read_raw(path)?;
    if maxval < 256 {
        return Err(IoError::format(path, "expected a 16-bit PGM"));
    }
    let need = width * height * 2;
    if raw.len() < need {
        return Err(IoError::format(path, format!("short pixel data: {} < {need}", raw.len())));
    }
    let data = raw[..need]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((width, height, data))
}

pub fn read_pgm8(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let (width, height, maxval, raw) = read_raw(path)?;
    if maxval > 255 {
        return Err(IoError::format(path, "expected an 8-bit PGM"));
    }
    let need = width * height;
    if raw.len() < need {
        return Err(IoError::format(path, format!("short pixel data: {} < {need}", raw.len())));
    }
    Ok((width, height, raw[..need].to_vec()))
}
