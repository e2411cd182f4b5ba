//! Binary greymap (`P5`) encoding with one byte per sample.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Greymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    pub pixels: Vec<u8>,
}

pub fn decode(bytes: &[u8]) -> Result<Greymap> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Parse(format!(
            "expected PGM magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_uint(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_uint(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_uint(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!(
            "unsupported maxval {maxval}, expected 1..=255"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Parse("missing whitespace after maxval".into())),
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("image dimensions overflow".into()))?;
    let raster = bytes
        .get(pos..pos + len)
        .ok_or_else(|| Error::Parse(format!("raster truncated: expected {len} bytes")))?;
    Ok(Greymap {
        width,
        height,
        maxval: maxval as u8,
        pixels: raster.to_vec(),
    })
}

pub fn encode(map: &Greymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", map.width, map.height, map.maxval).into_bytes();
    out.extend_from_slice(&map.pixels);
    out
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Parse("unexpected end of PGM header".into())),
        }
    }
    let start = *pos;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() || *b == b'#' {
            break;
        }
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn parse_uint(token: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "invalid PGM {what}: {:?}",
                String::from_utf8_lossy(token)
            ))
        })
}
