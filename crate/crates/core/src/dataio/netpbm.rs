//! Binary NetPBM: P5 (grey) and P6 (RGB), maxval ≤ 255.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    /// 1 for P5, 3 for P6.
    pub channels: usize,
    pub maxval: u16,
    /// Row-major, channels interleaved.
    pub data: Vec<u8>,
}

impl PnmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if !matches!(channels, 1 | 3) {
            return Err(Error::Format(format!(
                "NetPBM supports 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(Error::Format(format!(
                "{width}×{height}×{channels} image needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(PnmImage {
            width,
            height,
            channels,
            maxval: 255,
            data,
        })
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
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

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("malformed NetPBM header: bad {what}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(Error::Format(
                "not a binary NetPBM file (expected P5 or P6)".into(),
            ))
        }
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("malformed NetPBM header: zero extent".into()));
    }
    if !(1..=255).contains(&maxval) {
        return Err(Error::Format(format!(
            "unsupported NetPBM maxval {maxval} (only 8-bit samples)"
        )));
    }
    match bytes.get(h.pos) {
        Some(c) if c.is_ascii_whitespace() => h.pos += 1,
        _ => {
            return Err(Error::Format(
                "malformed NetPBM header: missing separator".into(),
            ))
        }
    }
    let n = width * height * channels;
    let data = bytes
        .get(h.pos..h.pos + n)
        .ok_or_else(|| Error::Format(format!("NetPBM pixel data truncated: need {n} bytes")))?
        .to_vec();
    Ok(PnmImage {
        width,
        height,
        channels,
        maxval: maxval as u16,
        data,
    })
}

pub fn encode_pnm(img: &PnmImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn write_pnm<W: Write>(w: &mut W, img: &PnmImage) -> std::io::Result<()> {
    w.write_all(&encode_pnm(img))
}
