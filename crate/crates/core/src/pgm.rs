//! Netpbm graymap I/O.
//!
//! Reading accepts plain (`P2`) and raw (`P5`) files with any maxval in
//! `1..=65535`. Writing always emits the canonical raw form
//! `P5\n<w> <h>\n<maxval>\n` followed by big-endian samples (one byte each
//! when maxval < 256).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token()?;
    let ascii = match magic.as_str() {
        "P2" => true,
        "P5" => false,
        _ => return Err(Error::UnsupportedMagic(magic)),
    };
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval} out of range"
        )));
    }
    let maxval = maxval as u32;
    let expected = width * height;
    let mut samples = Vec::with_capacity(expected);
    if ascii {
        while samples.len() < expected {
            match cur.next_token() {
                Some(tok) => {
                    let v: u32 = tok
                        .parse()
                        .map_err(|_| Error::MalformedHeader(format!("bad sample token {tok:?}")))?;
                    samples.push(v);
                }
                None => {
                    return Err(Error::TruncatedPayload {
                        expected,
                        found: samples.len(),
                    })
                }
            }
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::MalformedHeader("missing raster separator".into())),
        }
        let raster = &bytes[cur.pos..];
        let wide = maxval > 255;
        let sample_bytes = if wide { 2 } else { 1 };
        let found = raster.len() / sample_bytes;
        if found < expected {
            return Err(Error::TruncatedPayload { expected, found });
        }
        if wide {
            samples.extend(
                raster[..2 * expected]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32),
            );
        } else {
            samples.extend(raster[..expected].iter().map(|&b| b as u32));
        }
    }
    let scale = maxval as f64;
    let mut data = Vec::with_capacity(expected);
    for s in samples {
        if s > maxval {
            return Err(Error::SampleOutOfRange { sample: s, maxval });
        }
        data.push(s as f64 / scale);
    }
    GrayImage::new(height, width, data)
}

/// Writes the canonical `P5` encoding; `v` is stored as `floor(v * maxval + 0.5)`.
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>, maxval: u32) -> Result<()> {
    let bytes = encode_pgm(img, maxval)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn encode_pgm(img: &GrayImage, maxval: u32) -> Result<Vec<u8>> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    let header = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval);
    let wide = maxval > 255;
    let mut out = Vec::with_capacity(header.len() + img.data().len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    let scale = maxval as f64;
    for &v in img.data() {
        let q = (v * scale + 0.5).floor() as u32;
        let q = q.min(maxval);
        if wide {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

/// Masks are stored as maxval-255 graymaps with samples `{0, 255}`.
pub fn write_mask(mask: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&mask.to_gray(), path, 255)
}

/// Reads a graymap and thresholds it at one half.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryImage> {
    Ok(read_pgm(path)?.threshold(0.5))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Option<String> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start)
            .then(|| String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn token(&mut self) -> Result<String> {
        self.next_token()
            .ok_or_else(|| Error::MalformedHeader("empty file".into()))
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .next_token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::MalformedHeader(format!("bad {what} {tok:?}")))
    }
}
