use std::fs;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    /// `P5`
    #[default]
    Binary,
    /// `P2`
    Ascii,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            match self.buf[self.pos] {
                b'#' => {
                    while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && !self.buf[self.pos].is_ascii_whitespace() {
            if self.buf[self.pos] == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.buf[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::Image(format!("missing {what} in PGM header")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("malformed {what} in PGM header")))
    }
}

/// Parses a P2 or P5 image with maxval 255.
pub fn decode_pgm(buf: &[u8]) -> Result<GrayImage> {
    let mut cur = Cursor { buf, pos: 0 };
    let magic = cur
        .token()
        .ok_or_else(|| Error::Image("empty file".into()))?
        .to_vec();
    let binary = match magic.as_slice() {
        b"P5" => true,
        b"P2" => false,
        b"P3" | b"P6" => {
            return Err(Error::UnsupportedFormat(
                "color PPM input; convert to grayscale first".into(),
            ))
        }
        b"P1" | b"P4" => return Err(Error::UnsupportedFormat("bitmap (PBM) input".into())),
        _ => return Err(Error::Image("not a PGM file".into())),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only 255 is supported)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Image(format!("empty image {width}x{height}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
    let bytes = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = cur.pos + 1;
        if cur.pos >= buf.len() || !buf[cur.pos].is_ascii_whitespace() {
            return Err(Error::Image("truncated PGM payload".into()));
        }
        let end = start + count;
        if buf.len() < end {
            return Err(Error::Image(format!(
                "truncated PGM payload: {} of {count} bytes",
                buf.len().saturating_sub(start)
            )));
        }
        buf[start..end].to_vec()
    } else {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let v = cur.token().ok_or_else(|| {
                Error::Image(format!("truncated PGM payload: {i} of {count} samples"))
            })?;
            let v: u32 = std::str::from_utf8(v)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Image("malformed sample".into()))?;
            if v > 255 {
                return Err(Error::Image(format!("sample {v} exceeds maxval")));
            }
            out.push(v as u8);
        }
        out
    };
    GrayImage::from_u8(width, height, &bytes)
}

pub fn encode_pgm(img: &GrayImage, encoding: PgmEncoding) -> Vec<u8> {
    let bytes = img.to_u8();
    match encoding {
        PgmEncoding::Binary => {
            let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
            out.extend_from_slice(&bytes);
            out
        }
        PgmEncoding::Ascii => {
            let mut s = format!("P2\n{} {}\n255\n", img.width(), img.height());
            for row in bytes.chunks(img.width()) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
            s.into_bytes()
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    decode_pgm(&buf)
}

/// Writes a binary (P5) PGM.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img, PgmEncoding::Binary)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
