//! Binary PGM (P5) and PPM (P6), maxval 255.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub fn read_ppm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}

/// Writes P6 for color and P5 for gray images.
pub fn write_ppm(img: &Image, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(cur.error("expected magic P5 or P6")),
    };
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(cur.error(&format!("unsupported maxval {maxval}")));
    }
    match cur.bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.error("expected one whitespace byte after maxval")),
    }
    if width == 0 || height == 0 {
        return Err(cur.error("zero image dimension"));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| cur.error("image dimensions overflow"))?;
    let data = &bytes[cur.pos..];
    if data.len() < need {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!("short pixel data: need {need} bytes, found {}", data.len()),
        });
    }
    if data.len() > need {
        return Err(Error::Parse { offset: cur.pos + need, message: "trailing bytes after pixel data".into() });
    }
    Image::from_u8(width, height, channels, data)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { offset: self.pos, message: message.to_string() }
    }

    /// Skips whitespace and `#` comments, then reads a decimal integer.
    fn number(&mut self, what: &str) -> Result<usize> {
        let mut saw_space = false;
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => {
                    saw_space = true;
                    self.pos += 1;
                }
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                    saw_space = true;
                }
                _ => break,
            }
        }
        if !saw_space {
            return Err(self.error(&format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(&format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Parse { offset: start, message: format!("{what} out of range") })
    }
}
