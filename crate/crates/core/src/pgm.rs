//! Netpbm grayscale (PGM) reading and writing.
//!
//! Both the plain `P2` and the raw `P5` variants are read. Raw samples are one
//! byte when `maxval < 256` and two big-endian bytes otherwise. Writing always
//! produces `P5`. Color variants (`P3`, `P6`) are rejected rather than
//! converted.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Reads a PGM file, scaling intensities into `[0, 1]` by `maxval`.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Writes `image` as a raw `P5` file. Pixels are clamped to `[0, 1]` and
/// quantized as `round(p * maxval)`.
pub fn save_pgm(image: &Image, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image, maxval)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(image: &Image, maxval: u16) -> Result<Vec<u8>> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::InvalidArgument(format!(
            "maxval must be 255 or 65535, got {maxval}"
        )));
    }
    let header = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval);
    let wide = maxval > 255;
    let mut out = Vec::with_capacity(header.len() + image.len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    let scale = f64::from(maxval);
    for &p in image.pixels() {
        let q = (p.clamp(0.0, 1.0) * scale).round() as u16;
        if wide {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let magic = cursor.magic()?;
    let width = cursor.header_number("width")?;
    let height = cursor.header_number("height")?;
    let maxval = cursor.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} out of range 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("image dimensions overflow".into()))?;
    let scale = maxval as f64;

    let samples = match magic {
        Magic::Plain => cursor.plain_samples(count)?,
        Magic::Raw => {
            // exactly one whitespace byte separates maxval from the payload
            match cursor.next_byte() {
                Some(b) if b.is_ascii_whitespace() => {}
                _ => {
                    return Err(Error::MalformedHeader(
                        "missing whitespace after maxval".into(),
                    ))
                }
            }
            cursor.raw_samples(count, maxval > 255)?
        }
    };
    if let Some(&bad) = samples.iter().find(|&&s| s as usize > maxval) {
        return Err(Error::MalformedHeader(format!(
            "sample {bad} exceeds maxval {maxval}"
        )));
    }
    let pixels = samples.into_iter().map(|s| f64::from(s) / scale).collect();
    Image::new(height, width, pixels)
}

enum Magic {
    Plain,
    Raw,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn next_byte(&mut self) -> Option<u8> {
        let b = self.bytes.get(self.pos).copied();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn magic(&mut self) -> Result<Magic> {
        match self.bytes.get(..2) {
            Some(b"P2") => {
                self.pos = 2;
                Ok(Magic::Plain)
            }
            Some(b"P5") => {
                self.pos = 2;
                Ok(Magic::Raw)
            }
            Some([b'P', d]) if b"134678".contains(d) => Err(Error::UnsupportedFormat(format!(
                "P{} is not a grayscale PGM",
                *d as char
            ))),
            _ => Err(Error::MalformedHeader("missing P2/P5 magic".into())),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
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

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        parse_decimal(tok).ok_or_else(|| {
            Error::MalformedHeader(format!(
                "{what} is not a number: {:?}",
                String::from_utf8_lossy(tok)
            ))
        })
    }

    fn plain_samples(&mut self, count: usize) -> Result<Vec<u16>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let Some(tok) = self.token() else {
                return Err(Error::TruncatedData {
                    expected: count,
                    found: out.len(),
                });
            };
            let v = parse_decimal(tok)
                .filter(|&v| v <= u16::MAX as usize)
                .ok_or_else(|| {
                    Error::MalformedHeader(format!(
                        "bad sample {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            out.push(v as u16);
        }
        Ok(out)
    }

    fn raw_samples(&mut self, count: usize, wide: bool) -> Result<Vec<u16>> {
        let rest = &self.bytes[self.pos..];
        let width = if wide { 2 } else { 1 };
        let available = rest.len() / width;
        if available < count {
            return Err(Error::TruncatedData {
                expected: count,
                found: available,
            });
        }
        let payload = &rest[..count * width];
        self.pos += payload.len();
        Ok(if wide {
            payload
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            payload.iter().map(|&b| u16::from(b)).collect()
        })
    }
}

fn parse_decimal(tok: &[u8]) -> Option<usize> {
    if tok.is_empty() || !tok.iter().all(u8::is_ascii_digit) {
        return None;
    }
    std::str::from_utf8(tok).ok()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_two_by_two() {
        let img = decode_pgm(b"P2\n2 2\n255\n0 255 255 0\n").unwrap();
        assert_eq!(img, Image::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());
    }

    #[test]
    fn plain_with_comments() {
        let img = decode_pgm(b"P2 # magic\n# size follows\n2 1\n# max\n4\n1 # one\n3").unwrap();
        assert_eq!(img.pixels(), &[0.25, 0.75]);
    }

    #[test]
    fn raw_constant_128() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend([128u8; 6]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.dims(), (2, 3));
        assert!(img.pixels().iter().all(|&p| p == 128.0 / 255.0));
    }

    #[test]
    fn raw_sixteen_bit_is_big_endian() {
        let mut bytes = b"P5 1 1 65535 ".to_vec();
        bytes.extend(0x8000u16.to_be_bytes());
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[32768.0 / 65535.0]);
    }

    #[test]
    fn truncated_plain_and_raw() {
        assert!(matches!(
            decode_pgm(b"P2\n2 2\n255\n0 255 255\n"),
            Err(Error::TruncatedData {
                expected: 4,
                found: 3
            })
        ));
        let mut bytes = b"P5\n2 2\n65535\n".to_vec();
        bytes.extend([0u8; 7]);
        assert!(matches!(decode_pgm(&bytes), Err(Error::TruncatedData { .. })));
    }

    #[test]
    fn malformed_and_unsupported_headers() {
        assert!(matches!(decode_pgm(b"P6\n1 1\n255\n\0\0\0"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode_pgm(b"XX\n1 1\n255\n0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P2\n1 x\n255\n0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P2\n1 1\n70000\n0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P2\n1 1\n10\n11"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn missing_file_is_distinct() {
        assert!(matches!(
            load_pgm("/definitely/not/here.pgm"),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn encode_clamps_and_zero_payload() {
        let img = Image::from_rows(&[[1.7, -0.2]]).unwrap();
        let bytes = encode_pgm(&img, 255).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[255, 0]);

        let zeros = Image::zeros(3, 4);
        let bytes = encode_pgm(&zeros, 255).unwrap();
        let header_len = b"P5\n4 3\n255\n".len();
        assert_eq!(bytes.len(), header_len + 12);
        assert!(bytes[header_len..].iter().all(|&b| b == 0));

        assert!(encode_pgm(&zeros, 1000).is_err());
    }

    #[test]
    fn round_trip_within_quantization() {
        let img = Image::from_rows(&[[0.0, 1.0], [0.5, 0.25]]).unwrap();
        for maxval in [255u16, 65535] {
            let back = decode_pgm(&encode_pgm(&img, maxval).unwrap()).unwrap();
            assert!(img.max_abs_diff(&back).unwrap() <= 1.0 / f64::from(maxval));
        }
    }

    #[test]
    fn save_and_load_through_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = Image::from_fn(5, 7, |r, c| ((r * 7 + c) as f64) / 34.0);
        save_pgm(&img, &path, 65535).unwrap();
        let back = load_pgm(&path).unwrap();
        assert!(img.max_abs_diff(&back).unwrap() <= 1.0 / 65535.0);
        assert!(save_pgm(&img, dir.path().join("no/such/dir/x.pgm"), 255).is_err());
    }
}
