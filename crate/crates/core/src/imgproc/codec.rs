//! Binary PGM (P5, maxval 255) read/write and 8-bit PNG read.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::image::GrayImage;
use super::ImgError;

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm<W: Write>(img: &GrayImage, mut w: W) -> Result<(), ImgError> {
    w.write_all(&encode_pgm(img))?;
    Ok(())
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<(), ImgError> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, ImgError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImgError::Decode(format!("missing {what} in PGM header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImgError::Decode(format!("bad {what} in PGM header")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImgError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImgError::Decode("not a binary PGM (missing P5 magic)".into()));
    }
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(ImgError::Unsupported(format!("PGM maxval {maxval} (only 255)")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(ImgError::Decode("PGM header not terminated by whitespace".into())),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| ImgError::Decode("PGM dimensions overflow".into()))?;
    let data = &bytes[r.pos..];
    if data.len() < n {
        return Err(ImgError::Decode(format!(
            "PGM raster truncated: expected {n} bytes, found {}",
            data.len()
        )));
    }
    GrayImage::new(width, height, data[..n].to_vec())
}

pub fn read_pgm<R: Read>(mut r: R) -> Result<GrayImage, ImgError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_pgm(&buf)
}

pub fn load_pgm(path: &Path) -> Result<GrayImage, ImgError> {
    decode_pgm(&fs::read(path)?)
}

/// Reads an 8-bit PNG; color inputs are reduced to luminance
/// (0.299 R + 0.587 G + 0.114 B) and alpha is discarded.
pub fn read_png<R: BufRead + std::io::Seek>(r: R) -> Result<GrayImage, ImgError> {
    let mut decoder = png::Decoder::new(r);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImgError::Decode(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImgError::Decode("png: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ImgError::Decode(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let luma = |r: u8, g: u8, b: u8| -> u8 {
        super::image::quantize(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
    };
    let pixels: Vec<u8> = match info.color_type {
        png::ColorType::Grayscale => buf.to_vec(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).map(|c| c[0]).collect(),
        png::ColorType::Rgb => buf.chunks_exact(3).map(|c| luma(c[0], c[1], c[2])).collect(),
        png::ColorType::Rgba => buf.chunks_exact(4).map(|c| luma(c[0], c[1], c[2])).collect(),
        png::ColorType::Indexed => {
            return Err(ImgError::Unsupported("indexed PNG after expansion".into()))
        }
    };
    GrayImage::new(w, h, pixels)
}

/// Loads a PGM or PNG, picked by magic bytes.
pub fn load_image(path: &Path) -> Result<GrayImage, ImgError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        read_png(BufReader::new(std::io::Cursor::new(bytes)))
    } else {
        Err(ImgError::Unsupported(format!(
            "{}: neither binary PGM nor PNG",
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_bytes_exact() {
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        assert_eq!(encode_pgm(&img), b"P5\n2 1\n255\n\x00\xff".to_vec());
    }

    #[test]
    fn pgm_header_with_comments() {
        let bytes = b"P5 # made by hand\n3 # w\n 1\n255\n\x01\x02\x03";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.dims(), (3, 1));
        assert_eq!(img.pixels(), &[1, 2, 3]);
    }

    #[test]
    fn pgm_raster_may_start_with_whitespace_byte() {
        let bytes = b"P5\n2 1\n255\n\n\x20";
        assert_eq!(decode_pgm(bytes).unwrap().pixels(), &[b'\n', b' ']);
    }

    #[test]
    fn pgm_rejects_other_formats() {
        assert!(matches!(decode_pgm(b"P2\n1 1\n255\n0"), Err(ImgError::Decode(_))));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\x00\x00"),
            Err(ImgError::Unsupported(_))
        ));
        assert!(matches!(decode_pgm(b"P5\n4 4\n255\n\x00"), Err(ImgError::Decode(_))));
    }

    #[test]
    fn png_gray_and_rgb() {
        let mut bytes = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut bytes, 2, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[255, 255, 255, 255, 0, 0]).unwrap();
        }
        let img = read_png(std::io::Cursor::new(bytes)).unwrap();
        assert_eq!(img.pixels(), &[255, 76]);
    }
}
