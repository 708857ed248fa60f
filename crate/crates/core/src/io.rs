//! PFM / PGM / PPM raster files and JSON camera files.
//!
//! PFM is written little-endian (scale `-1.0`) with rows stored bottom to top
//! as the format requires. Depth maps store invalid pixels as `0.0`; on read
//! any non-finite or non-positive value is invalid. Masks are binary PGM with
//! `0` for false and `255` for true.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, DepthMap, ImagePlane};

/// Raw float raster as stored in a PFM file; may contain non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmData {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn encode_pfm(height: usize, width: usize, channels: usize, data: &[f32]) -> Result<Vec<u8>> {
    if channels != 1 && channels != 3 {
        return Err(Error::format(format!("PFM supports 1 or 3 channels, got {channels}")));
    }
    if data.len() != height * width * channels {
        return Err(Error::dim("PFM payload length does not match header"));
    }
    let tag = if channels == 1 { "Pf" } else { "PF" };
    let mut out = format!("{tag}\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    let row_len = width * channels;
    for row in (0..height).rev() {
        for v in &data[row * row_len..(row + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PfmData> {
    let mut header = HeaderReader::new(bytes);
    let channels = match header.token()? {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::format(format!("not a PFM file (magic {other:?})"))),
    };
    let width = header.usize_token()?;
    let height = header.usize_token()?;
    let scale: f64 = header
        .token()?
        .parse()
        .map_err(|_| Error::format("bad PFM scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format("PFM scale must be nonzero"));
    }
    let little_endian = scale < 0.0;
    let body = header.body()?;
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("PFM dimensions overflow"))?;
    if height == 0 || width == 0 {
        return Err(Error::format("PFM has zero dimension"));
    }
    if body.len() != count * 4 {
        return Err(Error::format(format!(
            "PFM payload is {} bytes, expected {}",
            body.len(),
            count * 4
        )));
    }
    let mut data = vec![0f32; count];
    let row_len = width * channels;
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let file_row = i / row_len;
        let col = i % row_len;
        data[(height - 1 - file_row) * row_len + col] = v;
    }
    Ok(PfmData {
        height,
        width,
        channels,
        data,
    })
}

pub fn encode_pgm(height: usize, width: usize, data: &[u8]) -> Result<Vec<u8>> {
    if data.len() != height * width {
        return Err(Error::dim("PGM payload length does not match header"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    Ok(out)
}

pub fn encode_ppm(height: usize, width: usize, data: &[u8]) -> Result<Vec<u8>> {
    if data.len() != height * width * 3 {
        return Err(Error::dim("PPM payload length does not match header"));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    Ok(out)
}

/// Decodes binary PGM (`P5`) or PPM (`P6`) with maxval 255.
/// Returns `(height, width, channels, bytes)`.
pub fn decode_pnm(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut header = HeaderReader::new(bytes);
    let channels = match header.token()? {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::format(format!("unsupported PNM magic {other:?}"))),
    };
    let width = header.usize_token()?;
    let height = header.usize_token()?;
    let maxval = header.usize_token()?;
    if maxval != 255 {
        return Err(Error::format(format!("only maxval 255 is supported, got {maxval}")));
    }
    if height == 0 || width == 0 {
        return Err(Error::format("PNM has zero dimension"));
    }
    let body = header.body()?;
    if body.len() != height * width * channels {
        return Err(Error::format(format!(
            "PNM payload is {} bytes, expected {}",
            body.len(),
            height * width * channels
        )));
    }
    Ok((height, width, channels, body.to_vec()))
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("truncated header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::format("non-ASCII header"))
    }

    fn usize_token(&mut self) -> Result<usize> {
        self.token()?
            .parse()
            .map_err(|_| Error::format("expected an unsigned integer in header"))
    }

    /// Payload after the single whitespace byte that ends the header.
    fn body(self) -> Result<&'a [u8]> {
        if self.pos >= self.bytes.len() {
            return Err(Error::format("missing payload"));
        }
        Ok(&self.bytes[self.pos + 1..])
    }
}

pub fn image_to_pfm(image: &ImagePlane) -> Result<Vec<u8>> {
    encode_pfm(image.height(), image.width(), image.channels(), image.data())
}

pub fn image_from_pfm(bytes: &[u8]) -> Result<ImagePlane> {
    let pfm = decode_pfm(bytes)?;
    ImagePlane::from_vec(pfm.height, pfm.width, pfm.channels, pfm.data)
}

pub fn depth_to_pfm(depth: &DepthMap) -> Result<Vec<u8>> {
    encode_pfm(depth.height(), depth.width(), 1, depth.data())
}

pub fn depth_from_pfm(bytes: &[u8]) -> Result<DepthMap> {
    let pfm = decode_pfm(bytes)?;
    if pfm.channels != 1 {
        return Err(Error::format("depth PFM must have one channel"));
    }
    DepthMap::from_depths(pfm.height, pfm.width, pfm.data)
}

pub fn mask_to_pgm(mask: &BinaryMask) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.height(), mask.width(), &bytes)
}

/// Any byte `>= 128` reads as true.
pub fn mask_from_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let (h, w, c, data) = decode_pnm(bytes)?;
    if c != 1 {
        return Err(Error::format("mask must be a single-channel PGM"));
    }
    BinaryMask::from_vec(h, w, data.into_iter().map(|b| b >= 128).collect())
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a 1-channel plane as PGM or a 3-channel plane as PPM, clamping to
/// `[0, 1]`.
pub fn image_to_pnm(image: &ImagePlane) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
    match image.channels() {
        1 => encode_pgm(image.height(), image.width(), &bytes),
        3 => encode_ppm(image.height(), image.width(), &bytes),
        c => Err(Error::format(format!("PNM output needs 1 or 3 channels, got {c}"))),
    }
}

pub fn image_from_pnm(bytes: &[u8]) -> Result<ImagePlane> {
    let (h, w, c, data) = decode_pnm(bytes)?;
    ImagePlane::from_vec(h, w, c, data.into_iter().map(|b| b as f32 / 255.0).collect())
}

/// Inverse-depth preview normalised to the valid range; invalid pixels are
/// black.
pub fn depth_preview(depth: &DepthMap) -> Result<ImagePlane> {
    let inv: Vec<f32> = depth.valid_values().map(|d| 1.0 / d).collect();
    let (lo, hi) = inv
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data = (0..depth.len())
        .map(|i| match depth.at(i) {
            Some(d) => 0.1 + 0.9 * ((1.0 / d - lo) / span),
            None => 0.0,
        })
        .collect();
    ImagePlane::from_vec(depth.height(), depth.width(), 1, data)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    Ok(buf)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&read_file(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}
