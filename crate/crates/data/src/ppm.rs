//! Binary PPM (`P6`, maxval 255) codec.

use std::path::Path;

use tide_core::Tensor;

use crate::error::{io_err, DataError, Result};

fn fail<T>(offset: usize, detail: impl Into<String>) -> Result<T> {
    Err(DataError::Ppm { offset, detail: detail.into() })
}

struct Header {
    width: usize,
    height: usize,
    payload: usize,
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_number(bytes: &[u8], pos: usize, what: &str) -> Result<(usize, usize)> {
    let start = skip_space_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return fail(start, format!("expected {what}"));
    }
    let v = std::str::from_utf8(&bytes[start..end])
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or(DataError::Ppm { offset: start, detail: format!("{what} out of range") })?;
    Ok((v, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return fail(0, "bad magic, expected P6");
    }
    let (width, pos) = read_number(bytes, 2, "width")?;
    let (height, pos) = read_number(bytes, pos, "height")?;
    let (maxval, pos) = read_number(bytes, pos, "maxval")?;
    if width == 0 || height == 0 {
        return fail(pos, format!("zero image extent {width}x{height}"));
    }
    if maxval != 255 {
        return fail(pos, format!("maxval {maxval} unsupported, expected 255"));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return fail(pos, "expected a single whitespace byte before the payload");
    }
    Ok(Header { width, height, payload: pos + 1 })
}

/// Decodes `P6` bytes into `[3, H, W]` with values `p / 255`.
pub fn decode_ppm(bytes: &[u8]) -> Result<Tensor<f32>> {
    let h = parse_header(bytes)?;
    let plane = h.width * h.height;
    let need = 3 * plane;
    let have = bytes.len() - h.payload;
    if have < need {
        return fail(bytes.len(), format!("truncated payload: {have} of {need} bytes"));
    }
    let pixels = &bytes[h.payload..h.payload + need];
    let mut data = vec![0.0f32; need];
    for (i, px) in pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] as f32 / 255.0;
        }
    }
    Ok(Tensor::from_vec(&[3, h.height, h.width], data)?)
}

/// Encodes `[3, H, W]` as `P6` using `round(v·255)` clamped to `0..=255`.
pub fn encode_ppm(image: &Tensor<f32>) -> Result<Vec<u8>> {
    let s = image.shape();
    if s.len() != 3 || s[0] != 3 {
        return Err(DataError::Invalid(format!("PPM needs a [3, H, W] image, got {s:?}")));
    }
    let (height, width) = (s[1], s[2]);
    let plane = height * width;
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * plane);
    let d = image.data();
    for i in 0..plane {
        for c in 0..3 {
            out.push((d[c * plane + i] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode_ppm(&bytes)
}

pub fn write_ppm(image: &Tensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ppm(image)?).map_err(io_err(path))
}
