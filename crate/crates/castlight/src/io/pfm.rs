//! Grayscale PFM ("Pf") image codec.
//!
//! Layout: `Pf\n<width> <height>\n<scale>\n` followed by `width*height` f32
//! samples, rows stored bottom-to-top. A negative scale marks little-endian
//! data; we always write `-1.0`. Invalid pixels are stored as NaN so a
//! write/read round trip preserves the validity mask bit-for-bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::render::Image;

use super::atomic_write;

/// Serialize an image to PFM bytes. Invalid pixels become NaN.
pub fn encode_pfm(image: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + image.pixels.len() * 4);
    out.extend_from_slice(format!("Pf\n{} {}\n-1.0\n", image.width, image.height).as_bytes());
    for v in (0..image.height).rev() {
        for u in 0..image.width {
            let i = image.idx(u, v);
            let value = if image.valid[i] { image.pixels[i] } else { f32::NAN };
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    out
}

/// Parse PFM bytes. Non-finite samples are marked invalid; finite negatives
/// are rejected because intensities are non-negative by construction.
pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor).ok_or_else(|| parse_err("missing magic"))?;
    match magic {
        b"Pf" => {}
        b"PF" => return Err(parse_err("color PFM (PF) not supported, expected grayscale Pf")),
        _ => return Err(parse_err("bad magic, expected Pf")),
    }
    let width: usize = parse_token(bytes, &mut cursor, "width")?;
    let height: usize = parse_token(bytes, &mut cursor, "height")?;
    let scale: f32 = parse_token(bytes, &mut cursor, "scale")?;
    if width == 0 || height == 0 {
        return Err(parse_err("zero image dimension"));
    }
    if !scale.is_finite() || scale == 0.0 {
        return Err(parse_err("scale must be finite and nonzero"));
    }
    let little_endian = scale < 0.0;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| parse_err("dimensions overflow"))?;
    let data = &bytes[cursor..];
    if data.len() != expected {
        return Err(parse_err(&format!(
            "raster size mismatch: expected {expected} bytes for {width}x{height}, got {}",
            data.len()
        )));
    }

    let n = width * height;
    let mut pixels = vec![0f32; n];
    let mut valid = vec![false; n];
    for (row, chunk) in data.chunks_exact(width * 4).enumerate() {
        let v = height - 1 - row;
        for (u, quad) in chunk.chunks_exact(4).enumerate() {
            let raw: [u8; 4] = quad.try_into().expect("chunk of 4");
            let value =
                if little_endian { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
            let i = v * width + u;
            if value.is_finite() {
                if value < 0.0 {
                    return Err(parse_err(&format!(
                        "negative intensity {value} at pixel ({u}, {v})"
                    )));
                }
                pixels[i] = value;
                valid[i] = true;
            } else {
                pixels[i] = f32::NAN;
            }
        }
    }
    Image::new(width, height, pixels, valid)
}

/// Write an image to `path` as PFM, atomically.
pub fn write_pfm(path: &Path, image: &Image) -> Result<()> {
    atomic_write(path, &encode_pfm(image))
}

/// Read a PFM image from `path`.
pub fn read_pfm(path: &Path) -> Result<Image> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_pfm(&bytes).map_err(|e| match e {
        Error::Parse { detail, .. } => Error::Parse { path: path.display().to_string(), detail },
        other => other,
    })
}

fn parse_err(detail: &str) -> Error {
    Error::Parse { path: "<pfm>".into(), detail: detail.into() }
}

/// Next whitespace-delimited header token; consumes exactly one trailing
/// whitespace byte (the raster starts immediately after the scale's).
fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if *cursor == start {
        return None;
    }
    let token = &bytes[start..*cursor];
    if *cursor < bytes.len() {
        *cursor += 1;
    }
    Some(token)
}

fn parse_token<T: std::str::FromStr>(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<T> {
    let token = next_token(bytes, cursor).ok_or_else(|| parse_err(&format!("missing {what}")))?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(&format!("unparseable {what}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checkered(w: usize, h: usize) -> Image {
        let mut pixels = Vec::new();
        let mut valid = Vec::new();
        for v in 0..h {
            for u in 0..w {
                let ok = (u + v) % 3 != 0;
                pixels.push(if ok { (u * 17 + v) as f32 * 0.125 } else { f32::NAN });
                valid.push(ok);
            }
        }
        Image::new(w, h, pixels, valid).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise_exact() {
        let img = checkered(7, 5);
        let back = decode_pfm(&encode_pfm(&img)).unwrap();
        assert_eq!(back.valid, img.valid);
        for (a, b) in back.pixels.iter().zip(&img.pixels) {
            assert_eq!(a.to_bits(), b.to_bits(), "valid pixels bit-exact, NaN stays NaN");
        }
    }

    #[test]
    fn big_endian_data_is_understood() {
        let img = checkered(3, 2);
        let mut bytes = b"Pf\n3 2\n1.0\n".to_vec();
        for v in (0..2).rev() {
            for u in 0..3 {
                let i = img.idx(u, v);
                let value = if img.valid[i] { img.pixels[i] } else { f32::NAN };
                bytes.extend_from_slice(&value.to_be_bytes());
            }
        }
        let back = decode_pfm(&bytes).unwrap();
        assert_eq!(back.valid, img.valid);
        assert_eq!(back.pixels[img.idx(1, 1)], img.pixels[img.idx(1, 1)]);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        assert!(decode_pfm(b"").is_err());
        assert!(decode_pfm(b"PF\n2 2\n-1.0\n").is_err());
        assert!(decode_pfm(b"Pf\n0 4\n-1.0\n").is_err());
        assert!(decode_pfm(b"Pf\n2 two\n-1.0\n").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n0.0\n").is_err());
        // truncated raster
        let mut short = b"Pf\n2 2\n-1.0\n".to_vec();
        short.extend_from_slice(&[0u8; 15]);
        assert!(decode_pfm(&short).is_err());
        // trailing junk
        let mut long = encode_pfm(&checkered(2, 2));
        long.push(0);
        assert!(decode_pfm(&long).is_err());
    }

    #[test]
    fn negative_intensities_are_rejected() {
        let mut bytes = b"Pf\n1 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&(-0.5f32).to_le_bytes());
        let err = decode_pfm(&bytes).unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pfm");
        let img = checkered(9, 4);
        write_pfm(&path, &img).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(back.valid, img.valid);
        let bits = |im: &Image| im.pixels.iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&img));
        // second write produces identical bytes
        let first = std::fs::read(&path).unwrap();
        write_pfm(&path, &img).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }
}
