//! Netpbm I/O: binary PPM (P6) and PGM (P5) with maxval 255, plus PAM (P7)
//! output for RGBA renderings.

use super::RenderedImage;
use crate::error::{format_err, Result};
use crate::image::Image;
use crate::scalar::Scalar;
use std::path::Path;

pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    #[cfg(feature = "png")]
    if bytes.starts_with(b"\x89PNG") {
        return super::png_io::decode_png(&bytes);
    }
    decode_pnm(&bytes).map_err(|e| match e {
        crate::error::Error::Format(m) => format_err(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Saves as P6 (3 channels) or P5 (1 channel).
pub fn save_image<T: Scalar>(path: impl AsRef<Path>, image: &Image<T>) -> Result<()> {
    std::fs::write(path, encode_pnm(image)?)?;
    Ok(())
}

fn quantize<T: Scalar>(v: T) -> u8 {
    (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn encode_pnm<T: Scalar>(image: &Image<T>) -> Result<Vec<u8>> {
    let magic = match image.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(format_err(format!("cannot write a {c}-channel image as PPM/PGM"))),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    Ok(out)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
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

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err(format!("malformed header: expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(format!("malformed header: bad {what}")))
    }
}

pub fn decode_pnm<T: Scalar>(bytes: &[u8]) -> Result<Image<T>> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(format_err("not a binary PPM/PGM file (expected P6 or P5)")),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(format_err(format!("unsupported maxval {maxval}; only 8-bit (255) images are supported")));
    }
    if width == 0 || height == 0 {
        return Err(format_err("image has zero width or height"));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(format_err("malformed header: missing whitespace after maxval")),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| format_err("image dimensions overflow"))?;
    let data = bytes
        .get(cur.pos..cur.pos + len)
        .ok_or_else(|| format_err(format!("truncated pixel data: need {len} bytes, have {}", bytes.len() - cur.pos)))?;
    let values = data.iter().map(|&b| T::of(b as f64 / 255.0)).collect();
    Image::new(height, width, channels, values)
}

/// PAM (P7) with `TUPLTYPE RGB_ALPHA`, keeping the heatmap's transparency.
pub fn encode_pam(image: &RenderedImage) -> Vec<u8> {
    let mut out = format!(
        "P7\nWIDTH {}\nHEIGHT {}\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n",
        image.width, image.height
    )
    .into_bytes();
    out.extend_from_slice(&image.rgba);
    out
}

pub fn save_rendered(path: impl AsRef<Path>, image: &RenderedImage) -> Result<()> {
    let path = path.as_ref();
    #[cfg(feature = "png")]
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        return super::png_io::save_png(path, image);
    }
    std::fs::write(path, encode_pam(image))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn two_by_two_byte_mapping() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend([0, 0, 0, 255, 255, 255, 255, 0, 0, 0, 0, 255]);
        let img: Image = decode_pnm(&bytes).unwrap();
        assert_eq!(img.data(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(encode_pnm(&img).unwrap(), bytes);
    }

    #[test]
    fn comments_in_header() {
        let mut bytes = b"P5 # gray\n# another\n1 2 255\n".to_vec();
        bytes.extend([51, 255]);
        let img: Image = decode_pnm(&bytes).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (2, 1, 1));
        assert_eq!(img.data()[0], 0.2);
    }

    #[test]
    fn malformed_inputs() {
        let mut truncated = b"P6\n2 2\n255\n".to_vec();
        truncated.extend([1, 2, 3]);
        assert!(matches!(decode_pnm::<f64>(&truncated), Err(Error::Format(_))));
        assert!(matches!(decode_pnm::<f64>(b"P6\n2 2\n65535\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pnm::<f64>(b"P3\n1 1\n255\n0 0 0"), Err(Error::Format(_))));
        assert!(matches!(decode_pnm::<f64>(b"P6\nx 2\n255\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pnm::<f64>(b""), Err(Error::Format(_))));
        assert!(matches!(decode_pnm::<f64>(b"P6\n2"), Err(Error::Format(_))));
    }
}
