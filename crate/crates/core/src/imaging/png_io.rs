use super::RenderedImage;
use crate::error::{format_err, Result};
use crate::image::Image;
use crate::scalar::Scalar;
use std::path::Path;

pub(super) fn decode_png<T: Scalar>(bytes: &[u8]) -> Result<Image<T>> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| format_err(format!("png: {e}")))?;
    let size = reader.output_buffer_size().ok_or_else(|| format_err("png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| format_err(format!("png: {e}")))?;
    let (channels, keep): (usize, usize) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(format_err("png: unexpanded palette image")),
    };
    let data = buf[..info.buffer_size()]
        .chunks_exact(channels)
        .flat_map(|px| px[..keep].iter().map(|&b| T::of(b as f64 / 255.0)))
        .collect();
    Image::new(info.height as usize, info.width as usize, keep, data)
}

pub(super) fn save_png(path: &Path, image: &RenderedImage) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut enc = png::Encoder::new(file, image.width as u32, image.height as u32);
    enc.set_color(png::ColorType::Rgba);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| format_err(format!("png: {e}")))?;
    writer.write_image_data(&image.rgba).map_err(|e| format_err(format!("png: {e}")))?;
    Ok(())
}
