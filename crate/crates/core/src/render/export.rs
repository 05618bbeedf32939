//! PNG export for color and id buffers; raw little-endian f32 planes with a
//! 16-byte header (magic, height, width, channels) for float buffers.

use std::io::{Read, Write};
use std::path::Path;

use super::{RenderError, SensorFrame};

pub const RAW_MAGIC: [u8; 4] = *b"HSF1";

fn io(e: impl std::fmt::Display) -> RenderError {
    RenderError::Io(e.to_string())
}

fn rgb_bytes(frame: &SensorFrame) -> Vec<u8> {
    frame.rgb.iter().flat_map(|c| c.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)).collect()
}

pub fn write_png_rgb(frame: &SensorFrame, path: &Path) -> Result<(), RenderError> {
    image::save_buffer(path, &rgb_bytes(frame), frame.width, frame.height, image::ColorType::Rgb8).map_err(io)
}

/// PNG file bytes of the color buffer.
pub fn encode_png_rgb(frame: &SensorFrame) -> Result<Vec<u8>, RenderError> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&rgb_bytes(frame), frame.width, frame.height, image::ExtendedColorType::Rgb8)
        .map_err(io)?;
    Ok(out)
}

/// Fixed palette: id 0 is black, others get well-spread hues.
pub fn palette(id: u32) -> [u8; 3] {
    if id == 0 {
        return [0, 0, 0];
    }
    let h = id.wrapping_mul(2654435761);
    [(h >> 24) as u8 | 0x20, (h >> 16) as u8 | 0x20, (h >> 8) as u8 | 0x20]
}

pub fn write_png_ids(frame: &SensorFrame, ids: &[u32], path: &Path) -> Result<(), RenderError> {
    let bytes: Vec<u8> = ids.iter().flat_map(|id| palette(*id)).collect();
    image::save_buffer(path, &bytes, frame.width, frame.height, image::ColorType::Rgb8).map_err(io)
}

pub fn write_raw_f32(path: &Path, height: u32, width: u32, channels: u32, data: &[f32]) -> Result<(), RenderError> {
    if data.len() != (height * width * channels) as usize {
        return Err(RenderError::BadRaw(format!("{} values for {height}x{width}x{channels}", data.len())));
    }
    let mut out = Vec::with_capacity(16 + data.len() * 4);
    out.extend_from_slice(&RAW_MAGIC);
    for v in [height, width, channels] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(&out)).map_err(io)
}

/// Returns (height, width, channels, data).
pub fn read_raw_f32(path: &Path) -> Result<(u32, u32, u32, Vec<f32>), RenderError> {
    let mut buf = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(io)?;
    if buf.len() < 16 || buf[..4] != RAW_MAGIC {
        return Err(RenderError::BadRaw("missing header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
    let (h, w, c) = (word(4), word(8), word(12));
    let body = &buf[16..];
    if body.len() != (h * w * c) as usize * 4 {
        return Err(RenderError::BadRaw("size does not match header".into()));
    }
    let data = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    Ok((h, w, c, data))
}
