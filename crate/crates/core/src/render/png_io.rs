//! PNG encoding with a fixed configuration: 8-bit RGB, no alpha, no
//! ancillary chunks, `Up` row filter, fdeflate "ultra fast" compression,
//! whole image written in one call. The output is a pure function of the
//! pixels for a given `png` crate version.

use super::raster::Rgb8Image;
use super::RenderError;

pub fn encode_png(img: &Rgb8Image) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::with_capacity(16 * 1024);
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_deflate_compression(png::DeflateCompression::FdeflateUltraFast);
        enc.set_filter(png::Filter::Up);
        let mut w = enc.write_header().map_err(|e| RenderError::Png(e.to_string()))?;
        w.write_image_data(&img.pixels).map_err(|e| RenderError::Png(e.to_string()))?;
        w.finish().map_err(|e| RenderError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub type DecodedImage = Rgb8Image;

/// Decode an 8-bit RGB or RGBA PNG into RGB pixels.
pub fn decode_png(bytes: &[u8]) -> Result<DecodedImage, RenderError> {
    let dec = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = dec.read_info().map_err(|e| RenderError::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RenderError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| RenderError::Png(e.to_string()))?;
    buf.truncate(info.buffer_size());
    let pixels = match (info.color_type, info.bit_depth) {
        (png::ColorType::Rgb, png::BitDepth::Eight) => buf,
        (png::ColorType::Rgba, png::BitDepth::Eight) => {
            buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect()
        }
        other => return Err(RenderError::Png(format!("unsupported pixel format {other:?}"))),
    };
    Ok(Rgb8Image { width: info.width, height: info.height, pixels })
}
