//! Deterministic rendering of scenes to PNG and SVG.
//!
//! A [`Scene`] is first lowered to a display list of [`Prim`]s whose
//! coordinates are quantized to 1/1000 canvas unit. Both output formats are
//! produced from that same list, so the SVG text carries exactly the geometry
//! the rasterizer drew.

mod display;
mod font;
mod png_io;
mod raster;
mod svg;

pub use display::{arc_center, display_list, fits_canvas, scene_bounds, BBox, ChartLayout, Prim};
pub use font::{glyph_strokes, text_strokes, GLYPH_CHARS};
pub use png_io::{decode_png, encode_png, DecodedImage};
pub use raster::{rasterize, Rgb8Image};
pub use svg::{emit_svg, emit_svg_prims, parse_svg};

use serde::{Deserialize, Serialize};

use crate::scene::Scene;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("element {index} ({what}) extends outside the {width}x{height} canvas")]
    OutOfBounds { index: usize, what: String, width: u32, height: u32 },
    #[error("invalid canvas: {0}")]
    InvalidCanvas(String),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error("svg parse failed: {0}")]
    SvgParse(String),
}

/// Named colors with a frozen 8-bit RGB table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaletteColor {
    Black,
    White,
    Red,
    Blue,
    Green,
    Orange,
    Purple,
    Brown,
    Gray,
}

impl PaletteColor {
    pub const ALL: [PaletteColor; 9] = [
        PaletteColor::Black,
        PaletteColor::White,
        PaletteColor::Red,
        PaletteColor::Blue,
        PaletteColor::Green,
        PaletteColor::Orange,
        PaletteColor::Purple,
        PaletteColor::Brown,
        PaletteColor::Gray,
    ];

    /// Colors usable for objects that must be told apart by name.
    pub const CHROMATIC: [PaletteColor; 6] = [
        PaletteColor::Red,
        PaletteColor::Blue,
        PaletteColor::Green,
        PaletteColor::Orange,
        PaletteColor::Purple,
        PaletteColor::Brown,
    ];

    pub const fn rgb(self) -> [u8; 3] {
        match self {
            PaletteColor::Black => [0, 0, 0],
            PaletteColor::White => [255, 255, 255],
            PaletteColor::Red => [228, 26, 28],
            PaletteColor::Blue => [55, 126, 184],
            PaletteColor::Green => [77, 175, 74],
            PaletteColor::Orange => [255, 127, 0],
            PaletteColor::Purple => [152, 78, 163],
            PaletteColor::Brown => [166, 86, 40],
            PaletteColor::Gray => [128, 128, 128],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PaletteColor::Black => "black",
            PaletteColor::White => "white",
            PaletteColor::Red => "red",
            PaletteColor::Blue => "blue",
            PaletteColor::Green => "green",
            PaletteColor::Orange => "orange",
            PaletteColor::Purple => "purple",
            PaletteColor::Brown => "brown",
            PaletteColor::Gray => "gray",
        }
    }

    pub fn from_name(s: &str) -> Option<PaletteColor> {
        PaletteColor::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn hex(self) -> String {
        let [r, g, b] = self.rgb();
        format!("#{r:02x}{g:02x}{b:02x}")
    }

    pub fn from_hex(s: &str) -> Option<PaletteColor> {
        PaletteColor::ALL.into_iter().find(|c| c.hex() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CanvasSpec {
    pub width: u32,
    pub height: u32,
    pub background: PaletteColor,
    pub stroke_width: f64,
    pub supersample: u32,
}

impl Default for CanvasSpec {
    fn default() -> Self {
        CanvasSpec {
            width: 448,
            height: 448,
            background: PaletteColor::White,
            stroke_width: 3.0,
            supersample: 4,
        }
    }
}

impl CanvasSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width < 64 || self.height < 64 {
            return Err(RenderError::InvalidCanvas(format!(
                "{}x{} is smaller than 64x64",
                self.width, self.height
            )));
        }
        if ![1, 2, 4].contains(&self.supersample) {
            return Err(RenderError::InvalidCanvas(format!(
                "supersample {} not in {{1,2,4}}",
                self.supersample
            )));
        }
        if !(self.stroke_width > 0.0 && self.stroke_width.is_finite()) {
            return Err(RenderError::InvalidCanvas("stroke width must be positive".into()));
        }
        Ok(())
    }
}

/// Render a scene to PNG bytes (8-bit RGB, fixed chunk set).
pub fn render_png(scene: &Scene, canvas: &CanvasSpec) -> Result<Vec<u8>, RenderError> {
    let img = render_rgb(scene, canvas)?;
    encode_png(&img)
}

/// Render a scene to an in-memory RGB image.
pub fn render_rgb(scene: &Scene, canvas: &CanvasSpec) -> Result<Rgb8Image, RenderError> {
    canvas.validate()?;
    let prims = display_list(scene, canvas)?;
    Ok(rasterize(&prims, canvas))
}
