//! Exact scene descriptions; both pixels and labels derive from these.

use serde::{Deserialize, Serialize};

use crate::geometry::{ChartScene, CirclePair, LineSegment, Point2, ShapeInstance, Solid, Wedge};
use crate::render::PaletteColor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Element {
    Segment(LineSegment),
    Wedge(Wedge),
    CirclePair(CirclePair),
    Shape(ShapeInstance),
    Solid { solid: Solid, center: Point2 },
    Chart(ChartScene),
    Dot { center: Point2, radius: f64, color: PaletteColor },
    /// Stroke-font text centered on `center`.
    Text { center: Point2, height: f64, text: String, color: PaletteColor },
}

impl Element {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Element::Segment(_) => "segment",
            Element::Wedge(_) => "wedge",
            Element::CirclePair(_) => "circle_pair",
            Element::Shape(_) => "shape",
            Element::Solid { .. } => "solid",
            Element::Chart(_) => "chart",
            Element::Dot { .. } => "dot",
            Element::Text { .. } => "text",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub elements: Vec<Element>,
}

impl Scene {
    pub fn new(elements: Vec<Element>) -> Self {
        Scene { elements }
    }

    pub fn push(&mut self, e: Element) {
        self.elements.push(e);
    }
}
