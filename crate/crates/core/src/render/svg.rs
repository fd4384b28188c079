//! SVG 1.1 emission of the display list, and a reader for the same subset.
//!
//! Numbers are printed with exactly three decimals. Because display-list
//! coordinates are already quantized to that grid, [`parse_svg`] recovers
//! the primitives the rasterizer drew.

use std::fmt::Write as _;

use super::display::{display_list, Prim};
use super::{CanvasSpec, PaletteColor, RenderError};
use crate::geometry::Point2;
use crate::scene::Scene;

fn n(x: f64) -> String {
    format!("{x:.3}")
}

fn pts(points: &[Point2]) -> String {
    points.iter().map(|p| format!("{},{}", n(p.x), n(p.y))).collect::<Vec<_>>().join(" ")
}

fn stroke_attrs(color: PaletteColor, width: f64) -> String {
    format!(
        r#"fill="none" stroke="{}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round""#,
        color.hex(),
        n(width)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn emit_svg(scene: &Scene, canvas: &CanvasSpec) -> Result<String, RenderError> {
    canvas.validate()?;
    let prims = display_list(scene, canvas)?;
    Ok(emit_svg_prims(&prims, canvas))
}

pub fn emit_svg_prims(prims: &[Prim], canvas: &CanvasSpec) -> String {
    let (w, h) = (canvas.width, canvas.height);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="{}"/>"#, canvas.background.hex());
    for p in prims {
        match p {
            Prim::Line { a, b, width, color } => {
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {}/>"#,
                    n(a.x),
                    n(a.y),
                    n(b.x),
                    n(b.y),
                    stroke_attrs(*color, *width)
                );
            }
            Prim::Polyline { points, closed, width, color } => {
                let tag = if *closed { "polygon" } else { "polyline" };
                let _ = writeln!(s, r#"<{tag} points="{}" {}/>"#, pts(points), stroke_attrs(*color, *width));
            }
            Prim::Polygon { points, color } => {
                let _ = writeln!(s, r#"<polygon points="{}" fill="{}"/>"#, pts(points), color.hex());
            }
            Prim::Disc { center, radius, color } => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                    n(center.x),
                    n(center.y),
                    n(*radius),
                    color.hex()
                );
            }
            Prim::Ring { center, radius, width, color } => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="{}" {}/>"#,
                    n(center.x),
                    n(center.y),
                    n(*radius),
                    stroke_attrs(*color, *width)
                );
            }
            Prim::Arc { from, to, radius, width, color } => {
                let _ = writeln!(
                    s,
                    r#"<path d="M {} {} A {} {} 0 0 1 {} {}" {}/>"#,
                    n(from.x),
                    n(from.y),
                    n(*radius),
                    n(*radius),
                    n(to.x),
                    n(to.y),
                    stroke_attrs(*color, *width)
                );
            }
            Prim::Text { text, strokes, width, color } => {
                let _ = writeln!(
                    s,
                    r#"<g class="text" data-text="{}" {}>"#,
                    xml_escape(text),
                    stroke_attrs(*color, *width)
                );
                for st in strokes {
                    let d: Vec<String> = st
                        .iter()
                        .enumerate()
                        .map(|(i, p)| format!("{} {} {}", if i == 0 { "M" } else { "L" }, n(p.x), n(p.y)))
                        .collect();
                    let _ = writeln!(s, r#"<path d="{}"/>"#, d.join(" "));
                }
                s.push_str("</g>\n");
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

fn err(msg: impl Into<String>) -> RenderError {
    RenderError::SvgParse(msg.into())
}

fn num(node: roxmltree::Node, attr: &str) -> Result<f64, RenderError> {
    node.attribute(attr)
        .ok_or_else(|| err(format!("<{}> missing {attr}", node.tag_name().name())))?
        .parse()
        .map_err(|_| err(format!("bad number in {attr}")))
}

fn color(node: roxmltree::Node, attr: &str) -> Result<Option<PaletteColor>, RenderError> {
    match node.attribute(attr) {
        None | Some("none") => Ok(None),
        Some(hex) => PaletteColor::from_hex(hex).map(Some).ok_or_else(|| err(format!("unknown color {hex}"))),
    }
}

fn parse_points(s: &str) -> Result<Vec<Point2>, RenderError> {
    s.split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',').ok_or_else(|| err("bad point"))?;
            Ok(Point2::new(x.parse().map_err(|_| err("bad x"))?, y.parse().map_err(|_| err("bad y"))?))
        })
        .collect()
}

fn parse_path_polyline(d: &str) -> Result<Vec<Point2>, RenderError> {
    let toks: Vec<&str> = d.split_whitespace().collect();
    if toks.len() % 3 != 0 {
        return Err(err("unsupported path data"));
    }
    toks.chunks(3)
        .map(|c| {
            if c[0] != "M" && c[0] != "L" {
                return Err(err("unsupported path command"));
            }
            Ok(Point2::new(c[1].parse().map_err(|_| err("bad x"))?, c[2].parse().map_err(|_| err("bad y"))?))
        })
        .collect()
}

fn stroke_of(node: roxmltree::Node, inherited: Option<(PaletteColor, f64)>) -> Result<Option<(PaletteColor, f64)>, RenderError> {
    match color(node, "stroke")? {
        Some(c) => Ok(Some((c, num(node, "stroke-width")?))),
        None => Ok(inherited),
    }
}

/// Read back an SVG produced by [`emit_svg`]: returns the canvas size,
/// background and the primitive list in document order.
pub fn parse_svg(text: &str) -> Result<(CanvasSpec, Vec<Prim>), RenderError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| err(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(err("root element is not <svg>"));
    }
    let mut canvas = CanvasSpec {
        width: num(root, "width")? as u32,
        height: num(root, "height")? as u32,
        ..Default::default()
    };
    let mut prims = Vec::new();
    let mut seen_background = false;
    for node in root.children().filter(|n| n.is_element()) {
        let tag = node.tag_name().name();
        match tag {
            "rect" if !seen_background => {
                seen_background = true;
                canvas.background = color(node, "fill")?.ok_or_else(|| err("background without fill"))?;
            }
            "line" => {
                let (c, w) = stroke_of(node, None)?.ok_or_else(|| err("line without stroke"))?;
                prims.push(Prim::Line {
                    a: Point2::new(num(node, "x1")?, num(node, "y1")?),
                    b: Point2::new(num(node, "x2")?, num(node, "y2")?),
                    width: w,
                    color: c,
                });
            }
            "polyline" | "polygon" => {
                let points = parse_points(node.attribute("points").ok_or_else(|| err("missing points"))?)?;
                match (color(node, "fill")?, stroke_of(node, None)?) {
                    (Some(c), None) if tag == "polygon" => prims.push(Prim::Polygon { points, color: c }),
                    (None, Some((c, w))) => prims.push(Prim::Polyline { points, closed: tag == "polygon", width: w, color: c }),
                    _ => return Err(err(format!("unsupported <{tag}> paint"))),
                }
            }
            "circle" => {
                let center = Point2::new(num(node, "cx")?, num(node, "cy")?);
                let radius = num(node, "r")?;
                match (color(node, "fill")?, stroke_of(node, None)?) {
                    (Some(c), None) => prims.push(Prim::Disc { center, radius, color: c }),
                    (None, Some((c, w))) => prims.push(Prim::Ring { center, radius, width: w, color: c }),
                    _ => return Err(err("unsupported <circle> paint")),
                }
            }
            "path" => {
                let (c, w) = stroke_of(node, None)?.ok_or_else(|| err("path without stroke"))?;
                let d = node.attribute("d").ok_or_else(|| err("path without d"))?;
                let t: Vec<&str> = d.split_whitespace().collect();
                if t.len() != 11 || t[0] != "M" || t[3] != "A" || t[6..9] != ["0", "0", "1"] {
                    return Err(err(format!("unsupported arc path {d}")));
                }
                let f = |i: usize| t[i].parse::<f64>().map_err(|_| err("bad arc number"));
                prims.push(Prim::Arc {
                    from: Point2::new(f(1)?, f(2)?),
                    to: Point2::new(f(9)?, f(10)?),
                    radius: f(4)?,
                    width: w,
                    color: c,
                });
            }
            "g" => {
                let (c, w) = stroke_of(node, None)?.ok_or_else(|| err("text group without stroke"))?;
                let mut strokes = Vec::new();
                for child in node.children().filter(|n| n.is_element()) {
                    strokes.push(parse_path_polyline(child.attribute("d").ok_or_else(|| err("glyph path without d"))?)?);
                }
                prims.push(Prim::Text {
                    text: node.attribute("data-text").unwrap_or_default().to_string(),
                    strokes,
                    width: w,
                    color: c,
                });
            }
            other => return Err(err(format!("unsupported element <{other}>"))),
        }
    }
    Ok((canvas, prims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartScene, LineSegment};
    use crate::render::rasterize;
    use crate::scene::Element;

    #[test]
    fn empty_scene_has_only_background() {
        let svg = emit_svg(&Scene::default(), &CanvasSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let kids: Vec<_> = doc.root_element().children().filter(|n| n.is_element()).collect();
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].tag_name().name(), "rect");
    }

    #[test]
    fn one_segment_one_line_element() {
        let seg = LineSegment::new(Point2::new(10.0, 20.0), Point2::new(300.5, 400.25), PaletteColor::Red).unwrap();
        let svg = emit_svg(&Scene::new(vec![Element::Segment(seg)]), &CanvasSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("line")).collect();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].attribute("x1"), Some("10.000"));
        assert_eq!(lines[0].attribute("y2"), Some("400.250"));
    }

    #[test]
    fn chart_has_one_polyline_and_eleven_tick_labels() {
        let chart = ChartScene {
            xs: vec![0.0, 20.0, 50.0, 70.0, 100.0],
            ys: vec![10.0, 80.0, 40.0, 65.0, 30.0],
            dot_x: 60.0,
            dot_y: 52.5,
            y_tick_step: 10.0,
        };
        let svg = emit_svg(&Scene::new(vec![Element::Chart(chart)]), &CanvasSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(polylines.len(), 1);
        assert_eq!(polylines[0].attribute("points").unwrap().split_whitespace().count(), 5);
        let labels: Vec<String> = doc
            .descendants()
            .filter(|n| n.has_tag_name("g") && n.attribute("class") == Some("text"))
            .map(|n| n.attribute("data-text").unwrap().to_string())
            .collect();
        let expected: Vec<String> = (0..=10).map(|k| (k * 10).to_string()).collect();
        assert_eq!(labels, expected);
    }

    #[test]
    fn parse_recovers_prims_exactly() {
        let canvas = CanvasSpec::default();
        let chart = ChartScene {
            xs: vec![0.0, 33.3, 100.0],
            ys: vec![5.0, 95.0, 50.0],
            dot_x: 10.0,
            dot_y: 32.027,
            y_tick_step: 10.0,
        };
        let scene = Scene::new(vec![Element::Chart(chart)]);
        let prims = display_list(&scene, &canvas).unwrap();
        let (c2, parsed) = parse_svg(&emit_svg(&scene, &canvas).unwrap()).unwrap();
        assert_eq!(c2.width, 448);
        assert_eq!(parsed, prims);
        assert_eq!(rasterize(&parsed, &canvas), rasterize(&prims, &canvas));
    }
}
