//! Coloring output: ASCII grids (digits then letters) and standalone SVG
//! with optional subgrid/midgrid overlay lines.

use thiserror::Error;

use crate::grid::{Coloring, GridError};
use crate::layout::PatternLayout;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("palette holds {0} colors but the coloring needs {1}")]
    PaletteTooSmall(usize, usize),
    #[error("ascii symbols cover 35 colors, coloring needs {0}")]
    TooManyColorsForAscii(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Ascii,
    Svg,
}

/// Rendering knobs; the default palette covers up to 8 colors.
#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub format: RenderFormat,
    pub palette: Vec<String>,
    /// Draw subgrid borders (and heavier midgrid borders) over the tiled
    /// region.
    pub overlay: Option<PatternLayout>,
    pub cell_size: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: RenderFormat::Ascii,
            palette: ["#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6"]
                .map(String::from)
                .to_vec(),
            overlay: None,
            cell_size: 20,
        }
    }
}

fn color_symbol(color: u8) -> Option<char> {
    match color {
        1..=9 => Some((b'0' + color) as char),
        10..=35 => Some((b'A' + color - 10) as char),
        _ => None,
    }
}

fn symbol_color(symbol: char) -> Option<u8> {
    match symbol {
        '1'..='9' => Some(symbol as u8 - b'0'),
        'A'..='Z' => Some(symbol as u8 - b'A' + 10),
        _ => None,
    }
}

/// Renders a coloring; ascii gives m lines of n symbols, svg gives one
/// rect per cell plus overlay strokes on subgrid and midgrid boundaries.
pub fn render(c: &Coloring, opts: &RenderOptions) -> Result<String, RenderError> {
    match opts.format {
        RenderFormat::Ascii => render_ascii(c),
        RenderFormat::Svg => render_svg(c, opts),
    }
}

pub fn render_ascii(c: &Coloring) -> Result<String, RenderError> {
    let spec = c.spec();
    if spec.colors > 35 {
        return Err(RenderError::TooManyColorsForAscii(spec.colors));
    }
    let mut out = String::with_capacity(spec.cell_count() + spec.rows);
    for r in 0..spec.rows {
        for col in 0..spec.cols {
            out.push(color_symbol(c.at(r, col)).expect("color within symbol range"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses ascii output back into a coloring (the round trip partner of
/// [`render_ascii`]).
pub fn parse_ascii(text: &str, colors: usize) -> Result<Coloring, RenderError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(RenderError::Parse("no rows".into()));
    }
    let cols = lines[0].chars().count();
    let mut cells = Vec::with_capacity(lines.len() * cols);
    for line in &lines {
        if line.chars().count() != cols {
            return Err(RenderError::Parse("ragged rows".into()));
        }
        for ch in line.chars() {
            let color = symbol_color(ch).ok_or_else(|| RenderError::Parse(format!("bad symbol {ch:?}")))?;
            cells.push(color);
        }
    }
    let spec = crate::grid::GridSpec::new(lines.len(), cols, colors)
        .map_err(|e: GridError| RenderError::Parse(e.to_string()))?;
    Coloring::new(spec, cells).map_err(|e| RenderError::Parse(e.to_string()))
}

fn render_svg(c: &Coloring, opts: &RenderOptions) -> Result<String, RenderError> {
    let spec = c.spec();
    if opts.palette.len() < spec.colors {
        return Err(RenderError::PaletteTooSmall(opts.palette.len(), spec.colors));
    }
    let cell = opts.cell_size;
    let (width, height) = (spec.cols as u32 * cell, spec.rows as u32 * cell);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\">\n"
    ));
    for r in 0..spec.rows {
        for col in 0..spec.cols {
            let fill = &opts.palette[c.at(r, col) as usize - 1];
            out.push_str(&format!(
                "  <rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\"/>\n",
                col as u32 * cell,
                r as u32 * cell,
            ));
        }
    }
    if let Some(layout) = &opts.overlay {
        let z = layout.subgrid as u32;
        let tiled_c = layout.tiled_cols(spec) as u32;
        let tiled_r = layout.tiled_rows(spec) as u32;
        let mid = layout.midgrid.map(|m| m as u32);
        let stroke = |out: &mut String, x1: u32, y1: u32, x2: u32, y2: u32, width: u32| {
            out.push_str(&format!(
                "  <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"black\" stroke-width=\"{width}\"/>\n"
            ));
        };
        // Lines at subgrid boundaries; midgrid multiples heavier.
        for gx in (0..=tiled_c).step_by(z as usize) {
            let width = if mid.is_some_and(|m| gx % m == 0) { 3 } else { 1 };
            stroke(&mut out, gx * cell, 0, gx * cell, tiled_r * cell, width);
        }
        for gy in (0..=tiled_r).step_by(z as usize) {
            let width = if mid.is_some_and(|m| gy % m == 0) { 3 } else { 1 };
            stroke(&mut out, 0, gy * cell, tiled_c * cell, gy * cell, width);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::layout::ShiftDirection;

    #[test]
    fn ascii_row() {
        let spec = GridSpec::new(1, 3, 2).unwrap();
        let c = Coloring::new(spec, vec![1, 2, 1]).unwrap();
        assert_eq!(render_ascii(&c).unwrap(), "121\n");
    }

    #[test]
    fn ascii_roundtrip_with_letters() {
        let spec = GridSpec::new(3, 4, 12).unwrap();
        let cells: Vec<u8> = (0..12).map(|i| (i % 12) as u8 + 1).collect();
        let c = Coloring::new(spec, cells).unwrap();
        let text = render_ascii(&c).unwrap();
        assert!(text.contains('A'));
        assert_eq!(parse_ascii(&text, 12).unwrap(), c);
    }

    #[test]
    fn svg_counts_rects_and_lines() {
        let spec = GridSpec::new(2, 2, 1).unwrap();
        let c = Coloring::constant(spec, 1).unwrap();
        let opts = RenderOptions { format: RenderFormat::Svg, ..Default::default() };
        let svg = render(&c, &opts).unwrap();
        assert_eq!(svg.matches("<rect").count(), 4);
        assert_eq!(svg.matches("<line").count(), 0);

        let spec18 = GridSpec::new(18, 18, 4).unwrap();
        let c18 = Coloring::constant(spec18, 2).unwrap();
        let layout = PatternLayout::new(3, ShiftDirection::Right).unwrap().with_midgrid(9);
        let opts = RenderOptions { format: RenderFormat::Svg, overlay: Some(layout), ..Default::default() };
        let svg = render(&c18, &opts).unwrap();
        assert_eq!(svg.matches("<rect").count(), 18 * 18);
        // Boundaries every 3 cells: 7 per axis, of which 0, 9, 18 are heavy.
        assert_eq!(svg.matches("<line").count(), 14);
        assert_eq!(svg.matches("stroke-width=\"3\"").count(), 6);
        assert_eq!(svg.matches("stroke-width=\"1\"").count(), 8);
    }

    #[test]
    fn svg_is_well_formed_xml() {
        let spec = GridSpec::new(4, 4, 3).unwrap();
        let cells: Vec<u8> = (0..16).map(|i| (i % 3) as u8 + 1).collect();
        let c = Coloring::new(spec, cells).unwrap();
        let layout = PatternLayout::new(2, ShiftDirection::Left).unwrap();
        let opts = RenderOptions { format: RenderFormat::Svg, overlay: Some(layout), ..Default::default() };
        let svg = render(&c, &opts).unwrap();
        assert!(xml_well_formed(&svg), "svg failed the scanner:\n{svg}");
    }

    #[test]
    fn palette_checks() {
        let spec = GridSpec::new(2, 2, 9).unwrap();
        let c = Coloring::constant(spec, 9).unwrap();
        let opts = RenderOptions { format: RenderFormat::Svg, ..Default::default() };
        assert_eq!(render(&c, &opts), Err(RenderError::PaletteTooSmall(8, 9)));
        let spec = GridSpec::new(1, 1, 36).unwrap();
        let c = Coloring::constant(spec, 36).unwrap();
        assert_eq!(render_ascii(&c), Err(RenderError::TooManyColorsForAscii(36)));
    }

    /// Minimal well-formedness scanner: declaration, balanced tags,
    /// quoted attributes.
    fn xml_well_formed(text: &str) -> bool {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text.trim_start();
        if let Some(after) = rest.strip_prefix("<?xml") {
            let Some(end) = after.find("?>") else { return false };
            rest = &after[end + 2..];
        }
        let mut chars = rest.char_indices().peekable();
        while let Some((i, ch)) = chars.next() {
            if ch != '<' {
                continue;
            }
            let close = rest[i..].find('>').map(|o| i + o);
            let Some(close) = close else { return false };
            let body = &rest[i + 1..close];
            if let Some(name) = body.strip_prefix('/') {
                if stack.pop().as_deref() != Some(name.trim()) {
                    return false;
                }
            } else if !body.ends_with('/') {
                let name = body.split_whitespace().next().unwrap_or("");
                stack.push(name.to_string());
            }
            if body.matches('"').count() % 2 != 0 {
                return false;
            }
            while let Some(&(j, _)) = chars.peek() {
                if j > close {
                    break;
                }
                chars.next();
            }
        }
        stack.is_empty()
    }
}
