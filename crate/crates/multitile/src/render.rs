//! Figure-grade SVG output: polygon renderings of planar patches and bar
//! renderings of interval patches. Exactness stays in the data formats; SVG
//! coordinates are serialized at 12 significant digits, deterministically.

use crate::exact::rational_to_f64;
use crate::flow::{Patch, SupertileGroup};
use crate::scheme::Scheme;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    ByType,
    ByScale,
    BySupertile,
}

#[derive(Debug, Clone)]
pub struct RenderStyle {
    pub color_mode: ColorMode,
    /// Base stroke width as a fraction of the patch extent; strokes thin out
    /// with substitution depth.
    pub stroke_fraction: f64,
    /// Optional explicit viewport (min_x, min_y, width, height).
    pub viewport: Option<(f64, f64, f64, f64)>,
    /// Overlay bold order-m supertile boundaries.
    pub supertile_outlines: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            color_mode: ColorMode::ByType,
            stroke_fraction: 0.002,
            viewport: None,
            supertile_outlines: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("expected a {expected}-dimensional patch, got {actual}")]
    WrongDimension { expected: usize, actual: usize },
    #[error("supertile coloring/outlines need a decomposition; none was supplied")]
    MissingSupertiles,
    #[error("viewport is degenerate")]
    DegenerateViewport,
}

const TYPE_PALETTE: [&str; 10] = [
    "#4878a8", "#d08342", "#6aa56e", "#b85c5c", "#8a72b3", "#a58f4e", "#5ba3a3", "#c77daa",
    "#7a8a52", "#b07855",
];

/// `value` formatted with 12 significant digits, plain decimal notation.
pub fn fmt_sig12(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 17) as usize;
    let s = format!("{value:.decimals$}");
    // trim trailing zeros but keep at least one digit
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

fn hue_ramp(fraction: f64) -> String {
    // blue (240°) for small scales to red (0°) for scale 1
    let h = 240.0 * (1.0 - fraction);
    format!("hsl({},70%,55%)", fmt_sig12(h))
}

/// Renders a planar patch as one `<polygon>` per tile.
///
/// Coloring: `ByType` uses a fixed palette, `ByScale` ramps hue over the
/// sorted distinct scales, `BySupertile` colors tiles by their order-m group
/// (a decomposition must be supplied). With `supertile_outlines`, ancestor
/// boundaries are drawn bold on top.
pub fn render_svg(
    scheme: &Scheme,
    patch: &Patch,
    style: &RenderStyle,
    supertiles: Option<&[SupertileGroup]>,
) -> Result<String, RenderError> {
    if patch.dim() != 2 {
        return Err(RenderError::WrongDimension {
            expected: 2,
            actual: patch.dim(),
        });
    }
    let (lo, hi) = patch.support_bbox(scheme);
    let (x0, y0) = (rational_to_f64(&lo[0]), rational_to_f64(&lo[1]));
    let (x1, y1) = (rational_to_f64(&hi[0]), rational_to_f64(&hi[1]));
    let (vx, vy, vw, vh) = style
        .viewport
        .unwrap_or((x0, y0, x1 - x0, y1 - y0));
    if !(vw > 0.0 && vh > 0.0) {
        return Err(RenderError::DegenerateViewport);
    }
    let extent = vw.max(vh);

    // distinct scales for the hue ramp
    let mut scales: Vec<f64> = Vec::new();
    if style.color_mode == ColorMode::ByScale {
        let mut set: Vec<_> = patch.tiles.iter().map(|t| t.scale.clone()).collect();
        set.sort();
        set.dedup();
        scales = set.iter().map(rational_to_f64).collect();
    }
    // tile index -> supertile group index
    let mut group_of: Vec<usize> = Vec::new();
    if style.color_mode == ColorMode::BySupertile || style.supertile_outlines {
        let groups = supertiles.ok_or(RenderError::MissingSupertiles)?;
        group_of = vec![0; patch.tiles.len()];
        for (gi, g) in groups.iter().enumerate() {
            for &m in &g.members {
                group_of[m] = gi;
            }
        }
    }

    let mut svg = String::new();
    // y axis flipped so the patch appears in mathematical orientation
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        fmt_sig12(vx),
        fmt_sig12(-vy - vh),
        fmt_sig12(vw),
        fmt_sig12(vh)
    )
    .unwrap();
    writeln!(svg, "<g stroke=\"#222222\" stroke-linejoin=\"round\">").unwrap();
    for (i, tile) in patch.tiles.iter().enumerate() {
        let geom = patch.tile_geometry(scheme, tile);
        let pts = match &geom {
            crate::geometry::Geometry::Polygon(vs) => vs,
            _ => unreachable!("2-d patches carry polygons"),
        };
        let mut attr = String::new();
        for (k, p) in pts.iter().enumerate() {
            if k > 0 {
                attr.push(' ');
            }
            write!(
                attr,
                "{},{}",
                fmt_sig12(rational_to_f64(&p[0])),
                fmt_sig12(-rational_to_f64(&p[1]))
            )
            .unwrap();
        }
        let fill = match style.color_mode {
            ColorMode::ByType => TYPE_PALETTE[(tile.ptype - 1) % TYPE_PALETTE.len()].to_string(),
            ColorMode::ByScale => {
                let s = rational_to_f64(&tile.scale);
                let pos = scales.iter().position(|x| (x - s).abs() < 1e-15).unwrap_or(0);
                let frac = if scales.len() > 1 {
                    pos as f64 / (scales.len() - 1) as f64
                } else {
                    1.0
                };
                hue_ramp(frac)
            }
            ColorMode::BySupertile => {
                TYPE_PALETTE[group_of[i] % TYPE_PALETTE.len()].to_string()
            }
        };
        let stroke = extent * style.stroke_fraction * 0.9f64.powi(tile.path.len() as i32);
        writeln!(
            svg,
            "<polygon points=\"{attr}\" fill=\"{fill}\" stroke-width=\"{}\"/>",
            fmt_sig12(stroke)
        )
        .unwrap();
    }
    writeln!(svg, "</g>").unwrap();

    if style.supertile_outlines {
        let groups = supertiles.ok_or(RenderError::MissingSupertiles)?;
        writeln!(
            svg,
            "<g fill=\"none\" stroke=\"#000000\" stroke-width=\"{}\">",
            fmt_sig12(extent * style.stroke_fraction * 4.0)
        )
        .unwrap();
        for g in groups {
            let geom = scheme
                .prototile(g.ancestor_type)
                .geometry
                .transformed(&g.ancestor_scale, &g.ancestor_offset);
            if let crate::geometry::Geometry::Polygon(vs) = geom {
                let mut attr = String::new();
                for (k, p) in vs.iter().enumerate() {
                    if k > 0 {
                        attr.push(' ');
                    }
                    write!(
                        attr,
                        "{},{}",
                        fmt_sig12(rational_to_f64(&p[0])),
                        fmt_sig12(-rational_to_f64(&p[1]))
                    )
                    .unwrap();
                }
                writeln!(svg, "<polygon points=\"{attr}\"/>").unwrap();
            }
        }
        writeln!(svg, "</g>").unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders an interval patch as a bar with tick marks at tile endpoints.
pub fn render_1d(scheme: &Scheme, patch: &Patch, style: &RenderStyle) -> Result<String, RenderError> {
    if patch.dim() != 1 {
        return Err(RenderError::WrongDimension {
            expected: 1,
            actual: patch.dim(),
        });
    }
    let (lo, hi) = patch.support_bbox(scheme);
    let (x0, x1) = (rational_to_f64(&lo[0]), rational_to_f64(&hi[0]));
    let width = x1 - x0;
    let bar = width * 0.08;
    let tick = bar * 1.6;
    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        fmt_sig12(x0 - 0.02 * width),
        fmt_sig12(-tick),
        fmt_sig12(1.04 * width),
        fmt_sig12(2.0 * tick)
    )
    .unwrap();
    let mut scales: Vec<_> = patch.tiles.iter().map(|t| t.scale.clone()).collect();
    scales.sort();
    scales.dedup();
    let scale_pos = |s: &crate::exact::Rational| scales.iter().position(|x| x == s).unwrap_or(0);
    for tile in &patch.tiles {
        let geom = patch.tile_geometry(scheme, tile);
        let (a, b) = match &geom {
            crate::geometry::Geometry::Interval(a, b) => (rational_to_f64(a), rational_to_f64(b)),
            _ => unreachable!("1-d patches carry intervals"),
        };
        let fill = match style.color_mode {
            ColorMode::ByType => TYPE_PALETTE[(tile.ptype - 1) % TYPE_PALETTE.len()].to_string(),
            _ => {
                let frac = if scales.len() > 1 {
                    scale_pos(&tile.scale) as f64 / (scales.len() - 1) as f64
                } else {
                    1.0
                };
                hue_ramp(frac)
            }
        };
        writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"#222222\" stroke-width=\"{}\"/>",
            fmt_sig12(a),
            fmt_sig12(-bar / 2.0),
            fmt_sig12(b - a),
            fmt_sig12(bar),
            fmt_sig12(width * style.stroke_fraction)
        )
        .unwrap();
        for x in [a, b] {
            writeln!(
                svg,
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\" stroke-width=\"{3}\"/>",
                fmt_sig12(x),
                fmt_sig12(-tick / 2.0),
                fmt_sig12(tick / 2.0),
                fmt_sig12(width * style.stroke_fraction)
            )
            .unwrap();
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational_from_ints as q;
    use crate::flow::{find_stationary_anchors, generate, stationary_patch, supertile_decompose, GenOptions, TimePoint};
    use crate::scheme::bundled;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(1.0), "1");
        assert_eq!(fmt_sig12(-0.5), "-0.5");
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig12(12345.6789), "12345.6789");
    }

    #[test]
    fn svg_is_deterministic_and_complete() {
        let scheme = bundled::square();
        let patch = generate(&scheme, 1, &TimePoint::Exact(q(5, 1)), &GenOptions::default())
            .unwrap();
        let style = RenderStyle::default();
        let a = render_svg(&scheme, &patch, &style, None).unwrap();
        let b = render_svg(&scheme, &patch, &style, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<polygon").count(), patch.tiles.len());
    }

    #[test]
    fn by_scale_fill_count_matches_distinct_scales() {
        let scheme = bundled::square();
        let anchor = find_stationary_anchors(&scheme, 1, &q(5, 3), 1000).unwrap()[0].clone();
        let patch = stationary_patch(&scheme, &anchor, 5, &GenOptions::default()).unwrap();
        let style = RenderStyle {
            color_mode: ColorMode::ByScale,
            ..Default::default()
        };
        let svg = render_svg(&scheme, &patch, &style, None).unwrap();
        let mut fills: Vec<&str> = svg
            .lines()
            .filter_map(|l| l.split("fill=\"").nth(1))
            .map(|r| r.split('"').next().unwrap())
            .filter(|f| f.starts_with("hsl"))
            .collect();
        fills.sort();
        fills.dedup();
        assert_eq!(fills.len(), 6); // c(5) = 6 distinct scales
    }

    #[test]
    fn supertile_overlay() {
        let scheme = bundled::triangles();
        let anchors = find_stationary_anchors(&scheme, 1, &q(5, 1), 100_000).unwrap();
        let anchor = anchors.iter().find(|a| a.period_u == q(5, 1)).unwrap().clone();
        let patch = stationary_patch(&scheme, &anchor, 2, &GenOptions::default()).unwrap();
        let groups = supertile_decompose(&scheme, &patch, &anchor, 1).unwrap();
        // one group per tile of F_s(U)
        let expect = crate::stats::tile_count(&scheme, 1, &q(5, 1), 1_000_000).unwrap();
        assert_eq!(groups.len() as u64, expect);
        let style = RenderStyle {
            color_mode: ColorMode::BySupertile,
            supertile_outlines: true,
            ..Default::default()
        };
        let svg = render_svg(&scheme, &patch, &style, Some(&groups)).unwrap();
        // member polygons plus one outline polygon per group
        assert_eq!(
            svg.matches("<polygon").count(),
            patch.tiles.len() + groups.len()
        );
    }

    #[test]
    fn one_dimensional_bars() {
        let scheme = bundled::kakutani_1_3();
        let single = generate(&scheme, 1, &TimePoint::Exact(q(1, 1)), &GenOptions::default())
            .unwrap();
        let svg = render_1d(&scheme, &single, &RenderStyle::default()).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);
        let two = generate(&scheme, 1, &TimePoint::Exact(q(3, 2)), &GenOptions::default())
            .unwrap();
        let svg = render_1d(&scheme, &two, &RenderStyle::default()).unwrap();
        assert_eq!(svg.matches("<rect").count(), 2);
        let three = generate(&scheme, 1, &TimePoint::Exact(q(9, 4)), &GenOptions::default())
            .unwrap();
        let svg = render_1d(&scheme, &three, &RenderStyle::default()).unwrap();
        assert_eq!(svg.matches("<rect").count(), 3);
    }

    #[test]
    fn wrong_dimension_is_an_error() {
        let sq = bundled::square();
        let kak = bundled::kakutani_1_3();
        let planar = generate(&sq, 1, &TimePoint::Exact(q(1, 1)), &GenOptions::default()).unwrap();
        let linear = generate(&kak, 1, &TimePoint::Exact(q(1, 1)), &GenOptions::default()).unwrap();
        assert!(render_1d(&sq, &planar, &RenderStyle::default()).is_err());
        assert!(render_svg(&kak, &linear, &RenderStyle::default(), None).is_err());
    }
}
