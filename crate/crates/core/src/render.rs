//! Static SVG pictures: polygon outlines (lower polygon shaded), optional
//! auxiliary and primed edges, trajectory pieces and vertex-guide dots.

use std::fmt::Write as _;

use crate::cylinder::primed_edge_list;
use crate::error::Result;
use crate::flow::Trajectory;
use crate::geometry::{Point, Segment};
use crate::guide::guide_for;
use crate::surface::{auxiliary_edges, Polygon, Surface};
use crate::veech::PointFamily;

#[derive(Clone, Copy, Debug, Default)]
pub struct RenderOptions {
    pub auxiliary: bool,
    pub primed: bool,
    pub guide: bool,
}

const SCALE: f64 = 120.0;
const MARGIN: f64 = 20.0;

struct Canvas {
    lo: Point,
    hi: Point,
    body: String,
}

impl Canvas {
    fn map(&self, p: Point) -> (f64, f64) {
        ((p.x - self.lo.x) * SCALE + MARGIN, (self.hi.y - p.y) * SCALE + MARGIN)
    }

    fn polygon(&mut self, pts: &[Point], fill: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" stroke="black" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }

    fn line(&mut self, s: Segment, style: &str) {
        let (x0, y0) = self.map(s.p0);
        let (x1, y1) = self.map(s.p1);
        let _ = writeln!(self.body, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" {style}/>"#);
    }

    fn text(&mut self, p: Point, s: &str, colour: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="13" font-family="sans-serif" fill="{colour}" text-anchor="middle">{s}</text>"#
        );
    }

    fn dot(&mut self, p: Point, colour: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{colour}"/>"#);
    }

    fn finish(self) -> String {
        let w = (self.hi.x - self.lo.x) * SCALE + 2.0 * MARGIN;
        let h = (self.hi.y - self.lo.y) * SCALE + 2.0 * MARGIN;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn bounds(points: impl Iterator<Item = Point>) -> (Point, Point) {
    points.fold(
        (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(a, b), p| (Point::new(a.x.min(p.x), a.y.min(p.y)), Point::new(b.x.max(p.x), b.y.max(p.y))),
    )
}

pub fn render_svg(surface: &Surface, trajectory: Option<&Trajectory>, opts: RenderOptions) -> Result<String> {
    let guide = opts.guide.then(|| guide_for(surface));
    let mut pts: Vec<Point> =
        surface.vertices(Polygon::Upper).iter().chain(surface.vertices(Polygon::Lower)).copied().collect();
    if let Some(g) = &guide {
        for c in &g.copies {
            pts.extend(surface.vertices(c.kind).iter().map(|&v| v + c.offset));
        }
    }
    let (lo, hi) = bounds(pts.into_iter());
    let mut cv = Canvas { lo, hi, body: String::new() };

    if let Some(g) = &guide {
        for c in &g.copies {
            let vs: Vec<Point> = surface.vertices(c.kind).iter().map(|&v| v + c.offset).collect();
            let fill = if c.kind == Polygon::Lower { "#eeeeee" } else { "none" };
            cv.polygon(&vs, fill);
        }
    }
    cv.polygon(surface.vertices(Polygon::Upper), "none");
    cv.polygon(surface.vertices(Polygon::Lower), "#d9d9d9");
    let ab = surface.alphabet();
    for e in surface.original_edges() {
        cv.text(e.segment.midpoint(), &ab.name(e.letter), "black");
    }
    if opts.auxiliary {
        for e in auxiliary_edges(surface) {
            cv.line(e.segment, r##"stroke="#555555" stroke-width="1" stroke-dasharray="5,4""##);
            cv.text(e.segment.midpoint() + Point::new(0.0, 0.04), &ab.name(e.letter), "#555555");
        }
    }
    if opts.primed {
        for e in primed_edge_list(surface)? {
            cv.line(e.segment, r##"stroke="#c0392b" stroke-width="1.5""##);
        }
    }
    if let Some(tr) = trajectory {
        for (_, seg) in tr.pieces(surface) {
            cv.line(seg, r##"stroke="#1f5fbf" stroke-width="1.2""##);
        }
    }
    if let Some(g) = &guide {
        for fam in PointFamily::ALL {
            for level in 0..=surface.gon().apex() {
                let y = surface.level_y(fam.polygon(), level);
                cv.dot(Point::new(g.x(fam, level), y), "#e67e22");
            }
        }
    }
    Ok(cv.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_surface;

    #[test]
    fn svg_has_both_polygons_and_guide_dots() {
        let s = build_surface(5).unwrap();
        let svg = render_svg(&s, None, RenderOptions { auxiliary: true, primed: true, guide: true }).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.matches("<polygon").count() >= 2);
        assert_eq!(svg.matches("<circle").count(), 12);
    }
}
