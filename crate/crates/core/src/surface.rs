//! The double regular odd-gon translation surface.
//!
//! Layout: the upper polygon `P_U` has its horizontal edge `S_1` from `(0,0)`
//! to `(1,0)` and edges `S_1..S_n` labelled counter-clockwise. The lower
//! polygon `P_L` is the half-turn of `P_U` about the midpoint of `S_n`, so the
//! two polygons share `S_n` in the plane and `P_L` has its horizontal edge on
//! top. Edge `S_k` of `P_U` is glued to edge `S_k` of `P_L` by a translation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Segment, Tolerance};
use crate::letter::{Alphabet, Letter};

/// Parameters of a regular odd-gon with unit edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OddGon {
    n: usize,
}

impl OddGon {
    pub const MAX_N: usize = 99;

    pub fn new(n: usize) -> Result<Self> {
        if n % 2 == 1 && (5..=Self::MAX_N).contains(&n) {
            Ok(OddGon { n })
        } else {
            Err(Error::UnsupportedSurface(n))
        }
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Exterior angle `2π/n`.
    pub fn alpha(self) -> f64 {
        2.0 * self.half_alpha()
    }

    /// `π/n`, the width of the standard direction sector.
    pub fn half_alpha(self) -> f64 {
        PI / self.n as f64
    }

    /// Index of the apex level, `(n-1)/2`.
    pub fn apex(self) -> usize {
        (self.n - 1) / 2
    }

    /// Label of the non-horizontal original edge parallel to direction `π/n`.
    pub fn sector_edge(self) -> usize {
        (self.n + 3) / 2
    }

    /// The horizontal-flip relabelling `S_k -> S_{n+2-k}` (fixes `S_1`).
    pub fn flip_label(self, k: usize) -> usize {
        if k == 1 {
            1
        } else {
            self.n + 2 - k
        }
    }

    pub fn alphabet(self) -> Alphabet {
        Alphabet::new(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polygon {
    Upper,
    Lower,
}

impl Polygon {
    pub fn other(self) -> Polygon {
        match self {
            Polygon::Upper => Polygon::Lower,
            Polygon::Lower => Polygon::Upper,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polygon::Upper => "upper",
            Polygon::Lower => "lower",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Original,
    Auxiliary,
    Primed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub letter: Letter,
    pub polygon: Polygon,
    pub segment: Segment,
    pub kind: EdgeKind,
}

/// The double `n`-gon with its vertex coordinates and gluings.
#[derive(Clone, Debug)]
pub struct Surface {
    gon: OddGon,
    upper: Vec<Point>,
    lower: Vec<Point>,
    /// `glue[k-1]` carries `P_U`'s `S_k` onto `P_L`'s `S_k`.
    glue: Vec<Point>,
}

pub fn build_surface(n: usize) -> Result<Surface> {
    Surface::new(OddGon::new(n)?)
}

impl Surface {
    pub fn new(gon: OddGon) -> Result<Self> {
        let n = gon.n();
        let m = gon.apex();
        let alpha = gon.alpha();
        // Right- and left-side points share their y sums, so mirrored
        // vertices have bit-identical heights.
        let mut sum_cos = vec![0.0; m + 1];
        let mut sum_sin = vec![0.0; m + 1];
        for k in 1..=m {
            let a = alpha * k as f64;
            sum_cos[k] = sum_cos[k - 1] + a.cos();
            sum_sin[k] = sum_sin[k - 1] + a.sin();
        }
        let mut upper = vec![Point::ORIGIN; n];
        for k in 0..=m {
            upper[k + 1] = Point::new(1.0 + sum_cos[k], sum_sin[k]);
        }
        for k in 1..m {
            upper[n - k] = Point::new(-sum_cos[k], sum_sin[k]);
        }
        let centre = upper[n - 1];
        let lower: Vec<Point> = upper.iter().map(|&v| centre - v).collect();
        let glue = (1..=n)
            .map(|k| centre - upper[k % n] - upper[k - 1])
            .collect();
        Ok(Surface { gon, upper, lower, glue })
    }

    pub fn gon(&self) -> OddGon {
        self.gon
    }

    pub fn n(&self) -> usize {
        self.gon.n()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.gon.alphabet()
    }

    pub fn vertices(&self, poly: Polygon) -> &[Point] {
        match poly {
            Polygon::Upper => &self.upper,
            Polygon::Lower => &self.lower,
        }
    }

    pub fn vertex(&self, poly: Polygon, index: usize) -> Point {
        self.vertices(poly)[index % self.n()]
    }

    /// Original edge `S_k` of `poly`, oriented counter-clockwise.
    pub fn edge_segment(&self, poly: Polygon, k: usize) -> Segment {
        Segment::new(self.vertex(poly, k - 1), self.vertex(poly, k))
    }

    /// Vertex index of the `level`-th point on `side`, counted from the
    /// horizontal edge.
    pub fn side_vertex_index(&self, poly: Polygon, side: Side, level: usize) -> usize {
        let n = self.n();
        let right_going = match (poly, side) {
            (Polygon::Upper, Side::Right) | (Polygon::Lower, Side::Left) => true,
            (Polygon::Upper, Side::Left) | (Polygon::Lower, Side::Right) => false,
        };
        if level == self.gon.apex() {
            return level + 1;
        }
        if right_going {
            level + 1
        } else {
            (n - level) % n
        }
    }

    pub fn side_point(&self, poly: Polygon, side: Side, level: usize) -> Point {
        self.vertex(poly, self.side_vertex_index(poly, side, level))
    }

    /// Height of the `level`-th horizontal line of `poly`.
    pub fn level_y(&self, poly: Polygon, level: usize) -> f64 {
        self.side_point(poly, Side::Right, level).y
    }

    /// Translation taking `poly`'s copy of `S_k` onto the other polygon's.
    pub fn gluing(&self, poly: Polygon, k: usize) -> Point {
        match poly {
            Polygon::Upper => self.glue[k - 1],
            Polygon::Lower => -self.glue[k - 1],
        }
    }

    /// Image of a point of edge `S_k` of `poly` on the identified edge.
    pub fn identify(&self, poly: Polygon, k: usize, p: Point) -> Point {
        p + self.gluing(poly, k)
    }

    pub fn centre(&self, poly: Polygon) -> Point {
        let vs = self.vertices(poly);
        let s = vs.iter().fold(Point::ORIGIN, |acc, &v| acc + v);
        s * (1.0 / vs.len() as f64)
    }

    /// Mirror in the polygon's vertical symmetry axis.
    pub fn mirror(&self, poly: Polygon, p: Point) -> Point {
        let axis2 = match poly {
            Polygon::Upper => 1.0,
            Polygon::Lower => 2.0 * self.lower[0].x - 1.0,
        };
        Point::new(axis2 - p.x, p.y)
    }

    /// Edges of `poly` crossed outward by direction `dir` (for a convex,
    /// counter-clockwise polygon these are the edges with `e × d < 0`).
    pub fn is_exit_edge(&self, poly: Polygon, k: usize, dir: Point) -> bool {
        self.edge_segment(poly, k).vector().cross(dir) < 0.0
    }

    /// Whether `p` lies in the closed polygon, with slack `eps`.
    pub fn contains(&self, poly: Polygon, p: Point, eps: f64) -> bool {
        (1..=self.n()).all(|k| {
            let s = self.edge_segment(poly, k);
            s.vector().cross(p - s.p0) >= -eps
        })
    }

    pub fn original_edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(2 * self.n());
        for poly in [Polygon::Upper, Polygon::Lower] {
            for k in 1..=self.n() {
                out.push(Edge {
                    letter: Letter::Side(k),
                    polygon: poly,
                    segment: self.edge_segment(poly, k),
                    kind: EdgeKind::Original,
                });
            }
        }
        out
    }

    /// Pairs `(upper S_k, lower S_k)` as indices into [`Surface::original_edges`].
    pub fn identifications(&self) -> Vec<(usize, usize)> {
        (0..self.n()).map(|i| (i, i + self.n())).collect()
    }

    /// Checks every structural invariant of the surface; returns the list of
    /// violations (empty when the surface is sound).
    pub fn validate(&self, tol: Tolerance) -> Vec<String> {
        let mut bad = Vec::new();
        let eps = tol.eps;
        let s1 = self.edge_segment(Polygon::Upper, 1);
        if !s1.p0.approx_eq(Point::ORIGIN, eps) || !s1.p1.approx_eq(Point::new(1.0, 0.0), eps) {
            bad.push("S1 of the upper polygon is not (0,0)-(1,0)".to_string());
        }
        if self.upper.iter().any(|v| v.y < -eps) {
            bad.push("upper polygon dips below y = 0".to_string());
        }
        for poly in [Polygon::Upper, Polygon::Lower] {
            for k in 1..=self.n() {
                let len = self.edge_segment(poly, k).length();
                if (len - 1.0).abs() > eps {
                    bad.push(format!("{} S{k} has length {len}", poly.name()));
                }
            }
        }
        for k in 1..=self.n() {
            let a = self.edge_segment(Polygon::Upper, k);
            let b = self.edge_segment(Polygon::Lower, k);
            if a.vector().cross(b.vector()).abs() > eps {
                bad.push(format!("S{k} copies are not parallel"));
            }
            // outward normals of a ccw polygon are the edge vectors turned clockwise
            let na = Point::new(a.vector().y, -a.vector().x);
            let nb = Point::new(b.vector().y, -b.vector().x);
            if na.dot(nb) >= 0.0 {
                bad.push(format!("S{k} copies do not have opposite normals"));
            }
            let moved = a.translate(self.gluing(Polygon::Upper, k));
            if !(moved.p0.approx_eq(b.p1, eps) && moved.p1.approx_eq(b.p0, eps)) {
                bad.push(format!("gluing of S{k} is not a translation onto its partner"));
            }
        }
        // P_L is the point reflection of P_U through the midpoint of S_n
        let mid = self.edge_segment(Polygon::Upper, self.n()).midpoint();
        for (u, l) in self.upper.iter().zip(&self.lower) {
            if !(mid * 2.0 - *u).approx_eq(*l, eps) {
                bad.push("lower polygon is not the half-turn of the upper polygon".to_string());
                break;
            }
        }
        bad
    }
}

/// The `n - 3` auxiliary diagonals of each polygon, at direction `0` or
/// `π/n`, labelled in order of distance from the polygon's horizontal edge
/// (ties broken by angle, `0` first).
pub fn auxiliary_edges(surface: &Surface) -> Vec<Edge> {
    let m = surface.gon().apex();
    let mut out = Vec::with_capacity(2 * (surface.n() - 3));
    for poly in [Polygon::Upper, Polygon::Lower] {
        let base_y = surface.level_y(poly, 0);
        let mut diagonals: Vec<Segment> = Vec::new();
        // the half-turn swaps which side the slanted diagonals start from
        let (lo, hi) = match poly {
            Polygon::Upper => (Side::Left, Side::Right),
            Polygon::Lower => (Side::Right, Side::Left),
        };
        for k in 1..m {
            diagonals.push(Segment::new(
                surface.side_point(poly, lo, k - 1),
                surface.side_point(poly, hi, k),
            ));
            diagonals.push(Segment::new(
                surface.side_point(poly, Side::Left, k),
                surface.side_point(poly, Side::Right, k),
            ));
        }
        // orient left to right for a stable presentation
        for d in diagonals.iter_mut() {
            if d.p0.x > d.p1.x {
                *d = d.reversed();
            }
        }
        diagonals.sort_by(|a, b| {
            let da = (a.midpoint().y - base_y).abs();
            let db = (b.midpoint().y - base_y).abs();
            da.total_cmp(&db).then(a.line_angle().total_cmp(&b.line_angle()))
        });
        for (i, seg) in diagonals.into_iter().enumerate() {
            out.push(Edge {
                letter: Letter::Aux(poly, i + 1),
                polygon: poly,
                segment: seg,
                kind: EdgeKind::Auxiliary,
            });
        }
    }
    out
}

/// JSON view of a surface, coordinates rounded to 12 significant digits.
#[derive(Serialize)]
pub struct SurfaceJson {
    pub n: usize,
    pub polygons: PolygonsJson,
    pub edges: Vec<EdgeJson>,
    pub identifications: Vec<[String; 2]>,
}

#[derive(Serialize)]
pub struct PolygonsJson {
    pub upper: Vec<[f64; 2]>,
    pub lower: Vec<[f64; 2]>,
}

#[derive(Serialize)]
pub struct EdgeJson {
    pub label: String,
    pub polygon: Polygon,
    pub kind: EdgeKind,
    pub p0: [f64; 2],
    pub p1: [f64; 2],
}

/// Rounds to 12 significant digits (and clears negative zero).
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn pt12(p: Point) -> [f64; 2] {
    [sig12(p.x), sig12(p.y)]
}

impl SurfaceJson {
    pub fn new(surface: &Surface, extra: &[Edge]) -> Self {
        let alphabet = Alphabet::new(surface.n());
        let label = |l: Letter| match l {
            Letter::Side(k) => format!("S{k}"),
            Letter::Primed(k) => format!("S{k}'"),
            other => alphabet.name(other),
        };
        let mut edges: Vec<EdgeJson> = surface
            .original_edges()
            .into_iter()
            .chain(extra.iter().copied())
            .map(|e| EdgeJson {
                label: label(e.letter),
                polygon: e.polygon,
                kind: e.kind,
                p0: pt12(e.segment.p0),
                p1: pt12(e.segment.p1),
            })
            .collect();
        edges.shrink_to_fit();
        SurfaceJson {
            n: surface.n(),
            polygons: PolygonsJson {
                upper: surface.vertices(Polygon::Upper).iter().map(|&p| pt12(p)).collect(),
                lower: surface.vertices(Polygon::Lower).iter().map(|&p| pt12(p)).collect(),
            },
            edges,
            identifications: (1..=surface.n())
                .map(|k| [format!("upper:S{k}"), format!("lower:S{k}")])
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_and_small() {
        for n in [0, 3, 4, 6, 8, 101] {
            assert_eq!(build_surface(n).unwrap_err(), Error::UnsupportedSurface(n));
        }
        assert!(build_surface(5).is_ok());
        assert!(build_surface(99).is_ok());
    }

    #[test]
    fn pentagon_right_side_points() {
        let s = build_surface(5).unwrap();
        let p0 = s.side_point(Polygon::Upper, Side::Right, 0);
        assert_eq!(p0, Point::new(1.0, 0.0));
        let p1 = s.side_point(Polygon::Upper, Side::Right, 1);
        assert!((p1.x - 1.309016994374947).abs() < 1e-12);
        assert!((p1.y - 0.951056516295154).abs() < 1e-12);
        let top_r = s.side_point(Polygon::Upper, Side::Right, 2);
        let top_l = s.side_point(Polygon::Upper, Side::Left, 2);
        assert_eq!(top_r, top_l);
        assert!((top_r.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invariants_hold_for_many_n() {
        for n in (5..=99).step_by(2) {
            let s = build_surface(n).unwrap();
            let bad = s.validate(Tolerance::default());
            assert!(bad.is_empty(), "n={n}: {bad:?}");
        }
    }

    #[test]
    fn mirrored_vertices_share_heights_exactly() {
        let s = build_surface(11).unwrap();
        for poly in [Polygon::Upper, Polygon::Lower] {
            for level in 0..=s.gon().apex() {
                let l = s.side_point(poly, Side::Left, level);
                let r = s.side_point(poly, Side::Right, level);
                assert_eq!(l.y.to_bits(), r.y.to_bits());
            }
        }
    }

    #[test]
    fn lower_polygon_has_horizontal_top() {
        let s = build_surface(7).unwrap();
        let top = s.edge_segment(Polygon::Lower, 1);
        assert!((top.p0.y - top.p1.y).abs() < 1e-15);
        assert!(s.vertices(Polygon::Lower).iter().all(|v| v.y <= top.p0.y + 1e-12));
    }

    #[test]
    fn auxiliary_counts_and_angles() {
        for (n, expect) in [(5, 2), (7, 4), (9, 6)] {
            let s = build_surface(n).unwrap();
            let aux = auxiliary_edges(&s);
            for poly in [Polygon::Upper, Polygon::Lower] {
                let mine: Vec<_> = aux.iter().filter(|e| e.polygon == poly).collect();
                assert_eq!(mine.len(), expect, "n={n}");
                for e in mine {
                    let a = e.segment.line_angle();
                    let ok = a.abs() < 1e-9 || (a - PI / n as f64).abs() < 1e-9;
                    assert!(ok, "n={n} angle {a}");
                    // a diagonal joins two vertices and is not an edge
                    let vs = s.vertices(poly);
                    assert!(vs.iter().any(|v| v.approx_eq(e.segment.p0, 1e-12)));
                    assert!(vs.iter().any(|v| v.approx_eq(e.segment.p1, 1e-12)));
                    assert!(e.segment.length() > 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn horizontal_bars_take_even_labels() {
        let s = build_surface(9).unwrap();
        for e in auxiliary_edges(&s) {
            let Letter::Aux(_, i) = e.letter else { unreachable!() };
            let horizontal = e.segment.line_angle().abs() < 1e-9;
            assert_eq!(horizontal, i % 2 == 0);
        }
    }

    #[test]
    fn sig12_rounding() {
        assert_eq!(sig12(0.309_016_994_374_947_45), 0.309016994375);
        assert_eq!(sig12(-0.0), 0.0);
        assert_eq!(sig12(1.0), 1.0);
    }
}
