//! Horizontal cylinder decomposition of the double odd-gon, the affine twist
//! that realises `M_n` on each cylinder, and the primed edges `S_k'`.
//!
//! Cylinder `k` (1-based) is strip `k` of `P_U` (between levels `k-1` and `k`)
//! together with strip `k` of `P_L`, glued along `S_{k+1}`. Translating the
//! `P_L` part by `τ_k` lays it to the right of the `P_U` part, giving a
//! parallelogram. Inside it we use coordinates `(u, h)`: `h` is the height
//! above the bottom and `u` the horizontal offset from the left side.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Point, Segment};
use crate::letter::Letter;
use crate::surface::{Edge, EdgeKind, Polygon, Side, Surface};
use crate::veech::shear_modulus;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cylinder {
    pub index: usize,
    pub width: f64,
    pub height: f64,
    pub modulus: f64,
    /// Vertical extent of the `P_U` part.
    pub y_range: (f64, f64),
    /// Vertical extent of the `P_L` part, in `P_L` coordinates.
    pub lower_y_range: (f64, f64),
    #[serde(skip)]
    corner: Point,
    #[serde(skip)]
    left_slope: f64,
    #[serde(skip)]
    split: (f64, f64),
    #[serde(skip)]
    lower_shift: Point,
}

/// Length of the intersection of a horizontal line with a convex polygon.
fn horizontal_chord(vertices: &[Point], y: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        if (a.y - y) * (b.y - y) <= 0.0 && a.y != b.y {
            let x = a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

pub fn decompose_cylinders(surface: &Surface) -> Vec<Cylinder> {
    let m = surface.gon().apex();
    (1..=m).map(|k| Cylinder::new(surface, k)).collect()
}

impl Cylinder {
    fn new(surface: &Surface, k: usize) -> Cylinder {
        let (u, l) = (Polygon::Upper, Polygon::Lower);
        let y0 = surface.level_y(u, k - 1);
        let y1 = surface.level_y(u, k);
        let ly = (surface.level_y(l, k), surface.level_y(l, k - 1));
        // widths measured as mid-height chords of the two trapezoids
        let width = horizontal_chord(surface.vertices(u), 0.5 * (y0 + y1))
            + horizontal_chord(surface.vertices(l), 0.5 * (ly.0 + ly.1));
        let height = y1 - y0;
        let corner = surface.side_point(u, Side::Left, k - 1);
        let left_top = surface.side_point(u, Side::Left, k);
        let left_slope = (left_top.x - corner.x) / height;
        let sb = surface.side_point(u, Side::Right, k - 1).x - corner.x;
        let st = surface.side_point(u, Side::Right, k).x - left_top.x;
        Cylinder {
            index: k,
            width,
            height,
            modulus: width / height,
            y_range: (y0, y1),
            lower_y_range: ly,
            corner,
            left_slope,
            split: (sb, st),
            lower_shift: surface.gluing(l, k + 1),
        }
    }

    fn x_left(&self, h: f64) -> f64 {
        self.corner.x + self.left_slope * h
    }

    /// `u`-coordinate of the glued edge `S_{k+1}` at height `h`.
    pub fn split_at(&self, h: f64) -> f64 {
        self.split.0 + (self.split.1 - self.split.0) * h / self.height
    }

    /// Whether `p` lies strictly inside this cylinder's part of `poly`
    /// (heights only; bars are excluded by `eps`).
    pub fn holds(&self, poly: Polygon, p: Point, eps: f64) -> bool {
        let (lo, hi) = match poly {
            Polygon::Upper => self.y_range,
            Polygon::Lower => self.lower_y_range,
        };
        p.y > lo + eps && p.y < hi - eps
    }

    /// Parallelogram coordinates `(u, h)` of a point of `poly`.
    pub fn to_frame(&self, poly: Polygon, p: Point) -> (f64, f64) {
        let q = match poly {
            Polygon::Upper => p,
            Polygon::Lower => p + self.lower_shift,
        };
        let h = q.y - self.corner.y;
        (q.x - self.x_left(h), h)
    }

    /// Inverse of [`Cylinder::to_frame`]; `u` is reduced modulo the width.
    pub fn from_frame(&self, u: f64, h: f64) -> (Polygon, Point) {
        let u = u.rem_euclid(self.width);
        let q = Point::new(self.x_left(h) + u, self.corner.y + h);
        if u <= self.split_at(h) {
            (Polygon::Upper, q)
        } else {
            (Polygon::Lower, q - self.lower_shift)
        }
    }

    /// Places a point of the developed strip (with `u` not reduced) using the
    /// sheet `⌊u / W⌋` chosen by the caller, so that the endpoints of one piece
    /// land in the same polygon copy.
    fn place(&self, sheet: f64, poly: Polygon, u: f64, h: f64) -> Point {
        let q = Point::new(self.x_left(h) + u - sheet * self.width, self.corner.y + h);
        match poly {
            Polygon::Upper => q,
            Polygon::Lower => q - self.lower_shift,
        }
    }
}

/// The cylinder holding `p` strictly between two bars of `poly`.
pub fn cylinder_of(cyls: &[Cylinder], poly: Polygon, p: Point, eps: f64) -> Option<&Cylinder> {
    cyls.iter().find(|c| c.holds(poly, p, eps))
}

/// The affine automorphism with derivative `M_n`: on each cylinder
/// `(u, h) -> (u + μh mod W, h)`; the bars are fixed pointwise.
pub fn twist(surface: &Surface, cyls: &[Cylinder], poly: Polygon, p: Point, sign: f64) -> (Polygon, Point) {
    let mu = shear_modulus(surface.n());
    match cylinder_of(cyls, poly, p, 0.0) {
        Some(c) => {
            let (u, h) = c.to_frame(poly, p);
            c.from_frame(u + sign * mu * h, h)
        }
        None => (poly, p),
    }
}

/// `Φ = φ ∘ F`: mirror each polygon in its vertical axis, then twist. Its
/// derivative is `M_n · diag(-1, 1)` and it is an involution.
pub fn reflecting_shear(surface: &Surface, cyls: &[Cylinder], poly: Polygon, p: Point) -> (Polygon, Point) {
    twist(surface, cyls, poly, surface.mirror(poly, p), 1.0)
}

/// `S_k'`: the image of `S_k` under the reflecting shear, cut into pieces that
/// each lie in one of the standard polygons.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimedEdge {
    pub label: usize,
    pub pieces: Vec<(Polygon, Segment)>,
    /// Original edge the image coincides with (`S_1`, and the edge parallel to
    /// the sector boundary).
    pub coincides_with: Option<usize>,
}

pub fn primed_edges(surface: &Surface) -> Result<Vec<PrimedEdge>> {
    let cyls = decompose_cylinders(surface);
    let gon = surface.gon();
    let mu = shear_modulus(surface.n());
    let eps = 1e-9;
    let mut out = Vec::with_capacity(surface.n());
    for k in 1..=surface.n() {
        let j = gon.flip_label(k);
        let src = surface.edge_segment(Polygon::Upper, j);
        let pieces = match cylinder_of(&cyls, Polygon::Upper, src.midpoint(), eps) {
            None => vec![(Polygon::Upper, src)],
            Some(c) => develop(c, mu, &src),
        };
        let pieces: Vec<_> = pieces.into_iter().filter(|(_, s)| s.length() > eps).collect();
        let coincides_with = pieces.iter().find_map(|(poly, piece)| {
            (1..=surface.n()).find(|&e| surface.edge_segment(*poly, e).overlaps(piece, eps))
        });
        out.push(PrimedEdge { label: k, pieces, coincides_with });
    }
    Ok(out)
}

/// Image under the twist of an edge spanning cylinder `c` from bottom to top,
/// cut wherever it meets the parallelogram sides or the glued edge.
fn develop(c: &Cylinder, mu: f64, src: &Segment) -> Vec<(Polygon, Segment)> {
    let (bot, top) = if src.p0.y < src.p1.y { (src.p0, src.p1) } else { (src.p1, src.p0) };
    let (u0, _) = c.to_frame(Polygon::Upper, bot);
    let (u1, _) = c.to_frame(Polygon::Upper, top);
    let w = c.width;
    let hh = c.height;
    let (a, b) = (u0, u1 + mu * hh);
    let du = b - a;
    let ds = c.split.1 - c.split.0;
    let mut cuts = vec![0.0, 1.0];
    let lo = (a.min(b) / w).floor() as i64 - 1;
    let hi = (a.max(b) / w).ceil() as i64 + 1;
    for sheet in lo..=hi {
        let sw = sheet as f64 * w;
        if du.abs() > 1e-12 {
            cuts.push((sw - a) / du);
        }
        if (du - ds).abs() > 1e-12 {
            cuts.push((c.split.0 + sw - a) / (du - ds));
        }
    }
    cuts.retain(|s| (0.0..=1.0).contains(s));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let mut pieces = Vec::new();
    for win in cuts.windows(2) {
        let (s0, s1) = (win[0], win[1]);
        let sm = 0.5 * (s0 + s1);
        let um = a + sm * du;
        let hm = sm * hh;
        let sheet = (um / w).floor();
        let local = um - sheet * w;
        let poly = if local <= c.split_at(hm) { Polygon::Upper } else { Polygon::Lower };
        let p = |s: f64| c.place(sheet, poly, a + s * du, s * hh);
        pieces.push((poly, Segment::new(p(s0), p(s1))));
    }
    pieces
}

/// The primed pieces as surface edges (one [`Edge`] per piece).
pub fn primed_edge_list(surface: &Surface) -> Result<Vec<Edge>> {
    Ok(primed_edges(surface)?
        .into_iter()
        .flat_map(|pe| {
            pe.pieces.into_iter().map(move |(polygon, segment)| Edge {
                letter: Letter::Primed(pe.label),
                polygon,
                segment,
                kind: EdgeKind::Primed,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::proper_crossing;
    use crate::surface::build_surface;

    #[test]
    fn pentagon_cylinders() {
        let s = build_surface(5).unwrap();
        let cyls = decompose_cylinders(&s);
        assert_eq!(cyls.len(), 2);
        // 2(1 + cos 72°), sin 72°, 2cot 36° from a 30-digit evaluation
        assert!((cyls[0].width - 2.618033988749895).abs() < 1e-12);
        assert!((cyls[0].height - 0.9510565162951535).abs() < 1e-12);
        assert!((cyls[0].modulus - 2.752763840942347).abs() < 1e-12);
    }

    #[test]
    fn moduli_agree() {
        for n in (5..=21).step_by(2) {
            let s = build_surface(n).unwrap();
            for c in decompose_cylinders(&s) {
                assert!((c.modulus - shear_modulus(n)).abs() < 1e-10, "n={n} k={}", c.index);
            }
        }
        let s = build_surface(7).unwrap();
        for c in decompose_cylinders(&s) {
            assert!((c.modulus - 4.153042793144673).abs() < 1e-10);
        }
    }

    #[test]
    fn frame_round_trip() {
        let s = build_surface(9).unwrap();
        let cyls = decompose_cylinders(&s);
        for c in &cyls {
            for poly in [Polygon::Upper, Polygon::Lower] {
                let (lo, hi) = match poly {
                    Polygon::Upper => c.y_range,
                    Polygon::Lower => c.lower_y_range,
                };
                let y = lo + 0.37 * (hi - lo);
                let verts = s.vertices(poly);
                let xs: Vec<f64> = (0..verts.len())
                    .filter_map(|i| {
                        let a = verts[i];
                        let b = verts[(i + 1) % verts.len()];
                        ((a.y - y) * (b.y - y) < 0.0).then(|| a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y))
                    })
                    .collect();
                let x = 0.3 * xs[0] + 0.7 * xs[1];
                let p = Point::new(x, y);
                let (u, h) = c.to_frame(poly, p);
                let (q, back) = c.from_frame(u, h);
                assert_eq!(q, poly);
                assert!(back.approx_eq(p, 1e-12));
            }
        }
    }

    #[test]
    fn reflecting_shear_is_an_involution() {
        let s = build_surface(7).unwrap();
        let cyls = decompose_cylinders(&s);
        let mut seen = 0;
        for poly in [Polygon::Upper, Polygon::Lower] {
            let centre = s.centre(poly);
            for i in 0..40 {
                let p = centre + Point::polar(i as f64 * 0.77) * (0.02 * i as f64);
                if !s.contains(poly, p, -1e-6) {
                    continue;
                }
                let (q1, p1) = reflecting_shear(&s, &cyls, poly, p);
                let (q2, p2) = reflecting_shear(&s, &cyls, q1, p1);
                assert_eq!(q2, poly);
                assert!(p2.approx_eq(p, 1e-9), "{p} -> {p2}");
                seen += 1;
            }
        }
        assert!(seen > 30);
    }

    #[test]
    fn horizontal_and_sector_edges_are_fixed() {
        for n in [5, 7, 9] {
            let s = build_surface(n).unwrap();
            let pe = primed_edges(&s).unwrap();
            assert_eq!(pe[0].coincides_with, Some(1));
            let sector = s.gon().sector_edge();
            assert_eq!(pe[sector - 1].coincides_with, Some(sector));
            let fixed = pe.iter().filter(|p| p.coincides_with.is_some()).count();
            assert_eq!(fixed, 2, "n={n}");
        }
    }

    #[test]
    fn primed_edges_cut_their_originals() {
        for n in [5, 7, 9, 11] {
            let s = build_surface(n).unwrap();
            for pe in primed_edges(&s).unwrap() {
                let total: f64 = pe.pieces.iter().map(|(_, p)| p.length()).sum();
                assert!(total > 1.0 - 1e-9);
                if pe.coincides_with.is_some() {
                    continue;
                }
                // a piece ends in the interior of S_k and the edge continues
                // into the other polygon from the identified point
                let mut found = false;
                for poly in [Polygon::Upper, Polygon::Lower] {
                    let e = s.edge_segment(poly, pe.label);
                    for (q, piece) in &pe.pieces {
                        if *q != poly {
                            continue;
                        }
                        for end in [piece.p0, piece.p1] {
                            if e.distance_to(end) < 1e-9
                                && end.dist(e.p0) > 1e-6
                                && end.dist(e.p1) > 1e-6
                            {
                                let twin = s.identify(poly, pe.label, end);
                                found |= pe.pieces.iter().any(|(r, other)| {
                                    *r == poly.other()
                                        && (other.p0.approx_eq(twin, 1e-9) || other.p1.approx_eq(twin, 1e-9))
                                });
                            }
                        }
                    }
                }
                assert!(found, "n={n} S{}'", pe.label);
            }
        }
    }

    #[test]
    fn pieces_stay_inside_their_polygons() {
        let s = build_surface(9).unwrap();
        for pe in primed_edges(&s).unwrap() {
            for (poly, seg) in pe.pieces {
                assert!(s.contains(poly, seg.p0, 1e-9) && s.contains(poly, seg.p1, 1e-9));
                // no piece crosses an original edge transversally
                for k in 1..=s.n() {
                    assert!(proper_crossing(&seg, &s.edge_segment(poly, k), 1e-9).is_none());
                }
            }
        }
    }
}
