//! The vertex generator guide, built by gluing translated polygon copies edge
//! to edge ("snaking"), and the check that `M_n` sends every vertex onto it.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::Point;
use crate::surface::{OddGon, Polygon, Side, Surface};
use crate::veech::{veech_shear, PointFamily};

/// A translated copy of `P_U` or `P_L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlacedPolygon {
    pub kind: Polygon,
    pub offset: Point,
}

impl PlacedPolygon {
    pub fn vertex(&self, surface: &Surface, index: usize) -> Point {
        surface.vertex(self.kind, index) + self.offset
    }

    /// Glues a copy of the other polygon along this copy's `S_k`. Partner
    /// edges run in opposite directions, so the copy's `S_k` ends where ours
    /// starts.
    pub fn glue(&self, surface: &Surface, k: usize) -> PlacedPolygon {
        let kind = self.kind.other();
        let offset = self.vertex(surface, k - 1) - surface.vertex(kind, k);
        PlacedPolygon { kind, offset }
    }

    pub fn side_point(&self, surface: &Surface, side: Side, level: usize) -> Point {
        surface.side_point(self.kind, side, level) + self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideGuide {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexGuide {
    pub n: usize,
    pub upper: SideGuide,
    pub lower: SideGuide,
    /// Every copy placed while snaking, in construction order.
    pub copies: Vec<PlacedPolygon>,
    /// Largest vertical offset of a copy whose bar was used (should be 0).
    pub max_row_drift: f64,
}

impl VertexGuide {
    pub fn x(&self, family: PointFamily, level: usize) -> f64 {
        let g = match family.polygon() {
            Polygon::Upper => &self.upper,
            Polygon::Lower => &self.lower,
        };
        match family.side() {
            Side::Left => g.left[level],
            Side::Right => g.right[level],
        }
    }
}

pub fn build_vertex_guide(n: usize) -> Result<VertexGuide> {
    let surface = Surface::new(OddGon::new(n)?)?;
    Ok(guide_for(&surface))
}

pub fn guide_for(s: &Surface) -> VertexGuide {
    let n = s.n();
    let m = s.gon().apex();
    let base_u = PlacedPolygon { kind: Polygon::Upper, offset: Point::ORIGIN };
    let base_l = PlacedPolygon { kind: Polygon::Lower, offset: Point::ORIGIN };
    let mut copies = Vec::new();

    // images of P_U: level j of the guide comes from P_U^(2j)
    let mut upper_src = vec![base_u];
    let mut first_lower = None;
    let mut cur = base_u;
    for k in 2..=m + 1 {
        let l = cur.glue(s, k);
        first_lower.get_or_insert(l);
        cur = l.glue(s, n + 2 - k);
        copies.extend([l, cur]);
        upper_src.push(cur);
    }

    // images of P_L: its top edge rides on the first P_L copy above, bar 1 is
    // fixed, and level j >= 2 comes from P_L^(2j)
    let mut lower_src = vec![first_lower.expect("n >= 5 has at least one step"), base_l];
    let mut cur = base_l;
    for k in 3..=m + 1 {
        let u = cur.glue(s, k);
        cur = u.glue(s, n + 2 - k);
        copies.extend([u, cur]);
        lower_src.push(cur);
    }

    let mut drift: f64 = 0.0;
    let mut side_guide = |srcs: &[PlacedPolygon], poly: Polygon| {
        let mut g = SideGuide { left: vec![0.0; m + 1], right: vec![0.0; m + 1] };
        for (level, src) in srcs.iter().enumerate() {
            for side in [Side::Left, Side::Right] {
                let p = src.side_point(s, side, level);
                drift = drift.max((p.y - s.level_y(poly, level)).abs());
                match side {
                    Side::Left => g.left[level] = p.x,
                    Side::Right => g.right[level] = p.x,
                }
            }
        }
        g
    };
    let upper = side_guide(&upper_src, Polygon::Upper);
    let lower = side_guide(&lower_src, Polygon::Lower);
    VertexGuide { n, upper, lower, copies, max_row_drift: drift }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexResidual {
    pub vertex: String,
    pub guide: [f64; 2],
    pub sheared: [f64; 2],
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReassemblyReport {
    pub n: usize,
    pub pass: bool,
    pub max_residual: f64,
    pub worst_vertex: String,
    pub y_bit_identical: bool,
    pub max_row_drift: f64,
    pub vertices: Vec<VertexResidual>,
}

/// Compares every vertex's guide point with `M_n` applied to the vertex.
/// `reference` optionally replaces the double-precision product with a
/// higher-precision one.
pub fn verify_reassembly_with(
    n: usize,
    tol: f64,
    reference: Option<&dyn Fn(PointFamily, usize) -> f64>,
) -> Result<ReassemblyReport> {
    let s = Surface::new(OddGon::new(n)?)?;
    let m = veech_shear(n)?;
    let guide = guide_for(&s);
    let mut vertices = Vec::new();
    let mut y_ok = true;
    for fam in PointFamily::ALL {
        for level in 0..=s.gon().apex() {
            let v = s.side_point(fam.polygon(), fam.side(), level);
            let image = m.apply(v);
            let target_x = match reference {
                Some(f) => f(fam, level),
                None => image.x,
            };
            let gx = guide.x(fam, level);
            let gy = s.level_y(fam.polygon(), level);
            y_ok &= gy.to_bits() == image.y.to_bits() || (gy == 0.0 && image.y == 0.0);
            vertices.push(VertexResidual {
                vertex: format!("{}{}", fam.short(), level),
                guide: [gx, gy],
                sheared: [target_x, image.y],
                residual: (gx - target_x).abs(),
            });
        }
    }
    let worst = vertices
        .iter()
        .max_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least one vertex");
    let max_residual = worst.residual;
    Ok(ReassemblyReport {
        n,
        pass: max_residual < tol && y_ok && guide.max_row_drift < tol,
        max_residual,
        worst_vertex: worst.vertex.clone(),
        y_bit_identical: y_ok,
        max_row_drift: guide.max_row_drift,
        vertices,
    })
}

pub fn verify_reassembly(n: usize, tol: f64) -> Result<ReassemblyReport> {
    verify_reassembly_with(n, tol, None)
}
