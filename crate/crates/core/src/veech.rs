//! The parabolic Veech element `M_n`, the orientation-reversing generator and
//! the closed-form x-coordinates of sheared vertices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::surface::{OddGon, Polygon, Side};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ShearMatrix {
    pub const IDENTITY: ShearMatrix = ShearMatrix { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    /// Horizontal flip `diag(-1, 1)`.
    pub const FLIP: ShearMatrix = ShearMatrix { a: -1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.a * p.x + self.b * p.y, self.c * p.x + self.d * p.y)
    }

    pub fn mul(&self, o: &ShearMatrix) -> ShearMatrix {
        ShearMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> ShearMatrix {
        let det = self.det();
        ShearMatrix { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }

    pub fn approx_eq(&self, o: &ShearMatrix, eps: f64) -> bool {
        (self.a - o.a).abs() <= eps
            && (self.b - o.b).abs() <= eps
            && (self.c - o.c).abs() <= eps
            && (self.d - o.d).abs() <= eps
    }
}

/// `2·cot(π/n)`, the common modulus of the horizontal cylinders.
pub fn shear_modulus(n: usize) -> f64 {
    let h = std::f64::consts::PI / n as f64;
    2.0 * h.cos() / h.sin()
}

/// `M_n = (1, 2cot(π/n); 0, 1)`.
pub fn veech_shear(n: usize) -> Result<ShearMatrix> {
    OddGon::new(n)?;
    Ok(ShearMatrix { a: 1.0, b: shear_modulus(n), c: 0.0, d: 1.0 })
}

/// `diag(-1, 1)·M_n`.
pub fn veech_generator(n: usize) -> Result<ShearMatrix> {
    Ok(ShearMatrix::FLIP.mul(&veech_shear(n)?))
}

/// Which side of which polygon a vertex sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointFamily {
    UpperRight,
    UpperLeft,
    LowerRight,
    LowerLeft,
}

impl PointFamily {
    pub const ALL: [PointFamily; 4] =
        [PointFamily::UpperRight, PointFamily::UpperLeft, PointFamily::LowerRight, PointFamily::LowerLeft];

    pub fn polygon(self) -> Polygon {
        match self {
            PointFamily::UpperRight | PointFamily::UpperLeft => Polygon::Upper,
            PointFamily::LowerRight | PointFamily::LowerLeft => Polygon::Lower,
        }
    }

    pub fn side(self) -> Side {
        match self {
            PointFamily::UpperRight | PointFamily::LowerRight => Side::Right,
            PointFamily::UpperLeft | PointFamily::LowerLeft => Side::Left,
        }
    }

    pub fn of(polygon: Polygon, side: Side) -> PointFamily {
        match (polygon, side) {
            (Polygon::Upper, Side::Right) => PointFamily::UpperRight,
            (Polygon::Upper, Side::Left) => PointFamily::UpperLeft,
            (Polygon::Lower, Side::Right) => PointFamily::LowerRight,
            (Polygon::Lower, Side::Left) => PointFamily::LowerLeft,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            PointFamily::UpperRight => "upper:R",
            PointFamily::UpperLeft => "upper:L",
            PointFamily::LowerRight => "lower:R",
            PointFamily::LowerLeft => "lower:L",
        }
    }
}

/// Closed-form x-coordinate of the `k`-th vertex of `family` after the shear
/// `M_n`:
///
/// * upper right: `2k+1 + Σ (4(k-i)+3) cos iα`
/// * upper left:  `2k + Σ (4(k-i)+1) cos iα`
/// * lower right: `2-2k + cos α - Σ (4(k-i)+1) cos iα`
/// * lower left:  `1-2k + cos α - Σ (4(k-i)+3) cos iα`
///
/// with `α = 2π/n` and sums over `i = 1..k`.
pub fn sheared_x(family: PointFamily, n: usize, k: usize) -> Result<f64> {
    let gon = OddGon::new(n)?;
    let max = gon.apex();
    if k > max {
        return Err(Error::IndexOutOfRange { index: k, max });
    }
    let alpha = gon.alpha();
    let weighted = |c: usize| -> f64 {
        (1..=k).map(|i| (4 * (k - i) + c) as f64 * (i as f64 * alpha).cos()).sum()
    };
    let kf = k as f64;
    Ok(match family {
        PointFamily::UpperRight => 2.0 * kf + 1.0 + weighted(3),
        PointFamily::UpperLeft => 2.0 * kf + weighted(1),
        PointFamily::LowerRight => 2.0 - 2.0 * kf + alpha.cos() - weighted(1),
        PointFamily::LowerLeft => 1.0 - 2.0 * kf + alpha.cos() - weighted(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_surface;

    #[test]
    fn shear_entries() {
        let m = veech_shear(5).unwrap();
        assert!((m.b - 2.752763840942347).abs() < 1e-12);
        assert_eq!((m.a, m.c, m.d), (1.0, 0.0, 1.0));
        let m9 = veech_shear(9).unwrap();
        assert!((m9.b - 5.494954838909245).abs() < 1e-12);
        assert!(veech_shear(6).is_err());
    }

    #[test]
    fn generator_is_an_involution() {
        for n in [5, 7, 9, 21] {
            let g = veech_generator(n).unwrap();
            assert!(g.mul(&g).approx_eq(&ShearMatrix::IDENTITY, 1e-12));
            assert!((g.det() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_twice_keeps_heights() {
        let s = build_surface(5).unwrap();
        let g = veech_generator(5).unwrap();
        for poly in [Polygon::Upper, Polygon::Lower] {
            for &v in s.vertices(poly) {
                let w = g.apply(g.apply(v));
                assert_eq!(w.y, v.y);
                assert!((w.x - v.x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pentagon_upper_right_values() {
        assert_eq!(sheared_x(PointFamily::UpperRight, 5, 0).unwrap(), 1.0);
        assert!((sheared_x(PointFamily::UpperRight, 5, 1).unwrap() - 3.927050983124842).abs() < 1e-12);
        assert!((sheared_x(PointFamily::UpperRight, 5, 2).unwrap() - 4.736_067_977_499_79).abs() < 1e-12);
        assert!((sheared_x(PointFamily::UpperLeft, 5, 1).unwrap() - 2.309016994374947).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_matrix_application() {
        for n in (5..=21).step_by(2) {
            let s = build_surface(n).unwrap();
            let m = veech_shear(n).unwrap();
            for fam in PointFamily::ALL {
                for k in 0..=s.gon().apex() {
                    let v = s.side_point(fam.polygon(), fam.side(), k);
                    let direct = m.apply(v).x;
                    let closed = sheared_x(fam, n, k).unwrap();
                    assert!((direct - closed).abs() < 1e-9, "n={n} {fam:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn out_of_range_level() {
        assert_eq!(
            sheared_x(PointFamily::UpperLeft, 5, 3).unwrap_err(),
            Error::IndexOutOfRange { index: 3, max: 2 }
        );
    }
}
